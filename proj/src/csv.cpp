#include "bandgapsim/csv.hpp"

#include <charconv>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <sstream>

#include "bandgapsim/errors.hpp"

namespace bgs::csv {

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return fmt::format("{:.17g}", v);
}

std::string num(long long v) { return std::to_string(v); }

std::size_t Table::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw SchemaError("csv", "missing column '" + name + "'");
}

void write(const std::filesystem::path& path, const Table& table) {
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("csv", "cannot open " + tmp.string() + " for writing");
        auto line = [&](const std::vector<std::string>& fields) {
            for (std::size_t i = 0; i < fields.size(); ++i) {
                if (i) out << ',';
                out << fields[i];
            }
            out << '\n';
        };
        line(table.header);
        for (const auto& r : table.rows) {
            if (r.size() != table.header.size()) throw InvalidArgument("csv", "row width differs from header");
            line(r);
        }
        out.flush();
        if (!out) throw IoError("csv", "write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("csv", "cannot move " + tmp.string() + " into place: " + ec.message());
}

Table read(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("csv", "cannot open " + path.string());
    Table t;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ',')) fields.push_back(f);
        if (line.back() == ',') fields.emplace_back();
        if (first) {
            t.header = std::move(fields);
            first = false;
        } else {
            if (fields.size() != t.header.size())
                throw SchemaError("csv", path.string() + ": row width differs from header");
            t.rows.push_back(std::move(fields));
        }
    }
    if (first) throw SchemaError("csv", path.string() + " is empty");
    return t;
}

double parse_double(const std::string& field) {
    if (field == "nan") return std::nan("");
    if (field == "inf") return INFINITY;
    if (field == "-inf") return -INFINITY;
    double v = 0.0;
    const auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || p != field.data() + field.size()) throw SchemaError("csv", "not a number: '" + field + "'");
    return v;
}

long long parse_int(const std::string& field) {
    long long v = 0;
    const auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || p != field.data() + field.size()) throw SchemaError("csv", "not an integer: '" + field + "'");
    return v;
}

}  // namespace bgs::csv
