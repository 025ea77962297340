#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace bgs::csv {

// Round-trip exact: 17 significant digits, "nan"/"inf"/"-inf" for specials.
std::string num(double v);
std::string num(long long v);

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    // Column index by name; SchemaError if absent.
    std::size_t column(const std::string& name) const;
};

// Plain comma-separated text, no quoting (fields never contain commas here).
// Writes via a temporary file renamed into place. IoError on failure.
void write(const std::filesystem::path& path, const Table& table);
Table read(const std::filesystem::path& path);

double parse_double(const std::string& field);
long long parse_int(const std::string& field);

}  // namespace bgs::csv
