#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <sys/wait.h>

#include "bandgapsim/config.hpp"
#include "bandgapsim/csv.hpp"
#include "bandgapsim/errors.hpp"
#include "bandgapsim/pipelines.hpp"
#include "bandgapsim/units.hpp"
#include "json.hpp"

using namespace bgs;
namespace fs = std::filesystem;
using doctest::Approx;

namespace {

const fs::path kSource = BANDGAPSIM_SOURCE_DIR;

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("bgs_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

struct CliResult {
    int code = -1;
    std::string output;  // stdout and stderr
};

CliResult cli(const std::string& args, const fs::path& work) {
    const fs::path log = work / "cli.log";
    const std::string cmd = std::string(BANDGAPSIM_EXE) + " " + args + " > '" + log.string() + "' 2>&1";
    const int status = std::system(cmd.c_str());
    CliResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    r.output = ss.str();
    fs::remove(log);
    return r;
}

fs::path write_file(const fs::path& p, const std::string& text) {
    std::ofstream(p) << text;
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

std::set<std::string> listing(const fs::path& dir) {
    std::set<std::string> out;
    for (const auto& e : fs::directory_iterator(dir)) out.insert(e.path().filename().string());
    return out;
}

const char* kHardcore = R"({
  "device": {"bose_hubbard": {"n_sites": 6, "max_occupancy": 1, "J_profile": {"nn_MHz": 4.0, "xi": 2.0}}},
  "quench": {"z_init": ["110100", "011010", "100101"], "times_ns": [76, 148, 260, 420], "shots": 2000},
  "learn": {"dataset": "DATASET", "start": "all_positive", "greedy": {"rounds": 1, "grid_points": 3, "line_iterations": 4},
            "profiles": {"params": ["J_2_3"], "points": 5}},
  "seed": 11
})";

}  // namespace

TEST_CASE("csv numbers round-trip at 17 significant digits") {
    std::mt19937_64 gen(4);
    std::uniform_real_distribution<double> u(-30.0, 30.0);
    for (int i = 0; i < 2000; ++i) {
        const double x = std::ldexp(u(gen), static_cast<int>(u(gen)));
        CHECK(csv::parse_double(csv::num(x)) == x);
    }
    CHECK(std::isnan(csv::parse_double(csv::num(std::nan("")))));
    CHECK(csv::parse_double(csv::num(-INFINITY)) == -INFINITY);
    CHECK_THROWS_AS(csv::parse_double("1.0x"), SchemaError);
    CHECK_THROWS_AS(csv::parse_int("2.5"), SchemaError);
}

TEST_CASE("helpers") {
    CHECK(sha1_hex("abc") == "a9993e364706816aba3e25717850c26c9cd0d89d");
    CHECK(sha1_hex("") == "da39a3ee5e6b4b0d3255bfef95601890afd80709");
    CHECK(bitstring(0b0000110000, 10) == "0000110000");
    CHECK(bitstring(1, 3) == "001");
    CHECK(substream(7, 1) != substream(7, 2));
    CHECK(substream(7, 1) == substream(7, 1));
}

TEST_CASE("config parsing") {
    SUBCASE("every shipped config is valid") {
        for (const auto& e : fs::directory_iterator(kSource / "configs")) {
            CAPTURE(e.path().string());
            const ParsedConfig p = parse_config_file(e.path());
            for (const auto& d : p.diagnostics) CAPTURE(to_string(d));
            CHECK(p.ok());
            CHECK(p.diagnostics.empty());
        }
    }
    SUBCASE("built-in reproduce documents match the shipped copies") {
        for (const char* t : {"fig2", "fig3", "fig4", "purcell"}) {
            CAPTURE(t);
            CHECK(load_config_text(builtin_config(t)).canonical ==
                  load_config(kSource / "configs" / (std::string(t) + ".json")).canonical);
        }
        CHECK_THROWS_AS(builtin_config("fig5"), SchemaError);
    }
    SUBCASE("units and profiles") {
        const RunConfig c = load_config_text(R"({"device": {"bose_hubbard": {"n_sites": 4, "max_occupancy": 2,
            "U_MHz": -200, "eps_MHz": [0, 1, 2, 3], "J_profile": {"nn_MHz": 4.0, "xi": 2.0}}}})");
        const auto& p = *c.bose_hubbard;
        CHECK(p.U(2) == Approx(units::mhz_to_radns(-200)));
        CHECK(p.eps(3) == Approx(units::mhz_to_radns(3)));
        CHECK(p.J(0, 1) == Approx(units::mhz_to_radns(4.0)));
        CHECK(p.J(0, 2) == Approx(-units::mhz_to_radns(4.0) * std::exp(-0.5)));
        CHECK(p.J(3, 0) == Approx(units::mhz_to_radns(4.0) * std::exp(-1.0)));
    }
    SUBCASE("grids") {
        const RunConfig c = load_config_text(R"({"device": {"bose_hubbard": {"n_sites": 2, "J_MHz": [[0, 1], [1, 0]]}},
            "quench": {"z_init": ["10"], "times_ns": {"start": 0, "stop": 1, "step": 0.25}}})");
        CHECK(c.quench->times_ns == std::vector<double>{0, 0.25, 0.5, 0.75, 1.0});
    }
    SUBCASE("diagnostics name the offending field") {
        auto diags = [](const std::string& text) { return parse_config_text(text).diagnostics; };
        auto has = [](const std::vector<Diagnostic>& d, const std::string& field, Diagnostic::Severity s) {
            for (const auto& x : d)
                if (x.field == field && x.severity == s) return true;
            return false;
        };
        const auto e = Diagnostic::Severity::error;
        const auto w = Diagnostic::Severity::warning;
        auto d = diags(R"({"device": {"bose_hubbard": {"n_sites": 2, "J_MHz": [[0.5, 1], [1, 0]]}}})");
        CHECK(has(d, "device.bose_hubbard.J_MHz[0][0]", e));
        d = diags(R"({"device": {"bose_hubbard": {"n_sites": 2, "J_MHz": [[0, 1], [2, 0]]}}})");
        CHECK(has(d, "device.bose_hubbard.J_MHz[1][0]", e));
        d = diags(R"({"device": {"bose_hubbard": {"n_sites": 2, "U_MHz": -200, "J_MHz": [[0, 1], [1, 0]]}}})");
        CHECK(has(d, "device.bose_hubbard.U_MHz", w));
        CHECK(parse_config_text(R"({"device": {"bose_hubbard": {"n_sites": 2, "U_MHz": -200, "J_MHz": [[0, 1], [1, 0]]}}})").ok());
        d = diags(R"({"device": {"bose_hubbard": {"n_sites": 2, "max_occupancy": 2, "J_MHz": [[0, 1], [1, 0]]}}})");
        CHECK(has(d, "device.bose_hubbard.U_MHz", e));
        d = diags(R"({"purcell": {"pionts": 5}})");
        CHECK(has(d, "purcell.pionts", e));
        d = diags(R"({"purcell": {"points": "many"}})");
        CHECK(has(d, "purcell.points", e));
        d = diags(R"({"purcell": {"f_min_GHz": 6, "f_max_GHz": 5}})");
        CHECK(has(d, "purcell.f_max_GHz", e));
        d = diags(R"({"device": {"circuit": {"n_cells": 10, "L0": -1, "C0": 200, "Ct": [50]}}})");
        CHECK(has(d, "device.circuit", e));
        d = diags(R"({"quench": {"z_init": ["1100", "1000"], "times_ns": [0]}})");
        CHECK(has(d, "quench.z_init", e));
        CHECK(has(d, "device", e));
        d = diags("{\"seed\": 1,");
        CHECK(!d.empty());
        CHECK(d.front().severity == e);
    }
    SUBCASE("load_config raises SchemaError listing the problems") {
        try {
            load_config_text(R"({"purcell": {"pionts": 5}, "extra": 1})");
            FAIL("expected SchemaError");
        } catch (const SchemaError& err) {
            CHECK(std::string(err.what()).find("purcell.pionts") != std::string::npos);
            CHECK(std::string(err.what()).find("extra") != std::string::npos);
        }
        CHECK_THROWS_AS(load_config("/nonexistent/bgs.json"), IoError);
    }
}

TEST_CASE("validate subcommand") {
    const fs::path w = scratch("validate");
    auto r = cli("validate " + (kSource / "configs" / "fig4.json").string(), w);
    CHECK(r.code == 0);
    CHECK(r.output.empty());
    r = cli("validate --config " + (kSource / "configs" / "mitigate.json").string(), w);
    CHECK(r.code == 0);
    const fs::path bad = write_file(w / "bad.json", R"({"device": {"bose_hubbard": {"n_sites": 2, "J_MHz": [[1, 1], [1, 0]]}}})");
    r = cli("validate " + bad.string(), w);
    CHECK(r.code == 1);
    CHECK(r.output.find("device.bose_hubbard.J_MHz[0][0]") != std::string::npos);
    const fs::path warn = write_file(w / "warn.json", R"({"device": {"bose_hubbard": {"n_sites": 2, "U_MHz": -100, "J_MHz": [[0, 1], [1, 0]]}}})");
    r = cli("validate " + warn.string(), w);
    CHECK(r.code == 0);
    CHECK(r.output.find("warning: device.bose_hubbard.U_MHz") != std::string::npos);
}

TEST_CASE("exit codes and clean failure") {
    const fs::path w = scratch("exit");
    SUBCASE("missing config file: exit 3, nothing written") {
        const auto r = cli("quench --config " + (w / "absent.json").string() + " --out " + (w / "o").string(), w);
        CHECK(r.code == 3);
        CHECK_FALSE(fs::exists(w / "o"));
    }
    SUBCASE("schema error: exit 1") {
        const fs::path c = write_file(w / "c.json", R"({"purcell": {"Q": 15}})");
        const auto r = cli("purcell --config " + c.string() + " --out " + (w / "o").string(), w);
        CHECK(r.code == 1);
        CHECK(r.output.find("purcell.Q") != std::string::npos);
        CHECK_FALSE(fs::exists(w / "o"));
    }
    SUBCASE("missing block for the subcommand: exit 1") {
        const fs::path c = write_file(w / "c.json", R"({"purcell": {}})");
        const auto r = cli("mitigate --config " + c.string() + " --out " + (w / "o").string(), w);
        CHECK(r.code == 1);
        CHECK_FALSE(fs::exists(w / "o"));
    }
    SUBCASE("computation error: exit 2, names the operation, no manifest") {
        // qubit parked in the passband
        const fs::path c = write_file(w / "c.json", R"({"device": {"circuit": {"n_cells": 30, "L0": 2.04, "C0": 242.19,
            "Ct": [60.17], "Cg": [9.19], "Cq": 83.0, "EJ": [15.0], "qubit_cells": [15]}}, "circuit": {"omega01_GHz": 5.8}})");
        const auto r = cli("circuit --config " + c.string() + " --out " + (w / "o").string(), w);
        CHECK(r.code == 2);
        CHECK(r.output.find("bandgap_exchange_J") != std::string::npos);
        CHECK_FALSE(fs::exists(w / "o" / kManifestName));
        if (fs::exists(w / "o")) CHECK(listing(w / "o").empty());
    }
    SUBCASE("usage errors") {
        CHECK(cli("", w).code == 1);
        CHECK(cli("reproduce fig9", w).code == 1);
        CHECK(cli("--help", w).code == 0);
    }
}

TEST_CASE("quench with the four-frequency device config") {
    const fs::path w = scratch("fig3");
    const auto r = cli("quench --config " + (kSource / "configs" / "fig3.json").string() + " --out " + (w / "o").string(), w);
    REQUIRE(r.code == 0);
    int populations = 0;
    for (const auto& f : listing(w / "o")) populations += f.rfind("populations_", 0) == 0;
    CHECK(populations == 4);
    const csv::Table t = csv::read(w / "o" / "populations_4.72GHz.csv");
    CHECK(t.header == std::vector<std::string>{"z_init", "time_ns", "site", "value"});
    CHECK(t.rows.size() == 101 * 10);
    // two excitations are conserved
    double total = 0.0;
    for (const auto& row : t.rows)
        if (row[1] == "500") total += csv::parse_double(row[3]);
    CHECK(total == Approx(2.0).epsilon(1e-9));
    const auto h = read_json(w / "o" / "hamiltonian_4.72GHz.json");
    const double j1 = h["J_MHz"][0][1].get<double>();
    const double j2 = h["J_MHz"][0][2].get<double>();
    CHECK(j1 > 0.0);
    CHECK(j2 < 0.0);
    CHECK(h["U_MHz"][0].get<double>() < -150.0);
}

TEST_CASE("quench then learn through the CLI") {
    const fs::path w = scratch("learn");
    std::string text = kHardcore;
    text.replace(text.find("DATASET"), 7, (w / "data").string());
    const fs::path cfg = write_file(w / "run.json", text);
    REQUIRE(cli("quench --config " + cfg.string() + " --out " + (w / "data").string(), w).code == 0);

    const auto manifest = read_json(w / "data" / kManifestName);
    std::set<std::string> listed{kManifestName};
    for (const auto& f : manifest["outputs"]) listed.insert(f.get<std::string>());
    CHECK(listed == listing(w / "data"));
    CHECK(manifest["subcommand"] == "quench");
    CHECK(manifest["seed"] == 11);
    CHECK(manifest["config_hash"].get<std::string>().size() == 40);

    const FidelityDataset ds = read_dataset(w / "data");
    CHECK(ds.z_init.size() == 3);
    CHECK(ds.taus == std::vector<double>{76, 148, 260, 420});
    CHECK(ds.shots == 2000);
    CHECK(ds.sector->dimension() == 20);
    for (const auto& row : ds.data)
        for (const auto& d : row) {
            CHECK(d.p.sum() == Approx(1.0));
            // sampled frequencies are multiples of 1/shots
            for (int s = 0; s < d.dimension(); ++s) CHECK(std::abs(d.p(s) * 2000 - std::round(d.p(s) * 2000)) < 1e-9);
        }

    REQUIRE(cli("learn --config " + cfg.string() + " --out " + (w / "fit").string() + " --threads 2", w).code == 0);
    const auto rep = read_json(w / "fit" / "learn_report.json");
    CHECK(rep["parameters"].size() == 9);
    CHECK(rep["parameters"][0]["name"] == "J_1_2");
    CHECK(rep["fd_trace"].size() == 2);
    CHECK(rep["fd_trace"][1].get<double>() >= rep["fd_trace"][0].get<double>() - 1e-12);
    const csv::Table prof = csv::read(w / "fit" / "fd_profile_J_2_3.csv");
    CHECK(prof.header == std::vector<std::string>{"value_MHz", "fd"});
    CHECK(prof.rows.size() == 5);

    SUBCASE("dataset errors") {
        CHECK_THROWS_AS(read_dataset(w / "nowhere"), IoError);
        write_file(w / "data" / "dataset.json", R"({"z_init": ["110100"]})");
        CHECK_THROWS_AS(read_dataset(w / "data"), SchemaError);
    }
}

TEST_CASE("mitigate through the CLI") {
    const fs::path w = scratch("mitigate");
    REQUIRE(cli("mitigate --config " + (kSource / "configs" / "mitigate.json").string() + " --out " + (w / "o").string(), w)
                .code == 0);
    const auto s = read_json(w / "o" / "mitigation.json");
    CHECK(s["tv_to_truth"].get<double>() < 0.01);
    CHECK(s["fidelity_nq"].get<double>() == Approx(std::pow(0.9733, 10)));
    const csv::Table t = csv::read(w / "o" / "mitigated.csv");
    CHECK(t.rows.size() == 1024);
    CHECK(t.rows[31][0] == "0000011111");
    CHECK(csv::parse_double(t.rows[31][2]) == Approx(0.4).epsilon(0.01));

    // counts from a file against a stored assignment matrix
    write_assignment_json(w / "a.json", AssignmentMatrix::uniform_tensor(2, 0.1, 0.2));
    write_file(w / "counts.csv", "bitstring,count\n00,700\n01,100\n11,200\n");
    const fs::path cfg = write_file(w / "c.json", R"({"mitigate": {"assignment": {"json": ")" + (w / "a.json").string() +
                                                      R"("}, "counts": {"csv": ")" + (w / "counts.csv").string() + R"("}}})");
    REQUIRE(cli("mitigate --config " + cfg.string() + " --out " + (w / "o2").string(), w).code == 0);
    const csv::Table m = csv::read(w / "o2" / "mitigated.csv");
    CHECK(m.rows.size() == 4);
    CHECK(csv::parse_double(m.rows[0][1]) == Approx(0.7));
    double sum = 0.0;
    for (const auto& row : m.rows) sum += csv::parse_double(row[2]);
    CHECK(sum == Approx(1.0));

    write_file(w / "counts.csv", "bitstring,count\n000,700\n");
    CHECK(cli("mitigate --config " + cfg.string() + " --out " + (w / "o3").string(), w).code == 1);
}

TEST_CASE("circuit, bound-states and purcell outputs") {
    const fs::path w = scratch("outputs");
    REQUIRE(cli("circuit --config " + (kSource / "configs" / "circuit.json").string() + " --out " + (w / "c").string(), w)
                .code == 0);
    const csv::Table j = csv::read(w / "c" / "exchange.csv");
    CHECK(j.header == std::vector<std::string>{"distance", "J_GHz", "sign"});
    REQUIRE(j.rows.size() == 9);
    for (std::size_t d = 0; d < 9; ++d) CHECK(j.rows[d][2] == (d % 2 == 0 ? "1" : "-1"));

    const fs::path bs = write_file(w / "bs.json", R"({"device": {"preset": {"name": "fitted_device", "n_cells": 30}},
        "bound_states": {"omega01_GHz": [4.5, 5.5, 7.45], "distances": [1, 2, 3]}})");
    REQUIRE(cli("bound-states --config " + bs.string() + " --out " + (w / "b").string(), w).code == 0);
    const csv::Table u = csv::read(w / "b" / "interaction.csv");
    CHECK(u.header == std::vector<std::string>{"omega01_GHz", "U_MHz"});
    CHECK(u.rows.size() == 2);  // 5.5 GHz sits in the passband
    const csv::Table x = csv::read(w / "b" / "exchange.csv");
    CHECK(x.header == std::vector<std::string>{"omega01_GHz", "distance", "J_MHz", "sign", "xi"});

    const fs::path pc = write_file(w / "p.json", R"({"purcell": {"points": 11}})");
    REQUIRE(cli("purcell --config " + pc.string() + " --out " + (w / "p").string(), w).code == 0);
    const csv::Table p = csv::read(w / "p" / "purcell.csv");
    CHECK(p.header == std::vector<std::string>{"freq_GHz", "ReYq_S", "T1_us", "topology"});
    CHECK(p.rows.size() == 33);
    CHECK(p.rows[0][3] == "direct");
    CHECK(p.rows[32][3] == "metamaterial");
}

TEST_CASE("reproduce fig4 is deterministic and seed-driven") {
    const fs::path w = scratch("determinism");
    REQUIRE(cli("reproduce fig4 --seed 7 --out " + (w / "a").string(), w).code == 0);
    REQUIRE(cli("reproduce fig4 --seed 7 --threads 1 --out " + (w / "b").string(), w).code == 0);
    REQUIRE(cli("reproduce fig4 --seed 8 --out " + (w / "c").string(), w).code == 0);
    const auto files = listing(w / "a");
    CHECK(files == listing(w / "b"));
    for (const auto& f : files) {
        if (f == kManifestName) continue;
        CAPTURE(f);
        CHECK(slurp(w / "a" / f) == slurp(w / "b" / f));
    }
    auto ma = read_json(w / "a" / kManifestName), mb = read_json(w / "b" / kManifestName);
    ma.erase("wall_time_s");
    mb.erase("wall_time_s");
    CHECK(ma == mb);
    CHECK(slurp(w / "a" / "mu2.csv") != slurp(w / "c" / "mu2.csv"));
    CHECK(read_json(w / "c" / kManifestName)["seed"] == 8);

    const auto s = read_json(w / "a" / "summary.json");
    CHECK(s["D"] == 45);
    CHECK(s["long_range"]["ratio_to_ergodic"].get<double>() < s["nn_only"]["ratio_to_ergodic"].get<double>());
}
