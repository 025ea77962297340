#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bandgapsim/bound_states.hpp"
#include "bandgapsim/fock.hpp"
#include "bandgapsim/hamlearn.hpp"
#include "bandgapsim/purcell.hpp"
#include "bandgapsim/readout.hpp"

namespace bgs {

struct Diagnostic {
    enum class Severity { error, warning };
    Severity severity = Severity::error;
    std::string field;  // dotted path into the document
    std::string message;
};

std::string to_string(const Diagnostic& d);

// Explicit labels, or `count` random ones with `excitations` ones drawn from the run seed.
struct InitialStates {
    std::vector<std::string> labels;
    int count = 0;
    int excitations = 0;
};

struct CircuitBlock {
    std::optional<double> omega01_ghz;  // otherwise EJ[0] of the circuit
    int max_distance = 9;
    int n_periodic = 256;
};

struct BoundStatesBlock {
    std::vector<double> omega01_ghz;
    ScanOptions scan;
};

struct QuenchBlock {
    InitialStates z_init;
    std::vector<double> times_ns;
    long long shots = 0;
    std::optional<double> t2_us;
    int n_traj = 1000;
    // Device-derived Hamiltonians, one run per frequency.
    std::vector<double> interaction_frequencies_ghz;
    int n_sites = 10;
    int max_occupancy = 2;
};

struct LearnBlock {
    std::filesystem::path dataset;
    std::string start = "device";  // device | all_positive | explicit
    std::vector<double> x0_mhz;
    double bounds_scale = 3.0;
    GreedyOptions greedy;
    std::vector<std::string> profile_params;
    int profile_points = 41;
};

struct PurcellBlock {
    PurcellSweepOptions sweep;
    ReadoutNetwork network = device_readout_network();
};

struct MitigateBlock {
    std::filesystem::path assignment_csv, assignment_json;
    std::optional<std::array<double, 2>> uniform_errors;  // e10, e01
    int uniform_qubits = 0;
    std::filesystem::path counts_csv;
    std::map<std::string, double> synthetic_truth;
    long long synthetic_shots = 0;
    MitigationOptions options;
};

struct Fig2Block {
    double omega01_ghz = 4.72;
    int n_sites = 10;
    int max_occupancy = 2;
    int excitations = 5;
    int z_init_count = 40;
    long long shots = 4000;
    std::vector<double> taus_ns = kDefaultTaus;
    double bounds_scale = 3.0;
    GreedyOptions greedy{.rounds = 4};
};

struct Fig4Block {
    int excitations = 2;
    int z_init_count = 20;
    double jtau_max = 10.0;
    int points = 101;
    std::array<double, 2> window_jtau{3.0, 10.0};
    double pt_jtau = 5.0;
    int bins = 30;
};

// One parsed run document. Frequencies arrive in GHz or MHz (named in the
// key) and are stored in rad/ns where they feed the physics modules.
struct RunConfig {
    std::optional<CircuitSpec> circuit;
    std::optional<BoseHubbardParams> bose_hubbard;

    std::optional<CircuitBlock> circuit_run;
    std::optional<BoundStatesBlock> bound_states;
    std::optional<QuenchBlock> quench;
    std::optional<LearnBlock> learn;
    std::optional<PurcellBlock> purcell;
    std::optional<MitigateBlock> mitigate;
    std::optional<Fig2Block> fig2;
    std::optional<Fig4Block> fig4;

    std::uint64_t seed = 0;
    unsigned threads = 0;
    std::filesystem::path output = "out";

    std::string canonical;  // normalized document text, hashed into the manifest
};

struct ParsedConfig {
    RunConfig config;
    std::vector<Diagnostic> diagnostics;
    bool ok() const;
};

// Never throws on content; every problem becomes a diagnostic.
ParsedConfig parse_config_text(const std::string& text);
// IoError when the file cannot be read.
ParsedConfig parse_config_file(const std::filesystem::path& path);
// SchemaError listing every error diagnostic.
RunConfig load_config(const std::filesystem::path& path);
RunConfig load_config_text(const std::string& text);

// Built-in documents behind `reproduce`.
std::string builtin_config(const std::string& target);

}  // namespace bgs
