#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bandgapsim/config.hpp"

namespace bgs {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kManifestName = "manifest.json";

// The only values a command line may change on top of the config document.
struct RunOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::filesystem::path> output;
    std::optional<unsigned> threads;
};

struct RunManifest {
    std::string subcommand;
    std::string target;
    std::string config_hash;  // SHA-1 of the normalized document
    std::uint64_t seed = 0;
    std::map<std::string, std::string> versions;
    double wall_time_s = 0.0;
    std::vector<std::string> outputs;  // relative to the output directory
};

// Executes one subcommand (`target` selects the figure for reproduce). Files are
// staged and only moved into the output directory once everything succeeded;
// the manifest is written last.
RunManifest run(const std::string& subcommand, const RunConfig& config, const RunOverrides& overrides = {},
                const std::string& target = {});

// Uniform chain whose U and J(d) come from the bound-state scan of `spec` at
// one dressed qubit frequency. Distances the scan cannot resolve are left at 0.
BoseHubbardParams params_from_circuit(const CircuitSpec& spec, double omega01_ghz, int n_sites, int max_occupancy);

// Reads the dataset.json + pz files written by `quench` or `reproduce fig2`.
FidelityDataset read_dataset(const std::filesystem::path& dir);

// Site 1 is the leftmost character.
std::string bitstring(std::uint64_t code, int n_bits);
std::string sha1_hex(const std::string& data);

// Independent seed for one consumer of the run seed.
std::uint64_t substream(std::uint64_t seed, std::uint64_t stream);

}  // namespace bgs
