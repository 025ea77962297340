#pragma once

#include <map>
#include <vector>

#include "bandgapsim/lattice_circuit.hpp"

namespace bgs {

struct SpectrumResult {
    double omega01 = 0.0;       // rad/ns
    double omega02 = 0.0;       // rad/ns
    double qubit_weight = 0.0;  // weight of the bound state on the qubit site
};

struct PairCouplingResult {
    double J = 0.0;  // rad/ns, J > 0 means the antisymmetric combination is lower
    double lambda_minus = 0.0;
    double lambda_plus = 0.0;
    bool degenerate = false;
};

struct LocalizationFit {
    double xi = 0.0;
    double residual = 0.0;  // rms of ln|J| about the fitted line
};

struct Truncation {
    int resonator_photons = 2;
    int qubit_levels = 3;
};

// One entry per grid point that supports a bound state.
struct BoundStateScan {
    std::vector<double> omega01_grid;             // rad/ns, dressed
    std::vector<double> ej_ghz;
    std::vector<double> U_values;                 // rad/ns
    std::vector<std::map<int, double>> J_values;  // distance -> J (rad/ns)
    std::vector<double> xi_values;                // NaN when fewer than 3 distances
};

// In-gap test against the passband [band_lower, band_upper].
bool in_gap(double omega, const Dispersion& band);

// Dressed omega01/omega02 of qubit `qubit` (index into the couplings' qubits).
SpectrumResult single_qubit_spectrum(const SecondQuantizedCouplings& q, int qubit, const Dispersion& band,
                                     const Truncation& trunc = {});
double onsite_interaction(double omega01, double omega02);
PairCouplingResult pair_coupling(const SecondQuantizedCouplings& q, int qubit_a, int qubit_b,
                                 const Dispersion& band);
LocalizationFit fit_localization_length(const std::map<int, double>& J_by_distance);

// CircuitSpec helpers: place active qubits at `cells` (1-based) with one E_J.
CircuitSpec with_qubits(const CircuitSpec& spec, const std::vector<int>& cells, double ej_ghz);
SpectrumResult single_qubit_spectrum(const CircuitSpec& spec, int cell, double ej_ghz,
                                     const Dispersion& band, const Truncation& trunc = {});
PairCouplingResult pair_coupling(const CircuitSpec& spec, int cell_i, int cell_j, double ej_ghz,
                                 const Dispersion& band);
// Dressed single-excitation qubit frequency (rad/ns) without requiring a bound state.
double dressed_qubit_frequency(const CircuitSpec& spec, int cell, double ej_ghz);
// Monotone bisection on E_J so the dressed omega01 hits `target` (rad/ns).
double ej_for_omega01(const CircuitSpec& spec, int cell, double target, double tol = 1e-6,
                      double ej_lo = 1.0, double ej_hi = 200.0);
// Cells of a qubit pair at distance d centred in an n-cell chain.
std::pair<int, int> centred_pair(int n_cells, int distance);

struct ScanOptions {
    std::vector<int> distances{1, 2, 3, 4, 5, 6, 7, 8, 9};
    bool compute_U = true;
    bool compute_J = true;
    Truncation truncation{};
};

// Scan over target omega01 values (rad/ns); grid points without a bound state are skipped.
BoundStateScan scan_bound_states(const CircuitSpec& spec, const std::vector<double>& omega01_grid,
                                 const ScanOptions& opts = {});

}  // namespace bgs
