#include "bandgapsim/bound_states.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bandgapsim/errors.hpp"
#include "bandgapsim/fock.hpp"
#include "bandgapsim/linalg.hpp"
#include "bandgapsim/parallel.hpp"

namespace bgs {

bool in_gap(double omega, const Dispersion& band) {
    return omega < band.band_lower || omega > band.band_upper;
}

namespace {

void check_qubit(const SecondQuantizedCouplings& q, int qubit, const char* op) {
    if (qubit < 0 || qubit >= q.n_qubits()) throw InvalidArgument(op, "qubit index out of range");
}

}  // namespace

SpectrumResult single_qubit_spectrum(const SecondQuantizedCouplings& q, int qubit, const Dispersion& band,
                                     const Truncation& trunc) {
    const char* op = "single_qubit_spectrum";
    check_qubit(q, qubit, op);
    const int n = q.n_resonators();
    const int modes = q.n_modes();
    const int site = n + qubit;
    const Eigen::MatrixXd h1 = q.single_excitation_hamiltonian();
    const SymEig e1 = sym_eig(h1);

    int best = -1;
    double best_w = -1.0;
    for (int k = 0; k < modes; ++k) {
        if (!in_gap(e1.values(k), band)) continue;
        const double w = e1.vectors(site, k) * e1.vectors(site, k);
        const bool better = w > best_w + 1e-12 ||
                            (std::abs(w - best_w) <= 1e-12 &&
                             std::abs(e1.values(k) - q.omega_q(qubit)) < std::abs(e1.values(best) - q.omega_q(qubit)));
        if (better) {
            best = k;
            best_w = w;
        }
    }
    if (best < 0) throw NoBoundState(op, "no single-excitation eigenvalue lies in a bandgap");

    SpectrumResult out;
    out.omega01 = e1.values(best);
    out.qubit_weight = best_w;

    BoseHubbardParams p;
    p.n_sites = modes;
    p.eps = h1.diagonal();
    p.J = h1;
    p.J.diagonal().setZero();
    p.U = Eigen::VectorXd::Zero(modes);
    p.U.tail(q.n_qubits()) = q.U_q;
    p.max_occupancy = 2;
    std::vector<int> caps(static_cast<std::size_t>(modes), std::min(2, trunc.resonator_photons));
    for (int a = 0; a < q.n_qubits(); ++a) caps[n + a] = std::min(2, trunc.qubit_levels - 1);
    const FockSector sector(modes, 2, caps);
    const SymEig e2 = sym_eig(build_sector_hamiltonian(p, sector));

    std::vector<int> doublon(static_cast<std::size_t>(modes), 0);
    doublon[site] = 2;
    const int ds = sector.index_of(doublon);
    if (ds < 0) throw InvalidArgument(op, "truncation removes the qubit |2> level");
    Eigen::Index k2 = 0;
    e2.vectors.row(ds).cwiseAbs2().maxCoeff(&k2);
    out.omega02 = e2.values(k2);
    return out;
}

double onsite_interaction(double omega01, double omega02) { return omega02 - 2.0 * omega01; }

PairCouplingResult pair_coupling(const SecondQuantizedCouplings& q, int qubit_a, int qubit_b,
                                 const Dispersion& band) {
    const char* op = "pair_coupling";
    check_qubit(q, qubit_a, op);
    check_qubit(q, qubit_b, op);
    if (qubit_a == qubit_b) throw InvalidArgument(op, "pair needs two distinct qubits");
    const int n = q.n_resonators();
    const int sa = n + qubit_a, sb = n + qubit_b;
    const SymEig e = sym_eig(q.single_excitation_hamiltonian());

    std::vector<std::pair<double, int>> ranked;
    for (int k = 0; k < q.n_modes(); ++k) {
        if (!in_gap(e.values(k), band)) continue;
        const double w = e.vectors(sa, k) * e.vectors(sa, k) + e.vectors(sb, k) * e.vectors(sb, k);
        ranked.emplace_back(w, k);
    }
    if (ranked.size() < 2) throw NoBoundState(op, "fewer than two in-gap eigenvalues");
    std::partial_sort(ranked.begin(), ranked.begin() + 2, ranked.end(),
                      [](const auto& x, const auto& y) { return x.first > y.first; });
    int lo = ranked[0].second, hi = ranked[1].second;
    if (e.values(lo) > e.values(hi)) std::swap(lo, hi);

    PairCouplingResult out;
    out.lambda_minus = e.values(lo);
    out.lambda_plus = e.values(hi);
    const double split = out.lambda_plus - out.lambda_minus;
    if (std::abs(split) < 1e-9) {
        out.degenerate = true;
        out.J = 0.0;
        return out;
    }
    const bool symmetric_lower = e.vectors(sa, lo) * e.vectors(sb, lo) > 0.0;
    out.J = (symmetric_lower ? -0.5 : 0.5) * split;
    return out;
}

LocalizationFit fit_localization_length(const std::map<int, double>& J_by_distance) {
    std::vector<double> x, y;
    for (const auto& [d, j] : J_by_distance) {
        if (j == 0.0 || !std::isfinite(j)) continue;
        x.push_back(d);
        y.push_back(std::log(std::abs(j)));
    }
    if (x.size() < 3) throw InsufficientPoints("fit_localization_length", "need at least 3 nonzero couplings");
    const double m = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    const double icpt = (sy - slope * sx) / m;
    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (icpt + slope * x[i]);
        ss += r * r;
    }
    LocalizationFit out;
    out.xi = -1.0 / slope;
    out.residual = std::sqrt(ss / m);
    return out;
}

CircuitSpec with_qubits(const CircuitSpec& spec, const std::vector<int>& cells, double ej_ghz) {
    CircuitSpec s = spec;
    s.qubit_cells = cells;
    s.EJ.assign(cells.size(), ej_ghz);
    return s;
}

SpectrumResult single_qubit_spectrum(const CircuitSpec& spec, int cell, double ej_ghz, const Dispersion& band,
                                     const Truncation& trunc) {
    return single_qubit_spectrum(second_quantize(with_qubits(spec, {cell}, ej_ghz)), 0, band, trunc);
}

PairCouplingResult pair_coupling(const CircuitSpec& spec, int cell_i, int cell_j, double ej_ghz,
                                 const Dispersion& band) {
    return pair_coupling(second_quantize(with_qubits(spec, {cell_i, cell_j}, ej_ghz)), 0, 1, band);
}

double dressed_qubit_frequency(const CircuitSpec& spec, int cell, double ej_ghz) {
    const SecondQuantizedCouplings q = second_quantize(with_qubits(spec, {cell}, ej_ghz));
    const SymEig e = sym_eig(q.single_excitation_hamiltonian());
    Eigen::Index k = 0;
    e.vectors.row(q.n_resonators()).cwiseAbs2().maxCoeff(&k);
    return e.values(k);
}

double ej_for_omega01(const CircuitSpec& spec, int cell, double target, double tol, double ej_lo, double ej_hi) {
    const char* op = "ej_for_omega01";
    double flo = dressed_qubit_frequency(spec, cell, ej_lo) - target;
    double fhi = dressed_qubit_frequency(spec, cell, ej_hi) - target;
    if (flo > 0.0 || fhi < 0.0) throw InvalidArgument(op, "target frequency outside the E_J bracket");
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (ej_lo + ej_hi);
        const double f = dressed_qubit_frequency(spec, cell, mid) - target;
        if (std::abs(f) < tol) return mid;
        if (f < 0.0) {
            ej_lo = mid;
            flo = f;
        } else {
            ej_hi = mid;
            fhi = f;
        }
        if (ej_hi - ej_lo < 1e-13 * ej_hi) break;
    }
    // a gap edge can make the dressed frequency jump; return the closer side
    return std::abs(flo) < std::abs(fhi) ? ej_lo : ej_hi;
}

std::pair<int, int> centred_pair(int n_cells, int distance) {
    const int i = (n_cells - distance) / 2 + 1;
    return {i, i + distance};
}

BoundStateScan scan_bound_states(const CircuitSpec& spec, const std::vector<double>& omega01_grid,
                                 const ScanOptions& opts) {
    const Dispersion band = dispersion_from_spec(spec);
    const int mid = (spec.n_cells + 1) / 2;
    const std::size_t n = omega01_grid.size();
    struct Point {
        bool ok = false;
        double omega01 = 0, ej = 0, U = std::numeric_limits<double>::quiet_NaN();
        std::map<int, double> J;
        double xi = std::numeric_limits<double>::quiet_NaN();
    };
    std::vector<Point> pts(n);
    parallel_for(n, [&](std::size_t i) {
        Point& p = pts[i];
        double ej = 0.0;
        try {
            ej = ej_for_omega01(spec, mid, omega01_grid[i]);
        } catch (const InvalidArgument&) {
            return;
        }
        const double w = dressed_qubit_frequency(spec, mid, ej);
        if (!in_gap(w, band)) return;
        p.ej = ej;
        try {
            if (opts.compute_U) {
                const SpectrumResult s = single_qubit_spectrum(spec, mid, ej, band, opts.truncation);
                p.omega01 = s.omega01;
                p.U = onsite_interaction(s.omega01, s.omega02);
            } else {
                p.omega01 = w;
            }
            if (opts.compute_J) {
                for (int d : opts.distances) {
                    const auto [ci, cj] = centred_pair(spec.n_cells, d);
                    if (ci < 1 || cj > spec.n_cells) continue;
                    // near a band edge the even or odd partner can fall into the band
                    try {
                        const PairCouplingResult r = pair_coupling(spec, ci, cj, ej, band);
                        if (!r.degenerate) p.J[d] = r.J;
                    } catch (const NoBoundState&) {
                    }
                }
                if (p.J.size() >= 3) p.xi = fit_localization_length(p.J).xi;
            }
        } catch (const NoBoundState&) {
            return;
        }
        p.ok = true;
    });

    BoundStateScan scan;
    for (const Point& p : pts) {
        if (!p.ok) continue;
        scan.omega01_grid.push_back(p.omega01);
        scan.ej_ghz.push_back(p.ej);
        scan.U_values.push_back(p.U);
        scan.J_values.push_back(p.J);
        scan.xi_values.push_back(p.xi);
    }
    return scan;
}

}  // namespace bgs
