#include "bandgapsim/lattice_circuit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <string>

#include "bandgapsim/errors.hpp"
#include "bandgapsim/linalg.hpp"
#include "bandgapsim/units.hpp"

namespace bgs {

namespace {

double at_or_zero(const std::vector<double>& v, int i) {
    return (i >= 0 && i < static_cast<int>(v.size())) ? v[static_cast<std::size_t>(i)] : 0.0;
}

int ring_distance(int a, int b, int n) {
    int d = std::abs(a - b);
    return std::min(d, n - d);
}

}  // namespace

double CircuitSpec::ct(int x) const { return x >= 1 ? at_or_zero(Ct, x - 1) : 0.0; }
double CircuitSpec::mutual_nH(int x) const { return x >= 1 ? units::pH_to_nH(at_or_zero(M, x - 1)) : 0.0; }
double CircuitSpec::cg(int x) const { return at_or_zero(Cg, x); }
double CircuitSpec::cqq(int x) const { return x >= 1 ? at_or_zero(Cqq, x - 1) : 0.0; }

void CircuitSpec::validate() const {
    const char* op = "CircuitSpec";
    if (n_cells < 1) throw InvalidSpec(op, "n_cells must be positive");
    if (!(L0 > 0.0)) throw InvalidSpec(op, "L0 must be positive");
    if (!(C0 > 0.0)) throw InvalidSpec(op, "C0 must be positive");
    auto positive = [&](const std::vector<double>& v, const char* name) {
        for (double c : v)
            if (!(c > 0.0)) throw InvalidSpec(op, std::string(name) + " entries must be positive");
    };
    positive(Ct, "Ct");
    positive(Cg, "Cg");
    positive(Cqq, "Cqq");
    for (double m : M)
        if (!(std::abs(units::pH_to_nH(m)) < L0)) throw InvalidSpec(op, "|M_x| must be below L0");
    if (!qubit_cells.empty() && !(Cq > 0.0)) throw InvalidSpec(op, "Cq must be positive");
    if (EJ.size() != qubit_cells.size()) throw InvalidSpec(op, "EJ needs one entry per qubit");
    for (double e : EJ)
        if (!(e > 0.0)) throw InvalidSpec(op, "EJ entries must be positive");
    std::set<int> seen;
    for (int c : qubit_cells) {
        if (c < 1 || c > n_cells) throw InvalidSpec(op, "qubit cell out of range");
        if (!seen.insert(c).second) throw InvalidSpec(op, "qubit cells must be distinct");
    }
}

Eigen::MatrixXd capacitance_matrix(const CircuitSpec& spec) {
    spec.validate();
    const int n = spec.n_cells;
    const int nq = spec.n_qubits();
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n + nq, n + nq);

    for (int i = 0; i < n; ++i) {
        double self = spec.C0;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const double ct = spec.ct(std::abs(i - j));
            c(i, j) = -ct;
            self += ct;
        }
        if (spec.idle_qubit_loading) {
            for (int j = 0; j < n; ++j) self += spec.cg(std::abs(i - j));
        } else {
            for (int a = 0; a < nq; ++a) self += spec.cg(std::abs(i - (spec.qubit_cells[a] - 1)));
        }
        c(i, i) = self;
    }

    for (int a = 0; a < nq; ++a) {
        const int ca = spec.qubit_cells[a] - 1;
        double self = spec.Cq;
        for (int j = 0; j < n; ++j) {
            const double cg = spec.cg(std::abs(ca - j));
            c(n + a, j) = -cg;
            c(j, n + a) = -cg;
            self += cg;
        }
        for (int b = 0; b < nq; ++b) {
            if (b == a) continue;
            c(n + a, n + b) = -spec.cqq(std::abs(ca - (spec.qubit_cells[b] - 1)));
        }
        if (spec.idle_qubit_loading) {
            for (int j = 0; j < n; ++j)
                if (j != ca) self += spec.cqq(std::abs(ca - j));
        } else {
            for (int b = 0; b < nq; ++b)
                if (b != a) self += spec.cqq(std::abs(ca - (spec.qubit_cells[b] - 1)));
        }
        c(n + a, n + a) = self;
    }

    Eigen::LLT<Eigen::MatrixXd> llt(c);
    if (llt.info() != Eigen::Success)
        throw NotPositiveDefinite("capacitance_matrix", "coupling capacitances overwhelm self-capacitance");
    return c;
}

Eigen::MatrixXd inductance_matrix(const CircuitSpec& spec) {
    spec.validate();
    const int n = spec.n_cells;
    Eigen::MatrixXd l(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) l(i, j) = (i == j) ? spec.L0 : spec.mutual_nH(std::abs(i - j));
    return l;
}

Eigen::MatrixXd neumann_inverse(const Eigen::MatrixXd& c, int order) {
    if (order == kExactOrder) return spd_inverse(c, "first_order_inverse");
    if (order < 0) throw InvalidArgument("first_order_inverse", "order must be >= 0 or exact");
    const Eigen::VectorXd dinv = c.diagonal().cwiseInverse();
    // C = D - A  =>  C^-1 = D^-1 sum_k (A D^-1)^k
    Eigen::MatrixXd a = -c;
    a.diagonal().setZero();
    const Eigen::MatrixXd ad = a * dinv.asDiagonal();
    const double r = ad.cwiseAbs().rowwise().sum().maxCoeff();
    if (r >= 1.0) throw SeriesDiverges("first_order_inverse", "expansion ratio r >= 1");
    Eigen::MatrixXd term = dinv.asDiagonal();
    Eigen::MatrixXd sum = term;
    for (int k = 1; k <= order; ++k) {
        term = term * ad;
        sum += term;
    }
    return 0.5 * (sum + sum.transpose());
}

Eigen::MatrixXd first_order_inverse(const CircuitSpec& spec, int order) {
    return neumann_inverse(capacitance_matrix(spec), order);
}

SecondQuantizedCouplings quantize_matrices(const Eigen::MatrixXd& c_inv, const Eigen::MatrixXd& l_inv,
                                           const std::vector<double>& ej_ghz) {
    const int n = static_cast<int>(l_inv.rows());
    const int nq = static_cast<int>(ej_ghz.size());
    if (c_inv.rows() != n + nq) throw DimensionMismatch("second_quantize", "C^-1 size does not match modes");

    SecondQuantizedCouplings q;
    q.omega_n.resize(n);
    q.Z_n.resize(n);
    q.omega_q.resize(nq);
    q.U_q.resize(nq);
    q.Z_q.resize(nq);
    q.EC_ghz.resize(nq);
    for (int i = 0; i < n; ++i) {
        q.Z_n(i) = std::sqrt(c_inv(i, i) / l_inv(i, i));
        q.omega_n(i) = units::kInvSqrtNhFf * std::sqrt(c_inv(i, i) * l_inv(i, i));
    }
    for (int a = 0; a < nq; ++a) {
        const double cinv = c_inv(n + a, n + a);
        const double ec = units::charging_energy_ghz(cinv);
        const double ej = ej_ghz[static_cast<std::size_t>(a)];
        q.EC_ghz(a) = ec;
        q.Z_q(a) = std::sqrt(cinv / units::inverse_josephson_inductance(ej));
        q.omega_q(a) = units::ghz_to_radns(std::sqrt(8.0 * ej * ec) - ec);
        q.U_q(a) = -units::ghz_to_radns(ec);
    }

    q.t_matrix = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const double zz = std::sqrt(q.Z_n(i) * q.Z_n(j));
            q.t_matrix(i, j) = 0.5 * units::kInvSqrtNhFf * (c_inv(i, j) / zz + l_inv(i, j) * zz);
        }
    q.g_matrix = Eigen::MatrixXd::Zero(n, nq);
    for (int i = 0; i < n; ++i)
        for (int a = 0; a < nq; ++a)
            q.g_matrix(i, a) = 0.5 * units::kInvSqrtNhFf * c_inv(i, n + a) / std::sqrt(q.Z_n(i) * q.Z_q(a));
    q.Jprime = Eigen::MatrixXd::Zero(nq, nq);
    for (int a = 0; a < nq; ++a)
        for (int b = 0; b < nq; ++b) {
            if (a == b) continue;
            q.Jprime(a, b) = 0.5 * units::kInvSqrtNhFf * c_inv(n + a, n + b) / std::sqrt(q.Z_q(a) * q.Z_q(b));
        }
    return q;
}

SecondQuantizedCouplings second_quantize(const CircuitSpec& spec) {
    const Eigen::MatrixXd c_inv = spd_inverse(capacitance_matrix(spec), "second_quantize");
    const Eigen::MatrixXd l_inv = spd_inverse(inductance_matrix(spec), "second_quantize");
    return quantize_matrices(c_inv, l_inv, spec.EJ);
}

Eigen::MatrixXd SecondQuantizedCouplings::single_excitation_hamiltonian() const {
    const int n = n_resonators();
    const int nq = n_qubits();
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n + nq, n + nq);
    h.topLeftCorner(n, n) = t_matrix;
    h.topRightCorner(n, nq) = g_matrix;
    h.bottomLeftCorner(nq, n) = g_matrix.transpose();
    h.bottomRightCorner(nq, nq) = Jprime;
    h.diagonal().head(n) = omega_n;
    h.diagonal().tail(nq) = omega_q;
    return h;
}

bool is_nearest_neighbour(const CircuitSpec& spec) {
    if (spec.Ct.size() > 1) return false;
    return std::all_of(spec.M.begin(), spec.M.end(), [](double m) { return m == 0.0; });
}

Dispersion dispersion_closed_form(const CircuitSpec& spec) {
    spec.validate();
    if (!is_nearest_neighbour(spec))
        throw InvalidArgument("dispersion_from_spec", "closed form needs a nearest-neighbour spec");
    double cg_total = 0.0;
    if (spec.idle_qubit_loading)
        for (std::size_t x = 0; x < spec.Cg.size(); ++x) cg_total += (x == 0 ? 1.0 : 2.0) * spec.Cg[x];
    const double ct = spec.ct(1);
    const double csum = spec.C0 + cg_total + 2.0 * ct;
    Dispersion d;
    d.omega_c = units::kInvSqrtNhFf / std::sqrt(spec.L0 * csum);
    d.t = ct / (2.0 * csum) * d.omega_c;
    d.band_lower = d.omega_c - 2.0 * d.t;
    d.band_upper = d.omega_c + 2.0 * d.t;
    return d;
}

Dispersion dispersion_periodic(const CircuitSpec& spec, int n_periodic, int inverse_order) {
    spec.validate();
    const int n = n_periodic;
    if (n < 3) throw InvalidArgument("dispersion_from_spec", "periodic chain needs at least 3 cells");
    double cg_total = 0.0;
    if (spec.idle_qubit_loading)
        for (std::size_t x = 0; x < spec.Cg.size(); ++x) cg_total += (x == 0 ? 1.0 : 2.0) * spec.Cg[x];

    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        double self = spec.C0 + cg_total;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const int x = ring_distance(i, j, n);
            c(i, j) = -spec.ct(x);
            self += spec.ct(x);
            l(i, j) = spec.mutual_nH(x);
        }
        c(i, i) = self;
        l(i, i) = spec.L0;
    }
    const Eigen::MatrixXd c_inv = neumann_inverse(c, inverse_order);
    const Eigen::MatrixXd l_inv = spd_inverse(l, "dispersion_from_spec");
    const SecondQuantizedCouplings q = quantize_matrices(c_inv, l_inv, {});
    const Eigen::VectorXd ev = sym_eigvals(q.single_excitation_hamiltonian());

    Dispersion d;
    d.band_lower = ev(0);
    d.band_upper = ev(n - 1);
    d.omega_c = 0.5 * (d.band_lower + d.band_upper);
    d.t = 0.25 * (d.band_upper - d.band_lower);
    return d;
}

Dispersion dispersion_from_spec(const CircuitSpec& spec, int n_periodic) {
    if (is_nearest_neighbour(spec)) return dispersion_closed_form(spec);
    return dispersion_periodic(spec, n_periodic, kExactOrder);
}

CircuitSpec longrange_tail_fill(const CircuitSpec& base, int cutoff) {
    const char* op = "longrange_tail_fill";
    if (base.Ct.size() < 2) throw MissingAnchor(op, "C_t,2 anchor required");
    if (base.M.size() < 4) throw MissingAnchor(op, "M_1..M_4 anchors required");
    if (cutoff < 4) throw InvalidArgument(op, "cutoff must be at least 4");
    CircuitSpec out = base;
    const double ct2 = base.Ct[1];
    out.Ct.resize(static_cast<std::size_t>(cutoff));
    for (int x = 2; x <= cutoff; ++x) out.Ct[static_cast<std::size_t>(x - 1)] = ct2 * std::pow(2.0 / x, 3);

    auto law = [](int x) { return ((x % 2 == 0) ? 1.0 : -1.0) * std::log1p(1.0 / x); };
    const double m4 = base.M[3];
    out.M.resize(static_cast<std::size_t>(cutoff));
    for (int x = 5; x <= cutoff; ++x) out.M[static_cast<std::size_t>(x - 1)] = m4 * law(x) / law(4);
    return out;
}

double lattice_integral_I(int n, double a) {
    if (!(std::abs(a) > 1.0)) throw OnBranchCut("lattice_integral_I", "|a| must exceed 1");
    const double root = std::sqrt(a * a - 1.0);
    const double inv_lambda = std::log(std::abs(a) + root);
    const int m = std::abs(n);
    const double decay = std::exp(-m * inv_lambda);
    const double two_pi = units::kTwoPi;
    if (a > 1.0) return two_pi * ((m % 2 == 0) ? 1.0 : -1.0) * decay / root;
    return -two_pi * decay / root;
}

double localization_length(double delta, double t) {
    const char* op = "localization_length";
    if (!(t > 0.0)) throw InvalidArgument(op, "t must be positive");
    const double ratio = std::abs(delta) / (2.0 * t);
    if (ratio <= 1.0) throw InsideBand(op, "|Delta| <= 2t");
    if (ratio <= 1.0 + 1e-12) throw DivergentLength(op, "arccosh argument too close to 1");
    return 1.0 / std::acosh(ratio);
}

double bandgap_exchange_J(double g_n, double g_np, double delta_n, double delta_np, double t, int distance) {
    const char* op = "bandgap_exchange_J";
    if (!(t > 0.0)) throw InvalidArgument(op, "t must be positive");
    if (std::abs(delta_n) <= 2.0 * t || std::abs(delta_np) <= 2.0 * t) throw InsideBand(op, "|Delta| <= 2t");
    if ((delta_n > 0.0) != (delta_np > 0.0)) throw InvalidArgument(op, "qubits sit in different gaps");
    const int d = std::abs(distance);
    auto term = [&](double delta) {
        const double root = std::sqrt(delta * delta - 4.0 * t * t);
        return std::exp(-d / localization_length(delta, t)) / root;
    };
    const double magnitude = 0.5 * g_n * g_np * (term(delta_n) + term(delta_np));
    if (delta_n < 0.0) return -((d % 2 == 0) ? 1.0 : -1.0) * magnitude;
    return magnitude;
}

}  // namespace bgs
