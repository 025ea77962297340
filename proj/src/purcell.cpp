#include "bandgapsim/purcell.hpp"

#include <cmath>
#include <limits>
#include <spdlog/spdlog.h>

#include "bandgapsim/errors.hpp"
#include "bandgapsim/parallel.hpp"
#include "bandgapsim/presets.hpp"
#include "bandgapsim/units.hpp"

namespace bgs {

namespace {

// fF * rad/ns -> S
constexpr double kCapToSiemens = 1e-6;

void warn_if_not_dispersive(double g, double delta) {
    if (std::abs(delta) < 5.0 * std::abs(g))
        spdlog::warn("purcell: |Delta|/g = {:.2f} is outside the dispersive regime", std::abs(delta / g));
}

double direct_rate(double g, double delta, double kappa) {
    if (delta == 0.0) throw InvalidArgument("purcell_direct", "zero detuning");
    const double r = g / delta;
    return r * r * kappa;
}

double single_pole_rate(double g, double delta_qr, double kappa_r, double omega_r, double omega_f, double kappa_f) {
    if (!(kappa_f > 0.0)) throw InvalidArgument("purcell_single_pole", "kappa_f must be positive");
    const double delta_qf = delta_qr + omega_r - omega_f;
    const double rf = 2.0 * (omega_r - omega_f) / kappa_f;
    const double qf = 2.0 * delta_qf / kappa_f;
    const double kappa_tilde = kappa_r * (1.0 + rf * rf);
    return direct_rate(g, delta_qr, kappa_tilde) / (1.0 + qf * qf);
}

}  // namespace

double purcell_direct(double g, double delta, double kappa) {
    warn_if_not_dispersive(g, delta);
    return direct_rate(g, delta, kappa);
}

double purcell_impedance_ratio(double g, double delta, double kappa, double re_z_qubit, double re_z_resonator) {
    if (!(re_z_resonator > 0.0)) throw InvalidArgument("purcell_impedance_ratio", "Re Z at the resonator must be positive");
    return purcell_direct(g, delta, kappa) * re_z_qubit / re_z_resonator;
}

double purcell_single_pole(double g, double delta_qr, double kappa_r, double omega_r, double omega_f, double kappa_f) {
    warn_if_not_dispersive(g, delta_qr);
    return single_pole_rate(g, delta_qr, kappa_r, omega_r, omega_f, kappa_f);
}

double t1_us(double gamma_per_ns) {
    if (gamma_per_ns <= 0.0) return std::numeric_limits<double>::infinity();
    return 1e-3 / gamma_per_ns;
}

// ---------------------------------------------------------------------------

int LinearNetwork::add_node(std::string name) {
    if (name.empty()) name = "n" + std::to_string(names_.size());
    names_.push_back(std::move(name));
    return node_count() - 1;
}

void LinearNetwork::check_node(int n, const char* op) const {
    if (n != kGround && (n < 0 || n >= node_count())) throw InvalidArgument(op, "unknown node");
}

void LinearNetwork::add_capacitor(int a, int b, double c_ff) {
    check_node(a, "add_capacitor");
    check_node(b, "add_capacitor");
    if (!(c_ff >= 0.0)) throw InvalidSpec("add_capacitor", "capacitance must be non-negative");
    if (c_ff > 0.0 && a != b) caps_.push_back({a, b, c_ff});
}

int LinearNetwork::add_inductor(int a, int b, double l_nh) {
    check_node(a, "add_inductor");
    check_node(b, "add_inductor");
    if (!(l_nh > 0.0)) throw InvalidSpec("add_inductor", "inductance must be positive");
    inductors_.push_back({a, b, l_nh});
    return static_cast<int>(inductors_.size()) - 1;
}

void LinearNetwork::add_mutual(int branch_a, int branch_b, double m_nh) {
    const int nb = static_cast<int>(inductors_.size());
    if (branch_a < 0 || branch_a >= nb || branch_b < 0 || branch_b >= nb || branch_a == branch_b)
        throw InvalidArgument("add_mutual", "unknown inductor branch");
    if (m_nh != 0.0) mutuals_.push_back({double(branch_a), double(branch_b), m_nh});
}

void LinearNetwork::add_resistor(int a, int b, double r_ohm) {
    check_node(a, "add_resistor");
    check_node(b, "add_resistor");
    if (!(r_ohm > 0.0)) throw InvalidSpec("add_resistor", "resistance must be positive");
    resistors_.push_back({a, b, r_ohm});
}

Eigen::MatrixXcd LinearNetwork::nodal_matrix(double omega) const {
    if (!(omega > 0.0)) throw InvalidArgument("nodal_matrix", "omega must be positive");
    const int n = node_count();
    Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n, n);
    auto stamp = [&](int a, int b, std::complex<double> v) {
        if (a >= 0) y(a, a) += v;
        if (b >= 0) y(b, b) += v;
        if (a >= 0 && b >= 0) {
            y(a, b) -= v;
            y(b, a) -= v;
        }
    };
    const std::complex<double> jw(0.0, omega);
    for (const auto& c : caps_) stamp(c.a, c.b, jw * c.value * kCapToSiemens);
    for (const auto& r : resistors_) stamp(r.a, r.b, 1.0 / r.value);

    const int nb = static_cast<int>(inductors_.size());
    if (nb > 0) {
        // branch inductance matrix, inverted once; ohm = nH * rad/ns
        Eigen::MatrixXd lb = Eigen::MatrixXd::Zero(nb, nb);
        for (int k = 0; k < nb; ++k) lb(k, k) = inductors_[k].value;
        for (const auto& m : mutuals_) {
            const int a = static_cast<int>(m[0]), b = static_cast<int>(m[1]);
            lb(a, b) += m[2];
            lb(b, a) += m[2];
        }
        Eigen::LLT<Eigen::MatrixXd> llt(lb);
        if (llt.info() != Eigen::Success) throw NotPositiveDefinite("nodal_matrix", "inductance matrix is not positive definite");
        const Eigen::MatrixXd gamma = llt.solve(Eigen::MatrixXd::Identity(nb, nb));
        Eigen::MatrixXd inc = Eigen::MatrixXd::Zero(n, nb);
        for (int k = 0; k < nb; ++k) {
            if (inductors_[k].a >= 0) inc(inductors_[k].a, k) += 1.0;
            if (inductors_[k].b >= 0) inc(inductors_[k].b, k) -= 1.0;
        }
        y += (inc * gamma * inc.transpose()).cast<std::complex<double>>() / jw;
    }
    return y;
}

LinearNetwork::Admittance LinearNetwork::solve(int node, double omega) const {
    const Eigen::MatrixXcd y = nodal_matrix(omega);
    const int n = node_count();
    // Drive `node` at 1 V and solve for the rest.
    std::vector<int> rest;
    for (int k = 0; k < n; ++k)
        if (k != node) rest.push_back(k);
    const int m = static_cast<int>(rest.size());
    Eigen::MatrixXcd yoo(m, m);
    Eigen::VectorXcd rhs(m);
    for (int i = 0; i < m; ++i) {
        rhs(i) = -y(rest[i], node);
        for (int j = 0; j < m; ++j) yoo(i, j) = y(rest[i], rest[j]);
    }
    Admittance out;
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(n);
    v(node) = 1.0;
    if (m > 0) {
        Eigen::PartialPivLU<Eigen::MatrixXcd> lu(yoo);
        out.singular = !(lu.rcond() > 1e-14);
        const Eigen::VectorXcd vo = lu.solve(rhs);
        for (int i = 0; i < m; ++i) v(rest[i]) = vo(i);
    }
    out.Y = (y.row(node) * v)(0);
    double p = 0.0;
    for (const auto& r : resistors_) {
        const std::complex<double> va = r.a >= 0 ? v(r.a) : 0.0, vb = r.b >= 0 ? v(r.b) : 0.0;
        p += std::norm(va - vb) / r.value;
    }
    out.re_Y = p;
    return out;
}

LinearNetwork::Admittance LinearNetwork::admittance(int node, double omega) const {
    if (node < 0 || node >= node_count()) throw InvalidArgument("admittance", "unknown node");
    Admittance a = solve(node, omega);
    if (!a.singular) return a;
    const Admittance lo = solve(node, omega * (1.0 - 1e-6)), hi = solve(node, omega * (1.0 + 1e-6));
    a.Y = 0.5 * (lo.Y + hi.Y);
    a.re_Y = 0.5 * (lo.re_Y + hi.re_Y);
    spdlog::warn("admittance: nodal matrix singular at {:.6f} GHz, averaging neighbours", units::radns_to_ghz(omega));
    return a;
}

// ---------------------------------------------------------------------------

std::string to_string(ReadoutTopology t) {
    switch (t) {
        case ReadoutTopology::direct: return "direct";
        case ReadoutTopology::single_pole: return "single_pole";
        case ReadoutTopology::metamaterial: return "metamaterial";
    }
    return "unknown";
}

void ReadoutNetwork::validate() const {
    const char* op = "ReadoutNetwork";
    metamaterial.validate();
    if (metamaterial.qubit_cells.size() != 1) throw InvalidSpec(op, "exactly one qubit cell is read out");
    for (double v : {Lr, Cr, Cqr, Crw, Z0, taper.L})
        if (!(v > 0.0)) throw InvalidSpec(op, "element values must be positive");
    for (int k = 0; k < 4; ++k)
        if (!(taper.coupling[k] > 0.0) || !(taper.shunt[k] > 0.0)) throw InvalidSpec(op, "taper capacitances must be positive");
}

ReadoutNetwork device_readout_network() {
    ReadoutNetwork net;
    net.metamaterial = presets::fitted_device(42);
    // ten qubits on the inner cells 17..26; R5 belongs to the fifth
    net.metamaterial.qubit_cells = {21};
    net.taper.L = net.metamaterial.L0;
    return net;
}

LinearNetwork build_network(const ReadoutNetwork& net, int* qubit_node) {
    net.validate();
    const CircuitSpec& s = net.metamaterial;
    LinearNetwork nw;
    const int n = s.n_cells;
    std::vector<int> cell(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) cell[i] = nw.add_node("cell" + std::to_string(i + 1));
    const int q = nw.add_node("qubit");
    const int r = nw.add_node("resonator");
    const int active = s.qubit_cells[0] - 1;

    std::vector<int> branch(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        nw.add_capacitor(cell[i], LinearNetwork::kGround, s.C0);
        branch[i] = nw.add_inductor(cell[i], LinearNetwork::kGround, s.L0);
        for (int j = i + 1; j < n; ++j) nw.add_capacitor(cell[i], cell[j], s.ct(j - i));
        for (int j = 0; j < n; ++j) {
            // qubit at cell j couples to cell i through C_g,|i-j|
            if (j == active) continue;
            if (s.idle_qubit_loading) nw.add_capacitor(cell[i], LinearNetwork::kGround, s.cg(std::abs(i - j)));
        }
        nw.add_capacitor(cell[i], q, s.cg(std::abs(i - active)));
    }
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) nw.add_mutual(branch[i], branch[j], s.mutual_nH(j - i));

    nw.add_capacitor(q, r, net.Cqr);
    nw.add_capacitor(r, LinearNetwork::kGround, net.Cr);
    nw.add_inductor(r, LinearNetwork::kGround, net.Lr);
    nw.add_capacitor(r, cell[active], net.Crw);

    auto terminate = [&](int edge_cell, const std::string& side) {
        const int port = nw.add_node("port_" + side);
        nw.add_resistor(port, LinearNetwork::kGround, net.Z0);
        if (!net.tapered) {
            nw.add_capacitor(port, cell[edge_cell], s.ct(1));
            return;
        }
        int prev = port;
        for (int k = 0; k < 4; ++k) {
            const int stage = nw.add_node("taper_" + side + std::to_string(k + 1));
            nw.add_capacitor(prev, stage, net.taper.coupling[k]);
            nw.add_capacitor(stage, LinearNetwork::kGround, net.taper.shunt[k]);
            nw.add_inductor(stage, LinearNetwork::kGround, net.taper.L);
            prev = stage;
        }
        nw.add_capacitor(prev, cell[edge_cell], s.ct(1));
    };
    terminate(0, "left");
    terminate(n - 1, "right");
    if (qubit_node) *qubit_node = q;
    return nw;
}

namespace {

struct PreparedNetwork {
    LinearNetwork nw;
    int q = 0;
    Dispersion band;
};

PreparedNetwork prepare(const ReadoutNetwork& net) {
    PreparedNetwork p;
    p.nw = build_network(net, &p.q);
    p.band = dispersion_from_spec(net.metamaterial);
    return p;
}

NetworkAdmittance evaluate(const PreparedNetwork& p, double omega) {
    const auto a = p.nw.admittance(p.q, omega);
    NetworkAdmittance out;
    out.Y = a.Y;
    out.re_Y = a.re_Y;
    out.singular = a.singular;
    const double margin = units::ghz_to_radns(0.1);
    out.near_band_edge = std::abs(omega - p.band.band_lower) < margin || std::abs(omega - p.band.band_upper) < margin;
    return out;
}

}  // namespace

NetworkAdmittance network_admittance(const ReadoutNetwork& net, double omega) {
    if (!(omega > 0.0)) throw InvalidArgument("network_admittance", "omega must be positive");
    return evaluate(prepare(net), omega);
}

double purcell_from_admittance(const ReadoutNetwork& net, double omega01, double cq_sigma_ff) {
    if (!(cq_sigma_ff > 0.0)) throw InvalidArgument("purcell_from_admittance", "C_qSigma must be positive");
    const NetworkAdmittance y = network_admittance(net, omega01);
    // S / fF -> 1/ns
    return y.re_Y * 1e6 / cq_sigma_ff;
}

std::vector<PurcellSample> purcell_sweep(const ReadoutNetwork& net, const PurcellSweepOptions& opt) {
    const char* op = "purcell_sweep";
    if (opt.points < 2 || !(opt.f_max_ghz > opt.f_min_ghz) || !(opt.f_min_ghz > 0.0))
        throw InvalidArgument(op, "need at least two points on a positive, increasing range");
    if (!(opt.cq_sigma_ff > 0.0) || !(opt.q_filter > 0.0)) throw InvalidArgument(op, "C_qSigma and Q_f must be positive");
    const int n = opt.points;
    const double df = (opt.f_max_ghz - opt.f_min_ghz) / (n - 1);
    const double g = units::mhz_to_radns(opt.g_mhz);
    const double kappa = units::mhz_to_radns(opt.kappa_r_mhz);
    const double wr = units::ghz_to_radns(opt.f_r_ghz);
    const double kf = wr / opt.q_filter;

    std::vector<PurcellSample> out(static_cast<std::size_t>(3 * n));
    const PreparedNetwork prepared = prepare(net);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
        const double f = opt.f_min_ghz + static_cast<double>(i) * df;
        const double w = units::ghz_to_radns(f);
        auto fill = [&](std::size_t row, ReadoutTopology t, double gamma, bool flag) {
            PurcellSample s;
            s.freq_ghz = f;
            s.topology = t;
            s.re_Y = gamma * opt.cq_sigma_ff * 1e-6;
            s.t1_us = t1_us(gamma);
            s.flagged = flag;
            out[row] = s;
        };
        const bool on_resonance = w == wr;
        const double gd = on_resonance ? std::numeric_limits<double>::infinity() : direct_rate(g, w - wr, kappa);
        const double gs = on_resonance ? std::numeric_limits<double>::infinity()
                                       : single_pole_rate(g, w - wr, kappa, wr, wr, kf);
        fill(i, ReadoutTopology::direct, gd, on_resonance);
        fill(n + i, ReadoutTopology::single_pole, gs, on_resonance);
        const NetworkAdmittance y = evaluate(prepared, w);
        fill(2 * n + i, ReadoutTopology::metamaterial, y.re_Y * 1e6 / opt.cq_sigma_ff, y.singular || y.near_band_edge);
    });
    return out;
}

}  // namespace bgs
