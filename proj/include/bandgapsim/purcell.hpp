#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <string>
#include <vector>

#include "bandgapsim/lattice_circuit.hpp"

namespace bgs {

// Rates are angular (rad/ns) throughout, like every other frequency here.
double purcell_direct(double g, double delta, double kappa);
// Frequency-dependent port impedance: (g/Delta)^2 Re Z(w01) / Re Z(w_r) kappa.
double purcell_impedance_ratio(double g, double delta, double kappa, double re_z_qubit, double re_z_resonator);
double purcell_single_pole(double g, double delta_qr, double kappa_r, double omega_r, double omega_f, double kappa_f);

// T1 in microseconds for a rate in 1/ns; infinity for a zero rate.
double t1_us(double gamma_per_ns);

// Lumped linear network for nodal analysis. Nodes are 0..n-1, kGround is the
// reference. Units: fF, nH, ohm; admittances come out in siemens.
class LinearNetwork {
public:
    static constexpr int kGround = -1;

    int add_node(std::string name = {});
    int node_count() const { return static_cast<int>(names_.size()); }
    const std::string& node_name(int node) const { return names_.at(node); }

    void add_capacitor(int a, int b, double c_ff);
    // Returns the branch index so mutual couplings can refer to it.
    int add_inductor(int a, int b, double l_nh);
    void add_mutual(int branch_a, int branch_b, double m_nh);
    void add_resistor(int a, int b, double r_ohm);

    // Full nodal admittance matrix at w (rad/ns).
    Eigen::MatrixXcd nodal_matrix(double omega) const;

    struct Admittance {
        std::complex<double> Y;  // S
        double re_Y = 0.0;       // dissipated power per |V|^2, never negative
        bool singular = false;   // matrix was near-singular; value averaged at w(1 +- 1e-6)
    };
    // Admittance seen between `node` and ground with everything else in place.
    Admittance admittance(int node, double omega) const;

private:
    struct Branch {
        int a, b;
        double value;
    };
    std::vector<std::string> names_;
    std::vector<Branch> caps_, inductors_, resistors_;
    std::vector<std::array<double, 3>> mutuals_;  // branch a, branch b, M

    void check_node(int n, const char* op) const;
    Admittance solve(int node, double omega) const;
};

// Four-stage ladder between a 50 ohm port and the lattice. coupling[0] faces
// the port, coupling[k] joins stage k-1 to stage k; the last stage meets cell 1
// through the lattice's own C_t,1.
struct TaperSpec {
    double L = 2.04;  // nH
    std::array<double, 4> coupling{222.8, 77.3, 53.8, 65.3};
    std::array<double, 4> shunt{51.0, 210.7, 298.1, 293.1};
};

enum class ReadoutTopology { direct, single_pole, metamaterial };
std::string to_string(ReadoutTopology t);

struct ReadoutNetwork {
    CircuitSpec metamaterial;  // lattice; qubit_cells[0] is the cell under readout
    TaperSpec taper;
    bool tapered = true;
    double Lr = 4.518;   // nH
    double Cr = 130.5;   // fF
    double Cqr = 10.3;   // fF
    double Crw = 6.8;    // fF
    double Z0 = 50.0;    // ohm

    void validate() const;
};

// 42-cell fitted lattice with the fifth of ten inner qubits under readout.
ReadoutNetwork device_readout_network();

struct NetworkAdmittance {
    std::complex<double> Y;
    double re_Y = 0.0;
    bool singular = false;
    bool near_band_edge = false;  // within 100 MHz of a passband edge
};

// Builds the nodal model: both tapers terminated in Z0, idle qubits grounded
// through their C_g, the qubit capacitor and junction left out.
LinearNetwork build_network(const ReadoutNetwork& net, int* qubit_node = nullptr);
NetworkAdmittance network_admittance(const ReadoutNetwork& net, double omega);
// Gamma = Re Y(w01) / C_qSigma in 1/ns; zero when Re Y is zero.
double purcell_from_admittance(const ReadoutNetwork& net, double omega01, double cq_sigma_ff);

struct PurcellSample {
    double freq_ghz = 0.0;
    double re_Y = 0.0;  // S; Gamma * C_qSigma for the formula-based topologies
    double t1_us = 0.0;
    ReadoutTopology topology = ReadoutTopology::direct;
    bool flagged = false;
};

struct PurcellSweepOptions {
    double f_min_ghz = 3.0;
    double f_max_ghz = 8.0;
    int points = 2001;
    double g_mhz = 250.0;
    double kappa_r_mhz = 9.85;
    double f_r_ghz = 6.01;
    double q_filter = 15.0;
    double cq_sigma_ff = 92.7;
};

// Rows ordered by topology, then frequency.
std::vector<PurcellSample> purcell_sweep(const ReadoutNetwork& net, const PurcellSweepOptions& opt);

}  // namespace bgs
