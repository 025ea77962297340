#pragma once

#include <Eigen/Dense>
#include <vector>

namespace bgs {

// Electrical description of the coupled-resonator lattice with transmons.
// Distance-indexed lists: Ct[x-1] = C_t,x, M[x-1] = M_x (pH), Cg[x] = C_g,x,
// Cqq[x-1] = C_qq,x. Distances past the end of a list contribute nothing.
struct CircuitSpec {
    int n_cells = 0;
    double L0 = 0.0;  // nH
    double C0 = 0.0;  // fF
    std::vector<double> Ct;
    std::vector<double> M;
    std::vector<double> Cg;
    std::vector<double> Cqq;
    double Cq = 0.0;              // fF
    std::vector<double> EJ;       // E_J/h in GHz, one per qubit
    std::vector<int> qubit_cells; // 1-based cell indices
    // Cells without an active qubit still host a grounded idle transmon whose
    // C_g / C_qq capacitors load the lattice (every unit cell carries a qubit).
    bool idle_qubit_loading = true;

    int n_qubits() const { return static_cast<int>(qubit_cells.size()); }
    double ct(int x) const;
    double mutual_nH(int x) const;
    double cg(int x) const;
    double cqq(int x) const;

    // Throws InvalidSpec on any violated invariant.
    void validate() const;
};

struct Dispersion {
    double omega_c = 0.0;  // rad/ns
    double t = 0.0;        // rad/ns
    double d = 1.0;
    double band_lower = 0.0;
    double band_upper = 0.0;
};

struct SecondQuantizedCouplings {
    Eigen::VectorXd omega_n;   // resonators
    Eigen::VectorXd omega_q;   // qubits, omega_01
    Eigen::VectorXd U_q;       // anharmonicities, negative
    Eigen::MatrixXd t_matrix;  // resonator-resonator
    Eigen::MatrixXd g_matrix;  // rows: resonators, cols: qubits
    Eigen::MatrixXd Jprime;    // qubit-qubit
    Eigen::VectorXd Z_n;
    Eigen::VectorXd Z_q;
    Eigen::VectorXd EC_ghz;

    int n_resonators() const { return static_cast<int>(omega_n.size()); }
    int n_qubits() const { return static_cast<int>(omega_q.size()); }
    int n_modes() const { return n_resonators() + n_qubits(); }
    // Single-excitation block over (resonators, qubits).
    Eigen::MatrixXd single_excitation_hamiltonian() const;
};

inline constexpr int kExactOrder = -1;

Eigen::MatrixXd capacitance_matrix(const CircuitSpec& spec);
// Resonator inductance matrix in nH (L0 on the diagonal, M_|x| off it).
Eigen::MatrixXd inductance_matrix(const CircuitSpec& spec);

// Neumann truncation of C^-1 around its diagonal; kExactOrder returns the exact inverse.
Eigen::MatrixXd first_order_inverse(const CircuitSpec& spec, int order);
// Same expansion applied to an arbitrary matrix.
Eigen::MatrixXd neumann_inverse(const Eigen::MatrixXd& c, int order);

Dispersion dispersion_closed_form(const CircuitSpec& spec);
Dispersion dispersion_periodic(const CircuitSpec& spec, int n_periodic = 256,
                               int inverse_order = kExactOrder);
// Closed form for nearest-neighbour specs, periodic-chain extrema otherwise.
Dispersion dispersion_from_spec(const CircuitSpec& spec, int n_periodic = 256);
bool is_nearest_neighbour(const CircuitSpec& spec);

SecondQuantizedCouplings second_quantize(const CircuitSpec& spec);
// Quantization from explicit capacitance/inductance data; used by second_quantize
// and the periodic dispersion path.
SecondQuantizedCouplings quantize_matrices(const Eigen::MatrixXd& c_inv, const Eigen::MatrixXd& l_inv,
                                           const std::vector<double>& ej_ghz);

CircuitSpec longrange_tail_fill(const CircuitSpec& base, int cutoff = 10);

double lattice_integral_I(int n, double a);
double localization_length(double delta, double t);
// Exchange coupling mediated by the band; distance 0 gives the Lamb shift.
double bandgap_exchange_J(double g_n, double g_np, double delta_n, double delta_np, double t,
                          int distance);

}  // namespace bgs
