#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace bgs {

// P(z | zeta): column zeta is the prepared bit-string, row z the assigned one.
// Codes put qubit 0 (site 1) on the most significant bit.
class AssignmentMatrix {
public:
    static constexpr int kMaxFullQubits = 12;

    static AssignmentMatrix full(Eigen::MatrixXd p, std::string provenance = {});
    // One 2x2 column-stochastic factor per qubit, same row/column convention.
    static AssignmentMatrix tensor(std::vector<Eigen::Matrix2d> factors, std::string provenance = {});
    // Identical factors with P(1|0) = e10 and P(0|1) = e01.
    static AssignmentMatrix uniform_tensor(int n_qubits, double e10, double e01, std::string provenance = {});

    int n_qubits() const { return n_; }
    std::uint64_t dimension() const { return std::uint64_t{1} << n_; }
    bool is_tensor() const { return !factors_.empty(); }
    const std::string& provenance() const { return provenance_; }

    // TensorOnly when only factors are stored.
    const Eigen::MatrixXd& matrix() const;
    const std::vector<Eigen::Matrix2d>& factors() const;
    // Expands factors; InvalidArgument beyond kMaxFullQubits.
    AssignmentMatrix to_full() const;

    double element(std::uint64_t z, std::uint64_t zeta) const;
    Eigen::VectorXd apply(const Eigen::VectorXd& p) const;
    Eigen::VectorXd apply_transpose(const Eigen::VectorXd& r) const;
    // Unconstrained A^-1 b.
    Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
    // 2-norm condition number; products of per-factor values for the tensor form.
    double condition_number() const;

private:
    int n_ = 0;
    Eigen::MatrixXd full_;
    std::vector<Eigen::Matrix2d> factors_;
    std::string provenance_;
};

double fidelity_nq(const AssignmentMatrix& a);

// Bit-flip rates: averages of P(z|zeta) over prepared zeta with the given
// states on the named qubits, where z differs from zeta exactly on those qubits.
// Full matrices are enumerated; tensor factors use the closed form.
double error_rate_e1(const AssignmentMatrix& a, int qubit, int state);
double error_rate_e2(const AssignmentMatrix& a, int qubit_i, int qubit_j, int state_i, int state_j);
// Enumeration only; TensorOnly for factor-only matrices.
double error_rate_e1_enumerated(const AssignmentMatrix& a, int qubit, int state);
double error_rate_e2_enumerated(const AssignmentMatrix& a, int qubit_i, int qubit_j, int state_i, int state_j);

// Euclidean projection onto the probability simplex.
Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v);

struct MitigationOptions {
    double tolerance = 1e-13;  // on the L1 step
    int max_iterations = 20000;
    double max_condition = 1e8;
};

struct MitigationResult {
    Eigen::VectorXd p;          // on the simplex
    Eigen::VectorXd unconstrained;
    double condition_number = 0.0;
    bool ill_conditioned = false;
    bool converged = false;
    int iterations = 0;
    double residual = 0.0;      // ||A p - b||_2
};

// min ||A p - counts/sum||^2 over the simplex, accelerated projected gradient
// started from the projected unconstrained inverse.
MitigationResult mitigate(const Eigen::VectorXd& counts, const AssignmentMatrix& a, const MitigationOptions& opt = {});
MitigationResult mitigate(const std::map<std::uint64_t, long long>& counts, const AssignmentMatrix& a,
                          const MitigationOptions& opt = {});

// Multinomial counts of `shots` draws from p over codes 0..p.size()-1.
Eigen::VectorXd sample_counts(const Eigen::VectorXd& p, long long shots, std::uint64_t seed);

double total_variation(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

// Full form as CSV (assigned code per row, prepared code per column);
// tensor form as JSON {"n_qubits", "provenance", "factors": [[[P00,P01],[P10,P11]], ...]}.
void write_assignment_csv(const std::filesystem::path& path, const AssignmentMatrix& a);
AssignmentMatrix read_assignment_csv(const std::filesystem::path& path);
void write_assignment_json(const std::filesystem::path& path, const AssignmentMatrix& a);
AssignmentMatrix read_assignment_json(const std::filesystem::path& path);

}  // namespace bgs
