#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "bandgapsim/manybody.hpp"

namespace bgs {

// Post-selected bit-string distributions indexed [z_init][tau].
struct FidelityDataset {
    SectorPtr sector;  // hardcore sector seen by readout
    std::vector<std::string> z_init;
    std::vector<double> taus;  // ns
    std::vector<std::vector<BitstringDistribution>> data;
    long long shots = 0;  // 0 marks exact (infinite-shot) data

    void validate() const;
};

inline const std::vector<double> kDefaultTaus{76, 148, 260, 420, 600, 780};

double many_body_fidelity(const Eigen::MatrixXcd& rho, const Eigen::VectorXcd& psi);
double many_body_fidelity(const Eigen::VectorXcd& phi, const Eigen::VectorXcd& psi);

// Diagonal ensemble; eigenvalues closer than degeneracy_tol share a block and
// are summed coherently.
Eigen::VectorXd time_averaged_probs(const SectorPropagator& prop, const Eigen::VectorXcd& psi0,
                                    double degeneracy_tol = 1e-9);
Eigen::VectorXd time_averaged_probs(const BoseHubbardParams& params, SectorPtr sector, const Eigen::VectorXcd& psi0,
                                    double degeneracy_tol = 1e-9);

// F_d = 2 sum(p p^T / pbar) / sum((p^T)^2 / pbar) - 1. Outcomes with pbar = 0
// are dropped; ZeroTimeAverage if theory weight sits on one of them.
double fd_estimator(const Eigen::VectorXd& p_exp, const Eigen::VectorXd& p_theory, const Eigen::VectorXd& p_bar);

// Trial Hamiltonians: n-1 nearest-neighbour couplings followed by one shared
// value per distance 2..n-1 (17 parameters for 10 sites).
class TrialFamily {
public:
    TrialFamily(BoseHubbardParams base, Eigen::VectorXd lower, Eigen::VectorXd upper);
    // Bounds of +-scale*|x0_k| around zero for every coordinate.
    static TrialFamily around(const BoseHubbardParams& base, const Eigen::VectorXd& x0, double scale = 3.0);

    int n_sites() const { return base_.n_sites; }
    int size() const { return static_cast<int>(lower_.size()); }
    const BoseHubbardParams& base() const { return base_; }
    const Eigen::VectorXd& lower() const { return lower_; }
    const Eigen::VectorXd& upper() const { return upper_; }

    BoseHubbardParams apply(const Eigen::VectorXd& x) const;
    // Parameter vector read back from a J matrix (distance-averaged beyond NN).
    Eigen::VectorXd extract(const Eigen::MatrixXd& J) const;
    // b_i -> (-1)^i b_i flips every odd-distance coupling without changing any
    // bit-string probability. Representative with a non-negative NN sum.
    Eigen::VectorXd canonical_gauge(const Eigen::VectorXd& x) const;

    static int parameter_count(int n_sites) { return 2 * n_sites - 3; }
    std::string parameter_name(int index) const;

private:
    BoseHubbardParams base_;
    Eigen::VectorXd lower_, upper_;
};

struct FdSummary {
    double mean = 0.0;
    double sem = 0.0;                 // spread of per-z_init means / sqrt(count)
    std::vector<double> per_tau;      // averaged over z_init
    std::vector<double> per_z;        // averaged over tau
    std::vector<std::vector<double>> values;  // [z_init][tau]
};

// Evaluates trial Hamiltonians against a dataset, caching eigendecompositions
// by parameter content. Safe for concurrent callers.
class FdEvaluator {
public:
    explicit FdEvaluator(const FidelityDataset& dataset, std::size_t cache_capacity = 8);
    FdSummary evaluate(const BoseHubbardParams& trial) const;
    std::size_t evaluations() const;

private:
    struct Impl;
    std::shared_ptr<Impl> impl_;
};

FdSummary averaged_fd(const FidelityDataset& dataset, const BoseHubbardParams& trial);

// Simulated data: readout projection of the hidden model's distributions,
// sampled with `shots` per point (0 keeps exact probabilities).
FidelityDataset synthesize_dataset(const BoseHubbardParams& truth, const std::vector<std::string>& z_init,
                                   const std::vector<double>& taus, long long shots, std::uint64_t seed);

// n distinct random bit-strings with k ones.
std::vector<std::string> random_initial_states(int n_sites, int n_excitations, int count, std::uint64_t seed);

struct GreedyOptions {
    int rounds = 11;
    std::uint64_t seed = 0;
    int grid_points = 5;             // coarse scan before the bracketed search
    int line_iterations = 12;        // Brent iterations per coordinate
    double min_improvement = 1e-4;   // per round
    double curvature_step = 0.02;    // relative step for the interval estimate
};

struct LearnReport {
    Eigen::VectorXd x;
    Eigen::VectorXd x_canonical;
    std::vector<double> fd_trace;   // F_d mean after each round, first entry at x0
    std::vector<double> fd_per_tau; // at the optimum
    double fd_sem = 0.0;
    Eigen::VectorXd interval;       // 68% half-widths from the F_d curvature
    bool no_improvement = false;
    int rounds_run = 0;
    std::size_t evaluations = 0;
};

LearnReport greedy_optimize(const FidelityDataset& dataset, const TrialFamily& family, const Eigen::VectorXd& x0,
                            const GreedyOptions& options = {});

std::vector<double> fd_coordinate_profile(const FidelityDataset& dataset, const TrialFamily& family,
                                          const Eigen::VectorXd& x, int index, const std::vector<double>& grid);

// Half-width where the quadratic fit of F_d drops by sigma: sqrt(2 sigma / curvature).
double curvature_interval(const FdEvaluator& eval, const TrialFamily& family, const Eigen::VectorXd& x, int index,
                          double step, double sigma);

}  // namespace bgs
