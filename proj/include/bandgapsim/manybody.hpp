#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "bandgapsim/fock.hpp"
#include "bandgapsim/linalg.hpp"

namespace bgs {

using SectorPtr = std::shared_ptr<const FockSector>;

inline constexpr int kMaxSectorDimension = 4000;

SectorPtr make_sector(int n_sites, int n_excitations, int max_occupancy);

struct BitstringDistribution {
    SectorPtr sector;
    Eigen::VectorXd p;
    std::optional<long long> shots;

    int dimension() const { return static_cast<int>(p.size()); }
    void validate(double tol = 1e-9) const;
};

struct QuenchResult {
    SectorPtr sector;
    std::vector<double> times;                 // ns
    Eigen::MatrixXd probabilities;             // dimension x times
    Eigen::MatrixXd populations;               // times x sites
    std::vector<Eigen::MatrixXd> correlators;  // <n_i n_j> per time
    // Mean overlap with the noiseless state; identically 1 for noiseless runs.
    Eigen::VectorXd fidelity;

    BitstringDistribution distribution(std::size_t time_index) const;
};

struct NoiseModel {
    Eigen::VectorXd dephasing_rate;  // per site, 1/ns
    Eigen::VectorXd decay_rate;      // per site, 1/ns; not simulated
    std::uint64_t seed = 0;

    void validate(int n_sites) const;
    bool noiseless() const;
    static NoiseModel uniform_dephasing(int n_sites, double t2_ns, std::uint64_t seed);
};

// Phase flips at rate gamma kill single-site coherence as exp(-2 gamma t).
double dephasing_rate_for_t2(double t2_ns);

// Eigendecomposition of one sector Hamiltonian, reused for every evolution.
class SectorPropagator {
public:
    SectorPropagator(const BoseHubbardParams& params, SectorPtr sector);

    const SectorPtr& sector() const { return sector_; }
    const SymEig& eig() const { return eig_; }
    const Eigen::MatrixXd& hamiltonian() const { return h_; }
    int dimension() const { return static_cast<int>(eig_.values.size()); }

    Eigen::VectorXcd state_at(const Eigen::VectorXcd& psi0, double t) const;

private:
    SectorPtr sector_;
    Eigen::MatrixXd h_;
    SymEig eig_;
};

Eigen::VectorXcd basis_state(const FockSector& sector, std::string_view label);

QuenchResult evolve(const SectorPropagator& prop, const Eigen::VectorXcd& psi0, const std::vector<double>& times);
QuenchResult evolve(const BoseHubbardParams& params, SectorPtr sector, const Eigen::VectorXcd& psi0,
                    const std::vector<double>& times);

// Monte Carlo unravelling of site-local phase flips (exp(i pi n_i) on a flip).
// Zero rates fall through to evolve(). Averages are accumulated in fixed
// blocks of trajectories and combined pairwise, so the result does not depend
// on the worker count.
QuenchResult evolve_trajectories(const SectorPropagator& prop, const Eigen::VectorXcd& psi0,
                                 const std::vector<double>& times, const NoiseModel& noise, int n_traj);
QuenchResult evolve_trajectories(const BoseHubbardParams& params, SectorPtr sector, const Eigen::VectorXcd& psi0,
                                 const std::vector<double>& times, const NoiseModel& noise, int n_traj);

double second_moment(const Eigen::VectorXd& p);
double second_moment(const BitstringDistribution& dist);

struct PtHistogram {
    int D = 0;
    std::vector<double> edges;             // bins + 1, in units of p
    std::vector<double> density;           // normalized histogram
    std::vector<double> pt_density;        // D exp(-D p) at bin centres
    std::vector<double> finite_d_density;  // (D-1)(1-p)^(D-2) at bin centres
    double ks_statistic = 0.0;             // against the PT cdf 1 - exp(-D p)
    double ks_p_value = 1.0;
};

// Pooled overlap probabilities from one or more distributions of dimension D.
PtHistogram pt_histogram(const std::vector<double>& p_values, int D, int bins = 30);
PtHistogram pt_histogram(const BitstringDistribution& dist, int bins = 30);

// Multinomial counts indexed like the sector states.
std::vector<long long> sample_bitstrings(const BitstringDistribution& dist, long long shots, std::uint64_t seed);

// Counts keyed by bit-string code over all 2^n outcomes (site 1 most significant).
BitstringDistribution postselect(const std::map<std::uint64_t, long long>& counts, int n_sites, int n_excitations);

double mu2_fidelity_ansatz(double F, int D);

// Readout sees only 0/1 per site: keep states without doublons and renormalize
// onto the hardcore sector of the same excitation number.
BitstringDistribution project_to_bitstrings(const BitstringDistribution& dist);

// Removes a common site-energy offset; within a sector it is a global phase.
BoseHubbardParams rotating_frame(const BoseHubbardParams& params, double offset);

}  // namespace bgs
