#include "bandgapsim/manybody.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>

#include "bandgapsim/errors.hpp"
#include "bandgapsim/parallel.hpp"
#include "bandgapsim/rng.hpp"
#include "bandgapsim/stats.hpp"

namespace bgs {

namespace {

constexpr int kTrajBlock = 8;        // trajectories summed serially per work item
constexpr int kBlocksPerBatch = 32;  // work items reduced pairwise before the running sum

Eigen::MatrixXd occupation_matrix(const FockSector& s) {
    Eigen::MatrixXd occ(s.dimension(), s.n_sites());
    for (int k = 0; k < s.dimension(); ++k)
        for (int i = 0; i < s.n_sites(); ++i) occ(k, i) = s.occupation(k, i);
    return occ;
}

void fill_observables(QuenchResult& r) {
    const Eigen::MatrixXd occ = occupation_matrix(*r.sector);
    r.populations = r.probabilities.transpose() * occ;
    r.correlators.resize(r.times.size());
    for (std::size_t t = 0; t < r.times.size(); ++t)
        r.correlators[t] = occ.transpose() * r.probabilities.col(static_cast<Eigen::Index>(t)).asDiagonal() * occ;
}

Eigen::VectorXcd coefficients(const SectorPropagator& prop, const Eigen::VectorXcd& psi0, const char* op) {
    if (psi0.size() != prop.dimension()) throw DimensionMismatch(op, "initial state does not match the sector");
    if (std::abs(psi0.norm() - 1.0) > 1e-9) throw InvalidArgument(op, "initial state must be normalized");
    const Eigen::MatrixXd& v = prop.eig().vectors;
    Eigen::VectorXcd c(psi0.size());
    c.real() = v.transpose() * psi0.real();
    c.imag() = v.transpose() * psi0.imag();
    return c;
}

// |V C|^2 column by column via two real GEMMs.
Eigen::MatrixXd site_probabilities(const Eigen::MatrixXd& v, const Eigen::MatrixXcd& c) {
    const Eigen::MatrixXd re = v * c.real();
    const Eigen::MatrixXd im = v * c.imag();
    return re.cwiseAbs2() + im.cwiseAbs2();
}

void check_times(const std::vector<double>& times, const char* op) {
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!std::isfinite(times[i])) throw InvalidArgument(op, "times must be finite");
        if (i > 0 && times[i] < times[i - 1]) throw InvalidArgument(op, "times must be non-decreasing");
    }
}

struct Accumulator {
    Eigen::MatrixXd p;
    Eigen::VectorXd f;
};

Accumulator pairwise_sum(std::vector<Accumulator>& parts, std::size_t lo, std::size_t hi) {
    if (hi - lo == 1) return std::move(parts[lo]);
    const std::size_t mid = lo + (hi - lo) / 2;
    Accumulator a = pairwise_sum(parts, lo, mid);
    const Accumulator b = pairwise_sum(parts, mid, hi);
    a.p += b.p;
    a.f += b.f;
    return a;
}

}  // namespace

SectorPtr make_sector(int n_sites, int n_excitations, int max_occupancy) {
    return std::make_shared<const FockSector>(n_sites, n_excitations, max_occupancy);
}

void BitstringDistribution::validate(double tol) const {
    const char* op = "BitstringDistribution";
    if (!sector) throw InvalidArgument(op, "missing sector");
    if (p.size() != sector->dimension()) throw DimensionMismatch(op, "probabilities do not match the sector");
    if ((p.array() < 0.0).any()) throw InvalidArgument(op, "negative probability");
    if (std::abs(p.sum() - 1.0) > tol) throw InvalidArgument(op, "probabilities do not sum to 1");
}

BitstringDistribution QuenchResult::distribution(std::size_t time_index) const {
    if (time_index >= times.size()) throw InvalidArgument("QuenchResult", "time index out of range");
    return {sector, probabilities.col(static_cast<Eigen::Index>(time_index)), std::nullopt};
}

void NoiseModel::validate(int n_sites) const {
    const char* op = "NoiseModel";
    for (const Eigen::VectorXd* v : {&dephasing_rate, &decay_rate}) {
        if (v->size() != 0 && v->size() != n_sites) throw DimensionMismatch(op, "rates need one entry per site");
        if (v->size() && (!v->allFinite() || (v->array() < 0.0).any()))
            throw InvalidArgument(op, "rates must be finite and non-negative");
    }
}

bool NoiseModel::noiseless() const { return dephasing_rate.size() == 0 || (dephasing_rate.array() == 0.0).all(); }

NoiseModel NoiseModel::uniform_dephasing(int n_sites, double t2_ns, std::uint64_t seed) {
    NoiseModel m;
    m.dephasing_rate = Eigen::VectorXd::Constant(n_sites, dephasing_rate_for_t2(t2_ns));
    m.decay_rate = Eigen::VectorXd::Zero(n_sites);
    m.seed = seed;
    return m;
}

double dephasing_rate_for_t2(double t2_ns) {
    if (!(t2_ns > 0.0)) throw InvalidArgument("dephasing_rate_for_t2", "T2 must be positive");
    return 0.5 / t2_ns;
}

SectorPropagator::SectorPropagator(const BoseHubbardParams& params, SectorPtr sector) : sector_(std::move(sector)) {
    if (!sector_) throw InvalidArgument("SectorPropagator", "missing sector");
    if (sector_->dimension() > kMaxSectorDimension)
        throw SectorTooLarge("SectorPropagator", "dimension " + std::to_string(sector_->dimension()) +
                                                     " exceeds the cap of " + std::to_string(kMaxSectorDimension));
    h_ = build_sector_hamiltonian(params, *sector_);
    eig_ = sym_eig(h_);
}

Eigen::VectorXcd SectorPropagator::state_at(const Eigen::VectorXcd& psi0, double t) const {
    const Eigen::VectorXcd c = coefficients(*this, psi0, "state_at");
    const Eigen::VectorXcd phase = (std::complex<double>(0.0, -t) * eig_.values.cast<std::complex<double>>()).array().exp();
    const Eigen::VectorXcd ct = phase.cwiseProduct(c);
    Eigen::VectorXcd out(ct.size());
    out.real() = eig_.vectors * ct.real();
    out.imag() = eig_.vectors * ct.imag();
    return out;
}

Eigen::VectorXcd basis_state(const FockSector& sector, std::string_view label) {
    const int k = sector.index_of_label(label);
    if (k < 0) throw InvalidArgument("basis_state", "state " + std::string(label) + " is not in the sector");
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(sector.dimension());
    psi(k) = 1.0;
    return psi;
}

QuenchResult evolve(const SectorPropagator& prop, const Eigen::VectorXcd& psi0, const std::vector<double>& times) {
    check_times(times, "evolve");
    const Eigen::VectorXcd c0 = coefficients(prop, psi0, "evolve");
    const Eigen::VectorXd& e = prop.eig().values;
    const Eigen::Index nt = static_cast<Eigen::Index>(times.size());
    Eigen::MatrixXcd c(c0.size(), nt);
    for (Eigen::Index t = 0; t < nt; ++t)
        for (Eigen::Index k = 0; k < c0.size(); ++k) c(k, t) = std::polar(1.0, -e(k) * times[t]) * c0(k);

    QuenchResult r;
    r.sector = prop.sector();
    r.times = times;
    r.probabilities = site_probabilities(prop.eig().vectors, c);
    r.fidelity = Eigen::VectorXd::Ones(nt);
    fill_observables(r);
    return r;
}

QuenchResult evolve(const BoseHubbardParams& params, SectorPtr sector, const Eigen::VectorXcd& psi0,
                    const std::vector<double>& times) {
    return evolve(SectorPropagator(params, std::move(sector)), psi0, times);
}

QuenchResult evolve_trajectories(const SectorPropagator& prop, const Eigen::VectorXcd& psi0,
                                 const std::vector<double>& times, const NoiseModel& noise, int n_traj) {
    const char* op = "evolve_trajectories";
    if (n_traj < 1) throw InvalidArgument(op, "n_traj must be at least 1");
    const FockSector& sector = *prop.sector();
    noise.validate(sector.n_sites());
    check_times(times, op);
    if (noise.noiseless()) return evolve(prop, psi0, times);
    if (!times.empty() && times.front() < 0.0) throw InvalidArgument(op, "times must be non-negative");

    const Eigen::VectorXcd c0 = coefficients(prop, psi0, op);
    const Eigen::MatrixXd& v = prop.eig().vectors;
    const Eigen::VectorXd& e = prop.eig().values;
    const Eigen::Index dim = c0.size();
    const Eigen::Index nt = static_cast<Eigen::Index>(times.size());
    const double t_end = times.empty() ? 0.0 : times.back();

    std::vector<Eigen::VectorXd> parity(static_cast<std::size_t>(sector.n_sites()));
    for (int s = 0; s < sector.n_sites(); ++s) {
        parity[s].resize(dim);
        for (Eigen::Index k = 0; k < dim; ++k) parity[s](k) = (sector.occupation(static_cast<int>(k), s) % 2) ? -1.0 : 1.0;
    }
    auto advance = [&](Eigen::VectorXcd& c, double dt) {
        for (Eigen::Index k = 0; k < dim; ++k) c(k) *= std::polar(1.0, -e(k) * dt);
    };

    auto run_block = [&](int first, int last) {
        Accumulator acc{Eigen::MatrixXd::Zero(dim, nt), Eigen::VectorXd::Zero(nt)};
        Eigen::MatrixXcd cs(dim, nt);
        for (int r = first; r < last; ++r) {
            CounterRng rng(noise.seed, static_cast<std::uint64_t>(r));
            std::vector<std::pair<double, int>> events;
            for (int s = 0; s < sector.n_sites(); ++s) {
                const double rate = noise.dephasing_rate(s);
                if (rate <= 0.0) continue;
                for (double t = rng.exponential(rate); t < t_end; t += rng.exponential(rate)) events.emplace_back(t, s);
            }
            std::sort(events.begin(), events.end());

            Eigen::VectorXcd c = c0;
            double tc = 0.0;
            std::size_t ev = 0;
            for (Eigen::Index ti = 0; ti < nt; ++ti) {
                for (; ev < events.size() && events[ev].first <= times[ti]; ++ev) {
                    advance(c, events[ev].first - tc);
                    tc = events[ev].first;
                    Eigen::VectorXd re = v * c.real(), im = v * c.imag();
                    re.array() *= parity[events[ev].second].array();
                    im.array() *= parity[events[ev].second].array();
                    c.real() = v.transpose() * re;
                    c.imag() = v.transpose() * im;
                }
                advance(c, times[ti] - tc);
                tc = times[ti];
                cs.col(ti) = c;
                std::complex<double> ov = 0.0;
                for (Eigen::Index k = 0; k < dim; ++k) ov += std::conj(std::polar(1.0, -e(k) * times[ti]) * c0(k)) * c(k);
                acc.f(ti) += std::norm(ov);
            }
            acc.p += site_probabilities(v, cs);
        }
        return acc;
    };

    const int n_blocks = (n_traj + kTrajBlock - 1) / kTrajBlock;
    Accumulator total{Eigen::MatrixXd::Zero(dim, nt), Eigen::VectorXd::Zero(nt)};
    for (int b0 = 0; b0 < n_blocks; b0 += kBlocksPerBatch) {
        const int nb = std::min(kBlocksPerBatch, n_blocks - b0);
        std::vector<Accumulator> parts(static_cast<std::size_t>(nb));
        parallel_for(static_cast<std::size_t>(nb), [&](std::size_t i) {
            const int b = b0 + static_cast<int>(i);
            parts[i] = run_block(b * kTrajBlock, std::min(n_traj, (b + 1) * kTrajBlock));
        });
        const Accumulator batch = pairwise_sum(parts, 0, parts.size());
        total.p += batch.p;
        total.f += batch.f;
    }

    QuenchResult out;
    out.sector = prop.sector();
    out.times = times;
    out.probabilities = total.p / n_traj;
    out.fidelity = total.f / n_traj;
    fill_observables(out);
    return out;
}

QuenchResult evolve_trajectories(const BoseHubbardParams& params, SectorPtr sector, const Eigen::VectorXcd& psi0,
                                 const std::vector<double>& times, const NoiseModel& noise, int n_traj) {
    return evolve_trajectories(SectorPropagator(params, std::move(sector)), psi0, times, noise, n_traj);
}

double second_moment(const Eigen::VectorXd& p) { return p.squaredNorm(); }
double second_moment(const BitstringDistribution& dist) { return second_moment(dist.p); }

PtHistogram pt_histogram(const std::vector<double>& p_values, int D, int bins) {
    const char* op = "pt_histogram";
    if (D < 2) throw InvalidArgument(op, "dimension must be at least 2");
    if (bins < 1) throw InvalidArgument(op, "bins must be positive");
    if (p_values.empty()) throw InvalidArgument(op, "no probabilities");
    PtHistogram h;
    h.D = D;
    const double pmax = std::max(*std::max_element(p_values.begin(), p_values.end()), 6.0 / D);
    const double width = pmax / bins;
    h.edges.resize(static_cast<std::size_t>(bins) + 1);
    for (int b = 0; b <= bins; ++b) h.edges[b] = b * width;
    std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
    for (const double p : p_values) counts[std::min(bins - 1, static_cast<int>(p / width))] += 1.0;
    const double norm = 1.0 / (static_cast<double>(p_values.size()) * width);
    for (int b = 0; b < bins; ++b) {
        const double mid = (b + 0.5) * width;
        h.density.push_back(counts[b] * norm);
        h.pt_density.push_back(D * std::exp(-D * mid));
        h.finite_d_density.push_back(mid < 1.0 ? (D - 1) * std::pow(1.0 - mid, D - 2) : 0.0);
    }
    const KsResult ks = ks_test(p_values, [D](double p) { return 1.0 - std::exp(-D * p); });
    h.ks_statistic = ks.statistic;
    h.ks_p_value = ks.p_value;
    return h;
}

PtHistogram pt_histogram(const BitstringDistribution& dist, int bins) {
    return pt_histogram(std::vector<double>(dist.p.data(), dist.p.data() + dist.p.size()), dist.dimension(), bins);
}

std::vector<long long> sample_bitstrings(const BitstringDistribution& dist, long long shots, std::uint64_t seed) {
    if (shots < 1) throw InvalidArgument("sample_bitstrings", "shots must be positive");
    dist.validate(1e-6);
    std::vector<double> cdf(static_cast<std::size_t>(dist.dimension()));
    double run = 0.0;
    for (int k = 0; k < dist.dimension(); ++k) cdf[k] = (run += dist.p(k));
    std::vector<long long> counts(cdf.size(), 0);
    CounterRng rng(seed, 0);
    for (long long s = 0; s < shots; ++s) {
        const double u = rng.uniform() * run;
        std::size_t k = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
        // rounding at the top end: fall back to the last state with weight
        if (k == cdf.size())
            for (k = cdf.size() - 1; k > 0 && dist.p(static_cast<Eigen::Index>(k)) == 0.0; --k) {
            }
        ++counts[k];
    }
    return counts;
}

BitstringDistribution postselect(const std::map<std::uint64_t, long long>& counts, int n_sites, int n_excitations) {
    const char* op = "postselect";
    if (n_sites < 1 || n_sites > 63) throw InvalidArgument(op, "n_sites must lie in [1, 63]");
    auto sector = make_sector(n_sites, n_excitations, 1);
    Eigen::VectorXd p = Eigen::VectorXd::Zero(sector->dimension());
    long long kept = 0;
    std::vector<int> occ(static_cast<std::size_t>(n_sites));
    for (const auto& [code, n] : counts) {
        if (n < 0) throw InvalidArgument(op, "negative count");
        if (code >> n_sites) throw InvalidArgument(op, "bit-string code wider than n_sites");
        if (std::popcount(code) != n_excitations) continue;
        for (int i = 0; i < n_sites; ++i) occ[i] = static_cast<int>((code >> (n_sites - 1 - i)) & 1u);
        p(sector->index_of(occ)) += static_cast<double>(n);
        kept += n;
    }
    if (kept == 0) throw EmptyAfterPostselect(op, "no bit-strings with the requested excitation number");
    return {sector, p / static_cast<double>(kept), kept};
}

double mu2_fidelity_ansatz(double F, int D) {
    if (F < 0.0 || F > 1.0) throw InvalidArgument("mu2_fidelity_ansatz", "F must lie in [0, 1]");
    if (D < 1) throw InvalidArgument("mu2_fidelity_ansatz", "D must be positive");
    return (1.0 + F * F) / D;
}

BitstringDistribution project_to_bitstrings(const BitstringDistribution& dist) {
    const char* op = "project_to_bitstrings";
    if (!dist.sector) throw InvalidArgument(op, "missing sector");
    const FockSector& from = *dist.sector;
    if (from.max_occupancy() == 1) return dist;
    auto to = make_sector(from.n_sites(), from.n_excitations(), 1);
    Eigen::VectorXd p = Eigen::VectorXd::Zero(to->dimension());
    for (int k = 0; k < from.dimension(); ++k)
        if (from.is_bitstring(k)) p(to->index_of(from.state(k))) += dist.p(k);
    const double kept = p.sum();
    if (!(kept > 0.0)) throw EmptyAfterPostselect(op, "no weight on bit-string states");
    return {to, p / kept, dist.shots};
}

BoseHubbardParams rotating_frame(const BoseHubbardParams& params, double offset) {
    BoseHubbardParams out = params;
    out.eps.array() -= offset;
    return out;
}

}  // namespace bgs
