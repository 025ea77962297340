#include "bandgapsim/hamlearn.hpp"

#include <algorithm>
#include <atomic>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <limits>
#include <list>
#include <mutex>
#include <numeric>
#include <spdlog/spdlog.h>
#include <unordered_map>

#include "bandgapsim/errors.hpp"
#include "bandgapsim/parallel.hpp"
#include "bandgapsim/rng.hpp"

namespace bgs {

namespace {

int excitations_of(const std::string& label) {
    return static_cast<int>(std::count(label.begin(), label.end(), '1'));
}

// Degenerate eigenvalue runs (length > 1) in an ascending spectrum.
std::vector<std::pair<int, int>> degenerate_blocks(const Eigen::VectorXd& e, double tol) {
    std::vector<std::pair<int, int>> out;
    const int n = static_cast<int>(e.size());
    for (int a = 0; a < n;) {
        int b = a + 1;
        while (b < n && e(b) - e(b - 1) < tol) ++b;
        if (b - a > 1) out.emplace_back(a, b - a);
        a = b;
    }
    return out;
}

// Coherent correction to the incoherent diagonal-ensemble sum for one block.
template <class Vec>
void add_block_terms(Eigen::VectorXd& pbar, const Eigen::MatrixXd& v, const Vec& c, int start, int len) {
    for (Eigen::Index z = 0; z < v.rows(); ++z) {
        std::complex<double> amp = 0.0;
        double incoherent = 0.0;
        for (int a = start; a < start + len; ++a) {
            const std::complex<double> t = v(z, a) * std::complex<double>(c(a));
            amp += t;
            incoherent += std::norm(t);
        }
        pbar(z) += std::norm(amp) - incoherent;
    }
}

std::string params_key(const BoseHubbardParams& p) {
    std::string key;
    auto put = [&key](const double* d, Eigen::Index n) {
        key.append(reinterpret_cast<const char*>(d), static_cast<std::size_t>(n) * sizeof(double));
    };
    key.append(reinterpret_cast<const char*>(&p.n_sites), sizeof p.n_sites);
    key.append(reinterpret_cast<const char*>(&p.max_occupancy), sizeof p.max_occupancy);
    put(p.eps.data(), p.eps.size());
    put(p.U.data(), p.U.size());
    put(p.J.data(), p.J.size());
    return key;
}

}  // namespace

void FidelityDataset::validate() const {
    const char* op = "FidelityDataset";
    if (!sector) throw InvalidArgument(op, "missing sector");
    if (sector->max_occupancy() != 1) throw InvalidArgument(op, "readout sector must be hardcore");
    if (z_init.empty() || taus.empty()) throw InvalidArgument(op, "dataset is empty");
    if (data.size() != z_init.size()) throw DimensionMismatch(op, "one row of distributions per initial state");
    for (std::size_t z = 0; z < z_init.size(); ++z) {
        if (sector->index_of_label(z_init[z]) < 0) throw InvalidArgument(op, "initial state " + z_init[z] + " is outside the sector");
        if (data[z].size() != taus.size()) throw DimensionMismatch(op, "one distribution per tau");
        for (const auto& d : data[z]) {
            if (d.sector.get() != sector.get() && (d.sector->n_sites() != sector->n_sites() ||
                                                   d.sector->n_excitations() != sector->n_excitations() ||
                                                   d.sector->max_occupancy() != 1))
                throw DimensionMismatch(op, "distributions must share the dataset sector");
            d.validate(1e-6);
        }
    }
}

double many_body_fidelity(const Eigen::MatrixXcd& rho, const Eigen::VectorXcd& psi) {
    if (rho.rows() != rho.cols() || rho.rows() != psi.size())
        throw DimensionMismatch("many_body_fidelity", "state and density matrix differ in dimension");
    return std::clamp((psi.adjoint() * rho * psi)(0).real(), 0.0, 1.0);
}

double many_body_fidelity(const Eigen::VectorXcd& phi, const Eigen::VectorXcd& psi) {
    if (phi.size() != psi.size()) throw DimensionMismatch("many_body_fidelity", "states differ in dimension");
    return std::clamp(std::norm(psi.dot(phi)), 0.0, 1.0);
}

Eigen::VectorXd time_averaged_probs(const SectorPropagator& prop, const Eigen::VectorXcd& psi0, double degeneracy_tol) {
    if (psi0.size() != prop.dimension()) throw DimensionMismatch("time_averaged_probs", "state does not match the sector");
    const Eigen::MatrixXd& v = prop.eig().vectors;
    Eigen::VectorXcd c(psi0.size());
    c.real() = v.transpose() * psi0.real();
    c.imag() = v.transpose() * psi0.imag();
    Eigen::VectorXd pbar = v.cwiseAbs2() * c.cwiseAbs2();
    for (const auto& [start, len] : degenerate_blocks(prop.eig().values, degeneracy_tol))
        add_block_terms(pbar, v, c, start, len);
    return pbar.cwiseMax(0.0);
}

Eigen::VectorXd time_averaged_probs(const BoseHubbardParams& params, SectorPtr sector, const Eigen::VectorXcd& psi0,
                                    double degeneracy_tol) {
    return time_averaged_probs(SectorPropagator(params, std::move(sector)), psi0, degeneracy_tol);
}

double fd_estimator(const Eigen::VectorXd& p_exp, const Eigen::VectorXd& p_theory, const Eigen::VectorXd& p_bar) {
    const char* op = "fd_estimator";
    if (p_exp.size() != p_theory.size() || p_exp.size() != p_bar.size())
        throw DimensionMismatch(op, "distributions differ in length");
    double num = 0.0, den = 0.0;
    for (Eigen::Index z = 0; z < p_bar.size(); ++z) {
        if (!(p_bar(z) > 0.0)) {
            if (p_theory(z) > 1e-12) throw ZeroTimeAverage(op, "theory weight on a state with zero time average");
            continue;
        }
        num += p_exp(z) * p_theory(z) / p_bar(z);
        den += p_theory(z) * p_theory(z) / p_bar(z);
    }
    if (!(den > 0.0)) throw ZeroTimeAverage(op, "theory distribution has no weight on reachable states");
    return 2.0 * num / den - 1.0;
}

// ---------------------------------------------------------------------------

TrialFamily::TrialFamily(BoseHubbardParams base, Eigen::VectorXd lower, Eigen::VectorXd upper)
    : base_(std::move(base)), lower_(std::move(lower)), upper_(std::move(upper)) {
    base_.validate();
    const int p = parameter_count(base_.n_sites);
    if (base_.n_sites < 3) throw InvalidArgument("TrialFamily", "need at least 3 sites");
    if (lower_.size() != p || upper_.size() != p) throw DimensionMismatch("TrialFamily", "bounds need one entry per parameter");
    if (((upper_ - lower_).array() < 0.0).any()) throw InvalidArgument("TrialFamily", "lower bound above upper bound");
}

TrialFamily TrialFamily::around(const BoseHubbardParams& base, const Eigen::VectorXd& x0, double scale) {
    const Eigen::VectorXd half = scale * x0.cwiseAbs();
    return TrialFamily(base, -half, half);
}

BoseHubbardParams TrialFamily::apply(const Eigen::VectorXd& x) const {
    const int n = base_.n_sites;
    if (x.size() != size()) throw DimensionMismatch("TrialFamily::apply", "parameter vector has the wrong length");
    BoseHubbardParams p = base_;
    p.J.setZero();
    for (int i = 0; i + 1 < n; ++i) p.J(i, i + 1) = p.J(i + 1, i) = x(i);
    for (int k = 2; k < n; ++k) {
        const double v = x(n - 1 + k - 2);
        for (int i = 0; i + k < n; ++i) p.J(i, i + k) = p.J(i + k, i) = v;
    }
    return p;
}

Eigen::VectorXd TrialFamily::extract(const Eigen::MatrixXd& J) const {
    const int n = base_.n_sites;
    if (J.rows() != n || J.cols() != n) throw DimensionMismatch("TrialFamily::extract", "J has the wrong shape");
    Eigen::VectorXd x(size());
    for (int i = 0; i + 1 < n; ++i) x(i) = J(i, i + 1);
    for (int k = 2; k < n; ++k) {
        double s = 0.0;
        for (int i = 0; i + k < n; ++i) s += J(i, i + k);
        x(n - 1 + k - 2) = s / (n - k);
    }
    return x;
}

Eigen::VectorXd TrialFamily::canonical_gauge(const Eigen::VectorXd& x) const {
    const int n = base_.n_sites;
    if (x.head(n - 1).sum() >= 0.0) return x;
    Eigen::VectorXd y = x;
    y.head(n - 1) *= -1.0;
    for (int k = 3; k < n; k += 2) y(n - 1 + k - 2) *= -1.0;
    return y;
}

std::string TrialFamily::parameter_name(int index) const {
    const int n = base_.n_sites;
    if (index < 0 || index >= size()) throw InvalidArgument("TrialFamily", "parameter index out of range");
    if (index < n - 1) return "J_" + std::to_string(index + 1) + "_" + std::to_string(index + 2);
    return "Jbar_" + std::to_string(index - (n - 1) + 2);
}

// ---------------------------------------------------------------------------

struct FdEvaluator::Impl {
    FidelityDataset data;
    std::size_t capacity;
    mutable std::mutex mutex;
    mutable std::list<std::pair<std::string, std::shared_ptr<const SymEig>>> lru;
    mutable std::unordered_map<int, SectorPtr> sectors;  // by max occupancy
    mutable std::atomic<std::size_t> count{0};

    SectorPtr full_sector(int max_occ) const {
        std::lock_guard lock(mutex);
        auto& s = sectors[max_occ];
        if (!s) s = max_occ == 1 ? data.sector : make_sector(data.sector->n_sites(), data.sector->n_excitations(), max_occ);
        return s;
    }

    // Readout rows of the trial sector, in dataset order.
    std::vector<Eigen::Index> readout_rows(const FockSector& full) const {
        const FockSector& hc = *data.sector;
        std::vector<Eigen::Index> rows(static_cast<std::size_t>(hc.dimension()));
        for (int k = 0; k < hc.dimension(); ++k) rows[k] = full.index_of(hc.state(k));
        return rows;
    }

    // Spectrum plus the eigenvector rows readout can see; F_d needs nothing else.
    std::shared_ptr<const SymEig> spectrum(const BoseHubbardParams& trial) const {
        const std::string key = params_key(trial);
        {
            std::lock_guard lock(mutex);
            for (auto it = lru.begin(); it != lru.end(); ++it)
                if (it->first == key) {
                    lru.splice(lru.begin(), lru, it);
                    return lru.front().second;
                }
        }
        const SectorPtr sector = full_sector(trial.max_occupancy);
        auto eig = std::make_shared<const SymEig>(
            sym_eig_rows(build_sector_hamiltonian(trial, *sector), readout_rows(*sector)));
        std::lock_guard lock(mutex);
        lru.emplace_front(key, eig);
        while (lru.size() > capacity) lru.pop_back();
        return eig;
    }
};

FdEvaluator::FdEvaluator(const FidelityDataset& dataset, std::size_t cache_capacity) : impl_(std::make_shared<Impl>()) {
    dataset.validate();
    impl_->data = dataset;
    impl_->capacity = std::max<std::size_t>(1, cache_capacity);
}

std::size_t FdEvaluator::evaluations() const { return impl_->count.load(); }

FdSummary FdEvaluator::evaluate(const BoseHubbardParams& trial) const {
    const FidelityDataset& d = impl_->data;
    if (trial.n_sites != d.sector->n_sites()) throw DimensionMismatch("averaged_fd", "trial and dataset differ in n_sites");
    ++impl_->count;
    const auto eig = impl_->spectrum(trial);
    const FockSector& hc = *d.sector;
    const Eigen::MatrixXd& v = eig->vectors;  // readout rows only
    const Eigen::VectorXd& e = eig->values;
    const Eigen::Index dim = v.cols();

    const std::size_t nz = d.z_init.size(), nt = d.taus.size();
    Eigen::MatrixXd c0(dim, static_cast<Eigen::Index>(nz));
    for (std::size_t z = 0; z < nz; ++z) c0.col(static_cast<Eigen::Index>(z)) = v.row(hc.index_of_label(d.z_init[z])).transpose();

    Eigen::MatrixXd re(dim, static_cast<Eigen::Index>(nz * nt)), im(dim, static_cast<Eigen::Index>(nz * nt));
    for (std::size_t z = 0; z < nz; ++z)
        for (std::size_t t = 0; t < nt; ++t) {
            const Eigen::Index col = static_cast<Eigen::Index>(z * nt + t);
            const Eigen::ArrayXd ph = e.array() * d.taus[t];
            re.col(col) = ph.cos() * c0.col(static_cast<Eigen::Index>(z)).array();
            im.col(col) = -ph.sin() * c0.col(static_cast<Eigen::Index>(z)).array();
        }
    const Eigen::MatrixXd pt = (v * re).cwiseAbs2() + (v * im).cwiseAbs2();

    Eigen::MatrixXd pbar = v.cwiseAbs2() * c0.cwiseAbs2();
    const auto blocks = degenerate_blocks(e, 1e-9);
    for (std::size_t z = 0; z < nz; ++z) {
        Eigen::VectorXd col = pbar.col(static_cast<Eigen::Index>(z));
        for (const auto& [start, len] : blocks) add_block_terms(col, v, c0.col(static_cast<Eigen::Index>(z)), start, len);
        pbar.col(static_cast<Eigen::Index>(z)) = col.cwiseMax(0.0);
    }

    FdSummary s;
    s.values.assign(nz, std::vector<double>(nt));
    s.per_tau.assign(nt, 0.0);
    s.per_z.assign(nz, 0.0);
    const Eigen::Index hd = hc.dimension();
    Eigen::VectorXd p_theory(hd), p_bar(hd);
    for (std::size_t z = 0; z < nz; ++z) {
        p_bar = pbar.col(static_cast<Eigen::Index>(z));
        for (std::size_t t = 0; t < nt; ++t) {
            p_theory = pt.col(static_cast<Eigen::Index>(z * nt + t));
            p_theory /= p_theory.sum();
            const double f = fd_estimator(d.data[z][t].p, p_theory, p_bar);
            s.values[z][t] = f;
            s.per_tau[t] += f / static_cast<double>(nz);
            s.per_z[z] += f / static_cast<double>(nt);
        }
    }
    s.mean = std::accumulate(s.per_z.begin(), s.per_z.end(), 0.0) / static_cast<double>(nz);
    if (nz > 1) {
        double var = 0.0;
        for (const double f : s.per_z) var += (f - s.mean) * (f - s.mean);
        s.sem = std::sqrt(var / static_cast<double>(nz - 1) / static_cast<double>(nz));
    }
    return s;
}

FdSummary averaged_fd(const FidelityDataset& dataset, const BoseHubbardParams& trial) {
    return FdEvaluator(dataset, 1).evaluate(trial);
}

FidelityDataset synthesize_dataset(const BoseHubbardParams& truth, const std::vector<std::string>& z_init,
                                   const std::vector<double>& taus, long long shots, std::uint64_t seed) {
    const char* op = "synthesize_dataset";
    if (z_init.empty()) throw InvalidArgument(op, "no initial states");
    if (shots < 0) throw InvalidArgument(op, "shots must be non-negative");
    const int k = excitations_of(z_init.front());
    const SectorPropagator prop(truth, make_sector(truth.n_sites, k, truth.max_occupancy));
    FidelityDataset d;
    d.sector = make_sector(truth.n_sites, k, 1);
    d.z_init = z_init;
    d.taus = taus;
    d.shots = shots;
    d.data.resize(z_init.size());
    parallel_for(z_init.size(), [&](std::size_t z) {
        if (excitations_of(z_init[z]) != k) throw InvalidArgument(op, "initial states differ in excitation number");
        const QuenchResult r = evolve(prop, basis_state(*prop.sector(), z_init[z]), taus);
        for (std::size_t t = 0; t < taus.size(); ++t) {
            BitstringDistribution dist = project_to_bitstrings(r.distribution(t));
            dist.sector = d.sector;
            if (shots > 0) {
                const std::uint64_t sub = CounterRng(seed, z * taus.size() + t).next();
                const auto counts = sample_bitstrings(dist, shots, sub);
                for (int s = 0; s < dist.dimension(); ++s) dist.p(s) = static_cast<double>(counts[s]) / static_cast<double>(shots);
                dist.shots = shots;
            }
            d.data[z].push_back(std::move(dist));
        }
    });
    return d;
}

std::vector<std::string> random_initial_states(int n_sites, int n_excitations, int count, std::uint64_t seed) {
    const FockSector s(n_sites, n_excitations, 1);
    if (count < 1 || count > s.dimension()) throw InvalidArgument("random_initial_states", "count outside [1, dimension]");
    std::vector<int> idx(static_cast<std::size_t>(s.dimension()));
    std::iota(idx.begin(), idx.end(), 0);
    CounterRng rng(seed, 0);
    for (int i = 0; i < count; ++i) std::swap(idx[i], idx[i + rng.below(static_cast<std::uint64_t>(s.dimension() - i))]);
    std::vector<std::string> out;
    for (int i = 0; i < count; ++i) out.push_back(s.label(idx[i]));
    return out;
}

// ---------------------------------------------------------------------------

double curvature_interval(const FdEvaluator& eval, const TrialFamily& family, const Eigen::VectorXd& x, int index,
                          double step, double sigma) {
    auto at = [&](double v) {
        Eigen::VectorXd y = x;
        y(index) = v;
        return eval.evaluate(family.apply(y)).mean;
    };
    const double span = family.upper()(index) - family.lower()(index);
    const double h = step * std::max(std::abs(x(index)), 1e-3 * span);
    const double curv = -(at(x(index) + h) - 2.0 * at(x(index)) + at(x(index) - h)) / (h * h);
    if (!(curv > 0.0)) return std::numeric_limits<double>::infinity();
    return std::sqrt(2.0 * sigma / curv);
}

LearnReport greedy_optimize(const FidelityDataset& dataset, const TrialFamily& family, const Eigen::VectorXd& x0,
                            const GreedyOptions& options) {
    const char* op = "greedy_optimize";
    if (options.rounds < 1) throw InvalidArgument(op, "rounds must be at least 1");
    if (x0.size() != family.size()) throw DimensionMismatch(op, "x0 has the wrong length");
    if (options.grid_points < 2) throw InvalidArgument(op, "grid_points must be at least 2");
    const FdEvaluator eval(dataset);
    auto fd = [&](const Eigen::VectorXd& x) { return eval.evaluate(family.apply(x)).mean; };

    LearnReport rep;
    Eigen::VectorXd x = x0.cwiseMax(family.lower()).cwiseMin(family.upper());
    double fx = fd(x);
    rep.fd_trace.push_back(fx);
    const int np = family.size();

    for (int round = 0; round < options.rounds; ++round) {
        const double f_start = fx;
        std::vector<int> order(static_cast<std::size_t>(np));
        std::iota(order.begin(), order.end(), 0);
        CounterRng rng(options.seed, static_cast<std::uint64_t>(round));
        for (int i = np - 1; i > 0; --i) std::swap(order[i], order[rng.below(static_cast<std::uint64_t>(i + 1))]);

        for (const int k : order) {
            const double lo = family.lower()(k), hi = family.upper()(k);
            if (!(hi > lo)) continue;
            Eigen::VectorXd y = x;
            auto along = [&](double v) {
                y(k) = v;
                return fd(y);
            };
            // coarse scan so the search can jump across zero
            const int g = options.grid_points;
            const double dx = (hi - lo) / (g - 1);
            double best_v = x(k), best_f = fx;
            int best_g = -1;
            for (int j = 0; j < g; ++j) {
                const double v = lo + j * dx;
                const double f = along(v);
                if (f > best_f) {
                    best_f = f;
                    best_v = v;
                    best_g = j;
                }
            }
            const double centre = best_g >= 0 ? lo + best_g * dx : x(k);
            const double a = std::max(lo, centre - dx), b = std::min(hi, centre + dx);
            std::uintmax_t iters = static_cast<std::uintmax_t>(options.line_iterations);
            const auto [v_opt, neg_f] = boost::math::tools::brent_find_minima(
                [&](double v) { return -along(v); }, a, b, 12, iters);
            if (-neg_f > best_f) {
                best_f = -neg_f;
                best_v = v_opt;
            }
            if (best_f > fx) {
                x(k) = best_v;
                fx = best_f;
            }
            spdlog::debug("{}: round {} {} -> {:.6g}, F_d {:.6f}", op, round + 1, family.parameter_name(k), x(k), fx);
        }
        rep.fd_trace.push_back(fx);
        rep.rounds_run = round + 1;
        spdlog::info("{}: round {} F_d {:.6f}", op, round + 1, fx);
        if (fx - f_start < options.min_improvement) break;
    }

    rep.no_improvement = rep.fd_trace.back() - rep.fd_trace.front() < options.min_improvement;
    rep.x = x;
    rep.x_canonical = family.canonical_gauge(x);
    const FdSummary s = eval.evaluate(family.apply(x));
    rep.fd_per_tau = s.per_tau;
    rep.fd_sem = s.sem;
    rep.interval.resize(np);
    for (int k = 0; k < np; ++k) rep.interval(k) = curvature_interval(eval, family, x, k, options.curvature_step, s.sem);
    rep.evaluations = eval.evaluations();
    return rep;
}

std::vector<double> fd_coordinate_profile(const FidelityDataset& dataset, const TrialFamily& family,
                                          const Eigen::VectorXd& x, int index, const std::vector<double>& grid) {
    if (index < 0 || index >= family.size()) throw InvalidArgument("fd_coordinate_profile", "parameter index out of range");
    const FdEvaluator eval(dataset);
    std::vector<double> out(grid.size());
    parallel_for(grid.size(), [&](std::size_t i) {
        Eigen::VectorXd y = x;
        y(index) = grid[i];
        out[i] = eval.evaluate(family.apply(y)).mean;
    });
    return out;
}

}  // namespace bgs
