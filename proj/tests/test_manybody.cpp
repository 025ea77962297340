#include "doctest.h"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <unsupported/Eigen/KroneckerProduct>

#include "bandgapsim/errors.hpp"
#include "bandgapsim/fock.hpp"
#include "bandgapsim/linalg.hpp"
#include "bandgapsim/manybody.hpp"
#include "bandgapsim/parallel.hpp"
#include "bandgapsim/stats.hpp"

using namespace bgs;
using doctest::Approx;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

BoseHubbardParams uniform_chain(int n, double j, int max_occ = 1, double u = 0.0) {
    BoseHubbardParams p;
    p.n_sites = n;
    p.eps = Eigen::VectorXd::Zero(n);
    p.U = Eigen::VectorXd::Constant(n, u);
    p.J = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i + 1 < n; ++i) p.J(i, i + 1) = p.J(i + 1, i) = j;
    p.max_occupancy = max_occ;
    return p;
}

// Alternating, exponentially decaying long-range hopping.
BoseHubbardParams long_range(int n, double j1, double xi, int max_occ = 1, double u = 0.0) {
    BoseHubbardParams p = uniform_chain(n, 0.0, max_occ, u);
    for (int i = 0; i < n; ++i)
        for (int k = i + 1; k < n; ++k) {
            const int d = k - i;
            p.J(i, k) = p.J(k, i) = (d % 2 ? 1.0 : -1.0) * j1 * std::exp(-(d - 1) / xi);
        }
    return p;
}

BoseHubbardParams random_params(int n, int max_occ, unsigned seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    BoseHubbardParams p = uniform_chain(n, 0.0, max_occ);
    for (int i = 0; i < n; ++i) {
        p.eps(i) = 0.3 * u(gen);
        p.U(i) = -2.0 + 0.2 * u(gen);
        for (int k = i + 1; k < n; ++k) p.J(i, k) = p.J(k, i) = 0.2 * u(gen);
    }
    return p;
}

// Haar-random state from normalized complex Gaussians.
Eigen::VectorXd haar_probabilities(int dim, std::mt19937_64& gen) {
    std::normal_distribution<double> g;
    Eigen::VectorXd p(dim);
    for (int k = 0; k < dim; ++k) {
        const double a = g(gen), b = g(gen);
        p(k) = a * a + b * b;
    }
    return p / p.sum();
}

Eigen::VectorXcd random_state(int dim, unsigned seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> g;
    Eigen::VectorXcd psi(dim);
    for (int k = 0; k < dim; ++k) psi(k) = {g(gen), g(gen)};
    return psi.normalized();
}

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> t(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) t[i] = a + (b - a) * i / (n - 1);
    return t;
}

}  // namespace

TEST_CASE("row-restricted eigenvectors") {
    std::mt19937_64 gen(4);
    std::normal_distribution<double> nd;
    const int n = 60;
    Eigen::MatrixXd h(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) h(i, j) = h(j, i) = nd(gen);
    const SymEig full = sym_eig(h);
    const std::vector<Eigen::Index> rows{7, 0, 59, 31, 8};
    const SymEig part = sym_eig_rows(h, rows);
    REQUIRE(part.vectors.rows() == 5);
    REQUIRE(part.vectors.cols() == n);
    CHECK((part.values - full.values).cwiseAbs().maxCoeff() < 1e-12);
    // columns agree up to sign; the projected block of h is basis-free
    for (std::size_t k = 0; k < rows.size(); ++k)
        CHECK((part.vectors.row(k).cwiseAbs() - full.vectors.row(rows[k]).cwiseAbs()).maxCoeff() < 1e-10);
    const Eigen::MatrixXd block = part.vectors * part.values.asDiagonal() * part.vectors.transpose();
    for (std::size_t a = 0; a < rows.size(); ++a)
        for (std::size_t b = 0; b < rows.size(); ++b) CHECK(block(a, b) == doctest::Approx(h(rows[a], rows[b])));

    std::vector<Eigen::Index> all(n);
    std::iota(all.begin(), all.end(), 0);
    CHECK((sym_eig_rows(h, all).vectors.cwiseAbs() - full.vectors.cwiseAbs()).maxCoeff() < 1e-12);
    CHECK(sym_eig_rows(h, {}).vectors.rows() == 0);
    CHECK_THROWS_AS(sym_eig_rows(h, {n}), InvalidArgument);
}

TEST_CASE("sector enumeration") {
    const FockSector two(10, 2, 1);
    CHECK(two.dimension() == 45);
    CHECK(FockSector(10, 5, 1).dimension() == 252);
    CHECK(FockSector(10, 5, 2).dimension() == 1452);
    CHECK(two.label(0) == "0000000011");
    CHECK(two.label(44) == "1100000000");
    for (int k = 0; k < two.dimension(); ++k) {
        CHECK(two.index_of(two.state(k)) == k);
        CHECK(two.index_of_label(two.label(k)) == k);
        if (k > 0) CHECK(two.label(k - 1) < two.label(k));
        int total = 0;
        for (int i = 0; i < 10; ++i) total += two.occupation(k, i);
        CHECK(total == 2);
    }
    CHECK(two.bitstring_code(two.index_of_label("1000000001")) == 0b1000000001u);
    CHECK(two.index_of_label("2000000000") == -1);
    CHECK(two.index_of_label("10000000") == -1);
    CHECK_THROWS_AS(FockSector(3, 4, 1), InvalidArgument);
}

TEST_CASE("two-site hardcore block") {
    BoseHubbardParams p = uniform_chain(2, 0.7);
    p.eps << 1.5, -0.25;
    p.U << 9.0, 9.0;  // ignored when hardcore
    const FockSector s(2, 1, 1);
    const Eigen::MatrixXd h = build_sector_hamiltonian(p, s);
    const int i10 = s.index_of_label("10"), i01 = s.index_of_label("01");
    CHECK(h(i10, i10) == 1.5);
    CHECK(h(i01, i01) == -0.25);
    CHECK(h(i10, i01) == 0.7);
    CHECK(h(i01, i10) == 0.7);
    CHECK(build_sector_hamiltonian(p, FockSector(2, 2, 1))(0, 0) == 1.25);

    BoseHubbardParams bad = p;
    bad.J(0, 1) = 0.3;
    CHECK_THROWS_AS(build_sector_hamiltonian(bad, s), InvalidArgument);
    bad = p;
    bad.max_occupancy = 3;
    CHECK_THROWS_AS(build_sector_hamiltonian(bad, s), InvalidArgument);
    CHECK_THROWS_AS(build_sector_hamiltonian(p, FockSector(3, 1, 1)), DimensionMismatch);
}

TEST_CASE("sector Hamiltonian agrees with ladder-operator construction") {
    // three sites, each truncated at two quanta
    const int n = 3, d = 3;
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(d, d);
    b(0, 1) = 1.0;
    b(1, 2) = std::sqrt(2.0);
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(d, d);
    auto on_site = [&](const Eigen::MatrixXd& op, int site) {
        Eigen::MatrixXd out = Eigen::MatrixXd::Identity(1, 1);
        for (int i = 0; i < n; ++i) {
            Eigen::MatrixXd next = Eigen::kroneckerProduct(out, i == site ? op : id);
            out = next;
        }
        return out;
    };
    BoseHubbardParams p;
    p.n_sites = n;
    p.eps = Eigen::Vector3d(4.1, 6.0, 3.7);
    p.U = Eigen::Vector3d(-1.2, 0.0, -0.9);
    p.J = Eigen::Matrix3d::Zero();
    p.J(0, 1) = p.J(1, 0) = 0.31;
    p.J(1, 2) = p.J(2, 1) = -0.17;
    p.J(0, 2) = p.J(2, 0) = 0.05;
    p.max_occupancy = 2;

    Eigen::MatrixXd full = Eigen::MatrixXd::Zero(27, 27);
    for (int i = 0; i < n; ++i) {
        const Eigen::MatrixXd bi = on_site(b, i);
        const Eigen::MatrixXd ni = bi.transpose() * bi;
        full += p.eps(i) * ni + 0.5 * p.U(i) * ni * (ni - Eigen::MatrixXd::Identity(27, 27));
        for (int j = 0; j < n; ++j)
            if (i != j) full += p.J(i, j) * bi.transpose() * on_site(b, j);
    }
    auto total = [](int code) { return code / 9 + (code / 3) % 3 + code % 3; };
    for (int a = 0; a < 27; ++a)
        for (int c = 0; c < 27; ++c)
            if (total(a) != total(c)) CHECK(full(a, c) == 0.0);

    for (int exc = 0; exc <= 2; ++exc) {
        const FockSector sector(n, exc, 2);
        const Eigen::MatrixXd h = build_sector_hamiltonian(p, sector);
        for (int a = 0; a < sector.dimension(); ++a)
            for (int c = 0; c < sector.dimension(); ++c) {
                const auto sa = sector.state(a), sc = sector.state(c);
                const int ia = sa[0] * 9 + sa[1] * 3 + sa[2], ic = sc[0] * 9 + sc[1] * 3 + sc[2];
                CHECK(h(a, c) == Approx(full(ia, ic)).epsilon(1e-14));
            }
        const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(h).eigenvalues();
        CHECK(ev.sum() == Approx(h.trace()).epsilon(1e-9));
    }
}

TEST_CASE("vacuum Rabi oscillation") {
    const double j = kTwoPi * 0.004;
    const auto sector = make_sector(2, 1, 1);
    const auto times = linspace(0.0, 400.0, 41);
    const auto r = evolve(uniform_chain(2, j), sector, basis_state(*sector, "10"), times);
    for (std::size_t t = 0; t < times.size(); ++t) {
        const double c = std::cos(j * times[t]);
        CHECK(r.populations(static_cast<Eigen::Index>(t), 0) == Approx(c * c).epsilon(1e-12));
    }
    CHECK(second_moment(r.distribution(0)) == Approx(1.0));
}

TEST_CASE("noiseless evolution invariants") {
    const auto params = random_params(6, 2, 11);
    const auto sector = make_sector(6, 3, 2);
    const SectorPropagator prop(params, sector);
    const Eigen::VectorXcd psi0 = random_state(sector->dimension(), 5);
    const auto times = linspace(0.0, 50.0, 26);
    const auto r = evolve(prop, psi0, times);
    const Eigen::MatrixXd& h = prop.hamiltonian();
    const double e0 = (psi0.adjoint() * h.cast<std::complex<double>>() * psi0)(0).real();
    for (std::size_t t = 0; t < times.size(); ++t) {
        const auto ti = static_cast<Eigen::Index>(t);
        CHECK(r.probabilities.col(ti).sum() == Approx(1.0).epsilon(1e-9));
        CHECK(r.populations.row(ti).sum() == Approx(3.0).epsilon(1e-8));
        CHECK((r.probabilities.col(ti).array() >= 0.0).all());
        // <sum_j n_i n_j> = N <n_i>
        CHECK((r.correlators[t].rowwise().sum() - 3.0 * r.populations.row(ti).transpose()).norm() < 1e-9);
        const Eigen::VectorXcd psi = prop.state_at(psi0, times[t]);
        const double e = (psi.adjoint() * h.cast<std::complex<double>>() * psi)(0).real();
        CHECK(std::abs(e - e0) < 1e-8);
        CHECK((psi.cwiseAbs2() - r.probabilities.col(ti)).norm() < 1e-12);
    }
    const Eigen::VectorXcd back = prop.state_at(prop.state_at(psi0, 37.5), -37.5);
    CHECK(std::norm(back.dot(psi0)) > 1.0 - 1e-9);

    CHECK_THROWS_AS(evolve(prop, 2.0 * psi0, times), InvalidArgument);
    CHECK_THROWS_AS(evolve(prop, psi0, {1.0, 0.5}), InvalidArgument);
    CHECK_THROWS_AS(SectorPropagator(uniform_chain(20, 1.0), make_sector(20, 10, 1)), SectorTooLarge);
}

TEST_CASE("rotating frame only changes a global phase") {
    BoseHubbardParams p = long_range(8, kTwoPi * 0.004, 2.0);
    p.eps = Eigen::VectorXd::Constant(8, kTwoPi * 4.72);
    const auto sector = make_sector(8, 3, 1);
    const auto psi0 = basis_state(*sector, "00011100");
    const auto times = linspace(0.0, 300.0, 7);
    const auto lab = evolve(p, sector, psi0, times);
    const auto rot = evolve(rotating_frame(p, kTwoPi * 4.72), sector, psi0, times);
    CHECK((lab.probabilities - rot.probabilities).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("wave packets spread under long-range hopping") {
    const auto sector = make_sector(10, 2, 1);
    const auto r = evolve(long_range(10, kTwoPi * 0.004, 2.0), sector, basis_state(*sector, "0000110000"),
                          {0.0, 600.0});
    CHECK(r.populations(0, 4) == Approx(1.0));
    CHECK(r.populations.row(1).maxCoeff() < 0.6);
    CHECK(r.populations(1, 0) + r.populations(1, 9) > 0.05);
}

TEST_CASE("trajectories without noise reproduce evolve") {
    const auto sector = make_sector(6, 3, 1);
    const SectorPropagator prop(random_params(6, 1, 3), sector);
    const auto psi0 = basis_state(*sector, "101010");
    const auto times = linspace(0.0, 40.0, 9);
    NoiseModel quiet;
    quiet.dephasing_rate = Eigen::VectorXd::Zero(6);
    const auto a = evolve(prop, psi0, times);
    const auto b = evolve_trajectories(prop, psi0, times, quiet, 17);
    CHECK(a.probabilities == b.probabilities);
    CHECK(a.populations == b.populations);
    CHECK(b.fidelity == Eigen::VectorXd::Ones(9));
}

TEST_CASE("Ramsey coherence under phase flips") {
    // |10> + |01> with flips on site 1 only: F = (1 + exp(-t/T2)) / 2
    const double t2 = 1140.0;
    BoseHubbardParams p = uniform_chain(2, 0.0);
    const auto sector = make_sector(2, 1, 1);
    const SectorPropagator prop(p, sector);
    Eigen::VectorXcd psi0 = Eigen::VectorXcd::Constant(2, 1.0 / std::sqrt(2.0));
    NoiseModel noise;
    noise.dephasing_rate = Eigen::Vector2d(dephasing_rate_for_t2(t2), 0.0);
    noise.seed = 2024;
    const int n_traj = 2000;
    const auto times = linspace(0.0, 3000.0, 16);
    const auto r = evolve_trajectories(prop, psi0, times, noise, n_traj);
    for (std::size_t t = 0; t < times.size(); ++t) {
        const double f = 0.5 * (1.0 + std::exp(-times[t] / t2));
        const double sigma = std::sqrt(f * (1.0 - f) / n_traj);
        CAPTURE(times[t]);
        CHECK(std::abs(r.fidelity(static_cast<Eigen::Index>(t)) - f) < 4.0 * sigma + 1e-12);
        // populations are blind to dephasing
        CHECK(r.populations(static_cast<Eigen::Index>(t), 0) == Approx(0.5).epsilon(1e-12));
    }
}

TEST_CASE("trajectory averages are seed-reproducible and thread-independent") {
    const auto sector = make_sector(6, 3, 2);
    const SectorPropagator prop(random_params(6, 2, 9), sector);
    const auto psi0 = basis_state(*sector, "110100");
    const auto times = linspace(0.0, 800.0, 5);
    const auto noise = NoiseModel::uniform_dephasing(6, 300.0, 7);
    const unsigned saved = worker_count();
    set_worker_count(1);
    const auto serial = evolve_trajectories(prop, psi0, times, noise, 300);
    set_worker_count(4);
    const auto threaded = evolve_trajectories(prop, psi0, times, noise, 300);
    set_worker_count(saved);
    CHECK(serial.probabilities == threaded.probabilities);
    CHECK(serial.fidelity == threaded.fidelity);

    auto other = noise;
    other.seed = 8;
    CHECK(evolve_trajectories(prop, psi0, times, other, 300).probabilities != serial.probabilities);
    CHECK(serial.fidelity(4) < serial.fidelity(0));

    NoiseModel negative = noise;
    negative.dephasing_rate(2) = -1.0;
    CHECK_THROWS_AS(evolve_trajectories(prop, psi0, times, negative, 10), InvalidArgument);
    CHECK_THROWS_AS(evolve_trajectories(prop, psi0, times, noise, 0), InvalidArgument);
}

TEST_CASE("second moment") {
    const auto sector = make_sector(10, 2, 1);
    Eigen::VectorXd delta = Eigen::VectorXd::Zero(45);
    delta(3) = 1.0;
    CHECK(second_moment(BitstringDistribution{sector, delta, {}}) == 1.0);
    CHECK(second_moment(Eigen::VectorXd::Constant(45, 1.0 / 45)) == Approx(1.0 / 45));

    // Haar average of sum p^2 is 2/(D+1)
    std::mt19937_64 gen(1);
    const int n_states = 4000;
    double mean = 0.0, sq = 0.0;
    for (int s = 0; s < n_states; ++s) {
        const double m = second_moment(haar_probabilities(45, gen));
        mean += m;
        sq += m * m;
    }
    mean /= n_states;
    const double err = std::sqrt((sq / n_states - mean * mean) / n_states);
    CHECK(std::abs(mean - 2.0 / 46.0) < 4.0 * err);

    CHECK(mu2_fidelity_ansatz(1.0, 252) == Approx(2.0 / 252));
    CHECK(mu2_fidelity_ansatz(0.0, 45) == Approx(1.0 / 45));
    CHECK_THROWS_AS(mu2_fidelity_ansatz(1.2, 45), InvalidArgument);
}

TEST_CASE("Porter-Thomas histogram and KS statistic") {
    std::mt19937_64 gen(42);
    const Eigen::VectorXd p = haar_probabilities(252, gen);
    const auto sector = make_sector(10, 5, 1);
    const auto h = pt_histogram(BitstringDistribution{sector, p, {}}, 20);
    CHECK(h.ks_statistic < 0.08);
    CHECK(h.ks_p_value > 0.01);
    CHECK(h.edges.size() == 21);
    double mass = 0.0;
    for (std::size_t b = 0; b < h.density.size(); ++b) mass += h.density[b] * (h.edges[b + 1] - h.edges[b]);
    CHECK(mass == Approx(1.0));
    CHECK(h.pt_density[0] == Approx(252 * std::exp(-252 * h.edges[1] / 2)));
    CHECK(h.finite_d_density[0] == Approx(251 * std::pow(1 - h.edges[1] / 2, 250)));

    Eigen::VectorXd delta = Eigen::VectorXd::Zero(252);
    delta(0) = 1.0;
    const auto hd = pt_histogram(BitstringDistribution{sector, delta, {}});
    CHECK(hd.ks_statistic > 0.99);
    CHECK(hd.ks_p_value < 1e-10);
}

TEST_CASE("Kolmogorov distribution") {
    // tabulated critical values of the limiting distribution
    CHECK(kolmogorov_q(1.3581) == Approx(0.05).epsilon(2e-3));
    CHECK(kolmogorov_q(1.6276) == Approx(0.01).epsilon(2e-3));
    CHECK(kolmogorov_q(1.2238) == Approx(0.10).epsilon(2e-3));
    CHECK(kolmogorov_q(0.5) == Approx(0.9639452436648751).epsilon(1e-9));
    CHECK(kolmogorov_q(0.0) == 1.0);
    // both branches agree where they meet
    CHECK(kolmogorov_q(1.18 - 1e-12) == Approx(kolmogorov_q(1.18)).epsilon(1e-9));
}

TEST_CASE("bit-string sampling") {
    const auto sector = make_sector(10, 2, 1);
    std::mt19937_64 gen(3);
    const BitstringDistribution dist{sector, haar_probabilities(45, gen), {}};
    const long long shots = 1000000;
    const auto counts = sample_bitstrings(dist, shots, 99);
    long long total = 0;
    for (int k = 0; k < 45; ++k) {
        const double p = dist.p(k);
        const double sigma = std::sqrt(p * (1 - p) / shots);
        CHECK(std::abs(counts[k] / double(shots) - p) < 5.0 * sigma);
        total += counts[k];
    }
    CHECK(total == shots);
    CHECK(sample_bitstrings(dist, 4000, 5) == sample_bitstrings(dist, 4000, 5));
    CHECK(sample_bitstrings(dist, 4000, 5) != sample_bitstrings(dist, 4000, 6));

    Eigen::VectorXd delta = Eigen::VectorXd::Zero(45);
    delta(17) = 1.0;
    const auto dc = sample_bitstrings(BitstringDistribution{sector, delta, {}}, 4000, 1);
    CHECK(dc[17] == 4000);
    CHECK_THROWS_AS(sample_bitstrings(dist, 0, 1), InvalidArgument);
}

TEST_CASE("post-selection on excitation number") {
    const int n = 10, k = 5;
    const auto sector = make_sector(n, k, 1);
    std::mt19937_64 gen(8);
    const BitstringDistribution ideal{sector, haar_probabilities(sector->dimension(), gen), {}};
    const auto counts = sample_bitstrings(ideal, 4000, 3);

    std::map<std::uint64_t, long long> clean;
    for (int s = 0; s < sector->dimension(); ++s)
        if (counts[s]) clean[sector->bitstring_code(s)] = counts[s];
    const auto same = postselect(clean, n, k);
    CHECK(same.shots == 4000);
    for (int s = 0; s < sector->dimension(); ++s) CHECK(same.p(s) == Approx(counts[s] / 4000.0));

    // decay: each excitation independently relaxes with probability 0.1 before readout
    std::map<std::uint64_t, long long> corrupted;
    std::bernoulli_distribution decay(0.1);
    for (int s = 0; s < sector->dimension(); ++s)
        for (long long c = 0; c < counts[s]; ++c) {
            std::uint64_t code = sector->bitstring_code(s);
            for (int b = 0; b < n; ++b)
                if (((code >> b) & 1u) && decay(gen)) code &= ~(std::uint64_t{1} << b);
            ++corrupted[code];
        }
    const auto filtered = postselect(corrupted, n, k);
    // unfiltered: every outcome counts, wrong-weight strings land outside the sector
    long long in_sector = 0;
    for (const auto& [code, c] : corrupted)
        if (std::popcount(code) == k) in_sector += c;
    const std::vector<double> truth(ideal.p.data(), ideal.p.data() + ideal.p.size());
    std::vector<double> raw(truth.size());
    for (int s = 0; s < sector->dimension(); ++s) raw[s] = filtered.p(s) * in_sector / 4000.0;
    const double tv_raw = total_variation(truth, raw) + 0.5 * (4000 - in_sector) / 4000.0;
    const double tv_post = total_variation(truth, std::vector<double>(filtered.p.data(), filtered.p.data() + filtered.p.size()));
    CHECK(tv_post < tv_raw);

    CHECK_THROWS_AS(postselect({{0b11u, 10}}, n, k), EmptyAfterPostselect);
    CHECK_THROWS_AS(postselect({{1u << 12, 1}}, n, k), InvalidArgument);
}

TEST_CASE("projection of doublon states onto bit-strings") {
    const auto full = make_sector(4, 2, 2);
    Eigen::VectorXd p = Eigen::VectorXd::Zero(full->dimension());
    p(full->index_of_label("2000")) = 0.2;
    p(full->index_of_label("1100")) = 0.6;
    p(full->index_of_label("0011")) = 0.2;
    const auto proj = project_to_bitstrings({full, p, {}});
    CHECK(proj.sector->max_occupancy() == 1);
    CHECK(proj.dimension() == 6);
    CHECK(proj.p(proj.sector->index_of_label("1100")) == Approx(0.75));
    CHECK(proj.p(proj.sector->index_of_label("0011")) == Approx(0.25));
    Eigen::VectorXd only_doublon = Eigen::VectorXd::Zero(full->dimension());
    only_doublon(0) = 1.0;
    CHECK(full->is_bitstring(0) == false);
    CHECK_THROWS_AS(project_to_bitstrings({full, only_doublon, {}}), EmptyAfterPostselect);
}

TEST_CASE("finite-U nearest-neighbour model tracks the hardcore XY chain") {
    // mean over 20 random two-excitation initial strings, as for the measured curves
    const double j = kTwoPi * 0.004, u = -kTwoPi * 0.2;
    const auto hc = make_sector(10, 2, 1);
    const auto soft = make_sector(10, 2, 2);
    const auto times = linspace(0.0, 2000.0, 41);
    const SectorPropagator xy(uniform_chain(10, j), hc);
    const SectorPropagator bh(uniform_chain(10, j, 2, u), soft);
    std::mt19937_64 gen(20);
    std::vector<int> picks(45);
    std::iota(picks.begin(), picks.end(), 0);
    std::shuffle(picks.begin(), picks.end(), gen);
    Eigen::VectorXd mu_a = Eigen::VectorXd::Zero(41), mu_b = Eigen::VectorXd::Zero(41);
    for (int s = 0; s < 20; ++s) {
        const std::string z = hc->label(picks[s]);
        const auto a = evolve(xy, basis_state(*hc, z), times);
        const auto b = evolve(bh, basis_state(*soft, z), times);
        for (std::size_t t = 0; t < times.size(); ++t) {
            mu_a(static_cast<Eigen::Index>(t)) += second_moment(a.distribution(t)) / 20;
            mu_b(static_cast<Eigen::Index>(t)) += second_moment(project_to_bitstrings(b.distribution(t))) / 20;
        }
    }
    const double worst = (mu_b.array() / mu_a.array() - 1.0).abs().maxCoeff();
    // indistinguishable at plotting resolution: same window mean, no pointwise excursion beyond 20%
    CAPTURE(worst);
    CHECK(worst < 0.2);
    CHECK(std::abs(mu_b.mean() / mu_a.mean() - 1.0) < 0.05);
    CHECK(mu_a.tail(20).mean() > 1.5 * 2.0 / 46.0);
}
