#include "doctest.h"

#include <cmath>
#include <complex>
#include <numbers>

#include "bandgapsim/errors.hpp"
#include "bandgapsim/lattice_circuit.hpp"
#include "bandgapsim/presets.hpp"
#include "bandgapsim/units.hpp"

using namespace bgs;
using doctest::Approx;

namespace {

constexpr double kPi = std::numbers::pi;

CircuitSpec chain(int n, double c0, std::vector<double> ct, double l0 = 2.0) {
    CircuitSpec s;
    s.n_cells = n;
    s.L0 = l0;
    s.C0 = c0;
    s.Ct = std::move(ct);
    return s;
}

// Independent oracles

Eigen::Matrix3d cofactor_inverse(const Eigen::Matrix3d& m) {
    Eigen::Matrix3d cof;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const int r0 = (i + 1) % 3, r1 = (i + 2) % 3, c0 = (j + 1) % 3, c1 = (j + 2) % 3;
            cof(i, j) = m(r0, c0) * m(r1, c1) - m(r0, c1) * m(r1, c0);
        }
    const double det = m.row(0).dot(cof.row(0));
    return cof.transpose() / det;
}

// Trapezoid rule on the periodic integrand of I(n,a); spectrally accurate.
double quadrature_I(int n, double a, int points = 200000) {
    double sum = 0.0;
    for (int k = 0; k < points; ++k) {
        const double x = -kPi + 2.0 * kPi * k / points;
        sum += std::cos(n * x) / (a + std::cos(x));
    }
    return sum * 2.0 * kPi / points;
}

// Band-mediated exchange as an explicit sum over N lattice momenta.
double kspace_exchange(double g1, double g2, double d1, double d2, double t, int distance, int n_k) {
    double sum = 0.0;
    for (int k = 0; k < n_k; ++k) {
        const double kk = 2.0 * kPi * k / n_k;
        const double wk = 2.0 * t * std::cos(kk);
        sum += std::cos(kk * distance) * 0.5 * (1.0 / (d1 - wk) + 1.0 / (d2 - wk));
    }
    return g1 * g2 * sum / n_k;
}

}  // namespace

TEST_CASE("two-cell capacitance matrix counts only existing neighbours") {
    const Eigen::MatrixXd c = capacitance_matrix(chain(2, 1.0, {0.1}));
    REQUIRE(c.rows() == 2);
    CHECK(c(0, 0) == Approx(1.1).epsilon(1e-15));
    CHECK(c(1, 1) == Approx(1.1).epsilon(1e-15));
    CHECK(c(0, 1) == Approx(-0.1).epsilon(1e-15));
    CHECK(c(1, 0) == Approx(-0.1).epsilon(1e-15));
}

TEST_CASE("fitted device capacitances land on the right entries") {
    const CircuitSpec s = presets::fitted_device();
    const Eigen::MatrixXd c = capacitance_matrix(s);
    const int n = s.n_cells;
    const int q = s.qubit_cells[0] - 1;
    CHECK(c.rows() == n + 1);
    CHECK(c(10, 11) == Approx(-60.17));
    CHECK(c(10, 12) == Approx(-0.542));
    CHECK(c(q, n) == Approx(-9.19));
    CHECK(c(q + 1, n) == Approx(-0.368));
    CHECK(c(n, n) == Approx(presets::kFittedCqSigma));
    // interior resonator: C0 + 2 sum Ct + C_g,0 + 2 C_g,1
    double ct_sum = 0.0;
    for (double v : s.Ct) ct_sum += v;
    CHECK(c(20, 20) == Approx(242.19 + 2.0 * ct_sum + 9.19 + 2.0 * 0.368));
    CHECK((c - c.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("capacitance inverse agrees with a cofactor inverse") {
    CircuitSpec s = chain(2, 50.0, {7.0});
    s.Cg = {3.0, 0.5};
    s.Cq = 80.0;
    s.qubit_cells = {1};
    s.EJ = {15.0};
    const Eigen::MatrixXd c = capacitance_matrix(s);
    REQUIRE(c.rows() == 3);
    const Eigen::Matrix3d oracle = cofactor_inverse(c);
    const Eigen::MatrixXd inv = first_order_inverse(s, kExactOrder);
    CHECK((inv - oracle).cwiseAbs().maxCoeff() / oracle.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("unphysical specs are rejected") {
    CHECK_THROWS_AS(capacitance_matrix(chain(2, -1.0, {0.1})), InvalidSpec);
    CHECK_THROWS_AS(capacitance_matrix(chain(2, 1.0, {-0.1})), InvalidSpec);
    CircuitSpec bad = chain(3, 1.0, {0.1});
    bad.M = {3000.0};
    CHECK_THROWS_AS(inductance_matrix(bad), InvalidSpec);
    CircuitSpec dup = chain(3, 1.0, {0.1});
    dup.Cq = 1.0;
    dup.qubit_cells = {2, 2};
    dup.EJ = {1.0, 1.0};
    CHECK_THROWS_AS(capacitance_matrix(dup), InvalidSpec);
    Eigen::LLT<Eigen::MatrixXd> llt(capacitance_matrix(presets::fitted_device()));
    CHECK(llt.info() == Eigen::Success);
}

TEST_CASE("Neumann expansion of the capacitance inverse") {
    SUBCASE("order 1 off-diagonal equals Ct / Cw0^2") {
        const CircuitSpec s = chain(2, 0.9, {0.1});  // Cw0 = 1.0, r = 0.1
        const Eigen::MatrixXd inv = first_order_inverse(s, 1);
        CHECK(inv(0, 1) == Approx(0.1).epsilon(1e-15));
        CHECK(inv(0, 0) == Approx(1.0).epsilon(1e-15));
    }
    SUBCASE("order 0 is the diagonal inverse") {
        const CircuitSpec s = chain(4, 1.0, {0.1});
        const Eigen::MatrixXd c = capacitance_matrix(s);
        const Eigen::MatrixXd inv = first_order_inverse(s, 0);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) CHECK(inv(i, j) == Approx(i == j ? 1.0 / c(i, i) : 0.0));
    }
    SUBCASE("order 8 remainder obeys the geometric bound on a 6-cell chain") {
        const CircuitSpec s = chain(6, 1.0, {0.1});
        const Eigen::MatrixXd c = capacitance_matrix(s);
        const Eigen::MatrixXd exact = c.inverse();
        Eigen::MatrixXd a = -c;
        a.diagonal().setZero();
        const Eigen::MatrixXd ad = a * c.diagonal().cwiseInverse().asDiagonal();
        const double rho = ad.cwiseAbs().rowwise().sum().maxCoeff();
        const double bound = std::pow(rho, 9) / (1.0 - rho) / c.diagonal().minCoeff();
        const double dev = (first_order_inverse(s, 8) - exact).cwiseAbs().maxCoeff();
        CHECK(dev < bound);
        CHECK(dev > 0.0);
    }
    SUBCASE("converges monotonically") {
        const CircuitSpec s = chain(8, 1.0, {0.25, 0.02});
        const Eigen::MatrixXd exact = capacitance_matrix(s).inverse();
        double prev = 1e300;
        for (int k = 0; k <= 12; ++k) {
            const double dev = (first_order_inverse(s, k) - exact).cwiseAbs().maxCoeff();
            CHECK(dev < prev);
            prev = dev;
        }
    }
    SUBCASE("divergent series is reported") {
        Eigen::MatrixXd c(2, 2);
        c << 1.0, -1.5, -1.5, 4.0;
        CHECK_THROWS_AS(neumann_inverse(c, 3), SeriesDiverges);
    }
}

TEST_CASE("closed-form dispersion") {
    const CircuitSpec s = chain(10, 240.0, {60.0}, 2.0);
    const Dispersion d = dispersion_from_spec(s);
    const long double csum = 240.0L + 120.0L;
    const long double wc = 1000.0L / std::sqrt(2.0L * csum);
    const long double t = 60.0L / (2.0L * csum) * wc;
    CHECK(d.omega_c == Approx(static_cast<double>(wc)).epsilon(1e-14));
    CHECK(d.t == Approx(static_cast<double>(t)).epsilon(1e-14));
    CHECK(d.band_lower == Approx(d.omega_c - 2.0 * d.t));
    CHECK(d.band_upper == Approx(d.omega_c + 2.0 * d.t));
    CHECK(units::radns_to_ghz(d.omega_c) == Approx(5.93135).epsilon(1e-5));
}

TEST_CASE("closed form equals first-order periodic diagonalization for NN specs") {
    for (double ct : {5.0, 30.0, 60.0}) {
        CircuitSpec s = chain(10, 240.0, {ct}, 2.0);
        s.Cg = {9.0};
        const Dispersion cf = dispersion_closed_form(s);
        const Dispersion num = dispersion_periodic(s, 256, 1);
        CHECK(std::abs(num.band_lower - cf.band_lower) / cf.band_lower < 1e-10);
        CHECK(std::abs(num.band_upper - cf.band_upper) / cf.band_upper < 1e-10);
    }
}

TEST_CASE("fitted device band edges") {
    const Dispersion d = dispersion_from_spec(presets::fitted_device());
    CHECK(units::radns_to_ghz(d.band_lower) == Approx(5.01).epsilon(0.01));
    CHECK(units::radns_to_ghz(d.band_upper) == Approx(7.08).epsilon(0.01));
    CHECK(0.5 * (5.01 + 7.08) == Approx(6.045));
}

TEST_CASE("lattice integral against quadrature") {
    CHECK(lattice_integral_I(0, 2.0) == Approx(2.0 * kPi / std::sqrt(3.0)).epsilon(1e-14));
    CHECK(lattice_integral_I(0, 2.0) == Approx(quadrature_I(0, 2.0)).epsilon(1e-10));
    CHECK(lattice_integral_I(0, 2.0) == Approx(3.6276).epsilon(1e-4));
    CHECK(lattice_integral_I(1, 2.0) ==
          Approx(-lattice_integral_I(0, 2.0) * std::exp(-std::log(2.0 + std::sqrt(3.0)))));
    for (int n = 0; n <= 5; ++n)
        for (double a : {1.1, 1.7, 3.0}) {
            CHECK(lattice_integral_I(n, a) == Approx(quadrature_I(n, a)).epsilon(1e-8));
            CHECK(lattice_integral_I(n, -a) == Approx(quadrature_I(n, -a)).epsilon(1e-8));
            const double sign = ((n + 1) % 2 == 0) ? 1.0 : -1.0;
            CHECK(lattice_integral_I(n, -a) == Approx(sign * lattice_integral_I(n, a)));
        }
    CHECK_THROWS_AS(lattice_integral_I(0, 0.5), OnBranchCut);
    CHECK_THROWS_AS(lattice_integral_I(0, -1.0), OnBranchCut);
}

TEST_CASE("localization length") {
    const long double oracle = 1.0L / std::acosh(1.2L);
    CHECK(localization_length(2.4, 1.0) == Approx(static_cast<double>(oracle)).epsilon(1e-14));
    CHECK(localization_length(-2.4, 1.0) == Approx(1.6069).epsilon(1e-4));
    CHECK(localization_length(1e9, 1.0) < 0.05);
    CHECK_THROWS_AS(localization_length(1.5, 1.0), InsideBand);
    CHECK_THROWS_AS(localization_length(2.0 * (1.0 + 1e-13), 1.0), DivergentLength);
}

TEST_CASE("bandgap exchange: closed form vs k-space sum") {
    const double t = units::mhz_to_radns(500.0);
    const double g = units::mhz_to_radns(100.0);
    for (double side : {-1.0, 1.0}) {
        const double delta = side * 1.2 * 2.0 * t;
        for (int d = 0; d <= 3; ++d) {
            const double cf = bandgap_exchange_J(g, g, delta, delta, t, d);
            const double ks = kspace_exchange(g, g, delta, delta, t, d, 4096);
            CHECK(std::abs(cf - ks) / std::abs(ks) < 5e-3);
        }
    }
    // unequal detunings in the same gap
    const double cf = bandgap_exchange_J(g, 0.7 * g, -2.6 * t, -3.1 * t, t, 2);
    CHECK(cf == Approx(kspace_exchange(g, 0.7 * g, -2.6 * t, -3.1 * t, t, 2, 4096)).epsilon(5e-3));
}

TEST_CASE("bandgap exchange signs and Lamb shift") {
    const double t = 1.0, g = 0.1;
    const double ubg0 = bandgap_exchange_J(g, g, 3.0, 3.0, t, 0);
    CHECK(ubg0 == Approx(g * g / std::sqrt(9.0 - 4.0)));
    CHECK(bandgap_exchange_J(g, g, -3.0, -3.0, t, 0) == Approx(-g * g / std::sqrt(5.0)));
    const double l1 = bandgap_exchange_J(g, g, -3.0, -3.0, t, 1);
    const double l2 = bandgap_exchange_J(g, g, -3.0, -3.0, t, 2);
    CHECK(l1 > 0.0);
    CHECK(l2 < 0.0);
    CHECK_THROWS_AS(bandgap_exchange_J(g, g, 1.5, 1.5, t, 1), InsideBand);
}

TEST_CASE("property: LBG alternation, UBG positivity, exponential decay") {
    const double t = 1.0, g = 0.05;
    for (double ratio = 1.1; ratio <= 3.0; ratio += 0.1) {
        const double lambda = localization_length(2.0 * ratio * t, t);
        double prev_abs = 1e300;
        for (int d = 1; d <= 8; ++d) {
            const double lbg = bandgap_exchange_J(g, g, -2.0 * ratio * t, -2.0 * ratio * t, t, d);
            const double ubg = bandgap_exchange_J(g, g, 2.0 * ratio * t, 2.0 * ratio * t, t, d);
            CHECK(ubg > 0.0);
            CHECK((lbg > 0.0) == (d % 2 == 1));
            CHECK(std::abs(lbg) < prev_abs);
            prev_abs = std::abs(lbg);
            const double slope = std::log(std::abs(lbg)) -
                                 std::log(std::abs(bandgap_exchange_J(g, g, -2.0 * ratio * t, -2.0 * ratio * t, t, d - 1)));
            CHECK(slope == Approx(-1.0 / lambda).epsilon(0.02));
        }
    }
}

TEST_CASE("second quantization") {
    SUBCASE("charging energy from C_qSigma") {
        CircuitSpec s = chain(1, 240.0, {});
        s.Cq = presets::kFittedCqSigma;
        s.qubit_cells = {1};
        s.EJ = {15.0};
        const SecondQuantizedCouplings q = second_quantize(s);
        const long double e = 1.602176634e-19L, h = 6.62607015e-34L;
        const long double ec_ghz = e * e / (2.0L * h * 92.7e-15L) * 1e-9L;
        CHECK(q.EC_ghz(0) == Approx(static_cast<double>(ec_ghz)).epsilon(1e-12));
        CHECK(q.EC_ghz(0) == Approx(0.20895).epsilon(1e-4));
        CHECK(q.U_q(0) == Approx(-units::ghz_to_radns(q.EC_ghz(0))));
        CHECK(q.U_q(0) < 0.0);
        const double ec = q.EC_ghz(0);
        CHECK(q.omega_q(0) == Approx(units::ghz_to_radns(std::sqrt(8.0 * 15.0 * ec) - ec)));
    }
    SUBCASE("decoupled limit") {
        CircuitSpec s = chain(4, 240.0, {}, 2.0);
        const SecondQuantizedCouplings q = second_quantize(s);
        CHECK(q.t_matrix.cwiseAbs().maxCoeff() == 0.0);
        for (int i = 0; i < 4; ++i) CHECK(q.omega_n(i) == Approx(1000.0 / std::sqrt(2.0 * 240.0)));
        s.Cq = 80.0;
        s.qubit_cells = {2};
        s.EJ = {12.0};
        s.idle_qubit_loading = false;
        const SecondQuantizedCouplings q2 = second_quantize(s);
        CHECK(q2.g_matrix.cwiseAbs().maxCoeff() == 0.0);
        CHECK(q2.Jprime.cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("NN hopping matches the closed form to first order") {
        const double c0 = 240.0;
        for (double r : {0.01, 0.005}) {
            // choose Ct so that Ct / (C0 + 2 Ct) = r
            const double ct = r * c0 / (1.0 - 2.0 * r);
            const CircuitSpec s = chain(40, c0, {ct}, 2.0);
            const SecondQuantizedCouplings q = second_quantize(s);
            const Dispersion cf = dispersion_closed_form(s);
            const double err = std::abs(q.t_matrix(20, 21) - cf.t);
            CHECK(err < 2.0 * r * r * cf.omega_c);
            CHECK(err > 0.0);
        }
    }
    SUBCASE("symmetry of coupling matrices") {
        const SecondQuantizedCouplings q = second_quantize(presets::fitted_device());
        CHECK((q.t_matrix - q.t_matrix.transpose()).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(q.t_matrix.diagonal().cwiseAbs().maxCoeff() == 0.0);
        CHECK(q.g_matrix.cwiseAbs().maxCoeff() > 0.0);
    }
}

TEST_CASE("long-range tail") {
    CircuitSpec s = chain(20, 242.19, {60.17, 0.542});
    s.M = {-18.1, 13.5, -1.09, 0.438};
    const CircuitSpec f = longrange_tail_fill(s, 10);
    CHECK(f.ct(4) == Approx(f.ct(2) / 8.0).epsilon(1e-15));
    CHECK(f.ct(4) == Approx(0.06775).epsilon(1e-12));
    CHECK(f.ct(2) == Approx(0.542));
    CHECK(f.M[4] / f.M[3] == Approx(-std::log(1.2) / std::log(1.25)).epsilon(1e-14));
    CHECK(f.M[4] / f.M[3] == Approx(-0.8170).epsilon(1e-4));
    CHECK(f.M.size() == 10);
    CHECK(f.ct(11) == 0.0);
    CircuitSpec missing = chain(20, 242.19, {60.17});
    missing.M = {-18.1, 13.5, -1.09, 0.438};
    CHECK_THROWS_AS(longrange_tail_fill(missing), MissingAnchor);
}
