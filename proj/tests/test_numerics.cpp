#include <doctest.h>

#include <numbers>

#include "oracles.hpp"
#include "phasecrb/numerics.hpp"
#include "phasecrb/rng.hpp"

using namespace phasecrb;

namespace {
double gauss_intensity(double x, double w) {
    return std::sqrt(2.0 / (std::numbers::pi * w * w)) * std::exp(-2.0 * x * x / (w * w));
}
}  // namespace

TEST_CASE("integrate: gaussian intensity normalizes to one") {
    const double w = 1e-6;
    QuadratureSpec spec;
    spec.halfwidth = 6.0 * w;
    spec.abs_tol = 1e-12;
    spec.rel_tol = 1e-12;
    const auto est = integrate(
        [&](double x) { return Complex(gauss_intensity(x, w), 0.0); }, spec);
    CHECK(std::abs(est.value.real() - 1.0) < 1e-10);
    CHECK(std::abs(est.value.imag()) < 1e-14);
    CHECK(est.error < 1e-10);
}

TEST_CASE("integrate: odd integrand cancels to the absolute tolerance") {
    const double w = 1e-6;
    QuadratureSpec spec;
    spec.halfwidth = 6.0 * w;
    spec.abs_tol = 1e-12;
    spec.rel_tol = 1e-12;
    const double v = integrate_real(
        [&](double x) { return x / w * gauss_intensity(x, w); }, spec);
    CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("integrate: narrow sech^2 overlap matches the trapezoid oracle") {
    // w*alpha = 20; the sech^2 feature occupies ~1/20 of the window.
    const double u = 20.0;
    QuadratureSpec spec = QuadratureSpec::for_feature(std::max(6.0 * u, 30.0), 4.0);
    spec.abs_tol = 1e-15;
    spec.rel_tol = 1e-13;
    const double pref = std::sqrt(2.0 / std::numbers::pi) / u;
    auto f = [&](double y) {
        const double s = oracles::sech(y);
        return pref * std::exp(-2.0 * y * y / (u * u)) * s * s;
    };
    const auto est = integrate([&](double y) { return Complex(f(y), 0.0); }, spec);
    const double got = est.value.real();
    const double want = oracles::trapezoid_real(f, -spec.halfwidth, spec.halfwidth);
    CHECK(got == doctest::Approx(want).epsilon(1e-11));
    // The reported error estimate bounds the actual error (with slack for
    // the oracle's own discretization).
    CHECK(std::abs(got - want) < est.error + 1e-11 * std::abs(want));
    // First-order prediction sqrt(8/pi)/u ~ 0.0798, good to ~0.4% here.
    CHECK(got == doctest::Approx(std::sqrt(8.0 / std::numbers::pi) / u).epsilon(5e-3));
}

TEST_CASE("integrate: panel seeding sees support far narrower than the window") {
    // Without initial panels the first rule evaluates only ~15 points on
    // [-600, 600] and returns 0 for a unit-width bump.
    QuadratureSpec spec;
    spec.halfwidth = 600.0;
    spec.initial_panels = 256;
    spec.abs_tol = 1e-13;
    spec.rel_tol = 1e-12;
    const double v = integrate_real(
        [](double y) { double s = oracles::sech(y); return s * s; }, spec);
    CHECK(v == doctest::Approx(2.0).epsilon(1e-10));  // integral of sech^2 = 2
}

TEST_CASE("integrate: exhausted budget raises NonConvergence") {
    QuadratureSpec spec;
    spec.halfwidth = 1.0;
    spec.max_subdivisions = 3;
    spec.initial_panels = 1;
    spec.abs_tol = 1e-300;
    spec.rel_tol = 1e-15;
    CHECK_THROWS_AS(
        integrate_real([](double x) { return std::sqrt(std::abs(x)); }, spec),
        NonConvergence);
}

TEST_CASE("integrate: doubling the window leaves converged tails unchanged") {
    const double u = 20.0;
    auto value_at = [&](double halfwidth) {
        QuadratureSpec spec = QuadratureSpec::for_feature(halfwidth, 4.0);
        spec.abs_tol = 1e-290;
        spec.rel_tol = 1e-12;
        const double pref = std::sqrt(2.0 / std::numbers::pi) / u;
        return integrate_real(
            [&](double y) {
                const double s = oracles::sech(y);
                return pref * std::exp(-2.0 * y * y / (u * u)) * y * std::tanh(y) * s * s;
            },
            spec);
    };
    const double base = value_at(std::max(6.0 * u, 30.0));
    const double wide = value_at(2.0 * std::max(6.0 * u, 30.0));
    CHECK(std::abs(wide - base) < 1e-10 * std::abs(base));
}

TEST_CASE("invert: identity and diagonal") {
    CHECK(invert(Eigen::MatrixXcd(Eigen::MatrixXcd::Identity(2, 2)))
              .isApprox(Eigen::MatrixXcd::Identity(2, 2), 1e-14));
    Eigen::MatrixXd d = Eigen::Vector2d(4.0, 9.0).asDiagonal();
    const Eigen::MatrixXd inv = invert(d);
    CHECK(inv(0, 0) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(inv(1, 1) == doctest::Approx(1.0 / 9.0).epsilon(1e-14));
    CHECK(std::abs(inv(0, 1)) < 1e-16);
}

TEST_CASE("invert: cliff QFIM against the cofactor oracle") {
    // Reference-geometry QFIM in SI units; entries span ~31 decades.
    const oracles::CliffRef ref;
    const auto n = oracles::cliff_integrals_trapezoid(20.0, ref.ka(), 200000);
    Eigen::Matrix2d F;
    F(0, 0) = 4.0 * ref.k * ref.k * (1.0 - n.N3);
    F(0, 1) = F(1, 0) = 4.0 * ref.k * ref.h0 * n.N1;
    F(1, 1) = 4.0 * ref.h0 * ref.h0 * n.N2;

    const Eigen::MatrixXd inv = invert(Eigen::MatrixXd(F));
    const Eigen::Matrix2d want = oracles::cofactor_inverse(F);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            CHECK(inv(i, j) == doctest::Approx(want(i, j)).epsilon(1e-12));

    // Contract: m * invert(m) = I within 1e-10 per entry, judged against the
    // magnitudes actually summed (the SI entries span ~31 decades, so the
    // absolute off-diagonal residual is pure cancellation noise).
    const Eigen::MatrixXd residual = F * inv - Eigen::MatrixXd::Identity(2, 2);
    const Eigen::MatrixXd magnitude =
        F.cwiseAbs() * inv.cwiseAbs() + Eigen::MatrixXd::Identity(2, 2);
    CHECK((residual.cwiseAbs().array() / magnitude.array()).maxCoeff() < 1e-10);

    // On O(1)-scaled entries the plain per-entry contract holds as stated.
    Eigen::Matrix2d scale;
    scale << 1.0 / ref.k, 0.0, 0.0, 1.0 / ref.h0;
    const Eigen::MatrixXd Fs = scale * F * scale;
    const Eigen::MatrixXd plain =
        Fs * invert(Eigen::MatrixXd(Fs)) - Eigen::MatrixXd::Identity(2, 2);
    CHECK(plain.cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("invert: singular inputs fail loudly") {
    CHECK_THROWS_AS(invert(Eigen::MatrixXcd(Eigen::MatrixXcd::Zero(2, 2))), SingularMatrix);
    Eigen::MatrixXd rank1(2, 2);
    rank1 << 1.0, 2.0, 2.0, 4.0;
    CHECK_THROWS_AS(invert(rank1), SingularMatrix);
    CHECK_THROWS_AS(invert(Eigen::MatrixXcd(Eigen::MatrixXcd::Ones(2, 3))), InvalidArgument);
}

TEST_CASE("invert: invert twice returns the input (property)") {
    SplitMix64 rng(20240811);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 1 + static_cast<int>(rng.next() % 4);
        Eigen::MatrixXcd m(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                m(i, j) = Complex(2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0);
        m += 3.0 * Eigen::MatrixXcd::Identity(n, n);  // keep it well conditioned
        const Eigen::MatrixXcd back = invert(invert(m));
        CHECK((back - m).cwiseAbs().maxCoeff() < 1e-9 * m.cwiseAbs().maxCoeff());
    }
}

TEST_CASE("is_positive_semidefinite: boundary and indefinite cases") {
    CHECK(is_positive_semidefinite(
        Eigen::MatrixXd(Eigen::Vector2d(1.0, 0.0).asDiagonal()), 1e-10));
    Eigen::MatrixXd ind(2, 2);
    ind << 1.0, 2.0, 2.0, 1.0;  // eigenvalues 3, -1
    CHECK_FALSE(is_positive_semidefinite(ind, 1e-10));

    Eigen::MatrixXcd nh(2, 2);
    nh << 1.0, Complex(0.0, 1.0), Complex(0.0, 1.0), 1.0;  // not Hermitian
    CHECK_THROWS_AS(is_positive_semidefinite(nh, 1e-10), NotHermitian);

    // A tiny negative eigenvalue within tolerance still counts as PSD.
    Eigen::MatrixXd eps = Eigen::Vector2d(1.0, -1e-14).asDiagonal();
    CHECK(is_positive_semidefinite(eps, 1e-10));
}

TEST_CASE("integrate: random odd polynomials times the gaussian cancel (property)") {
    SplitMix64 rng(77);
    const double w = 1e-6;
    QuadratureSpec spec;
    spec.halfwidth = 7.0 * w;
    spec.abs_tol = 1e-12;
    spec.rel_tol = 1e-12;
    for (int trial = 0; trial < 10; ++trial) {
        double c1 = 2.0 * rng.uniform() - 1.0;
        double c3 = 2.0 * rng.uniform() - 1.0;
        double c5 = 2.0 * rng.uniform() - 1.0;
        const double v = integrate_real(
            [&](double x) {
                const double t = x / w;
                return (c1 * t + c3 * t * t * t + c5 * std::pow(t, 5)) *
                       gauss_intensity(x, w);
            },
            spec);
        CHECK(std::abs(v) < 1e-12);
    }
}
