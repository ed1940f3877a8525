#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numbers>

#include "oracles.hpp"
#include "phasecrb/estimation.hpp"
#include "phasecrb/modes.hpp"

using namespace phasecrb;

namespace {

const oracles::CliffRef kRef;

struct Setup {
    CliffParameters p;
    IlluminationProfile f;
    PhaseModel model2;  // (h, alpha)
    PhaseModel model1;  // height only
    CliffIntegrals n;

    explicit Setup(double u)
        : p(CliffParameters::from_alpha(kRef.k, kRef.h0, kRef.alpha0)),
          f(gaussian_profile(kRef.w(u))),
          model2(cliff_model(p)),
          model1(fix_parameter(model2, 1, p.alpha)),
          n(cliff_integrals(p, f, true)) {}
};

Eigen::VectorXd dtheta2(double kdh, double hdalpha) {
    Eigen::VectorXd d(2);
    d << kdh / kRef.k, hdalpha / kRef.h0;
    return d;
}

}  // namespace

TEST_CASE("build_basis: one-parameter mode profile in closed form") {
    const Setup s(20.0);
    const ModeBasis basis = build_basis(s.model1, s.f, s.model1.reference());
    REQUIRE(basis.mode_count() == 2);

    // g1(x) = -i tanh(alpha x) / sqrt(1 - N3); the unit normalization below
    // also settles the (1-N3) vs (2-N3) normalization question.
    const double norm = std::sqrt(1.0 - s.n.N3);
    for (double y : {-3.0, -1.0, -0.2, 0.0, 0.4, 1.7}) {
        const double x = y / kRef.alpha0;
        const Complex got = basis.mode_shape(1, x);
        const Complex want = Complex(0.0, -1.0) * std::tanh(y) / norm;
        CHECK(std::abs(got - want) < 1e-9);
    }

    const Eigen::MatrixXcd gram = grid_gram(basis);
    CHECK(std::abs(gram(0, 0) - 1.0) < 1e-10);
    CHECK(std::abs(gram(1, 1) - 1.0) < 1e-10);
    CHECK(std::abs(gram(0, 1)) < 1e-10);
}

TEST_CASE("build_basis: two-parameter gram matrix and omega") {
    const Setup s(20.0);
    const ModeBasis basis = build_basis(s.model2, s.f, s.model2.reference());
    REQUIRE(basis.mode_count() == 3);

    const Eigen::MatrixXcd gram = grid_gram(basis);
    CHECK((gram - Eigen::MatrixXcd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-8);

    // Omega in closed form via the overlap integrals.
    const double k = kRef.k, h0 = kRef.h0;
    CHECK(basis.omega()(0, 0) ==
          doctest::Approx(k * k * (1.0 - s.n.N3)).epsilon(1e-9));
    CHECK(basis.omega()(0, 1) == doctest::Approx(k * h0 * s.n.N1).epsilon(1e-8));
    CHECK(basis.omega()(1, 1) == doctest::Approx(h0 * h0 * s.n.N2).epsilon(1e-8));
}

TEST_CASE("build_basis: g2 matches the omega-matrix formula on a 10x finer grid") {
    const Setup s(20.0);
    const ModeBasis basis = build_basis(s.model2, s.f, s.model2.reference());

    const double k = kRef.k, h0 = kRef.h0;
    const double o11 = k * k * (1.0 - s.n.N3);
    const double o12 = k * h0 * s.n.N1;
    const double o22 = h0 * h0 * s.n.N2;
    const double det = o11 * o22 - o12 * o12;

    // Independent recomputation, sampled 10x finer than the stored grid.
    const auto& grid = basis.grid();
    const int fine = 10 * static_cast<int>(grid.size());
    double worst = 0.0;
    double scale = 0.0;
    for (int i = 0; i < fine; ++i) {
        const double x = grid(0) + (grid(grid.size() - 1) - grid(0)) * i / (fine - 1.0);
        const double y = kRef.alpha0 * x;
        const double sech = oracles::sech(y);
        const Complex want = Complex(0.0, 1.0) * std::sqrt(o11 / det) *
                             (-k * h0 * x * sech * sech +
                              k * (o12 / o11) * std::tanh(y));
        const Complex got = basis.mode_shape(2, x);
        worst = std::max(worst, std::abs(got - want));
        scale = std::max(scale, std::abs(want));
    }
    CHECK(worst / scale < 1e-6);
    // Odd-dominant profile: zero on axis, antisymmetric modulus.
    CHECK(std::abs(basis.mode_shape(2, 0.0)) < 1e-9 * scale);
}

TEST_CASE("build_basis: locally indistinguishable parameters are rejected") {
    // phase = (theta1 + theta2) * S(x): derivative states are identical.
    auto shape = [](double x) { return std::tanh(x / 1e-7); };
    PhaseModel degenerate(
        {"a", "b"},
        [shape](double x, const Eigen::VectorXd& th) { return (th(0) + th(1)) * shape(x); },
        {[shape](double x, const Eigen::VectorXd&) { return shape(x); },
         [shape](double x, const Eigen::VectorXd&) { return shape(x); }},
        Eigen::VectorXd::Ones(2), 4e-7);
    CHECK_THROWS_AS(build_basis(degenerate, gaussian_profile(1e-6),
                                degenerate.reference()),
                    DegenerateOmega);
}

TEST_CASE("project: reference state maps to (1, 0, 0)") {
    const Setup s(20.0);
    const ModeBasis basis = build_basis(s.model2, s.f, s.model2.reference());
    const Eigen::VectorXcd amps = project(basis, Eigen::VectorXd::Zero(2));
    CHECK(std::abs(amps(0) - 1.0) < 1e-10);
    CHECK(std::abs(amps(1)) < 1e-10);
    CHECK(std::abs(amps(2)) < 1e-10);
}

TEST_CASE("project: trust region is enforced when set") {
    const Setup s(20.0);
    ModeBasis basis = build_basis(s.model2, s.f, s.model2.reference());
    basis.trust_radius << 0.1 / kRef.k, 0.1 / kRef.h0;
    CHECK_THROWS_AS(project(basis, dtheta2(0.5, 0.0)), InvalidArgument);
    CHECK_NOTHROW(project(basis, dtheta2(0.05, 0.05)));
}

TEST_CASE("project: height amplitude expansion to second order") {
    const Setup s(20.0);
    const ModeBasis basis = build_basis(s.model1, s.f, s.model1.reference());
    const double u1 = 1e-2;
    Eigen::VectorXd d(1);
    d << u1 / kRef.k;
    const Eigen::VectorXcd amps = project(basis, d);
    const Complex want = std::sqrt(1.0 - s.n.N3) * Complex(u1, u1 * u1);
    CHECK(std::abs(amps(1) - want) < 2e-6);  // cubic remainder at u1 = 1e-2
    const Complex want0 =
        Complex(1.0 - 0.5 * (2.0 - s.n.N3) * u1 * u1, u1);
    CHECK(std::abs(amps(0) - want0) < 2e-6);
}

TEST_CASE("project: steepness power lands in the second engineered mode") {
    const Setup s(20.0);
    const ModeBasis basis = build_basis(s.model2, s.f, s.model2.reference());
    const double u2 = 1e-2;
    const ProbabilityVector pv = probabilities_numeric(basis, dtheta2(0.0, u2));
    const double want = (s.n.N2 - s.n.N1 * s.n.N1 / (1.0 - s.n.N3)) * u2 * u2;
    CHECK(std::abs(pv.p(2) - want) < 1e-9);
}

TEST_CASE("analytic probabilities: reference point, sum rule, reduction") {
    const Setup s(20.0);
    const ProbabilityVector at0 = analytic_probabilities_cliff(s.p, s.n, 0.0, 0.0, 2);
    CHECK(at0.p(0) == 1.0);
    CHECK(at0.p(1) == 0.0);
    CHECK(at0.p(2) == 0.0);
    CHECK(at0.residual == 0.0);

    SplitMix64 rng(5);
    for (int i = 0; i < 20; ++i) {
        const double dh = (2.0 * rng.uniform() - 1.0) * 0.3 / kRef.k;
        const double da = (2.0 * rng.uniform() - 1.0) * 0.3 / kRef.h0;
        const ProbabilityVector pv = analytic_probabilities_cliff(s.p, s.n, dh, da, 2);
        CHECK(std::abs(pv.p.sum() - 1.0) < 1e-14);  // exact as polynomials
    }

    // dalpha = 0 reduces to the height-only pair.
    const double dh = 0.07 / kRef.k;
    const ProbabilityVector two = analytic_probabilities_cliff(s.p, s.n, dh, 0.0, 2);
    const ProbabilityVector one = analytic_probabilities_cliff(s.p, s.n, dh, 0.0, 1);
    CHECK(two.p(1) == doctest::Approx(one.p(1)).epsilon(1e-14));
    CHECK(two.p(2) == 0.0);
    CHECK(one.p(0) + one.p(1) == doctest::Approx(1.0).epsilon(1e-15));

    // Far outside the quadratic trust region p0 would go negative.
    CHECK_THROWS_AS(analytic_probabilities_cliff(s.p, s.n, 2.0 / kRef.k, 0.0, 2),
                    NegativeProbability);
}

TEST_CASE("numeric vs analytic probabilities: cubic remainder, stable constant") {
    const Setup s(20.0);
    const ModeBasis basis = build_basis(s.model2, s.f, s.model2.reference());
    // Direction (1, -1)/sqrt(2) in the scaled variables.
    const double inv = 1.0 / std::numbers::sqrt2;
    std::vector<double> constants;
    for (double t : {1e-2, 5e-3, 2.5e-3}) {
        const double u1 = t * inv, u2 = -t * inv;
        const ProbabilityVector num = probabilities_numeric(basis, dtheta2(u1, u2));
        const ProbabilityVector ana =
            analytic_probabilities_cliff(s.p, s.n, u1 / kRef.k, u2 / kRef.h0, 2);
        const double dp = (num.p - ana.p).cwiseAbs().maxCoeff();
        constants.push_back(dp / (t * t * t));
    }
    const double cmin = *std::min_element(constants.begin(), constants.end());
    const double cmax = *std::max_element(constants.begin(), constants.end());
    const double mid = 0.5 * (cmin + cmax);
    CHECK(cmax - mid < 0.2 * mid);
    CHECK(mid - cmin < 0.2 * mid);
}

TEST_CASE("residual outside the truncated basis shrinks at least cubically") {
    const Setup s(20.0);
    const ModeBasis basis = build_basis(s.model2, s.f, s.model2.reference());
    const double t = 2e-2;
    const double r1 =
        probabilities_numeric(basis, dtheta2(t / std::numbers::sqrt2, t / std::numbers::sqrt2))
            .residual;
    const double r2 = probabilities_numeric(basis, dtheta2(0.5 * t / std::numbers::sqrt2,
                                                           0.5 * t / std::numbers::sqrt2))
                          .residual;
    CHECK(r1 > 0.0);
    CHECK(r2 > 0.0);
    CHECK(r1 / r2 > 7.0);  // measured ~16: the leading residual term is quartic
}

TEST_CASE("classical_fim: toy three-outcome model against a sampled score oracle") {
    auto probs = [](const Eigen::VectorXd& th) {
        Eigen::VectorXd p(3);
        p(0) = 0.30 + 0.10 * th(0) - 0.05 * th(1);
        p(1) = 0.45 - 0.10 * th(0) + 0.15 * th(1);
        p(2) = 1.0 - p(0) - p(1);
        return p;
    };
    const Eigen::VectorXd th0 = Eigen::VectorXd::Zero(2);
    const Eigen::VectorXd steps = Eigen::VectorXd::Constant(2, 1e-4);
    const Eigen::MatrixXd F = classical_fim(probs, th0, steps);

    // Exact value for a linear model: sum over outcomes of grad grad^T / p.
    Eigen::MatrixXd want = Eigen::MatrixXd::Zero(2, 2);
    const Eigen::VectorXd p0 = probs(th0);
    Eigen::MatrixXd grads(3, 2);
    grads << 0.10, -0.05, -0.10, 0.15, 0.0, -0.10;
    for (int n = 0; n < 3; ++n)
        want += grads.row(n).transpose() * grads.row(n) / p0(n);
    CHECK((F - want).cwiseAbs().maxCoeff() < 1e-8 * want.cwiseAbs().maxCoeff());

    // Monte-Carlo score oracle: average outer product of d(log p)/d(theta)
    // over one million categorical samples.
    SplitMix64 rng(99);
    Eigen::MatrixXd mc = Eigen::MatrixXd::Zero(2, 2);
    const int samples = 1000000;
    for (int i = 0; i < samples; ++i) {
        const double u = rng.uniform();
        const int outcome = u < p0(0) ? 0 : (u < p0(0) + p0(1) ? 1 : 2);
        const Eigen::Vector2d score = grads.row(outcome).transpose() / p0(outcome);
        mc += score * score.transpose();
    }
    mc /= samples;
    CHECK((F - mc).cwiseAbs().maxCoeff() < 0.02 * mc.cwiseAbs().maxCoeff());
}

TEST_CASE("classical_fim: oversized steps are rejected") {
    auto probs = [](const Eigen::VectorXd& th) {
        Eigen::VectorXd p(2);
        p(0) = 0.5 + 0.4 * std::sin(25.0 * th(0));
        p(1) = 1.0 - p(0);
        return p;
    };
    CHECK_THROWS_AS(classical_fim(probs, Eigen::VectorXd::Zero(1),
                                  Eigen::VectorXd::Constant(1, 0.3)),
                    StepTooLarge);
}

TEST_CASE("classical_fim: analytic cliff model reproduces its quadratic forms") {
    const Setup s(20.0);
    // Scaled coordinates (k dh, h0 dalpha) so both steps are O(1e-3).
    auto probs = [&](const Eigen::VectorXd& u) {
        return analytic_probabilities_cliff(s.p, s.n, u(0) / kRef.k, u(1) / kRef.h0, 2).p;
    };
    const Eigen::MatrixXd F = classical_fim(probs, Eigen::VectorXd::Zero(2),
                                            Eigen::VectorXd::Constant(2, 1e-3));
    Eigen::MatrixXd want(2, 2);
    want << 1.0 - s.n.N3, s.n.N1, s.n.N1, s.n.N2;
    want *= 4.0;
    CHECK((F - want).cwiseAbs().maxCoeff() < 1e-7 * want.cwiseAbs().maxCoeff());
}

TEST_CASE("saturation: gamma-basis measurement reaches the quantum bound") {
    const Setup s(20.0);
    const SaturationReport one = saturation_report(s.model1, s.f, s.model1.reference());
    CHECK(one.pass);
    CHECK(one.max_rel_discrepancy < 1e-4);
    CHECK(one.F_quantum(0, 0) ==
          doctest::Approx(4.0 * kRef.k * kRef.k * (1.0 - s.n.N3)).epsilon(1e-8));

    const SaturationReport two = saturation_report(s.model2, s.f, s.model2.reference());
    CHECK(two.pass);
    CHECK(two.max_rel_discrepancy < 1e-4);

    // The information gap of the optimal measurement is PSD-zero: in scaled
    // O(1) coordinates the smallest eigenvalue of F_Q - F_C sits within 1e-8
    // of the origin.
    Eigen::Matrix2d scale;
    scale << 1.0 / kRef.k, 0.0, 0.0, 1.0 / kRef.h0;
    const Eigen::MatrixXd gap =
        scale * (two.F_quantum - two.F_classical) * scale;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (gap + gap.transpose()));
    CHECK(es.eigenvalues().minCoeff() > -1e-8);
    CHECK(es.eigenvalues().maxCoeff() < 1e-8);
}

TEST_CASE("saturation: quantum dominates a dephased measurement basis") {
    const Setup s(20.0);
    const ModeBasis basis = build_basis(s.model2, s.f, s.model2.reference());
    const double eps = 0.3, c = std::cos(eps), sn = std::sin(eps);

    // Mix gamma_0 and gamma_1 with a 90-degree relative phase; this breaks
    // the phase alignment that makes the gamma basis optimal.
    auto probs = [&](const Eigen::VectorXd& u) {
        Eigen::VectorXd d = dtheta2(u(0), u(1));
        const Eigen::VectorXcd a = project(basis, d);
        Eigen::VectorXd p(3);
        p(0) = std::norm(c * a(0) + Complex(0.0, sn) * a(1));
        p(1) = std::norm(Complex(0.0, sn) * a(0) + c * a(1));
        p(2) = std::norm(a(2));
        return p;
    };
    const Eigen::MatrixXd Fc = classical_fim(probs, Eigen::VectorXd::Zero(2),
                                             Eigen::VectorXd::Constant(2, 1e-3));

    const InnerProducts ip = inner_products(s.model2, s.f);
    Eigen::MatrixXd Fq = qfim_single_photon(ip, 1.0).F;
    // Express the QFIM in the same scaled coordinates.
    Eigen::Matrix2d scale;
    scale << 1.0 / kRef.k, 0.0, 0.0, 1.0 / kRef.h0;
    Fq = scale * Fq * scale;

    CHECK(is_positive_semidefinite(Eigen::MatrixXd(Fq - Fc), 1e-6));
    CHECK(Fc(0, 0) < 0.5 * Fq(0, 0));  // the height information degrades hard
}

TEST_CASE("gamma-basis projection amplitudes satisfy the expansion optimality check") {
    const Setup s(20.0);
    const ModeBasis basis = build_basis(s.model2, s.f, s.model2.reference());
    // Amplitudes as a function of the scaled offsets.
    auto coeffs = [&](const Eigen::VectorXd& u) {
        return project(basis, dtheta2(u(0), u(1)));
    };
    const OptimalityReport rep =
        mode_expansion_optimality(coeffs, Eigen::VectorXd::Zero(2), 1e-4);
    CHECK(rep.fim_match);
    CHECK(rep.max_rel_discrepancy < 1e-6);
    // Scaled QFIM diagonal: 4(1 - N3) and 4 N2.
    CHECK(rep.F_quantum(0, 0) == doctest::Approx(4.0 * (1.0 - s.n.N3)).epsilon(1e-6));
    CHECK(rep.F_quantum(1, 1) == doctest::Approx(4.0 * s.n.N2).epsilon(1e-5));
    // Modes 1 and 2 vanish at the reference point and are reported as such.
    CHECK(rep.degenerate_modes == std::vector<int>{1, 2});
}

TEST_CASE("nonorthogonal projector condition: cliff fails, orthogonal case passes") {
    const Setup s(20.0);
    const InnerProducts ip = inner_products(s.model1, s.f);
    const ProjectorConditionResult r = nonorthogonal_condition_check(ip.G, ip.g);
    CHECK_FALSE(r.equal);
    CHECK(r.ratio == doctest::Approx(2.0 - s.n.N3).epsilon(1e-6));

    // Orthogonal case <Phi_0|Phi_1> = 0: both sides vanish.
    Eigen::MatrixXd G(1, 1);
    G << 2.3;
    Eigen::VectorXd g(1);
    g << 0.0;
    const ProjectorConditionResult r0 = nonorthogonal_condition_check(G, g);
    CHECK(r0.equal);
    CHECK(r0.lhs == 0.0);
    CHECK(r0.rhs == 0.0);
}

TEST_CASE("write_mode_csv: normalized-coordinate export") {
    const Setup s(20.0);
    GridSpec grid;
    grid.points = 257;
    const ModeBasis basis = build_basis(s.model1, s.f, s.model1.reference(), grid);
    namespace fs = std::filesystem;
    const auto path = (fs::temp_directory_path() / "phasecrb_mode_g1.csv").string();
    write_mode_csv(basis, 1, path, kRef.alpha0, "y");

    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "y,re_g1,im_g1,abs_g1");
    int rows = 0;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 257);

    // |g1| vanishes on axis and approaches 1/sqrt(1-N3) in the wings.
    CHECK(std::abs(basis.mode_shape(1, 0.0)) < 1e-12);
    const double wing = std::abs(basis.mode_shape(1, basis.grid()(0)));
    CHECK(wing == doctest::Approx(1.0 / std::sqrt(1.0 - s.n.N3)).epsilon(1e-9));
}

TEST_CASE("saturation: holds for a generic tabulated phase model too") {
    // Smooth random two-parameter (scale, shift) model; the construction
    // never sees the cliff closed forms.
    SplitMix64 rng(314);
    const int n = 300;
    const double L = 4e-6;
    Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(n, -L, L);
    Eigen::VectorXd phase = Eigen::VectorXd::Zero(n);
    for (int j = 1; j <= 4; ++j) {
        const double a = 2.0 * rng.uniform() - 1.0;
        const double b = 2.0 * rng.uniform() - 1.0;
        for (int i = 0; i < n; ++i) {
            const double arg = std::numbers::pi * j * x(i) / L;
            phase(i) += a * std::sin(arg) + b * std::cos(arg);
        }
    }
    const PhaseModel model = tabulated_phase_model(x, phase);
    const IlluminationProfile f = gaussian_profile(1e-6);

    const SaturationReport rep = saturation_report(model, f, model.reference());
    CHECK(rep.pass);
    CHECK(rep.max_rel_discrepancy < 1e-4);
    CHECK(is_positive_semidefinite(Eigen::MatrixXd(rep.F_quantum), 1e-9));
}
