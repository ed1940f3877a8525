#include "phasecrb/modes.hpp"

#include <cmath>
#include <fstream>

#include "phasecrb/report.hpp"

namespace phasecrb {

namespace {
constexpr Complex kI{0.0, 1.0};
}

// ---------------------------------------------------------------------------
// ModeBasis

ModeBasis::ModeBasis(PhaseModel model, IlluminationProfile profile,
                     Eigen::VectorXd theta0, Eigen::MatrixXcd coeffs,
                     Eigen::MatrixXd omega, const GridSpec& grid, QuadratureSpec quad)
    : model_(std::move(model)),
      profile_(std::move(profile)),
      theta0_(std::move(theta0)),
      coeffs_(std::move(coeffs)),
      omega_(std::move(omega)),
      quad_(quad) {
    trust_radius = Eigen::VectorXd::Constant(theta0_.size(),
                                             std::numeric_limits<double>::infinity());
    const int points = std::max(grid.points, 2);
    const double L = grid.halfwidth > 0.0 ? grid.halfwidth : quad_.halfwidth;
    grid_ = Eigen::VectorXd::LinSpaced(points, -L, L);
    gamma_.resize(coeffs_.rows(), points);
    for (int k = 0; k < mode_count(); ++k)
        for (int i = 0; i < points; ++i) gamma_(k, i) = mode_value(k, grid_(i));
}

Complex ModeBasis::mode_shape(int k, double x) const {
    Complex shape = coeffs_(k, 0);
    for (int j = 1; j < mode_count(); ++j)
        shape += coeffs_(k, j) * kI * model_.partial(j - 1, x, theta0_);
    return shape;
}

Complex ModeBasis::mode_value(int k, double x) const {
    const Complex envelope =
        profile_.amplitude(x) * std::exp(kI * model_.phase(x, theta0_));
    return envelope * mode_shape(k, x);
}

// ---------------------------------------------------------------------------
// Construction

ModeBasis build_basis(const PhaseModel& model, const IlluminationProfile& f,
                      const Eigen::VectorXd& theta0, const GridSpec& grid,
                      QuadratureSpec quad) {
    if (quad.halfwidth <= 0.0) quad = quadrature_for(model, f);
    const int m = model.parameter_count();
    const InnerProducts ip = inner_products(model, f, theta0, quad);

    const Eigen::MatrixXd omega = ip.G - ip.g * ip.g.transpose();
    for (int i = 0; i < m; ++i)
        if (!(omega(i, i) > 0.0))
            throw DegenerateOmega("build_basis: omega diagonal not positive");
    // Scale-free singularity test on the correlation determinant.
    const Eigen::VectorXd d = omega.diagonal().cwiseSqrt();
    const Eigen::MatrixXd corr =
        d.cwiseInverse().asDiagonal() * omega * d.cwiseInverse().asDiagonal();
    if (corr.determinant() < 1e-10)
        throw DegenerateOmega(
            "build_basis: parameters locally indistinguishable at theta0");

    // Gram matrix of the raw states [Phi_0, Phi_1..Phi_M]:
    //   <Phi_0|Phi_0> = 1, <Phi_0|Phi_j> = i g_j, <Phi_i|Phi_j> = G_ij.
    const int n = m + 1;
    Eigen::MatrixXcd S(n, n);
    S(0, 0) = 1.0;
    for (int j = 0; j < m; ++j) {
        S(0, j + 1) = kI * ip.g(j);
        S(j + 1, 0) = -kI * ip.g(j);
    }
    S.bottomRightCorner(m, m) = ip.G.cast<Complex>();
    auto dot = [&S](const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
        return Complex(a.adjoint() * S * b);
    };

    // omega_i = Phi_i + <Phi_i|Phi_0> Phi_0, already orthogonal to Phi_0.
    // Modified Gram-Schmidt with one re-orthogonalization sweep.
    Eigen::MatrixXcd coeffs = Eigen::MatrixXcd::Zero(n, n);
    coeffs(0, 0) = 1.0;
    for (int i = 0; i < m; ++i) {
        Eigen::VectorXcd v = Eigen::VectorXcd::Zero(n);
        v(i + 1) = 1.0;
        v(0) = -kI * ip.g(i);
        for (int pass = 0; pass < 2; ++pass)
            for (int j = 1; j <= i; ++j) {
                const Eigen::VectorXcd q = coeffs.row(j).transpose();
                v -= dot(q, v) * q;
            }
        const double norm2 = dot(v, v).real();
        if (!(norm2 > 0.0))
            throw DegenerateOmega("build_basis: zero-norm orthogonalized state");
        coeffs.row(i + 1) = (v / std::sqrt(norm2)).transpose();
    }

    return ModeBasis(model, f, theta0, std::move(coeffs), omega, grid, quad);
}

Eigen::MatrixXcd grid_gram(const ModeBasis& basis) {
    const auto& x = basis.grid();
    const auto& gam = basis.samples();
    const int pts = static_cast<int>(x.size());
    Eigen::VectorXd w = Eigen::VectorXd::Constant(pts, x(1) - x(0));
    w(0) *= 0.5;
    w(pts - 1) *= 0.5;

    const int n = basis.mode_count();
    Eigen::MatrixXcd gram(n, n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            gram(a, b) = (gam.row(a).conjugate().cwiseProduct(gam.row(b)) *
                          w.cast<Complex>().asDiagonal())
                             .sum();
    return gram;
}

// ---------------------------------------------------------------------------
// Projection and probabilities

Eigen::VectorXcd project(const ModeBasis& basis, const Eigen::VectorXd& dtheta) {
    const int m = basis.parameter_count();
    if (dtheta.size() != m) throw InvalidArgument("project: dtheta size mismatch");
    for (int i = 0; i < m; ++i)
        if (std::abs(dtheta(i)) > basis.trust_radius(i))
            throw InvalidArgument("project: dtheta outside the trust region");

    const Eigen::VectorXd theta = basis.theta0() + dtheta;
    const auto& model = basis.model();
    const auto& f = basis.profile();
    Eigen::VectorXcd amps(basis.mode_count());
    for (int k = 0; k < basis.mode_count(); ++k) {
        const auto est = integrate(
            [&](double x) {
                const double dphi =
                    model.phase(x, theta) - model.phase(x, basis.theta0());
                return std::conj(basis.mode_shape(k, x)) * f.intensity(x) *
                       std::exp(kI * dphi);
            },
            basis.quadrature());
        amps(k) = est.value;
    }
    return amps;
}

ProbabilityVector probabilities_numeric(const ModeBasis& basis,
                                        const Eigen::VectorXd& dtheta) {
    const Eigen::VectorXcd amps = project(basis, dtheta);
    ProbabilityVector out;
    out.p = amps.cwiseAbs2().cwiseMin(1.0);  // quadrature round-off can give 1 + eps
    out.residual = 1.0 - out.p.sum();
    if (out.residual < -1e-10)
        throw NonConvergence("probabilities_numeric: mode probabilities sum to " +
                             std::to_string(out.p.sum()));
    return out;
}

ProbabilityVector analytic_probabilities_cliff(const CliffParameters& ref,
                                               const CliffIntegrals& n, double dh,
                                               double dalpha, int modes) {
    if (modes != 1 && modes != 2)
        throw InvalidArgument("analytic_probabilities_cliff: modes must be 1 or 2");
    if (modes == 1 && dalpha != 0.0)
        throw InvalidArgument("analytic_probabilities_cliff: modes=1 requires dalpha=0");

    const double u1 = ref.k * dh;        // k dh
    const double u2 = ref.h * dalpha;    // h0 dalpha
    const double N1 = n.N1, N2 = n.N2, N3 = n.N3;

    ProbabilityVector out;
    out.p.resize(modes + 1);
    if (modes == 1) {
        out.p(1) = (1.0 - N3) * u1 * u1;
        out.p(0) = 1.0 - out.p(1);
    } else {
        out.p(0) = 1.0 - (2.0 - N3) * u1 * u1 - N2 * u2 * u2 - 2.0 * N1 * u1 * u2 +
                   u1 * u1;
        out.p(1) = (1.0 - N3) * u1 * u1 + N1 * N1 / (1.0 - N3) * u2 * u2 +
                   2.0 * N1 * u1 * u2;
        out.p(2) = (N2 - N1 * N1 / (1.0 - N3)) * u2 * u2;
    }
    for (int i = 0; i <= modes; ++i)
        if (out.p(i) < -1e-12)
            throw NegativeProbability("analytic_probabilities_cliff: p" +
                                      std::to_string(i) + " = " +
                                      std::to_string(out.p(i)));
    out.residual = 1.0 - out.p.sum();
    return out;
}

// ---------------------------------------------------------------------------
// Classical Fisher information

namespace {

Eigen::MatrixXd classical_fim_once(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& prob_fn,
    const Eigen::VectorXd& dtheta0, const Eigen::VectorXd& s, double floor) {
    const int m = static_cast<int>(dtheta0.size());
    const Eigen::VectorXd p0 = prob_fn(dtheta0);
    const int outcomes = static_cast<int>(p0.size());

    auto peval = [&](int i, double si, int j, double sj) {
        Eigen::VectorXd d = dtheta0;
        d(i) += si;
        if (j >= 0) d(j) += sj;
        return prob_fn(d);
    };

    std::vector<Eigen::VectorXd> plus(m), minus(m);
    for (int i = 0; i < m; ++i) {
        plus[i] = peval(i, s(i), -1, 0.0);
        minus[i] = peval(i, -s(i), -1, 0.0);
    }

    const bool any_vanishing = (p0.array() < floor).any();
    // Off-diagonal pair evaluations for the quadratic-form route, shared by all
    // vanishing outcomes: p(+i+j), p(-i-j), p(+i-j), p(-i+j).
    std::vector<Eigen::VectorXd> pp(m * m), mm(m * m), pm(m * m), mp(m * m);
    if (any_vanishing)
        for (int i = 0; i < m; ++i)
            for (int j = i + 1; j < m; ++j) {
                pp[i * m + j] = peval(i, s(i), j, s(j));
                mm[i * m + j] = peval(i, -s(i), j, -s(j));
                pm[i * m + j] = peval(i, s(i), j, -s(j));
                mp[i * m + j] = peval(i, -s(i), j, s(j));
            }

    Eigen::MatrixXd F = Eigen::MatrixXd::Zero(m, m);
    for (int n = 0; n < outcomes; ++n) {
        if (p0(n) >= floor) {
            Eigen::VectorXd grad(m);
            for (int i = 0; i < m; ++i)
                grad(i) = (plus[i](n) - minus[i](n)) / (2.0 * s(i));
            F += grad * grad.transpose() / p0(n);
        } else {
            // Vanishing outcome: p is locally a quadratic form Q and the
            // (1/p) grad grad^T singularity tends to 4 Q.
            Eigen::MatrixXd Q(m, m);
            for (int i = 0; i < m; ++i)
                Q(i, i) = (plus[i](n) + minus[i](n) - 2.0 * p0(n)) / (2.0 * s(i) * s(i));
            for (int i = 0; i < m; ++i)
                for (int j = i + 1; j < m; ++j) {
                    const int ij = i * m + j;
                    Q(i, j) = Q(j, i) = (pp[ij](n) + mm[ij](n) - pm[ij](n) - mp[ij](n)) /
                                        (8.0 * s(i) * s(j));
                }
            F += 4.0 * Q;
        }
    }
    return F;
}

}  // namespace

Eigen::MatrixXd classical_fim(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& prob_fn,
    const Eigen::VectorXd& dtheta0, const Eigen::VectorXd& steps,
    const ClassicalFimOptions& opts) {
    if (steps.size() != dtheta0.size() || (steps.array() <= 0.0).any())
        throw InvalidArgument("classical_fim: need one positive step per parameter");

    const Eigen::MatrixXd coarse =
        classical_fim_once(prob_fn, dtheta0, steps, opts.probability_floor);
    const Eigen::MatrixXd fine =
        classical_fim_once(prob_fn, dtheta0, 0.5 * steps, opts.probability_floor);

    const double scale = std::max(fine.cwiseAbs().maxCoeff(), 1e-300);
    const double disagreement = (coarse - fine).cwiseAbs().maxCoeff() / scale;
    if (disagreement > opts.richardson_tol)
        throw StepTooLarge("classical_fim: step-halving disagreement " +
                           std::to_string(disagreement));
    return (4.0 * fine - coarse) / 3.0;
}

SaturationReport saturation_report(const PhaseModel& model, const IlluminationProfile& f,
                                   const Eigen::VectorXd& theta0,
                                   const Eigen::VectorXd& steps, const GridSpec& grid) {
    const QuadratureSpec quad = quadrature_for(model, f);
    const ModeBasis basis = build_basis(model, f, theta0, grid, quad);
    const InnerProducts ip = inner_products(model, f, theta0, quad);

    SaturationReport rep;
    rep.F_quantum = qfim_single_photon(ip, 1.0).F;

    Eigen::VectorXd s = steps;
    if (s.size() == 0) s = 1e-3 * model.parameter_scales();
    auto prob_fn = [&](const Eigen::VectorXd& dtheta) {
        return probabilities_numeric(basis, dtheta).p;
    };
    rep.F_classical =
        classical_fim(prob_fn, Eigen::VectorXd::Zero(theta0.size()), s);

    const double scale = rep.F_quantum.cwiseAbs().maxCoeff();
    rep.max_rel_discrepancy = 0.0;
    for (int i = 0; i < rep.F_quantum.rows(); ++i)
        for (int j = 0; j < rep.F_quantum.cols(); ++j) {
            const double denom =
                std::max(std::abs(rep.F_quantum(i, j)), 1e-9 * std::max(scale, 1e-300));
            rep.max_rel_discrepancy = std::max(
                rep.max_rel_discrepancy,
                std::abs(rep.F_quantum(i, j) - rep.F_classical(i, j)) / denom);
        }
    rep.pass = rep.max_rel_discrepancy < rep.tolerance;
    return rep;
}

ProjectorConditionResult nonorthogonal_condition_check(const Eigen::MatrixXd& G,
                                                       const Eigen::VectorXd& g,
                                                       double tol) {
    if (G.rows() < 1 || g.size() < 1)
        throw InvalidArgument("nonorthogonal_condition_check: need M >= 1 overlaps");
    // <Phi_1|Phi_1> = G(0,0) real, <Phi_1|Phi_0> = -i g(0).
    ProjectorConditionResult out;
    out.lhs = -G(0, 0) * g(0);
    out.rhs = -std::pow(g(0), 3);
    const double scale = std::pow(std::max(G(0, 0), g(0) * g(0)), 1.5);
    out.equal = std::abs(out.lhs - out.rhs) <= tol * std::max(scale, 1e-300);
    out.ratio = out.equal ? 1.0 : out.lhs / out.rhs;
    return out;
}

void write_mode_csv(const ModeBasis& basis, int k, const std::string& path,
                    double coordinate_scale, const std::string& x_label) {
    if (k < 0 || k >= basis.mode_count())
        throw InvalidArgument("write_mode_csv: mode index out of range");
    CsvWriter csv(path);
    csv.row({x_label, "re_g" + std::to_string(k), "im_g" + std::to_string(k),
             "abs_g" + std::to_string(k)});
    for (Eigen::Index i = 0; i < basis.grid().size(); ++i) {
        const double x = basis.grid()(i);
        const Complex s = basis.mode_shape(k, x);
        csv.row_values({coordinate_scale * x, s.real(), s.imag(), std::abs(s)});
    }
}

}  // namespace phasecrb
