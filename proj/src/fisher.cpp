#include "phasecrb/fisher.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace phasecrb {

namespace {

constexpr double kTinyAbsTol = 1e-290;  // defer to the relative criterion

double sech(double y) {
    const double a = std::abs(y);
    if (a > 350.0) return 2.0 * std::exp(-a);
    return 1.0 / std::cosh(y);
}

Eigen::VectorXd crb_diagonal(const Eigen::MatrixXd& F, bool& singular) {
    try {
        const Eigen::MatrixXd inv = invert(F);
        singular = false;
        return inv.diagonal();
    } catch (const SingularMatrix&) {
        singular = true;
        return Eigen::VectorXd::Constant(F.rows(),
                                         std::numeric_limits<double>::infinity());
    }
}

FisherResult make_result(Family family, double photons, Eigen::MatrixXd F,
                         const Eigen::MatrixXd& G, const Eigen::VectorXd& g) {
    // Symmetrize away quadrature round-off before the PSD check. A matrix
    // that is zero at the working precision (e.g. a global phase) is PSD;
    // the eigenvalue test would only compare its own round-off against
    // itself.
    F = 0.5 * (F + F.transpose()).eval();
    const double floor = 1e-12 * 4.0 * photons * std::max(G.cwiseAbs().maxCoeff(), 1e-300);
    const bool negligible = F.cwiseAbs().maxCoeff() <= floor;
    if (!negligible && !is_positive_semidefinite(F, 1e-10))
        throw NotPositiveSemidefinite("qfim: negative eigenvalue beyond tolerance");
    FisherResult out;
    out.family = family;
    out.photons = photons;
    out.F = std::move(F);
    out.symmetry = g;
    if (negligible) {
        out.singular = true;
        out.crb_diag = Eigen::VectorXd::Constant(
            out.F.rows(), std::numeric_limits<double>::infinity());
    } else {
        out.crb_diag = crb_diagonal(out.F, out.singular);
    }
    return out;
}

}  // namespace

const char* family_name(Family f) {
    return f == Family::single_photon ? "single_photon" : "coherent";
}

QuadratureSpec quadrature_for(const PhaseModel& model, const IlluminationProfile& f) {
    const double feature = model.feature_halfwidth();
    const double halfwidth = std::max(f.extent(), 7.5 * feature);
    QuadratureSpec spec = QuadratureSpec::for_feature(halfwidth, feature);
    spec.abs_tol = kTinyAbsTol;
    spec.rel_tol = 1e-12;
    return spec;
}

InnerProducts inner_products(const PhaseModel& model, const IlluminationProfile& f,
                             const Eigen::VectorXd& theta0, const QuadratureSpec& spec) {
    const int m = model.parameter_count();
    if (theta0.size() != m)
        throw InvalidArgument("inner_products: theta0 size mismatch");

    InnerProducts ip;
    ip.G.resize(m, m);
    ip.g.resize(m);
    ip.max_imag = 0.0;

    for (int i = 0; i < m; ++i) {
        const auto gi = integrate(
            [&](double x) {
                return Complex(f.intensity(x) * model.partial(i, x, theta0), 0.0);
            },
            spec);
        ip.g(i) = gi.value.real();
        for (int j = i; j < m; ++j) {
            const auto gij = integrate(
                [&](double x) {
                    return Complex(f.intensity(x) * model.partial(i, x, theta0) *
                                       model.partial(j, x, theta0),
                                   0.0);
                },
                spec);
            ip.G(i, j) = ip.G(j, i) = gij.value.real();
            ip.max_imag = std::max(ip.max_imag, std::abs(gij.value.imag()));
        }
    }
    return ip;
}

InnerProducts inner_products(const PhaseModel& model, const IlluminationProfile& f) {
    return inner_products(model, f, model.reference(), quadrature_for(model, f));
}

FisherResult qfim_single_photon(const InnerProducts& ip, double photons) {
    Eigen::MatrixXd F = 4.0 * photons * (ip.G - ip.g * ip.g.transpose());
    return make_result(Family::single_photon, photons, std::move(F), ip.G, ip.g);
}

FisherResult qfim_coherent(const InnerProducts& ip, double photons) {
    Eigen::MatrixXd F = 4.0 * photons * ip.G;
    return make_result(Family::coherent, photons, std::move(F), ip.G, ip.g);
}

Eigen::VectorXd symmetry_integrals(const PhaseModel& model, const IlluminationProfile& f,
                                   const Eigen::VectorXd& theta0,
                                   const QuadratureSpec& spec) {
    return inner_products(model, f, theta0, spec).g;
}

CliffIntegrals cliff_integrals(const CliffParameters& p, const IlluminationProfile& f,
                               bool exact) {
    p.validate();
    if (f.kind() != IlluminationProfile::Kind::gaussian)
        throw InvalidArgument("cliff_integrals: gaussian illumination required");

    const double u = f.width() * p.alpha;  // w * alpha
    const double ka = p.k / p.alpha;
    const double c1 = std::sqrt(2.0 / std::numbers::pi);
    const double c2 = std::numbers::sqrt2 * (std::numbers::pi * std::numbers::pi - 6.0) /
                      (9.0 * std::sqrt(std::numbers::pi));
    const double c3 = std::sqrt(8.0 / std::numbers::pi);

    CliffIntegrals out;
    out.wa = u;
    out.valid = 1.0 / (u * u) < 0.01;
    out.exact = exact;
    out.first_order_N1 = c1 * ka / u;
    out.first_order_N2 = c2 * ka * ka / u;
    out.first_order_N3 = c3 / u;

    // All integrals in the normalized coordinate y = alpha x. The weight is
    // the gaussian intensity for the exact path and flat (its on-axis value)
    // for the first-order path.
    QuadratureSpec spec;
    spec.halfwidth = exact ? std::max(6.0 * u, 30.0) : 30.0;
    spec.initial_panels =
        static_cast<int>(std::clamp(spec.halfwidth, 32.0, 2048.0));
    spec.abs_tol = kTinyAbsTol;
    spec.rel_tol = 1e-13;

    const double pref = c1 / u;  // sqrt(2/pi) / u
    auto weight = [&](double y) {
        return exact ? pref * std::exp(-2.0 * y * y / (u * u)) : pref;
    };
    auto I = [&](auto shape) {
        return integrate_real([&](double y) { return weight(y) * shape(y); }, spec);
    };

    auto t = [](double y) { return std::tanh(y); };
    const double i1 = I([&](double y) { double s = sech(y); return y * t(y) * s * s; });
    const double i2 = I([&](double y) { double s = sech(y); return y * y * s * s * s * s; });
    const double i3 = I([&](double y) { double s = sech(y); return s * s; });
    const double i4 = I([&](double y) { double s = sech(y); return y * y * t(y) * s * s; });
    const double i5 =
        I([&](double y) { double s = sech(y); return y * y * y * t(y) * s * s * s * s; });
    const double i6 =
        I([&](double y) { double s = sech(y); return y * y * t(y) * t(y) * s * s; });

    if (exact) {
        out.N1 = ka * i1;
        out.N2 = ka * ka * i2;
        out.N3 = i3;
    } else {
        out.N1 = out.first_order_N1;
        out.N2 = out.first_order_N2;
        out.N3 = out.first_order_N3;
        out.approximation_invalid = !out.valid;
    }
    out.N4 = ka * ka * i4;
    out.N5 = ka * ka * ka * i5;
    out.N6 = ka * ka * i6;
    return out;
}

double sigma_alpha_coefficient() {
    return 0.5 * std::sqrt(9.0 * std::sqrt(std::numbers::pi) /
                           (std::numbers::sqrt2 *
                            (std::numbers::pi * std::numbers::pi - 6.0)));
}

PrecisionBounds precision_bounds_cliff(const CliffParameters& p,
                                       const IlluminationProfile& f, double photons,
                                       Family family) {
    if (!(photons > 0.0))
        throw InvalidArgument("precision_bounds_cliff: photons must be positive");
    const CliffIntegrals n = cliff_integrals(p, f, /*exact=*/false);

    PrecisionBounds out;
    out.alpha_coefficient = sigma_alpha_coefficient();
    // F11 F22 / F12^2 = (1 - N3) N2 / N1^2, independent of h and of N.
    out.regime_ratio =
        (1.0 - n.N3) * n.N2 / (n.N1 * n.N1);
    if (out.regime_ratio < 100.0)
        throw RegimeViolation("precision_bounds_cliff: F11*F22/F12^2 = " +
                              std::to_string(out.regime_ratio) + " < 100");

    const double kh = p.k * p.h;
    out.sigma_alpha = out.alpha_coefficient / kh * std::sqrt(n.wa / photons);
    out.sigma_h = (family == Family::single_photon)
                      ? 1.0 / (2.0 * kh * std::sqrt(photons))
                      : 1.0 / (2.0 * std::numbers::sqrt2 * kh * std::sqrt(photons));
    return out;
}

OptimalityReport mode_expansion_optimality(
    const std::function<Eigen::VectorXcd(const Eigen::VectorXd&)>& coeffs,
    const Eigen::VectorXd& theta0, double delta, const OptimalityOptions& opts) {
    if (!(delta > 0.0))
        throw InvalidArgument("mode_expansion_optimality: delta must be positive");

    const Eigen::VectorXcd c0 = coeffs(theta0);
    const int n_modes = static_cast<int>(c0.size());
    const int m = static_cast<int>(theta0.size());

    // Central differences of the complex amplitudes.
    Eigen::MatrixXcd dc(n_modes, m);
    for (int i = 0; i < m; ++i) {
        Eigen::VectorXd tp = theta0, tm = theta0;
        tp(i) += delta;
        tm(i) -= delta;
        dc.col(i) = (coeffs(tp) - coeffs(tm)) / (2.0 * delta);
    }

    OptimalityReport rep;
    rep.max_phase_derivative = Eigen::VectorXd::Zero(n_modes);
    Eigen::MatrixXd Fc = Eigen::MatrixXd::Zero(m, m);
    Eigen::VectorXd phase_weight = Eigen::VectorXd::Zero(m);  // sum rho^2 dphi_i
    Eigen::MatrixXd phase_term = Eigen::MatrixXd::Zero(m, m);

    for (int n = 0; n < n_modes; ++n) {
        const double rho = std::abs(c0(n));
        if (rho < opts.rho_threshold) {
            // The modulus is not differentiable at zero; the classical
            // information of a vanishing mode is the quadratic form of its
            // complex gradient. The phase is undefined and skipped.
            rep.degenerate_modes.push_back(n);
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j)
                    Fc(i, j) += 4.0 * std::real(std::conj(dc(n, i)) * dc(n, j));
            continue;
        }
        const Complex unit = c0(n) / rho;
        for (int i = 0; i < m; ++i) {
            const Complex proj = std::conj(unit) * dc(n, i);
            const double drho_i = proj.real();
            const double dphi_i = proj.imag() / rho;
            rep.max_phase_derivative(n) =
                std::max(rep.max_phase_derivative(n), std::abs(dphi_i));
            phase_weight(i) += rho * rho * dphi_i;
            for (int j = 0; j < m; ++j) {
                const Complex projj = std::conj(unit) * dc(n, j);
                Fc(i, j) += 4.0 * drho_i * projj.real();
                phase_term(i, j) += rho * rho * dphi_i * (projj.imag() / rho);
            }
        }
    }

    // Quantum matrix from the same amplitudes:
    // Omega_ij = sum_n drho_i drho_j + sum_n rho^2 dphi_i dphi_j
    //            - (sum_n rho^2 dphi_i)(sum_n rho^2 dphi_j),
    // with vanishing modes entering through their complex gradients.
    rep.F_quantum = Fc + 4.0 * (phase_term - phase_weight * phase_weight.transpose());
    rep.F_classical = std::move(Fc);

    const double scale = rep.F_quantum.cwiseAbs().maxCoeff();
    rep.max_rel_discrepancy = 0.0;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            const double denom =
                std::max(std::abs(rep.F_quantum(i, j)), 1e-9 * std::max(scale, 1e-300));
            rep.max_rel_discrepancy =
                std::max(rep.max_rel_discrepancy,
                         std::abs(rep.F_quantum(i, j) - rep.F_classical(i, j)) / denom);
        }
    rep.phases_parameter_free = rep.max_phase_derivative.maxCoeff() <= opts.phase_tol;
    rep.fim_match = rep.max_rel_discrepancy <= opts.fim_rel_tol;
    return rep;
}

}  // namespace phasecrb
