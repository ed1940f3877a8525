#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>

#include "phasecrb/errors.hpp"

namespace phasecrb {

using Complex = std::complex<double>;

// Adaptive quadrature over a symmetric interval [-halfwidth, halfwidth].
//
// The interval is first cut into `initial_panels` equal panels so that
// integrands whose support is much narrower than the interval are still
// seen by the rule; panels are then bisected adaptively, worst error first.
struct QuadratureSpec {
    double halfwidth = 1.0;
    int max_subdivisions = 4000;
    double abs_tol = 1e-12;
    double rel_tol = 1e-10;
    int initial_panels = 32;

    // Panel seeding fine enough to resolve features of the given width.
    static QuadratureSpec for_feature(double halfwidth, double feature_halfwidth);
};

struct IntegralEstimate {
    Complex value{0.0, 0.0};
    double error = 0.0;     // estimated absolute error
    double l1_norm = 0.0;   // integral of |f|, sets the cancellation scale
    int panels = 0;

    operator Complex() const { return value; }
};

// Gauss-Kronrod 7-15 adaptive integration of a complex integrand.
// Converged when error <= max(abs_tol, rel_tol * max(|value|, l1_norm)).
// Throws NonConvergence when the panel budget runs out first.
IntegralEstimate integrate(const std::function<Complex(double)>& integrand,
                           const QuadratureSpec& spec);

// Real-part convenience wrapper for real integrands.
double integrate_real(const std::function<double(double)>& integrand,
                      const QuadratureSpec& spec);

// Inverse of a small dense complex matrix. Throws SingularMatrix when
// |det| < 1e-12 * (max row 1-norm)^dim.
Eigen::MatrixXcd invert(const Eigen::MatrixXcd& m);
Eigen::MatrixXd invert(const Eigen::MatrixXd& m);

// Hermitian PSD test: true iff all eigenvalues >= -tol * max|eigenvalue|.
// Throws NotHermitian when the asymmetry exceeds tol relative to the
// largest entry magnitude.
bool is_positive_semidefinite(const Eigen::MatrixXcd& m, double tol = 1e-10);
bool is_positive_semidefinite(const Eigen::MatrixXd& m, double tol = 1e-10);

}  // namespace phasecrb
