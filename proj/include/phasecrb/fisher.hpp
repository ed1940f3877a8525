#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "phasecrb/models.hpp"
#include "phasecrb/numerics.hpp"

namespace phasecrb {

enum class Family { single_photon, coherent };

const char* family_name(Family f);

// Overlap data of the derivative states at the reference point:
//   G(i,j) = Int |f|^2 (dphi/dtheta_i)(dphi/dtheta_j) dx
//   g(i)   = Int |f|^2 (dphi/dtheta_i) dx
// The state overlaps themselves are <Phi|Phi_i> = i g(i) and
// <Phi_i|Phi_j> = G(i,j); for phase objects both integrands are real, and
// max_imag records the residual imaginary part from quadrature.
struct InnerProducts {
    Eigen::MatrixXd G;
    Eigen::VectorXd g;
    double max_imag = 0.0;
};

// Default quadrature window for a model/profile pair: covers the beam and
// the phase feature, with panel seeding fine enough for the feature.
QuadratureSpec quadrature_for(const PhaseModel& model, const IlluminationProfile& f);

InnerProducts inner_products(const PhaseModel& model, const IlluminationProfile& f,
                             const Eigen::VectorXd& theta0, const QuadratureSpec& spec);
InnerProducts inner_products(const PhaseModel& model, const IlluminationProfile& f);

struct FisherResult {
    Family family = Family::single_photon;
    double photons = 1.0;
    Eigen::MatrixXd F;            // M x M, real symmetric
    Eigen::VectorXd symmetry;     // I_i = Int |f|^2 dphi/dtheta_i
    Eigen::VectorXd crb_diag;     // [F^-1]_ii, +inf when F is singular
    bool singular = false;
};

// F_ij = 4 N (G_ij - g_i g_j): N independent copies of the single-photon state.
FisherResult qfim_single_photon(const InnerProducts& ip, double photons);
// F_ij = 4 N G_ij: multimode coherent state with mean photon number N.
FisherResult qfim_coherent(const InnerProducts& ip, double photons);

// I_i alone; the two families give the same QFIM row/column i iff I_i = 0.
Eigen::VectorXd symmetry_integrals(const PhaseModel& model, const IlluminationProfile& f,
                                   const Eigen::VectorXd& theta0,
                                   const QuadratureSpec& spec);

// Dimensionless overlap integrals of the gaussian intensity with tanh/sech
// powers. first_order holds the closed forms valid for w*alpha >> 1:
//   N1 = sqrt(2/pi)   k/(w alpha^2)
//   N2 = sqrt(2)(pi^2-6)/(9 sqrt(pi)) k^2/(w alpha^3)
//   N3 = sqrt(8/pi) / (w alpha)
struct CliffIntegrals {
    double N1 = 0, N2 = 0, N3 = 0, N4 = 0, N5 = 0, N6 = 0;
    double first_order_N1 = 0, first_order_N2 = 0, first_order_N3 = 0;
    double wa = 0.0;            // w * alpha
    bool valid = false;         // (w alpha)^-2 < 0.01
    bool exact = true;          // quadrature (true) or first-order closed forms
    bool approximation_invalid = false;  // first-order requested outside validity
};

CliffIntegrals cliff_integrals(const CliffParameters& p, const IlluminationProfile& f,
                               bool exact);

// First-order precision bounds for the cliff in the w*alpha >> 1 regime:
//   sigma_alpha = C/(k h) sqrt(w alpha / N), same for both families,
//   sigma_h     = 1/(2 k h sqrt(N))            (single photon)
//   sigma_h     = 1/(2 sqrt(2) k h sqrt(N))    (coherent)
// with C = 0.5 sqrt(9 sqrt(pi) / (sqrt(2) (pi^2 - 6))) ~= 0.8537.
struct PrecisionBounds {
    double sigma_h = 0.0;
    double sigma_alpha = 0.0;
    double alpha_coefficient = 0.0;  // the C above
    double regime_ratio = 0.0;       // F11 F22 / F12^2 at first order
};

// Throws RegimeViolation when F11 F22 / F12^2 < 100 (bound formulas assume
// the cross term is negligible).
PrecisionBounds precision_bounds_cliff(const CliffParameters& p,
                                       const IlluminationProfile& f, double photons,
                                       Family family);

// The exact sigma_alpha coefficient as a closed radical.
double sigma_alpha_coefficient();

// Optimality diagnostics for a measurement basis given through its mode
// amplitudes C_n(theta). A basis whose significant amplitudes carry no
// parameter-dependent phase yields F_classical = F_quantum.
struct OptimalityReport {
    Eigen::MatrixXd F_classical;
    Eigen::MatrixXd F_quantum;
    double max_rel_discrepancy = 0.0;
    Eigen::VectorXd max_phase_derivative;  // per mode; 0 for degenerate modes
    std::vector<int> degenerate_modes;     // |C_n| below threshold, phase skipped
    bool phases_parameter_free = false;
    bool fim_match = false;
};

struct OptimalityOptions {
    double rho_threshold = 1e-7;   // modes below this modulus skip the phase check
    double phase_tol = 1e-10;
    double fim_rel_tol = 1e-6;
};

OptimalityReport mode_expansion_optimality(
    const std::function<Eigen::VectorXcd(const Eigen::VectorXd&)>& coeffs,
    const Eigen::VectorXd& theta0, double delta,
    const OptimalityOptions& opts = {});

}  // namespace phasecrb
