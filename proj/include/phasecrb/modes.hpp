#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>

#include "phasecrb/fisher.hpp"
#include "phasecrb/models.hpp"
#include "phasecrb/numerics.hpp"

namespace phasecrb {

struct GridSpec {
    double halfwidth = 0.0;  // 0: derive from profile/model extents
    int points = 4096;
};

// Orthonormal projection modes gamma_0..gamma_M built from the reference
// state and its parameter derivatives. Each stored profile includes the
// illumination amplitude and the reference phase factor exp(i phi0); the
// dimensionless shapes g_k(x) (profile divided out) are what detection
// hardware would be programmed with.
class ModeBasis {
public:
    ModeBasis(PhaseModel model, IlluminationProfile profile, Eigen::VectorXd theta0,
              Eigen::MatrixXcd coeffs, Eigen::MatrixXd omega, const GridSpec& grid,
              QuadratureSpec quad);

    int mode_count() const { return static_cast<int>(coeffs_.rows()); }  // M + 1
    int parameter_count() const { return mode_count() - 1; }

    const Eigen::VectorXd& grid() const { return grid_; }
    const Eigen::MatrixXcd& samples() const { return gamma_; }  // (M+1) x points
    const Eigen::MatrixXd& omega() const { return omega_; }
    const Eigen::MatrixXcd& coefficients() const { return coeffs_; }
    const Eigen::VectorXd& theta0() const { return theta0_; }
    const PhaseModel& model() const { return model_; }
    const IlluminationProfile& profile() const { return profile_; }
    const QuadratureSpec& quadrature() const { return quad_; }

    // gamma_k(x) = f(x) exp(i phi0(x)) * shape(k, x), evaluated exactly from
    // the Gram-Schmidt coefficients (no grid interpolation).
    Complex mode_value(int k, double x) const;
    // Dimensionless mode shape g_k(x): 1 for k = 0, combinations of
    // i * dphi/dtheta_j for k >= 1.
    Complex mode_shape(int k, double x) const;

    Eigen::VectorXd trust_radius;  // per-parameter |dtheta| limit for project()

private:
    PhaseModel model_;
    IlluminationProfile profile_;
    Eigen::VectorXd theta0_;
    Eigen::MatrixXcd coeffs_;  // row k: gamma_k over raw states [Phi_0..Phi_M]
    Eigen::MatrixXd omega_;
    Eigen::VectorXd grid_;
    Eigen::MatrixXcd gamma_;
    QuadratureSpec quad_;
};

// Gram-Schmidt construction (modified, with one re-orthogonalization pass)
// over the states orthogonalized against the reference. Throws
// DegenerateOmega when the overlap matrix is numerically singular, i.e. the
// parameters are locally indistinguishable at theta0.
ModeBasis build_basis(const PhaseModel& model, const IlluminationProfile& f,
                      const Eigen::VectorXd& theta0, const GridSpec& grid = {},
                      QuadratureSpec quad = {.halfwidth = 0.0});

// Gram matrix of the stored mode samples under trapezoid grid quadrature.
Eigen::MatrixXcd grid_gram(const ModeBasis& basis);

// Projection amplitudes <gamma_k|Phi(theta0 + dtheta)> by quadrature.
Eigen::VectorXcd project(const ModeBasis& basis, const Eigen::VectorXd& dtheta);

struct ProbabilityVector {
    Eigen::VectorXd p;       // mode detection probabilities
    double residual = 0.0;   // 1 - sum(p): weight outside the truncated basis
};

ProbabilityVector probabilities_numeric(const ModeBasis& basis,
                                        const Eigen::VectorXd& dtheta);

// Second-order detection probabilities for the cliff. modes = 2 expects
// dtheta = (dh, dalpha); modes = 1 estimates the height only (dalpha = 0).
// Throws NegativeProbability outside the quadratic trust region.
ProbabilityVector analytic_probabilities_cliff(const CliffParameters& ref,
                                               const CliffIntegrals& n, double dh,
                                               double dalpha, int modes = 2);

struct ClassicalFimOptions {
    double probability_floor = 1e-12;  // below this a mode is treated as vanishing
    double richardson_tol = 0.05;      // max relative step-halving disagreement
};

// Classical Fisher information of a probability model at dtheta0 by central
// differences with one Richardson step. Outcomes vanishing at dtheta0 enter
// through the quadratic form of their probabilities (their 1/p singularity
// has a finite limit when the underlying amplitudes are phase-aligned).
// Throws StepTooLarge when halving the steps moves the result beyond
// richardson_tol.
Eigen::MatrixXd classical_fim(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& prob_fn,
    const Eigen::VectorXd& dtheta0, const Eigen::VectorXd& steps,
    const ClassicalFimOptions& opts = {});

struct SaturationReport {
    Eigen::MatrixXd F_quantum;    // per photon
    Eigen::MatrixXd F_classical;  // gamma-basis measurement, dtheta -> 0 limit
    double max_rel_discrepancy = 0.0;
    double tolerance = 1e-4;
    bool pass = false;
};

// Does measuring in the gamma basis reach the quantum bound? Builds the
// basis, takes the classical FIM of its detection probabilities in the
// dtheta -> 0 limit, and compares with the QFIM entrywise.
SaturationReport saturation_report(const PhaseModel& model, const IlluminationProfile& f,
                                   const Eigen::VectorXd& theta0,
                                   const Eigen::VectorXd& steps = Eigen::VectorXd(),
                                   const GridSpec& grid = {});

struct ProjectorConditionResult {
    double lhs = 0.0;  // Im[<Phi_1|Phi_1><Phi_1|Phi_0>]
    double rhs = 0.0;  // |<Phi_0|Phi_1>|^2 Im[<Phi_1|Phi_0>]
    double ratio = 0.0;
    bool equal = false;
};

// Saturation condition for projecting onto the raw derivative state Phi_1
// (not orthogonalized against the reference). Equality holds iff that
// projection is itself optimal; for the cliff lhs/rhs = 2 - N3 != 1.
ProjectorConditionResult nonorthogonal_condition_check(const Eigen::MatrixXd& G,
                                                       const Eigen::VectorXd& g,
                                                       double tol = 1e-9);

// One CSV per mode with columns (x, Re g_k, Im g_k, |g_k|) of the
// dimensionless shape, abscissa scaled by coordinate_scale (1/m gives the
// normalized coordinate y = alpha0 x; 1.0 gives meters).
void write_mode_csv(const ModeBasis& basis, int k, const std::string& path,
                    double coordinate_scale, const std::string& x_label);

}  // namespace phasecrb
