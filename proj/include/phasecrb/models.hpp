#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "phasecrb/errors.hpp"
#include "phasecrb/numerics.hpp"

namespace phasecrb {

// Natural cubic spline with constant extension beyond the sample range.
class CubicSpline {
public:
    CubicSpline() = default;
    CubicSpline(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

    double operator()(double x) const;
    double derivative(double x) const;
    double x_min() const { return x_.size() ? x_(0) : 0.0; }
    double x_max() const { return x_.size() ? x_(x_.size() - 1) : 0.0; }

private:
    Eigen::VectorXd x_, y_, m_;  // m_ = second derivatives at the knots
};

// Normalized illumination amplitude f(x) with unit L2 norm.
class IlluminationProfile {
public:
    enum class Kind { gaussian, tabulated };

    static IlluminationProfile gaussian(double w);
    static IlluminationProfile tabulated(const Eigen::VectorXd& x,
                                         const Eigen::VectorXcd& amplitude);

    Complex amplitude(double x) const;
    double intensity(double x) const { return std::norm(amplitude(x)); }

    Kind kind() const { return kind_; }
    // Beam radius for the gaussian kind; RMS-equivalent half range otherwise.
    double width() const { return w_; }
    // Half-length beyond which the intensity is negligible.
    double extent() const;

private:
    IlluminationProfile() = default;
    Kind kind_ = Kind::gaussian;
    double w_ = 0.0;
    double norm_scale_ = 1.0;
    CubicSpline re_, im_;
    double range_ = 0.0;
};

// Phase family phi(x, theta) with analytic partial derivatives.
class PhaseModel {
public:
    using PhaseFn = std::function<double(double, const Eigen::VectorXd&)>;

    PhaseModel(std::vector<std::string> names, PhaseFn phase,
               std::vector<PhaseFn> partials, Eigen::VectorXd theta0,
               double feature_halfwidth);

    int parameter_count() const { return static_cast<int>(names_.size()); }
    const std::vector<std::string>& parameter_names() const { return names_; }

    double phase(double x, const Eigen::VectorXd& theta) const { return phase_(x, theta); }
    double partial(int i, double x, const Eigen::VectorXd& theta) const {
        return partials_.at(static_cast<size_t>(i))(x, theta);
    }

    const Eigen::VectorXd& reference() const { return theta0_; }
    // Spatial scale over which the partials vary; used for probe placement
    // and quadrature panel seeding.
    double feature_halfwidth() const { return feature_halfwidth_; }

    const Eigen::VectorXd& parameter_scales() const { return scales_; }
    PhaseModel& set_parameter_scales(const Eigen::VectorXd& s);
    double partials_tolerance() const { return partials_tol_; }
    PhaseModel& set_partials_tolerance(double t) { partials_tol_ = t; return *this; }

private:
    std::vector<std::string> names_;
    PhaseFn phase_;
    std::vector<PhaseFn> partials_;
    Eigen::VectorXd theta0_;
    Eigen::VectorXd scales_;
    double feature_halfwidth_;
    double partials_tol_ = 1e-6;
};

// Cliff-like step: slope S(x) = (h/2)(1 + tanh(alpha x)), parameters
// theta = (h, alpha), reflected phase phi = k h (1 - tanh(alpha x)).
struct CliffParameters {
    double k = 0.0;      // wavenumber, rad/m
    double h = 0.0;      // height, m
    double alpha = 0.0;  // steepness, 1/m
    std::optional<double> beta;  // sidewall angle, rad; tan(beta) = alpha h / 2

    static CliffParameters from_alpha(double k, double h, double alpha);
    static CliffParameters from_beta(double k, double h, double beta);
    void validate() const;
};

double slope_height(const CliffParameters& p, double x);

IlluminationProfile gaussian_profile(double w);
PhaseModel cliff_model(const CliffParameters& p);

// Freeze one parameter of a model at a fixed value (e.g. height-only cliff).
PhaseModel fix_parameter(const PhaseModel& model, int index, double value);

// Tabulated phase sampled on a grid; parameters are an overall scale and a
// lateral shift, with partials taken from the interpolant.
PhaseModel tabulated_phase_model(const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& phase);

struct PartialsReport {
    Eigen::VectorXd max_rel_deviation;  // per parameter
    double threshold = 0.0;
    bool pass = false;
};

// Check each analytic partial against a central finite difference of the
// phase at seeded random (x, theta) probes.
PartialsReport validate_partials(const PhaseModel& model, int probes, uint64_t seed);

// Two-column (x_meters, phase_radians) or four-column
// (x_meters, re_f, im_f, phase_radians) CSV with a mandatory header row.
struct TabulatedInput {
    Eigen::VectorXd x;
    Eigen::VectorXd phase;
    std::optional<Eigen::VectorXcd> amplitude;
};
TabulatedInput read_tabulated_csv(const std::string& path);

}  // namespace phasecrb
