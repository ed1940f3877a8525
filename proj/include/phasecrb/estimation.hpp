#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>

#include "phasecrb/modes.hpp"
#include "phasecrb/rng.hpp"

namespace phasecrb {

// Photon counts of one measurement run. When the mode probabilities leave
// more than 1e-6 of the weight outside the truncated basis, that weight is
// kept as an explicit trailing "unobserved" outcome instead of being
// renormalized away; otherwise it is folded into outcome 0.
struct CountRecord {
    Eigen::VectorXi counts;
    long long n_photons = 0;
    uint64_t seed = 0;
    bool has_unobserved = false;
};

// Outcome probabilities aligned with CountRecord::counts.
Eigen::VectorXd outcome_probabilities(const ProbabilityVector& p, bool with_unobserved);

// Multinomial draw, one categorical sample per photon from a SplitMix64
// stream. Reproducible across platforms for a fixed seed.
CountRecord sample_counts(const ProbabilityVector& p, long long n_photons,
                          uint64_t seed);

struct MleOptions {
    int grid_points = 41;      // coarse scan per axis
    double refine_tol = 1e-6;  // pattern-search step floor, in normalized units
};

// Maximum-likelihood estimate of dtheta from counts: coarse grid scan over
// the box [lo, hi] followed by a derivative-free pattern search, both in
// normalized per-axis coordinates. Ties break toward smaller |dtheta|.
// Throws BoundaryMaximum when the optimum sits on the box edge.
Eigen::VectorXd mle_fit(
    const CountRecord& counts,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& prob_model,
    const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, const MleOptions& opts = {});

struct SimulationReport {
    std::string rng_id;
    std::string probability_path;  // which probability model generated/fitted
    long long n_photons = 0;
    int trials = 0;
    uint64_t master_seed = 0;
    Eigen::VectorXd dtheta_true;
    Eigen::MatrixXd estimates;          // trials x M
    std::vector<uint64_t> trial_seeds;  // consecutive SplitMix64 outputs
    Eigen::VectorXd sample_mean;
    Eigen::MatrixXd sample_covariance;  // NaN when trials < 2
    bool covariance_defined = false;
    Eigen::MatrixXd crb;                // (n_photons * F_per_photon)^-1
    Eigen::VectorXd efficiency;         // sample_var_i / crb_ii
};

struct MonteCarloConfig {
    long long n_photons = 100000;
    int trials = 400;
    uint64_t master_seed = 1;
    Eigen::VectorXd lo, hi;  // MLE search box for dtheta
    MleOptions mle;
    int threads = 1;
    std::string probability_path = "analytic-second-order";
};

// Repeated sample -> fit trials against one probability model; per-trial
// seeds derive from the master seed, so parallel and serial runs aggregate
// to bit-identical reports.
SimulationReport monte_carlo(
    const std::function<ProbabilityVector(const Eigen::VectorXd&)>& prob_model,
    const Eigen::MatrixXd& fisher_per_photon, const Eigen::VectorXd& dtheta_true,
    const MonteCarloConfig& cfg);

}  // namespace phasecrb
