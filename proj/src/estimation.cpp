#include "phasecrb/estimation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <limits>
#include <vector>

#include "phasecrb/numerics.hpp"

namespace phasecrb {

Eigen::VectorXd outcome_probabilities(const ProbabilityVector& p, bool with_unobserved) {
    const Eigen::Index k = p.p.size();
    Eigen::VectorXd out(k + (with_unobserved ? 1 : 0));
    out.head(k) = p.p.cwiseMax(0.0);
    if (with_unobserved)
        out(k) = std::max(p.residual, 0.0);
    else
        out(0) = std::max(out(0) + p.residual, 0.0);
    return out;
}

CountRecord sample_counts(const ProbabilityVector& p, long long n_photons,
                          uint64_t seed) {
    if (n_photons < 0) throw InvalidArgument("sample_counts: n_photons >= 0");
    for (Eigen::Index i = 0; i < p.p.size(); ++i)
        if (p.p(i) < -1e-12)
            throw InvalidProbabilities("sample_counts: p" + std::to_string(i) + " = " +
                                       std::to_string(p.p(i)));
    const double total = p.p.sum();
    if (total > 1.0 + 1e-10)
        throw InvalidProbabilities("sample_counts: probabilities sum to " +
                                   std::to_string(total));

    CountRecord rec;
    rec.n_photons = n_photons;
    rec.seed = seed;
    rec.has_unobserved = (1.0 - total) > 1e-6;
    const Eigen::VectorXd q = outcome_probabilities(p, rec.has_unobserved);
    const int outcomes = static_cast<int>(q.size());

    Eigen::VectorXd cdf(outcomes);
    double acc = 0.0;
    for (int i = 0; i < outcomes; ++i) {
        acc += q(i);
        cdf(i) = acc;
    }
    cdf(outcomes - 1) = std::max(cdf(outcomes - 1), 1.0);  // absorb round-off

    rec.counts = Eigen::VectorXi::Zero(outcomes);
    SplitMix64 rng(seed);
    for (long long s = 0; s < n_photons; ++s) {
        const double u = rng.uniform();
        int idx = 0;
        while (idx < outcomes - 1 && u >= cdf(idx)) ++idx;
        ++rec.counts(idx);
    }
    return rec;
}

namespace {

double log_likelihood(const Eigen::VectorXi& counts, const Eigen::VectorXd& q) {
    if (q.size() != counts.size()) return -std::numeric_limits<double>::infinity();
    double ll = 0.0;
    for (Eigen::Index i = 0; i < counts.size(); ++i) {
        if (counts(i) == 0) continue;
        if (!(q(i) > 0.0)) return -std::numeric_limits<double>::infinity();
        ll += counts(i) * std::log(q(i));
    }
    return ll;
}

struct Candidate {
    double ll = -std::numeric_limits<double>::infinity();
    double dist = std::numeric_limits<double>::infinity();
    Eigen::VectorXd t;

    // Higher likelihood wins; ties go to the point closer to dtheta = 0.
    bool better_than(const Candidate& other) const {
        if (ll != other.ll) return ll > other.ll;
        return dist < other.dist;
    }
};

}  // namespace

Eigen::VectorXd mle_fit(
    const CountRecord& counts,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& prob_model,
    const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, const MleOptions& opts) {
    const int m = static_cast<int>(lo.size());
    if (hi.size() != m || m < 1 || m > 3)
        throw InvalidArgument("mle_fit: bounds must match, 1 <= M <= 3");
    if (((hi - lo).array() <= 0.0).any())
        throw InvalidArgument("mle_fit: need hi > lo");
    if (opts.grid_points < 3) throw InvalidArgument("mle_fit: grid_points >= 3");

    // All work happens in normalized per-axis coordinates t in [0,1].
    const Eigen::VectorXd span = hi - lo;
    auto theta_of = [&](const Eigen::VectorXd& t) {
        return Eigen::VectorXd(lo + t.cwiseProduct(span));
    };
    // Normalized image of dtheta = 0, clamped into the box; the tie-break
    // metric, so rescaling a parameter rescales its estimate exactly.
    Eigen::VectorXd t0(m);
    for (int i = 0; i < m; ++i) t0(i) = std::clamp(-lo(i) / span(i), 0.0, 1.0);

    auto assess = [&](const Eigen::VectorXd& t) {
        Candidate c;
        c.t = t;
        c.ll = log_likelihood(counts.counts, prob_model(theta_of(t)));
        c.dist = (t - t0).norm();
        return c;
    };

    Candidate best;
    // Coarse scan.
    const int g = opts.grid_points;
    Eigen::VectorXi idx = Eigen::VectorXi::Zero(m);
    while (true) {
        Eigen::VectorXd t(m);
        for (int i = 0; i < m; ++i) t(i) = static_cast<double>(idx(i)) / (g - 1);
        Candidate c = assess(t);
        if (c.better_than(best)) best = c;
        int axis = 0;
        while (axis < m && ++idx(axis) == g) idx(axis++) = 0;
        if (axis == m) break;
    }

    if (!std::isfinite(best.ll))
        throw InvalidArgument(
            "mle_fit: likelihood is -inf over the whole search box");

    // Compass pattern search from the best grid node.
    double step = 0.5 / (g - 1);
    while (step >= opts.refine_tol) {
        Candidate improved = best;
        for (int i = 0; i < m; ++i) {
            for (double dir : {+1.0, -1.0}) {
                Eigen::VectorXd t = best.t;
                t(i) = std::clamp(t(i) + dir * step, 0.0, 1.0);
                Candidate c = assess(t);
                if (c.better_than(improved)) improved = c;
            }
        }
        if (improved.better_than(best))
            best = improved;
        else
            step *= 0.5;
    }

    for (int i = 0; i < m; ++i)
        if (best.t(i) <= opts.refine_tol || best.t(i) >= 1.0 - opts.refine_tol)
            throw BoundaryMaximum("mle_fit: optimum on the search-box edge, axis " +
                                  std::to_string(i));
    return theta_of(best.t);
}

SimulationReport monte_carlo(
    const std::function<ProbabilityVector(const Eigen::VectorXd&)>& prob_model,
    const Eigen::MatrixXd& fisher_per_photon, const Eigen::VectorXd& dtheta_true,
    const MonteCarloConfig& cfg) {
    if (cfg.trials < 1) throw InvalidArgument("monte_carlo: trials >= 1");
    const int m = static_cast<int>(dtheta_true.size());

    const ProbabilityVector p_true = prob_model(dtheta_true);
    const bool with_unobserved = (1.0 - p_true.p.sum()) > 1e-6;
    auto outcome_model = [&](const Eigen::VectorXd& dtheta) {
        return outcome_probabilities(prob_model(dtheta), with_unobserved);
    };

    SimulationReport rep;
    rep.rng_id = kRngId;
    rep.probability_path = cfg.probability_path;
    rep.n_photons = cfg.n_photons;
    rep.trials = cfg.trials;
    rep.master_seed = cfg.master_seed;
    rep.dtheta_true = dtheta_true;
    rep.estimates.resize(cfg.trials, m);
    rep.trial_seeds.resize(static_cast<size_t>(cfg.trials));

    SplitMix64 seeder(cfg.master_seed);
    for (int t = 0; t < cfg.trials; ++t) rep.trial_seeds[static_cast<size_t>(t)] = seeder.next();

    auto run_trial = [&](int t) {
        const CountRecord counts =
            sample_counts(p_true, cfg.n_photons, rep.trial_seeds[static_cast<size_t>(t)]);
        return mle_fit(counts, outcome_model, cfg.lo, cfg.hi, cfg.mle);
    };

    const int workers = std::max(1, cfg.threads);
    if (workers == 1) {
        for (int t = 0; t < cfg.trials; ++t) rep.estimates.row(t) = run_trial(t);
    } else {
        std::vector<std::future<void>> futs;
        std::atomic<int> next{0};
        for (int wrk = 0; wrk < workers; ++wrk)
            futs.push_back(std::async(std::launch::async, [&] {
                for (int t = next.fetch_add(1); t < cfg.trials; t = next.fetch_add(1))
                    rep.estimates.row(t) = run_trial(t);
            }));
        for (auto& f : futs) f.get();
    }

    rep.sample_mean = rep.estimates.colwise().mean();
    if (cfg.trials >= 2) {
        const Eigen::MatrixXd centered = rep.estimates.rowwise() - rep.sample_mean.transpose();
        rep.sample_covariance = centered.transpose() * centered / (cfg.trials - 1);
        rep.covariance_defined = true;
    } else {
        rep.sample_covariance =
            Eigen::MatrixXd::Constant(m, m, std::numeric_limits<double>::quiet_NaN());
        rep.covariance_defined = false;
    }

    rep.crb = invert(Eigen::MatrixXd(static_cast<double>(cfg.n_photons) *
                                     fisher_per_photon));
    rep.efficiency = Eigen::VectorXd::Constant(m, std::numeric_limits<double>::quiet_NaN());
    if (rep.covariance_defined)
        rep.efficiency = rep.sample_covariance.diagonal().cwiseQuotient(rep.crb.diagonal());
    return rep;
}

}  // namespace phasecrb
