#ifndef ROBUSTLEARN_CONVEX_MEAN_HPP
#define ROBUSTLEARN_CONVEX_MEAN_HPP

#include <algorithm>
#include <cmath>
#include <utility>
#include <variant>
#include <vector>

#include "robustlearn/common.hpp"
#include "robustlearn/filter.hpp"
#include "robustlearn/gaussian_filters.hpp"
#include "robustlearn/models.hpp"
#include "robustlearn/spectral.hpp"

namespace robustlearn {

/// Euclidean projection onto S_{N,eps} (the capped simplex), by bisection on
/// the dual shift.
inline WeightVector project_to_weight_set(const Vec& v, double eps) {
    const auto n = v.size();
    require(n >= 1, "empty vector");
    const double cap = 1.0 / ((1.0 - 2.0 * eps) * static_cast<double>(n));

    auto mass = [&](double theta) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
            s += std::min(cap, std::max(0.0, v[i] - theta));
        return s;
    };
    double lo = v.minCoeff() - cap - 1.0;
    double hi = v.maxCoeff();
    // mass(lo) >= n*min(cap, ...) >= 1, mass(hi) = 0; bisect to mass = 1.
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (mass(mid) >= 1.0)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-15) break;
    }
    Vec w(n);
    for (Eigen::Index i = 0; i < n; ++i) w[i] = std::min(cap, std::max(0.0, v[i] - lo));
    double s = w.sum();
    w /= s;  // tidy the residual bisection error
    for (Eigen::Index i = 0; i < n; ++i) w[i] = std::min(w[i], cap);
    w /= w.sum();
    return WeightVector(w, eps);
}

/// Separation oracle answer: either the weights certify a near-identity
/// weighted covariance, or a violated halfspace in weight space. The
/// hyperplane is ell(w) = coeffs . w + offset, affine in w for the query's
/// frozen weighted mean.
struct OracleCut {
    Vec coeffs;
    double offset = 0.0;
    double lambda = 0.0;

    double eval(const Vec& w) const { return coeffs.dot(w) + offset; }
};

using OracleAnswer = std::variant<std::monostate, OracleCut>;  // monostate = "YES"

struct ConvexMeanConfig {
    double c_sep = 4.0;       // oracle accepts when |lambda| < (c_sep/2) * delta
    long max_cuts = 500;      // cutting-plane iteration cap
    double eig_tol = 1e-9;
};

inline double oracle_delta(double eps) { return eps * std::log(1.0 / eps); }

/// Approximate separation oracle for the set of weights whose weighted,
/// self-centered covariance is spectrally close to I.
inline OracleAnswer separation_oracle_mean(const WeightVector& w, const SampleSet& samples,
                                           double eps, const ConvexMeanConfig& cfg = {}) {
    require(w.weights.size() == samples.size(), "weights/sample size mismatch");
    const Eigen::Index d = samples.dim();
    Vec mu = weighted_mean(samples, w);
    Mat m = weighted_covariance(samples, w, mu) - Mat::Identity(d, d);
    auto [lam, v] = top_eigenpair_abs(m, cfg.eig_tol);

    if (std::abs(lam) < 0.5 * cfg.c_sep * oracle_delta(eps)) return std::monostate{};

    Vec centered_sq = ((samples.data.rowwise() - mu.transpose()) * v).array().square();
    OracleCut cut;
    cut.lambda = lam;
    if (lam > 0.0) {
        // ell(w) = (sum_i w_i <Y_i, v>^2 - 1) - lambda
        cut.coeffs = centered_sq;
        cut.offset = -1.0 - lam;
    } else {
        // ell(w) = lambda - (sum_i w_i <Y_i, v>^2 - 1)
        cut.coeffs = -centered_sq;
        cut.offset = 1.0 + lam;
    }
    return cut;
}

/// Cutting-plane driver: NaivePrune, then from uniform weights walk against
/// each returned cut and re-project onto S_{N,eps} until the oracle accepts
/// or the cap is hit (flagged best-so-far). Ellipsoid machinery is overkill
/// at this scale; any cut-respecting descent reaches the accept region.
inline GaussianModel learn_mean_convex(const SampleSet& samples, double eps, double tau,
                                       const FilterConfig& fcfg, EstimationLog* log = nullptr,
                                       const ConvexMeanConfig& cfg = {}) {
    FilterConfig pruned_cfg = fcfg;
    pruned_cfg.epsilon = eps;
    pruned_cfg.tau = tau;
    pruned_cfg.validate();
    const Eigen::Index d = samples.dim();

    std::vector<int> active = naive_prune_indices(samples, pruned_cfg);
    SampleSet cur = samples.rows(active);
    if (log && static_cast<Eigen::Index>(active.size()) < samples.size()) {
        StepRecord rec;
        rec.removed = samples.size() - static_cast<Eigen::Index>(active.size());
        rec.removed_original_rows = detail::complement_rows(samples.size(), active);
        rec.threshold = -1.0;
        log->steps.push_back(std::move(rec));
    }

    const Eigen::Index n = cur.size();
    WeightVector w = WeightVector::uniform(n, eps);
    Vec best = weighted_mean(cur, w);

    for (long it = 0; it < cfg.max_cuts; ++it) {
        OracleAnswer ans = separation_oracle_mean(w, cur, eps, cfg);
        if (log) ++log->iterations;
        if (std::holds_alternative<std::monostate>(ans))
            return GaussianModel(weighted_mean(cur, w), Mat::Identity(d, d));
        const OracleCut& cut = std::get<OracleCut>(ans);
        // Polyak-style step across the cut: ell is >= 0 at the query and
        // negative at the target, so aim a little past zero.
        double g2 = cut.coeffs.squaredNorm();
        if (g2 == 0.0) break;
        double margin = std::max(0.25 * std::abs(cut.lambda), 1e-3);
        double step = (cut.eval(w.weights) + margin) / g2;
        Vec moved = w.weights - step * cut.coeffs;
        w = project_to_weight_set(moved, eps);
        best = weighted_mean(cur, w);
    }
    if (log) log->converged = false;
    return GaussianModel(best, Mat::Identity(d, d));
}

}  // namespace robustlearn

#endif
