#ifndef ROBUSTLEARN_GAUSSIAN_FILTERS_HPP
#define ROBUSTLEARN_GAUSSIAN_FILTERS_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <utility>
#include <vector>

#include "robustlearn/common.hpp"
#include "robustlearn/filter.hpp"
#include "robustlearn/models.hpp"
#include "robustlearn/spectral.hpp"

namespace robustlearn {

namespace detail {

inline Vec column_mean(const Mat& x) { return x.colwise().mean().transpose(); }

// Uniform covariance about `center`, exactly symmetric.
inline Mat uniform_covariance(const Mat& x, const Vec& center) {
    Mat c = x.rowwise() - center.transpose();
    Mat m = (c.transpose() * c) / static_cast<double>(x.rows());
    return ((m + m.transpose()) * 0.5).eval();
}

inline double lower_median(std::vector<double> v) {
    const size_t k = (v.size() - 1) / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<long>(k), v.end());
    return v[k];
}

inline std::vector<int> complement_rows(Eigen::Index n, const std::vector<int>& kept) {
    std::vector<int> out;
    out.reserve(static_cast<size_t>(n) - kept.size());
    size_t j = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (j < kept.size() && kept[j] == static_cast<int>(i))
            ++j;
        else
            out.push_back(static_cast<int>(i));
    }
    return out;
}

}  // namespace detail

/// Indices of rows that survive naive pruning: a row is dropped when more
/// than a 2*eps fraction of the rows sit at squared distance greater than
/// c_prune * d * ln(N/tau) from it. Exact pairwise census up to
/// prune_exact_limit rows, strided-reference census beyond that.
inline std::vector<int> naive_prune_indices(const SampleSet& samples, const FilterConfig& cfg) {
    cfg.validate();
    const Eigen::Index n = samples.size();
    const Eigen::Index d = samples.dim();
    require(n >= 2, "naive pruning needs at least two rows");
    const double r2 = cfg.c_prune * static_cast<double>(d) *
                      std::log(static_cast<double>(n) / cfg.tau);
    const Mat& x = samples.data;
    Vec norms = x.rowwise().squaredNorm();

    std::vector<int> kept;
    if (n <= cfg.prune_exact_limit) {
        Mat g = x * x.transpose();
        const double cut = 2.0 * cfg.epsilon * static_cast<double>(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            long far = 0;
            for (Eigen::Index j = 0; j < n; ++j)
                if (norms[i] + norms[j] - 2.0 * g(i, j) > r2) ++far;
            if (static_cast<double>(far) <= cut) kept.push_back(static_cast<int>(i));
        }
    } else {
        // Census against m evenly strided reference rows; the far-neighbor
        // fraction of a clean row is ~0 and of a displaced row is ~1, so the
        // estimate only needs accuracy well below eps.
        const Eigen::Index m = std::min<Eigen::Index>(n, 2048);
        Mat refs(m, d);
        Vec ref_norms(m);
        for (Eigen::Index t = 0; t < m; ++t) {
            Eigen::Index src = (t * n) / m;
            refs.row(t) = x.row(src);
            ref_norms[t] = norms[src];
        }
        const Eigen::Index block = 4096;
        for (Eigen::Index start = 0; start < n; start += block) {
            Eigen::Index len = std::min(block, n - start);
            Mat g = x.middleRows(start, len) * refs.transpose();
            for (Eigen::Index bi = 0; bi < len; ++bi) {
                long far = 0;
                for (Eigen::Index t = 0; t < m; ++t)
                    if (norms[start + bi] + ref_norms[t] - 2.0 * g(bi, t) > r2) ++far;
                if (static_cast<double>(far) <= 2.0 * cfg.epsilon * static_cast<double>(m))
                    kept.push_back(static_cast<int>(start + bi));
            }
        }
    }
    if (kept.empty())
        throw ParameterError("naive pruning removed every row (pathological input)");
    return kept;
}

inline SampleSet naive_prune(const SampleSet& samples, const FilterConfig& cfg) {
    return samples.rows(naive_prune_indices(samples, cfg));
}

/// One step of the unknown-mean filter. Accepts the sample mean when the
/// centered covariance is spectrally close to I; otherwise filters along the
/// top eigenvector with delta = 3*sqrt(eps*||Sigma - I||_2).
inline FilterOutcome filter_mean_step(const SampleSet& samples, const FilterConfig& cfg) {
    cfg.validate();
    const Eigen::Index n = samples.size();
    const Eigen::Index d = samples.dim();
    require(n >= 1, "empty sample set");
    const double eps = cfg.epsilon;

    Vec mu = detail::column_mean(samples.data);
    Mat m = detail::uniform_covariance(samples.data, mu) - Mat::Identity(d, d);
    auto [lam, v] = top_eigenpair_abs(m, cfg.eig_tol);

    FilterOutcome out;
    out.diagnostics.lambda_star = lam;
    out.diagnostics.direction = v;

    const double accept = cfg.c_spectral * eps * std::log(1.0 / eps);
    if (std::abs(lam) <= accept) {
        out.kind = FilterOutcome::Kind::Estimate;
        out.estimate = GaussianModel(mu, Mat::Identity(d, d));
        out.diagnostics.threshold = accept;
        return out;
    }

    const double delta = 3.0 * std::sqrt(eps * std::abs(lam));
    Vec proj = (samples.data.rowwise() - mu.transpose()) * v;
    std::vector<double> mags(static_cast<size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) mags[static_cast<size_t>(i)] = std::abs(proj[i]);
    std::sort(mags.begin(), mags.end());

    const double denom = static_cast<double>(d) * std::log(static_cast<double>(d) / (eps * cfg.tau));
    auto bound = [&](double t) { return 8.0 * std::exp(-t * t / 2.0) + 8.0 * eps / denom; };
    std::optional<double> t = tail_threshold_search(mags, delta, bound, 0.0);
    if (!t)
        throw ViolatedAssumptionError("mean filter: spectral norm large but no valid tail threshold",
                                      lam, delta);

    std::vector<int> kept;
    for (Eigen::Index i = 0; i < n; ++i)
        if (std::abs(proj[i]) <= *t + delta) kept.push_back(static_cast<int>(i));
    out.kind = FilterOutcome::Kind::Reduced;
    out.reduced = samples.rows(kept);
    out.kept_rows = std::move(kept);
    out.diagnostics.delta = delta;
    out.diagnostics.threshold = *t;
    out.diagnostics.removed = n - out.reduced.size();
    return out;
}

namespace detail {

inline long mean_iteration_cap(const FilterConfig& cfg, Eigen::Index d) {
    if (cfg.max_iterations > 0) return cfg.max_iterations;
    double cap = 2.0 * static_cast<double>(d) *
                 std::log(static_cast<double>(d) / (cfg.epsilon * cfg.tau));
    return std::max<long>(1, static_cast<long>(std::ceil(cap)));
}

inline void record_step(EstimationLog* log, const FilterOutcome& step,
                        const std::vector<int>& active_before,
                        const std::vector<int>& kept) {
    if (!log) return;
    StepRecord rec;
    rec.lambda_star = step.diagnostics.lambda_star;
    rec.delta = step.diagnostics.delta;
    rec.threshold = step.diagnostics.threshold;
    rec.removed = step.diagnostics.removed;
    for (int r : complement_rows(static_cast<Eigen::Index>(active_before.size()), kept))
        rec.removed_original_rows.push_back(active_before[static_cast<size_t>(r)]);
    log->steps.push_back(std::move(rec));
}

}  // namespace detail

/// Unknown-mean learner: one naive prune, then filter steps until the accept
/// branch fires or the iteration cap is hit (cap => flagged non-converged).
inline GaussianModel learn_gaussian_mean(const SampleSet& samples, const FilterConfig& cfg,
                                         EstimationLog* log = nullptr) {
    cfg.validate();
    const Eigen::Index d = samples.dim();
    if (samples.size() == 1) {
        if (log) log->converged = false;  // no filtering possible
        return GaussianModel(samples.data.row(0).transpose(), Mat::Identity(d, d));
    }

    std::vector<int> active = naive_prune_indices(samples, cfg);
    SampleSet cur = samples.rows(active);
    if (log && static_cast<Eigen::Index>(active.size()) < samples.size()) {
        StepRecord rec;
        rec.removed = samples.size() - static_cast<Eigen::Index>(active.size());
        rec.removed_original_rows = detail::complement_rows(samples.size(), active);
        rec.threshold = -1.0;  // marks the pruning pass
        log->steps.push_back(std::move(rec));
    }

    const long cap = detail::mean_iteration_cap(cfg, d);
    for (long it = 0; it < cap; ++it) {
        FilterOutcome step = filter_mean_step(cur, cfg);
        if (log) ++log->iterations;
        if (step.kind == FilterOutcome::Kind::Estimate)
            return std::get<GaussianModel>(step.estimate);
        detail::record_step(log, step, active, step.kept_rows);
        std::vector<int> next;
        next.reserve(step.kept_rows.size());
        for (int k : step.kept_rows) next.push_back(active[static_cast<size_t>(k)]);
        active = std::move(next);
        cur = std::move(step.reduced);
    }
    if (log) log->converged = false;
    return GaussianModel(detail::column_mean(cur.data), Mat::Identity(d, d));
}

/// Maximizes Q_{S'}(p)/Q_{G'}(p) over even degree-2 polynomials with
/// E_{G'}[p] = 0, via the top eigenpair of the whitened-fourth-moment
/// operator on symmetric flattenings. Matrix-free power iteration: one
/// application costs O(N d^2). Returns p* normalized to Q_{G'}(p*) = 1
/// together with lambda* = Q_{S'}(p*).
inline std::pair<EvenQuadratic, double> find_max_poly(const SampleSet& samples, const Mat& sigma,
                                                      const FilterConfig& cfg) {
    const Eigen::Index n = samples.size();
    const Eigen::Index d = samples.dim();
    require(n >= 1, "empty sample set");
    Mat w = sym_inv_sqrt(sigma, cfg.eig_floor);
    Mat y = samples.data * w;  // w is symmetric

    // Operator v -> (1/2) (M4_hat - flat(I) flat(I)^T) v on symmetric
    // flattenings, where M4_hat = (1/N) sum z_i z_i^T, z_i = y_i kron y_i.
    Vec id_flat = flatten(Mat::Identity(d, d));
    auto apply = [&](const Vec& v) -> Vec {
        Mat a = unflatten(v);
        a = ((a + a.transpose()) * 0.5).eval();
        Vec q = ((y * a).cwiseProduct(y)).rowwise().sum();
        Mat m4v = (y.transpose() * q.asDiagonal() * y) / static_cast<double>(n);
        Vec out = flatten(((m4v + m4v.transpose()) * 0.5).eval());
        out -= id_flat * (a.trace());
        return 0.5 * out;
    };
    // The operator is PSD on symmetric flattenings (it is half the empirical
    // variance of z^T v), so a unit shift keeps the dominant eigenvalue on
    // the positive side.
    auto [lam, v] = detail::power_iteration(apply, d * d, 1.0, cfg.cov_eig_tol, 3000);
    Mat vs = unflatten(v);
    vs = ((vs + vs.transpose()) * 0.5).eval();
    vs /= std::sqrt(2.0);
    EvenQuadratic p(vs, -vs.trace(), w);
    return {std::move(p), lam};
}

namespace detail {

inline Vec eval_quadratic_rows(const EvenQuadratic& p, const Mat& x) {
    Mat y = x * p.frame.transpose();
    Vec q = ((y * p.quad).cwiseProduct(y)).rowwise().sum();
    return q.array() + p.offset;
}

}  // namespace detail

/// One step of the unknown-covariance filter: (1) drop gross Mahalanobis
/// outliers, (2) accept Sigma' when the worst even quadratic has empirical
/// variance close to its Gaussian value, (3) otherwise filter on
/// |p*(x) - median| with a tail threshold T >= cov_t_min.
inline FilterOutcome filter_cov_step(const SampleSet& samples, const FilterConfig& cfg) {
    cfg.validate();
    const Eigen::Index n = samples.size();
    const Eigen::Index d = samples.dim();
    require(n >= 1, "empty sample set");
    const double eps = cfg.epsilon;

    Mat sigma = (samples.data.transpose() * samples.data) / static_cast<double>(n);
    sigma = ((sigma + sigma.transpose()) * 0.5).eval();

    FilterOutcome out;

    // (1) gross outliers in Mahalanobis norm
    {
        Mat w = sym_inv_sqrt(sigma, cfg.eig_floor);
        Vec q = (samples.data * w).rowwise().squaredNorm();
        const double gate = cfg.c_prune * static_cast<double>(d) *
                            std::log(static_cast<double>(n) / cfg.tau);
        std::vector<int> kept;
        for (Eigen::Index i = 0; i < n; ++i)
            if (q[i] < gate) kept.push_back(static_cast<int>(i));
        if (static_cast<Eigen::Index>(kept.size()) < n) {
            require(!kept.empty(), "covariance filter: every row is a gross outlier");
            out.kind = FilterOutcome::Kind::Reduced;
            out.reduced = samples.rows(kept);
            out.kept_rows = std::move(kept);
            out.diagnostics.lambda_star = q.maxCoeff();
            out.diagnostics.threshold = gate;
            out.diagnostics.removed = n - out.reduced.size();
            return out;
        }
    }

    auto [pstar, lam] = find_max_poly(samples, sigma, cfg);
    out.diagnostics.lambda_star = lam;
    out.diagnostics.direction = flatten(pstar.quad * std::sqrt(2.0));

    const double lg = std::log(1.0 / eps);
    const double accept = 1.0 + cfg.c_quadratic * eps * lg * lg;
    if (lam <= accept) {
        out.kind = FilterOutcome::Kind::Estimate;
        out.estimate = GaussianModel(Vec::Zero(d), sigma);
        out.diagnostics.threshold = accept;
        return out;
    }

    Vec vals = detail::eval_quadratic_rows(pstar, samples.data);
    std::vector<double> vv(vals.data(), vals.data() + vals.size());
    const double med = detail::lower_median(vv);
    std::vector<double> mags(static_cast<size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) mags[static_cast<size_t>(i)] = std::abs(vals[i] - med);
    std::sort(mags.begin(), mags.end());

    const double log_n_tau = std::log(static_cast<double>(n) / cfg.tau);
    const double tail_const = 3.0 * eps / ((static_cast<double>(d) * log_n_tau) *
                                           (static_cast<double>(d) * log_n_tau));
    auto bound = [&](double t) { return 12.0 * std::exp(-(t - 4.0 / 3.0) / 3.0) + tail_const; };
    std::optional<double> t = tail_threshold_search(mags, 0.0, bound, cfg.cov_t_min);
    if (!t)
        throw ViolatedAssumptionError("covariance filter: quadratic test fired but no valid T", lam,
                                      0.0);

    std::vector<int> kept;
    for (Eigen::Index i = 0; i < n; ++i)
        if (std::abs(vals[i] - med) <= *t) kept.push_back(static_cast<int>(i));
    out.kind = FilterOutcome::Kind::Reduced;
    out.reduced = samples.rows(kept);
    out.kept_rows = std::move(kept);
    out.diagnostics.threshold = *t;
    out.diagnostics.removed = n - out.reduced.size();
    return out;
}

/// Unknown-covariance learner for a mean-zero Gaussian.
inline GaussianModel learn_gaussian_cov(const SampleSet& samples, const FilterConfig& cfg,
                                        EstimationLog* log = nullptr) {
    cfg.validate();
    const Eigen::Index d = samples.dim();
    std::vector<int> active(static_cast<size_t>(samples.size()));
    std::iota(active.begin(), active.end(), 0);
    SampleSet cur = samples;

    const long cap = cfg.max_iterations > 0 ? cfg.max_iterations : 4 * static_cast<long>(d) * d;
    for (long it = 0; it < cap; ++it) {
        FilterOutcome step = filter_cov_step(cur, cfg);
        if (log) ++log->iterations;
        if (step.kind == FilterOutcome::Kind::Estimate)
            return std::get<GaussianModel>(step.estimate);
        detail::record_step(log, step, active, step.kept_rows);
        std::vector<int> next;
        next.reserve(step.kept_rows.size());
        for (int k : step.kept_rows) next.push_back(active[static_cast<size_t>(k)]);
        active = std::move(next);
        cur = std::move(step.reduced);
    }
    if (log) log->converged = false;
    Mat sigma = (cur.data.transpose() * cur.data) / static_cast<double>(cur.size());
    return GaussianModel(Vec::Zero(d), ((sigma + sigma.transpose()) * 0.5).eval());
}

/// Diagnostics for the arbitrary-Gaussian pipeline: the covariance stage runs
/// on differenced pairs (i, N/2+i), so its row ids refer to pairs.
struct ArbitraryGaussianLog {
    EstimationLog cov_stage;
    EstimationLog mean_stage;
    long pair_count = 0;
};

/// Arbitrary Gaussian: difference pairs to kill the mean, learn the
/// covariance at doubled corruption, whiten, learn the mean, and undo the
/// whitening on the way out.
inline GaussianModel learn_gaussian(const SampleSet& samples, const FilterConfig& cfg,
                                    ArbitraryGaussianLog* log = nullptr) {
    cfg.validate();
    Eigen::Index n = samples.size();
    require(n >= 4, "need at least four samples");
    if (n % 2 == 1) --n;  // odd N drops one sample
    const Eigen::Index half = n / 2;
    const Eigen::Index d = samples.dim();

    Mat pairs(half, d);
    for (Eigen::Index i = 0; i < half; ++i)
        pairs.row(i) = (samples.data.row(i) - samples.data.row(half + i)) / std::sqrt(2.0);

    FilterConfig cov_cfg = cfg;
    cov_cfg.epsilon = std::min(2.0 * cfg.epsilon, 0.49);
    GaussianModel cov_est = learn_gaussian_cov(SampleSet(std::move(pairs)), cov_cfg,
                                               log ? &log->cov_stage : nullptr);
    if (log) log->pair_count = half;

    Mat wi = sym_inv_sqrt(cov_est.covariance, cfg.eig_floor);
    SampleSet whitened(samples.data.topRows(n) * wi);
    GaussianModel mean_est =
        learn_gaussian_mean(whitened, cfg, log ? &log->mean_stage : nullptr);

    Vec mu = sym_sqrt(cov_est.covariance) * mean_est.mean;
    return GaussianModel(std::move(mu), cov_est.covariance);
}

}  // namespace robustlearn

#endif
