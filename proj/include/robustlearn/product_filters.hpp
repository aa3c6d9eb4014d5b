#ifndef ROBUSTLEARN_PRODUCT_FILTERS_HPP
#define ROBUSTLEARN_PRODUCT_FILTERS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "robustlearn/common.hpp"
#include "robustlearn/filter.hpp"
#include "robustlearn/gaussian_filters.hpp"
#include "robustlearn/models.hpp"
#include "robustlearn/spectral.hpp"

namespace robustlearn {

/// Asymmetric chi-squared distance sum_i (x_i - y_i)^2 / (x_i (1 - x_i)).
/// Coordinates with x_i in {0,1} make the distance infinite unless they agree
/// exactly.
inline double chi_squared_asym(const Vec& x, const Vec& y) {
    require(x.size() == y.size(), "dimension mismatch");
    double acc = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        double num = (x[i] - y[i]) * (x[i] - y[i]);
        double den = x[i] * (1.0 - x[i]);
        if (den <= 0.0) {
            if (num == 0.0) continue;
            return std::numeric_limits<double>::infinity();
        }
        acc += num / den;
    }
    return acc;
}

namespace detail {

inline void require_binary(const SampleSet& s) {
    for (Eigen::Index i = 0; i < s.size(); ++i)
        for (Eigen::Index j = 0; j < s.dim(); ++j)
            require(s.data(i, j) == 0.0 || s.data(i, j) == 1.0,
                    "product filters expect samples over {0,1}^d");
}

inline Vec clamp_mean(Vec p, double lo) {
    for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = std::min(1.0 - lo, std::max(lo, p[i]));
    return p;
}

}  // namespace detail

/// One step of the balanced-product filter: zeroed-diagonal covariance,
/// accept on small spectral norm, otherwise a tail filter along the top
/// eigenvector with the Chernoff-style bound 8 exp(-T^2/2) + 8 eps/d.
inline FilterOutcome filter_balanced_step(const SampleSet& samples, const FilterConfig& cfg) {
    cfg.validate();
    detail::require_binary(samples);
    const Eigen::Index n = samples.size();
    const Eigen::Index d = samples.dim();
    require(n >= 1, "empty sample set");
    const double eps = cfg.epsilon;

    Vec mu = detail::column_mean(samples.data);
    Mat m = zero_diagonal(detail::uniform_covariance(samples.data, mu));
    auto [lam, v] = top_eigenpair_abs(m, cfg.eig_tol);

    FilterOutcome out;
    out.diagnostics.lambda_star = lam;
    out.diagnostics.direction = v;

    const double accept = cfg.c_balanced_accept * eps * std::log(1.0 / eps);
    if (std::abs(lam) <= accept) {
        out.kind = FilterOutcome::Kind::Estimate;
        out.estimate = BinaryProductModel(mu);
        out.diagnostics.threshold = accept;
        return out;
    }

    const double delta = 3.0 * std::sqrt(eps * std::abs(lam));
    Vec proj = (samples.data.rowwise() - mu.transpose()) * v;
    std::vector<double> mags(static_cast<size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) mags[static_cast<size_t>(i)] = std::abs(proj[i]);
    std::sort(mags.begin(), mags.end());

    auto bound = [&](double t) {
        return 8.0 * std::exp(-t * t / 2.0) + 8.0 * eps / static_cast<double>(d);
    };
    std::optional<double> t = tail_threshold_search(mags, delta, bound, 0.0);
    if (!t)
        throw ViolatedAssumptionError("balanced filter: spectral norm large but no valid T", lam,
                                      delta);

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

/// Balanced-product learner: at most d+1 filter iterations. The estimate is
/// clamped into [eps/(2d), 1 - eps/(2d)] so downstream log-densities stay
/// finite; the TV cost of the clamp is O(eps).
inline BinaryProductModel learn_balanced_product(const SampleSet& samples, const FilterConfig& cfg,
                                                 EstimationLog* log = nullptr) {
    cfg.validate();
    const Eigen::Index d = samples.dim();
    const double clamp = cfg.epsilon / (2.0 * static_cast<double>(d));
    std::vector<int> active(static_cast<size_t>(samples.size()));
    std::iota(active.begin(), active.end(), 0);
    SampleSet cur = samples;

    const long cap = cfg.max_iterations > 0 ? cfg.max_iterations : static_cast<long>(d) + 1;
    for (long it = 0; it < cap; ++it) {
        FilterOutcome step = filter_balanced_step(cur, cfg);
        if (log) ++log->iterations;
        if (step.kind == FilterOutcome::Kind::Estimate)
            return BinaryProductModel(
                detail::clamp_mean(std::get<BinaryProductModel>(step.estimate).mean, clamp));
        detail::record_step(log, step, active, step.kept_rows);
        std::vector<int> next;
        next.reserve(step.kept_rows.size());
        for (int k : step.kept_rows) next.push_back(active[static_cast<size_t>(k)]);
        active = std::move(next);
        cur = std::move(step.reduced);
    }
    if (log) log->converged = false;
    return BinaryProductModel(detail::clamp_mean(detail::column_mean(cur.data), clamp));
}

/// One step of the general-product filter. Branches, in order: condition on
/// the most common value of any coordinate with mean within eps/d of 0 or 1;
/// accept when the chi^2-rescaled covariance D M D has small spectral norm;
/// otherwise filter along v* = D v' with the heavy-tail bound
/// 20/T^2 + 4 eps^{3/2}/d^2. Coordinates that are constant in the sample are
/// ignored by the rescaling and re-inserted into estimates unchanged.
inline FilterOutcome filter_general_step(const SampleSet& samples, const FilterConfig& cfg) {
    cfg.validate();
    detail::require_binary(samples);
    const Eigen::Index n = samples.size();
    const Eigen::Index d = samples.dim();
    require(n >= 1, "empty sample set");
    const double eps = cfg.epsilon;

    Vec mu = detail::column_mean(samples.data);
    FilterOutcome out;

    // Biased-coordinate pass: 0 < mu_i < eps/d (or mirrored).
    {
        const double lim = eps / static_cast<double>(d);
        std::vector<int> biased;
        for (Eigen::Index j = 0; j < d; ++j)
            if ((mu[j] > 0.0 && mu[j] < lim) || (mu[j] < 1.0 && 1.0 - mu[j] < lim))
                biased.push_back(static_cast<int>(j));
        if (!biased.empty()) {
            std::vector<int> kept;
            for (Eigen::Index i = 0; i < n; ++i) {
                bool ok = true;
                for (int j : biased) {
                    double common = mu[j] >= 0.5 ? 1.0 : 0.0;
                    if (samples.data(i, j) != common) {
                        ok = false;
                        break;
                    }
                }
                if (ok) kept.push_back(static_cast<int>(i));
            }
            require(!kept.empty(), "biased-coordinate conditioning removed every row");
            out.kind = FilterOutcome::Kind::Reduced;
            out.reduced = samples.rows(kept);
            out.kept_rows = std::move(kept);
            out.diagnostics.removed = n - out.reduced.size();
            out.diagnostics.threshold = lim;
            return out;
        }
    }

    // Support = coordinates that still vary; constant ones carry through.
    std::vector<int> support;
    for (Eigen::Index j = 0; j < d; ++j)
        if (mu[j] > 0.0 && mu[j] < 1.0) support.push_back(static_cast<int>(j));
    const auto ds = static_cast<Eigen::Index>(support.size());

    if (ds == 0) {
        // All rows identical: the estimate is that row.
        out.kind = FilterOutcome::Kind::Estimate;
        out.estimate = BinaryProductModel(mu);
        return out;
    }

    Mat xs(n, ds);
    Vec mus(ds), dscale(ds);
    for (Eigen::Index k = 0; k < ds; ++k) {
        xs.col(k) = samples.data.col(support[static_cast<size_t>(k)]);
        mus[k] = mu[support[static_cast<size_t>(k)]];
        dscale[k] = 1.0 / std::sqrt(mus[k] * (1.0 - mus[k]));
    }
    Mat cov = detail::uniform_covariance(xs, mus);
    Mat dmd = dscale.asDiagonal() * cov * dscale.asDiagonal();
    dmd = ((dmd + dmd.transpose()) * 0.5).eval();
    auto [lam, vprime] = top_eigenpair_abs(dmd, cfg.eig_tol);
    out.diagnostics.lambda_star = lam;

    const double accept = cfg.c_general_accept * std::log(1.0 / eps);
    if (std::abs(lam) < accept) {
        out.kind = FilterOutcome::Kind::Estimate;
        out.estimate = BinaryProductModel(mu);
        out.diagnostics.threshold = accept;
        return out;
    }

    const double delta = 3.0 * std::sqrt(eps * std::abs(lam));
    Vec vstar = dscale.asDiagonal() * vprime;  // not unit norm, by construction
    {
        Vec dir = Vec::Zero(d);
        for (Eigen::Index k = 0; k < ds; ++k) dir[support[static_cast<size_t>(k)]] = vstar[k];
        out.diagnostics.direction = dir;
    }
    Vec proj = (xs.rowwise() - mus.transpose()) * vstar;
    std::vector<double> mags(static_cast<size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) mags[static_cast<size_t>(i)] = std::abs(proj[i]);
    std::sort(mags.begin(), mags.end());

    auto bound = [&](double t) {
        if (t <= 0.0) return std::numeric_limits<double>::infinity();
        return 20.0 / (t * t) +
               4.0 * std::pow(eps, 1.5) / (static_cast<double>(d) * static_cast<double>(d));
    };
    std::optional<double> t = tail_threshold_search(mags, delta, bound, 0.0);
    if (!t)
        throw ViolatedAssumptionError("general filter: rescaled spectral norm large but no valid T",
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

/// General-product learner; cap 4d iterations covers the composite potential
/// (each step either filters rows or conditions away a biased coordinate).
inline BinaryProductModel learn_general_product(const SampleSet& samples, const FilterConfig& cfg,
                                                EstimationLog* log = nullptr) {
    cfg.validate();
    const Eigen::Index d = samples.dim();
    const double clamp = cfg.epsilon / (2.0 * static_cast<double>(d));
    std::vector<int> active(static_cast<size_t>(samples.size()));
    std::iota(active.begin(), active.end(), 0);
    SampleSet cur = samples;

    const long cap = cfg.max_iterations > 0 ? cfg.max_iterations : 4 * static_cast<long>(d);
    for (long it = 0; it < cap; ++it) {
        FilterOutcome step = filter_general_step(cur, cfg);
        if (log) ++log->iterations;
        if (step.kind == FilterOutcome::Kind::Estimate)
            return BinaryProductModel(
                detail::clamp_mean(std::get<BinaryProductModel>(step.estimate).mean, clamp));
        detail::record_step(log, step, active, step.kept_rows);
        std::vector<int> next;
        next.reserve(step.kept_rows.size());
        for (int k : step.kept_rows) next.push_back(active[static_cast<size_t>(k)]);
        active = std::move(next);
        cur = std::move(step.reduced);
    }
    if (log) log->converged = false;
    return BinaryProductModel(detail::clamp_mean(detail::column_mean(cur.data), clamp));
}

}  // namespace robustlearn

#endif
