#ifndef ROBUSTLEARN_MIXTURE_FILTERS_HPP
#define ROBUSTLEARN_MIXTURE_FILTERS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <utility>
#include <vector>

#include "robustlearn/common.hpp"
#include "robustlearn/distances.hpp"
#include "robustlearn/filter.hpp"
#include "robustlearn/models.hpp"
#include "robustlearn/product_filters.hpp"
#include "robustlearn/rng.hpp"
#include "robustlearn/spectral.hpp"
#include "robustlearn/tournament.hpp"

namespace robustlearn {

/// Per-row fraction of (sub)sampled rows Y with |r.(x - Y)| < t. Exact over
/// all rows when budget >= N, otherwise a seeded subsample of `budget` rows.
inline Vec pairwise_tail_fraction(const SampleSet& samples, const Vec& r, double t, long budget,
                                  std::uint64_t seed) {
    const Eigen::Index n = samples.size();
    require(n >= 1, "empty sample set");
    require(budget >= 1, "budget must be positive");
    require(r.size() == samples.dim(), "direction dimension mismatch");
    Vec z = samples.data * r;

    std::vector<double> zs;
    if (budget >= n) {
        zs.assign(z.data(), z.data() + n);
    } else {
        Rng rng(seed);
        std::vector<int> idx(static_cast<size_t>(n));
        std::iota(idx.begin(), idx.end(), 0);
        for (long i = 0; i < budget; ++i) {
            auto j = i + static_cast<long>(rng.below(static_cast<std::uint64_t>(n - i)));
            std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
        }
        zs.reserve(static_cast<size_t>(budget));
        for (long i = 0; i < budget; ++i) zs.push_back(z[idx[static_cast<size_t>(i)]]);
    }
    std::sort(zs.begin(), zs.end());
    const double m = static_cast<double>(zs.size());

    Vec out(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        auto lo = std::upper_bound(zs.begin(), zs.end(), z[i] - t);
        auto hi = std::lower_bound(zs.begin(), zs.end(), z[i] + t);
        out[i] = static_cast<double>(hi - lo) / m;
    }
    return out;
}

namespace detail {

// Points mu + i*step*dir for |i| <= imax, clamped coordinatewise into
// [c, 1-c]. Clamping makes end runs collapse; duplicates are consecutive and
// removed.
inline std::vector<Vec> candidate_line(const Vec& mu, const Vec& dir, double step, long imax,
                                       double c) {
    std::vector<Vec> pts;
    for (long i = -imax; i <= imax; ++i) {
        Vec p = mu + static_cast<double>(i) * step * dir;
        for (Eigen::Index j = 0; j < p.size(); ++j) p[j] = std::min(1.0 - c, std::max(c, p[j]));
        if (!pts.empty() && (pts.back() - p).cwiseAbs().maxCoeff() == 0.0) continue;
        pts.push_back(std::move(p));
    }
    return pts;
}

inline std::vector<double> grid_multiples(double step, double lo, double hi) {
    std::vector<double> out;
    for (long k = static_cast<long>(std::ceil(lo / step - 1e-12));
         static_cast<double>(k) * step <= hi + 1e-12; ++k) {
        double v = static_cast<double>(k) * step;
        if (v >= lo - 1e-12) out.push_back(std::min(hi, std::max(lo, v)));
    }
    if (out.empty()) out.push_back(0.5 * (lo + hi));  // grid coarser than the interval
    return out;
}

inline Vec insert_coordinate(const Vec& v, int pos, double value) {
    Vec out(v.size() + 1);
    for (Eigen::Index j = 0, k = 0; j < out.size(); ++j) {
        if (j == pos)
            out[j] = value;
        else
            out[j] = v[k++];
    }
    return out;
}

inline Vec drop_coordinate(const Vec& v, int pos) {
    Vec out(v.size() - 1);
    for (Eigen::Index j = 0, k = 0; j < v.size(); ++j)
        if (j != pos) out[k++] = v[j];
    return out;
}

}  // namespace detail

/// Anchor filter: condition on coordinate i_star, whose conditional means
/// define u; examine the top eigenvalue of the covariance restricted to the
/// complement of u. Small lambda yields a candidate grid along the u line;
/// large lambda yields a tail filter orthogonal to u.
inline FilterOutcome filter_anchor_step(int i_star, const SampleSet& samples,
                                        const FilterConfig& cfg) {
    cfg.validate();
    const Eigen::Index n = samples.size();
    const Eigen::Index d = samples.dim();
    require(i_star >= 0 && i_star < d, "anchor coordinate out of range");
    require(n >= 2, "need at least two samples");
    const double eps = cfg.epsilon;
    const double c = cfg.c_balanced;
    const double g = std::pow(eps, 1.0 / 6.0);

    std::vector<int> rows0, rows1;
    for (Eigen::Index i = 0; i < n; ++i)
        (samples.data(i, i_star) >= 0.5 ? rows1 : rows0).push_back(static_cast<int>(i));
    if (rows0.empty() || rows1.empty())
        throw ParameterError("anchor coordinate carries no signal (an i_star split is empty)");

    Mat xr(n, d - 1);
    for (Eigen::Index i = 0; i < n; ++i)
        xr.row(i) = detail::drop_coordinate(samples.data.row(i).transpose(), i_star).transpose();
    Vec mu = detail::column_mean(xr);
    Mat sigma = detail::uniform_covariance(xr, mu);

    Vec mu0 = Vec::Zero(d - 1), mu1 = Vec::Zero(d - 1);
    for (int i : rows0) mu0 += xr.row(i).transpose();
    for (int i : rows1) mu1 += xr.row(i).transpose();
    mu0 /= static_cast<double>(rows0.size());
    mu1 /= static_cast<double>(rows1.size());
    Vec u = mu1 - mu0;

    double lam;
    Vec v;
    if (u.norm() == 0.0) {
        // identical conditional means: the constraint is vacuous
        std::tie(lam, v) = top_eigenpair_abs(sigma, cfg.eig_tol);
    } else {
        std::tie(lam, v) = top_eigenpair_constrained(sigma, u, cfg.eig_tol);
    }

    FilterOutcome out;
    out.diagnostics.lambda_star = lam;

    if (lam <= cfg.anchor_lambda_threshold) {
        const double unorm = std::max(u.norm(), 1e-12);
        const long imax =
            static_cast<long>(std::floor(1.0 + std::sqrt(static_cast<double>(d)) / g));
        std::vector<Vec> line = detail::candidate_line(mu, u / unorm, g, imax, c);
        std::vector<double> coord_grid = detail::grid_multiples(g, c, 1.0 - c);
        std::vector<double> alpha_grid = detail::grid_multiples(g, 0.0, 1.0);

        out.kind = FilterOutcome::Kind::Candidates;
        for (const Vec& a : line) {
            for (const Vec& b : line) {
                for (double pa : coord_grid) {
                    for (double qb : coord_grid) {
                        for (double alpha : alpha_grid) {
                            if (static_cast<long>(out.candidates.size()) >= cfg.candidate_cap) {
                                out.candidates_truncated = true;
                                return out;
                            }
                            out.candidates.emplace_back(ProductMixtureModel(
                                alpha,
                                BinaryProductModel(detail::insert_coordinate(a, i_star, pa)),
                                BinaryProductModel(detail::insert_coordinate(b, i_star, qb))));
                        }
                    }
                }
            }
        }
        return out;
    }

    const double delta = cfg.c_anchor_delta * (g * std::sqrt(lam) +
                                               std::pow(eps, 2.0 / 3.0) * std::log(1.0 / eps));
    Vec proj = (xr.rowwise() - mu.transpose()) * v;
    std::vector<double> mags(static_cast<size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) mags[static_cast<size_t>(i)] = std::abs(proj[i]);
    std::sort(mags.begin(), mags.end());
    auto bound = [&](double t) {
        return 8.0 * std::exp(-t * t / 2.0) + 8.0 * eps / static_cast<double>(d);
    };
    std::optional<double> t = tail_threshold_search(mags, delta, bound, 0.0);
    if (!t)
        throw ViolatedAssumptionError("anchor filter: constrained eigenvalue large but no valid T",
                                      lam, delta);

    std::vector<int> kept;
    for (Eigen::Index i = 0; i < n; ++i)
        if (std::abs(proj[i]) <= *t + delta) kept.push_back(static_cast<int>(i));
    out.kind = FilterOutcome::Kind::Reduced;
    out.reduced = samples.rows(kept);
    out.kept_rows = std::move(kept);
    out.diagnostics.direction = v;
    out.diagnostics.delta = delta;
    out.diagnostics.threshold = *t;
    out.diagnostics.removed = n - out.reduced.size();
    return out;
}

/// Close-means filter: when the zeroed-diagonal covariance has at most one
/// eigenvalue above C*delta^2 the component means hug a line and a candidate
/// grid is emitted; otherwise two large eigenvectors span a plane in which a
/// direction r and a pairwise-distance threshold t separate corrupt mass.
inline FilterOutcome filter_close_step(const SampleSet& samples, const FilterConfig& cfg,
                                       double delta) {
    cfg.validate();
    require(delta > 0.0 && delta < 1.0, "delta must lie in (0,1)");
    const Eigen::Index n = samples.size();
    const Eigen::Index d = samples.dim();
    require(n >= 2, "pairwise census undefined for N < 2");
    const double eps = cfg.epsilon;
    const double c = cfg.c_balanced;

    Vec mu = detail::column_mean(samples.data);
    Mat m0 = zero_diagonal(detail::uniform_covariance(samples.data, mu));
    const double gate = cfg.c_close * delta * delta;
    auto big = eigenpairs_above(m0, gate, 2, cfg.eig_tol);

    FilterOutcome out;
    if (big.size() <= 1) {
        auto [lam, vstar] = top_eigenpair_abs(m0, cfg.eig_tol);
        out.diagnostics.lambda_star = lam;
        out.diagnostics.direction = vstar;
        const long imax =
            static_cast<long>(std::floor(1.0 + std::sqrt(static_cast<double>(d)) / delta));
        std::vector<Vec> line = detail::candidate_line(mu, vstar, delta, imax, c);
        std::vector<double> alpha_grid = detail::grid_multiples(eps, 10.0 * eps, 0.5);

        out.kind = FilterOutcome::Kind::Candidates;
        for (const Vec& a : line) {
            for (const Vec& b : line) {
                for (double alpha : alpha_grid) {
                    if (static_cast<long>(out.candidates.size()) >= cfg.candidate_cap) {
                        out.candidates_truncated = true;
                        return out;
                    }
                    out.candidates.emplace_back(ProductMixtureModel(
                        alpha, BinaryProductModel(a), BinaryProductModel(b)));
                }
            }
        }
        return out;
    }

    const Vec ustar = big[0].second;
    const Vec vstar = big[1].second;
    out.diagnostics.lambda_star = big[0].first;

    // Subsample once; the same census backs every (theta, t) probe.
    const long budget = std::min<long>(cfg.census_budget, n);
    std::vector<int> census_rows(static_cast<size_t>(n));
    std::iota(census_rows.begin(), census_rows.end(), 0);
    if (budget < n) {
        Rng rng(cfg.census_seed);
        for (long i = 0; i < budget; ++i) {
            auto j = i + static_cast<long>(rng.below(static_cast<std::uint64_t>(n - i)));
            std::swap(census_rows[static_cast<size_t>(i)], census_rows[static_cast<size_t>(j)]);
        }
        census_rows.resize(static_cast<size_t>(budget));
    }
    const double mcount = static_cast<double>(budget);
    const long k_near = std::max<long>(1, static_cast<long>(std::ceil(2.0 * eps * mcount)));

    const double t_min = 1.0 + 2.0 * std::sqrt(std::log(1.0 / eps));
    const double theta_step = delta * delta / static_cast<double>(d);
    const double pi = 3.14159265358979323846;

    for (double theta = 0.0; theta < pi; theta += theta_step) {
        Vec r = std::cos(theta) * ustar + std::sin(theta) * vstar;
        Vec z = samples.data * r;
        std::vector<double> zs(static_cast<size_t>(budget));
        for (long i = 0; i < budget; ++i) zs[static_cast<size_t>(i)] = z[census_rows[static_cast<size_t>(i)]];
        std::sort(zs.begin(), zs.end());

        // r_x = distance from z_x to its k_near-th nearest census value;
        // the row condition Pr_Y(|r.(x-Y)| < t) < 2*eps is exactly t <= r_x.
        std::vector<double> radius(static_cast<size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) {
            double zi = z[i];
            auto pos = std::lower_bound(zs.begin(), zs.end(), zi) - zs.begin();
            long lo = static_cast<long>(pos) - 1, hi = static_cast<long>(pos);
            double rad = 0.0;
            for (long step = 0; step < k_near; ++step) {
                double dl = lo >= 0 ? zi - zs[static_cast<size_t>(lo)]
                                    : std::numeric_limits<double>::infinity();
                double dh = hi < budget ? zs[static_cast<size_t>(hi)] - zi
                                        : std::numeric_limits<double>::infinity();
                if (dl <= dh) {
                    rad = dl;
                    --lo;
                } else {
                    rad = dh;
                    ++hi;
                }
            }
            radius[static_cast<size_t>(i)] = rad;
        }
        std::vector<double> sorted_radius = radius;
        std::sort(sorted_radius.begin(), sorted_radius.end());

        double spread = zs.back() - zs.front();
        for (double t = t_min; t <= std::max(spread, t_min) + 0.25; t += 0.25) {
            // #{x : r_x >= t} / N, via the sorted radii
            auto it = std::lower_bound(sorted_radius.begin(), sorted_radius.end(), t);
            double frac = static_cast<double>(sorted_radius.end() - it) / static_cast<double>(n);
            if (frac > 12.0 * std::exp(-t * t / 4.0) + 3.0 * eps / static_cast<double>(d)) {
                std::vector<int> kept;
                for (Eigen::Index i = 0; i < n; ++i)
                    if (radius[static_cast<size_t>(i)] < t) kept.push_back(static_cast<int>(i));
                require(!kept.empty(), "close filter removed every row");
                out.kind = FilterOutcome::Kind::Reduced;
                out.reduced = samples.rows(kept);
                out.kept_rows = std::move(kept);
                out.diagnostics.direction = r;
                out.diagnostics.delta = theta;
                out.diagnostics.threshold = t;
                out.diagnostics.removed = n - out.reduced.size();
                return out;
            }
        }
    }
    throw ViolatedAssumptionError("close filter: two large eigenvalues but no valid (t, theta)",
                                  big[0].first, delta);
}

struct MixtureLog {
    EstimationLog balanced_stage;
    std::vector<EstimationLog> anchor_stages;  // one per i_star
    EstimationLog close_stage;
    Eigen::Index fold_offsets[3] = {0, 0, 0};
    long pool_size = 0;
    bool truncated = false;
    int winner_index = -1;
    bool tournament_fallback = false;
};

namespace detail {

// Average log-mass of each candidate against the histogram of binary rows.
// Higher first; used only to order the pool so the lowest-index tournament
// survivor is the best-supported candidate. Rows that are not 0/1 vectors
// (blatant corruption) are ignored.
inline std::vector<int> order_by_likelihood(const std::vector<Model>& pool,
                                            const SampleSet& samples, int d) {
    std::vector<double> hist(static_cast<size_t>(1) << d, 0.0);
    for (Eigen::Index i = 0; i < samples.size(); ++i) {
        size_t idx = 0;
        bool binary = true;
        for (int j = 0; j < d; ++j) {
            double v = samples.data(i, j);
            if (v != 0.0 && v != 1.0) {
                binary = false;
                break;
            }
            idx = (idx << 1) | (v == 1.0 ? 1u : 0u);
        }
        if (binary) hist[idx] += 1.0;
    }
    std::vector<double> score(pool.size());
    for (size_t ci = 0; ci < pool.size(); ++ci) {
        std::vector<double> tbl = mass_table(pool[ci], d);
        double s = 0.0;
        for (size_t x = 0; x < tbl.size(); ++x) {
            if (hist[x] == 0.0) continue;
            s += tbl[x] > 0.0 ? hist[x] * std::log(tbl[x])
                              : -std::numeric_limits<double>::infinity();
        }
        score[ci] = s;
    }
    std::vector<int> order(pool.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return score[static_cast<size_t>(a)] > score[static_cast<size_t>(b)];
    });
    return order;
}

inline bool same_model(const Model& a, const Model& b) {
    if (a.index() != b.index()) return false;
    if (const auto* pa = std::get_if<BinaryProductModel>(&a)) {
        const auto& pb = std::get<BinaryProductModel>(b);
        return pa->mean == pb.mean;
    }
    if (const auto* ma = std::get_if<ProductMixtureModel>(&a)) {
        const auto& mb = std::get<ProductMixtureModel>(b);
        return ma->weight == mb.weight && ma->component_p.mean == mb.component_p.mean &&
               ma->component_q.mean == mb.component_q.mean;
    }
    return false;
}

}  // namespace detail

/// Driver for learning a mixture of two c-balanced binary products. Splits
/// the input into three contiguous folds (single-product stage, anchor stage,
/// close stage), pools every candidate the stages emit, rounds them to the
/// (eps/d, eps) grid, and picks the winner by tournament over the full input.
inline ProductMixtureModel learn_product_mixture(const SampleSet& samples, const FilterConfig& cfg,
                                                 MixtureLog* log = nullptr) {
    cfg.validate();
    const Eigen::Index n = samples.size();
    const Eigen::Index d = samples.dim();
    require(n >= 6, "need at least six samples to form three folds");
    require(d <= 14, "mixture driver uses exact tournaments; d <= 14");
    const double eps = cfg.epsilon;
    const double g = std::pow(eps, 1.0 / 6.0);

    const Eigen::Index third = n / 3;
    std::vector<int> f1(static_cast<size_t>(third)), f2(static_cast<size_t>(third)),
        f3(static_cast<size_t>(n - 2 * third));
    std::iota(f1.begin(), f1.end(), 0);
    std::iota(f2.begin(), f2.end(), static_cast<int>(third));
    std::iota(f3.begin(), f3.end(), static_cast<int>(2 * third));
    SampleSet fold1 = samples.rows(f1);
    SampleSet fold2 = samples.rows(f2);
    SampleSet fold3 = samples.rows(f3);
    if (log) {
        log->fold_offsets[0] = 0;
        log->fold_offsets[1] = third;
        log->fold_offsets[2] = 2 * third;
    }

    std::vector<Model> pool;
    bool truncated = false;

    // Single-product stage at corruption level 2*eps^{1/6} (clamped below
    // 1/2, which the raw value can exceed for moderate eps).
    {
        FilterConfig c1 = cfg;
        c1.epsilon = std::min(2.0 * g, 0.49);
        c1.max_iterations = static_cast<long>(d) + 1;
        try {
            BinaryProductModel est =
                learn_balanced_product(fold1, c1, log ? &log->balanced_stage : nullptr);
            pool.emplace_back(ProductMixtureModel(1.0, est, est));
        } catch (const std::runtime_error&) {
            // stage yields no candidate
        }
    }

    // Anchor stage, one pass per coordinate.
    if (log) log->anchor_stages.resize(static_cast<size_t>(d));
    for (int istar = 0; istar < d; ++istar) {
        SampleSet cur = fold2;
        EstimationLog* alog = log ? &log->anchor_stages[static_cast<size_t>(istar)] : nullptr;
        std::vector<int> active = f2;
        try {
            for (long it = 0; it <= static_cast<long>(d); ++it) {
                FilterOutcome step = filter_anchor_step(istar, cur, cfg);
                if (alog) ++alog->iterations;
                if (step.kind == FilterOutcome::Kind::Candidates) {
                    truncated = truncated || step.candidates_truncated;
                    for (Model& m : step.candidates) {
                        if (static_cast<long>(pool.size()) >= cfg.candidate_cap) {
                            truncated = true;
                            break;
                        }
                        pool.push_back(std::move(m));
                    }
                    break;
                }
                detail::record_step(alog, step, active, step.kept_rows);
                std::vector<int> next;
                next.reserve(step.kept_rows.size());
                for (int k : step.kept_rows) next.push_back(active[static_cast<size_t>(k)]);
                active = std::move(next);
                cur = std::move(step.reduced);
            }
        } catch (const std::runtime_error&) {
            // this anchor coordinate contributes nothing
        }
    }

    // Close stage with delta = eps^{1/6}.
    {
        SampleSet cur = fold3;
        std::vector<int> active = f3;
        try {
            for (long it = 0; it <= static_cast<long>(d); ++it) {
                FilterOutcome step = filter_close_step(cur, cfg, g);
                if (log) ++log->close_stage.iterations;
                if (step.kind == FilterOutcome::Kind::Candidates) {
                    truncated = truncated || step.candidates_truncated;
                    for (Model& m : step.candidates) {
                        if (static_cast<long>(pool.size()) >= cfg.candidate_cap) {
                            truncated = true;
                            break;
                        }
                        pool.push_back(std::move(m));
                    }
                    break;
                }
                detail::record_step(log ? &log->close_stage : nullptr, step, active,
                                    step.kept_rows);
                std::vector<int> next;
                next.reserve(step.kept_rows.size());
                for (int k : step.kept_rows) next.push_back(active[static_cast<size_t>(k)]);
                active = std::move(next);
                cur = std::move(step.reduced);
            }
        } catch (const std::runtime_error&) {
        }
    }

    require(!pool.empty(), "mixture driver produced an empty candidate pool");

    // Grid rounding, dedup, then best-supported-first ordering.
    for (Model& m : pool) m = round_model_to_grid(m, eps, d);
    {
        std::vector<Model> unique;
        unique.reserve(pool.size());
        for (Model& m : pool) {
            bool dup = false;
            for (const Model& u : unique)
                if (detail::same_model(u, m)) {
                    dup = true;
                    break;
                }
            if (!dup) unique.push_back(std::move(m));
        }
        pool = std::move(unique);
    }
    std::vector<int> order = detail::order_by_likelihood(pool, samples, static_cast<int>(d));
    std::vector<Model> ordered;
    ordered.reserve(pool.size());
    for (int i : order) ordered.push_back(std::move(pool[static_cast<size_t>(i)]));

    TournamentResult res = tournament(ordered, samples, eps, 0.5 * g, cfg.tournament_mc,
                                      cfg.census_seed);
    if (log) {
        log->pool_size = static_cast<long>(ordered.size());
        log->truncated = truncated;
        log->winner_index = res.winner_index;
        log->tournament_fallback = res.all_eliminated;
    }
    if (const auto* mix = std::get_if<ProductMixtureModel>(&res.winner)) return *mix;
    const auto& p = std::get<BinaryProductModel>(res.winner);
    return ProductMixtureModel(1.0, p, p);
}

}  // namespace robustlearn

#endif
