#ifndef ROBUSTLEARN_ADVERSARY_HPP
#define ROBUSTLEARN_ADVERSARY_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "robustlearn/common.hpp"
#include "robustlearn/models.hpp"
#include "robustlearn/rng.hpp"

namespace robustlearn {

enum class AdversaryKind { Oblivious, Full };

enum class AttackStrategy {
    MeanShift,            // replaced points at center + s*v; defeats the empirical mean
    LineCluster,          // points at +/- t*v with t ~ 1/sqrt(eps); inflates covariance along v
    RarePatternDeletion,  // resample rows conditioned on avoiding a rare all-zeros pattern
    TailReplacement,      // oblivious-style mixture (1-eps)P + eps*N1 realized by replacement
    HalfCube,             // random half-ones hypercube points; breaks the geometric median
};

inline const char* strategy_name(AttackStrategy s) {
    switch (s) {
        case AttackStrategy::MeanShift: return "MeanShift";
        case AttackStrategy::LineCluster: return "LineCluster";
        case AttackStrategy::RarePatternDeletion: return "RarePatternDeletion";
        case AttackStrategy::TailReplacement: return "TailReplacement";
        case AttackStrategy::HalfCube: return "HalfCube";
    }
    return "?";
}

inline AttackStrategy strategy_from_name(const std::string& name) {
    if (name == "MeanShift") return AttackStrategy::MeanShift;
    if (name == "LineCluster") return AttackStrategy::LineCluster;
    if (name == "RarePatternDeletion") return AttackStrategy::RarePatternDeletion;
    if (name == "TailReplacement") return AttackStrategy::TailReplacement;
    if (name == "HalfCube") return AttackStrategy::HalfCube;
    throw ParameterError("unknown adversary strategy: " + name);
}

/// Strategy parameters. `direction` defaults to a seeded unit vector when
/// empty; `scale` defaults per strategy (sqrt(d) for MeanShift, 1/sqrt(eps)
/// for LineCluster, pattern width ceil(log2(1/eps)) for RarePatternDeletion).
struct AdversarySpec {
    AdversaryKind kind = AdversaryKind::Full;
    AttackStrategy strategy = AttackStrategy::MeanShift;
    Vec direction;       // shift / line direction, normalized before use
    double scale = 0.0;  // 0 = strategy default
};

/// Ground truth about one corruption pass. delta is the paper's
/// Delta(S, S') = (|L| + |E|)/|S| = 2*m'/N for pure replacement.
struct CorruptionReport {
    long num_replaced = 0;
    std::vector<int> replaced_indices;
    double delta = 0.0;
};

namespace detail {

inline Vec default_direction(Eigen::Index d, Rng& rng) {
    Vec v(d);
    for (Eigen::Index i = 0; i < d; ++i) v[i] = rng.normal();
    double n = v.norm();
    if (n == 0.0) {
        v.setZero();
        v[0] = 1.0;
        return v;
    }
    return v / n;
}

inline CorruptionReport make_report(std::vector<int> replaced, Eigen::Index n) {
    CorruptionReport rep;
    std::sort(replaced.begin(), replaced.end());
    rep.num_replaced = static_cast<long>(replaced.size());
    rep.delta = 2.0 * static_cast<double>(rep.num_replaced) / static_cast<double>(n);
    rep.replaced_indices = std::move(replaced);
    return rep;
}

// The m' rows with smallest projection onto v (most opposed to the shift).
inline std::vector<int> most_opposed_rows(const Mat& data, const Vec& v, long count) {
    Vec proj = data * v;
    std::vector<int> idx(static_cast<size_t>(data.rows()));
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int a, int b) { return proj[a] < proj[b]; });
    idx.resize(static_cast<size_t>(std::min<long>(count, data.rows())));
    return idx;
}

inline std::vector<int> random_rows(Eigen::Index n, long count, Rng& rng) {
    std::vector<int> idx(static_cast<size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    // Fisher-Yates prefix shuffle.
    for (long i = 0; i < count && i < n; ++i) {
        auto j = i + static_cast<long>(rng.below(static_cast<std::uint64_t>(n - i)));
        std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
    }
    idx.resize(static_cast<size_t>(std::min<long>(count, n)));
    return idx;
}

inline bool matches_zero_pattern(const Mat& data, Eigen::Index row, int width) {
    for (int j = 0; j < width; ++j)
        if (data(row, j) >= 0.5) return false;
    return true;
}

}  // namespace detail

/// Full adversary: inspects the samples, draws m' ~ Binomial(N, eps), removes
/// m' rows of its choice and replaces them with arbitrary points. Unreplaced
/// rows are bit-identical to the input; the output mask marks replaced rows.
inline std::pair<SampleSet, CorruptionReport> corrupt_full(const SampleSet& samples, double eps,
                                                           const AdversarySpec& spec,
                                                           std::uint64_t seed) {
    require(eps >= 0.0, "epsilon must be nonnegative");
    require(eps < 0.5, "epsilon >= 1/2 loses identifiability");
    require(spec.kind == AdversaryKind::Full, "corrupt_full requires a Full adversary spec");
    const Eigen::Index n = samples.size();
    const Eigen::Index d = samples.dim();
    Rng rng(seed);

    Mat data = samples.data;
    std::vector<std::uint8_t> mask(static_cast<size_t>(n), 0);
    std::vector<int> replaced;

    if (eps > 0.0 && n > 0) {
        switch (spec.strategy) {
            case AttackStrategy::MeanShift: {
                long m = rng.binomial(n, eps);
                Vec v = spec.direction.size() == d ? spec.direction.normalized()
                                                   : detail::default_direction(d, rng);
                double s = spec.scale > 0.0 ? spec.scale : std::sqrt(static_cast<double>(d));
                Vec center = data.colwise().mean().transpose();
                replaced = detail::most_opposed_rows(data, v, m);
                Vec target = center + s * v;
                for (int i : replaced) data.row(i) = target.transpose();
                break;
            }
            case AttackStrategy::LineCluster: {
                long m = rng.binomial(n, eps);
                Vec v = spec.direction.size() == d ? spec.direction.normalized()
                                                   : detail::default_direction(d, rng);
                double t = spec.scale > 0.0 ? spec.scale : 1.0 / std::sqrt(eps);
                replaced = detail::random_rows(n, m, rng);
                std::sort(replaced.begin(), replaced.end());
                for (size_t k = 0; k < replaced.size(); ++k) {
                    double sign = (k % 2 == 0) ? 1.0 : -1.0;
                    data.row(replaced[k]) = (sign * t * v).transpose();
                }
                break;
            }
            case AttackStrategy::RarePatternDeletion: {
                // Scaled version of the all-zeros construction: the rare
                // pattern is all-zeros on the first k coordinates with
                // 2^-k <= eps. Every matching row is replaced by a resample
                // from the empirical distribution of non-matching rows.
                int k = spec.scale > 0.0
                            ? static_cast<int>(spec.scale)
                            : static_cast<int>(std::ceil(std::log2(1.0 / eps)));
                k = std::min<int>(k, static_cast<int>(d));
                std::vector<int> donors;
                for (Eigen::Index i = 0; i < n; ++i) {
                    if (detail::matches_zero_pattern(data, i, k))
                        replaced.push_back(static_cast<int>(i));
                    else
                        donors.push_back(static_cast<int>(i));
                }
                require(!donors.empty(), "rare-pattern attack needs at least one non-matching row");
                for (int i : replaced) {
                    int donor = donors[static_cast<size_t>(rng.below(donors.size()))];
                    data.row(i) = samples.data.row(donor);
                }
                break;
            }
            case AttackStrategy::TailReplacement: {
                long m = rng.binomial(n, eps);
                Vec v = spec.direction.size() == d ? spec.direction.normalized()
                                                   : detail::default_direction(d, rng);
                double s = spec.scale > 0.0 ? spec.scale : 3.0 * std::sqrt(static_cast<double>(d));
                replaced = detail::random_rows(n, m, rng);
                std::sort(replaced.begin(), replaced.end());
                for (int i : replaced) {
                    for (Eigen::Index j = 0; j < d; ++j) data(i, j) = s * v[j] + rng.normal();
                }
                break;
            }
            case AttackStrategy::HalfCube: {
                long m = rng.binomial(n, eps);
                replaced = detail::random_rows(n, m, rng);
                std::sort(replaced.begin(), replaced.end());
                std::vector<int> coords(static_cast<size_t>(d));
                for (int i : replaced) {
                    std::iota(coords.begin(), coords.end(), 0);
                    for (Eigen::Index j = 0; j < d / 2; ++j) {
                        auto pick = j + static_cast<Eigen::Index>(
                                            rng.below(static_cast<std::uint64_t>(d - j)));
                        std::swap(coords[static_cast<size_t>(j)], coords[static_cast<size_t>(pick)]);
                    }
                    data.row(i).setZero();
                    for (Eigen::Index j = 0; j < d / 2; ++j) data(i, coords[static_cast<size_t>(j)]) = 1.0;
                }
                break;
            }
        }
    }
    for (int i : replaced) mask[static_cast<size_t>(i)] = 1;
    CorruptionReport rep = detail::make_report(std::move(replaced), n);
    return {SampleSet(std::move(data), std::move(mask)), rep};
}

/// Oblivious adversary: n i.i.d. draws from (1-eps)*model + eps*noise; the
/// mask marks draws taken from the noise component.
inline std::pair<SampleSet, CorruptionReport> corrupt_oblivious(const Model& model,
                                                                const Model& noise, double eps,
                                                                long n, std::uint64_t seed) {
    require(eps >= 0.0 && eps < 0.5, "epsilon must lie in [0, 1/2)");
    require(model_dim(model) == model_dim(noise), "model/noise dimension mismatch");
    require(n >= 1, "need n >= 1 samples");
    Rng rng(seed);
    Rng model_rng = rng.substream(1);
    Rng noise_rng = rng.substream(2);
    const Eigen::Index d = model_dim(model);

    // Oversample both components deterministically, then interleave by the
    // Bernoulli(eps) coin so the draw count of each component is data-driven.
    Mat out(n, d);
    std::vector<std::uint8_t> mask(static_cast<size_t>(n), 0);
    std::vector<int> replaced;
    SampleSet clean = sample_model(model, n, model_rng.next_u64());
    SampleSet bad = sample_model(noise, n, noise_rng.next_u64());
    Eigen::Index ci = 0, bi = 0;
    for (long i = 0; i < n; ++i) {
        if (rng.bernoulli(eps)) {
            out.row(i) = bad.data.row(bi++);
            mask[static_cast<size_t>(i)] = 1;
            replaced.push_back(static_cast<int>(i));
        } else {
            out.row(i) = clean.data.row(ci++);
        }
    }
    CorruptionReport rep = detail::make_report(std::move(replaced), n);
    return {SampleSet(std::move(out), std::move(mask)), rep};
}

}  // namespace robustlearn

#endif
