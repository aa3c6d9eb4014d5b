#ifndef ROBUSTLEARN_TOURNAMENT_HPP
#define ROBUSTLEARN_TOURNAMENT_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "robustlearn/common.hpp"
#include "robustlearn/distances.hpp"
#include "robustlearn/models.hpp"
#include "robustlearn/rng.hpp"

namespace robustlearn {

struct TournamentResult {
    Model winner;
    int winner_index = -1;
    bool all_eliminated = false;  // minimax fallback was used
};

namespace detail {

// Pairwise match state. For pools of discrete models with d <= 14 every
// quantity is exact: candidates carry mass tables and the samples collapse to
// a histogram over {0,1}^d (rows that are not 0/1 vectors are kept aside and
// scored per row). Otherwise Pr_Q(A_PQ) is estimated by Monte Carlo draws.
struct TournamentContext {
    const std::vector<Model>& pool;
    const SampleSet& samples;
    bool exact = false;
    int d = 0;
    std::vector<std::vector<double>> tables;   // per candidate, exact mode
    std::vector<double> histogram;             // sample histogram, exact mode
    std::vector<int> loose_rows;               // non-binary rows, exact mode
    std::vector<Vec> mc_draws_cache;           // per candidate Q, lazy, mc mode
    long mc = 0;
    std::uint64_t seed = 0;

    TournamentContext(const std::vector<Model>& p, const SampleSet& s, long mc_count,
                      std::uint64_t sd)
        : pool(p), samples(s), mc(mc_count), seed(sd) {
        int dim = static_cast<int>(samples.dim());
        bool all_discrete = true;
        for (const Model& m : pool) all_discrete = all_discrete && is_discrete_model(m);
        if (all_discrete && dim <= 14) {
            exact = true;
            d = dim;
            tables.reserve(pool.size());
            for (const Model& m : pool) tables.push_back(mass_table(m, d));
            histogram.assign(static_cast<size_t>(1) << d, 0.0);
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
                if (binary)
                    histogram[idx] += 1.0;
                else
                    loose_rows.push_back(static_cast<int>(i));
            }
        }
    }

    // Pr_{x in samples}(x in A_PQ) and Pr_{x ~ Q}(A_PQ) for the ordered pair
    // (P, Q). Ties in density are resolved as "not in A_PQ".
    std::pair<double, double> match(int pi, int qi) {
        const double n = static_cast<double>(samples.size());
        if (exact) {
            const auto& tp = tables[static_cast<size_t>(pi)];
            const auto& tq = tables[static_cast<size_t>(qi)];
            double emp = 0.0, under_q = 0.0;
            for (size_t x = 0; x < tp.size(); ++x) {
                if (tp[x] > tq[x]) {
                    emp += histogram[x];
                    under_q += tq[x];
                }
            }
            for (int r : loose_rows) {
                Vec x = samples.data.row(r).transpose();
                if (log_density(pool[static_cast<size_t>(pi)], x) >
                    log_density(pool[static_cast<size_t>(qi)], x))
                    emp += 1.0;
            }
            return {emp / n, under_q};
        }
        double emp = 0.0;
        for (Eigen::Index i = 0; i < samples.size(); ++i) {
            Vec x = samples.data.row(i).transpose();
            if (log_density(pool[static_cast<size_t>(pi)], x) >
                log_density(pool[static_cast<size_t>(qi)], x))
                emp += 1.0;
        }
        // Monte-Carlo estimate of Pr_Q(A_PQ) with a per-pair derived seed.
        Rng rng(seed);
        std::uint64_t pair_id = static_cast<std::uint64_t>(pi) * pool.size() +
                                static_cast<std::uint64_t>(qi);
        SampleSet draws = sample_model(pool[static_cast<size_t>(qi)], mc,
                                       rng.substream(pair_id).next_u64());
        double under_q = 0.0;
        for (Eigen::Index i = 0; i < draws.size(); ++i) {
            Vec x = draws.data.row(i).transpose();
            if (log_density(pool[static_cast<size_t>(pi)], x) >
                log_density(pool[static_cast<size_t>(qi)], x))
                under_q += 1.0;
        }
        return {emp / n, under_q / static_cast<double>(mc)};
    }
};

}  // namespace detail

/// Hypothesis-selection tournament. A candidate Q is eliminated when some P
/// wins the ordered match by the margin theta = delta_hat + eps, i.e.
/// Pr_{x in samples}(x in A_PQ) >= Pr_{x~Q}(A_PQ) + theta, where
/// A_PQ = {x : P(x) > Q(x)}. The lowest-index survivor wins. If every
/// candidate is eliminated, the one with the smallest worst margin is
/// returned and flagged. delta_hat is the caller's stage accuracy.
inline TournamentResult tournament(const std::vector<Model>& candidates, const SampleSet& samples,
                                   double epsilon, double delta_hat, long mc, std::uint64_t seed) {
    require(!candidates.empty(), "tournament needs a nonempty candidate pool");
    require(samples.size() >= 1, "tournament needs samples");
    const double theta = delta_hat + epsilon;
    const int m = static_cast<int>(candidates.size());

    detail::TournamentContext ctx(candidates, samples, mc, seed);

    // Lazy scan: try candidates in index order; the first one no opponent
    // beats is the winner.
    for (int q = 0; q < m; ++q) {
        bool beaten = false;
        for (int p = 0; p < m && !beaten; ++p) {
            if (p == q) continue;
            auto [emp, under_q] = ctx.match(p, q);
            if (emp >= under_q + theta) beaten = true;
        }
        if (!beaten) {
            TournamentResult res;
            res.winner = candidates[static_cast<size_t>(q)];
            res.winner_index = q;
            return res;
        }
    }

    // Everyone was eliminated: return the minimax-margin candidate.
    double best = std::numeric_limits<double>::infinity();
    int best_idx = 0;
    for (int q = 0; q < m; ++q) {
        double worst = -std::numeric_limits<double>::infinity();
        for (int p = 0; p < m; ++p) {
            if (p == q) continue;
            auto [emp, under_q] = ctx.match(p, q);
            worst = std::max(worst, emp - under_q);
        }
        if (worst < best) {
            best = worst;
            best_idx = q;
        }
    }
    TournamentResult res;
    res.winner = candidates[static_cast<size_t>(best_idx)];
    res.winner_index = best_idx;
    res.all_eliminated = true;
    return res;
}

}  // namespace robustlearn

#endif
