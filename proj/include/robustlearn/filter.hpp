#ifndef ROBUSTLEARN_FILTER_HPP
#define ROBUSTLEARN_FILTER_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "robustlearn/common.hpp"
#include "robustlearn/models.hpp"

namespace robustlearn {

/// Knobs shared by every filter. The pseudocode's O(.) constants become named
/// fields; defaults were calibrated once on clean data and then frozen.
struct FilterConfig {
    double epsilon = 0.1;   // corruption fraction the filter defends against
    double tau = 0.1;       // failure probability budget in the thresholds

    double c_spectral = 4.0;    // mean-filter accept: ||Sigma - I||_2 <= c*eps*ln(1/eps)
    double c_prune = 10.0;      // naive-prune / Mahalanobis outlier gate constant
    double c_quadratic = 3.0;   // covariance accept: Q_{S'}(p*) <= 1 + c*eps*ln^2(1/eps)
    double cov_t_min = 2.0;     // floor for the covariance tail threshold T
    double c_balanced_accept = 9.0;  // balanced product accept: ||M||_2 <= c*eps*ln(1/eps)
    double c_general_accept = 9.0;   // general product accept: ||DMD||_2 <= c*ln(1/eps)

    long max_iterations = 0;    // 0 = per-algorithm default cap
    double eig_tol = 1e-9;
    double cov_eig_tol = 2e-3;  // fourth-moment eigensolve; its matvec costs O(N d^2)
    double eig_floor = 1e-12;   // relative eigenvalue floor for inverse square roots
    long prune_exact_limit = 8192;  // exact O(N^2) pruning below this N, census above

    // Mixture-specific knobs.
    double c_balanced = 0.25;          // balancedness parameter c for grids
    double anchor_lambda_threshold = 5.0;
    double c_anchor_delta = 2.0;
    double c_close = 10.0;             // close filter eigenvalue gate C*delta^2
    long candidate_cap = 50000;
    long census_budget = 2000;
    std::uint64_t census_seed = 0;

    // Tournament knobs.
    long tournament_mc = 20000;

    void validate() const {
        require(epsilon > 0.0 && epsilon < 0.5, "epsilon must lie in (0, 1/2)");
        require(tau > 0.0 && tau < 1.0, "tau must lie in (0, 1)");
        require(c_spectral > 0.0 && c_prune > 0.0 && c_quadratic > 0.0, "constants must be positive");
        require(c_balanced > 0.0 && c_balanced < 0.5, "balance parameter must lie in (0, 1/2)");
    }
};

struct FilterDiagnostics {
    double lambda_star = 0.0;
    Vec direction;
    double delta = 0.0;
    double threshold = 0.0;  // the accepted T, or the accept threshold on the accept branch
    long removed = 0;
};

/// One filter step either certifies an estimate, returns a strictly smaller
/// sample set, or emits a candidate list (mixture filters).
struct FilterOutcome {
    enum class Kind { Estimate, Reduced, Candidates };

    Kind kind = Kind::Estimate;
    Model estimate;                 // Kind::Estimate
    SampleSet reduced;              // Kind::Reduced
    std::vector<int> kept_rows;     // row indices of `reduced` within the step input
    std::vector<Model> candidates;  // Kind::Candidates
    bool candidates_truncated = false;
    FilterDiagnostics diagnostics;
};

/// Per-step record kept by the iterate drivers, with row ids mapped back to
/// the original input so the harness can join against a corruption mask.
struct StepRecord {
    double lambda_star = 0.0;
    double delta = 0.0;
    double threshold = 0.0;
    long removed = 0;
    std::vector<int> removed_original_rows;
};

struct EstimationLog {
    long iterations = 0;
    bool converged = true;
    std::vector<StepRecord> steps;
};

/// The shared "find T > 0 such that ..." step of every filter.
///
/// Returns the smallest scanned T >= t_min whose strict tail fraction
/// #{m_i > T + shift}/N exceeds bound_fn(T). The scan visits every jump point
/// T = m_i - shift plus t_min, refined by a uniform grid so that crossings of
/// a continuously decreasing bound inside a constant-tail interval are found
/// too. bound_fn need not be monotone. Absence is a value, not an error.
inline std::optional<double> tail_threshold_search(const std::vector<double>& magnitudes,
                                                   double shift,
                                                   const std::function<double(double)>& bound_fn,
                                                   double t_min = 0.0) {
    const auto n = static_cast<double>(magnitudes.size());
    if (magnitudes.empty()) return std::nullopt;

    std::vector<double> cands;
    cands.reserve(magnitudes.size() + 512 + 1);
    cands.push_back(t_min);
    double hi = t_min;
    for (double m : magnitudes) {
        double t = m - shift;
        if (t >= t_min) cands.push_back(t);
        hi = std::max(hi, t);
    }
    if (hi > t_min) {
        const double step = (hi - t_min) / 512.0;
        for (int k = 1; k < 512; ++k) cands.push_back(t_min + k * step);
    }
    std::sort(cands.begin(), cands.end());
    cands.erase(std::unique(cands.begin(), cands.end()), cands.end());

    for (double t : cands) {
        // magnitudes are sorted ascending: strict tail count by binary search
        auto it = std::upper_bound(magnitudes.begin(), magnitudes.end(), t + shift);
        double frac = static_cast<double>(magnitudes.end() - it) / n;
        if (frac > bound_fn(t)) return t;
    }
    return std::nullopt;
}

}  // namespace robustlearn

#endif
