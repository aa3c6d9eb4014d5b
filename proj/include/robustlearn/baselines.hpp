#ifndef ROBUSTLEARN_BASELINES_HPP
#define ROBUSTLEARN_BASELINES_HPP

#include <algorithm>
#include <cmath>
#include <vector>

#include "robustlearn/common.hpp"
#include "robustlearn/models.hpp"

namespace robustlearn {

inline Vec empirical_mean(const SampleSet& samples) {
    require(samples.size() >= 1, "empty sample set");
    return samples.data.colwise().mean().transpose();
}

/// Per-coordinate lower median.
inline Vec coordinate_median(const SampleSet& samples) {
    const Eigen::Index n = samples.size();
    require(n >= 1, "empty sample set");
    Vec out(samples.dim());
    std::vector<double> col(static_cast<size_t>(n));
    for (Eigen::Index j = 0; j < samples.dim(); ++j) {
        for (Eigen::Index i = 0; i < n; ++i) col[static_cast<size_t>(i)] = samples.data(i, j);
        const size_t k = (col.size() - 1) / 2;
        std::nth_element(col.begin(), col.begin() + static_cast<long>(k), col.end());
        out[j] = col[k];
    }
    return out;
}

/// Weiszfeld iteration for the geometric median (the minimizer of
/// sum_i ||x_i - v||), started at the coordinate median. When an iterate
/// coincides with a sample the singular term is dodged by a tiny
/// deterministic perturbation. Convergence is declared when the subgradient
/// norm drops below tol * scale.
inline Vec geometric_median(const SampleSet& samples, double tol = 1e-8, long max_iter = 10000,
                            bool* converged = nullptr) {
    const Eigen::Index n = samples.size();
    require(n >= 1, "empty sample set");
    if (converged) *converged = true;
    if (n == 1) return samples.data.row(0).transpose();

    Vec v = coordinate_median(samples);
    double scale = std::max(1.0, (samples.data.rowwise() - v.transpose()).rowwise().norm().mean());

    for (long it = 0; it < max_iter; ++it) {
        Vec num = Vec::Zero(samples.dim());
        double den = 0.0;
        Vec grad = Vec::Zero(samples.dim());
        bool collision = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            Vec diff = samples.data.row(i).transpose() - v;
            double dist = diff.norm();
            if (dist <= 1e-12 * scale) {
                collision = true;
                continue;
            }
            num += samples.data.row(i).transpose() / dist;
            den += 1.0 / dist;
            grad -= diff / dist;
        }
        if (collision && den == 0.0) return v;  // all points identical
        if (grad.norm() <= tol * scale * static_cast<double>(n)) return v;
        Vec next = num / den;
        if (collision) next.array() += 1e-9 * scale;
        if ((next - v).norm() <= 1e-15 * scale) return v;
        v = next;
    }
    if (converged) *converged = false;
    return v;
}

/// The objective the geometric median minimizes; exposed for tests.
inline double geometric_median_objective(const SampleSet& samples, const Vec& v) {
    return (samples.data.rowwise() - v.transpose()).rowwise().norm().sum();
}

}  // namespace robustlearn

#endif
