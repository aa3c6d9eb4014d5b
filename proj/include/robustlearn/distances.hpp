#ifndef ROBUSTLEARN_DISTANCES_HPP
#define ROBUSTLEARN_DISTANCES_HPP

#include <cmath>
#include <variant>
#include <vector>

#include "robustlearn/common.hpp"
#include "robustlearn/models.hpp"
#include "robustlearn/spectral.hpp"

namespace robustlearn {

/// KL(a || b) between Gaussians:
/// (tr(S2^-1 S1) + (m2-m1)^T S2^-1 (m2-m1) - d - ln det(S1)/det(S2)) / 2.
inline double kl_gaussian(const GaussianModel& a, const GaussianModel& b) {
    require(a.dim() == b.dim(), "dimension mismatch");
    Eigen::SelfAdjointEigenSolver<Mat> es2(b.covariance);
    require(es2.info() == Eigen::Success, "eigendecomposition failed");
    const Vec& l2 = es2.eigenvalues();
    double lmax = l2.maxCoeff();
    for (Eigen::Index i = 0; i < l2.size(); ++i)
        if (l2[i] <= 1e-300 || l2[i] <= 1e-15 * std::max(1.0, lmax))
            throw NumericError("kl_gaussian: singular second covariance", l2[i]);

    Mat s2inv = es2.eigenvectors() * l2.cwiseInverse().asDiagonal() * es2.eigenvectors().transpose();
    double logdet2 = l2.array().log().sum();

    Eigen::SelfAdjointEigenSolver<Mat> es1(a.covariance);
    require(es1.info() == Eigen::Success, "eigendecomposition failed");
    const Vec& l1 = es1.eigenvalues();
    for (Eigen::Index i = 0; i < l1.size(); ++i)
        if (l1[i] <= 0.0) throw NumericError("kl_gaussian: singular first covariance", l1[i]);
    double logdet1 = l1.array().log().sum();

    Vec dm = b.mean - a.mean;
    double val = 0.5 * ((s2inv * a.covariance).trace() + dm.dot(s2inv * dm) -
                        static_cast<double>(a.dim()) - (logdet1 - logdet2));
    return val;
}

/// TV upper bound for identity-covariance Gaussians: min(1, ||m2 - m1||/2).
inline double tv_upper_gaussian_means(const Vec& mu1, const Vec& mu2) {
    require(mu1.size() == mu2.size(), "dimension mismatch");
    return std::min(1.0, 0.5 * (mu2 - mu1).norm());
}

/// TV upper bound for mean-zero Gaussians: min(1, k * ||I - S2^-1/2 S1 S2^-1/2||_F).
inline double tv_upper_gaussian_cov(const Mat& sigma1, const Mat& sigma2, double k) {
    require(sigma1.rows() == sigma2.rows(), "dimension mismatch");
    Mat w = sym_inv_sqrt(sigma2);
    Mat m = w * sigma1 * w;
    double delta = (Mat::Identity(m.rows(), m.cols()) - m).norm();
    return std::min(1.0, k * delta);
}

/// TV upper bound for binary products via the symmetric chi^2 form:
/// min(1, sqrt(2 sum (p_i-q_i)^2 / ((p_i+q_i)(2-p_i-q_i)))). Terms with a
/// vanishing denominator also have a vanishing numerator and contribute 0.
inline double tv_bound_products(const Vec& p, const Vec& q) {
    require(p.size() == q.size(), "dimension mismatch");
    double acc = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        double num = (p[i] - q[i]) * (p[i] - q[i]);
        if (num == 0.0) continue;
        double den = (p[i] + q[i]) * (2.0 - p[i] - q[i]);
        acc += num / den;
    }
    return std::min(1.0, std::sqrt(2.0 * acc));
}

inline bool is_discrete_model(const Model& m) {
    return !std::holds_alternative<GaussianModel>(m);
}

/// Probability mass table over {0,1}^d in row-major bit order
/// (x index = sum_j x_j 2^{d-1-j}); d <= 14.
inline std::vector<double> mass_table(const Model& m, int d) {
    require(d >= 1 && d <= 14, "mass tables support d <= 14 only");
    require(is_discrete_model(m), "mass tables are for discrete models");
    require(model_dim(m) == d, "dimension mismatch");
    auto table_for = [&](const Vec& mean) {
        std::vector<double> t(static_cast<size_t>(1) << d, 1.0);
        for (size_t x = 0; x < t.size(); ++x)
            for (int j = 0; j < d; ++j) {
                bool one = (x >> (d - 1 - j)) & 1u;
                t[x] *= one ? mean[j] : 1.0 - mean[j];
            }
        return t;
    };
    if (const auto* p = std::get_if<BinaryProductModel>(&m)) return table_for(p->mean);
    const auto& mix = std::get<ProductMixtureModel>(m);
    std::vector<double> a = table_for(mix.component_p.mean);
    std::vector<double> b = table_for(mix.component_q.mean);
    for (size_t x = 0; x < a.size(); ++x) a[x] = mix.weight * a[x] + (1.0 - mix.weight) * b[x];
    return a;
}

/// Exact total variation distance between two discrete models over {0,1}^d
/// by full enumeration, d <= 14.
inline double tv_exact_small(const Model& a, const Model& b, int d) {
    std::vector<double> pa = mass_table(a, d);
    std::vector<double> pb = mass_table(b, d);
    double acc = 0.0;
    for (size_t x = 0; x < pa.size(); ++x) acc += std::abs(pa[x] - pb[x]);
    return 0.5 * acc;
}

}  // namespace robustlearn

#endif
