#ifndef ROBUSTLEARN_SPECTRAL_HPP
#define ROBUSTLEARN_SPECTRAL_HPP

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "robustlearn/common.hpp"
#include "robustlearn/models.hpp"

namespace robustlearn {

/// Sample weights constrained to S_{N,eps}: nonnegative, summing to one, each
/// coordinate at most 1/((1-2*eps)*N) -- the continuous relaxation of picking
/// (1-2*eps)*N of the N samples.
struct WeightVector {
    Vec weights;
    double epsilon = 0.0;

    WeightVector() = default;
    WeightVector(Vec w, double eps) : weights(std::move(w)), epsilon(eps) {
        require(eps >= 0.0 && eps < 0.5, "epsilon must lie in [0, 1/2)");
        const double n = static_cast<double>(weights.size());
        require(n >= 1.0, "weight vector must be nonempty");
        const double cap = 1.0 / ((1.0 - 2.0 * eps) * n);
        for (Eigen::Index i = 0; i < weights.size(); ++i) {
            require(weights[i] >= 0.0, "weights must be nonnegative");
            require(weights[i] <= cap * (1.0 + 1e-12), "weight exceeds the S_{N,eps} box bound");
        }
        require(std::abs(weights.sum() - 1.0) <= 1e-12, "weights must sum to 1");
    }

    static WeightVector uniform(Eigen::Index n, double eps) {
        return WeightVector(Vec::Constant(n, 1.0 / static_cast<double>(n)), eps);
    }

    double box_bound() const {
        return 1.0 / ((1.0 - 2.0 * epsilon) * static_cast<double>(weights.size()));
    }
};

inline Vec weighted_mean(const SampleSet& samples, const WeightVector& w) {
    require(w.weights.size() == samples.size(), "weights/sample length mismatch");
    return samples.data.transpose() * w.weights;
}

/// sum_i w_i (x_i - center)(x_i - center)^T, exactly symmetric by construction.
inline Mat weighted_covariance(const SampleSet& samples, const WeightVector& w, const Vec& center) {
    require(w.weights.size() == samples.size(), "weights/sample length mismatch");
    require(center.size() == samples.dim(), "center dimension mismatch");
    Mat centered = samples.data.rowwise() - center.transpose();
    Mat m = centered.transpose() * w.weights.asDiagonal() * centered;
    return ((m + m.transpose()) * 0.5).eval();
}

inline Mat zero_diagonal(const Mat& m) {
    Mat out = m;
    out.diagonal().setZero();
    return out;
}

namespace detail {

// Power iteration for the most-positive eigenvalue of the symmetric operator
// `apply`, pre-shifted so its spectrum is nonnegative. Deterministic start.
// The returned eigenvalue is the Rayleigh quotient of the returned vector.
// Tightly clustered spectra stall the vector iteration with a small residual;
// a stagnation check accepts the cluster value in that case, which is exact
// enough for every caller (any vector in the cluster's span certifies the
// spectral norm to within the residual).
template <typename Apply>
std::pair<double, Vec> power_iteration(Apply&& apply, Eigen::Index n, double shift, double tol,
                                       int max_iter) {
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = 1.0 + 0.25 * std::cos(static_cast<double>(i + 1));
    v.normalize();
    double lam = 0.0, resid = 0.0, last_check = std::numeric_limits<double>::infinity();
    for (int it = 0; it < max_iter; ++it) {
        Vec mv = apply(v) + shift * v;
        double norm = mv.norm();
        if (norm == 0.0) return {-shift, v};  // v is in the kernel of the shifted operator
        lam = v.dot(mv);
        resid = (mv - lam * v).norm();
        const double scale = std::max(1.0, std::abs(lam - shift));
        if (resid <= tol * scale) return {lam - shift, v};
        if (it % 128 == 127) {
            if (resid <= 1e-5 * scale && resid > 0.9 * last_check) return {lam - shift, v};
            last_check = resid;
        }
        v = mv / norm;
    }
    if (resid <= std::max(100.0 * tol, 1e-5) * std::max(1.0, std::abs(lam - shift)))
        return {lam - shift, v};
    throw NonConvergenceError("power iteration did not converge", resid);
}

inline void fix_sign(Vec& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (v[i] != 0.0) {
            if (v[i] < 0.0) v = -v;
            return;
        }
    }
}

}  // namespace detail

/// Largest-magnitude eigenpair of a symmetric matrix via power iteration on M
/// shifted by +/-(||M||_1 + 1), which yields the most-positive and
/// most-negative eigenvalues separately; the larger magnitude wins (ties
/// resolve to the positive side). Sign convention: first nonzero coordinate of
/// v is positive.
inline std::pair<double, Vec> top_eigenpair_abs(const Mat& m, double tol = 1e-9) {
    require(m.rows() == m.cols(), "matrix must be square");
    const int cap = 10000;
    double shift = m.cwiseAbs().colwise().sum().maxCoeff() + 1.0;
    auto apply_pos = [&](const Vec& v) -> Vec { return m * v; };
    auto apply_neg = [&](const Vec& v) -> Vec { return -(m * v); };
    auto [lmax, vmax] = detail::power_iteration(apply_pos, m.rows(), shift, tol, cap);
    auto [lminneg, vmin] = detail::power_iteration(apply_neg, m.rows(), shift, tol, cap);
    double lmin = -lminneg;
    Vec v;
    double lam;
    if (std::abs(lmax) >= std::abs(lmin)) {
        lam = lmax;
        v = vmax;
    } else {
        lam = lmin;
        v = vmin;
    }
    detail::fix_sign(v);
    return {lam, v};
}

/// Unit v maximizing v^T M v subject to v·u = 0 (not largest magnitude; the
/// most-positive eigenvalue on the orthogonal complement of u).
inline std::pair<double, Vec> top_eigenpair_constrained(const Mat& m, const Vec& u,
                                                        double tol = 1e-9) {
    require(m.rows() == m.cols() && u.size() == m.rows(), "dimension mismatch");
    require(u.norm() > 0.0, "constraint vector must be nonzero");
    Vec uh = u.normalized();
    double shift = m.cwiseAbs().colwise().sum().maxCoeff() + 1.0;
    auto project = [&](const Vec& v) -> Vec { return v - uh * uh.dot(v); };
    auto apply = [&](const Vec& v) -> Vec { return project(m * project(v)); };
    auto [lam, v] = detail::power_iteration(apply, m.rows(), shift, tol, 10000);
    v = project(v);
    double n = v.norm();
    require(n > 0.0, "constrained eigenvector collapsed onto the constraint");
    v /= n;
    detail::fix_sign(v);
    return {lam, v};
}

/// All eigenpairs with |lambda| > thresh, up to max_count, extracted by
/// repeated top-|lambda| power iteration with explicit deflation.
inline std::vector<std::pair<double, Vec>> eigenpairs_above(const Mat& m, double thresh,
                                                            int max_count, double tol = 1e-9) {
    require(m.rows() == m.cols(), "matrix must be square");
    std::vector<std::pair<double, Vec>> out;
    Mat work = m;
    for (int k = 0; k < max_count; ++k) {
        auto [lam, v] = top_eigenpair_abs(work, tol);
        if (std::abs(lam) <= thresh) break;
        out.emplace_back(lam, v);
        work -= lam * v * v.transpose();
    }
    return out;
}

namespace detail {

inline Eigen::SelfAdjointEigenSolver<Mat> sym_eigs(const Mat& sigma) {
    require(sigma.rows() == sigma.cols(), "matrix must be square");
    Eigen::SelfAdjointEigenSolver<Mat> es(sigma);
    require(es.info() == Eigen::Success, "eigendecomposition failed");
    return es;
}

}  // namespace detail

/// U diag(max(lam_i, floor*lam_max))^{-1/2} U^T. The relative eigenvalue
/// floor keeps whitening from amplifying numerical noise directions.
inline Mat sym_inv_sqrt(const Mat& sigma, double floor = 1e-12) {
    auto es = detail::sym_eigs(sigma);
    Vec lam = es.eigenvalues();
    double lmax = lam.maxCoeff();
    if (lmax <= 0.0) throw NumericError("sym_inv_sqrt of a non-positive matrix", lmax);
    for (Eigen::Index i = 0; i < lam.size(); ++i)
        lam[i] = 1.0 / std::sqrt(std::max(lam[i], floor * lmax));
    Mat out = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
    return ((out + out.transpose()) * 0.5).eval();
}

/// Symmetric PSD square root with the same eigenvalue flooring at zero.
inline Mat sym_sqrt(const Mat& sigma) {
    auto es = detail::sym_eigs(sigma);
    Vec lam = es.eigenvalues();
    for (Eigen::Index i = 0; i < lam.size(); ++i) lam[i] = std::sqrt(std::max(lam[i], 0.0));
    Mat out = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
    return ((out + out.transpose()) * 0.5).eval();
}

// ---------------------------------------------------------------------------
// Canonical flattening between d x d matrices and length-d^2 vectors.
// Row-major: the fourth-moment tests are representation-sensitive.
// ---------------------------------------------------------------------------

inline Vec flatten(const Mat& m) {
    require(m.rows() == m.cols(), "flatten expects a square matrix");
    const Eigen::Index d = m.rows();
    Vec v(d * d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) v[i * d + j] = m(i, j);
    return v;
}

inline Mat unflatten(const Vec& v) {
    const auto dd = v.size();
    const auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(dd))));
    require(d * d == dd, "unflatten needs a square length");
    Mat m(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) m(i, j) = v[i * d + j];
    return m;
}

/// E[(X kron X)(X kron X)^T] for X ~ N(0, Sigma) as an operator on symmetric
/// flattenings: 2*(Sigma kron Sigma) + flatten(Sigma) flatten(Sigma)^T.
inline Mat gaussian_fourth_operator(const Mat& sigma) {
    require(sigma.rows() == sigma.cols(), "covariance must be square");
    const Eigen::Index d = sigma.rows();
    Mat out(d * d, d * d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j)
            out.block(i * d, j * d, d, d) = 2.0 * sigma(i, j) * sigma;
    Vec f = flatten(sigma);
    out += f * f.transpose();
    return out;
}

/// T_{S'} = flat(I) flat(I)^T + (1/N) sum_i z_i z_i^T with z_i = (frame x_i)^{kron 2}.
inline Mat empirical_fourth_operator(const SampleSet& samples, const Mat& frame) {
    require(samples.size() >= 1, "need at least one sample");
    require(frame.rows() == frame.cols() && frame.rows() == samples.dim(), "frame dimension mismatch");
    const Eigen::Index d = samples.dim();
    const Eigen::Index n = samples.size();
    Mat y = samples.data * frame.transpose();
    Mat z(n, d * d);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index a = 0; a < d; ++a)
            for (Eigen::Index b = 0; b < d; ++b) z(i, a * d + b) = y(i, a) * y(i, b);
    }
    Mat out = (z.transpose() * z) / static_cast<double>(n);
    Vec f = flatten(Mat::Identity(d, d));
    out += f * f.transpose();
    return ((out + out.transpose()) * 0.5).eval();
}

/// Even degree-2 polynomial p(x) = (frame x)^T quad (frame x) + offset.
struct EvenQuadratic {
    Mat quad;     // symmetric P2
    double offset = 0.0;
    Mat frame;    // typically Sigma'^{-1/2}

    EvenQuadratic() = default;
    EvenQuadratic(Mat p2, double p0, Mat fr)
        : quad(std::move(p2)), offset(p0), frame(std::move(fr)) {
        require(quad.rows() == quad.cols(), "quadratic part must be square");
        double scale = std::max(1.0, quad.cwiseAbs().maxCoeff());
        require((quad - quad.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * scale,
                "quadratic part must be symmetric");
    }
};

inline double eval_even_quadratic(const EvenQuadratic& p, const Vec& x) {
    Vec y = p.frame * x;
    return y.dot(p.quad * y) + p.offset;
}

}  // namespace robustlearn

#endif
