#ifndef ROBUSTLEARN_MODELS_HPP
#define ROBUSTLEARN_MODELS_HPP

#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "robustlearn/common.hpp"
#include "robustlearn/rng.hpp"

namespace robustlearn {

/// Gaussian N(mean, covariance). The covariance must be symmetric
/// (1e-12 relative tolerance) with nonnegative eigenvalues; PSD-but-singular
/// covariances are allowed and sample on their support.
struct GaussianModel {
    Vec mean;
    Mat covariance;

    GaussianModel() = default;
    GaussianModel(Vec mu, Mat sigma) : mean(std::move(mu)), covariance(std::move(sigma)) {
        require(covariance.rows() == covariance.cols(), "covariance must be square");
        require(covariance.rows() == mean.size(), "mean/covariance dimension mismatch");
        double scale = std::max(1.0, covariance.cwiseAbs().maxCoeff());
        double asym = (covariance - covariance.transpose()).cwiseAbs().maxCoeff();
        require(asym <= 1e-12 * scale, "covariance is not symmetric");
    }

    Eigen::Index dim() const { return mean.size(); }

    static GaussianModel standard(Eigen::Index d) {
        return GaussianModel(Vec::Zero(d), Mat::Identity(d, d));
    }
};

/// Binary product distribution over {0,1}^d, determined by its mean vector.
struct BinaryProductModel {
    Vec mean;

    BinaryProductModel() = default;
    explicit BinaryProductModel(Vec p) : mean(std::move(p)) {
        for (Eigen::Index i = 0; i < mean.size(); ++i)
            require(mean[i] >= 0.0 && mean[i] <= 1.0, "product mean outside [0,1]");
    }

    Eigen::Index dim() const { return mean.size(); }

    /// All coordinate means in [c, 1-c].
    bool is_balanced(double c) const {
        for (Eigen::Index i = 0; i < mean.size(); ++i)
            if (mean[i] < c || mean[i] > 1.0 - c) return false;
        return true;
    }
};

/// Two-component mixture alpha*P + (1-alpha)*Q of binary products.
struct ProductMixtureModel {
    double weight = 0.5;
    BinaryProductModel component_p;
    BinaryProductModel component_q;

    ProductMixtureModel() = default;
    ProductMixtureModel(double alpha, BinaryProductModel p, BinaryProductModel q)
        : weight(alpha), component_p(std::move(p)), component_q(std::move(q)) {
        require(weight >= 0.0 && weight <= 1.0, "mixing weight outside [0,1]");
        require(component_p.dim() == component_q.dim(), "mixture components differ in dimension");
    }

    Eigen::Index dim() const { return component_p.dim(); }
};

using Model = std::variant<GaussianModel, BinaryProductModel, ProductMixtureModel>;

inline Eigen::Index model_dim(const Model& m) {
    return std::visit([](const auto& v) { return v.dim(); }, m);
}

/// N x d observation matrix. The corruption mask records which rows an
/// adversary replaced; it exists for diagnostics only and estimators never
/// read it.
struct SampleSet {
    Mat data;
    std::optional<std::vector<std::uint8_t>> corruption_mask;

    SampleSet() = default;
    explicit SampleSet(Mat rows) : data(std::move(rows)) { check(); }
    SampleSet(Mat rows, std::vector<std::uint8_t> mask)
        : data(std::move(rows)), corruption_mask(std::move(mask)) {
        check();
    }

    Eigen::Index size() const { return data.rows(); }
    Eigen::Index dim() const { return data.cols(); }

    void check() const {
        require(data.allFinite(), "sample rows must all be finite");
        if (corruption_mask)
            require(static_cast<Eigen::Index>(corruption_mask->size()) == data.rows(),
                    "corruption mask length must equal N");
    }

    /// Subset of rows, mask carried along.
    SampleSet rows(const std::vector<int>& idx) const {
        Mat out(static_cast<Eigen::Index>(idx.size()), data.cols());
        for (size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = data.row(idx[i]);
        if (!corruption_mask) return SampleSet(std::move(out));
        std::vector<std::uint8_t> mask(idx.size());
        for (size_t i = 0; i < idx.size(); ++i) mask[i] = (*corruption_mask)[static_cast<size_t>(idx[i])];
        return SampleSet(std::move(out), std::move(mask));
    }
};

namespace detail {

// Symmetric eigendecomposition square root, so PSD-but-singular covariances
// sample on their support.
inline Mat psd_sqrt_for_sampling(const Mat& sigma) {
    Eigen::SelfAdjointEigenSolver<Mat> es(sigma);
    require(es.info() == Eigen::Success, "eigendecomposition failed");
    Vec lam = es.eigenvalues();
    double lmax = std::max(0.0, lam.maxCoeff());
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
        if (lam[i] < -1e-10 * std::max(1.0, lmax))
            throw ParameterError("covariance is not positive semidefinite (eigenvalue " +
                                 std::to_string(lam[i]) + ")");
        lam[i] = std::sqrt(std::max(0.0, lam[i]));
    }
    return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace detail

/// n i.i.d. rows from the model; deterministic for a fixed seed.
inline SampleSet sample_model(const Model& model, long n, std::uint64_t seed) {
    require(n >= 1, "need n >= 1 samples");
    Rng rng(seed);
    const Eigen::Index d = model_dim(model);
    Mat out(n, d);
    if (const auto* g = std::get_if<GaussianModel>(&model)) {
        Mat root = detail::psd_sqrt_for_sampling(g->covariance);
        Vec z(d);
        for (long i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < d; ++j) z[j] = rng.normal();
            out.row(i) = (g->mean + root * z).transpose();
        }
    } else if (const auto* p = std::get_if<BinaryProductModel>(&model)) {
        for (long i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < d; ++j) out(i, j) = rng.bernoulli(p->mean[j]) ? 1.0 : 0.0;
    } else {
        const auto& mix = std::get<ProductMixtureModel>(model);
        for (long i = 0; i < n; ++i) {
            const BinaryProductModel& comp =
                rng.bernoulli(mix.weight) ? mix.component_p : mix.component_q;
            for (Eigen::Index j = 0; j < d; ++j) out(i, j) = rng.bernoulli(comp.mean[j]) ? 1.0 : 0.0;
        }
    }
    return SampleSet(std::move(out));
}

namespace detail {

inline double log_density_gaussian(const GaussianModel& g, const Vec& x) {
    require(x.size() == g.dim(), "point dimension mismatch");
    Eigen::SelfAdjointEigenSolver<Mat> es(g.covariance);
    require(es.info() == Eigen::Success, "eigendecomposition failed");
    const Vec& lam = es.eigenvalues();
    double lmax = lam.maxCoeff();
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
        if (lam[i] <= 1e-300 || lam[i] <= 1e-15 * std::max(1.0, lmax))
            throw NumericError("singular covariance in log_density", lam[i]);
        logdet += std::log(lam[i]);
    }
    Vec y = es.eigenvectors().transpose() * (x - g.mean);
    double quad = (y.array().square() / lam.array()).sum();
    constexpr double log2pi = 1.8378770664093454835606594728112;
    return -0.5 * (static_cast<double>(g.dim()) * log2pi + logdet + quad);
}

inline double log_mass_product(const BinaryProductModel& p, const Vec& x) {
    require(x.size() == p.dim(), "point dimension mismatch");
    double acc = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        double pi = p.mean[i];
        if (x[i] >= 0.5) {
            if (pi <= 0.0) return -std::numeric_limits<double>::infinity();
            acc += std::log(pi);
        } else {
            if (pi >= 1.0) return -std::numeric_limits<double>::infinity();
            acc += std::log1p(-pi);
        }
    }
    return acc;
}

}  // namespace detail

/// Natural log of the density (Gaussian) or mass (products/mixtures) at x.
/// The Gaussian uses the standard (2*pi)^{-d/2} |Sigma|^{-1/2} normalization.
inline double log_density(const Model& model, const Vec& x) {
    if (const auto* g = std::get_if<GaussianModel>(&model))
        return detail::log_density_gaussian(*g, x);
    if (const auto* p = std::get_if<BinaryProductModel>(&model))
        return detail::log_mass_product(*p, x);
    const auto& mix = std::get<ProductMixtureModel>(model);
    double la = detail::log_mass_product(mix.component_p, x);
    double lb = detail::log_mass_product(mix.component_q, x);
    double wa = mix.weight, wb = 1.0 - mix.weight;
    if (wa <= 0.0) return lb;
    if (wb <= 0.0) return la;
    double m = std::max(la, lb);
    if (m == -std::numeric_limits<double>::infinity()) return m;
    return m + std::log(wa * std::exp(la - m) + wb * std::exp(lb - m));
}

namespace detail {

inline double round_to_multiple(double x, double step) {
    return std::nearbyint(x / step) * step;
}

inline Vec round_mean_to_grid(const Vec& p, double step) {
    Vec out = p;
    for (Eigen::Index i = 0; i < out.size(); ++i)
        out[i] = std::min(1.0, std::max(0.0, round_to_multiple(out[i], step)));
    return out;
}

}  // namespace detail

/// Round product means to multiples of eps/d (clamped to [0,1]) and mixture
/// weights to multiples of eps. Gaussians pass through unchanged; their
/// tournaments use the candidate set as-is.
inline Model round_model_to_grid(const Model& model, double eps, Eigen::Index d) {
    require(eps > 0.0 && eps < 0.5, "grid epsilon must lie in (0, 1/2)");
    require(d >= 1, "dimension must be positive");
    const double step = eps / static_cast<double>(d);
    if (const auto* p = std::get_if<BinaryProductModel>(&model))
        return BinaryProductModel(detail::round_mean_to_grid(p->mean, step));
    if (const auto* mix = std::get_if<ProductMixtureModel>(&model)) {
        double alpha = std::min(1.0, std::max(0.0, detail::round_to_multiple(mix->weight, eps)));
        return ProductMixtureModel(alpha,
                                   BinaryProductModel(detail::round_mean_to_grid(mix->component_p.mean, step)),
                                   BinaryProductModel(detail::round_mean_to_grid(mix->component_q.mean, step)));
    }
    return model;
}

// ---------------------------------------------------------------------------
// SampleSet CSV format: header "x0,...,x{d-1}[,corrupted]"; the corrupted
// column is 0/1 and optional.
// ---------------------------------------------------------------------------

inline void write_csv(const SampleSet& s, std::ostream& os) {
    os.precision(17);
    for (Eigen::Index j = 0; j < s.dim(); ++j) {
        if (j) os << ',';
        os << 'x' << j;
    }
    if (s.corruption_mask) os << ",corrupted";
    os << '\n';
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        for (Eigen::Index j = 0; j < s.dim(); ++j) {
            if (j) os << ',';
            os << s.data(i, j);
        }
        if (s.corruption_mask) os << ',' << int((*s.corruption_mask)[static_cast<size_t>(i)]);
        os << '\n';
    }
}

inline SampleSet read_csv(std::istream& is) {
    std::string line;
    require(static_cast<bool>(std::getline(is, line)), "empty CSV");
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) header.push_back(tok);
    }
    bool has_mask = !header.empty() && header.back() == "corrupted";
    Eigen::Index d = static_cast<Eigen::Index>(header.size()) - (has_mask ? 1 : 0);
    require(d >= 1, "CSV has no data columns");
    for (Eigen::Index j = 0; j < d; ++j)
        require(header[static_cast<size_t>(j)] == "x" + std::to_string(j), "unexpected CSV header column");

    std::vector<double> vals;
    std::vector<std::uint8_t> mask;
    Eigen::Index n = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        for (Eigen::Index j = 0; j < d; ++j) {
            require(static_cast<bool>(std::getline(ss, tok, ',')), "short CSV row");
            vals.push_back(std::stod(tok));
        }
        if (has_mask) {
            require(static_cast<bool>(std::getline(ss, tok, ',')), "missing corrupted flag");
            mask.push_back(tok == "1" ? 1 : 0);
        }
        ++n;
    }
    Mat data(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j) data(i, j) = vals[static_cast<size_t>(i * d + j)];
    if (has_mask) return SampleSet(std::move(data), std::move(mask));
    return SampleSet(std::move(data));
}

}  // namespace robustlearn

#endif
