#ifndef ROBUSTLEARN_BENCH_HPP
#define ROBUSTLEARN_BENCH_HPP

#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <json.hpp>

#include "robustlearn/adversary.hpp"
#include "robustlearn/baselines.hpp"
#include "robustlearn/common.hpp"
#include "robustlearn/convex_mean.hpp"
#include "robustlearn/distances.hpp"
#include "robustlearn/gaussian_filters.hpp"
#include "robustlearn/mixture_filters.hpp"
#include "robustlearn/models.hpp"
#include "robustlearn/product_filters.hpp"
#include "robustlearn/rng.hpp"

namespace robustlearn {

// ---------------------------------------------------------------------------
// Experiment configuration (JSON-backed; unknown fields are rejected).
// ---------------------------------------------------------------------------

/// Dimension-parameterized family of true models.
struct ModelSpec {
    std::string kind = "standard_gaussian";
    std::uint64_t model_seed = 0;
    double lo = 0.05, hi = 0.95;        // random_product coordinate range
    double cond = 4.0;                  // random_gaussian condition number
    double mean_scale = 1.0;            // random_gaussian mean magnitude
    double alpha = 0.5;                 // product_mixture weight
    double separation = 0.4;            // product_mixture per-coordinate gap
    double base = 0.5;                  // product_mixture center

    Model instantiate(Eigen::Index d) const {
        Rng rng(detail::mix64(model_seed ^ static_cast<std::uint64_t>(d)));
        if (kind == "standard_gaussian") return GaussianModel::standard(d);
        if (kind == "random_gaussian") {
            Vec mu(d);
            for (Eigen::Index i = 0; i < d; ++i) mu[i] = rng.normal();
            mu *= mean_scale / std::sqrt(static_cast<double>(d));
            // random rotation of a log-uniform spectrum in [1/cond, 1]
            Mat a(d, d);
            for (Eigen::Index i = 0; i < d; ++i)
                for (Eigen::Index j = 0; j < d; ++j) a(i, j) = rng.normal();
            Eigen::HouseholderQR<Mat> qr(a);
            Mat q = qr.householderQ();
            Vec lam(d);
            for (Eigen::Index i = 0; i < d; ++i)
                lam[i] = std::exp(-std::log(cond) * rng.uniform());
            return GaussianModel(mu, (q * lam.asDiagonal() * q.transpose()).eval());
        }
        if (kind == "uniform_product") return BinaryProductModel(Vec::Constant(d, 0.5));
        if (kind == "random_product") {
            Vec p(d);
            for (Eigen::Index i = 0; i < d; ++i) p[i] = lo + (hi - lo) * rng.uniform();
            return BinaryProductModel(p);
        }
        if (kind == "product_mixture") {
            Vec p = Vec::Constant(d, base), q = Vec::Constant(d, base);
            for (Eigen::Index i = 0; i < d / 2; ++i) {
                p[i] = base + separation / 2.0;
                q[i] = base - separation / 2.0;
            }
            return ProductMixtureModel(alpha, BinaryProductModel(p), BinaryProductModel(q));
        }
        throw ParameterError("unknown model kind: " + kind);
    }
};

/// Sample count as a function of d and eps: either an explicit list parallel
/// to dims, or N = ceil(multiplier * d / eps^2).
struct SampleRule {
    std::vector<long> explicit_values;  // empty => use multiplier
    double multiplier = 10.0;

    long resolve(size_t dim_index, Eigen::Index d, double eps) const {
        if (!explicit_values.empty()) {
            require(dim_index < explicit_values.size(), "n_rule list shorter than dims");
            return explicit_values[dim_index];
        }
        return static_cast<long>(std::ceil(multiplier * static_cast<double>(d) / (eps * eps)));
    }
};

struct AdversaryConfig {
    AdversaryKind kind = AdversaryKind::Full;
    AttackStrategy strategy = AttackStrategy::MeanShift;
    double scale = 0.0;
    std::optional<ModelSpec> noise;  // oblivious adversaries mix this in
};

struct ExperimentConfig {
    ModelSpec model;
    std::vector<int> dims;
    SampleRule n_rule;
    std::vector<double> epsilons;
    AdversaryConfig adversary;
    std::vector<std::string> estimators;
    long trials = 1;
    std::uint64_t seed = 0;
    FilterConfig filter;
    bool record_wall_time = false;

    void validate() const {
        require(!dims.empty() && !epsilons.empty() && !estimators.empty(),
                "dims, epsilons and estimators must be nonempty");
        require(trials >= 1, "trials must be >= 1");
    }
};

struct TrialResult {
    int d = 0;
    long n = 0;
    double epsilon = 0.0;
    std::string adversary;
    std::string estimator;
    long trial = 0;
    std::optional<double> l2_mean_error;
    std::optional<double> cov_frobenius_error;
    std::optional<double> tv_upper;
    long iterations = 0;
    long removed_corrupt = 0;
    long removed_clean = 0;
    bool converged = true;
    bool violated_assumption = false;
    double wall_time_ms = 0.0;
};

// ---------------------------------------------------------------------------
// JSON parsing with fail-fast unknown-field rejection.
// ---------------------------------------------------------------------------

namespace detail {

inline void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                       const std::string& where) {
    require(j.is_object(), where + " must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it)
        require(allowed.count(it.key()) > 0, "unknown field '" + it.key() + "' in " + where);
}

inline ModelSpec parse_model(const nlohmann::json& j, const std::string& where) {
    check_keys(j, {"kind", "model_seed", "lo", "hi", "cond", "mean_scale", "alpha", "separation",
                   "base"},
               where);
    ModelSpec m;
    m.kind = j.at("kind").get<std::string>();
    if (j.contains("model_seed")) m.model_seed = j["model_seed"].get<std::uint64_t>();
    if (j.contains("lo")) m.lo = j["lo"].get<double>();
    if (j.contains("hi")) m.hi = j["hi"].get<double>();
    if (j.contains("cond")) m.cond = j["cond"].get<double>();
    if (j.contains("mean_scale")) m.mean_scale = j["mean_scale"].get<double>();
    if (j.contains("alpha")) m.alpha = j["alpha"].get<double>();
    if (j.contains("separation")) m.separation = j["separation"].get<double>();
    if (j.contains("base")) m.base = j["base"].get<double>();
    return m;
}

inline FilterConfig parse_filter(const nlohmann::json& j, FilterConfig base) {
    check_keys(j, {"tau", "c_spectral", "c_prune", "c_quadratic", "cov_t_min",
                   "c_balanced_accept", "c_general_accept", "max_iterations", "eig_tol", "cov_eig_tol",
                   "eig_floor", "prune_exact_limit", "c_balanced", "anchor_lambda_threshold",
                   "c_anchor_delta", "c_close", "candidate_cap", "census_budget", "census_seed",
                   "tournament_mc"},
               "filter");
    if (j.contains("tau")) base.tau = j["tau"].get<double>();
    if (j.contains("c_spectral")) base.c_spectral = j["c_spectral"].get<double>();
    if (j.contains("c_prune")) base.c_prune = j["c_prune"].get<double>();
    if (j.contains("c_quadratic")) base.c_quadratic = j["c_quadratic"].get<double>();
    if (j.contains("cov_t_min")) base.cov_t_min = j["cov_t_min"].get<double>();
    if (j.contains("c_balanced_accept")) base.c_balanced_accept = j["c_balanced_accept"].get<double>();
    if (j.contains("c_general_accept")) base.c_general_accept = j["c_general_accept"].get<double>();
    if (j.contains("max_iterations")) base.max_iterations = j["max_iterations"].get<long>();
    if (j.contains("eig_tol")) base.eig_tol = j["eig_tol"].get<double>();
    if (j.contains("cov_eig_tol")) base.cov_eig_tol = j["cov_eig_tol"].get<double>();
    if (j.contains("eig_floor")) base.eig_floor = j["eig_floor"].get<double>();
    if (j.contains("prune_exact_limit")) base.prune_exact_limit = j["prune_exact_limit"].get<long>();
    if (j.contains("c_balanced")) base.c_balanced = j["c_balanced"].get<double>();
    if (j.contains("anchor_lambda_threshold"))
        base.anchor_lambda_threshold = j["anchor_lambda_threshold"].get<double>();
    if (j.contains("c_anchor_delta")) base.c_anchor_delta = j["c_anchor_delta"].get<double>();
    if (j.contains("c_close")) base.c_close = j["c_close"].get<double>();
    if (j.contains("candidate_cap")) base.candidate_cap = j["candidate_cap"].get<long>();
    if (j.contains("census_budget")) base.census_budget = j["census_budget"].get<long>();
    if (j.contains("census_seed")) base.census_seed = j["census_seed"].get<std::uint64_t>();
    if (j.contains("tournament_mc")) base.tournament_mc = j["tournament_mc"].get<long>();
    return base;
}

}  // namespace detail

inline ExperimentConfig parse_experiment_config(const nlohmann::json& j) {
    detail::check_keys(j, {"model", "dims", "n_rule", "epsilons", "adversary", "estimators",
                           "trials", "seed", "filter", "record_wall_time"},
                       "config");
    ExperimentConfig cfg;
    cfg.model = detail::parse_model(j.at("model"), "model");
    cfg.dims = j.at("dims").get<std::vector<int>>();
    {
        const auto& nr = j.at("n_rule");
        detail::check_keys(nr, {"values", "multiplier"}, "n_rule");
        if (nr.contains("values")) cfg.n_rule.explicit_values = nr["values"].get<std::vector<long>>();
        if (nr.contains("multiplier")) cfg.n_rule.multiplier = nr["multiplier"].get<double>();
    }
    cfg.epsilons = j.at("epsilons").get<std::vector<double>>();
    {
        const auto& adv = j.at("adversary");
        detail::check_keys(adv, {"kind", "strategy", "scale", "noise"}, "adversary");
        std::string kind = adv.at("kind").get<std::string>();
        if (kind == "Full")
            cfg.adversary.kind = AdversaryKind::Full;
        else if (kind == "Oblivious")
            cfg.adversary.kind = AdversaryKind::Oblivious;
        else
            throw ParameterError("adversary kind must be Full or Oblivious");
        cfg.adversary.strategy = strategy_from_name(adv.at("strategy").get<std::string>());
        if (adv.contains("scale")) cfg.adversary.scale = adv["scale"].get<double>();
        if (adv.contains("noise")) cfg.adversary.noise = detail::parse_model(adv["noise"], "noise");
        if (cfg.adversary.kind == AdversaryKind::Oblivious)
            require(cfg.adversary.noise.has_value(), "oblivious adversary needs a noise model");
    }
    cfg.estimators = j.at("estimators").get<std::vector<std::string>>();
    cfg.trials = j.at("trials").get<long>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("filter")) cfg.filter = detail::parse_filter(j["filter"], cfg.filter);
    if (j.contains("record_wall_time")) cfg.record_wall_time = j["record_wall_time"].get<bool>();
    cfg.validate();
    return cfg;
}

// ---------------------------------------------------------------------------
// Estimator registry and trial execution.
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& estimator_names() {
    static const std::vector<std::string> names = {
        "empirical_mean",        "coordinate_median",      "geometric_median",
        "filter_gaussian_mean",  "convex_mean",            "empirical_cov",
        "filter_gaussian_cov",   "filter_gaussian",        "filter_balanced_product",
        "filter_general_product", "product_mixture",
    };
    return names;
}

namespace detail {

/// Per-trial seed derivation, documented for reproducibility: chained mix64
/// over (base seed, d, N, bit pattern of eps, adversary strategy name,
/// trial). The estimator is deliberately excluded so paired estimators see
/// identical data.
inline std::uint64_t derive_trial_seed(std::uint64_t base, int d, long n, double eps,
                                       const std::string& adversary, long trial) {
    std::uint64_t h = mix64(base);
    h = mix64(h ^ mix64(static_cast<std::uint64_t>(d)));
    h = mix64(h ^ mix64(static_cast<std::uint64_t>(n)));
    std::uint64_t eps_bits;
    static_assert(sizeof(eps_bits) == sizeof(eps));
    std::memcpy(&eps_bits, &eps, sizeof(eps_bits));
    h = mix64(h ^ mix64(eps_bits));
    for (char c : adversary) h = mix64(h ^ static_cast<std::uint64_t>(static_cast<unsigned char>(c)));
    h = mix64(h ^ mix64(static_cast<std::uint64_t>(trial)));
    return h;
}

inline void count_removed(const EstimationLog& log, const std::vector<std::uint8_t>& mask,
                          long& corrupt, long& clean) {
    for (const StepRecord& s : log.steps)
        for (int r : s.removed_original_rows) {
            if (mask[static_cast<size_t>(r)])
                ++corrupt;
            else
                ++clean;
        }
}

// learn_gaussian's covariance stage runs on differenced pairs (i, half+i);
// a pair row is corrupt when either parent is.
inline void count_removed_pairs(const EstimationLog& log, const std::vector<std::uint8_t>& mask,
                                Eigen::Index half, long& corrupt, long& clean) {
    for (const StepRecord& s : log.steps)
        for (int r : s.removed_original_rows) {
            bool bad = mask[static_cast<size_t>(r)] || mask[static_cast<size_t>(r + half)];
            if (bad)
                ++corrupt;
            else
                ++clean;
        }
}

inline double whitened_frobenius(const Mat& estimate, const Mat& truth) {
    Mat w = sym_inv_sqrt(truth);
    Mat m = w * estimate * w;
    return (m - Mat::Identity(m.rows(), m.cols())).norm();
}

}  // namespace detail

/// One (d, N, eps, adversary, estimator, trial) cell: sample, corrupt,
/// estimate, score. Estimator failures are captured in the flags, not thrown.
inline TrialResult run_trial(const ExperimentConfig& cfg, size_t dim_index, double eps,
                             const std::string& estimator, long trial) {
    const int d = cfg.dims[dim_index];
    const long n = cfg.n_rule.resolve(dim_index, d, eps);
    TrialResult res;
    res.d = d;
    res.n = n;
    res.epsilon = eps;
    res.adversary = strategy_name(cfg.adversary.strategy);
    res.estimator = estimator;
    res.trial = trial;

    const std::uint64_t tseed =
        detail::derive_trial_seed(cfg.seed, d, n, eps, res.adversary, trial);
    Rng seeder(tseed);
    const std::uint64_t sample_seed = seeder.substream(1).next_u64();
    const std::uint64_t corrupt_seed = seeder.substream(2).next_u64();

    Model truth = cfg.model.instantiate(d);

    SampleSet corrupted;
    std::vector<std::uint8_t> mask;
    if (cfg.adversary.kind == AdversaryKind::Full) {
        SampleSet clean = sample_model(truth, n, sample_seed);
        AdversarySpec spec;
        spec.kind = AdversaryKind::Full;
        spec.strategy = cfg.adversary.strategy;
        spec.scale = cfg.adversary.scale;
        auto [c, rep] = eps > 0.0 ? corrupt_full(clean, eps, spec, corrupt_seed)
                                  : std::make_pair(clean, CorruptionReport{});
        corrupted = std::move(c);
        if (corrupted.corruption_mask) mask = *corrupted.corruption_mask;
    } else {
        Model noise = cfg.adversary.noise->instantiate(d);
        auto [c, rep] = corrupt_oblivious(truth, noise, eps, n, corrupt_seed);
        corrupted = std::move(c);
        if (corrupted.corruption_mask) mask = *corrupted.corruption_mask;
    }
    if (mask.empty()) mask.assign(static_cast<size_t>(n), 0);

    // Estimators see the data only; the mask stays on the harness side.
    SampleSet data(corrupted.data);

    FilterConfig fcfg = cfg.filter;
    fcfg.epsilon = std::max(eps, 1e-4);  // eps = 0 trials still need a valid config

    const auto t0 = std::chrono::steady_clock::now();
    try {
        if (estimator == "empirical_mean" || estimator == "coordinate_median" ||
            estimator == "geometric_median") {
            Vec est;
            if (estimator == "empirical_mean")
                est = empirical_mean(data);
            else if (estimator == "coordinate_median")
                est = coordinate_median(data);
            else {
                bool conv = true;
                est = geometric_median(data, 1e-8, 10000, &conv);
                res.converged = conv;
            }
            const Vec mu = std::get<GaussianModel>(truth).mean;
            res.l2_mean_error = (est - mu).norm();
            res.tv_upper = tv_upper_gaussian_means(est, mu);
        } else if (estimator == "filter_gaussian_mean") {
            EstimationLog log;
            GaussianModel est = learn_gaussian_mean(data, fcfg, &log);
            const Vec mu = std::get<GaussianModel>(truth).mean;
            res.l2_mean_error = (est.mean - mu).norm();
            res.tv_upper = tv_upper_gaussian_means(est.mean, mu);
            res.iterations = log.iterations;
            res.converged = log.converged;
            detail::count_removed(log, mask, res.removed_corrupt, res.removed_clean);
        } else if (estimator == "convex_mean") {
            EstimationLog log;
            GaussianModel est = learn_mean_convex(data, fcfg.epsilon, fcfg.tau, fcfg, &log);
            const Vec mu = std::get<GaussianModel>(truth).mean;
            res.l2_mean_error = (est.mean - mu).norm();
            res.tv_upper = tv_upper_gaussian_means(est.mean, mu);
            res.iterations = log.iterations;
            res.converged = log.converged;
            detail::count_removed(log, mask, res.removed_corrupt, res.removed_clean);
        } else if (estimator == "empirical_cov") {
            Mat second = (data.data.transpose() * data.data) / static_cast<double>(n);
            const Mat& sigma = std::get<GaussianModel>(truth).covariance;
            res.cov_frobenius_error = detail::whitened_frobenius(second, sigma);
            res.tv_upper = tv_upper_gaussian_cov(second, sigma, 1.0);
        } else if (estimator == "filter_gaussian_cov") {
            EstimationLog log;
            GaussianModel est = learn_gaussian_cov(data, fcfg, &log);
            const Mat& sigma = std::get<GaussianModel>(truth).covariance;
            res.cov_frobenius_error = detail::whitened_frobenius(est.covariance, sigma);
            res.tv_upper = tv_upper_gaussian_cov(est.covariance, sigma, 1.0);
            res.iterations = log.iterations;
            res.converged = log.converged;
            detail::count_removed(log, mask, res.removed_corrupt, res.removed_clean);
        } else if (estimator == "filter_gaussian") {
            ArbitraryGaussianLog log;
            GaussianModel est = learn_gaussian(data, fcfg, &log);
            const auto& g = std::get<GaussianModel>(truth);
            Mat w = sym_inv_sqrt(g.covariance);
            res.l2_mean_error = (est.mean - g.mean).norm();
            res.cov_frobenius_error = detail::whitened_frobenius(est.covariance, g.covariance);
            res.tv_upper = std::min(1.0, tv_upper_gaussian_cov(est.covariance, g.covariance, 1.0) +
                                             tv_upper_gaussian_means(w * est.mean, w * g.mean));
            res.iterations = log.cov_stage.iterations + log.mean_stage.iterations;
            res.converged = log.cov_stage.converged && log.mean_stage.converged;
            detail::count_removed_pairs(log.cov_stage, mask, log.pair_count, res.removed_corrupt,
                                        res.removed_clean);
            detail::count_removed(log.mean_stage, mask, res.removed_corrupt, res.removed_clean);
        } else if (estimator == "filter_balanced_product" ||
                   estimator == "filter_general_product") {
            EstimationLog log;
            BinaryProductModel est = estimator == "filter_balanced_product"
                                         ? learn_balanced_product(data, fcfg, &log)
                                         : learn_general_product(data, fcfg, &log);
            const Vec p = std::get<BinaryProductModel>(truth).mean;
            res.l2_mean_error = (est.mean - p).norm();
            res.tv_upper = tv_bound_products(est.mean, p);
            res.iterations = log.iterations;
            res.converged = log.converged;
            detail::count_removed(log, mask, res.removed_corrupt, res.removed_clean);
        } else if (estimator == "product_mixture") {
            MixtureLog log;
            ProductMixtureModel est = learn_product_mixture(data, fcfg, &log);
            if (d <= 14) res.tv_upper = tv_exact_small(est, truth, d);
            for (const auto& st : log.anchor_stages)
                detail::count_removed(st, mask, res.removed_corrupt, res.removed_clean);
            detail::count_removed(log.balanced_stage, mask, res.removed_corrupt, res.removed_clean);
            detail::count_removed(log.close_stage, mask, res.removed_corrupt, res.removed_clean);
        } else {
            throw ParameterError("unknown estimator: " + estimator);
        }
    } catch (const ViolatedAssumptionError&) {
        res.violated_assumption = true;
        res.converged = false;
    } catch (const NonConvergenceError&) {
        res.converged = false;
    }
    const auto t1 = std::chrono::steady_clock::now();
    if (cfg.record_wall_time)
        res.wall_time_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    return res;
}

// ---------------------------------------------------------------------------
// Sweep execution and CSV emission.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

inline std::string format_optional(const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
}

}  // namespace detail

inline void write_result_header(std::ostream& os) {
    os << "d,N,epsilon,adversary,estimator,trial,l2_mean_error,cov_frobenius_error,tv_upper,"
          "iterations,removed_corrupt,removed_clean,converged,violated_assumption,wall_time_ms\n";
}

inline void write_result_row(std::ostream& os, const TrialResult& r) {
    os << r.d << ',' << r.n << ',' << detail::format_double(r.epsilon) << ',' << r.adversary << ','
       << r.estimator << ',' << r.trial << ',' << detail::format_optional(r.l2_mean_error) << ','
       << detail::format_optional(r.cov_frobenius_error) << ','
       << detail::format_optional(r.tv_upper) << ',' << r.iterations << ',' << r.removed_corrupt
       << ',' << r.removed_clean << ',' << (r.converged ? 1 : 0) << ','
       << (r.violated_assumption ? 1 : 0) << ',' << detail::format_double(r.wall_time_ms) << '\n';
}

inline int worker_count() {
    if (const char* env = std::getenv("BENCH_WORKERS")) {
        int k = std::atoi(env);
        if (k >= 1) return k;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Cartesian product of the config axes, executed on a worker pool but
/// emitted in deterministic order.
inline std::vector<TrialResult> run_sweep(const ExperimentConfig& cfg) {
    cfg.validate();
    for (const std::string& e : cfg.estimators) {
        bool known = false;
        for (const std::string& k : estimator_names()) known = known || (k == e);
        require(known, "unknown estimator in config: " + e);
    }

    struct Cell {
        size_t dim_index;
        double eps;
        std::string estimator;
        long trial;
    };
    std::vector<Cell> cells;
    for (size_t di = 0; di < cfg.dims.size(); ++di)
        for (double eps : cfg.epsilons)
            for (const std::string& est : cfg.estimators)
                for (long t = 0; t < cfg.trials; ++t) cells.push_back({di, eps, est, t});

    std::vector<TrialResult> results(cells.size());
    std::atomic<size_t> next{0};
    auto work = [&]() {
        for (;;) {
            size_t i = next.fetch_add(1);
            if (i >= cells.size()) return;
            const Cell& c = cells[i];
            results[i] = run_trial(cfg, c.dim_index, c.eps, c.estimator, c.trial);
        }
    };
    int workers = std::min<int>(worker_count(), static_cast<int>(cells.size()));
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < workers; ++i) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    return results;
}

inline void run_sweep_csv(const ExperimentConfig& cfg, std::ostream& os) {
    std::vector<TrialResult> results = run_sweep(cfg);
    write_result_header(os);
    for (const TrialResult& r : results) write_result_row(os, r);
}

}  // namespace robustlearn

#endif
