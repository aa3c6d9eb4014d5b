#ifndef ROBUSTLEARN_ACCEPTANCE_HPP
#define ROBUSTLEARN_ACCEPTANCE_HPP

// Acceptance suite for the benchmark tool: every scaling and property claim
// the library is expected to reproduce at desk scale, one pass/fail line
// each. `bench selftest` runs exactly this; the ctest acceptance binary
// asserts on the same results.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <mutex>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "robustlearn/adversary.hpp"
#include "robustlearn/baselines.hpp"
#include "robustlearn/bench.hpp"
#include "robustlearn/convex_mean.hpp"
#include "robustlearn/distances.hpp"
#include "robustlearn/gaussian_filters.hpp"
#include "robustlearn/mixture_filters.hpp"
#include "robustlearn/models.hpp"
#include "robustlearn/product_filters.hpp"
#include "robustlearn/rng.hpp"
#include "robustlearn/tournament.hpp"

namespace robustlearn::acceptance {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool passed = false;
    std::string detail;
};

namespace detail {

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline void parallel_for(long count, const std::function<void(long)>& body) {
    unsigned hw = std::thread::hardware_concurrency();
    long workers = std::min<long>(count, hw == 0 ? 1 : static_cast<long>(hw));
    if (workers <= 1) {
        for (long i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<long> next{0};
    auto run = [&]() {
        for (;;) {
            long i = next.fetch_add(1);
            if (i >= count) return;
            body(i);
        }
    };
    std::vector<std::thread> pool;
    for (long w = 0; w < workers; ++w) pool.emplace_back(run);
    for (auto& t : pool) t.join();
}

// (removed_corrupt, removed_clean) per Reduced step, pooled across benchmarks
// for the filter-progress criterion.
struct StepCensus {
    std::vector<std::pair<long, long>> steps;

    void add(const EstimationLog& log, const std::vector<std::uint8_t>& mask) {
        for (const StepRecord& s : log.steps) {
            if (s.threshold < 0.0) continue;  // pruning pass, not a filter step
            long corrupt = 0, clean = 0;
            for (int r : s.removed_original_rows)
                (mask[static_cast<size_t>(r)] ? corrupt : clean)++;
            steps.emplace_back(corrupt, clean);
        }
    }
};

inline std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

}  // namespace detail

struct SuiteState {
    detail::StepCensus census;
    std::mutex census_mu;
};

// --------------------------------------------------------------------------
// Criterion 1 (and census input for criterion 2): dimension-independent mean
// error under MeanShift, versus the empirical mean's sqrt(d) growth.
// --------------------------------------------------------------------------
inline CriterionResult criterion_dimension_independence(SuiteState& state) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<int> dims = {16, 64, 256};
    const double eps = 0.1;
    const int seeds = 10;

    std::vector<double> filter_median(dims.size()), empirical_median(dims.size());
    for (size_t di = 0; di < dims.size(); ++di) {
        const int d = dims[di];
        const long n = static_cast<long>(10.0 * d / (eps * eps));
        std::vector<double> ferr(seeds), eerr(seeds);
        detail::parallel_for(seeds, [&](long s) {
            Rng root(0xACC1 + 1000 * static_cast<std::uint64_t>(d) + static_cast<std::uint64_t>(s));
            Model truth = GaussianModel::standard(d);
            SampleSet clean = sample_model(truth, n, root.substream(1).next_u64());
            AdversarySpec spec;
            spec.strategy = AttackStrategy::MeanShift;
            spec.scale = std::sqrt(static_cast<double>(d));
            auto [corrupted, rep] = corrupt_full(clean, eps, spec, root.substream(2).next_u64());
            SampleSet data(corrupted.data);

            FilterConfig cfg;
            cfg.epsilon = eps;
            EstimationLog log;
            GaussianModel est = learn_gaussian_mean(data, cfg, &log);
            ferr[static_cast<size_t>(s)] = est.mean.norm();
            eerr[static_cast<size_t>(s)] = empirical_mean(data).norm();
            {
                std::lock_guard<std::mutex> lk(state.census_mu);
                state.census.add(log, *corrupted.corruption_mask);
            }
        });
        filter_median[di] = detail::median(ferr);
        empirical_median[di] = detail::median(eerr);
    }
    const double fr = filter_median[2] / filter_median[0];
    const double er = empirical_median[2] / empirical_median[0];
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    CriterionResult r;
    r.id = 1;
    r.name = "dimension-independent mean error";
    r.passed = fr <= 2.0 && er >= 3.0 && secs <= 600.0;
    r.detail = "filter median err d16/d64/d256 = " + detail::fmt(filter_median[0]) + "/" +
               detail::fmt(filter_median[1]) + "/" + detail::fmt(filter_median[2]) +
               " (ratio " + detail::fmt(fr) + " <= 2), empirical ratio " + detail::fmt(er) +
               " >= 3, " + detail::fmt(secs) + "s <= 600s";
    return r;
}

// --------------------------------------------------------------------------
// Criterion 3: clean-data soundness at eps = 0.02, d = 64.
// --------------------------------------------------------------------------
inline CriterionResult criterion_clean_soundness() {
    const int d = 64;
    const double eps = 0.02;
    const int seeds = 20;
    const long n_mean = 20000;
    const long n_cov = 120000;

    std::atomic<int> mean_ok{0}, cov_ok{0}, prod_ok{0}, prune_zero{0};
    detail::parallel_for(seeds, [&](long s) {
        Rng root(0xACC3 + static_cast<std::uint64_t>(s));
        FilterConfig cfg;
        cfg.epsilon = eps;

        // mean
        {
            Model truth = GaussianModel::standard(d);
            SampleSet data = sample_model(truth, n_mean, root.substream(1).next_u64());
            if (static_cast<long>(naive_prune_indices(data, cfg).size()) == n_mean) ++prune_zero;
            GaussianModel est = learn_gaussian_mean(data, cfg);
            double fe = est.mean.norm();
            double ee = empirical_mean(data).norm();
            if (fe <= 2.0 * ee + 1e-12) ++mean_ok;
        }
        // covariance
        {
            Model truth = GaussianModel::standard(d);
            SampleSet data = sample_model(truth, n_cov, root.substream(2).next_u64());
            GaussianModel est = learn_gaussian_cov(data, cfg);
            Mat emp = (data.data.transpose() * data.data) / static_cast<double>(n_cov);
            double fe = (est.covariance - Mat::Identity(d, d)).norm();
            double ee = (emp - Mat::Identity(d, d)).norm();
            if (fe <= 2.0 * ee + 1e-12) ++cov_ok;
        }
        // balanced product
        {
            Model truth = BinaryProductModel(Vec::Constant(d, 0.5));
            SampleSet data = sample_model(truth, n_mean, root.substream(3).next_u64());
            BinaryProductModel est = learn_balanced_product(data, cfg);
            Vec p = Vec::Constant(d, 0.5);
            double fe = (est.mean - p).norm();
            double ee = (empirical_mean(data) - p).norm();
            if (fe <= 2.0 * ee + 1e-12) ++prod_ok;
        }
    });

    CriterionResult r;
    r.id = 3;
    r.name = "clean-data soundness";
    const int need = static_cast<int>(std::ceil(0.9 * seeds));
    r.passed = mean_ok >= need && cov_ok >= need && prod_ok >= need && prune_zero == seeds;
    r.detail = "within-2x seeds: mean " + std::to_string(mean_ok.load()) + "/20, cov " +
               std::to_string(cov_ok.load()) + "/20, product " + std::to_string(prod_ok.load()) +
               "/20 (need >= 18); prune removed zero rows in " +
               std::to_string(prune_zero.load()) + "/20";
    return r;
}

// --------------------------------------------------------------------------
// Criterion 4: covariance under LineCluster.
// --------------------------------------------------------------------------
inline CriterionResult criterion_covariance(SuiteState& state) {
    const int d = 16;
    const double eps = 0.05;
    const long n = 100000;
    const int seeds = 10;

    std::vector<double> ferr(seeds), eerr(seeds);
    detail::parallel_for(seeds, [&](long s) {
        Rng root(0xACC4 + static_cast<std::uint64_t>(s));
        Model truth = GaussianModel::standard(d);
        SampleSet clean = sample_model(truth, n, root.substream(1).next_u64());
        AdversarySpec spec;
        spec.strategy = AttackStrategy::LineCluster;
        spec.scale = 1.0 / std::sqrt(eps);
        auto [corrupted, rep] = corrupt_full(clean, eps, spec, root.substream(2).next_u64());
        SampleSet data(corrupted.data);

        FilterConfig cfg;
        cfg.epsilon = eps;
        EstimationLog log;
        GaussianModel est = learn_gaussian_cov(data, cfg, &log);
        ferr[static_cast<size_t>(s)] = (est.covariance - Mat::Identity(d, d)).norm();
        Mat emp = (data.data.transpose() * data.data) / static_cast<double>(n);
        eerr[static_cast<size_t>(s)] = (emp - Mat::Identity(d, d)).norm();
        {
            std::lock_guard<std::mutex> lk(state.census_mu);
            state.census.add(log, *corrupted.corruption_mask);
        }
    });
    const double fm = detail::median(ferr), em = detail::median(eerr);

    CriterionResult r;
    r.id = 4;
    r.name = "covariance under LineCluster";
    r.passed = fm <= 0.5 && fm <= em / 3.0;
    r.detail = "filter whitened Frobenius median " + detail::fmt(fm) +
               " (<= 0.5), corrupted empirical " + detail::fmt(em) + " (need filter <= 1/3)";
    return r;
}

// --------------------------------------------------------------------------
// Criterion 5: analytic vs Monte-Carlo fourth-moment operator.
// --------------------------------------------------------------------------
namespace detail {

// Orthonormal basis of symmetric flattenings, D = d(d+1)/2 rows.
inline Mat symmetric_basis(int d) {
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    Mat b(d * (d + 1) / 2, d * d);
    b.setZero();
    int row = 0;
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) {
            if (i == j)
                b(row, i * d + j) = 1.0;
            else {
                b(row, i * d + j) = inv_sqrt2;
                b(row, j * d + i) = inv_sqrt2;
            }
            ++row;
        }
    return b;
}

}  // namespace detail

inline CriterionResult criterion_fourth_moment() {
    const long n = 200000;
    double worst = 0.0;
    bool ok = true;
    std::string detail_str;
    for (int d = 2; d <= 4; ++d) {
        Rng root(0xACC5 + static_cast<std::uint64_t>(d));
        // random PSD covariance with spectrum in [0.3, 1]
        Mat a(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) a(i, j) = root.normal();
        Eigen::HouseholderQR<Mat> qr(a);
        Mat q = qr.householderQ();
        Vec lam(d);
        for (int i = 0; i < d; ++i) lam[i] = 0.3 + 0.7 * root.uniform();
        Mat sigma = q * lam.asDiagonal() * q.transpose();
        sigma = ((sigma + sigma.transpose()) * 0.5).eval();

        Mat analytic = gaussian_fourth_operator(sigma);
        SampleSet samples = sample_model(GaussianModel(Vec::Zero(d), sigma), n, root.next_u64());
        Mat emp = empirical_fourth_operator(samples, Mat::Identity(d, d));
        Vec idf = flatten(Mat::Identity(d, d));
        emp -= idf * idf.transpose();  // back to E[(X kron X)(X kron X)^T]

        Mat b = detail::symmetric_basis(d);
        Mat diff = b * (analytic - emp) * b.transpose();
        Eigen::SelfAdjointEigenSolver<Mat> es(diff);
        double dist = es.eigenvalues().cwiseAbs().maxCoeff();
        worst = std::max(worst, dist);
        ok = ok && dist <= 0.05;
    }
    CriterionResult r;
    r.id = 5;
    r.name = "fourth-moment operator vs Monte Carlo";
    r.passed = ok;
    r.detail = "worst spectral distance on symmetric flattenings " + detail::fmt(worst) +
               " (<= 0.05), d = 2..4, N = 200000";
    return r;
}

// --------------------------------------------------------------------------
// Criterion 6: Find-max-poly equals a dense eigensolver.
// --------------------------------------------------------------------------
inline CriterionResult criterion_find_max_poly() {
    const int instances = 50;
    double worst_gap = 0.0, worst_qg = 0.0, worst_sym = 0.0, worst_mean = 0.0;
    bool ok = true;
    for (int inst = 0; inst < instances; ++inst) {
        Rng root(0xACC6 + static_cast<std::uint64_t>(inst));
        const int d = 2 + static_cast<int>(root.below(4));  // 2..5
        const long n = 100;
        Mat x(n, d);
        for (long i = 0; i < n; ++i)
            for (int j = 0; j < d; ++j) x(i, j) = root.normal() * (1.0 + 0.5 * j) + 0.1;
        SampleSet samples{Mat(x)};
        Mat sigma = (x.transpose() * x) / static_cast<double>(n);
        sigma = ((sigma + sigma.transpose()) * 0.5).eval();

        FilterConfig cfg;
        cfg.eig_tol = 1e-12;
        cfg.cov_eig_tol = 1e-12;
        auto [p, lam] = find_max_poly(samples, sigma, cfg);

        // dense oracle on the symmetric subspace
        Mat w = sym_inv_sqrt(sigma, cfg.eig_floor);
        Mat t_full = empirical_fourth_operator(SampleSet{Mat(x)}, w);
        Vec idf = flatten(Mat::Identity(d, d));
        Mat t_eff = 0.5 * (t_full - 2.0 * idf * idf.transpose());
        Mat b = detail::symmetric_basis(d);
        Eigen::SelfAdjointEigenSolver<Mat> es(b * t_eff * b.transpose());
        double dense_top = es.eigenvalues().maxCoeff();

        double gap = std::abs(lam - dense_top);
        double qg = std::abs(2.0 * p.quad.squaredNorm() - 1.0);
        double sym = (p.quad - p.quad.transpose()).cwiseAbs().maxCoeff();
        Vec vals = robustlearn::detail::eval_quadratic_rows(p, x);
        double mean_abs = std::abs(vals.mean());

        worst_gap = std::max(worst_gap, gap);
        worst_qg = std::max(worst_qg, qg);
        worst_sym = std::max(worst_sym, sym);
        worst_mean = std::max(worst_mean, mean_abs);
        ok = ok && gap <= 1e-8 && qg <= 1e-6 && sym <= 1e-10 && mean_abs <= 1e-6;
    }
    CriterionResult r;
    r.id = 6;
    r.name = "Find-max-poly dense equivalence";
    r.passed = ok;
    r.detail = "worst |lambda gap| " + detail::fmt(worst_gap) + " (<= 1e-8), |Q_G'-1| " +
               detail::fmt(worst_qg) + " (<= 1e-6), asymmetry " + detail::fmt(worst_sym) +
               " (<= 1e-10), |Emp p*| " + detail::fmt(worst_mean) + " (<= 1e-6)";
    return r;
}

// --------------------------------------------------------------------------
// Criterion 7: product distributions (rare-pattern tightness + chi^2 bound).
// --------------------------------------------------------------------------
inline CriterionResult criterion_products(SuiteState& state) {
    const int seeds = 10;

    // (a) balanced filter under RarePatternDeletion, d=32, eps=0.01, N=1e5
    const int d = 32;
    const double eps_a = 0.01;
    const long n_a = 100000;
    std::vector<double> err_a(seeds);
    detail::parallel_for(seeds, [&](long s) {
        Rng root(0xACC7 + static_cast<std::uint64_t>(s));
        Vec p = Vec::Constant(d, 0.5);
        Model truth = BinaryProductModel(p);
        SampleSet clean = sample_model(truth, n_a, root.substream(1).next_u64());
        AdversarySpec spec;
        spec.strategy = AttackStrategy::RarePatternDeletion;
        auto [corrupted, rep] = corrupt_full(clean, eps_a, spec, root.substream(2).next_u64());
        SampleSet data(corrupted.data);
        FilterConfig cfg;
        cfg.epsilon = eps_a;
        EstimationLog log;
        BinaryProductModel est = learn_balanced_product(data, cfg, &log);
        err_a[static_cast<size_t>(s)] = (est.mean - p).norm();
        {
            std::lock_guard<std::mutex> lk(state.census_mu);
            state.census.add(log, *corrupted.corruption_mask);
        }
    });
    const double med_a = detail::median(err_a);
    const double scale_a = eps_a * std::sqrt(std::log(1.0 / eps_a));
    const bool pass_a = med_a >= 0.1 * scale_a && med_a <= 10.0 * scale_a;

    // (b) general filter: chi^2 error bound on a biased product under
    // planted near-ones corruption.
    const double eps_b = 0.02;
    const long n_b = 100000;
    std::vector<double> chi_b(seeds);
    detail::parallel_for(seeds, [&](long s) {
        Rng root(0xACC8 + static_cast<std::uint64_t>(s));
        Vec p(d);
        for (int j = 0; j < d; ++j)
            p[j] = 0.04 + 0.6 * static_cast<double>(j) / static_cast<double>(d - 1);
        Model truth = BinaryProductModel(p);
        Model noise = BinaryProductModel(Vec::Constant(d, 0.9));
        auto [corrupted, rep] =
            corrupt_oblivious(truth, noise, eps_b, n_b, root.substream(1).next_u64());
        SampleSet data(corrupted.data);
        FilterConfig cfg;
        cfg.epsilon = eps_b;
        EstimationLog log;
        BinaryProductModel est = learn_general_product(data, cfg, &log);
        chi_b[static_cast<size_t>(s)] = chi_squared_asym(est.mean, p);
        {
            std::lock_guard<std::mutex> lk(state.census_mu);
            state.census.add(log, *corrupted.corruption_mask);
        }
    });
    const double med_b = detail::median(chi_b);
    const double bound_b = 25.0 * eps_b * std::log(1.0 / eps_b);
    const bool pass_b = med_b <= bound_b;

    CriterionResult r;
    r.id = 7;
    r.name = "product distributions";
    r.passed = pass_a && pass_b;
    r.detail = "rare-pattern median l2 " + detail::fmt(med_a) + " in [" +
               detail::fmt(0.1 * scale_a) + ", " + detail::fmt(10.0 * scale_a) +
               "]; general chi^2 median " + detail::fmt(med_b) + " <= " + detail::fmt(bound_b);
    return r;
}

// --------------------------------------------------------------------------
// Criterion 2: pooled filter progress (uses criteria 1, 4, 7 logs).
// --------------------------------------------------------------------------
inline CriterionResult criterion_filter_progress(const SuiteState& state) {
    long good = 0;
    const long total = static_cast<long>(state.census.steps.size());
    for (const auto& [corrupt, clean] : state.census.steps)
        if (corrupt >= clean) ++good;
    CriterionResult r;
    r.id = 2;
    r.name = "filter progress (removed corrupt >= clean)";
    r.passed = total > 0 && static_cast<double>(good) >= 0.95 * static_cast<double>(total);
    r.detail = std::to_string(good) + "/" + std::to_string(total) + " Reduced steps (need 95%)";
    return r;
}

// --------------------------------------------------------------------------
// Criterion 8: TV bound domination.
// --------------------------------------------------------------------------
inline CriterionResult criterion_tv_domination() {
    Rng root(0xACC9);
    bool ok = true;
    double worst = -1.0;
    for (int it = 0; it < 1000; ++it) {
        const int d = 1 + static_cast<int>(root.below(10));
        Vec p(d), q(d);
        for (int j = 0; j < d; ++j) {
            p[j] = 0.02 + 0.96 * root.uniform();
            q[j] = 0.02 + 0.96 * root.uniform();
        }
        double bound = tv_bound_products(p, q);
        double exact = tv_exact_small(BinaryProductModel(p), BinaryProductModel(q), d);
        worst = std::max(worst, exact - bound);
        ok = ok && bound >= exact - 1e-12;
    }

    // 1-d Gaussian mean shift: Simpson quadrature TV vs the mean bound.
    bool ok_g = true;
    for (double shift = 0.25; shift <= 4.0; shift += 0.25) {
        const double lo = -10.0, hi = 10.0 + shift;
        const int steps = 4000;
        const double h = (hi - lo) / steps;
        auto integrand = [&](double x) {
            auto phi = [](double t) { return std::exp(-0.5 * t * t) / std::sqrt(2 * M_PI); };
            return std::abs(phi(x) - phi(x - shift));
        };
        double acc = integrand(lo) + integrand(hi);
        for (int k = 1; k < steps; ++k) acc += integrand(lo + k * h) * (k % 2 ? 4.0 : 2.0);
        double tv_quad = 0.5 * acc * h / 3.0;
        Vec a(1), b(1);
        a[0] = 0.0;
        b[0] = shift;
        ok_g = ok_g && tv_quad <= tv_upper_gaussian_means(a, b) + 1e-9;
    }

    CriterionResult r;
    r.id = 8;
    r.name = "TV bound domination";
    r.passed = ok && ok_g;
    r.detail = "1000 product pairs, worst exact-bound = " + detail::fmt(worst) +
               " (<= 1e-12); Gaussian quadrature TV under mean bound for all shifts";
    return r;
}

// --------------------------------------------------------------------------
// Criterion 9: tournament recovers the truth among far decoys.
// --------------------------------------------------------------------------
inline CriterionResult criterion_tournament() {
    const int d = 6;
    const long n = 5000;
    const int seeds = 100;
    std::atomic<int> wins{0};
    detail::parallel_for(seeds, [&](long s) {
        Rng root(0xACCA + static_cast<std::uint64_t>(s));
        Vec p(d);
        for (int j = 0; j < d; ++j) p[j] = 0.3 + 0.4 * root.uniform();
        Model truth = BinaryProductModel(p);

        std::vector<Model> pool;
        for (int k = 0; k < 5; ++k) {
            Vec q = p;
            for (int j = 0; j < d; ++j) {
                double move = ((j + k) % 2 ? 0.3 : -0.3);
                q[j] = std::min(0.98, std::max(0.02, p[j] + move));
            }
            Model decoy = BinaryProductModel(q);
            if (tv_exact_small(decoy, truth, d) < 0.3) {
                for (int j = 0; j < d; ++j) q[j] = j % 2 ? 0.95 : 0.05;
                decoy = BinaryProductModel(q);
            }
            pool.push_back(decoy);
        }
        pool.push_back(truth);  // lowest-index-survivor must still find it

        SampleSet samples = sample_model(truth, n, root.next_u64());
        TournamentResult res = tournament(pool, samples, 0.01, 0.02, 20000, 7 * s + 1);
        if (tv_exact_small(res.winner, truth, d) <= 0.1) ++wins;
    });
    CriterionResult r;
    r.id = 9;
    r.name = "tournament selects the truth";
    r.passed = wins >= 95;
    r.detail = std::to_string(wins.load()) + "/100 seeds within exact TV 0.1 (need 95)";
    return r;
}

// --------------------------------------------------------------------------
// Criterion 10: separation oracle and the convex-programming mean.
// --------------------------------------------------------------------------
inline CriterionResult criterion_separation_oracle() {
    const int d = 16;
    const long n = 5000;
    const double eps = 0.1;
    const int seeds = 20;
    std::atomic<int> yes_ok{0}, cut_ok{0};
    std::vector<double> ratio(seeds);
    detail::parallel_for(seeds, [&](long s) {
        Rng root(0xACCB + static_cast<std::uint64_t>(s));
        Model truth = GaussianModel::standard(d);
        SampleSet clean = sample_model(truth, n, root.substream(1).next_u64());
        AdversarySpec spec;
        spec.strategy = AttackStrategy::MeanShift;
        spec.scale = std::sqrt(static_cast<double>(d));
        auto [corrupted, rep] = corrupt_full(clean, eps, spec, root.substream(2).next_u64());
        const auto& mask = *corrupted.corruption_mask;
        SampleSet data(corrupted.data);

        // clean-uniform weights (ground truth is available to the harness)
        Vec w = Vec::Zero(n);
        long cleanCount = 0;
        for (long i = 0; i < n; ++i)
            if (!mask[static_cast<size_t>(i)]) ++cleanCount;
        for (long i = 0; i < n; ++i)
            if (!mask[static_cast<size_t>(i)]) w[i] = 1.0 / static_cast<double>(cleanCount);
        WeightVector w_clean(w, eps);

        if (std::holds_alternative<std::monostate>(separation_oracle_mean(w_clean, data, eps)))
            ++yes_ok;
        auto ans = separation_oracle_mean(WeightVector::uniform(n, eps), data, eps);
        if (const auto* cut = std::get_if<OracleCut>(&ans))
            if (cut->eval(w_clean.weights) < 0.0) ++cut_ok;

        FilterConfig cfg;
        cfg.epsilon = eps;
        GaussianModel filt = learn_gaussian_mean(data, cfg);
        GaussianModel conv = learn_mean_convex(data, eps, cfg.tau, cfg);
        ratio[static_cast<size_t>(s)] =
            conv.mean.norm() / std::max(filt.mean.norm(), 1e-12);
    });
    const double med_ratio = detail::median(ratio);
    CriterionResult r;
    r.id = 10;
    r.name = "separation oracle + convex mean";
    r.passed = yes_ok == seeds && cut_ok == seeds && med_ratio <= 2.0;
    r.detail = "YES at clean weights " + std::to_string(yes_ok.load()) + "/20, cut with ell(w_clean)<0 " +
               std::to_string(cut_ok.load()) + "/20, median convex/filter error ratio " +
               detail::fmt(med_ratio) + " (<= 2)";
    return r;
}

// --------------------------------------------------------------------------
// Criterion 11: two-component mixture learning sanity band.
// --------------------------------------------------------------------------
inline CriterionResult criterion_mixtures() {
    const int d = 8;
    const double eps = 0.005;
    const long n = 150000;  // three folds of 5e4
    const int seeds = 10;
    std::atomic<int> ok{0};
    std::vector<double> tvs(seeds);
    detail::parallel_for(seeds, [&](long s) {
        Rng root(0xACCC + static_cast<std::uint64_t>(s));
        Vec p = Vec::Constant(d, 0.5), q = Vec::Constant(d, 0.5);
        p[0] = 0.7; p[1] = 0.7; p[2] = 0.3;
        q[0] = 0.3; q[1] = 0.3; q[2] = 0.7;
        Model truth = ProductMixtureModel(0.5, BinaryProductModel(p), BinaryProductModel(q));
        Model noise = BinaryProductModel(Vec::Constant(d, 0.9));
        auto [corrupted, rep] = corrupt_oblivious(truth, noise, eps, n, root.next_u64());
        SampleSet data(corrupted.data);

        FilterConfig cfg;
        cfg.epsilon = eps;
        cfg.c_balanced = 0.25;
        cfg.census_seed = 0xACCC + static_cast<std::uint64_t>(s);
        try {
            ProductMixtureModel est = learn_product_mixture(data, cfg);
            double tv = tv_exact_small(est, truth, d);
            tvs[static_cast<size_t>(s)] = tv;
            if (tv <= 0.35) ++ok;
        } catch (const std::exception&) {
            tvs[static_cast<size_t>(s)] = 1.0;
        }
    });
    CriterionResult r;
    r.id = 11;
    r.name = "two-product mixture sanity band";
    r.passed = ok >= 8;
    r.detail = std::to_string(ok.load()) + "/10 seeds within exact TV 0.35 (need 8); median TV " +
               detail::fmt(detail::median(tvs));
    return r;
}

// --------------------------------------------------------------------------
// Criterion 12: geometric median degrades with d, the filter does not.
// --------------------------------------------------------------------------
inline CriterionResult criterion_geometric_median_failure() {
    const double eps = 0.15;
    const std::vector<int> dims = {16, 256};
    const int seeds = 3;
    std::vector<double> gm_med(dims.size()), f_med(dims.size());
    for (size_t di = 0; di < dims.size(); ++di) {
        const int d = dims[di];
        const long n = static_cast<long>(10.0 * d / (eps * eps));
        std::vector<double> gm(seeds), fe(seeds);
        detail::parallel_for(seeds, [&](long s) {
            Rng root(0xACCD + 100 * static_cast<std::uint64_t>(d) + static_cast<std::uint64_t>(s));
            Model truth = GaussianModel::standard(d);
            SampleSet clean = sample_model(truth, n, root.substream(1).next_u64());
            AdversarySpec spec;
            spec.strategy = AttackStrategy::HalfCube;
            auto [corrupted, rep] = corrupt_full(clean, eps, spec, root.substream(2).next_u64());
            SampleSet data(corrupted.data);
            gm[static_cast<size_t>(s)] = geometric_median(data).norm();
            FilterConfig cfg;
            cfg.epsilon = eps;
            fe[static_cast<size_t>(s)] = learn_gaussian_mean(data, cfg).mean.norm();
        });
        gm_med[di] = detail::median(gm);
        f_med[di] = detail::median(fe);
    }
    const double gr = gm_med[1] / gm_med[0];
    const double fr = f_med[1] / f_med[0];
    CriterionResult r;
    r.id = 12;
    r.name = "geometric median dimension failure";
    r.passed = gr >= 2.0 && fr <= 1.5;
    r.detail = "geometric-median error d16 " + detail::fmt(gm_med[0]) + " -> d256 " +
               detail::fmt(gm_med[1]) + " (ratio " + detail::fmt(gr) + " >= 2); filter ratio " +
               detail::fmt(fr) + " (<= 1.5)";
    return r;
}

// --------------------------------------------------------------------------
// Criterion 13: byte-identical CSV across reruns.
// --------------------------------------------------------------------------
inline CriterionResult criterion_determinism() {
    const char* config_json = R"({
        "model": {"kind": "standard_gaussian"},
        "dims": [8],
        "n_rule": {"values": [2000]},
        "epsilons": [0.1],
        "adversary": {"kind": "Full", "strategy": "MeanShift"},
        "estimators": ["filter_gaussian_mean", "empirical_mean", "coordinate_median"],
        "trials": 2,
        "seed": 20240501
    })";

    CriterionResult r;
    r.id = 13;
    r.name = "bench run determinism";

    if (const char* bin = std::getenv("BENCH_BIN")) {
        // End-to-end: invoke the real binary twice and compare bytes.
        std::string dir = "/tmp/robustlearn_selftest";
        std::string mk = "mkdir -p " + dir;
        if (std::system(mk.c_str()) != 0) {
            r.passed = false;
            r.detail = "could not create temp dir";
            return r;
        }
        std::string cfg_path = dir + "/cfg.json";
        {
            std::ofstream f(cfg_path);
            f << config_json;
        }
        auto slurp = [](const std::string& path) {
            std::ifstream f(path, std::ios::binary);
            std::ostringstream ss;
            ss << f.rdbuf();
            return ss.str();
        };
        std::string c1 = std::string(bin) + " run --config " + cfg_path + " --out " + dir + "/a.csv";
        std::string c2 = std::string(bin) + " run --config " + cfg_path + " --out " + dir + "/b.csv";
        if (std::system(c1.c_str()) != 0 || std::system(c2.c_str()) != 0) {
            r.passed = false;
            r.detail = "bench run failed";
            return r;
        }
        std::string a = slurp(dir + "/a.csv"), b = slurp(dir + "/b.csv");
        r.passed = !a.empty() && a == b;
        r.detail = "two `bench run` invocations, " + std::to_string(a.size()) +
                   " bytes, byte-identical: " + (r.passed ? "yes" : "no");
        return r;
    }

    // Library-level fallback (same code path the CLI calls).
    ExperimentConfig cfg = parse_experiment_config(nlohmann::json::parse(config_json));
    std::ostringstream a, b;
    run_sweep_csv(cfg, a);
    run_sweep_csv(cfg, b);
    r.passed = !a.str().empty() && a.str() == b.str();
    r.detail = "two run_sweep invocations, " + std::to_string(a.str().size()) +
               " bytes, byte-identical: " + (r.passed ? "yes" : "no");
    return r;
}

// --------------------------------------------------------------------------

inline std::vector<CriterionResult> run_all(std::ostream& os) {
    SuiteState state;
    std::vector<CriterionResult> results;
    auto run = [&](CriterionResult (*fn)(), const char* label) {
        os << "running " << label << "...\n" << std::flush;
        results.push_back(fn());
    };
    auto run_state = [&](CriterionResult (*fn)(SuiteState&), const char* label) {
        os << "running " << label << "...\n" << std::flush;
        results.push_back(fn(state));
    };

    run_state(criterion_dimension_independence, "criterion 1 (dimension independence)");
    run(criterion_clean_soundness, "criterion 3 (clean-data soundness)");
    run_state(criterion_covariance, "criterion 4 (covariance)");
    run(criterion_fourth_moment, "criterion 5 (fourth-moment oracle)");
    run(criterion_find_max_poly, "criterion 6 (find-max-poly)");
    run_state(criterion_products, "criterion 7 (products)");
    results.push_back(criterion_filter_progress(state));
    run(criterion_tv_domination, "criterion 8 (TV domination)");
    run(criterion_tournament, "criterion 9 (tournament)");
    run(criterion_separation_oracle, "criterion 10 (separation oracle)");
    run(criterion_mixtures, "criterion 11 (mixtures)");
    run(criterion_geometric_median_failure, "criterion 12 (geometric median)");
    run(criterion_determinism, "criterion 13 (determinism)");

    std::sort(results.begin(), results.end(),
              [](const CriterionResult& x, const CriterionResult& y) { return x.id < y.id; });
    for (const CriterionResult& r : results)
        os << "criterion " << r.id << " (" << r.name << "): " << (r.passed ? "PASS" : "FAIL")
           << " -- " << r.detail << "\n";
    return results;
}

}  // namespace robustlearn::acceptance

#endif
