#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "robustlearn/adversary.hpp"
#include "robustlearn/convex_mean.hpp"
#include "robustlearn/gaussian_filters.hpp"
#include "robustlearn/rng.hpp"

using namespace robustlearn;

TEST_CASE("projection onto the capped simplex") {
    // feasible points project to themselves
    Vec u = Vec::Constant(10, 0.1);
    WeightVector w = project_to_weight_set(u, 0.1);
    REQUIRE((w.weights - u).cwiseAbs().maxCoeff() < 1e-10);

    // a spiky vector gets capped at 1/((1-2 eps) N)
    Vec v = Vec::Zero(10);
    v[3] = 5.0;
    WeightVector wp = project_to_weight_set(v, 0.1);
    REQUIRE(wp.weights[3] == Catch::Approx(wp.box_bound()).epsilon(1e-9));
    REQUIRE(wp.weights.sum() == Catch::Approx(1.0).margin(1e-12));

    // projection is idempotent
    WeightVector wpp = project_to_weight_set(wp.weights, 0.1);
    REQUIRE((wpp.weights - wp.weights).cwiseAbs().maxCoeff() < 1e-9);

    // random projections stay in S_{N,eps} and are closest among probes
    Rng rng(81);
    for (int it = 0; it < 20; ++it) {
        Vec raw(8);
        for (int j = 0; j < 8; ++j) raw[j] = rng.normal();
        WeightVector proj = project_to_weight_set(raw, 0.15);  // ctor validates membership
        double dist = (proj.weights - raw).squaredNorm();
        for (int probe = 0; probe < 50; ++probe) {
            Vec delta(8);
            for (int j = 0; j < 8; ++j) delta[j] = 0.02 * rng.normal();
            Vec other = proj.weights + delta;
            // project the probe crudely into the set; skip infeasible probes
            bool feasible = true;
            for (int j = 0; j < 8; ++j)
                if (other[j] < 0.0 || other[j] > proj.box_bound()) feasible = false;
            if (!feasible || std::abs(other.sum() - 1.0) > 1e-12) continue;
            REQUIRE(dist <= (other - raw).squaredNorm() + 1e-9);
        }
    }
}

TEST_CASE("separation oracle says YES on clean data at uniform weights") {
    const int d = 8;
    const long n = 20000;
    SampleSet s = sample_model(GaussianModel::standard(d), n, 82);
    auto ans = separation_oracle_mean(WeightVector::uniform(n, 0.1), s, 0.1);
    REQUIRE(std::holds_alternative<std::monostate>(ans));

    // tiny epsilon on clean data: spectral norm stays under the gate
    auto ans2 = separation_oracle_mean(WeightVector::uniform(n, 0.05), s, 0.05);
    REQUIRE(std::holds_alternative<std::monostate>(ans2));
}

TEST_CASE("separation oracle cuts off corrupted uniform weights") {
    const int d = 16;
    const long n = 8000;
    const double eps = 0.1;
    SampleSet clean = sample_model(GaussianModel::standard(d), n, 83);
    AdversarySpec spec;
    spec.strategy = AttackStrategy::MeanShift;
    spec.scale = 2.0 * std::sqrt(static_cast<double>(d));
    auto [corrupted, rep] = corrupt_full(clean, eps, spec, 84);
    SampleSet data(corrupted.data);
    const auto& mask = *corrupted.corruption_mask;

    auto ans = separation_oracle_mean(WeightVector::uniform(n, eps), data, eps);
    REQUIRE(std::holds_alternative<OracleCut>(ans));
    const auto& cut = std::get<OracleCut>(ans);

    // the hyperplane is >= 0 at the query point by construction
    REQUIRE(cut.eval(WeightVector::uniform(n, eps).weights) >= -1e-9);

    // and negative at the clean-uniform weights
    Vec w = Vec::Zero(n);
    long cleanCount = 0;
    for (long i = 0; i < n; ++i)
        if (!mask[static_cast<size_t>(i)]) ++cleanCount;
    for (long i = 0; i < n; ++i)
        if (!mask[static_cast<size_t>(i)]) w[i] = 1.0 / static_cast<double>(cleanCount);
    REQUIRE(cut.eval(w) < 0.0);

    // clean-uniform weights themselves get a YES
    auto ans_clean = separation_oracle_mean(WeightVector(w, eps), data, eps);
    REQUIRE(std::holds_alternative<std::monostate>(ans_clean));
}

TEST_CASE("learn_mean_convex terminates immediately on clean data") {
    const int d = 8;
    SampleSet s = sample_model(GaussianModel::standard(d), 20000, 85);
    FilterConfig cfg;
    cfg.epsilon = 0.1;
    EstimationLog log;
    GaussianModel est = learn_mean_convex(s, 0.1, 0.1, cfg, &log);
    REQUIRE(log.iterations == 1);  // first oracle call answers YES
    REQUIRE(est.mean.norm() < 0.1);
}

TEST_CASE("learn_mean_convex matches the filter on a mean-shift attack") {
    const int d = 16;
    const long n = 6000;
    const double eps = 0.1;
    SampleSet clean = sample_model(GaussianModel::standard(d), n, 86);
    AdversarySpec spec;
    spec.strategy = AttackStrategy::MeanShift;
    spec.scale = std::sqrt(static_cast<double>(d));
    auto [corrupted, rep] = corrupt_full(clean, eps, spec, 87);
    SampleSet data(corrupted.data);

    FilterConfig cfg;
    cfg.epsilon = eps;
    GaussianModel filt = learn_gaussian_mean(data, cfg);
    GaussianModel conv = learn_mean_convex(data, eps, 0.1, cfg);
    REQUIRE(conv.mean.norm() <= 2.0 * std::max(filt.mean.norm(), 0.05));
}
