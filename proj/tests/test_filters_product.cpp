#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "robustlearn/adversary.hpp"
#include "robustlearn/baselines.hpp"
#include "robustlearn/product_filters.hpp"
#include "robustlearn/rng.hpp"

using namespace robustlearn;

namespace {

FilterConfig config(double eps) {
    FilterConfig cfg;
    cfg.epsilon = eps;
    return cfg;
}

}  // namespace

TEST_CASE("chi_squared_asym closed forms") {
    Vec x(1), y(1);
    x << 0.5;
    y << 0.5;
    REQUIRE(chi_squared_asym(x, y) == 0.0);

    y << 0.25;
    REQUIRE(chi_squared_asym(x, y) == Catch::Approx(0.25).epsilon(1e-12));

    // asymmetry witness
    Vec a(1), b(1);
    a << 0.9;
    b << 0.5;
    REQUIRE(chi_squared_asym(a, b) != Catch::Approx(chi_squared_asym(b, a)).epsilon(1e-9));

    // boundary coordinate: infinite unless equal
    Vec e(1), f(1);
    e << 1.0;
    f << 0.5;
    REQUIRE(std::isinf(chi_squared_asym(e, f)));
    REQUIRE(chi_squared_asym(e, e) == 0.0);
}

TEST_CASE("filter_balanced_step accepts clean uniform data") {
    const int d = 16;
    Vec p = Vec::Constant(d, 0.5);
    SampleSet s = sample_model(BinaryProductModel(p), 50000, 31);
    FilterOutcome out = filter_balanced_step(s, config(0.05));
    REQUIRE(out.kind == FilterOutcome::Kind::Estimate);
    const auto& est = std::get<BinaryProductModel>(out.estimate);
    REQUIRE((est.mean - p).norm() <= 4.0 * 0.05 * std::sqrt(std::log(1.0 / 0.05)));
    // the zeroed-diagonal matrix used inside really has an exactly-zero diagonal:
    Mat m = zero_diagonal(detail::uniform_covariance(s.data, detail::column_mean(s.data)));
    for (int i = 0; i < d; ++i) REQUIRE(m(i, i) == 0.0);
}

TEST_CASE("filter_balanced_step reduces planted all-ones rows") {
    const int d = 64;
    const long n = 20000;
    const double eps = 0.1;
    Vec p = Vec::Constant(d, 0.3);
    SampleSet clean = sample_model(BinaryProductModel(p), n, 32);
    Mat data = clean.data;
    std::vector<std::uint8_t> mask(static_cast<size_t>(n), 0);
    const long planted = static_cast<long>(eps * n);
    for (long i = 0; i < planted; ++i) {
        data.row(17 * i % n).setOnes();
        mask[static_cast<size_t>(17 * i % n)] = 1;
    }
    SampleSet s{std::move(data)};

    FilterOutcome out = filter_balanced_step(s, config(eps));
    REQUIRE(out.kind == FilterOutcome::Kind::Reduced);
    long corrupt = 0, removed = 0;
    std::vector<bool> kept(static_cast<size_t>(n), false);
    for (int k : out.kept_rows) kept[static_cast<size_t>(k)] = true;
    for (long i = 0; i < n; ++i) {
        if (kept[static_cast<size_t>(i)]) continue;
        ++removed;
        corrupt += mask[static_cast<size_t>(i)];
    }
    REQUIRE(removed >= 1);
    REQUIRE(corrupt > removed / 2);  // mostly planted rows go
}

TEST_CASE("learn_balanced_product 1-d output equals the clamped empirical frequency") {
    Vec p = Vec::Constant(1, 0.4);
    SampleSet s = sample_model(BinaryProductModel(p), 5000, 33);
    BinaryProductModel est = learn_balanced_product(s, config(0.1));
    double freq = s.data.col(0).mean();
    double clamp = 0.1 / 2.0;
    REQUIRE(est.mean[0] == Catch::Approx(std::min(1.0 - clamp, std::max(clamp, freq))));
}

TEST_CASE("learn_balanced_product is coordinate-permutation covariant") {
    const int d = 8;
    Rng rng(34);
    Vec p(d);
    for (int j = 0; j < d; ++j) p[j] = 0.2 + 0.6 * rng.uniform();
    SampleSet s = sample_model(BinaryProductModel(p), 20000, 35);

    std::vector<int> perm = {3, 1, 4, 0, 7, 6, 2, 5};
    Mat permuted(s.size(), d);
    for (int j = 0; j < d; ++j) permuted.col(perm[j]) = s.data.col(j);

    BinaryProductModel base = learn_balanced_product(s, config(0.05));
    BinaryProductModel moved = learn_balanced_product(SampleSet{std::move(permuted)}, config(0.05));
    for (int j = 0; j < d; ++j)
        REQUIRE(moved.mean[perm[j]] == Catch::Approx(base.mean[j]).margin(1e-12));
}

TEST_CASE("rare pattern deletion leaves an undetectable bias of the right size") {
    const int d = 32;
    const double eps = 0.01;
    const long n = 100000;
    Vec p = Vec::Constant(d, 0.5);
    SampleSet clean = sample_model(BinaryProductModel(p), n, 36);
    AdversarySpec spec;
    spec.strategy = AttackStrategy::RarePatternDeletion;
    auto [corrupted, rep] = corrupt_full(clean, eps, spec, 37);

    BinaryProductModel est = learn_balanced_product(SampleSet(corrupted.data), config(eps));
    double err = (est.mean - p).norm();
    double scale = eps * std::sqrt(std::log(1.0 / eps));
    REQUIRE(err >= 0.1 * scale);
    REQUIRE(err <= 10.0 * scale);
}

TEST_CASE("filter_general_step conditions away a biased coordinate") {
    const int d = 8;
    const long n = 40000;
    const double eps = 0.2;
    Rng rng(38);
    Vec p = Vec::Constant(d, 0.5);
    p[3] = eps / (2.0 * d);  // inside (0, eps/d)
    SampleSet s = sample_model(BinaryProductModel(p), n, 39);

    FilterOutcome out = filter_general_step(s, config(eps));
    REQUIRE(out.kind == FilterOutcome::Kind::Reduced);
    // conditioning keeps rows where coordinate 3 takes its common value 0
    for (Eigen::Index i = 0; i < out.reduced.size(); ++i)
        REQUIRE(out.reduced.data(i, 3) == 0.0);
    // afterwards every in-support coordinate mean is eps/d away from the edges
    Vec mu = out.reduced.data.colwise().mean().transpose();
    for (int j = 0; j < d; ++j) {
        if (mu[j] == 0.0 || mu[j] == 1.0) continue;
        REQUIRE(mu[j] >= eps / d);
        REQUIRE(mu[j] <= 1.0 - eps / d);
    }
}

TEST_CASE("filter_general_step: all rows identical means a degenerate estimate") {
    Mat rows(5, 3);
    rows.setZero();
    rows.col(1).setOnes();
    FilterOutcome out = filter_general_step(SampleSet{std::move(rows)}, config(0.1));
    REQUIRE(out.kind == FilterOutcome::Kind::Estimate);
    const auto& est = std::get<BinaryProductModel>(out.estimate);
    REQUIRE(est.mean[0] == 0.0);
    REQUIRE(est.mean[1] == 1.0);
    REQUIRE(est.mean[2] == 0.0);
}

TEST_CASE("learn_general_product achieves a small chi-squared error on balanced data") {
    const int d = 16;
    const double eps = 0.02;
    const long n = 60000;
    Vec p = Vec::Constant(d, 0.5);
    Model noise = BinaryProductModel(Vec::Constant(d, 0.95));
    auto [corrupted, rep] = corrupt_oblivious(BinaryProductModel(p), noise, eps, n, 40);

    BinaryProductModel est = learn_general_product(SampleSet(corrupted.data), config(eps));
    REQUIRE(chi_squared_asym(est.mean, p) <= 25.0 * eps * std::log(1.0 / eps));
    REQUIRE(chi_squared_asym(est.mean, p) <= 0.3);
}

TEST_CASE("learn_general_product clean parity with the empirical mean") {
    const int d = 12;
    Rng rng(41);
    Vec p(d);
    for (int j = 0; j < d; ++j) p[j] = 0.1 + 0.8 * rng.uniform();
    SampleSet s = sample_model(BinaryProductModel(p), 30000, 42);
    BinaryProductModel est = learn_general_product(s, config(0.02));
    double fe = (est.mean - p).norm();
    double ee = (empirical_mean(s) - p).norm();
    REQUIRE(fe <= 2.0 * ee + 1e-9);
}

TEST_CASE("product filters reject non-binary data") {
    Mat rows(2, 2);
    rows << 0.0, 0.5, 1.0, 0.0;
    REQUIRE_THROWS_AS(filter_balanced_step(SampleSet{Mat(rows)}, config(0.1)), ParameterError);
    REQUIRE_THROWS_AS(filter_general_step(SampleSet{Mat(rows)}, config(0.1)), ParameterError);
}
