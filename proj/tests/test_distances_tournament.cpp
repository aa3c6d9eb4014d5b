#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "robustlearn/distances.hpp"
#include "robustlearn/rng.hpp"
#include "robustlearn/tournament.hpp"

using namespace robustlearn;

TEST_CASE("kl_gaussian closed forms") {
    GaussianModel a = GaussianModel::standard(3);
    REQUIRE(kl_gaussian(a, a) == Catch::Approx(0.0).margin(1e-9));

    // unit mean shift with identity covariances: 1/2 ||dmu||^2 = 1/2
    Vec mu = Vec::Zero(3);
    mu[0] = 1.0;
    GaussianModel b(mu, Mat::Identity(3, 3));
    REQUIRE(kl_gaussian(a, b) == Catch::Approx(0.5).epsilon(1e-12));

    // 1-d variances 4 vs 1: (4 - 1 - ln 4)/2
    GaussianModel c(Vec::Zero(1), Mat::Constant(1, 1, 4.0));
    GaussianModel d(Vec::Zero(1), Mat::Identity(1, 1));
    REQUIRE(kl_gaussian(c, d) == Catch::Approx(0.8068528194400547).epsilon(1e-12));

    // singular second argument is an error
    Mat sing = Mat::Zero(2, 2);
    sing(0, 0) = 1.0;
    REQUIRE_THROWS_AS(kl_gaussian(GaussianModel::standard(2), GaussianModel(Vec::Zero(2), sing)),
                      NumericError);
}

TEST_CASE("kl_gaussian is nonnegative on random pairs") {
    Rng rng(61);
    for (int it = 0; it < 50; ++it) {
        int d = 1 + static_cast<int>(rng.below(4));
        Vec m1(d), m2(d);
        for (int j = 0; j < d; ++j) {
            m1[j] = rng.normal();
            m2[j] = rng.normal();
        }
        Mat a(d, d), b(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                a(i, j) = rng.normal();
                b(i, j) = rng.normal();
            }
        GaussianModel ga(m1, (a * a.transpose() + 0.2 * Mat::Identity(d, d)).eval());
        GaussianModel gb(m2, (b * b.transpose() + 0.2 * Mat::Identity(d, d)).eval());
        REQUIRE(kl_gaussian(ga, gb) >= -1e-9);
    }
}

TEST_CASE("tv_upper_gaussian_means") {
    Vec a = Vec::Zero(2), b = Vec::Zero(2);
    REQUIRE(tv_upper_gaussian_means(a, b) == 0.0);
    b[0] = 1.0;
    REQUIRE(tv_upper_gaussian_means(a, b) == Catch::Approx(0.5));
    b[0] = 4.0;
    REQUIRE(tv_upper_gaussian_means(a, b) == 1.0);  // clamped
}

TEST_CASE("tv_upper_gaussian_cov") {
    Mat s1 = Mat::Identity(2, 2);
    REQUIRE(tv_upper_gaussian_cov(s1, s1, 1.0) == Catch::Approx(0.0).margin(1e-12));

    Mat a = Mat::Constant(1, 1, 1.2), b = Mat::Identity(1, 1);
    REQUIRE(tv_upper_gaussian_cov(a, b, 1.0) == Catch::Approx(0.2).epsilon(1e-9));

    // 1-d exactness check against a quadrature TV: the bound should dominate
    // at k = 1 with a bounded ratio for moderate variance gaps
    for (double v = 1.05; v <= 1.5; v += 0.05) {
        const double lo = -12.0, hi = 12.0;
        const int steps = 6000;
        const double h = (hi - lo) / steps;
        auto f = [&](double x) {
            double p = std::exp(-0.5 * x * x) / std::sqrt(2 * M_PI);
            double q = std::exp(-0.5 * x * x / v) / std::sqrt(2 * M_PI * v);
            return std::abs(p - q);
        };
        double acc = f(lo) + f(hi);
        for (int k = 1; k < steps; ++k) acc += f(lo + k * h) * (k % 2 ? 4.0 : 2.0);
        double tv = 0.5 * acc * h / 3.0;
        double bound = tv_upper_gaussian_cov(Mat::Constant(1, 1, v), Mat::Identity(1, 1), 1.0);
        REQUIRE(tv <= bound);
        REQUIRE(bound <= 10.0 * tv);  // not wildly loose either
    }

    Mat sing = Mat::Zero(2, 2);
    REQUIRE_THROWS_AS(tv_upper_gaussian_cov(Mat::Identity(2, 2), sing, 1.0), NumericError);
}

TEST_CASE("tv_bound_products closed forms and domination") {
    Vec p = Vec::Constant(3, 0.4);
    REQUIRE(tv_bound_products(p, p) == 0.0);

    Vec one = Vec::Constant(1, 1.0), zero = Vec::Constant(1, 0.0);
    REQUIRE(tv_bound_products(one, zero) == 1.0);  // clamped at 1

    Rng rng(62);
    for (int it = 0; it < 300; ++it) {
        int d = 1 + static_cast<int>(rng.below(10));
        Vec a(d), b(d);
        for (int j = 0; j < d; ++j) {
            a[j] = 0.02 + 0.96 * rng.uniform();
            b[j] = 0.02 + 0.96 * rng.uniform();
        }
        double bound = tv_bound_products(a, b);
        double exact = tv_exact_small(BinaryProductModel(a), BinaryProductModel(b), d);
        REQUIRE(bound >= exact - 1e-12);
    }
}

TEST_CASE("tv_exact_small") {
    Model a = BinaryProductModel(Vec::Constant(2, 0.5));
    REQUIRE(tv_exact_small(a, a, 2) == 0.0);

    Model one = BinaryProductModel(Vec::Constant(1, 1.0));
    Model zero = BinaryProductModel(Vec::Constant(1, 0.0));
    REQUIRE(tv_exact_small(one, zero, 1) == Catch::Approx(1.0));

    // explicit mass-table oracle in d = 2
    Vec pa(2), pb(2);
    pa << 0.3, 0.8;
    pb << 0.6, 0.6;
    Model ma = BinaryProductModel(pa);
    Model mb = BinaryProductModel(pb);
    double direct = 0.0;
    for (int x = 0; x < 4; ++x) {
        double qa = (x & 2 ? pa[0] : 1 - pa[0]) * (x & 1 ? pa[1] : 1 - pa[1]);
        double qb = (x & 2 ? pb[0] : 1 - pb[0]) * (x & 1 ? pb[1] : 1 - pb[1]);
        direct += std::abs(qa - qb);
    }
    REQUIRE(tv_exact_small(ma, mb, 2) == Catch::Approx(0.5 * direct).epsilon(1e-12));

    REQUIRE_THROWS_AS(tv_exact_small(Model(GaussianModel::standard(2)), a, 2), ParameterError);
}

TEST_CASE("tournament picks the truth over a far decoy") {
    const int d = 6;
    Rng rng(63);
    Vec p(d);
    for (int j = 0; j < d; ++j) p[j] = 0.35 + 0.3 * rng.uniform();
    Model truth = BinaryProductModel(p);
    Vec q = p;
    for (int j = 0; j < d; ++j) q[j] = std::min(0.95, std::max(0.05, p[j] + (j % 2 ? 0.3 : -0.3)));
    Model decoy = BinaryProductModel(q);
    REQUIRE(tv_exact_small(truth, decoy, d) >= 0.3);

    SampleSet samples = sample_model(truth, 5000, 64);
    std::vector<Model> pool = {decoy, truth};  // decoy first: must be eliminated
    TournamentResult res = tournament(pool, samples, 0.01, 0.02, 10000, 65);
    REQUIRE(res.winner_index == 1);
}

TEST_CASE("tournament trivial pools") {
    Model m = BinaryProductModel(Vec::Constant(2, 0.4));
    SampleSet s = sample_model(m, 500, 66);
    TournamentResult one = tournament({m}, s, 0.05, 0.05, 1000, 1);
    REQUIRE(one.winner_index == 0);

    // identical candidates: index 0 wins the tie
    TournamentResult tie = tournament({m, m}, s, 0.05, 0.05, 1000, 1);
    REQUIRE(tie.winner_index == 0);
}

TEST_CASE("tournament is deterministic given pool order, samples and seed") {
    const int d = 5;
    Rng rng(67);
    Vec p(d);
    for (int j = 0; j < d; ++j) p[j] = 0.3 + 0.4 * rng.uniform();
    Model truth = BinaryProductModel(p);
    std::vector<Model> pool;
    for (int k = 0; k < 4; ++k) {
        Vec q = p;
        q[k % d] = std::min(0.9, p[k % d] + 0.25);
        pool.push_back(BinaryProductModel(q));
    }
    pool.push_back(truth);
    SampleSet s = sample_model(truth, 3000, 68);
    TournamentResult r1 = tournament(pool, s, 0.02, 0.05, 5000, 99);
    TournamentResult r2 = tournament(pool, s, 0.02, 0.05, 5000, 99);
    REQUIRE(r1.winner_index == r2.winner_index);
}

TEST_CASE("tournament works with Gaussian candidates via Monte Carlo") {
    Vec mu = Vec::Zero(3);
    Model truth = GaussianModel::standard(3);
    Vec far = Vec::Constant(3, 2.0);
    Model decoy = GaussianModel(far, Mat::Identity(3, 3));
    SampleSet s = sample_model(truth, 4000, 70);
    TournamentResult res = tournament({decoy, truth}, s, 0.02, 0.05, 4000, 71);
    REQUIRE(res.winner_index == 1);
}
