#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "robustlearn/models.hpp"
#include "robustlearn/rng.hpp"

using namespace robustlearn;

TEST_CASE("rng substreams are independent and deterministic") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());

    Rng root(7);
    Rng s1 = root.substream(1);
    Rng s2 = root.substream(2);
    REQUIRE(s1.next_u64() != s2.next_u64());
    // substream derivation does not advance the parent
    Rng root2(7);
    root2.substream(9);
    Rng fresh(7);
    REQUIRE(root2.next_u64() == fresh.next_u64());
}

TEST_CASE("rng normal moments are sane") {
    Rng rng(123);
    const int n = 200000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        double x = rng.normal();
        sum += x;
        sumsq += x * x;
    }
    REQUIRE(std::abs(sum / n) < 0.01);
    REQUIRE(std::abs(sumsq / n - 1.0) < 0.02);
}

TEST_CASE("sample_model shape and determinism") {
    Model g = GaussianModel::standard(3);
    SampleSet one = sample_model(g, 1, 99);
    REQUIRE(one.size() == 1);
    REQUIRE(one.dim() == 3);
    REQUIRE(one.data.allFinite());
    REQUIRE_FALSE(one.corruption_mask.has_value());

    SampleSet again = sample_model(g, 1, 99);
    REQUIRE(one.data == again.data);  // bitwise

    Model p = BinaryProductModel(Vec::Ones(4));
    SampleSet ones = sample_model(p, 5, 1);
    REQUIRE(ones.data.minCoeff() == 1.0);
    REQUIRE(ones.data.maxCoeff() == 1.0);
}

TEST_CASE("sample_model empirical mean obeys a CLT bound") {
    Model g = GaussianModel::standard(2);
    SampleSet s = sample_model(g, 100000, 2024);
    Vec mean = s.data.colwise().mean().transpose();
    REQUIRE(std::abs(mean[0]) < 0.02);
    REQUIRE(std::abs(mean[1]) < 0.02);
}

TEST_CASE("sample_model handles PSD-singular covariances") {
    Mat cov = Mat::Zero(2, 2);
    cov(0, 0) = 1.0;  // rank one: support is the x-axis
    SampleSet s = sample_model(GaussianModel(Vec::Zero(2), cov), 50, 5);
    REQUIRE(s.data.col(1).cwiseAbs().maxCoeff() < 1e-12);

    Mat bad = Mat::Identity(2, 2);
    bad(0, 0) = -1.0;
    REQUIRE_THROWS_AS(sample_model(GaussianModel(Vec::Zero(2), bad), 1, 0), ParameterError);
}

TEST_CASE("log_density closed forms") {
    // 1-d standard Gaussian at zero: -ln(2 pi)/2
    Model g1 = GaussianModel::standard(1);
    REQUIRE(log_density(g1, Vec::Zero(1)) == Catch::Approx(-0.9189385332046727).epsilon(1e-12));

    // uniform two-coordinate product: mass 1/4 everywhere
    Vec half = Vec::Constant(2, 0.5);
    Model p = BinaryProductModel(half);
    Vec x(2);
    x << 1.0, 0.0;
    REQUIRE(log_density(p, x) == Catch::Approx(std::log(0.25)).epsilon(1e-12));

    // degenerate mixture reduces to its first component
    Vec pa = Vec::Constant(2, 0.3), pb = Vec::Constant(2, 0.8);
    Model mix = ProductMixtureModel(1.0, BinaryProductModel(pa), BinaryProductModel(pb));
    Model alone = BinaryProductModel(pa);
    for (int xi = 0; xi < 4; ++xi) {
        Vec xx(2);
        xx << (xi & 1), ((xi >> 1) & 1);
        REQUIRE(log_density(mix, xx) == Catch::Approx(log_density(alone, xx)).epsilon(1e-12));
    }
}

TEST_CASE("log_density rejects singular Gaussian covariance") {
    Mat cov = Mat::Zero(2, 2);
    cov(0, 0) = 1.0;
    Model g = GaussianModel(Vec::Zero(2), cov);
    REQUIRE_THROWS_AS(log_density(g, Vec::Zero(2)), NumericError);
}

TEST_CASE("product mass sums to one") {
    Rng rng(31);
    const int d = 7;
    Vec p(d);
    for (int j = 0; j < d; ++j) p[j] = 0.05 + 0.9 * rng.uniform();
    Model m = BinaryProductModel(p);
    double total = 0.0;
    for (int x = 0; x < (1 << d); ++x) {
        Vec xx(d);
        for (int j = 0; j < d; ++j) xx[j] = (x >> j) & 1;
        total += std::exp(log_density(m, xx));
    }
    REQUIRE(total == Catch::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("round_model_to_grid") {
    Model p1 = BinaryProductModel(Vec::Constant(1, 0.501));
    Model r1 = round_model_to_grid(p1, 0.1, 1);
    REQUIRE(std::get<BinaryProductModel>(r1).mean[0] == Catch::Approx(0.5).margin(1e-15));

    Vec pv(2);
    pv << 0.26, 0.74;
    Model p2 = BinaryProductModel(pv);
    Model r2 = round_model_to_grid(p2, 0.2, 2);  // grid step 0.1
    REQUIRE(std::get<BinaryProductModel>(r2).mean[0] == Catch::Approx(0.3).margin(1e-15));
    REQUIRE(std::get<BinaryProductModel>(r2).mean[1] == Catch::Approx(0.7).margin(1e-15));

    Model mix = ProductMixtureModel(0.333, BinaryProductModel(Vec::Constant(1, 0.5)),
                                    BinaryProductModel(Vec::Constant(1, 0.5)));
    Model rm = round_model_to_grid(mix, 0.1, 1);
    REQUIRE(std::get<ProductMixtureModel>(rm).weight == Catch::Approx(0.3).margin(1e-15));

    // Gaussians pass through untouched
    Model g = GaussianModel::standard(2);
    Model rg = round_model_to_grid(g, 0.1, 2);
    REQUIRE(std::get<GaussianModel>(rg).mean == std::get<GaussianModel>(g).mean);
}

TEST_CASE("round_model_to_grid is idempotent") {
    Rng rng(77);
    for (int it = 0; it < 50; ++it) {
        int d = 1 + static_cast<int>(rng.below(6));
        Vec p(d), q(d);
        for (int j = 0; j < d; ++j) {
            p[j] = rng.uniform();
            q[j] = rng.uniform();
        }
        Model m = ProductMixtureModel(rng.uniform(), BinaryProductModel(p), BinaryProductModel(q));
        double eps = 0.05 + 0.3 * rng.uniform();
        Model once = round_model_to_grid(m, eps, d);
        Model twice = round_model_to_grid(once, eps, d);
        const auto& a = std::get<ProductMixtureModel>(once);
        const auto& b = std::get<ProductMixtureModel>(twice);
        REQUIRE(a.weight == b.weight);
        REQUIRE(a.component_p.mean == b.component_p.mean);
        REQUIRE(a.component_q.mean == b.component_q.mean);
    }
}

TEST_CASE("sample set CSV round trip") {
    Mat data(3, 2);
    data << 0.25, -1.5, 3.0, 4.0, 1e-17, 123456.789;
    SampleSet s(data, {0, 1, 0});
    std::stringstream ss;
    write_csv(s, ss);
    SampleSet back = read_csv(ss);
    REQUIRE(back.data == s.data);
    REQUIRE(back.corruption_mask.has_value());
    REQUIRE(*back.corruption_mask == *s.corruption_mask);

    // mask-free variant
    SampleSet plain{Mat(data)};
    std::stringstream ss2;
    write_csv(plain, ss2);
    std::string header;
    std::getline(ss2, header);
    REQUIRE(header == "x0,x1");
    ss2.seekg(0);
    SampleSet back2 = read_csv(ss2);
    REQUIRE(back2.data == plain.data);
    REQUIRE_FALSE(back2.corruption_mask.has_value());
}

TEST_CASE("model invariants are validated") {
    REQUIRE_THROWS_AS(BinaryProductModel(Vec::Constant(2, 1.5)), ParameterError);
    Mat asym(2, 2);
    asym << 1.0, 0.5, 0.2, 1.0;
    REQUIRE_THROWS_AS(GaussianModel(Vec::Zero(2), asym), ParameterError);
    REQUIRE_THROWS_AS(ProductMixtureModel(1.5, BinaryProductModel(Vec::Constant(1, 0.5)),
                                          BinaryProductModel(Vec::Constant(1, 0.5))),
                      ParameterError);
}
