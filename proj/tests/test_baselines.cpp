#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "robustlearn/baselines.hpp"
#include "robustlearn/rng.hpp"

using namespace robustlearn;

TEST_CASE("empirical mean") {
    Mat two(2, 2);
    two << 1, 0, 0, 1;
    Vec m = empirical_mean(SampleSet{Mat(two)});
    REQUIRE(m[0] == Catch::Approx(0.5));
    REQUIRE(m[1] == Catch::Approx(0.5));

    Mat one(1, 3);
    one << 4, 5, 6;
    REQUIRE(empirical_mean(SampleSet{Mat(one)}) == one.row(0).transpose());

    Rng rng(91);
    Mat x(20, 4);
    for (int i = 0; i < 20; ++i)
        for (int j = 0; j < 4; ++j) x(i, j) = rng.normal();
    Vec got = empirical_mean(SampleSet{Mat(x)});
    Vec oracle = Vec::Zero(4);
    for (int i = 0; i < 20; ++i) oracle += x.row(i).transpose() / 20.0;
    REQUIRE((got - oracle).norm() < 1e-12);
}

TEST_CASE("coordinate median uses the lower median") {
    Mat odd(3, 1);
    odd << 1, 2, 100;
    REQUIRE(coordinate_median(SampleSet{Mat(odd)})[0] == 2.0);

    Mat even(2, 1);
    even << 1, 2;
    REQUIRE(coordinate_median(SampleSet{Mat(even)})[0] == 1.0);

    // permutation invariance
    Mat x(5, 2);
    x << 3, 1, 1, 5, 4, 2, 2, 4, 5, 3;
    Mat shuffled(5, 2);
    shuffled << 5, 3, 1, 5, 3, 1, 4, 2, 2, 4;
    REQUIRE(coordinate_median(SampleSet{Mat(x)}) == coordinate_median(SampleSet{Mat(shuffled)}));
}

TEST_CASE("geometric median basics") {
    Mat one(1, 2);
    one << 7, -3;
    REQUIRE(geometric_median(SampleSet{Mat(one)}) == one.row(0).transpose());

    // collinear 1-d points: the median point minimizes the L1 objective
    Mat line(3, 1);
    line << 0, 1, 10;
    Vec v = geometric_median(SampleSet{Mat(line)});
    REQUIRE(v[0] == Catch::Approx(1.0).margin(1e-6));

    // symmetric cross around the origin
    Mat cross(4, 2);
    cross << 1, 0, -1, 0, 0, 1, 0, -1;
    Vec c = geometric_median(SampleSet{Mat(cross)});
    REQUIRE(c.norm() < 1e-6);
}

TEST_CASE("geometric median objective dominates other centers") {
    Rng rng(92);
    Mat x(50, 3);
    for (int i = 0; i < 50; ++i)
        for (int j = 0; j < 3; ++j) x(i, j) = rng.normal() + (i < 5 ? 10.0 : 0.0);
    SampleSet s{Mat(x)};
    Vec gm = geometric_median(s);
    REQUIRE(geometric_median_objective(s, gm) <=
            geometric_median_objective(s, empirical_mean(s)) + 1e-9);
    REQUIRE(geometric_median_objective(s, gm) <=
            geometric_median_objective(s, coordinate_median(s)) + 1e-9);
}
