#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "robustlearn/bench.hpp"

using namespace robustlearn;

namespace {

nlohmann::json base_config() {
    return nlohmann::json::parse(R"({
        "model": {"kind": "standard_gaussian"},
        "dims": [4],
        "n_rule": {"values": [500]},
        "epsilons": [0.1],
        "adversary": {"kind": "Full", "strategy": "MeanShift"},
        "estimators": ["empirical_mean"],
        "trials": 2,
        "seed": 7
    })");
}

}  // namespace

TEST_CASE("config parsing rejects unknown fields") {
    auto j = base_config();
    j["surprise"] = 1;
    REQUIRE_THROWS_AS(parse_experiment_config(j), ParameterError);

    auto j2 = base_config();
    j2["model"]["typo"] = true;
    REQUIRE_THROWS_AS(parse_experiment_config(j2), ParameterError);

    auto j3 = base_config();
    j3["adversary"]["strategy"] = "NoSuchAttack";
    REQUIRE_THROWS_AS(parse_experiment_config(j3), ParameterError);
}

TEST_CASE("unknown estimators abort before sampling") {
    auto j = base_config();
    j["estimators"] = {"empirical_mean", "wishful_thinking"};
    ExperimentConfig cfg = parse_experiment_config(j);
    REQUIRE_THROWS_AS(run_sweep(cfg), ParameterError);
}

TEST_CASE("single-cell sweep yields a single row") {
    ExperimentConfig cfg = parse_experiment_config(base_config());
    cfg.trials = 1;
    std::ostringstream os;
    run_sweep_csv(cfg, os);
    std::string text = os.str();
    long lines = std::count(text.begin(), text.end(), '\n');
    REQUIRE(lines == 2);  // header + one row
    REQUIRE(text.rfind("d,N,epsilon,adversary,estimator,trial,", 0) == 0);
}

TEST_CASE("row count is the size of the config grid") {
    auto j = base_config();
    j["dims"] = {2, 4};
    j["n_rule"] = {{"values", {300, 300}}};
    j["epsilons"] = {0.05, 0.1};
    j["estimators"] = {"empirical_mean", "coordinate_median"};
    j["trials"] = 3;
    ExperimentConfig cfg = parse_experiment_config(j);
    std::vector<TrialResult> rows = run_sweep(cfg);
    REQUIRE(rows.size() == 2u * 2u * 2u * 3u);
}

TEST_CASE("sweeps are byte-identical across runs") {
    auto j = base_config();
    j["estimators"] = {"empirical_mean", "filter_gaussian_mean", "geometric_median"};
    ExperimentConfig cfg = parse_experiment_config(j);
    std::ostringstream a, b;
    run_sweep_csv(cfg, a);
    run_sweep_csv(cfg, b);
    REQUIRE(a.str() == b.str());
    REQUIRE_FALSE(a.str().empty());
}

TEST_CASE("identical seeds give identical rows and estimators share data") {
    ExperimentConfig cfg = parse_experiment_config(base_config());
    TrialResult r1 = run_trial(cfg, 0, 0.1, "empirical_mean", 0);
    TrialResult r2 = run_trial(cfg, 0, 0.1, "empirical_mean", 0);
    REQUIRE(r1.l2_mean_error == r2.l2_mean_error);

    // eps = 0: filter matches the clean empirical error closely
    TrialResult clean_f = run_trial(cfg, 0, 0.0, "filter_gaussian_mean", 0);
    TrialResult clean_e = run_trial(cfg, 0, 0.0, "empirical_mean", 0);
    REQUIRE(clean_f.converged);
    REQUIRE(*clean_f.l2_mean_error <= 2.0 * *clean_e.l2_mean_error + 1e-12);
}

TEST_CASE("mean-shift trials show the contamination bias on the empirical mean") {
    auto j = base_config();
    j["dims"] = {16};
    j["n_rule"] = {{"values", {20000}}};
    j["adversary"]["scale"] = 4.0;  // shift magnitude s
    ExperimentConfig cfg = parse_experiment_config(j);
    TrialResult r = run_trial(cfg, 0, 0.1, "empirical_mean", 0);
    // closed-form contamination bias is about eps * s = 0.4 (deletion of
    // opposed points pushes it slightly higher)
    REQUIRE(*r.l2_mean_error >= 0.5 * 0.1 * 4.0);
}

TEST_CASE("filter trials report mask-based removal counts") {
    auto j = base_config();
    j["dims"] = {8};
    j["n_rule"] = {{"values", {20000}}};
    j["estimators"] = {"filter_gaussian_mean"};
    ExperimentConfig cfg = parse_experiment_config(j);
    TrialResult r = run_trial(cfg, 0, 0.1, "filter_gaussian_mean", 0);
    REQUIRE(r.removed_corrupt + r.removed_clean >= 0);
    if (r.removed_corrupt + r.removed_clean > 0) REQUIRE(r.removed_corrupt >= r.removed_clean);
    REQUIRE(r.converged);
}

TEST_CASE("estimator listing is stable") {
    const auto& names = estimator_names();
    REQUIRE(std::find(names.begin(), names.end(), "filter_gaussian_mean") != names.end());
    REQUIRE(std::find(names.begin(), names.end(), "product_mixture") != names.end());
}
