#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "uss/experiment.hpp"

using namespace uss;
namespace fs = std::filesystem;

namespace {

Json tiny_config() {
    return Json::parse(R"({
        "name": "tiny",
        "instance": {
            "source": "synthetic", "n": 300, "seed": 2,
            "costs": [0.01, 0.05, 0.12],
            "arms": [
                {"columns": [1], "input": "linear", "regularization": 0.01},
                {"columns": ["x1", "x2"], "input": "linear", "regularization": 0.01},
                {"columns": [1, 2, 3], "input": "quadratic", "regularization": 0.001}
            ]
        },
        "kappa": 0.25,
        "s_bound": 100,
        "policies": [
            {"name": "a_uss", "kind": "uss_pd", "radius": "pair_count"},
            {"name": "b_fixed", "kind": "fixed", "arm": 2},
            {"name": "c_random", "kind": "random"}
        ],
        "horizon": 120,
        "repetitions": 3,
        "seed": 5
    })");
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string config_error(const Json& j) {
    try {
        parse_experiment(j);
    } catch (const ConfigError& e) {
        return e.what();
    }
    ADD_FAILURE() << "expected ConfigError";
    return {};
}

}  // namespace

TEST(ParseExperiment, DefaultsAndColumns) {
    const auto cfg = parse_experiment(tiny_config(), "/base");
    EXPECT_EQ(cfg.name, "tiny");
    EXPECT_EQ(cfg.source, ExperimentConfig::Source::synthetic);
    EXPECT_EQ(cfg.arms[1].columns, (std::vector<std::size_t>{0, 1}));
    EXPECT_EQ(cfg.arms[2].input, ArmInput::quadratic);
    EXPECT_EQ(cfg.sim.order, ContextOrder::iid);
    EXPECT_EQ(cfg.sim.horizon, 120u);
    EXPECT_EQ(cfg.output, "/base/out/tiny");
    EXPECT_TRUE(cfg.write_rounds);
    ASSERT_EQ(cfg.policies.size(), 3u);
    EXPECT_EQ(cfg.policies[0].spec.radius, RadiusMode::pair_count);
    EXPECT_EQ(cfg.policies[0].spec.resolved_kappa(), 0.25);
    EXPECT_EQ(cfg.policies[0].spec.s_bound, 100.0);
    EXPECT_EQ(cfg.policies[1].spec.fixed_arm, 1u);
    // Serialising and parsing again gives the same document.
    EXPECT_EQ(experiment_to_json(parse_experiment(experiment_to_json(cfg))).dump(), experiment_to_json(cfg).dump());
}

TEST(ParseExperiment, RejectsBadDocuments) {
    auto j = tiny_config();
    j["instance"].erase("costs");
    EXPECT_NE(config_error(j).find("costs"), std::string::npos);

    j = tiny_config();
    j["instance"]["costs"] = Json::array({0.1, 0.2});
    EXPECT_NE(config_error(j).find("3 arms but 2 costs"), std::string::npos);

    j = tiny_config();
    j["instance"]["arms"][0]["columns"] = Json::array({4});
    EXPECT_NE(config_error(j).find("column 4"), std::string::npos);

    j = tiny_config();
    j["instance"]["arms"][0]["columns"] = Json::array({"x9"});
    EXPECT_NE(config_error(j).find("unknown feature 'x9'"), std::string::npos);

    j = tiny_config();
    j["policies"][1]["name"] = "a_uss";
    EXPECT_NE(config_error(j).find("duplicate"), std::string::npos);

    j = tiny_config();
    j["policies"][0]["kind"] = "oracle";
    EXPECT_NE(config_error(j).find("unknown policy kind"), std::string::npos);

    j = tiny_config();
    j["policies"][0]["name"] = "a/b";
    config_error(j);

    j = tiny_config();
    j["horizon"] = 0;
    config_error(j);

    j = tiny_config();
    j["order"] = "shuffled";
    config_error(j);

    j = tiny_config();
    j["instance"]["source"] = "sql";
    config_error(j);

    j = tiny_config();
    j["kappa"] = 0.5;
    j["horizon"] = 10;
    auto cfg = parse_experiment(j);
    EXPECT_THROW(run_experiment(cfg), ConfigError);

    EXPECT_THROW(load_experiment("/nonexistent/uss.json"), IoError);
}

TEST(SummarizeXi, QuantilesAndInfiniteCount) {
    const double inf = std::numeric_limits<double>::infinity();
    const auto s = summarize_xi({0.3, inf, -0.1, 0.2, inf, 0.0});
    EXPECT_EQ(s.infinite, 2u);
    ASSERT_EQ(s.quantiles.size(), 8u);
    EXPECT_EQ(s.quantiles.front().second, -0.1);
    EXPECT_EQ(s.quantiles.back().second, 0.3);
}

TEST(WriteOutputs, FilesAndReaggregation) {
    auto cfg = parse_experiment(tiny_config());
    const fs::path dir = fs::temp_directory_path() / "uss_experiment_outputs";
    fs::remove_all(dir);
    cfg.output = dir.string();
    const auto res = run_experiment(cfg);
    write_outputs(cfg, res);

    for (const char* f : {"instance.json", "metadata.json", "aggregate.csv", "wd_decomposition.csv"}) {
        EXPECT_TRUE(fs::exists(dir / f)) << f;
    }
    const auto first = slurp(dir / "rounds" / "a_uss" / "run_0000.csv");
    EXPECT_EQ(first.substr(0, first.find('\n') + 1), round_csv_header());
    EXPECT_TRUE(fs::exists(dir / "rounds" / "c_random" / "run_0002.csv"));

    // Policy directories sort in config order here, so the recomputed file is identical.
    EXPECT_EQ(aggregate_round_files((dir / "rounds").string()), slurp(dir / "aggregate.csv"));

    const auto meta = Json::parse(slurp(dir / "metadata.json"));
    EXPECT_EQ(meta["instance"]["arm_count"], 3);
    EXPECT_EQ(meta["policies"].size(), 3u);
    EXPECT_EQ(meta["policies"][0]["exploration_rounds"].size(), 3u);
    EXPECT_EQ(meta["seeds"]["global"], 5);
    EXPECT_EQ(load_instance((dir / "instance.json").string()).arms[2].theta, res.built.instance.arms[2].theta);

    // Same config, same bytes.
    const auto agg = slurp(dir / "aggregate.csv");
    cfg.sim.jobs = 2;
    write_outputs(cfg, run_experiment(cfg));
    EXPECT_EQ(slurp(dir / "aggregate.csv"), agg);
    EXPECT_EQ(slurp(dir / "rounds" / "a_uss" / "run_0000.csv"), first);
    fs::remove_all(dir);
}

TEST(AggregateRoundFiles, Errors) {
    EXPECT_THROW(aggregate_round_files("/nonexistent/rounds"), IoError);
    const fs::path dir = fs::temp_directory_path() / "uss_empty_rounds";
    fs::create_directories(dir / "p");
    EXPECT_THROW(aggregate_round_files(dir.string()), DataError);
    std::ofstream(dir / "p" / "run_0000.csv") << "wrong,header\n";
    EXPECT_THROW(aggregate_round_files(dir.string()), DataError);
    fs::remove_all(dir);
}
