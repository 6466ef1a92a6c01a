// Command-line front end: data generation, arm training, WD reports and
// experiment runs.
//
// Exit codes: 0 success, 1 configuration/validation error, 2 I/O error,
// 3 internal failure (protocol or state invariant broken).

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "uss/env/data.hpp"
#include "uss/env/oracle.hpp"
#include "uss/experiment.hpp"
#include "uss/io/format.hpp"
#include "uss/io/snapshot.hpp"

namespace {

int gen_synth(std::size_t n, std::uint64_t seed, const std::string& out) {
    const auto data = uss::generate_synthetic(n, seed);
    uss::write_dataset(out, data, uss::synthetic_feature_names());
    std::size_t positives = 0;
    for (const auto& c : data) positives += c.y == 1 ? 1 : 0;
    std::printf("wrote %zu samples (%zu labelled 1) to %s\n", data.size(), positives, out.c_str());
    return 0;
}

void print_wd(const uss::ContextPool& pool) {
    const auto s = uss::summarize_xi(pool.xi);
    std::printf("contexts      %zu\n", pool.size());
    std::printf("wd_fraction   %s\n", uss::format_double(pool.wd_fraction()).c_str());
    std::printf("xi i*=K       %zu\n", s.infinite);
    for (const auto& [level, value] : s.quantiles) {
        std::printf("xi q%-9s %s\n", uss::format_double(level).c_str(), uss::format_double(value).c_str());
    }
    std::vector<std::size_t> hist;
    for (std::size_t a : pool.i_star) {
        if (a >= hist.size()) hist.resize(a + 1, 0);
        ++hist[a];
    }
    std::printf("i* histogram ");
    for (std::size_t a = 0; a < hist.size(); ++a) std::printf(" %zu:%zu", a + 1, hist[a]);
    std::printf("\n");
}

int train_arms(const std::string& config, const std::string& out) {
    const auto cfg = uss::load_experiment(config);
    const auto built = uss::build_instance(cfg);
    for (std::size_t a = 0; a < built.training.size(); ++a) {
        const auto& t = built.training[a];
        double err = 0.0;
        for (const auto& c : built.contexts) {
            const double mu = t.arm.probability(c.x);
            err += c.y == 1 ? 1.0 - mu : mu;
        }
        std::printf("arm %zu  features %zu  mean error %.4f  iterations %d%s%s\n", a + 1, t.arm.feature_count(),
                    err / static_cast<double>(built.contexts.size()), t.iterations, t.projected ? "  projected" : "",
                    t.degenerate ? "  degenerate" : "");
    }
    uss::save_instance(out, built.instance);
    print_wd(uss::ContextPool::build(built.instance, built.contexts));
    std::printf("instance written to %s\n", out.c_str());
    return 0;
}

int wd_report(const std::string& instance_path, const std::string& data_path, const std::string& label) {
    const auto inst = uss::load_instance(instance_path);
    std::vector<std::string> names = inst.feature_names;
    if (names.empty()) {
        for (std::size_t k = 0; k < inst.context_dim(); ++k) names.push_back("x" + std::to_string(k + 1));
    }
    // Snapshots of synthetic instances carry no scaling: their data already lives in [-1, 1].
    std::vector<uss::ColumnScaling> scaling = inst.scaling;
    if (scaling.empty()) scaling.assign(inst.context_dim(), uss::ColumnScaling{-1.0, 1.0});
    auto loaded = uss::load_dataset(data_path, {names, label}, scaling);
    print_wd(uss::ContextPool::build(inst, std::move(loaded.samples)));
    return 0;
}

struct RunOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<long long> reps;
    std::optional<long long> horizon;
    std::optional<long long> jobs;
    std::optional<std::string> out;
    bool no_rounds = false;
};

int run(const std::string& config, const RunOverrides& o) {
    auto cfg = uss::load_experiment(config);
    if (o.seed) cfg.sim.seed = *o.seed;
    if (o.reps) {
        if (*o.reps < 1) throw uss::ConfigError("--reps must be >= 1");
        cfg.sim.repetitions = static_cast<std::size_t>(*o.reps);
    }
    if (o.horizon) {
        if (*o.horizon < 1) throw uss::ConfigError("--horizon must be >= 1");
        cfg.sim.horizon = static_cast<std::size_t>(*o.horizon);
    }
    if (o.jobs) {
        if (*o.jobs < 1) throw uss::ConfigError("--jobs must be >= 1");
        cfg.sim.jobs = static_cast<std::size_t>(*o.jobs);
    }
    if (o.out) cfg.output = *o.out;
    if (o.no_rounds) cfg.write_rounds = false;

    const auto res = uss::run_experiment(cfg);
    uss::write_outputs(cfg, res);
    std::printf("%s: K=%zu, %zu contexts, wd_fraction %s, T=%zu, R=%zu\n", cfg.name.c_str(),
                res.built.instance.arm_count(), res.pool.size(), uss::format_double(res.pool.wd_fraction()).c_str(),
                cfg.sim.horizon, cfg.sim.repetitions);
    for (std::size_t p = 0; p < cfg.policies.size(); ++p) {
        const auto regret = uss::aggregate_metric(res.runs, p, uss::Metric::regret);
        const auto cost = uss::aggregate_metric(res.runs, p, uss::Metric::cost);
        std::printf("  %-16s regret %10.3f [%10.3f, %10.3f]   cost %10.3f\n", cfg.policies[p].name.c_str(),
                    regret.mean.back(), regret.ci_low.back(), regret.ci_high.back(), cost.mean.back());
    }
    std::printf("outputs in %s\n", cfg.output.c_str());
    return 0;
}

int aggregate(const std::string& runs_dir, const std::string& out) {
    const auto text = uss::aggregate_round_files(runs_dir);
    if (out.empty() || out == "-") {
        std::cout << text;
    } else {
        uss::write_text_file(out, text);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Unsupervised sequential selection simulator"};
    app.require_subcommand(1);
    app.set_version_flag("--version", uss::version);

    auto* gen = app.add_subcommand("gen-synth", "generate the 3-feature synthetic dataset as CSV");
    std::size_t n = 5000;
    std::uint64_t gen_seed = 7;
    std::string gen_out;
    gen->add_option("--n", n, "number of samples")->check(CLI::PositiveNumber);
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_option("--out", gen_out, "output CSV")->required();

    auto* train = app.add_subcommand("train-arms", "train the arms of a config and write an instance snapshot");
    std::string train_cfg;
    std::string train_out;
    train->add_option("--config", train_cfg, "experiment config (JSON)")->required();
    train->add_option("--out", train_out, "instance snapshot to write")->required();

    auto* wd = app.add_subcommand("wd-report", "WD fraction and margin quantiles of an instance over a dataset");
    std::string wd_inst;
    std::string wd_data;
    std::string wd_label = "label";
    wd->add_option("--instance", wd_inst, "instance snapshot")->required();
    wd->add_option("--data", wd_data, "dataset CSV")->required();
    wd->add_option("--label", wd_label, "label column name");

    auto* runc = app.add_subcommand("run", "run an experiment");
    std::string run_cfg;
    RunOverrides ov;
    runc->add_option("--config", run_cfg, "experiment config (JSON)")->required();
    runc->add_option("--seed", ov.seed, "global seed");
    runc->add_option("--reps", ov.reps, "repetitions");
    runc->add_option("--horizon", ov.horizon, "rounds per repetition");
    runc->add_option("--jobs", ov.jobs, "parallel repetition workers");
    runc->add_option("--out", ov.out, "output directory");
    runc->add_flag("--no-rounds", ov.no_rounds, "skip per-run round files");

    auto* agg = app.add_subcommand("aggregate", "recompute aggregate.csv from per-run round files");
    std::string agg_dir;
    std::string agg_out;
    agg->add_option("--runs", agg_dir, "rounds directory (one sub-directory per policy)")->required();
    agg->add_option("--out", agg_out, "output CSV ('-' for stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (*gen) return gen_synth(n, gen_seed, gen_out);
        if (*train) return train_arms(train_cfg, train_out);
        if (*wd) return wd_report(wd_inst, wd_data, wd_label);
        if (*runc) return run(run_cfg, ov);
        if (*agg) return aggregate(agg_dir, agg_out);
    } catch (const uss::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const uss::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
