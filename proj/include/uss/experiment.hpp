#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "uss/env/data.hpp"
#include "uss/env/instance.hpp"
#include "uss/env/training.hpp"
#include "uss/errors.hpp"
#include "uss/io/format.hpp"
#include "uss/io/snapshot.hpp"
#include "uss/simulation.hpp"
#include "uss/version.hpp"

namespace uss {

struct ArmConfig {
    std::vector<std::size_t> columns;  // 0-based into the context
    ArmInput input = ArmInput::linear;
    double regularization = 1e-3;
};

struct NamedPolicy {
    std::string name;
    PolicySpec spec;
};

struct ExperimentConfig {
    enum class Source { synthetic, csv };

    std::string name;
    Source source = Source::synthetic;
    std::size_t synthetic_n = 5000;
    std::uint64_t synthetic_seed = 7;
    std::string data_path;  // resolved against the config file's directory
    std::vector<std::string> features;
    std::string label = "label";
    std::optional<std::string> instance_file;  // pre-trained instance snapshot

    std::vector<double> costs;
    std::vector<double> tradeoff;
    std::vector<ArmConfig> arms;
    TrainingControls training;

    std::vector<NamedPolicy> policies;
    SimulationOptions sim;
    std::string output = "out";
    bool write_rounds = true;
};

namespace detail {

inline std::string resolve_path(const std::string& p, const std::string& base) {
    if (p.empty() || base.empty()) return p;
    const std::filesystem::path path(p);
    if (path.is_absolute()) return p;
    return (std::filesystem::path(base) / path).lexically_normal().string();
}

template <class T>
T get_as(const Json& j, const char* key, const std::string& where, T fallback) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(where + "." + key + ": wrong type");
    }
}

inline std::size_t column_index(const Json& c, const std::vector<std::string>& names, const std::string& where) {
    if (c.is_string()) {
        const auto name = c.get<std::string>();
        const auto it = std::find(names.begin(), names.end(), name);
        if (it == names.end()) throw ConfigError(where + ": unknown feature '" + name + "'");
        return static_cast<std::size_t>(it - names.begin());
    }
    if (!c.is_number_integer()) throw ConfigError(where + ": columns are 1-based integers or feature names");
    const auto v = c.get<long long>();
    if (v < 1 || static_cast<std::size_t>(v) > names.size()) {
        throw ConfigError(where + ": column " + std::to_string(v) + " is not in [1, " + std::to_string(names.size()) +
                          "]");
    }
    return static_cast<std::size_t>(v - 1);
}

}  // namespace detail

// Parses an experiment document. Relative paths are taken relative to base_dir.
inline ExperimentConfig parse_experiment(const Json& j, const std::string& base_dir = "") {
    using detail::get_as;
    if (!j.is_object()) throw ConfigError("config: top level must be an object");
    ExperimentConfig cfg;
    cfg.name = get_as<std::string>(j, "name", "config", "experiment");

    const auto& src = detail::require(j, "instance", "config");
    const std::string kind = get_as<std::string>(src, "source", "instance", "synthetic");
    std::vector<std::string> names;
    if (kind == "synthetic") {
        cfg.source = ExperimentConfig::Source::synthetic;
        const auto n = get_as<long long>(src, "n", "instance", 5000);
        if (n < 1) throw ConfigError("instance.n must be >= 1");
        cfg.synthetic_n = static_cast<std::size_t>(n);
        cfg.synthetic_seed = get_as<std::uint64_t>(src, "seed", "instance", 7);
        names = synthetic_feature_names();
    } else if (kind == "csv") {
        cfg.source = ExperimentConfig::Source::csv;
        cfg.data_path = detail::resolve_path(detail::require(src, "path", "instance").get<std::string>(), base_dir);
        cfg.features = get_as<std::vector<std::string>>(src, "features", "instance", {});
        if (cfg.features.empty()) throw ConfigError("instance.features must name at least one column");
        cfg.label = get_as<std::string>(src, "label", "instance", "label");
        names = cfg.features;
    } else {
        throw ConfigError("instance.source must be 'synthetic' or 'csv'");
    }
    if (src.contains("instance_file")) {
        cfg.instance_file = detail::resolve_path(src.at("instance_file").get<std::string>(), base_dir);
    }

    cfg.costs = detail::as_doubles(detail::require(src, "costs", "instance"), "instance.costs");
    if (src.contains("tradeoff")) cfg.tradeoff = detail::as_doubles(src.at("tradeoff"), "instance.tradeoff");
    if (!cfg.instance_file) {
        const auto& arms = detail::require(src, "arms", "instance");
        if (!arms.is_array() || arms.empty()) throw ConfigError("instance.arms must be a non-empty array");
        for (std::size_t a = 0; a < arms.size(); ++a) {
            const std::string where = "instance.arms[" + std::to_string(a + 1) + "]";
            ArmConfig arm;
            for (const auto& c : detail::require(arms[a], "columns", where)) {
                arm.columns.push_back(detail::column_index(c, names, where));
            }
            if (arm.columns.empty()) throw ConfigError(where + ": needs at least one column");
            arm.input = arm_input_from_string(get_as<std::string>(arms[a], "input", where, "linear"));
            arm.regularization = get_as<double>(arms[a], "regularization", where, 1e-3);
            cfg.arms.push_back(std::move(arm));
        }
        if (cfg.arms.size() != cfg.costs.size()) {
            throw ConfigError("instance: " + std::to_string(cfg.arms.size()) + " arms but " +
                              std::to_string(cfg.costs.size()) + " costs");
        }
    }
    if (src.contains("training")) {
        const auto& t = src.at("training");
        cfg.training.s_bound = get_as<double>(t, "s_bound", "instance.training", cfg.training.s_bound);
        cfg.training.max_iterations = get_as<int>(t, "max_iterations", "instance.training", cfg.training.max_iterations);
    }

    PolicySpec defaults;
    defaults.delta = get_as<double>(j, "delta", "config", defaults.delta);
    defaults.sigma = get_as<double>(j, "sigma", "config", defaults.sigma);
    if (j.contains("kappa") && !j.at("kappa").is_null()) defaults.kappa = j.at("kappa").get<double>();
    defaults.s_bound = get_as<double>(j, "s_bound", "config", defaults.s_bound);

    const auto& pols = detail::require(j, "policies", "config");
    if (!pols.is_array() || pols.empty()) throw ConfigError("config.policies must be a non-empty array");
    for (std::size_t p = 0; p < pols.size(); ++p) {
        NamedPolicy np;
        np.spec = policy_spec_from_json(pols[p], defaults);
        np.name = get_as<std::string>(pols[p], "name", "policy", to_string(np.spec.kind));
        if (np.name.empty() || np.name.find_first_of("/\\,\"\n") != std::string::npos) {
            throw ConfigError("policy name '" + np.name + "' must be non-empty and free of / \\ , \" and newlines");
        }
        for (const auto& other : cfg.policies) {
            if (other.name == np.name) throw ConfigError("duplicate policy name '" + np.name + "'");
        }
        cfg.policies.push_back(std::move(np));
    }

    const auto horizon = get_as<long long>(j, "horizon", "config", 5000);
    const auto reps = get_as<long long>(j, "repetitions", "config", 100);
    if (horizon < 1) throw ConfigError("config.horizon must be >= 1");
    if (reps < 1) throw ConfigError("config.repetitions must be >= 1");
    cfg.sim.horizon = static_cast<std::size_t>(horizon);
    cfg.sim.repetitions = static_cast<std::size_t>(reps);
    cfg.sim.seed = get_as<std::uint64_t>(j, "seed", "config", 1);
    const auto jobs = get_as<long long>(j, "jobs", "config", 1);
    if (jobs < 1) throw ConfigError("config.jobs must be >= 1");
    cfg.sim.jobs = static_cast<std::size_t>(jobs);
    const std::string order = get_as<std::string>(
        j, "order", "config", cfg.source == ExperimentConfig::Source::synthetic ? "iid" : "round_robin");
    if (order == "iid") {
        cfg.sim.order = ContextOrder::iid;
    } else if (order == "round_robin") {
        cfg.sim.order = ContextOrder::round_robin;
    } else {
        throw ConfigError("config.order must be 'iid' or 'round_robin'");
    }
    cfg.output = detail::resolve_path(get_as<std::string>(j, "output", "config", "out/" + cfg.name), base_dir);
    cfg.write_rounds = get_as<bool>(j, "write_rounds", "config", true);
    return cfg;
}

inline ExperimentConfig load_experiment(const std::string& path) {
    const auto base = std::filesystem::path(path).parent_path().string();
    return parse_experiment(read_json_file(path), base);
}

// Resolved configuration, written into the metadata document.
inline Json experiment_to_json(const ExperimentConfig& cfg) {
    Json j;
    j["name"] = cfg.name;
    Json src;
    if (cfg.source == ExperimentConfig::Source::synthetic) {
        src["source"] = "synthetic";
        src["n"] = cfg.synthetic_n;
        src["seed"] = cfg.synthetic_seed;
    } else {
        src["source"] = "csv";
        src["path"] = cfg.data_path;
        src["features"] = cfg.features;
        src["label"] = cfg.label;
    }
    if (cfg.instance_file) src["instance_file"] = *cfg.instance_file;
    src["costs"] = cfg.costs;
    if (!cfg.tradeoff.empty()) src["tradeoff"] = cfg.tradeoff;
    Json arms = Json::array();
    for (const auto& a : cfg.arms) {
        std::vector<std::size_t> cols;
        for (std::size_t c : a.columns) cols.push_back(c + 1);
        arms.push_back({{"columns", cols}, {"input", to_string(a.input)}, {"regularization", a.regularization}});
    }
    src["arms"] = arms;
    src["training"] = {{"s_bound", cfg.training.s_bound}, {"max_iterations", cfg.training.max_iterations}};
    j["instance"] = src;
    Json pols = Json::array();
    for (const auto& p : cfg.policies) {
        Json pj = {{"name", p.name}};
        pj.update(policy_spec_to_json(p.spec));
        pols.push_back(pj);
    }
    j["policies"] = pols;
    j["horizon"] = cfg.sim.horizon;
    j["repetitions"] = cfg.sim.repetitions;
    j["seed"] = cfg.sim.seed;
    j["order"] = cfg.sim.order == ContextOrder::iid ? "iid" : "round_robin";
    j["output"] = cfg.output;
    j["write_rounds"] = cfg.write_rounds;
    return j;
}

struct BuiltInstance {
    ProblemInstance instance;
    Dataset contexts;
    std::vector<std::string> feature_names;
    std::vector<TrainedArm> training;  // empty when loaded from a snapshot
};

inline BuiltInstance build_instance(const ExperimentConfig& cfg) {
    BuiltInstance out;
    std::vector<ColumnScaling> scaling;
    if (cfg.source == ExperimentConfig::Source::synthetic) {
        out.contexts = generate_synthetic(cfg.synthetic_n, cfg.synthetic_seed);
        out.feature_names = synthetic_feature_names();
    } else {
        auto loaded = load_dataset(cfg.data_path, {cfg.features, cfg.label});
        out.contexts = std::move(loaded.samples);
        out.feature_names = std::move(loaded.feature_names);
        scaling = std::move(loaded.scaling);
    }
    const std::size_t d = out.feature_names.size();

    if (cfg.instance_file) {
        out.instance = load_instance(*cfg.instance_file);
        if (out.instance.context_dim() != d) {
            throw ConfigError("instance_file: context dimension " + std::to_string(out.instance.context_dim()) +
                              " does not match the data (" + std::to_string(d) + ")");
        }
        if (out.instance.costs != cfg.costs) throw ConfigError("instance_file: costs differ from the config");
        return out;
    }

    std::vector<ArmModel> arms;
    for (const auto& a : cfg.arms) {
        out.training.push_back(train_arm(out.contexts, a.columns, a.regularization, a.input, cfg.training));
        arms.push_back(out.training.back().arm);
    }
    out.instance = ProblemInstance::make(std::move(arms), cfg.costs, d, cfg.tradeoff);
    out.instance.feature_names = out.feature_names;
    out.instance.scaling = std::move(scaling);
    out.instance.validate();
    return out;
}

// Quantiles of the finite margins plus the count of i* = K contexts (margin +inf).
struct XiSummary {
    std::size_t infinite = 0;
    std::vector<std::pair<double, double>> quantiles;  // (level, value)
};

inline XiSummary summarize_xi(const std::vector<double>& xi) {
    XiSummary s;
    std::vector<double> finite;
    for (double v : xi) {
        if (std::isinf(v)) {
            ++s.infinite;
        } else {
            finite.push_back(v);
        }
    }
    std::sort(finite.begin(), finite.end());
    for (double q : {0.0, 0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 1.0}) {
        if (finite.empty()) break;
        const auto k = static_cast<std::size_t>(std::llround(q * static_cast<double>(finite.size() - 1)));
        s.quantiles.emplace_back(q, finite[k]);
    }
    return s;
}

struct ExperimentResult {
    BuiltInstance built;
    ContextPool pool;
    std::vector<std::vector<PolicyRun>> runs;  // [rep][policy]
};

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    ExperimentResult res;
    res.built = build_instance(cfg);
    res.pool = ContextPool::build(res.built.instance, res.built.contexts);
    std::vector<PolicySpec> specs;
    for (const auto& p : cfg.policies) specs.push_back(p.spec);
    res.runs = simulate(res.built.instance, res.pool, specs, cfg.sim);
    return res;
}

// ---- output ------------------------------------------------------------------

inline const std::vector<Metric>& aggregate_metrics() {
    static const std::vector<Metric> m{Metric::regret, Metric::pseudo_regret, Metric::cost};
    return m;
}

inline std::string round_csv_header() { return "run_id,t,policy,arm,i_star,regret_cum,pseudo_regret_cum,cost_cum,wd_flag\n"; }

inline std::string round_csv(const PolicyRun& run, std::size_t rep, const std::string& policy) {
    const auto regret = metric_series(run, Metric::regret);
    const auto pseudo = metric_series(run, Metric::pseudo_regret);
    const auto cost = metric_series(run, Metric::cost);
    std::string text = round_csv_header();
    text.reserve(run.records.size() * 64);
    for (std::size_t k = 0; k < run.records.size(); ++k) {
        const auto& r = run.records[k];
        text += std::to_string(rep) + ',' + std::to_string(r.t) + ',' + policy + ',' + std::to_string(r.arm + 1) + ',' +
                std::to_string(r.i_star + 1) + ',';
        append_double(text, regret[k]);
        text += ',';
        append_double(text, pseudo[k]);
        text += ',';
        append_double(text, cost[k]);
        text += r.wd ? ",1\n" : ",0\n";
    }
    return text;
}

inline std::string aggregate_csv_header() { return "policy,metric,t,mean,ci_low,ci_high\n"; }

inline void append_aggregate_rows(std::string& text, const std::string& policy, const std::string& metric,
                                  const RunAggregate& agg) {
    for (std::size_t t = 0; t < agg.mean.size(); ++t) {
        text += policy + ',' + metric + ',' + std::to_string(t + 1) + ',';
        append_double(text, agg.mean[t]);
        text += ',';
        append_double(text, agg.ci_low[t]);
        text += ',';
        append_double(text, agg.ci_high[t]);
        text += '\n';
    }
}

inline std::string round_file_name(std::size_t rep) {
    std::string s = std::to_string(rep);
    if (s.size() < 4) s.insert(0, 4 - s.size(), '0');
    return "run_" + s + ".csv";
}

inline void ensure_directory(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) {
        throw IoError("cannot create output directory '" + dir.string() + "'" + (ec ? ": " + ec.message() : ""));
    }
}

inline Json experiment_metadata(const ExperimentConfig& cfg, const ExperimentResult& res) {
    Json m;
    m["config"] = experiment_to_json(cfg);
    const auto& inst = res.built.instance;
    Json ij;
    ij["arm_count"] = inst.arm_count();
    ij["context_count"] = res.pool.size();
    ij["cum_costs"] = inst.cum_costs;
    ij["wd_fraction"] = res.pool.wd_fraction();
    const auto xs = summarize_xi(res.pool.xi);
    Json q = Json::object();
    for (const auto& [level, value] : xs.quantiles) q[format_double(level)] = value;
    ij["xi_quantiles"] = q;
    ij["xi_infinite_count"] = xs.infinite;
    std::vector<std::size_t> hist(inst.arm_count(), 0);
    for (std::size_t a : res.pool.i_star) ++hist[a];
    ij["i_star_histogram"] = hist;
    ij["r_max"] = r_max(inst, res.pool.contexts);
    Json training = Json::array();
    for (const auto& t : res.built.training) {
        training.push_back({{"degenerate", t.degenerate},
                            {"projected", t.projected},
                            {"score_norm", t.score_norm},
                            {"iterations", t.iterations}});
    }
    ij["training"] = training;
    m["instance"] = ij;

    Json pols = Json::array();
    for (std::size_t p = 0; p < cfg.policies.size(); ++p) {
        Json pj;
        pj["name"] = cfg.policies[p].name;
        pj["kind"] = to_string(cfg.policies[p].spec.kind);
        if (learns(cfg.policies[p].spec.kind)) pj["kappa"] = cfg.policies[p].spec.resolved_kappa();
        std::vector<std::size_t> m_used;
        std::size_t warnings = 0;
        std::size_t post = 0;
        std::size_t left = 0;
        for (const auto& rep : res.runs) {
            m_used.push_back(rep[p].exploration_rounds);
            warnings += rep[p].numerical_warnings;
            post += rep[p].post_exploration_rounds;
            left += rep[p].left_selections;
        }
        pj["exploration_rounds"] = m_used;
        pj["numerical_warnings"] = warnings;
        pj["left_selection_fraction"] = post == 0 ? 0.0 : static_cast<double>(left) / static_cast<double>(post);
        Json finals;
        for (Metric metric : {Metric::regret, Metric::pseudo_regret, Metric::cost, Metric::regret_wd,
                              Metric::regret_non_wd}) {
            const auto agg = aggregate_metric(res.runs, p, metric);
            finals[to_string(metric)] = {{"mean", agg.mean.back()},
                                         {"ci_low", agg.ci_low.back()},
                                         {"ci_high", agg.ci_high.back()}};
        }
        pj["final"] = finals;
        pols.push_back(pj);
    }
    m["policies"] = pols;

    Json seeds;
    seeds["global"] = cfg.sim.seed;
    if (cfg.source == ExperimentConfig::Source::synthetic) seeds["synthetic_data"] = cfg.synthetic_seed;
    seeds["streams"] = {{"contexts", stream::contexts},
                        {"feedback", stream::feedback},
                        {"policy_base", stream::policy_base},
                        {"rule", "derive_seed(global, repetition, stream); policy p uses policy_base + p"}};
    m["seeds"] = seeds;
    m["versions"] = {{"uss", version},
                     {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)},
                     {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                           std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                           std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
    return m;
}

// Writes instance.json, metadata.json, aggregate.csv, wd_decomposition.csv and,
// when enabled, rounds/<policy>/run_NNNN.csv.
inline void write_outputs(const ExperimentConfig& cfg, const ExperimentResult& res) {
    const std::filesystem::path dir(cfg.output);
    ensure_directory(dir);
    save_instance((dir / "instance.json").string(), res.built.instance);
    write_text_file((dir / "metadata.json").string(), experiment_metadata(cfg, res).dump(2) + "\n");

    std::string agg = aggregate_csv_header();
    std::string wd = aggregate_csv_header();
    for (std::size_t p = 0; p < cfg.policies.size(); ++p) {
        for (Metric metric : aggregate_metrics()) {
            append_aggregate_rows(agg, cfg.policies[p].name, to_string(metric), aggregate_metric(res.runs, p, metric));
        }
        for (Metric metric : {Metric::regret_wd, Metric::regret_non_wd}) {
            append_aggregate_rows(wd, cfg.policies[p].name, to_string(metric), aggregate_metric(res.runs, p, metric));
        }
    }
    write_text_file((dir / "aggregate.csv").string(), agg);
    write_text_file((dir / "wd_decomposition.csv").string(), wd);

    if (!cfg.write_rounds) return;
    for (std::size_t p = 0; p < cfg.policies.size(); ++p) {
        const auto pdir = dir / "rounds" / cfg.policies[p].name;
        ensure_directory(pdir);
        for (std::size_t rep = 0; rep < res.runs.size(); ++rep) {
            write_text_file((pdir / round_file_name(rep)).string(), round_csv(res.runs[rep][p], rep, cfg.policies[p].name));
        }
    }
}

// ---- re-aggregation from per-run files ------------------------------------------

struct RoundFileColumns {
    std::string policy;
    std::vector<double> regret;
    std::vector<double> pseudo_regret;
    std::vector<double> cost;
};

inline RoundFileColumns read_round_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line) || line + "\n" != round_csv_header()) {
        throw DataError("'" + path + "': unexpected header");
    }
    RoundFileColumns out;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != 9) throw DataError("'" + path + "' row " + std::to_string(row) + ": expected 9 cells");
        if (out.policy.empty()) out.policy = cells[2];
        double v[3];
        for (int k = 0; k < 3; ++k) {
            if (!parse_double(cells[5 + k], v[k])) {
                throw DataError("'" + path + "' row " + std::to_string(row) + ": non-numeric cumulative value");
            }
        }
        out.regret.push_back(v[0]);
        out.pseudo_regret.push_back(v[1]);
        out.cost.push_back(v[2]);
    }
    return out;
}

// Recomputes aggregate.csv from a rounds/ directory. Policies are taken in
// lexicographic order of their directory names.
inline std::string aggregate_round_files(const std::string& rounds_dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(rounds_dir)) throw IoError("'" + rounds_dir + "' is not a directory");
    std::vector<fs::path> policy_dirs;
    for (const auto& e : fs::directory_iterator(rounds_dir)) {
        if (e.is_directory()) policy_dirs.push_back(e.path());
    }
    std::sort(policy_dirs.begin(), policy_dirs.end());
    if (policy_dirs.empty()) throw DataError("'" + rounds_dir + "' holds no policy directories");
    std::string text = aggregate_csv_header();
    for (const auto& pdir : policy_dirs) {
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(pdir)) {
            if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
        }
        std::sort(files.begin(), files.end());
        if (files.empty()) throw DataError("'" + pdir.string() + "' holds no run files");
        std::vector<std::vector<double>> regret, pseudo, cost;
        std::string policy;
        for (const auto& f : files) {
            auto cols = read_round_csv(f.string());
            policy = cols.policy;
            regret.push_back(std::move(cols.regret));
            pseudo.push_back(std::move(cols.pseudo_regret));
            cost.push_back(std::move(cols.cost));
        }
        append_aggregate_rows(text, policy, "regret", aggregate_runs(regret));
        append_aggregate_rows(text, policy, "pseudo_regret", aggregate_runs(pseudo));
        append_aggregate_rows(text, policy, "cost", aggregate_runs(cost));
    }
    return text;
}

}  // namespace uss
