#pragma once

#include <cstddef>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "uss/env/instance.hpp"
#include "uss/errors.hpp"
#include "uss/glm/estimator.hpp"
#include "uss/policy.hpp"

namespace uss {

using Json = nlohmann::ordered_json;

// Doubles are written by the JSON library's shortest round-trip formatter, so a
// snapshot read back reproduces every parameter bit for bit.

inline Json to_json(const Vector& v) {
    Json a = Json::array();
    for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(v[k]);
    return a;
}

inline Json to_json_rowmajor(const Matrix& m) {
    Json a = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) a.push_back(m(r, c));
    }
    return a;
}

namespace detail {

inline const Json& require(const Json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
    return j.at(key);
}

inline double as_double(const Json& j, const std::string& where) {
    if (!j.is_number()) throw ConfigError(where + ": expected a number");
    return j.get<double>();
}

inline std::vector<double> as_doubles(const Json& j, const std::string& where) {
    if (!j.is_array()) throw ConfigError(where + ": expected an array of numbers");
    std::vector<double> out;
    for (const auto& v : j) out.push_back(as_double(v, where));
    return out;
}

inline Vector as_vector(const Json& j, const std::string& where) {
    const auto v = as_doubles(j, where);
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline Matrix as_square(const Json& j, std::size_t dim, const std::string& where) {
    const auto v = as_doubles(j, where);
    if (v.size() != dim * dim) throw ConfigError(where + ": expected " + std::to_string(dim * dim) + " entries");
    Matrix m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (std::size_t r = 0; r < dim; ++r) {
        for (std::size_t c = 0; c < dim; ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v[r * dim + c];
    }
    return m;
}

}  // namespace detail

inline Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
    }
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << text;
    if (!out) throw IoError("write failed for '" + path + "'");
}

// ---- instance ----------------------------------------------------------------

inline Json instance_to_json(const ProblemInstance& inst) {
    Json j;
    j["format"] = "uss-instance";
    j["version"] = 1;
    j["arm_count"] = inst.arm_count();
    j["costs"] = inst.costs;
    j["cum_costs"] = inst.cum_costs;
    j["tradeoff"] = inst.tradeoff;
    j["feature_map"] = {{"input_dim", inst.feature_cfg.input_dim},
                        {"lifted_dim", inst.feature_cfg.lifted_dim},
                        {"normalization_scale", inst.feature_cfg.normalization_scale}};
    j["feature_names"] = inst.feature_names;
    Json scaling = Json::array();
    for (const auto& s : inst.scaling) scaling.push_back({{"min", s.min}, {"max", s.max}});
    j["scaling"] = scaling;
    Json arms = Json::array();
    for (const auto& a : inst.arms) {
        std::vector<std::size_t> cols;
        for (std::size_t c : a.columns) cols.push_back(c + 1);
        arms.push_back({{"columns", cols}, {"input", to_string(a.input)}, {"theta", to_json(a.theta)}});
    }
    j["arms"] = arms;
    return j;
}

inline ProblemInstance instance_from_json(const Json& j) {
    const std::string where = "instance snapshot";
    using detail::require;
    if (require(j, "format", where) != "uss-instance") throw ConfigError(where + ": unexpected format tag");
    ProblemInstance inst;
    inst.costs = detail::as_doubles(require(j, "costs", where), where + ".costs");
    inst.cum_costs = detail::as_doubles(require(j, "cum_costs", where), where + ".cum_costs");
    inst.tradeoff = detail::as_doubles(require(j, "tradeoff", where), where + ".tradeoff");
    const auto& fm = require(j, "feature_map", where);
    inst.feature_cfg.input_dim = require(fm, "input_dim", where).get<std::size_t>();
    inst.feature_cfg.lifted_dim = require(fm, "lifted_dim", where).get<std::size_t>();
    inst.feature_cfg.normalization_scale = detail::as_double(require(fm, "normalization_scale", where), where);
    if (j.contains("feature_names")) inst.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    if (j.contains("scaling")) {
        for (const auto& s : j.at("scaling")) {
            inst.scaling.push_back({detail::as_double(require(s, "min", where), where),
                                    detail::as_double(require(s, "max", where), where)});
        }
    }
    for (const auto& a : require(j, "arms", where)) {
        ArmModel arm;
        for (const auto& c : require(a, "columns", where)) {
            const auto one_based = c.get<std::size_t>();
            if (one_based == 0) throw ConfigError(where + ": arm columns are 1-based");
            arm.columns.push_back(one_based - 1);
        }
        arm.input = arm_input_from_string(require(a, "input", where).get<std::string>());
        arm.theta = detail::as_vector(require(a, "theta", where), where + ".theta");
        inst.arms.push_back(std::move(arm));
    }
    if (j.contains("arm_count") && j.at("arm_count").get<std::size_t>() != inst.arms.size()) {
        throw ConfigError(where + ": arm_count does not match the arms listed");
    }
    inst.validate();
    return inst;
}

inline void save_instance(const std::string& path, const ProblemInstance& inst) {
    write_text_file(path, instance_to_json(inst).dump(2) + "\n");
}

inline ProblemInstance load_instance(const std::string& path) { return instance_from_json(read_json_file(path)); }

// ---- estimators and policies --------------------------------------------------

inline Json estimator_to_json(const GlmEstimator& est) {
    Json j;
    const auto& o = est.options();
    j["dim"] = est.dim();
    j["options"] = {{"regularizer", o.regularizer},
                    {"s_bound", o.s_bound},
                    {"denominator_floor", o.denominator_floor},
                    {"invertible_floor", o.invertible_floor},
                    {"drift_tolerance", o.drift_tolerance},
                    {"check_drift", o.check_drift}};
    Json log = Json::array();
    for (const auto& obs : est.log()) log.push_back({{"phi", to_json(obs.phi)}, {"label", obs.label}});
    j["log"] = log;
    j["v"] = to_json_rowmajor(est.v());
    j["v_inv"] = est.has_inverse() ? to_json_rowmajor(est.v_inv()) : Json(nullptr);
    j["theta"] = to_json(est.theta_hat());
    j["projected"] = est.projected();
    j["score_norm"] = est.score_norm();
    return j;
}

inline GlmEstimator estimator_from_json(const Json& j) {
    const std::string where = "estimator snapshot";
    using detail::require;
    const auto dim = require(j, "dim", where).get<std::size_t>();
    const auto& o = require(j, "options", where);
    EstimatorOptions opts;
    opts.regularizer = detail::as_double(require(o, "regularizer", where), where);
    opts.s_bound = detail::as_double(require(o, "s_bound", where), where);
    opts.denominator_floor = detail::as_double(require(o, "denominator_floor", where), where);
    opts.invertible_floor = detail::as_double(require(o, "invertible_floor", where), where);
    opts.drift_tolerance = detail::as_double(require(o, "drift_tolerance", where), where);
    opts.check_drift = require(o, "check_drift", where).get<bool>();
    ObservationLog log;
    for (const auto& e : require(j, "log", where)) {
        log.push_back({detail::as_vector(require(e, "phi", where), where), require(e, "label", where).get<int>()});
    }
    Matrix v = detail::as_square(require(j, "v", where), dim, where + ".v");
    std::optional<Matrix> v_inv;
    if (!require(j, "v_inv", where).is_null()) v_inv = detail::as_square(j.at("v_inv"), dim, where + ".v_inv");
    Vector theta = detail::as_vector(require(j, "theta", where), where + ".theta");
    if (static_cast<std::size_t>(theta.size()) != dim) throw ConfigError(where + ": theta has the wrong length");
    return GlmEstimator::restore(opts, std::move(log), std::move(v), std::move(v_inv), std::move(theta),
                                 require(j, "projected", where).get<bool>(),
                                 detail::as_double(require(j, "score_norm", where), where));
}

inline Json exploration_to_json(const ExplorationSpec& e) {
    if (e.mode == ExplorationSpec::Mode::fixed) return {{"mode", "fixed"}, {"rounds", e.rounds}};
    return {{"mode", "adaptive"}, {"cap", e.cap}, {"threshold", e.threshold}};
}

inline ExplorationSpec exploration_from_json(const Json& j) {
    const std::string mode = j.value("mode", "adaptive");
    if (mode == "fixed") {
        if (!j.contains("rounds")) throw ConfigError("exploration: fixed mode needs 'rounds'");
        return ExplorationSpec::fixed(j.at("rounds").get<std::size_t>());
    }
    if (mode != "adaptive") throw ConfigError("exploration: mode must be 'adaptive' or 'fixed'");
    ExplorationSpec e = ExplorationSpec::adaptive(j.value("cap", std::size_t{500}));
    e.threshold = j.value("threshold", 1.0);
    return e;
}

inline Json policy_spec_to_json(const PolicySpec& s) {
    Json j;
    j["kind"] = to_string(s.kind);
    if (s.kind == PolicyKind::fixed) j["arm"] = s.fixed_arm + 1;
    if (learns(s.kind)) {
        j["delta"] = s.delta;
        j["sigma"] = s.sigma;
        j["kappa"] = s.resolved_kappa();
        j["kappa_source"] = s.kappa ? "config" : "kappa_lower_bound(s_bound)";
        j["s_bound"] = s.s_bound;
        if (s.kind == PolicyKind::uss_pd_lambda) j["lambda"] = s.lambda;
        j["exploration"] = exploration_to_json(s.resolved_exploration());
        j["radius"] = s.radius == RadiusMode::round ? "round" : "pair_count";
    }
    return j;
}

// Reads a policy spec; `defaults` supplies delta/sigma/kappa/s_bound not given here.
inline PolicySpec policy_spec_from_json(const Json& j, const PolicySpec& defaults = {}) {
    PolicySpec s = defaults;
    s.kind = policy_kind_from_string(detail::require(j, "kind", "policy").get<std::string>());
    if (s.kind == PolicyKind::fixed) {
        const auto arm = detail::require(j, "arm", "policy 'fixed'").get<long long>();
        if (arm < 1) throw ConfigError("policy 'fixed': arm is 1-based and must be >= 1");
        s.fixed_arm = static_cast<std::size_t>(arm - 1);
    }
    if (j.contains("delta")) s.delta = j.at("delta").get<double>();
    if (j.contains("sigma")) s.sigma = j.at("sigma").get<double>();
    if (j.contains("kappa")) {
        if (j.at("kappa").is_null()) {
            s.kappa.reset();
        } else {
            s.kappa = j.at("kappa").get<double>();
        }
    }
    if (j.contains("s_bound")) s.s_bound = j.at("s_bound").get<double>();
    if (j.contains("lambda")) s.lambda = j.at("lambda").get<double>();
    if (j.contains("exploration")) s.exploration = exploration_from_json(j.at("exploration"));
    if (j.contains("radius")) {
        const auto r = j.at("radius").get<std::string>();
        if (r == "round") {
            s.radius = RadiusMode::round;
        } else if (r == "pair_count") {
            s.radius = RadiusMode::pair_count;
        } else {
            throw ConfigError("policy: radius must be 'round' or 'pair_count'");
        }
    }
    return s;
}

inline Json policy_to_json(const Policy& p) {
    Json j;
    j["format"] = "uss-policy";
    j["version"] = 1;
    j["spec"] = policy_spec_to_json(p.spec());
    const auto& inst = p.instance();
    j["instance"] = {{"costs", inst.costs},
                     {"stop_costs", inst.cum_costs},
                     {"feature_map",
                      {{"input_dim", inst.feature_cfg.input_dim},
                       {"lifted_dim", inst.feature_cfg.lifted_dim},
                       {"normalization_scale", inst.feature_cfg.normalization_scale}}}};
    const auto c = p.counters();
    j["t"] = c.t;
    j["explored_rounds"] = c.explored_rounds;
    j["exploring"] = c.exploring;
    std::ostringstream rng;
    rng << p.rng();
    j["rng"] = rng.str();
    Json pairs = Json::array();
    for (const auto& pe : p.pairs()) {
        pairs.push_back({{"first", pe.first + 1}, {"second", pe.second + 1}, {"estimator", estimator_to_json(pe.estimator)}});
    }
    j["pairs"] = pairs;
    Json arms = Json::array();
    for (const auto& e : p.arm_estimators()) arms.push_back(estimator_to_json(e));
    j["arm_estimators"] = arms;
    return j;
}

inline Policy policy_from_json(const Json& j) {
    const std::string where = "policy snapshot";
    using detail::require;
    if (require(j, "format", where) != "uss-policy") throw ConfigError(where + ": unexpected format tag");
    PolicySpec spec = policy_spec_from_json(require(j, "spec", where));
    const auto& ij = require(j, "instance", where);
    PublicInstance pub;
    pub.costs = detail::as_doubles(require(ij, "costs", where), where);
    pub.cum_costs = detail::as_doubles(require(ij, "stop_costs", where), where);
    const auto& fm = require(ij, "feature_map", where);
    pub.feature_cfg.input_dim = require(fm, "input_dim", where).get<std::size_t>();
    pub.feature_cfg.lifted_dim = require(fm, "lifted_dim", where).get<std::size_t>();
    pub.feature_cfg.normalization_scale = detail::as_double(require(fm, "normalization_scale", where), where);
    pub.feature_cfg.validate();

    Policy::Counters c;
    c.t = require(j, "t", where).get<std::size_t>();
    c.explored_rounds = require(j, "explored_rounds", where).get<std::size_t>();
    c.exploring = require(j, "exploring", where).get<bool>();
    Rng rng;
    std::istringstream rs(require(j, "rng", where).get<std::string>());
    rs >> rng;
    if (!rs) throw ConfigError(where + ": unreadable random engine state");
    std::vector<PairEstimator> pairs;
    for (const auto& pj : require(j, "pairs", where)) {
        pairs.push_back({require(pj, "first", where).get<std::size_t>() - 1,
                         require(pj, "second", where).get<std::size_t>() - 1,
                         estimator_from_json(require(pj, "estimator", where))});
    }
    std::vector<GlmEstimator> arms;
    for (const auto& ej : require(j, "arm_estimators", where)) arms.push_back(estimator_from_json(ej));
    return Policy::restore(pub, std::move(spec), c, std::move(pairs), std::move(arms), std::move(rng));
}

}  // namespace uss
