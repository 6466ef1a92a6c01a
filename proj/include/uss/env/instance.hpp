#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "uss/errors.hpp"
#include "uss/glm/features.hpp"
#include "uss/glm/link.hpp"

namespace uss {

// A context with its hidden binary label. Coordinates are already scaled into [-1, 1].
struct LabeledContext {
    std::vector<double> x;
    int y = 0;
};

using Dataset = std::vector<LabeledContext>;

// Outputs of one round: the hidden label and every arm's binary output. Only a
// prefix of `outputs` is ever shown to a policy.
struct RoundFeedback {
    int y_true = 0;
    std::vector<int> outputs;
};

// What an arm classifier sees of the raw context.
enum class ArmInput {
    linear,     // (1, x_c for c in columns)
    quadratic,  // (1, x_c, x_a x_b for a <= b), same monomial order as lift()
};

inline const char* to_string(ArmInput input) {
    return input == ArmInput::linear ? "linear" : "quadratic";
}

inline ArmInput arm_input_from_string(const std::string& s) {
    if (s == "linear") return ArmInput::linear;
    if (s == "quadratic" || s == "poly2") return ArmInput::quadratic;
    throw ConfigError("unknown arm input '" + s + "' (expected linear or quadratic)");
}

// Logistic classifier acting as one arm: outputs 1 with probability
// mu(features(x)^T theta), intercept first.
struct ArmModel {
    std::vector<std::size_t> columns;
    ArmInput input = ArmInput::linear;
    Vector theta;

    static std::size_t feature_count(std::size_t columns, ArmInput input) {
        return input == ArmInput::linear ? 1 + columns : 1 + columns + columns * (columns + 1) / 2;
    }

    std::size_t feature_count() const { return feature_count(columns.size(), input); }

    Vector features(std::span<const double> x) const {
        Vector f(static_cast<Eigen::Index>(feature_count()));
        Eigen::Index pos = 0;
        f[pos++] = 1.0;
        for (std::size_t c : columns) f[pos++] = x[c];
        if (input == ArmInput::quadratic) {
            for (std::size_t a = 0; a < columns.size(); ++a) {
                for (std::size_t b = a; b < columns.size(); ++b) f[pos++] = x[columns[a]] * x[columns[b]];
            }
        }
        return f;
    }

    double logit(std::span<const double> x) const { return features(x).dot(theta); }
    double probability(std::span<const double> x) const { return sigmoid(logit(x)); }
};

// Affine map of one raw column onto [-1, 1].
struct ColumnScaling {
    double min = -1.0;
    double max = 1.0;

    double apply(double v) const {
        if (!(max > min)) return 0.0;
        return 2.0 * (v - min) / (max - min) - 1.0;
    }

    friend bool operator==(const ColumnScaling&, const ColumnScaling&) = default;
};

inline std::vector<double> cumulative_costs(std::span<const double> costs) {
    std::vector<double> out;
    out.reserve(costs.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < costs.size(); ++i) {
        if (!(costs[i] >= 0.0) || !std::isfinite(costs[i])) {
            throw ConfigError("cumulative_costs: cost of arm " + std::to_string(i + 1) +
                              " must be finite and >= 0");
        }
        acc += costs[i];
        out.push_back(acc);
    }
    return out;
}

// Ground truth of a cascade. Arm indices are 0-based throughout the C++ API;
// files and the CLI number arms from 1.
struct ProblemInstance {
    std::vector<ArmModel> arms;
    std::vector<double> costs;
    std::vector<double> cum_costs;
    std::vector<double> tradeoff;
    FeatureMapConfig feature_cfg;
    std::vector<std::string> feature_names;
    std::vector<ColumnScaling> scaling;  // one per raw feature; empty for synthetic data

    std::size_t arm_count() const { return arms.size(); }
    std::size_t context_dim() const { return feature_cfg.input_dim; }

    static ProblemInstance make(std::vector<ArmModel> arms, std::vector<double> costs,
                                std::size_t context_dim, std::vector<double> tradeoff = {}) {
        ProblemInstance inst;
        inst.arms = std::move(arms);
        inst.costs = std::move(costs);
        inst.cum_costs = cumulative_costs(inst.costs);
        inst.tradeoff = tradeoff.empty() ? std::vector<double>(inst.arms.size(), 1.0) : std::move(tradeoff);
        inst.feature_cfg = FeatureMapConfig::poly2(context_dim);
        inst.validate();
        return inst;
    }

    void validate() const {
        const std::size_t k = arms.size();
        if (k == 0) throw ConfigError("ProblemInstance: at least one arm is required");
        if (costs.size() != k) throw ConfigError("ProblemInstance: costs length must equal the arm count");
        if (tradeoff.size() != k) throw ConfigError("ProblemInstance: tradeoff length must equal the arm count");
        const auto expected = cumulative_costs(costs);
        if (cum_costs != expected) throw ConfigError("ProblemInstance: cum_costs are not the prefix sums of costs");
        for (double l : tradeoff) {
            if (!(l > 0.0) || !std::isfinite(l)) throw ConfigError("ProblemInstance: tradeoff weights must be positive");
        }
        feature_cfg.validate();
        for (std::size_t i = 0; i < k; ++i) {
            const auto& arm = arms[i];
            for (std::size_t c : arm.columns) {
                if (c >= context_dim()) {
                    throw ConfigError("ProblemInstance: arm " + std::to_string(i + 1) + " uses column " +
                                      std::to_string(c) + " beyond the context dimension");
                }
            }
            if (static_cast<std::size_t>(arm.theta.size()) != arm.feature_count()) {
                throw ConfigError("ProblemInstance: arm " + std::to_string(i + 1) +
                                  " parameter length does not match its inputs");
            }
            if (!arm.theta.allFinite()) throw ConfigError("ProblemInstance: non-finite arm parameters");
        }
        if (!scaling.empty() && scaling.size() != context_dim()) {
            throw ConfigError("ProblemInstance: scaling must cover every context column");
        }
        if (!feature_names.empty() && feature_names.size() != context_dim()) {
            throw ConfigError("ProblemInstance: feature_names must cover every context column");
        }
    }
};

// The part of an instance a learner may see. cum_costs here are the
// trade-off weighted stopping costs lambda_i * C_i (plain C_i when every
// lambda_i = 1).
struct PublicInstance {
    std::vector<double> costs;
    std::vector<double> cum_costs;
    FeatureMapConfig feature_cfg;

    std::size_t arm_count() const { return costs.size(); }

    static PublicInstance of(const ProblemInstance& inst) {
        PublicInstance pub{inst.costs, inst.cum_costs, inst.feature_cfg};
        for (std::size_t i = 0; i < pub.cum_costs.size(); ++i) pub.cum_costs[i] *= inst.tradeoff[i];
        return pub;
    }
};

}  // namespace uss
