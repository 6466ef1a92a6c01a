#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "uss/env/instance.hpp"
#include "uss/errors.hpp"
#include "uss/random.hpp"

namespace uss {

// Everything the environment knows about one context: every arm's
// probability of answering 1, and the true label.
struct ContextTruth {
    std::vector<double> mu;
    int y = 0;

    std::size_t arm_count() const { return mu.size(); }
};

inline ContextTruth context_truth(const ProblemInstance& inst, const LabeledContext& ctx) {
    if (ctx.x.size() != inst.context_dim()) {
        throw PreconditionError("context dimension " + std::to_string(ctx.x.size()) + " does not match instance (" +
                                std::to_string(inst.context_dim()) + ")");
    }
    ContextTruth t;
    t.y = ctx.y;
    t.mu.reserve(inst.arm_count());
    for (const auto& arm : inst.arms) t.mu.push_back(arm.probability(ctx.x));
    return t;
}

namespace detail {

inline void check_arm(std::size_t i, std::size_t k) {
    if (i >= k) throw PreconditionError("arm index " + std::to_string(i) + " out of range for K=" + std::to_string(k));
}

}  // namespace detail

// gamma_i(x) = P(Y^i != Y | x) for a deterministic label.
inline double error_rate(const ContextTruth& t, std::size_t i) {
    detail::check_arm(i, t.arm_count());
    return t.y == 1 ? 1.0 - t.mu[i] : t.mu[i];
}

// P(Y^i != Y^j | x) for conditionally independent arm outputs; 0 when i == j.
inline double pair_disagreement(const ContextTruth& t, std::size_t i, std::size_t j) {
    detail::check_arm(i, t.arm_count());
    detail::check_arm(j, t.arm_count());
    if (i == j) return 0.0;
    const double a = t.mu[i];
    const double b = t.mu[j];
    // Symmetric by construction: both products are formed in a fixed order.
    const double lo = i < j ? a : b;
    const double hi = i < j ? b : a;
    return lo * (1.0 - hi) + hi * (1.0 - lo);
}

// Total expected loss gamma_i(x) + lambda_i C_i of stopping at arm i.
inline double total_loss(const ContextTruth& t, std::span<const double> stop_costs, std::size_t i) {
    return error_rate(t, i) + stop_costs[i];
}

// Largest index among the minimisers of gamma_i + lambda_i C_i.
inline std::size_t optimal_arm(const ContextTruth& t, std::span<const double> stop_costs) {
    if (stop_costs.size() != t.arm_count()) throw PreconditionError("optimal_arm: cost vector length mismatch");
    std::size_t best = 0;
    double best_total = total_loss(t, stop_costs, 0);
    for (std::size_t i = 1; i < t.arm_count(); ++i) {
        const double v = total_loss(t, stop_costs, i);
        if (v <= best_total) {
            best = i;
            best_total = v;
        }
    }
    return best;
}

// min over j > i* of (C_j - C_i* - p_{i*,j}(x)); +infinity when i* is the last arm.
inline double xi_margin(const ContextTruth& t, std::span<const double> stop_costs) {
    const std::size_t star = optimal_arm(t, stop_costs);
    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t j = star + 1; j < t.arm_count(); ++j) {
        const double v = stop_costs[j] - stop_costs[star] - pair_disagreement(t, star, j);
        if (v < margin) margin = v;
    }
    return margin;
}

// min(B) with B = { i : C_j - C_i > p_ij for all j > i } u { K }.
inline std::size_t oracle_select(const ContextTruth& t, std::span<const double> stop_costs) {
    const std::size_t k = t.arm_count();
    for (std::size_t i = 0; i + 1 < k; ++i) {
        bool all = true;
        for (std::size_t j = i + 1; j < k && all; ++j) {
            all = stop_costs[j] - stop_costs[i] > pair_disagreement(t, i, j);
        }
        if (all) return i;
    }
    return k - 1;
}

inline std::vector<double> stop_costs(const ProblemInstance& inst) {
    std::vector<double> s(inst.cum_costs);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] *= inst.tradeoff[i];
    return s;
}

// Convenience overloads on (instance, context).
inline double error_rate(const ProblemInstance& inst, std::size_t i, const LabeledContext& ctx) {
    return error_rate(context_truth(inst, ctx), i);
}

inline double pair_disagreement(const ProblemInstance& inst, std::size_t i, std::size_t j, const LabeledContext& ctx) {
    return pair_disagreement(context_truth(inst, ctx), i, j);
}

inline std::size_t optimal_arm(const ProblemInstance& inst, const LabeledContext& ctx) {
    return optimal_arm(context_truth(inst, ctx), stop_costs(inst));
}

inline double xi_margin(const ProblemInstance& inst, const LabeledContext& ctx) {
    return xi_margin(context_truth(inst, ctx), stop_costs(inst));
}

inline std::size_t oracle_select(const ProblemInstance& inst, const LabeledContext& ctx) {
    return oracle_select(context_truth(inst, ctx), stop_costs(inst));
}

inline double wd_fraction(const ProblemInstance& inst, std::span<const LabeledContext> contexts) {
    if (contexts.empty()) throw PreconditionError("wd_fraction: no contexts");
    const auto s = stop_costs(inst);
    std::size_t hold = 0;
    for (const auto& ctx : contexts) {
        if (xi_margin(context_truth(inst, ctx), s) > 0.0) ++hold;
    }
    return static_cast<double>(hold) / static_cast<double>(contexts.size());
}

// Every arm answers independently: Y^i ~ Bernoulli(mu_i(x)). Draws one uniform
// per arm in arm order.
inline RoundFeedback sample_round(const ContextTruth& t, Rng& rng) {
    RoundFeedback fb;
    fb.y_true = t.y;
    fb.outputs.reserve(t.arm_count());
    for (double m : t.mu) fb.outputs.push_back(bernoulli(rng, m) ? 1 : 0);
    return fb;
}

inline RoundFeedback sample_round(const ProblemInstance& inst, const LabeledContext& ctx, Rng& rng) {
    return sample_round(context_truth(inst, ctx), rng);
}

}  // namespace uss
