#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "uss/env/instance.hpp"
#include "uss/env/oracle.hpp"
#include "uss/errors.hpp"

namespace uss {

struct RoundRecord {
    std::size_t t = 0;           // 1-based round index
    std::size_t context_id = 0;  // index into the context pool
    std::size_t arm = 0;         // 0-based I_t
    std::size_t i_star = 0;      // 0-based
    double regret_inc = 0.0;
    double pseudo_regret_inc = 0.0;
    double total_cost_inc = 0.0;
    bool wd = true;
};

// gamma_I + lambda_I C_I - (gamma_i* + lambda_i* C_i*)
inline double round_regret(const ContextTruth& t, std::span<const double> stop_costs, std::size_t arm) {
    const std::size_t star = optimal_arm(t, stop_costs);
    const double d = total_loss(t, stop_costs, arm) - total_loss(t, stop_costs, star);
    return std::max(d, 0.0);
}

inline double round_regret(const ProblemInstance& inst, const LabeledContext& ctx, std::size_t arm) {
    return round_regret(context_truth(inst, ctx), stop_costs(inst), arm);
}

// C_I - C_i* + p_{i*, I}; the p term vanishes when I = i*.
inline double pseudo_regret(std::span<const double> stop_costs, std::size_t arm, std::size_t i_star,
                            double p_exact) {
    if (arm == i_star) return 0.0;
    return stop_costs[arm] - stop_costs[i_star] + p_exact;
}

inline double pseudo_regret(const PublicInstance& pub, const ContextTruth& t, std::size_t arm) {
    const std::size_t star = optimal_arm(t, pub.cum_costs);
    return pseudo_regret(pub.cum_costs, arm, star, pair_disagreement(t, star, arm));
}

// gamma_I(x) + lambda_I C_I
inline double round_total_cost(const ContextTruth& t, std::span<const double> stop_costs, std::size_t arm) {
    return total_loss(t, stop_costs, arm);
}

inline double round_total_cost(const ProblemInstance& inst, const LabeledContext& ctx, std::size_t arm) {
    return round_total_cost(context_truth(inst, ctx), stop_costs(inst), arm);
}

// Largest round regret over every arm and every supplied context.
inline double r_max(const ProblemInstance& inst, std::span<const LabeledContext> contexts) {
    if (contexts.empty()) throw PreconditionError("r_max: no contexts");
    const auto s = stop_costs(inst);
    double best = 0.0;
    for (const auto& ctx : contexts) {
        const auto t = context_truth(inst, ctx);
        for (std::size_t i = 0; i < inst.arm_count(); ++i) best = std::max(best, round_regret(t, s, i));
    }
    return best;
}

struct RunAggregate {
    std::vector<double> mean;
    std::vector<double> ci_low;
    std::vector<double> ci_high;
    std::size_t runs = 0;

    std::size_t horizon() const { return mean.size(); }
};

// Per-step mean with a normal-approximation 95% band, mean +- 1.96 sd / sqrt(R),
// sd being the sample standard deviation. Values are sorted per step before
// summation so the result does not depend on run order.
inline RunAggregate aggregate_runs(const std::vector<std::vector<double>>& runs) {
    if (runs.empty()) throw PreconditionError("aggregate_runs: at least one run is required");
    const std::size_t horizon = runs.front().size();
    for (const auto& r : runs) {
        if (r.size() != horizon) throw ConfigError("aggregate_runs: runs have different horizons");
    }
    const std::size_t n = runs.size();
    RunAggregate agg;
    agg.runs = n;
    agg.mean.resize(horizon);
    agg.ci_low.resize(horizon);
    agg.ci_high.resize(horizon);
    std::vector<double> col(n);
    for (std::size_t t = 0; t < horizon; ++t) {
        for (std::size_t r = 0; r < n; ++r) col[r] = runs[r][t];
        std::sort(col.begin(), col.end());
        double sum = 0.0;
        for (double v : col) sum += v;
        const double mean = sum / static_cast<double>(n);
        double half = 0.0;
        if (n > 1) {
            double ss = 0.0;
            for (double v : col) ss += (v - mean) * (v - mean);
            const double sd = std::sqrt(ss / static_cast<double>(n - 1));
            half = 1.96 * sd / std::sqrt(static_cast<double>(n));
        }
        agg.mean[t] = mean;
        agg.ci_low[t] = mean - half;
        agg.ci_high[t] = mean + half;
    }
    return agg;
}

template <class F>
std::vector<double> cumulative(std::span<const RoundRecord> records, F&& increment) {
    std::vector<double> out;
    out.reserve(records.size());
    double acc = 0.0;
    for (const auto& r : records) {
        acc += increment(r);
        out.push_back(acc);
    }
    return out;
}

inline std::vector<double> cumulative_regret(std::span<const RoundRecord> records) {
    return cumulative(records, [](const RoundRecord& r) { return r.regret_inc; });
}

struct WdDecomposition {
    std::vector<double> wd;
    std::vector<double> non_wd;
};

inline WdDecomposition decompose_wd(std::span<const RoundRecord> records) {
    WdDecomposition out;
    out.wd = cumulative(records, [](const RoundRecord& r) { return r.wd ? r.regret_inc : 0.0; });
    out.non_wd = cumulative(records, [](const RoundRecord& r) { return r.wd ? 0.0 : r.regret_inc; });
    return out;
}

}  // namespace uss
