#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "uss/env/instance.hpp"
#include "uss/env/oracle.hpp"
#include "uss/errors.hpp"
#include "uss/evaluation.hpp"
#include "uss/policy.hpp"
#include "uss/random.hpp"

namespace uss {

// Contexts a run may visit, with their oracle quantities computed once.
struct ContextPool {
    Dataset contexts;
    std::vector<ContextTruth> truth;
    std::vector<std::size_t> i_star;
    std::vector<double> xi;

    std::size_t size() const { return contexts.size(); }
    bool wd(std::size_t id) const { return xi[id] > 0.0; }

    static ContextPool build(const ProblemInstance& inst, Dataset contexts) {
        if (contexts.empty()) throw ConfigError("context pool is empty");
        ContextPool pool;
        pool.contexts = std::move(contexts);
        const auto s = stop_costs(inst);
        pool.truth.reserve(pool.size());
        for (const auto& ctx : pool.contexts) {
            pool.truth.push_back(context_truth(inst, ctx));
            pool.i_star.push_back(optimal_arm(pool.truth.back(), s));
            pool.xi.push_back(xi_margin(pool.truth.back(), s));
        }
        return pool;
    }

    double wd_fraction() const {
        std::size_t n = 0;
        for (double v : xi) n += v > 0.0 ? 1 : 0;
        return static_cast<double>(n) / static_cast<double>(size());
    }
};

enum class ContextOrder { iid, round_robin };

struct SimulationOptions {
    std::size_t horizon = 5000;
    std::size_t repetitions = 100;
    std::uint64_t seed = 1;
    ContextOrder order = ContextOrder::iid;
    std::size_t jobs = 1;
};

struct PolicyRun {
    std::vector<RoundRecord> records;
    std::size_t exploration_rounds = 0;
    std::size_t numerical_warnings = 0;
    std::size_t post_exploration_rounds = 0;
    std::size_t left_selections = 0;  // post-exploration rounds with I_t < i*_t
};

// Random streams of one repetition. Contexts and arm outputs are shared by all
// policies of the repetition; each policy has its own stream for internal
// randomisation.
namespace stream {
inline constexpr std::uint64_t contexts = 0;
inline constexpr std::uint64_t feedback = 1;
inline constexpr std::uint64_t policy_base = 16;
}  // namespace stream

inline std::vector<std::size_t> context_sequence(const ContextPool& pool, const SimulationOptions& opt,
                                                 std::size_t rep) {
    std::vector<std::size_t> ids(opt.horizon);
    if (opt.order == ContextOrder::round_robin) {
        for (std::size_t t = 0; t < opt.horizon; ++t) ids[t] = t % pool.size();
    } else {
        Rng rng(derive_seed(opt.seed, rep, stream::contexts));
        for (auto& id : ids) id = static_cast<std::size_t>(uniform_index(rng, pool.size()));
    }
    return ids;
}

// One repetition of one policy over a fixed context sequence and fixed feedback.
inline PolicyRun run_policy(const ProblemInstance& inst, const ContextPool& pool, const PolicySpec& spec,
                            std::uint64_t policy_seed, const std::vector<std::size_t>& ids,
                            const std::vector<RoundFeedback>& feedback) {
    const PublicInstance pub = PublicInstance::of(inst);
    const auto& s = pub.cum_costs;
    Policy policy(pub, spec, policy_seed);
    PolicyRun run;
    run.records.reserve(ids.size());
    for (std::size_t t = 0; t < ids.size(); ++t) {
        const std::size_t id = ids[t];
        const auto& ctx = pool.contexts[id];
        const auto& truth = pool.truth[id];
        const Decision dec = policy.choose(ctx.x);
        const std::span<const int> prefix(feedback[t].outputs.data(), dec.arm + 1);
        if (policy.kind() == PolicyKind::supervised) {
            policy.supervised_learn(ctx.x, prefix, feedback[t].y_true);
        } else {
            policy.learn(ctx.x, prefix);
        }

        RoundRecord r;
        r.t = t + 1;
        r.context_id = id;
        r.arm = dec.arm;
        r.i_star = pool.i_star[id];
        r.regret_inc = std::max(0.0, total_loss(truth, s, dec.arm) - total_loss(truth, s, r.i_star));
        r.pseudo_regret_inc = pseudo_regret(s, dec.arm, r.i_star, pair_disagreement(truth, r.i_star, dec.arm));
        r.total_cost_inc = total_loss(truth, s, dec.arm);
        r.wd = pool.wd(id);
        if (!dec.explored) {
            ++run.post_exploration_rounds;
            if (dec.arm < r.i_star) ++run.left_selections;
        }
        run.records.push_back(r);
    }
    run.exploration_rounds = policy.exploration_rounds();
    run.numerical_warnings = policy.numerical_warnings();
    return run;
}

// results[rep][policy]. Output does not depend on opt.jobs.
inline std::vector<std::vector<PolicyRun>> simulate(const ProblemInstance& inst, const ContextPool& pool,
                                                    const std::vector<PolicySpec>& policies,
                                                    const SimulationOptions& opt) {
    if (opt.horizon == 0) throw ConfigError("horizon must be >= 1");
    if (opt.repetitions == 0) throw ConfigError("repetitions must be >= 1");
    if (policies.empty()) throw ConfigError("no policies to run");
    // Construct every policy once up front so configuration errors surface
    // before any thread starts.
    for (const auto& p : policies) Policy(PublicInstance::of(inst), p, 0);

    std::vector<std::vector<PolicyRun>> results(opt.repetitions);
    auto run_rep = [&](std::size_t rep) {
        const auto ids = context_sequence(pool, opt, rep);
        Rng fb_rng(derive_seed(opt.seed, rep, stream::feedback));
        std::vector<RoundFeedback> feedback;
        feedback.reserve(ids.size());
        for (std::size_t id : ids) feedback.push_back(sample_round(pool.truth[id], fb_rng));
        auto& out = results[rep];
        out.reserve(policies.size());
        for (std::size_t p = 0; p < policies.size(); ++p) {
            out.push_back(run_policy(inst, pool, policies[p], derive_seed(opt.seed, rep, stream::policy_base + p), ids,
                                     feedback));
        }
    };

    const std::size_t jobs = std::max<std::size_t>(1, std::min(opt.jobs, opt.repetitions));
    if (jobs == 1) {
        for (std::size_t rep = 0; rep < opt.repetitions; ++rep) run_rep(rep);
        return results;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < jobs; ++w) {
        workers.emplace_back([&] {
            for (;;) {
                const std::size_t rep = next.fetch_add(1);
                if (rep >= opt.repetitions) return;
                try {
                    run_rep(rep);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    next.store(opt.repetitions);
                    return;
                }
            }
        });
    }
    for (auto& w : workers) w.join();
    if (failure) std::rethrow_exception(failure);
    return results;
}

// Cumulative series of one metric for every repetition of one policy.
enum class Metric { regret, pseudo_regret, cost, regret_wd, regret_non_wd };

inline const char* to_string(Metric m) {
    switch (m) {
        case Metric::regret: return "regret";
        case Metric::pseudo_regret: return "pseudo_regret";
        case Metric::cost: return "cost";
        case Metric::regret_wd: return "regret_wd";
        case Metric::regret_non_wd: return "regret_non_wd";
    }
    return "?";
}

inline std::vector<double> metric_series(const PolicyRun& run, Metric m) {
    const std::span<const RoundRecord> rec(run.records);
    switch (m) {
        case Metric::regret: return cumulative_regret(rec);
        case Metric::pseudo_regret: return cumulative(rec, [](const RoundRecord& r) { return r.pseudo_regret_inc; });
        case Metric::cost: return cumulative(rec, [](const RoundRecord& r) { return r.total_cost_inc; });
        case Metric::regret_wd: return decompose_wd(rec).wd;
        case Metric::regret_non_wd: return decompose_wd(rec).non_wd;
    }
    return {};
}

inline RunAggregate aggregate_metric(const std::vector<std::vector<PolicyRun>>& results, std::size_t policy,
                                     Metric m) {
    std::vector<std::vector<double>> runs;
    runs.reserve(results.size());
    for (const auto& rep : results) runs.push_back(metric_series(rep.at(policy), m));
    return aggregate_runs(runs);
}

}  // namespace uss
