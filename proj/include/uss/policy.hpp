#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uss/env/instance.hpp"
#include "uss/errors.hpp"
#include "uss/glm/confidence.hpp"
#include "uss/glm/estimator.hpp"
#include "uss/glm/features.hpp"
#include "uss/glm/link.hpp"
#include "uss/random.hpp"

namespace uss {

enum class PolicyKind { uss_pd, uss_pd_lambda, supervised, fixed, random };

inline const char* to_string(PolicyKind k) {
    switch (k) {
        case PolicyKind::uss_pd: return "uss_pd";
        case PolicyKind::uss_pd_lambda: return "uss_pd_lambda";
        case PolicyKind::supervised: return "supervised";
        case PolicyKind::fixed: return "fixed";
        case PolicyKind::random: return "random";
    }
    return "?";
}

inline PolicyKind policy_kind_from_string(const std::string& s) {
    if (s == "uss_pd") return PolicyKind::uss_pd;
    if (s == "uss_pd_lambda") return PolicyKind::uss_pd_lambda;
    if (s == "supervised") return PolicyKind::supervised;
    if (s == "fixed") return PolicyKind::fixed;
    if (s == "random") return PolicyKind::random;
    throw ConfigError("unknown policy kind '" + s + "'");
}

inline bool learns(PolicyKind k) {
    return k == PolicyKind::uss_pd || k == PolicyKind::uss_pd_lambda || k == PolicyKind::supervised;
}

struct ExplorationSpec {
    enum class Mode { adaptive, fixed };
    Mode mode = Mode::adaptive;
    std::size_t rounds = 0;     // m, fixed mode only
    std::size_t cap = 500;      // adaptive mode: stop exploring after this many rounds regardless
    double threshold = 1.0;     // adaptive mode: required min eigenvalue of every V

    static ExplorationSpec adaptive(std::size_t cap = 500) { return {Mode::adaptive, 0, cap, 1.0}; }
    static ExplorationSpec fixed(std::size_t m) { return {Mode::fixed, m, 0, 1.0}; }
};

// Which count drives the confidence radius: the global round index (t - 1)
// or the pair's own observation count.
enum class RadiusMode { round, pair_count };

struct PolicySpec {
    PolicyKind kind = PolicyKind::uss_pd;
    std::size_t fixed_arm = 0;  // 0-based, fixed kind only
    double delta = 0.05;
    double sigma = 0.1;
    std::optional<double> kappa;   // default: kappa_lower_bound(s_bound)
    double s_bound = 5.0;
    double lambda = 1.0;           // uss_pd_lambda only
    std::optional<ExplorationSpec> exploration;  // default depends on kind
    RadiusMode radius = RadiusMode::round;

    ExplorationSpec resolved_exploration() const {
        if (exploration) return *exploration;
        // The lambda variant's V is invertible from the start, so arm K is
        // forced on the first context only.
        return kind == PolicyKind::uss_pd_lambda ? ExplorationSpec::fixed(1) : ExplorationSpec::adaptive();
    }

    double resolved_kappa() const { return kappa ? *kappa : kappa_lower_bound(s_bound); }
};

// One row of stopping tests: for arm i, the values compared against C_j - C_i
// for every j > i, and whether all tests passed.
struct Probe {
    std::size_t arm = 0;
    std::vector<double> values;  // p~_ij (or gamma~_i - gamma^_j), j = arm+1 .. K-1
    bool stop = false;
};

struct Decision {
    std::size_t arm = 0;  // 0-based
    std::vector<Probe> probes;
    bool explored = false;
};

// min({ i : C_j - C_i > v(i, j) for all j > i } u { K-1 }), scanning i upward.
template <class TestValue>
std::size_t cascade_select(std::span<const double> stop_costs, TestValue&& value, std::vector<Probe>* probes = nullptr) {
    const std::size_t k = stop_costs.size();
    for (std::size_t i = 0; i < k; ++i) {
        Probe probe;
        probe.arm = i;
        bool all = true;
        for (std::size_t j = i + 1; j < k; ++j) {
            const double v = value(i, j);
            probe.values.push_back(v);
            if (!(stop_costs[j] - stop_costs[i] > v)) {
                all = false;
                if (probes == nullptr) break;
            }
        }
        probe.stop = all;
        if (probes != nullptr) probes->push_back(std::move(probe));
        if (all) return i;
    }
    return k - 1;
}

class Policy {
public:
    Policy(const PublicInstance& inst, PolicySpec spec, std::uint64_t seed = 0)
        : inst_(inst), spec_(std::move(spec)), rng_(seed) {
        const std::size_t k = inst_.arm_count();
        if (k == 0) throw ConfigError("policy: instance has no arms");
        if (inst_.cum_costs.size() != k) throw ConfigError("policy: cost vectors disagree on K");
        if (spec_.kind == PolicyKind::fixed && spec_.fixed_arm >= k) {
            throw ConfigError("policy: fixed arm " + std::to_string(spec_.fixed_arm + 1) + " is not in [1, " +
                              std::to_string(k) + "]");
        }
        exploration_ = spec_.resolved_exploration();
        if (learns(spec_.kind)) {
            conf_.delta = spec_.delta;
            conf_.sigma = spec_.sigma;
            conf_.kappa = spec_.resolved_kappa();
            conf_.arms = k;
            conf_.d_prime = inst_.feature_cfg.lifted_dim;
            conf_.s_bound = spec_.s_bound;
            conf_.lambda = spec_.kind == PolicyKind::uss_pd_lambda ? spec_.lambda : 0.0;
            conf_.validate();
            if (spec_.kind == PolicyKind::uss_pd_lambda && !(spec_.lambda > 0.0)) {
                throw ConfigError("policy: uss_pd_lambda needs lambda > 0");
            }
            if (exploration_.mode == ExplorationSpec::Mode::adaptive && !(exploration_.threshold > 0.0)) {
                throw ConfigError("policy: exploration threshold must be positive");
            }
            EstimatorOptions opts;
            opts.regularizer = conf_.lambda;
            opts.s_bound = conf_.s_bound;
            const std::size_t dim = inst_.feature_cfg.lifted_dim;
            if (spec_.kind == PolicyKind::supervised) {
                for (std::size_t i = 0; i < k; ++i) arm_estimators_.emplace_back(dim, opts);
            } else {
                for (std::size_t i = 0; i < k; ++i) {
                    for (std::size_t j = i + 1; j < k; ++j) pairs_.push_back({i, j, GlmEstimator(dim, opts)});
                }
            }
            exploring_ = k > 1 && !(exploration_.mode == ExplorationSpec::Mode::fixed && exploration_.rounds == 0);
        }
    }

    PolicyKind kind() const { return spec_.kind; }
    const PolicySpec& spec() const { return spec_; }
    const ConfidenceConfig& confidence() const { return conf_; }
    const PublicInstance& instance() const { return inst_; }
    std::size_t arm_count() const { return inst_.arm_count(); }
    std::size_t rounds() const { return t_; }
    bool exploring() const { return exploring_; }
    std::size_t exploration_rounds() const { return explored_rounds_; }
    const std::vector<PairEstimator>& pairs() const { return pairs_; }
    const std::vector<GlmEstimator>& arm_estimators() const { return arm_estimators_; }

    std::size_t pair_index(std::size_t i, std::size_t j) const {
        // pairs are laid out row by row: (0,1) (0,2) .. (0,K-1) (1,2) ..
        const std::size_t k = arm_count();
        return i * (2 * k - i - 1) / 2 + (j - i - 1);
    }

    const PairEstimator& pair(std::size_t i, std::size_t j) const { return pairs_.at(pair_index(i, j)); }

    // Confidence radius for a count (round index t-1 or pair count n).
    double radius(double count) const {
        return spec_.kind == PolicyKind::uss_pd_lambda ? beta_radius(count, conf_) : alpha_radius(count, conf_);
    }

    Decision choose(std::span<const double> x) {
        if (pending_) throw ProtocolError("choose called twice without learning from the previous decision");
        const std::size_t k = arm_count();
        Decision dec;
        last_x_.assign(x.begin(), x.end());

        switch (spec_.kind) {
            case PolicyKind::fixed:
                dec.arm = spec_.fixed_arm;
                break;
            case PolicyKind::random:
                dec.arm = static_cast<std::size_t>(uniform_index(rng_, k));
                break;
            default:
                phi_ = lift(x, inst_.feature_cfg);
                if (exploring_) {
                    dec.arm = k - 1;
                    dec.explored = true;
                } else if (spec_.kind == PolicyKind::supervised) {
                    dec.arm = choose_supervised(dec.probes);
                } else {
                    dec.arm = choose_disagreement(dec.probes);
                }
        }
        pending_ = true;
        pending_arm_ = dec.arm;
        pending_explored_ = dec.explored;
        return dec;
    }

    // prefix holds the outputs of arms 0..I_t.
    void learn(std::span<const double> x, std::span<const int> prefix) {
        if (spec_.kind == PolicyKind::supervised) {
            throw ProtocolError("supervised policy must be updated with supervised_learn");
        }
        check_protocol(x, prefix);
        if (spec_.kind == PolicyKind::uss_pd || spec_.kind == PolicyKind::uss_pd_lambda) {
            for (std::size_t i = 0; i <= pending_arm_; ++i) {
                for (std::size_t j = i + 1; j <= pending_arm_; ++j) {
                    pair_update(pairs_[pair_index(i, j)], phi_, prefix[i] != prefix[j] ? 1 : 0);
                }
            }
        }
        finish_round();
    }

    void supervised_learn(std::span<const double> x, std::span<const int> prefix, int y_true) {
        if (spec_.kind != PolicyKind::supervised) {
            throw ProtocolError("supervised_learn called on a " + std::string(to_string(spec_.kind)) + " policy");
        }
        if (y_true != 0 && y_true != 1) throw ProtocolError("supervised_learn: label must be 0 or 1");
        check_protocol(x, prefix);
        for (std::size_t i = 0; i <= pending_arm_; ++i) {
            arm_estimators_[i].update(phi_, prefix[i] != y_true ? 1 : 0);
        }
        finish_round();
    }

    std::size_t numerical_warnings() const {
        std::size_t n = 0;
        for (const auto& p : pairs_) n += p.estimator.numerical_warnings();
        for (const auto& e : arm_estimators_) n += e.numerical_warnings();
        return n;
    }

    // Snapshot support: internal counters.
    struct Counters {
        std::size_t t = 0;
        std::size_t explored_rounds = 0;
        bool exploring = false;
    };
    Counters counters() const { return {t_, explored_rounds_, exploring_}; }
    const Rng& rng() const { return rng_; }

    static Policy restore(const PublicInstance& inst, PolicySpec spec, Counters c, std::vector<PairEstimator> pairs,
                          std::vector<GlmEstimator> arms, Rng rng) {
        Policy p(inst, std::move(spec), 0);
        if (learns(p.spec_.kind)) {
            const bool sup = p.spec_.kind == PolicyKind::supervised;
            if ((sup ? arms.size() : pairs.size()) != (sup ? p.arm_estimators_.size() : p.pairs_.size())) {
                throw ConfigError("policy snapshot: estimator count does not match the instance");
            }
        }
        p.t_ = c.t;
        p.explored_rounds_ = c.explored_rounds;
        p.exploring_ = c.exploring;
        p.pairs_ = std::move(pairs);
        p.arm_estimators_ = std::move(arms);
        p.rng_ = std::move(rng);
        return p;
    }

private:
    double count_for(const GlmEstimator& est) const {
        return spec_.radius == RadiusMode::round ? static_cast<double>(t_) : static_cast<double>(est.count());
    }

    std::size_t choose_disagreement(std::vector<Probe>& probes) const {
        const double round_radius = radius(static_cast<double>(t_));
        auto value = [&](std::size_t i, std::size_t j) {
            const PairEstimator& pe = pairs_[pair_index(i, j)];
            if (pe.estimator.count() == 0) {
                throw InternalStateError("pair (" + std::to_string(i + 1) + "," + std::to_string(j + 1) +
                                         ") has no observations after exploration");
            }
            const double r = spec_.radius == RadiusMode::round ? round_radius : radius(count_for(pe.estimator));
            return optimistic_disagreement(pe, phi_, r);
        };
        return cascade_select(inst_.cum_costs, value, &probes);
    }

    std::size_t choose_supervised(std::vector<Probe>& probes) const {
        const double round_radius = radius(static_cast<double>(t_));
        auto check = [&](std::size_t a) -> const GlmEstimator& {
            const auto& est = arm_estimators_[a];
            if (est.count() == 0) {
                throw InternalStateError("error estimator of arm " + std::to_string(a + 1) +
                                         " has no observations after exploration");
            }
            return est;
        };
        auto value = [&](std::size_t i, std::size_t j) {
            const auto& ei = check(i);
            const auto& ej = check(j);
            const double r = spec_.radius == RadiusMode::round ? round_radius : radius(count_for(ei));
            return ei.optimistic(phi_, r) - ej.plug_in(phi_);
        };
        return cascade_select(inst_.cum_costs, value, &probes);
    }

    void check_protocol(std::span<const double> x, std::span<const int> prefix) {
        if (!pending_) throw ProtocolError("learn called without a preceding choose");
        if (prefix.size() != pending_arm_ + 1) {
            throw ProtocolError("feedback prefix has length " + std::to_string(prefix.size()) + ", expected " +
                                std::to_string(pending_arm_ + 1));
        }
        if (x.size() != last_x_.size() || !std::equal(x.begin(), x.end(), last_x_.begin())) {
            throw ProtocolError("learn called with a different context than the preceding choose");
        }
        for (int v : prefix) {
            if (v != 0 && v != 1) throw ProtocolError("feedback entries must be 0 or 1");
        }
    }

    void finish_round() {
        pending_ = false;
        ++t_;
        if (!pending_explored_) return;
        ++explored_rounds_;
        if (exploration_.mode == ExplorationSpec::Mode::fixed) {
            exploring_ = explored_rounds_ < exploration_.rounds;
            return;
        }
        if (explored_rounds_ >= exploration_.cap) {
            exploring_ = false;
            return;
        }
        bool ready = true;
        for (const auto& p : pairs_) {
            if (p.estimator.data_min_eig() < exploration_.threshold) {
                ready = false;
                break;
            }
        }
        for (const auto& e : arm_estimators_) {
            if (!ready) break;
            if (e.data_min_eig() < exploration_.threshold) ready = false;
        }
        exploring_ = !ready;
    }

    PublicInstance inst_;
    PolicySpec spec_;
    ConfidenceConfig conf_{};
    ExplorationSpec exploration_{};
    Rng rng_;
    std::vector<PairEstimator> pairs_;
    std::vector<GlmEstimator> arm_estimators_;
    std::size_t t_ = 0;
    std::size_t explored_rounds_ = 0;
    bool exploring_ = false;
    bool pending_ = false;
    bool pending_explored_ = false;
    std::size_t pending_arm_ = 0;
    std::vector<double> last_x_;
    Vector phi_;
};

inline Policy new_policy(const PublicInstance& inst, PolicySpec spec, std::uint64_t seed = 0) {
    return Policy(inst, std::move(spec), seed);
}

}  // namespace uss
