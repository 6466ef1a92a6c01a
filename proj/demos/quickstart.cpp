// Builds a small three-arm cascade on the synthetic problem and drives USS-PD
// by hand through choose/learn, printing regret next to two fixed-arm policies.

#include <cstdio>
#include <vector>

#include "uss/env/data.hpp"
#include "uss/env/oracle.hpp"
#include "uss/env/training.hpp"
#include "uss/policy.hpp"
#include "uss/random.hpp"

int main() {
    const auto data = uss::generate_synthetic(2000, 11);

    // Cheap arm sees x1 only; the others see more of the context.
    uss::TrainingControls tc;
    tc.s_bound = 1e6;
    tc.max_iterations = 500;
    std::vector<uss::ArmModel> arms{
        uss::train_arm(data, {0}, 1e-3, uss::ArmInput::linear, tc).arm,
        uss::train_arm(data, {0, 1}, 1e-3, uss::ArmInput::quadratic, tc).arm,
        uss::train_arm(data, {0, 1, 2}, 1e-9, uss::ArmInput::quadratic, tc).arm,
    };
    const auto inst = uss::ProblemInstance::make(arms, {0.01, 0.03, 0.1}, 3);
    const auto s = uss::stop_costs(inst);
    std::printf("WD fraction over the data: %.4f\n", uss::wd_fraction(inst, data));

    uss::PolicySpec spec;
    spec.kappa = 0.25;
    spec.s_bound = 1000.0;
    spec.radius = uss::RadiusMode::pair_count;
    uss::Policy policy(uss::PublicInstance::of(inst), spec, 1);

    uss::Rng rng(5);
    double regret = 0.0;
    double fixed_regret[2] = {0.0, 0.0};
    const std::size_t horizon = 4000;
    for (std::size_t t = 1; t <= horizon; ++t) {
        const auto& ctx = data[uss::uniform_index(rng, data.size())];
        const auto truth = uss::context_truth(inst, ctx);
        const auto fb = uss::sample_round(truth, rng);
        const std::size_t best = uss::optimal_arm(truth, s);
        const double best_loss = uss::total_loss(truth, s, best);

        const auto d = policy.choose(ctx.x);
        policy.learn(ctx.x, std::span<const int>(fb.outputs.data(), d.arm + 1));
        regret += uss::total_loss(truth, s, d.arm) - best_loss;
        fixed_regret[0] += uss::total_loss(truth, s, 0) - best_loss;
        fixed_regret[1] += uss::total_loss(truth, s, 2) - best_loss;

        if (t % 1000 == 0) {
            std::printf("t=%5zu  uss_pd %8.2f   always arm 1 %8.2f   always arm 3 %8.2f\n", t, regret,
                        fixed_regret[0], fixed_regret[1]);
        }
    }
    std::printf("exploration rounds used: %zu\n", policy.exploration_rounds());
    return 0;
}
