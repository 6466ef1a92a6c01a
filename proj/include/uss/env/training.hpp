#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "uss/env/instance.hpp"
#include "uss/errors.hpp"
#include "uss/glm/mle.hpp"

namespace uss {

struct TrainedArm {
    ArmModel arm;
    bool degenerate = false;  // only one class present in the training data
    bool projected = false;   // solver stopped on the norm bound
    double score_norm = 0.0;
    int iterations = 0;
};

struct TrainingControls {
    double s_bound = 1e3;
    int max_iterations = 200;
};

// Minimises mean log-loss + (reg/2) ||theta||^2 over the arm's features
// (intercept included and penalised). The solver is deterministic, so no seed
// is involved.
inline TrainedArm train_arm(const Dataset& data, std::vector<std::size_t> cols, double reg,
                            ArmInput input = ArmInput::linear, TrainingControls controls = {}) {
    if (data.empty()) throw PreconditionError("train_arm: no training data");
    if (!(reg >= 0.0)) throw ConfigError("train_arm: regularization must be >= 0");
    const std::size_t width = data.front().x.size();
    for (std::size_t c : cols) {
        if (c >= width) throw ConfigError("train_arm: column " + std::to_string(c) + " beyond context width");
    }

    TrainedArm out;
    out.arm.columns = std::move(cols);
    out.arm.input = input;
    const std::size_t p = out.arm.feature_count();

    GroupedDesign design(p);
    std::size_t positives = 0;
    for (const auto& ctx : data) {
        if (ctx.x.size() != width) throw DataError("train_arm: ragged training contexts");
        design.add(out.arm.features(ctx.x), ctx.y);
        positives += ctx.y == 1 ? 1 : 0;
    }
    out.degenerate = positives == 0 || positives == data.size();

    MleControls ctl;
    ctl.ridge = reg * static_cast<double>(data.size());
    ctl.s_bound = controls.s_bound;
    ctl.max_iterations = controls.max_iterations;
    ctl.acceptable = 1e-8 * std::max(1.0, static_cast<double>(data.size()));
    const MleResult fit = fit_logistic(design, Vector::Zero(static_cast<Eigen::Index>(p)), ctl);
    out.arm.theta = fit.theta;
    out.projected = fit.projected;
    out.score_norm = fit.score_norm;
    out.iterations = fit.iterations;
    return out;
}

}  // namespace uss
