#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "uss/errors.hpp"

namespace uss {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Degree-2 polynomial lift. Monomial order is fixed:
//   bias, x_1 .. x_d, then x_a * x_b for a <= b in lexicographic (a, b) order.
// The whole vector is scaled by 1/sqrt(lifted_dim) so ||lift(x)|| <= 1 on
// the cube [-1, 1]^d.
struct FeatureMapConfig {
    std::size_t input_dim = 0;
    std::size_t lifted_dim = 0;
    double normalization_scale = 0.0;

    static std::size_t poly2_dim(std::size_t d) { return 1 + d + d * (d + 1) / 2; }

    static FeatureMapConfig poly2(std::size_t d) {
        if (d == 0) throw PreconditionError("FeatureMapConfig: input_dim must be positive");
        const std::size_t dp = poly2_dim(d);
        return {d, dp, 1.0 / std::sqrt(static_cast<double>(dp))};
    }

    void validate() const {
        if (input_dim == 0 || lifted_dim != poly2_dim(input_dim)) {
            throw ConfigError("FeatureMapConfig: lifted_dim must equal 1 + d + d(d+1)/2");
        }
        if (!(normalization_scale > 0.0) ||
            normalization_scale > 1.0 / std::sqrt(static_cast<double>(lifted_dim)) * (1.0 + 1e-12)) {
            throw ConfigError("FeatureMapConfig: normalization_scale must be in (0, 1/sqrt(lifted_dim)]");
        }
    }

    friend bool operator==(const FeatureMapConfig&, const FeatureMapConfig&) = default;
};

inline Vector lift(std::span<const double> x, const FeatureMapConfig& cfg) {
    if (x.size() != cfg.input_dim) {
        throw PreconditionError("lift: context has dimension " + std::to_string(x.size()) +
                                ", expected " + std::to_string(cfg.input_dim));
    }
    for (std::size_t k = 0; k < x.size(); ++k) {
        if (!(x[k] >= -1.0 && x[k] <= 1.0)) {
            throw DomainError("lift: context coordinate " + std::to_string(k) +
                              " is outside [-1, 1] (value " + std::to_string(x[k]) + ")");
        }
    }
    const std::size_t d = x.size();
    const double s = cfg.normalization_scale;
    Vector out(static_cast<Eigen::Index>(cfg.lifted_dim));
    Eigen::Index pos = 0;
    out[pos++] = s;
    for (std::size_t a = 0; a < d; ++a) out[pos++] = s * x[a];
    for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t b = a; b < d; ++b) out[pos++] = s * x[a] * x[b];
    }
    return out;
}

}  // namespace uss
