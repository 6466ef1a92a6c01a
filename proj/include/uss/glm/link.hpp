#pragma once

#include <cmath>

#include "uss/errors.hpp"

namespace uss {

// Logistic link mu(z) = 1 / (1 + exp(-z)). Saturates to exactly 0 or 1 far
// in the tails without overflowing.
inline double sigmoid(double z) noexcept {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// mu'(z) = mu(z) * mu(-z); the product form keeps full relative accuracy in
// the tails where 1 - mu(z) would cancel.
inline double sigmoid_derivative(double z) noexcept {
    const double e = std::exp(-std::fabs(z));
    const double d = 1.0 + e;
    return e / (d * d);
}

// Worst-case link slope over inner products |z| <= s_bound + 1, i.e. for
// ||phi|| <= 1 and ||theta|| <= s_bound + 1.
inline double kappa_lower_bound(double s_bound) {
    if (!(s_bound >= 0.0) || !std::isfinite(s_bound)) {
        throw PreconditionError("kappa_lower_bound: s_bound must be finite and >= 0");
    }
    return sigmoid_derivative(s_bound + 1.0);
}

}  // namespace uss
