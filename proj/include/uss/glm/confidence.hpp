#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "uss/errors.hpp"
#include "uss/glm/link.hpp"

namespace uss {

// Constants of the confidence ellipsoid around each pairwise MLE.
struct ConfidenceConfig {
    double delta = 0.05;
    double sigma = 0.1;
    double kappa = 0.0;          // link-slope lower bound
    std::size_t arms = 0;        // K
    std::size_t d_prime = 0;     // lifted dimension
    double s_bound = 5.0;        // ||theta|| bound for beta and MLE projection
    double lambda = 0.0;         // lambda*I initialisation (0 = none)

    void validate() const {
        auto bad = [](const std::string& what) { throw ConfigError("ConfidenceConfig: " + what); };
        if (!(delta > 0.0 && delta < 1.0)) bad("delta must lie in (0, 1)");
        if (!(sigma > 0.0 && sigma < 1.0)) bad("sigma must lie in (0, 1)");
        if (!(kappa > 0.0 && kappa <= 0.25)) bad("kappa must lie in (0, 1/4]");
        if (arms == 0) bad("arm count must be positive");
        if (d_prime == 0) bad("d_prime must be positive");
        if (!(s_bound > 0.0) || !std::isfinite(s_bound)) bad("s_bound must be positive");
        if (!(lambda >= 0.0) || !std::isfinite(lambda)) bad("lambda must be >= 0");
    }
};

namespace detail {

inline double log_union_term(const ConfidenceConfig& cfg) {
    const double k = static_cast<double>(cfg.arms);
    return std::log(k * k / (2.0 * cfg.delta));
}

}  // namespace detail

// alpha(t) = (2 sigma / kappa) sqrt( (d'/2) log(1 + 2t/d') + log(K^2 / 2 delta) ),
// with the radicand clamped at zero.
inline double alpha_radius(double t, const ConfidenceConfig& cfg) {
    if (!(t >= 0.0)) throw PreconditionError("alpha_radius: t must be >= 0");
    const double dp = static_cast<double>(cfg.d_prime);
    const double inner = 0.5 * dp * std::log1p(2.0 * t / dp) + detail::log_union_term(cfg);
    return (2.0 * cfg.sigma / cfg.kappa) * std::sqrt(std::fmax(inner, 0.0));
}

// beta(n) = (2 sigma / kappa) sqrt( (d'/2) log(1 + n/(d' lambda)) + log(K^2 / 2 delta) )
//           + 2 sqrt(lambda) S
inline double beta_radius(double n, const ConfidenceConfig& cfg) {
    if (!(cfg.lambda > 0.0)) {
        throw PreconditionError("beta_radius: lambda must be > 0 (use alpha_radius for the unregularised estimator)");
    }
    if (!(n >= 0.0)) throw PreconditionError("beta_radius: n must be >= 0");
    const double dp = static_cast<double>(cfg.d_prime);
    const double inner = 0.5 * dp * std::log1p(n / (dp * cfg.lambda)) + detail::log_union_term(cfg);
    return (2.0 * cfg.sigma / cfg.kappa) * std::sqrt(std::fmax(inner, 0.0)) +
           2.0 * std::sqrt(cfg.lambda) * cfg.s_bound;
}

}  // namespace uss
