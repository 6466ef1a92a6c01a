#pragma once

#include <cmath>
#include <cstddef>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "uss/errors.hpp"
#include "uss/glm/features.hpp"
#include "uss/glm/linalg.hpp"
#include "uss/glm/link.hpp"
#include "uss/glm/mle.hpp"

namespace uss {

struct EstimatorOptions {
    double regularizer = 0.0;        // lambda in V = lambda*I + sum phi phi^T
    double s_bound = 5.0;            // MLE projection radius
    double denominator_floor = 1e-12;
    double invertible_floor = 1e-6;  // min eigenvalue needed before V^-1 is formed
    double drift_tolerance = 1e-9;   // max |V^-1 V - I| before re-inverting
    bool check_drift = true;
};

// Online logistic-GLM estimator: full observation log, correlation matrix V,
// its inverse maintained by Sherman-Morrison updates, and the warm-started MLE.
class GlmEstimator {
public:
    GlmEstimator() = default;

    GlmEstimator(std::size_t dim, EstimatorOptions opts)
        : opts_(opts),
          design_(dim),
          v_(opts.regularizer * Matrix::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim))),
          theta_(Vector::Zero(static_cast<Eigen::Index>(dim))) {
        if (dim == 0) throw PreconditionError("GlmEstimator: dimension must be positive");
        if (!(opts.regularizer >= 0.0)) throw PreconditionError("GlmEstimator: regularizer must be >= 0");
        if (opts.regularizer > 0.0) {
            v_inv_ = Matrix::Identity(v_.rows(), v_.cols()) / opts.regularizer;
            has_inverse_ = true;
        }
    }

    std::size_t dim() const { return design_.dim(); }
    std::size_t count() const { return log_.size(); }
    const ObservationLog& log() const { return log_; }
    const Matrix& v() const { return v_; }
    const Matrix& v_inv() const { return v_inv_; }
    bool has_inverse() const { return has_inverse_; }
    const Vector& theta_hat() const { return theta_; }
    bool projected() const { return projected_; }
    double score_norm() const { return score_norm_; }
    double regularizer() const { return opts_.regularizer; }
    const EstimatorOptions& options() const { return opts_; }
    std::size_t numerical_warnings() const { return warnings_; }
    std::size_t drift_reinversions() const { return reinversions_; }

    // Smallest eigenvalue of the data part sum phi phi^T (V without lambda*I).
    double data_min_eig() const {
        return min_eig(v_ - opts_.regularizer * Matrix::Identity(v_.rows(), v_.cols()));
    }

    void update(const Vector& phi, int label) {
        if (static_cast<std::size_t>(phi.size()) != dim()) {
            throw PreconditionError("GlmEstimator::update: feature dimension mismatch");
        }
        if (!phi.allFinite()) throw DataError("GlmEstimator::update: non-finite feature vector");
        if (label != 0 && label != 1) throw DataError("GlmEstimator::update: label must be 0 or 1");

        log_.push_back({phi, label});
        design_.add(phi, label);
        v_.noalias() += phi * phi.transpose();
        update_inverse(phi);

        MleControls ctl;
        ctl.s_bound = opts_.s_bound;
        MleResult fit = fit_logistic(design_, theta_, ctl, &cache_);
        theta_ = std::move(fit.theta);
        projected_ = fit.projected;
        score_norm_ = fit.score_norm;
    }

    // ||phi||_{V^-1}; infinite while V is still singular.
    double width(const Vector& phi) const {
        if (!has_inverse_) return std::numeric_limits<double>::infinity();
        if (!v_inv_.allFinite()) throw InternalStateError("GlmEstimator: V^-1 is not finite");
        const double q = phi.dot(v_inv_ * phi);
        return std::sqrt(std::fmax(q, 0.0));
    }

    double plug_in(const Vector& phi) const {
        require_observations();
        return sigmoid(phi.dot(theta_));
    }

    // mu(phi^T theta_hat + radius * ||phi||_{V^-1})
    double optimistic(const Vector& phi, double radius) const {
        require_observations();
        if (!(radius >= 0.0)) throw PreconditionError("optimistic estimate: radius must be >= 0");
        const double base = phi.dot(theta_);
        if (radius == 0.0) return sigmoid(base);
        const double w = width(phi);
        if (std::isinf(w)) return 1.0;
        return sigmoid(base + radius * w);
    }

    // Restores a snapshot; the design and warm-start cache are rebuilt from the log.
    static GlmEstimator restore(EstimatorOptions opts, ObservationLog log, Matrix v, std::optional<Matrix> v_inv,
                                Vector theta, bool projected, double score_norm) {
        GlmEstimator est(static_cast<std::size_t>(theta.size()), opts);
        for (const auto& obs : log) est.design_.add(obs.phi, obs.label);
        est.log_ = std::move(log);
        est.v_ = std::move(v);
        est.has_inverse_ = v_inv.has_value();
        est.v_inv_ = v_inv.value_or(Matrix());
        est.theta_ = std::move(theta);
        est.projected_ = projected;
        est.score_norm_ = score_norm;
        return est;
    }

private:
    void require_observations() const {
        if (log_.empty()) throw InternalStateError("GlmEstimator: estimate requested before any observation");
    }

    void warn(const std::string& msg) {
        ++warnings_;
        std::clog << "uss: numerical warning: " << msg << '\n';
    }

    void reinvert() { v_inv_ = spd_inverse(v_); }

    void update_inverse(const Vector& phi) {
        if (!has_inverse_) {
            if (min_eig(v_) >= opts_.invertible_floor) {
                reinvert();
                has_inverse_ = true;
            }
            return;
        }
        if (!sherman_morrison_update(v_inv_, phi, opts_.denominator_floor)) {
            warn("Sherman-Morrison denominator 1 + " + std::to_string(phi.dot(v_inv_ * phi)) +
                 " below floor; inverting directly");
            reinvert();
            return;
        }
        if (opts_.check_drift && identity_deviation(v_inv_, v_) > opts_.drift_tolerance) {
            ++reinversions_;
            reinvert();
        }
    }

    EstimatorOptions opts_{};
    GroupedDesign design_{};
    ObservationLog log_{};
    Matrix v_{};
    Matrix v_inv_{};
    bool has_inverse_ = false;
    Vector theta_{};
    bool projected_ = false;
    double score_norm_ = 0.0;
    NewtonCache cache_{};
    std::size_t warnings_ = 0;
    std::size_t reinversions_ = 0;
};

// Estimator for the disagreement probability of arms (first, second), first < second.
struct PairEstimator {
    std::size_t first = 0;
    std::size_t second = 0;
    GlmEstimator estimator;
};

inline void pair_update(PairEstimator& est, const Vector& phi, int disagreement) {
    est.estimator.update(phi, disagreement);
}

inline double optimistic_disagreement(const PairEstimator& est, const Vector& phi, double radius) {
    return est.estimator.optimistic(phi, radius);
}

}  // namespace uss
