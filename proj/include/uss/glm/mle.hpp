#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "uss/errors.hpp"
#include "uss/glm/confidence.hpp"
#include "uss/glm/features.hpp"
#include "uss/glm/link.hpp"

namespace uss {

struct Observation {
    Vector phi;
    int label = 0;  // 0 or 1
};

using ObservationLog = std::vector<Observation>;

// Left side of the logistic score equation,
//   sum_s (d_s - mu(phi_s^T theta)) phi_s.
inline Vector score_residual(const Vector& theta, const ObservationLog& log) {
    Vector g = Vector::Zero(theta.size());
    for (const auto& obs : log) {
        if (obs.phi.size() != theta.size()) {
            throw PreconditionError("score_residual: feature dimension does not match theta");
        }
        const double z = obs.phi.dot(theta);
        // d - mu(z), written without cancellation for either label.
        const double r = obs.label == 1 ? sigmoid(-z) : -sigmoid(z);
        g.noalias() += r * obs.phi;
    }
    return g;
}

// Observations grouped by identical feature rows. The score and Hessian only
// depend on (row, trial count, label sum), so repeated contexts cost one row.
class GroupedDesign {
public:
    GroupedDesign() = default;
    explicit GroupedDesign(std::size_t dim) : dim_(dim) {}

    std::size_t dim() const { return dim_; }
    std::size_t rows() const { return trials_.size(); }
    double total_trials() const { return total_; }

    void add(const Vector& phi, int label) {
        if (static_cast<std::size_t>(phi.size()) != dim_) {
            throw PreconditionError("GroupedDesign: feature dimension mismatch");
        }
        const std::uint64_t key = hash(phi);
        auto [lo, hi] = index_.equal_range(key);
        for (auto it = lo; it != hi; ++it) {
            const double* row = data_.data() + it->second * dim_;
            if (std::memcmp(row, phi.data(), dim_ * sizeof(double)) == 0) {
                trials_[it->second] += 1.0;
                successes_[it->second] += label;
                total_ += 1.0;
                return;
            }
        }
        index_.emplace(key, trials_.size());
        data_.insert(data_.end(), phi.data(), phi.data() + dim_);
        trials_.push_back(1.0);
        successes_.push_back(label);
        total_ += 1.0;
    }

    // Penalised score g = X^T r - ridge * theta and, optionally, Hessian of the
    // negative log-likelihood H = X^T W X + ridge * I.
    void evaluate(const Vector& theta, double ridge, Vector& score, Matrix* hessian) const {
        const auto m = static_cast<Eigen::Index>(rows());
        const auto d = static_cast<Eigen::Index>(dim_);
        const RowMap x(data_.data(), m, d);
        const ArrayMap n(trials_.data(), m);
        const ArrayMap s(successes_.data(), m);

        const Eigen::ArrayXd z = (x * theta).array();
        const Eigen::ArrayXd e = (-z.abs()).exp();
        const Eigen::ArrayXd inv = 1.0 / (1.0 + e);
        const Eigen::ArrayXd mu = (z >= 0.0).select(inv, e * inv);
        const Eigen::ArrayXd one_minus_mu = (z >= 0.0).select(e * inv, inv);
        const Eigen::VectorXd r = (s * one_minus_mu - (n - s) * mu).matrix();

        score.noalias() = x.transpose() * r;
        if (ridge != 0.0) score.noalias() -= ridge * theta;
        if (hessian != nullptr) {
            const Eigen::ArrayXd w = n * e * inv * inv;
            const Matrix xw = (x.array().colwise() * w).matrix();
            hessian->noalias() = x.transpose() * xw;
            if (ridge != 0.0) hessian->diagonal().array() += ridge;
        }
    }

    bool all_finite() const {
        for (double v : data_) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

private:
    using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    using RowMap = Eigen::Map<const RowMatrix>;
    using ArrayMap = Eigen::Map<const Eigen::ArrayXd>;

    static std::uint64_t hash(const Vector& phi) {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (Eigen::Index k = 0; k < phi.size(); ++k) {
            std::uint64_t bits = 0;
            const double v = phi[k];
            std::memcpy(&bits, &v, sizeof bits);
            h ^= bits + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        }
        return h;
    }

    std::size_t dim_ = 0;
    std::vector<double> data_;
    std::vector<double> trials_;
    std::vector<double> successes_;
    double total_ = 0.0;
    std::unordered_multimap<std::uint64_t, std::size_t> index_;
};

struct MleControls {
    double s_bound = 5.0;
    double ridge = 0.0;
    int max_iterations = 50;
    double tolerance = 1e-10;    // target score norm
    double acceptable = 1e-8;    // largest score norm still reported as a solution
    double divergence = 2.0;     // stop once ||theta|| exceeds divergence * s_bound
};

struct MleResult {
    Vector theta;
    double score_norm = 0.0;
    int iterations = 0;
    bool projected = false;  // no finite root inside the ball was found
};

// Factorised Hessian kept between warm-started solves. A stale factor is
// used for chord steps and refreshed as soon as it stops contracting.
struct NewtonCache {
    std::optional<Eigen::LLT<Matrix>> factor;
};

namespace detail {

inline Vector newton_direction(const Matrix& h, const Vector& g, NewtonCache* cache) {
    Eigen::LLT<Matrix> llt(h);
    if (llt.info() == Eigen::Success) {
        Vector step = llt.solve(g);
        if (cache != nullptr) cache->factor = std::move(llt);
        if (step.allFinite()) return step;
    } else if (cache != nullptr) {
        cache->factor.reset();
    }
    // Rank-deficient Hessian (e.g. fewer distinct rows than dimensions):
    // minimum-norm Newton step.
    return h.completeOrthogonalDecomposition().solve(g);
}

}  // namespace detail

// Damped Newton iteration on the (optionally ridge-penalised) logistic score
// equation, warm-started at theta_init. Steps are halved while they fail to
// decrease the score norm. When no root with ||theta|| <= s_bound is reached
// (separable data, divergence, stalling) the best iterate is projected onto
// the ball and the result is flagged.
inline MleResult fit_logistic(const GroupedDesign& design, const Vector& theta_init,
                              const MleControls& ctl, NewtonCache* cache = nullptr) {
    const auto d = static_cast<Eigen::Index>(design.dim());
    MleResult out;
    out.theta = (theta_init.size() == d && theta_init.allFinite()) ? theta_init : Vector::Zero(d);

    Vector g(d);
    Matrix h(d, d);
    design.evaluate(out.theta, ctl.ridge, g, nullptr);
    double norm = g.norm();

    while (norm > ctl.tolerance && out.iterations < ctl.max_iterations) {
        ++out.iterations;

        if (cache != nullptr && cache->factor.has_value()) {
            const Vector step = cache->factor->solve(g);
            Vector trial = out.theta + step;
            Vector gt(d);
            design.evaluate(trial, ctl.ridge, gt, nullptr);
            const double nt = gt.norm();
            if (std::isfinite(nt) && nt <= 0.25 * norm) {
                out.theta = std::move(trial);
                g = std::move(gt);
                norm = nt;
                continue;
            }
            cache->factor.reset();
        }

        design.evaluate(out.theta, ctl.ridge, g, &h);
        const Vector step = detail::newton_direction(h, g, cache);
        double scale = 1.0;
        bool accepted = false;
        for (int halvings = 0; halvings < 40 && step.allFinite(); ++halvings, scale *= 0.5) {
            Vector trial = out.theta + scale * step;
            Vector gt(d);
            design.evaluate(trial, ctl.ridge, gt, nullptr);
            const double nt = gt.norm();
            if (std::isfinite(nt) && nt < norm) {
                out.theta = std::move(trial);
                g = std::move(gt);
                norm = nt;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
        // Separable data: the iterates run off to infinity and the result will
        // be projected anyway.
        if (out.theta.norm() > ctl.divergence * ctl.s_bound) break;
    }

    out.score_norm = norm;
    const double theta_norm = out.theta.norm();
    if (norm > ctl.acceptable || theta_norm > ctl.s_bound) {
        out.projected = true;
        if (theta_norm > ctl.s_bound) {
            out.theta *= ctl.s_bound / theta_norm;
            design.evaluate(out.theta, ctl.ridge, g, nullptr);
            out.score_norm = g.norm();
        }
        if (cache != nullptr) cache->factor.reset();
    }
    return out;
}

inline GroupedDesign group_log(const ObservationLog& log) {
    if (log.empty()) throw PreconditionError("solve_mle: observation log is empty");
    GroupedDesign design(static_cast<std::size_t>(log.front().phi.size()));
    for (const auto& obs : log) {
        if (!obs.phi.allFinite()) throw DataError("solve_mle: non-finite feature vector in log");
        if (obs.label != 0 && obs.label != 1) throw DataError("solve_mle: labels must be 0 or 1");
        design.add(obs.phi, obs.label);
    }
    return design;
}

// Root of the score equation for the disagreement GLM.
inline MleResult solve_mle(const ObservationLog& log, const Vector& theta_init,
                           const ConfidenceConfig& cfg) {
    const GroupedDesign design = group_log(log);
    MleControls ctl;
    ctl.s_bound = cfg.s_bound;
    return fit_logistic(design, theta_init, ctl);
}

}  // namespace uss
