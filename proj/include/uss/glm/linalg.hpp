#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "uss/errors.hpp"
#include "uss/glm/features.hpp"

namespace uss {

inline double max_asymmetry(const Matrix& m) {
    return (m - m.transpose()).cwiseAbs().maxCoeff();
}

// Smallest eigenvalue of a symmetric positive-semidefinite matrix, clamped at 0.
inline double min_eig(const Matrix& v) {
    if (v.rows() != v.cols() || v.rows() == 0) {
        throw PreconditionError("min_eig: matrix must be square and non-empty");
    }
    if (!v.allFinite()) throw PreconditionError("min_eig: matrix has non-finite entries");
    const double scale = std::max(1.0, v.cwiseAbs().maxCoeff());
    if (max_asymmetry(v) > 1e-10 * scale) {
        throw PreconditionError("min_eig: matrix is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> solver(v, Eigen::EigenvaluesOnly);
    return std::max(0.0, solver.eigenvalues()[0]);
}

// max_ij |(A B - I)_ij|
inline double identity_deviation(const Matrix& a, const Matrix& b) {
    return (a * b - Matrix::Identity(a.rows(), b.cols())).cwiseAbs().maxCoeff();
}

// Inverse of a symmetric positive-definite matrix; falls back to a pivoted
// LDL^T when the Cholesky factorisation fails.
inline Matrix spd_inverse(const Matrix& v) {
    const Matrix identity = Matrix::Identity(v.rows(), v.cols());
    Eigen::LLT<Matrix> llt(v);
    if (llt.info() == Eigen::Success) return llt.solve(identity);
    return v.ldlt().solve(identity);
}

// Rank-one Sherman-Morrison step: v_inv <- (V + phi phi^T)^-1 given v_inv = V^-1.
// Returns false and leaves v_inv untouched when 1 + phi^T V^-1 phi is not above
// `floor` (or not finite).
inline bool sherman_morrison_update(Matrix& v_inv, const Vector& phi, double floor = 1e-12) {
    const Vector u = v_inv * phi;
    const double denom = 1.0 + phi.dot(u);
    if (!(denom > floor) || !std::isfinite(denom)) return false;
    v_inv.noalias() -= (u / denom) * u.transpose();
    return true;
}

}  // namespace uss
