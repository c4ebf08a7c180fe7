#pragma once

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace cpd {

// Thresholds for treating a symmetric PSD matrix as numerically singular and
// the ridge added in that case.
inline constexpr double kSingularRelTol = 1e-10;
inline constexpr double kRidgeRel = 1e-8;
inline constexpr double kRidgeFloor = 1e-8;  // used when the trace is zero

struct Regularized {
    Eigen::MatrixXd matrix;
    bool ridged = false;
};

/// Adds eps*I (eps = 1e-8 * trace / d) when the smallest eigenvalue falls
/// below 1e-10 * trace. A zero matrix gets the absolute floor instead.
inline Regularized regularize(const Eigen::MatrixXd& a) {
    if (a.rows() != a.cols() || a.rows() == 0) {
        throw std::invalid_argument("regularize: square non-empty matrix required");
    }
    const Eigen::MatrixXd sym = 0.5 * (a + a.transpose());
    const double trace = sym.trace();
    const double d = static_cast<double>(sym.rows());
    double min_eig = 0.0;
    if (sym.rows() == 1) {
        min_eig = sym(0, 0);
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
        min_eig = es.eigenvalues().minCoeff();
    }
    if (trace > 0.0 && min_eig >= kSingularRelTol * trace) {
        return {sym, false};
    }
    const double eps = trace > 0.0 ? kRidgeRel * trace / d : kRidgeFloor;
    Eigen::MatrixXd out = sym;
    out.diagonal().array() += eps;
    return {out, true};
}

namespace detail {

template <typename F>
Eigen::MatrixXd spectral_apply(const Eigen::MatrixXd& spd, F f) {
    if (spd.rows() == 1) {
        Eigen::MatrixXd out(1, 1);
        out(0, 0) = f(spd(0, 0));
        return out;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(spd);
    const Eigen::VectorXd lam = es.eigenvalues().unaryExpr(f);
    return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace detail

/// Inverse of a symmetric PSD matrix after regularization.
inline Eigen::MatrixXd inverse_psd(const Eigen::MatrixXd& a) {
    const auto reg = regularize(a);
    return detail::spectral_apply(reg.matrix, [](double x) { return 1.0 / x; });
}

/// Symmetric inverse square root of a PSD matrix after regularization.
inline Eigen::MatrixXd inverse_sqrt_psd(const Eigen::MatrixXd& a) {
    const auto reg = regularize(a);
    return detail::spectral_apply(reg.matrix, [](double x) { return 1.0 / std::sqrt(x); });
}

}  // namespace cpd
