#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>

#include "cpd/linalg.hpp"
#include "cpd/timeseries.hpp"

namespace cpd {

// Long-run covariance estimate with the bandwidth and sample count it used.
struct LongRunCov {
    Matrix omega;
    std::size_t bandwidth_L = 0;
    std::size_t n_used = 0;
};

/// Empirical autocovariance at `lag`, divisor N:
///   (1/N) * sum_{n=lag+1..N} (X_n - mean)(X_{n-lag} - mean)^T
inline Matrix autocov(const SampleBlock& x, std::size_t lag) {
    const auto n = static_cast<std::size_t>(x.rows());
    if (lag >= n) {
        throw std::invalid_argument("autocov: lag must be < N");
    }
    const Eigen::RowVectorXd mean = x.colwise().mean();
    const Matrix centered = x.rowwise() - mean;
    const auto len = static_cast<Eigen::Index>(n - lag);
    return centered.bottomRows(len).transpose() * centered.topRows(len) /
           static_cast<double>(n);
}

/// floor(log10(N)) computed exactly on integers.
inline std::size_t bartlett_bandwidth(std::size_t n) {
    if (n < 1) {
        throw std::invalid_argument("bartlett_bandwidth: N must be >= 1");
    }
    std::size_t L = 0;
    while (n >= 10) {
        n /= 10;
        ++L;
    }
    return L;
}

/// Triangular kernel: 1 - |x| on [-1, 1], zero outside.
inline double bartlett_weight(double x) {
    const double ax = std::abs(x);
    return ax <= 1.0 ? 1.0 - ax : 0.0;
}

inline LongRunCov bartlett_lrv(const SampleBlock& x, std::size_t L) {
    const auto n = static_cast<std::size_t>(x.rows());
    if (L >= n) {
        throw std::invalid_argument("bartlett_lrv: bandwidth must be < N");
    }
    const Eigen::RowVectorXd mean = x.colwise().mean();
    const Matrix centered = x.rowwise() - mean;
    const double inv_n = 1.0 / static_cast<double>(n);

    Matrix omega = centered.transpose() * centered * inv_n;
    for (std::size_t l = 1; l <= L; ++l) {
        const auto len = static_cast<Eigen::Index>(n - l);
        const Matrix gamma_l =
            centered.bottomRows(len).transpose() * centered.topRows(len) * inv_n;
        const double w = bartlett_weight(static_cast<double>(l) / static_cast<double>(L + 1));
        omega += w * (gamma_l + gamma_l.transpose());
    }
    return {0.5 * (omega + omega.transpose()), L, n};
}

/// Bandwidth chosen as floor(log10(N)).
inline LongRunCov bartlett_lrv(const SampleBlock& x) {
    return bartlett_lrv(x, bartlett_bandwidth(static_cast<std::size_t>(x.rows())));
}

}  // namespace cpd
