#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include "support.hpp"

using namespace cpd;

namespace {

// Direct double loop with divisor N.
Matrix brute_autocov(const Matrix& x, std::size_t lag) {
    const auto n = static_cast<std::size_t>(x.rows());
    const auto d = static_cast<std::size_t>(x.cols());
    std::vector<double> mean(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t a = 0; a < d; ++a) mean[a] += x(i, a) / static_cast<double>(n);
    Matrix out = Matrix::Zero(d, d);
    for (std::size_t i = lag; i < n; ++i)
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = 0; b < d; ++b)
                out(a, b) += (x(i, a) - mean[a]) * (x(i - lag, b) - mean[b]) / static_cast<double>(n);
    return out;
}

Matrix brute_bartlett(const Matrix& x, std::size_t L) {
    Matrix omega = brute_autocov(x, 0);
    for (std::size_t l = 1; l <= L; ++l) {
        const double w = 1.0 - static_cast<double>(l) / static_cast<double>(L + 1);
        const Matrix g = brute_autocov(x, l);
        omega += w * (g + g.transpose());
    }
    return omega;
}

double max_rel_diff(const Matrix& a, const Matrix& b) {
    return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

}  // namespace

TEST(Autocov, MatchesBruteForceOnShortSeries) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Matrix x = test::gaussian(5 + seed * 2, 1 + seed % 3, seed);
        for (std::size_t lag = 0; lag < 4; ++lag) {
            EXPECT_LE(max_rel_diff(autocov(x, lag), brute_autocov(x, lag)), 1e-12);
        }
    }
}

TEST(Autocov, LagTooLargeThrows) {
    EXPECT_THROW(autocov(Matrix::Zero(3, 1), 3), std::invalid_argument);
}

TEST(Bartlett, BandwidthIsFloorLog10) {
    EXPECT_EQ(bartlett_bandwidth(1), 0u);
    EXPECT_EQ(bartlett_bandwidth(9), 0u);
    EXPECT_EQ(bartlett_bandwidth(10), 1u);
    EXPECT_EQ(bartlett_bandwidth(99), 1u);
    EXPECT_EQ(bartlett_bandwidth(100), 2u);
    EXPECT_EQ(bartlett_bandwidth(1000), 3u);
    EXPECT_EQ(bartlett_bandwidth(999999), 5u);
}

TEST(Bartlett, WeightsAreTriangular) {
    EXPECT_DOUBLE_EQ(bartlett_weight(0.0), 1.0);
    EXPECT_DOUBLE_EQ(bartlett_weight(0.25), 0.75);
    EXPECT_DOUBLE_EQ(bartlett_weight(-0.5), 0.5);
    EXPECT_DOUBLE_EQ(bartlett_weight(1.5), 0.0);
}

TEST(Bartlett, MatchesBruteForce) {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        const Matrix x = test::gaussian(12 + seed * 2, 1 + seed % 3, 100 + seed);
        const auto lrv = bartlett_lrv(x);
        EXPECT_EQ(lrv.bandwidth_L, 1u);
        EXPECT_LE(max_rel_diff(lrv.omega, brute_bartlett(x, lrv.bandwidth_L)), 1e-12);
    }
}

TEST(Bartlett, ZeroBandwidthIsSampleCovariance) {
    const Matrix x = test::gaussian(9, 2, 3);
    EXPECT_LE(max_rel_diff(bartlett_lrv(x).omega, autocov(x, 0)), 1e-14);
}

TEST(Bartlett, SymmetricPositiveSemidefinite) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Matrix x = test::gaussian(30 + seed * 7, 3, 500 + seed);
        // Serial dependence and cross-correlation.
        for (Eigen::Index i = 1; i < x.rows(); ++i) x.row(i) += 0.8 * x.row(i - 1);
        x.col(2) = x.col(0) - 0.5 * x.col(1);
        const Matrix omega = bartlett_lrv(x).omega;
        EXPECT_EQ(omega, omega.transpose());
        Eigen::SelfAdjointEigenSolver<Matrix> es(omega);
        EXPECT_GE(es.eigenvalues().minCoeff(), -1e-12 * omega.trace());
    }
}

TEST(Bartlett, IidVarianceConverges) {
    const Matrix x = test::gaussian(20000, 1, 9, 2.0);
    EXPECT_NEAR(bartlett_lrv(x).omega(0, 0), 4.0, 0.2);
}

TEST(Regularize, RidgesSingularMatrices) {
    const auto zero = regularize(Matrix::Zero(2, 2));
    EXPECT_TRUE(zero.ridged);
    EXPECT_GT(zero.matrix(0, 0), 0.0);

    Matrix rank1(2, 2);
    rank1 << 1, 1, 1, 1;
    const auto r = regularize(rank1);
    EXPECT_TRUE(r.ridged);
    EXPECT_TRUE(inverse_psd(rank1).allFinite());

    const Matrix eye = Matrix::Identity(3, 3);
    EXPECT_FALSE(regularize(eye).ridged);
    EXPECT_LE(max_rel_diff(inverse_sqrt_psd(4.0 * eye), 0.5 * eye), 1e-14);
}

TEST(Regularize, InverseSqrtSquaresToInverse) {
    Matrix a(2, 2);
    a << 2.0, 0.5, 0.5, 1.0;
    const Matrix s = inverse_sqrt_psd(a);
    EXPECT_LE(max_rel_diff(s * s, a.inverse()), 1e-12);
}
