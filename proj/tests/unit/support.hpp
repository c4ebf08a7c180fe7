#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "cpd/cpd.hpp"

namespace cpd::test {

// Coarse simulated critical values; enough for behavioural tests.
inline CritValSource& cheap_source() {
    static CritValSource source([] {
        CritValRequest r;
        r.grid_steps = 1000;
        r.replications = 20000;
        r.seed = 11;
        return r;
    }());
    return source;
}

inline Matrix gaussian(std::size_t n, std::size_t d, std::uint64_t seed, double sd = 1.0) {
    Engine eng = make_engine(seed, 0, 0x7E57);
    std::normal_distribution<double> z(0.0, sd);
    Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = z(eng);
    return m;
}

// Piecewise-constant levels plus N(0, sd^2) noise; breaks are the last index
// of each segment.
inline Matrix steps(std::size_t n, const std::vector<std::size_t>& breaks,
                    const std::vector<double>& levels, std::uint64_t seed, double sd = 1.0) {
    Matrix m = gaussian(n, 1, seed, sd);
    std::size_t seg = 0;
    for (std::size_t i = 1; i <= n; ++i) {
        if (seg < breaks.size() && i > breaks[seg]) ++seg;
        m(static_cast<Eigen::Index>(i - 1), 0) += levels[seg];
    }
    return m;
}

inline std::vector<double> to_vec(const Matrix& m) {
    return {m.data(), m.data() + m.rows()};
}

}  // namespace cpd::test
