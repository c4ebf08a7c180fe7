#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <set>
#include <stdexcept>
#include <vector>

#include "cpd/critvals.hpp"
#include "cpd/linalg.hpp"
#include "cpd/longrun.hpp"
#include "cpd/timeseries.hpp"

namespace cpd {

struct OfflineTestResult {
    double statistic = 0.0;               // M
    std::optional<std::size_t> cp_index;  // 1-based, last index before the change
    bool reject = false;
    double critval_used = 0.0;
    std::size_t n = 0;                    // length of the tested series

    /// Change point rescaled to (0, 1].
    std::optional<double> cp_fraction() const {
        if (!cp_index) return std::nullopt;
        return static_cast<double>(*cp_index) / static_cast<double>(n);
    }
};

/// CUSUM path, row n holds C_n = (S_n - (n/N) S_N) / sqrt(N).
inline Matrix cusum_path(const SampleBlock& x) {
    const auto n = x.rows();
    if (n < 2) {
        throw std::invalid_argument("cusum_path: need at least 2 samples");
    }
    const double big_n = static_cast<double>(n);
    const Eigen::RowVectorXd total = x.colwise().sum();
    Matrix c(n, x.cols());
    Eigen::RowVectorXd running = Eigen::RowVectorXd::Zero(x.cols());
    const double scale = 1.0 / std::sqrt(big_n);
    for (Eigen::Index i = 0; i < n; ++i) {
        running += x.row(i);
        c.row(i) = scale * (running - (static_cast<double>(i + 1) / big_n) * total);
    }
    // The last partial sum equals the total.
    c.row(n - 1).setZero();
    return c;
}

namespace detail {

struct MaxQuadForm {
    double value = 0.0;
    std::size_t argmax = 1;  // 1-based
};

// max_n C_n^T Omega^{-1} C_n with the first index winning ties.
inline MaxQuadForm max_quadratic_form(const SampleBlock& x) {
    const Matrix c = cusum_path(x);
    const Matrix omega_inv = inverse_psd(bartlett_lrv(x).omega);
    MaxQuadForm best{-1.0, 1};
    for (Eigen::Index i = 0; i < c.rows(); ++i) {
        const Eigen::VectorXd ci = c.row(i).transpose();
        const double q = ci.dot(omega_inv * ci);
        if (q > best.value) {
            best = {q, static_cast<std::size_t>(i) + 1};
        }
    }
    best.value = std::max(best.value, 0.0);
    return best;
}

}  // namespace detail

/// At-most-one-change CUSUM test on the whole block.
inline OfflineTestResult offline_test(const SampleBlock& x, double alpha, const CritVal& critval) {
    if (x.rows() < 4) {
        throw std::invalid_argument("offline_test: need at least 4 samples");
    }
    if (critval.request.kind != CritKind::OfflineMax) {
        throw std::invalid_argument("offline_test: critical value must be of kind OfflineMax");
    }
    if (critval.request.d != static_cast<std::size_t>(x.cols())) {
        throw std::invalid_argument("offline_test: critical value dimension mismatch");
    }
    if (critval.request.alpha != alpha) {
        throw std::invalid_argument("offline_test: critical value alpha mismatch");
    }
    const auto best = detail::max_quadratic_form(x);
    OfflineTestResult r;
    r.statistic = best.value;
    r.critval_used = critval.value;
    r.n = static_cast<std::size_t>(x.rows());
    r.reject = r.statistic >= r.critval_used;
    if (r.reject) {
        r.cp_index = best.argmax;
    }
    return r;
}

/// Returns the OfflineMax critical value for (d, alpha).
using OfflineCritValProvider = std::function<CritVal(std::size_t d, double alpha)>;

inline OfflineCritValProvider offline_provider(CritValSource& source) {
    return [&source](std::size_t d, double alpha) {
        return source.get(CritKind::OfflineMax, d, 0.0, alpha);
    };
}

struct ChangePoint {
    std::size_t index = 0;       // global 1-based index, last sample before the change
    OfflineTestResult validation;  // test on the final validation window
    std::size_t window_lo = 0;
    std::size_t window_hi = 0;
};

struct ChangePointSet {
    std::vector<ChangePoint> cps;  // strictly increasing by index
    double alpha = 0.05;
    std::size_t validation_rounds = 0;
    bool hit_round_cap = false;

    std::vector<std::size_t> indices() const {
        std::vector<std::size_t> out;
        out.reserve(cps.size());
        for (const auto& cp : cps) out.push_back(cp.index);
        return out;
    }
};

struct SegmentOptions {
    std::size_t min_seg = 20;
    std::size_t max_validation_rounds = 10;
};

namespace detail {

inline void binary_segmentation(const SampleBlock& x, std::size_t lo, std::size_t hi, double alpha,
                                const CritVal& cv, std::size_t min_seg,
                                std::vector<std::size_t>& out) {
    const std::size_t len = hi - lo + 1;
    if (len < 2 * min_seg || len < 4) {
        return;
    }
    const auto block = x.middleRows(static_cast<Eigen::Index>(lo - 1), static_cast<Eigen::Index>(len));
    const auto r = offline_test(block, alpha, cv);
    if (!r.reject) {
        return;
    }
    const std::size_t k = lo + *r.cp_index - 1;
    out.push_back(k);
    binary_segmentation(x, lo, k, alpha, cv, min_seg, out);
    if (k < hi) {
        binary_segmentation(x, k + 1, hi, alpha, cv, min_seg, out);
    }
}

}  // namespace detail

/// Multiple change points: binary segmentation followed by pairwise
/// validation rounds in which each candidate is re-tested on the window
/// bounded by its neighbours.
inline ChangePointSet segment(const SampleBlock& x, double alpha,
                              const OfflineCritValProvider& provider, SegmentOptions opts = {}) {
    const auto n = static_cast<std::size_t>(x.rows());
    if (opts.min_seg < 1) {
        throw std::invalid_argument("segment: min_seg must be positive");
    }
    if (n < 2 * opts.min_seg || n < 4) {
        throw std::invalid_argument("segment: series shorter than 2 * min_seg");
    }
    const CritVal cv = provider(static_cast<std::size_t>(x.cols()), alpha);

    std::vector<std::size_t> candidates;
    detail::binary_segmentation(x, 1, n, alpha, cv, opts.min_seg, candidates);
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    ChangePointSet result;
    result.alpha = alpha;
    std::vector<ChangePoint> validated;
    bool converged = false;
    for (std::size_t round = 0; round < opts.max_validation_rounds; ++round) {
        result.validation_rounds = round + 1;
        std::vector<ChangePoint> next;
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            const std::size_t lo = (i == 0 ? 0 : candidates[i - 1]) + 1;
            const std::size_t hi = (i + 1 == candidates.size()) ? n : candidates[i + 1];
            if (hi < lo + 3) {
                continue;  // window too short to test; cannot be validated
            }
            const auto block = x.middleRows(static_cast<Eigen::Index>(lo - 1),
                                            static_cast<Eigen::Index>(hi - lo + 1));
            const auto r = offline_test(block, alpha, cv);
            if (!r.reject) {
                continue;
            }
            const std::size_t found = lo + *r.cp_index - 1;
            const std::size_t diff =
                found > candidates[i] ? found - candidates[i] : candidates[i] - found;
            const std::size_t keep = diff > opts.min_seg ? found : candidates[i];
            next.push_back({keep, r, lo, hi});
        }
        std::sort(next.begin(), next.end(),
                  [](const ChangePoint& a, const ChangePoint& b) { return a.index < b.index; });
        next.erase(std::unique(next.begin(), next.end(),
                               [](const ChangePoint& a, const ChangePoint& b) {
                                   return a.index == b.index;
                               }),
                   next.end());
        std::vector<std::size_t> next_idx;
        for (const auto& cp : next) next_idx.push_back(cp.index);
        validated = std::move(next);
        if (next_idx == candidates) {
            converged = true;
            break;
        }
        candidates = std::move(next_idx);
    }
    result.hit_round_cap = !converged && !candidates.empty();
    if (!converged) {
        // Re-validate the final set so every returned change point carries a
        // test on its current neighbour window; drop any that no longer reject.
        std::vector<ChangePoint> final_set;
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            const std::size_t lo = (i == 0 ? 0 : candidates[i - 1]) + 1;
            const std::size_t hi = (i + 1 == candidates.size()) ? n : candidates[i + 1];
            if (hi < lo + 3) continue;
            const auto block = x.middleRows(static_cast<Eigen::Index>(lo - 1),
                                            static_cast<Eigen::Index>(hi - lo + 1));
            const auto r = offline_test(block, alpha, cv);
            if (r.reject) final_set.push_back({candidates[i], r, lo, hi});
        }
        validated = std::move(final_set);
    }
    result.cps = std::move(validated);
    return result;
}

inline ChangePointSet segment(const TimeSeries& s, double alpha, const OfflineCritValProvider& provider,
                              SegmentOptions opts = {}) {
    return segment(s.values(), alpha, provider, opts);
}

}  // namespace cpd
