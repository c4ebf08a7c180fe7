#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <utility>

#include "cpd/critvals.hpp"
#include "cpd/linalg.hpp"
#include "cpd/longrun.hpp"
#include "cpd/timeseries.hpp"

namespace cpd {

enum class DetectorKind { Standard, Ratio };

inline const char* to_string(DetectorKind k) {
    return k == DetectorKind::Standard ? "standard" : "ratio";
}

inline DetectorKind detector_kind_from_string(const std::string& s) {
    if (s == "standard") return DetectorKind::Standard;
    if (s == "ratio") return DetectorKind::Ratio;
    throw std::invalid_argument("unknown detector kind '" + s + "'");
}

inline CritKind crit_kind_for(DetectorKind k) {
    return k == DetectorKind::Standard ? CritKind::OnlineStandard : CritKind::OnlineRatio;
}

/// Boundary function sqrt(m) (1 + k/m) (k/(k+m))^gamma.
inline double weight_g(std::size_t m, std::size_t k, double gamma) {
    if (m < 1 || k < 1) {
        throw std::invalid_argument("weight_g: m and k must be >= 1");
    }
    if (!(gamma >= 0.0 && gamma < 0.5)) {
        throw std::invalid_argument("weight_g: gamma must lie in [0, 0.5)");
    }
    const double md = static_cast<double>(m);
    const double kd = static_cast<double>(k);
    return std::sqrt(md) * (1.0 + kd / md) * std::pow(kd / (kd + md), gamma);
}

/// Unnormalized standard CUSUM: sum of the k monitored samples minus (k/m)
/// times the training sum.
inline Vector standard_cusum_vector(const Vector& post_sum, const Vector& train_sum, std::size_t k,
                                    std::size_t m) {
    return post_sum - (static_cast<double>(k) / static_cast<double>(m)) * train_sum;
}

struct Verdict {
    bool alarm = false;
    double detector_value = 0.0;
    double threshold = 0.0;
    std::size_t k_at_eval = 0;
};

// Sequential mean-change detector trained on a change-free prefix. One
// instance monitors one stream; the stopping time is absorbing.
class OnlineDetector {
public:
    static constexpr std::size_t kMinTraining = 4;

    static OnlineDetector train(const SampleBlock& prefix, DetectorKind kind, double gamma,
                                const CritVal& critval) {
        const auto m = static_cast<std::size_t>(prefix.rows());
        if (m < kMinTraining) {
            throw std::invalid_argument("OnlineDetector::train: need at least 4 training samples");
        }
        if (critval.request.kind != crit_kind_for(kind)) {
            throw std::invalid_argument("OnlineDetector::train: critical value kind mismatch");
        }
        if (critval.request.d != static_cast<std::size_t>(prefix.cols())) {
            throw std::invalid_argument("OnlineDetector::train: critical value dimension mismatch");
        }
        if (critval.request.gamma != gamma) {
            throw std::invalid_argument("OnlineDetector::train: critical value gamma mismatch");
        }
        OnlineDetector det;
        det.kind_ = kind;
        det.m_ = m;
        det.gamma_ = gamma;
        det.critval_ = critval;
        det.train_sum_ = prefix.colwise().sum().transpose();
        det.training_mean_ = det.train_sum_ / static_cast<double>(m);
        det.cum_sum_post_ = Vector::Zero(prefix.cols());
        if (kind == DetectorKind::Standard) {
            det.omega_ = bartlett_lrv(prefix).omega;
            det.omega_inv_sqrt_ = inverse_sqrt_psd(det.omega_);
        } else {
            // (1/m^2) sum_j j^2 D_j D_j^T with D_j the mean of the first j
            // samples minus the training mean.
            Matrix denom = Matrix::Zero(prefix.cols(), prefix.cols());
            Vector partial = Vector::Zero(prefix.cols());
            for (std::size_t j = 1; j <= m; ++j) {
                partial += prefix.row(static_cast<Eigen::Index>(j - 1)).transpose();
                const Vector jd = partial - static_cast<double>(j) * det.training_mean_;
                denom.noalias() += jd * jd.transpose();
            }
            det.ratio_denominator_ = denom / (static_cast<double>(m) * static_cast<double>(m));
            det.ratio_denominator_inv_ = inverse_psd(det.ratio_denominator_);
        }
        return det;
    }

    DetectorKind kind() const noexcept { return kind_; }
    std::size_t m() const noexcept { return m_; }
    std::size_t k() const noexcept { return k_; }
    std::size_t dim() const noexcept { return static_cast<std::size_t>(training_mean_.size()); }
    double gamma() const noexcept { return gamma_; }
    const CritVal& critval() const noexcept { return critval_; }
    const Vector& training_mean() const noexcept { return training_mean_; }
    const Vector& cum_sum_post() const noexcept { return cum_sum_post_; }
    const Matrix& omega() const noexcept { return omega_; }
    const Matrix& omega_inv_sqrt() const noexcept { return omega_inv_sqrt_; }
    const Matrix& ratio_denominator() const noexcept { return ratio_denominator_; }
    /// Monitoring step (k) at which the alarm fired.
    std::optional<std::size_t> stopped_at() const noexcept { return stopped_at_; }

    double threshold(std::size_t k) const {
        const double g = weight_g(m_, k, gamma_);
        if (kind_ == DetectorKind::Standard) {
            return critval_.value * g;
        }
        // The ratio statistic is O(1) in m, so the squared boundary is taken
        // per unit of training length.
        return critval_.value * g * g / static_cast<double>(m_);
    }

    /// Detector value after the k monitored samples consumed so far.
    double value() const {
        if (k_ == 0) return 0.0;
        if (kind_ == DetectorKind::Standard) {
            const Vector raw = standard_cusum_vector(cum_sum_post_, train_sum_, k_, m_);
            return (omega_inv_sqrt_ * raw).lpNorm<1>();
        }
        const double kd = static_cast<double>(k_);
        const Vector diff = cum_sum_post_ / kd - training_mean_;
        return kd * kd / static_cast<double>(m_) * diff.dot(ratio_denominator_inv_ * diff);
    }

    Verdict step(const Vector& x) {
        if (stopped_at_) {
            throw std::logic_error("OnlineDetector::step: detector already stopped");
        }
        if (x.size() != training_mean_.size()) {
            throw std::invalid_argument("OnlineDetector::step: sample dimension mismatch");
        }
        cum_sum_post_ += x;
        ++k_;
        Verdict v;
        v.k_at_eval = k_;
        v.detector_value = value();
        v.threshold = threshold(k_);
        v.alarm = v.detector_value >= v.threshold;
        if (v.alarm) {
            stopped_at_ = k_;
        }
        return v;
    }

    /// Steps over at most `window_k` rows of `stream` (all rows when
    /// unbounded), stopping at the first alarm. Returns the last verdict and
    /// the number of rows consumed.
    std::pair<Verdict, std::size_t> run_window(const SampleBlock& stream,
                                               std::optional<std::size_t> window_k) {
        if (stream.rows() == 0) {
            throw std::invalid_argument("run_window: empty stream");
        }
        if (window_k && *window_k == 0) {
            throw std::invalid_argument("run_window: window must be positive");
        }
        auto limit = static_cast<std::size_t>(stream.rows());
        if (window_k) limit = std::min(limit, *window_k);
        Verdict last;
        std::size_t consumed = 0;
        while (consumed < limit) {
            last = step(stream.row(static_cast<Eigen::Index>(consumed)).transpose());
            ++consumed;
            if (last.alarm) break;
        }
        return {last, consumed};
    }

private:
    OnlineDetector() = default;

    DetectorKind kind_ = DetectorKind::Standard;
    std::size_t m_ = 0;
    std::size_t k_ = 0;
    double gamma_ = 0.0;
    CritVal critval_;
    Vector train_sum_;
    Vector training_mean_;
    Vector cum_sum_post_;
    Matrix omega_;
    Matrix omega_inv_sqrt_;
    Matrix ratio_denominator_;
    Matrix ratio_denominator_inv_;
    std::optional<std::size_t> stopped_at_;
};

}  // namespace cpd
