#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cpd/critvals.hpp"
#include "cpd/error.hpp"
#include "cpd/longrun.hpp"
#include "cpd/offline.hpp"
#include "cpd/online.hpp"
#include "cpd/timeseries.hpp"
#include "cpd/trend.hpp"

namespace cpd {

struct MonitorConfig {
    double alpha = 0.05;
    double gamma = 0.0;
    DetectorKind kind = DetectorKind::Standard;
    std::size_t window_k = 100;
    std::size_t quiet_gap_d = 25;
    MacdParams macd;
    std::size_t min_seg = 20;
    std::size_t m_min = 50;
    std::size_t trend_dimension = 1;  // 1-based column fed to the trend indicator
    std::size_t max_validation_rounds = 10;

    void validate(std::size_t dim) const {
        if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("monitor: alpha must lie in (0, 1)");
        if (!(gamma >= 0.0 && gamma < 0.5)) throw std::invalid_argument("monitor: gamma must lie in [0, 0.5)");
        if (window_k < 1) throw std::invalid_argument("monitor: window_k must be >= 1");
        if (m_min < OnlineDetector::kMinTraining) throw std::invalid_argument("monitor: m_min must be >= 4");
        if (min_seg < 1) throw std::invalid_argument("monitor: min_seg must be >= 1");
        if (trend_dimension < 1 || trend_dimension > dim) {
            throw std::invalid_argument("monitor: trend_dimension out of range");
        }
        macd.validate();
    }
};

enum class Action { ScaleUp, ScaleDown };

inline const char* to_string(Action a) { return a == Action::ScaleUp ? "scale_up" : "scale_down"; }

struct IndexRange {
    std::size_t lo = 0;
    std::size_t hi = 0;
    std::size_t size() const noexcept { return hi - lo + 1; }
    bool operator==(const IndexRange&) const = default;
};

struct ChangeEvent {
    std::size_t detected_at = 0;   // stream index of the alarm
    std::size_t change_onset = 0;  // estimated last pre-change index
    Direction direction = Direction::Down;
    Action action = Action::ScaleDown;
    TrendVerdict trend;
    IndexRange training_used;
};

struct SkipNote {
    std::size_t at = 0;         // monitoring origin that could not be trained
    std::size_t last_cp = 0;
    std::size_t resume_at = 0;  // next origin attempted
};

/// Training range for a monitoring origin at the end of `history`: everything
/// after the last offline change point.
inline IndexRange select_training(const SampleBlock& history, const MonitorConfig& config,
                                  CritValSource& source) {
    const auto n = static_cast<std::size_t>(history.rows());
    if (n < config.m_min) {
        throw std::invalid_argument("select_training: history shorter than m_min");
    }
    if (n < 2 * config.min_seg) {
        return {1, n};  // too short to segment
    }
    const auto cps = segment(history, config.alpha, offline_provider(source),
                             {config.min_seg, config.max_validation_rounds});
    if (cps.cps.empty()) {
        return {1, n};
    }
    const std::size_t last = cps.cps.back().index;
    if (n - last >= config.m_min) {
        return {last + 1, n};
    }
    // Extending left to m_min samples would cross the last change point.
    throw InsufficientTraining("insufficient training data after change point " +
                                   std::to_string(last),
                               last);
}

// Train-then-monitor loop over a growing stream: select a change-free
// training range, watch a finite window, label alarms with the trend
// indicator, then restart after a quiet gap.
class Monitor {
public:
    Monitor(MonitorConfig config, CritValSource& source, std::size_t dim)
        : config_(config), source_(&source), dim_(dim), ms_(config.m_min) {
        if (dim < 1) throw std::invalid_argument("monitor: dimension must be >= 1");
        config_.validate(dim);
        hist_.resize(256, static_cast<Eigen::Index>(dim));
    }

    const MonitorConfig& config() const noexcept { return config_; }
    std::size_t consumed() const noexcept { return n_; }
    const std::vector<ChangeEvent>& events() const noexcept { return events_; }
    const std::vector<SkipNote>& skips() const noexcept { return skips_; }

    /// Appends one sample; returns the events it completed.
    std::vector<ChangeEvent> push(const Vector& x) {
        if (finished_) throw std::logic_error("monitor: push after finish");
        if (static_cast<std::size_t>(x.size()) != dim_) {
            throw std::invalid_argument("monitor: sample dimension mismatch");
        }
        if (n_ == static_cast<std::size_t>(hist_.rows())) {
            hist_.conservativeResize(hist_.rows() * 2, Eigen::NoChange);
        }
        hist_.row(static_cast<Eigen::Index>(n_)) = x.transpose();
        ++n_;
        const std::size_t before = events_.size();
        advance();
        return {events_.begin() + static_cast<std::ptrdiff_t>(before), events_.end()};
    }

    /// Flushes a pending trend evaluation with its window clamped at the end of
    /// the stream.
    std::vector<ChangeEvent> finish() {
        finished_ = true;
        if (state_ == State::PendingTrend) {
            const auto ev = make_event(ti_interval_clamped(trend_series(), pending_.change_onset,
                                                           config_.macd));
            state_ = State::Collecting;
            return {ev};
        }
        return {};
    }

private:
    enum class State { Collecting, Monitoring, PendingTrend };

    SampleBlock history(std::size_t rows) const {
        return hist_.topRows(static_cast<Eigen::Index>(rows));
    }

    std::span<const double> trend_series() const {
        return {hist_.col(static_cast<Eigen::Index>(config_.trend_dimension - 1)).data(), n_};
    }

    void advance() {
        bool progressed = true;
        while (progressed) {
            progressed = false;
            switch (state_) {
                case State::Collecting:
                    if (n_ >= ms_) {
                        start_window();
                        progressed = true;
                    }
                    break;
                case State::Monitoring:
                    if (next_ <= n_) {
                        feed(next_++);
                        progressed = true;
                    }
                    break;
                case State::PendingTrend:
                    if (n_ >= pending_.change_onset + config_.macd.h) {
                        make_event(ti_interval(trend_series(), pending_.change_onset, config_.macd));
                        state_ = State::Collecting;
                        progressed = true;
                    }
                    break;
            }
        }
    }

    void start_window() {
        IndexRange training;
        try {
            training = select_training(history(ms_), config_, *source_);
        } catch (const InsufficientTraining& e) {
            const std::size_t resume = std::max(ms_ + 1, e.last_cp() + config_.m_min);
            skips_.push_back({ms_, e.last_cp(), resume});
            ms_ = resume;
            return;
        }
        const auto block = hist_.middleRows(static_cast<Eigen::Index>(training.lo - 1),
                                            static_cast<Eigen::Index>(training.size()));
        const CritVal cv = source_->get(crit_kind_for(config_.kind), dim_, config_.gamma, config_.alpha);
        detector_.emplace(OnlineDetector::train(block, config_.kind, config_.gamma, cv));
        whitener_ = inverse_sqrt_psd(bartlett_lrv(block).omega);
        training_ = training;
        window_origin_ = ms_;
        next_ = ms_ + 1;
        state_ = State::Monitoring;
    }

    void feed(std::size_t index) {
        const Vector x = hist_.row(static_cast<Eigen::Index>(index - 1)).transpose();
        const Verdict v = detector_->step(x);
        if (v.alarm) {
            pending_ = {};
            pending_.detected_at = index;
            pending_.change_onset = estimate_onset(index);
            pending_.training_used = training_;
            ms_ = index + config_.quiet_gap_d;
            state_ = State::PendingTrend;
        } else if (index - window_origin_ >= config_.window_k) {
            ms_ = index;  // no change in this window: advance to its end
            state_ = State::Collecting;
        }
    }

    // argmax_j ||W sum_{i=j+1..t} (X_i - mean)||^2 / (t - j) over the monitored
    // part of the window; first index wins ties.
    std::size_t estimate_onset(std::size_t detected) const {
        const Vector& mean = detector_->training_mean();
        Vector tail = Vector::Zero(static_cast<Eigen::Index>(dim_));
        std::size_t best_j = detected - 1;
        double best = -1.0;
        std::vector<double> scores(detected - window_origin_);
        for (std::size_t j = detected; j-- > window_origin_;) {
            tail += hist_.row(static_cast<Eigen::Index>(j)).transpose() - mean;
            const Vector w = whitener_ * tail;
            scores[j - window_origin_] = w.squaredNorm() / static_cast<double>(detected - j);
        }
        for (std::size_t j = window_origin_; j < detected; ++j) {
            if (scores[j - window_origin_] > best) {
                best = scores[j - window_origin_];
                best_j = j;
            }
        }
        return std::max<std::size_t>(best_j, 1);
    }

    ChangeEvent make_event(const TrendVerdict& trend) {
        ChangeEvent ev = pending_;
        ev.trend = trend;
        ev.direction = trend.direction;
        ev.action = trend.direction == Direction::Up ? Action::ScaleUp : Action::ScaleDown;
        events_.push_back(ev);
        return ev;
    }

    MonitorConfig config_;
    CritValSource* source_;
    std::size_t dim_;
    Matrix hist_;
    std::size_t n_ = 0;
    std::size_t ms_;
    std::size_t window_origin_ = 0;
    std::size_t next_ = 0;
    State state_ = State::Collecting;
    bool finished_ = false;
    std::optional<OnlineDetector> detector_;
    Matrix whitener_;
    IndexRange training_;
    ChangeEvent pending_;
    std::vector<ChangeEvent> events_;
    std::vector<SkipNote> skips_;
};

/// Runs the monitor over a recorded stream.
inline std::vector<ChangeEvent> run_monitor(const SampleBlock& stream, const MonitorConfig& config,
                                            CritValSource& source) {
    Monitor mon(config, source, static_cast<std::size_t>(stream.cols()));
    for (Eigen::Index i = 0; i < stream.rows(); ++i) {
        mon.push(stream.row(i).transpose());
    }
    mon.finish();
    return mon.events();
}

}  // namespace cpd
