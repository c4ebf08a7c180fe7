#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace cpd {

struct MacdParams {
    std::size_t p1 = 9;   // signal lag applied to the MACD series
    std::size_t p2 = 12;  // fast EMA lag
    std::size_t p3 = 26;  // slow EMA lag
    std::size_t h = 10;   // interval estimator half-window

    void validate() const {
        if (p1 < 2) {
            // p1 = 1 makes the signal EMA equal the MACD and TI identically zero.
            throw std::invalid_argument("MacdParams: p1 must be >= 2");
        }
        if (!(p1 < p2 && p2 < p3)) {
            throw std::invalid_argument("MacdParams: lags must satisfy p1 < p2 < p3");
        }
    }
};

enum class Direction { Up, Down };
enum class TrendMode { Point, Interval };

inline const char* to_string(Direction d) { return d == Direction::Up ? "up" : "down"; }
inline const char* to_string(TrendMode m) { return m == TrendMode::Point ? "point" : "interval"; }

struct TrendVerdict {
    double ti_value = 0.0;
    Direction direction = Direction::Down;
    TrendMode mode = TrendMode::Point;
    std::size_t at_index = 0;  // 1-based
    std::size_t span = 1;      // number of summed TI points
};

/// EMA with smoothing 2/(p+1), seeded with the first sample.
inline std::vector<double> ema(std::span<const double> x, std::size_t p) {
    if (p < 1) {
        throw std::invalid_argument("ema: lag must be >= 1");
    }
    std::vector<double> out(x.size());
    if (x.empty()) return out;
    const double a = 2.0 / (static_cast<double>(p) + 1.0);
    const double b = (static_cast<double>(p) - 1.0) / (static_cast<double>(p) + 1.0);
    out[0] = x[0];
    for (std::size_t i = 1; i < x.size(); ++i) {
        out[i] = a * x[i] + b * out[i - 1];
    }
    return out;
}

inline std::vector<double> macd(std::span<const double> x, std::size_t p2, std::size_t p3) {
    if (!(p2 < p3)) {
        throw std::invalid_argument("macd: fast lag must be shorter than slow lag");
    }
    auto fast = ema(x, p2);
    const auto slow = ema(x, p3);
    for (std::size_t i = 0; i < fast.size(); ++i) {
        fast[i] -= slow[i];
    }
    return fast;
}

/// TI(n) = MACD(n) - EMA_p1(MACD)(n) for every n.
inline std::vector<double> ti_series(std::span<const double> x, const MacdParams& params) {
    params.validate();
    auto m = macd(x, params.p2, params.p3);
    const auto signal = ema(m, params.p1);
    for (std::size_t i = 0; i < m.size(); ++i) {
        m[i] -= signal[i];
    }
    return m;
}

namespace detail {

inline TrendVerdict make_verdict(double value, TrendMode mode, std::size_t at, std::size_t span) {
    return {value, value > 0.0 ? Direction::Up : Direction::Down, mode, at, span};
}

}  // namespace detail

inline TrendVerdict ti_point(std::span<const double> x, std::size_t n, const MacdParams& params) {
    if (n < 1 || n > x.size()) {
        throw std::out_of_range("ti_point: index out of range");
    }
    const auto ti = ti_series(x.first(n), params);
    return detail::make_verdict(ti[n - 1], TrendMode::Point, n, 1);
}

/// Sum of TI over [cp, cp + h].
inline TrendVerdict ti_interval(std::span<const double> x, std::size_t cp, const MacdParams& params) {
    if (cp < 1 || cp + params.h > x.size()) {
        throw std::out_of_range("ti_interval: window exceeds the series");
    }
    const auto ti = ti_series(x.first(cp + params.h), params);
    double sum = 0.0;
    for (std::size_t k = cp; k <= cp + params.h; ++k) {
        sum += ti[k - 1];
    }
    return detail::make_verdict(sum, TrendMode::Interval, cp, params.h + 1);
}

/// Interval estimator with the window truncated at the last available sample.
inline TrendVerdict ti_interval_clamped(std::span<const double> x, std::size_t cp,
                                        const MacdParams& params) {
    if (cp < 1 || cp > x.size()) {
        throw std::out_of_range("ti_interval_clamped: index out of range");
    }
    MacdParams clamped = params;
    clamped.h = std::min(params.h, x.size() - cp);
    return ti_interval(x, cp, clamped);
}

}  // namespace cpd
