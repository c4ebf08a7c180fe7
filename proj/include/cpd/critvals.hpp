#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "cpd/error.hpp"
#include "cpd/format.hpp"
#include "cpd/linalg.hpp"
#include "cpd/rng.hpp"

namespace cpd {

enum class CritKind { OfflineMax, OnlineStandard, OnlineRatio };

inline const char* to_string(CritKind k) {
    switch (k) {
        case CritKind::OfflineMax: return "offline";
        case CritKind::OnlineStandard: return "standard";
        case CritKind::OnlineRatio: return "ratio";
    }
    return "?";
}

inline CritKind crit_kind_from_string(const std::string& s) {
    if (s == "offline") return CritKind::OfflineMax;
    if (s == "standard") return CritKind::OnlineStandard;
    if (s == "ratio") return CritKind::OnlineRatio;
    throw std::invalid_argument("unknown critical value kind '" + s + "'");
}

struct CritValRequest {
    CritKind kind = CritKind::OfflineMax;
    double alpha = 0.05;
    std::size_t d = 1;
    double gamma = 0.0;                 // online kinds only
    std::size_t grid_steps = 10000;     // per unit time
    std::size_t replications = 100000;
    double horizon_T = 10.0;            // OnlineRatio only
    std::uint64_t seed = 0;
    // Shift each discretely monitored supremum by beta*sqrt(dt)*local scale to
    // remove the leading-order grid bias (not applied to the ratio functional).
    bool continuity_correction = true;

    void validate() const {
        if (!(alpha > 0.0 && alpha < 1.0)) {
            throw std::invalid_argument("critval: alpha must lie in (0, 1)");
        }
        if (d < 1) {
            throw std::invalid_argument("critval: d must be >= 1");
        }
        if (!(gamma >= 0.0 && gamma < 0.5)) {
            throw std::invalid_argument("critval: gamma must lie in [0, 0.5)");
        }
        if (grid_steps < 100) {
            throw std::invalid_argument("critval: grid_steps must be >= 100");
        }
        if (replications < 1000) {
            throw std::invalid_argument("critval: replications must be >= 1000");
        }
        if (kind == CritKind::OnlineRatio && !(horizon_T > 0.0)) {
            throw std::invalid_argument("critval: horizon_T must be positive");
        }
    }
};

struct CritVal {
    double value = 0.0;
    CritValRequest request;
    double mc_stderr = 0.0;
};

// -beta = zeta(1/2) / sqrt(2 pi): expected overshoot of a Brownian path past
// its discretely monitored maximum, in units of sqrt(dt).
inline constexpr double kDiscreteMaxShift = 0.5825971579390106;

/// Standard Brownian motion on [0, 1] sampled at grid_steps + 1 equispaced
/// points; W(0) = 0.
inline std::vector<double> simulate_brownian_motion(std::size_t grid_steps, std::uint64_t seed) {
    if (grid_steps < 1) {
        throw std::invalid_argument("simulate_brownian_motion: grid_steps must be >= 1");
    }
    Engine eng = make_engine(seed, 0);
    std::normal_distribution<double> z(0.0, 1.0);
    const double sd = std::sqrt(1.0 / static_cast<double>(grid_steps));
    std::vector<double> w(grid_steps + 1, 0.0);
    for (std::size_t i = 1; i <= grid_steps; ++i) {
        w[i] = w[i - 1] + sd * z(eng);
    }
    return w;
}

namespace detail {

// Evaluates the limiting functional for one replication. Buffers are reused
// across replications of a single worker.
class FunctionalKernel {
public:
    explicit FunctionalKernel(const CritValRequest& req) : req_(req) {
        n_ = req.grid_steps;
        dt_ = 1.0 / static_cast<double>(n_);
        sd_ = std::sqrt(dt_);
        d_ = req.d;
        if (req.kind == CritKind::OnlineRatio) {
            tail_ = static_cast<std::size_t>(std::llround(req.horizon_T * static_cast<double>(n_)));
            if (tail_ < 1) tail_ = 1;
        }
        total_ = n_ + tail_;
        w_.assign(d_ * (total_ + 1), 0.0);
        if (req.kind == CritKind::OnlineStandard) {
            scale_.resize(n_ + 1);
            for (std::size_t i = 1; i <= n_; ++i) {
                scale_[i] = std::pow(static_cast<double>(i) * dt_, -req.gamma);
            }
        } else if (req.kind == CritKind::OnlineRatio) {
            scale_.resize(total_ + 1);
            for (std::size_t i = n_ + 1; i <= total_; ++i) {
                const double t = static_cast<double>(i - n_) * dt_;
                const double eta = (1.0 + t) * std::pow(t / (1.0 + t), req.gamma);
                scale_[i] = 1.0 / (eta * eta);
            }
        }
    }

    double operator()(std::size_t replication) {
        Engine eng = make_engine(req_.seed, replication, static_cast<std::uint64_t>(req_.kind) + 1);
        std::normal_distribution<double> z(0.0, 1.0);
        for (std::size_t j = 0; j < d_; ++j) {
            double* w = path(j);
            w[0] = 0.0;
            for (std::size_t i = 1; i <= total_; ++i) {
                w[i] = w[i - 1] + sd_ * z(eng);
            }
        }
        switch (req_.kind) {
            case CritKind::OfflineMax: return offline_max();
            case CritKind::OnlineStandard: return online_standard();
            case CritKind::OnlineRatio: return online_ratio();
        }
        return 0.0;
    }

private:
    double* path(std::size_t j) { return w_.data() + j * (total_ + 1); }

    // sup_t sum_j B_j(t)^2 with B_j(t) = W_j(t) - t W_j(1)
    double offline_max() {
        double best = 0.0;
        for (std::size_t i = 1; i < n_; ++i) {
            const double t = static_cast<double>(i) * dt_;
            double r2 = 0.0;
            for (std::size_t j = 0; j < d_; ++j) {
                const double* w = path(j);
                const double b = w[i] - t * w[n_];
                r2 += b * b;
            }
            best = std::max(best, r2);
        }
        if (req_.continuity_correction) {
            const double r = std::sqrt(best) + kDiscreteMaxShift * sd_;
            return r * r;
        }
        return best;
    }

    // sup_t ||W(t)||_1 / t^gamma
    double online_standard() {
        double best = 0.0;
        std::size_t arg = n_;
        for (std::size_t i = 1; i <= n_; ++i) {
            double l1 = 0.0;
            for (std::size_t j = 0; j < d_; ++j) {
                l1 += std::abs(path(j)[i]);
            }
            const double v = l1 * scale_[i];
            if (v > best) {
                best = v;
                arg = i;
            }
        }
        if (req_.continuity_correction) {
            best += kDiscreteMaxShift * sd_ * std::sqrt(static_cast<double>(d_)) * scale_[arg];
        }
        return best;
    }

    // sup_{0<t<=T} B(1+t)^T (int_0^1 B B^T)^{-1} B(1+t) / eta^2(t)
    double online_ratio() {
        Eigen::MatrixXd integral = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d_),
                                                         static_cast<Eigen::Index>(d_));
        Eigen::VectorXd b(static_cast<Eigen::Index>(d_));
        // Trapezoid on [0, 1]; the bridge vanishes at both ends.
        for (std::size_t i = 1; i < n_; ++i) {
            bridge_at(i, b);
            integral.noalias() += b * b.transpose();
        }
        integral *= dt_;
        const Eigen::MatrixXd inv = inverse_psd(integral);
        double best = 0.0;
        for (std::size_t i = n_ + 1; i <= total_; ++i) {
            bridge_at(i, b);
            const double q = b.dot(inv * b) * scale_[i];
            best = std::max(best, q);
        }
        return best;
    }

    void bridge_at(std::size_t i, Eigen::VectorXd& b) {
        const double s = static_cast<double>(i) * dt_;
        for (std::size_t j = 0; j < d_; ++j) {
            const double* w = path(j);
            b(static_cast<Eigen::Index>(j)) = w[i] - s * w[n_];
        }
    }

    CritValRequest req_;
    std::size_t n_ = 0;
    std::size_t tail_ = 0;
    std::size_t total_ = 0;
    std::size_t d_ = 1;
    double dt_ = 0.0;
    double sd_ = 0.0;
    std::vector<double> w_;
    std::vector<double> scale_;
};

}  // namespace detail

/// One functional draw per replication, ordered by replication index. The
/// output is identical for any thread count.
inline std::vector<double> simulate_functional(const CritValRequest& req, unsigned threads = 1) {
    req.validate();
    const std::size_t reps = req.replications;
    std::vector<double> out(reps);
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(reps)));
    auto work = [&](std::size_t begin, std::size_t end) {
        detail::FunctionalKernel kernel(req);
        for (std::size_t r = begin; r < end; ++r) {
            out[r] = kernel(r);
        }
    };
    if (threads == 1) {
        work(0, reps);
        return out;
    }
    std::vector<std::jthread> pool;
    const std::size_t chunk = (reps + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
        const std::size_t begin = t * chunk;
        const std::size_t end = std::min(reps, begin + chunk);
        if (begin < end) {
            pool.emplace_back(work, begin, end);
        }
    }
    return out;
}

/// Type-7 (linear interpolation) empirical quantile of sorted data.
inline double sorted_quantile(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) {
        throw std::invalid_argument("quantile: empty sample");
    }
    const double h = (static_cast<double>(sorted.size()) - 1.0) * std::clamp(p, 0.0, 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/// Asymptotic standard error sqrt(p(1-p)/R) / f(q), with the density at the
/// quantile estimated by a symmetric difference of neighbouring quantiles.
inline double quantile_stderr(const std::vector<double>& sorted, double p) {
    const double delta = std::min({0.01, (1.0 - p) / 2.0, p / 2.0});
    const double spread = sorted_quantile(sorted, p + delta) - sorted_quantile(sorted, p - delta);
    const double r = static_cast<double>(sorted.size());
    return std::sqrt(p * (1.0 - p) / r) * spread / (2.0 * delta);
}

inline CritVal critval_from_sorted(const std::vector<double>& sorted, const CritValRequest& req) {
    const double p = 1.0 - req.alpha;
    return {sorted_quantile(sorted, p), req, quantile_stderr(sorted, p)};
}

inline std::vector<double> simulate_sorted(const CritValRequest& req, unsigned threads) {
    auto draws = simulate_functional(req, threads);
    std::sort(draws.begin(), draws.end());
    return draws;
}

inline CritVal compute_critval(const CritValRequest& req, unsigned threads = 1) {
    return critval_from_sorted(simulate_sorted(req, threads), req);
}

inline CritVal offline_critval(const CritValRequest& req, unsigned threads = 1) {
    if (req.kind != CritKind::OfflineMax) {
        throw std::invalid_argument("offline_critval: request kind must be OfflineMax");
    }
    return compute_critval(req, threads);
}

inline CritVal online_critval_standard(const CritValRequest& req, unsigned threads = 1) {
    if (req.kind != CritKind::OnlineStandard) {
        throw std::invalid_argument("online_critval_standard: request kind must be OnlineStandard");
    }
    return compute_critval(req, threads);
}

inline CritVal online_critval_ratio(const CritValRequest& req, unsigned threads = 1) {
    if (req.kind != CritKind::OnlineRatio) {
        throw std::invalid_argument("online_critval_ratio: request kind must be OnlineRatio");
    }
    return compute_critval(req, threads);
}

// Precomputed critical values keyed exactly by (kind, d, gamma, alpha).
// OfflineMax rows are stored with gamma = 0 and looked up ignoring gamma.
class CritValTable {
public:
    static constexpr const char* kHeader =
        "kind,d,gamma,alpha,grid_steps,replications,horizon_T,seed,value,mc_stderr";

    struct Grid {
        std::vector<CritKind> kinds{CritKind::OfflineMax, CritKind::OnlineStandard,
                                    CritKind::OnlineRatio};
        std::vector<double> alphas{0.01, 0.05, 0.10};
        std::vector<double> gammas{0.0, 0.15, 0.25, 0.45};
        std::vector<std::size_t> dims{1, 2, 3};
    };

    static CritValTable build(const Grid& grid, const CritValRequest& base, unsigned threads = 1) {
        CritValTable table;
        for (auto kind : grid.kinds) {
            for (auto d : grid.dims) {
                std::vector<double> gammas = grid.gammas;
                if (kind == CritKind::OfflineMax) {
                    gammas = {0.0};
                }
                for (double gamma : gammas) {
                    CritValRequest req = base;
                    req.kind = kind;
                    req.d = d;
                    req.gamma = gamma;
                    const auto sorted = simulate_sorted(req, threads);
                    for (double alpha : grid.alphas) {
                        req.alpha = alpha;
                        table.insert(critval_from_sorted(sorted, req));
                    }
                }
            }
        }
        return table;
    }

    void insert(const CritVal& cv) {
        entries_[key(cv.request.kind, cv.request.d, cv.request.gamma, cv.request.alpha)] = cv;
    }

    CritVal lookup(CritKind kind, std::size_t d, double gamma, double alpha) const {
        const auto it = entries_.find(key(kind, d, gamma, alpha));
        if (it == entries_.end()) {
            std::ostringstream msg;
            msg << "critical value not tabulated: kind=" << to_string(kind) << " d=" << d
                << " gamma=" << format_double(gamma) << " alpha=" << format_double(alpha);
            throw NotTabulated(msg.str());
        }
        return it->second;
    }

    std::size_t size() const noexcept { return entries_.size(); }

    void write(std::ostream& out) const {
        out << kHeader << '\n';
        for (const auto& [k, cv] : entries_) {
            const auto& r = cv.request;
            out << to_string(r.kind) << ',' << r.d << ',' << format_double(r.gamma) << ','
                << format_double(r.alpha) << ',' << r.grid_steps << ',' << r.replications << ','
                << format_double(r.horizon_T) << ',' << r.seed << ',' << format_double(cv.value)
                << ',' << format_double(cv.mc_stderr) << '\n';
        }
    }

    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) {
            throw Error("critval table: cannot write '" + path + "'");
        }
        write(out);
        if (!out) {
            throw Error("critval table: write failed for '" + path + "'");
        }
    }

    static CritValTable read(std::istream& in) {
        CritValTable table;
        std::string line;
        std::size_t row = 0;
        while (std::getline(in, line)) {
            ++row;
            if (trim(line).empty() || (row == 1 && trim(line) == kHeader)) {
                continue;
            }
            const auto cells = detail_split(line);
            if (cells.size() != 10) {
                throw ParseError("critval table: row " + std::to_string(row) +
                                     " must have 10 columns",
                                 row, cells.size());
            }
            CritVal cv;
            auto& r = cv.request;
            try {
                r.kind = crit_kind_from_string(std::string(trim(cells[0])));
            } catch (const std::invalid_argument&) {
                throw ParseError("critval table: row " + std::to_string(row) + ": bad kind", row, 1);
            }
            auto num = [&](std::size_t col) {
                const auto v = parse_finite(cells[col]);
                if (!v) {
                    throw ParseError("critval table: row " + std::to_string(row) + ", column " +
                                         std::to_string(col + 1) + ": not a number",
                                     row, col + 1);
                }
                return *v;
            };
            r.d = static_cast<std::size_t>(num(1));
            r.gamma = num(2);
            r.alpha = num(3);
            r.grid_steps = static_cast<std::size_t>(num(4));
            r.replications = static_cast<std::size_t>(num(5));
            r.horizon_T = num(6);
            r.seed = std::stoull(std::string(trim(cells[7])));
            cv.value = num(8);
            cv.mc_stderr = num(9);
            table.insert(cv);
        }
        return table;
    }

    static CritValTable load(const std::string& path) {
        std::ifstream in(path);
        if (!in) {
            throw Error("critval table: cannot open '" + path + "'");
        }
        return read(in);
    }

private:
    using Key = std::tuple<int, std::size_t, double, double>;

    static Key key(CritKind kind, std::size_t d, double gamma, double alpha) {
        if (kind == CritKind::OfflineMax) {
            gamma = 0.0;
        }
        return {static_cast<int>(kind), d, gamma, alpha};
    }

    static std::vector<std::string_view> detail_split(std::string_view line) {
        std::vector<std::string_view> out;
        std::size_t start = 0;
        while (true) {
            const auto pos = line.find(',', start);
            out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
            if (pos == std::string_view::npos) break;
            start = pos + 1;
        }
        return out;
    }

    std::map<Key, CritVal> entries_;
};

// Supplies critical values either strictly from a table or by simulation
// (memoized per kind/d/gamma so every alpha shares one sample).
class CritValSource {
public:
    explicit CritValSource(CritValRequest defaults = {}, unsigned threads = 1)
        : defaults_(defaults), threads_(threads) {}

    explicit CritValSource(CritValTable table) : table_(std::move(table)) {}

    const CritValRequest& defaults() const noexcept { return defaults_; }

    CritVal get(CritKind kind, std::size_t d, double gamma, double alpha) {
        if (kind == CritKind::OfflineMax) {
            gamma = 0.0;
        }
        if (table_) {
            return table_->lookup(kind, d, gamma, alpha);
        }
        CritValRequest req = defaults_;
        req.kind = kind;
        req.d = d;
        req.gamma = gamma;
        req.alpha = alpha;
        req.validate();
        std::lock_guard lock(mutex_);
        auto& sorted = cache_[{static_cast<int>(kind), d, gamma}];
        if (sorted.empty()) {
            sorted = simulate_sorted(req, threads_);
        }
        return critval_from_sorted(sorted, req);
    }

private:
    CritValRequest defaults_;
    unsigned threads_ = 1;
    std::optional<CritValTable> table_;
    std::mutex mutex_;
    std::map<std::tuple<int, std::size_t, double>, std::vector<double>> cache_;
};

}  // namespace cpd
