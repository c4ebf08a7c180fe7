#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "cpd/critvals.hpp"
#include "cpd/online.hpp"
#include "cpd/rng.hpp"
#include "cpd/timeseries.hpp"

namespace cpd::netsim {

using NodeId = std::size_t;

// Rectangular grid with 4-connectivity and a controller node. Shortest paths
// toward the controller follow BFS parents, lowest id first on ties.
class Topology {
public:
    static Topology grid(std::size_t rows, std::size_t cols, NodeId controller = 0) {
        if (rows < 1 || cols < 1) throw std::invalid_argument("Topology: empty grid");
        Topology t;
        t.rows_ = rows;
        t.cols_ = cols;
        t.controller_ = controller;
        const std::size_t n = rows * cols;
        if (controller >= n) throw std::invalid_argument("Topology: controller out of range");
        t.neighbors_.resize(n);
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) {
                auto& nb = t.neighbors_[r * cols + c];
                if (r > 0) nb.push_back((r - 1) * cols + c);
                if (c > 0) nb.push_back(r * cols + c - 1);
                if (c + 1 < cols) nb.push_back(r * cols + c + 1);
                if (r + 1 < rows) nb.push_back((r + 1) * cols + c);
            }
        }
        t.cluster_.assign(n, 0);
        for (std::size_t i = 0; i < n; ++i) t.cluster_[i] = i;
        t.build_routes();
        return t;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return rows_ * cols_; }
    NodeId controller() const noexcept { return controller_; }
    const std::vector<NodeId>& neighbors(NodeId v) const { return neighbors_.at(v); }
    bool adjacent(NodeId a, NodeId b) const {
        const auto& nb = neighbors_.at(a);
        return std::find(nb.begin(), nb.end(), b) != nb.end();
    }
    std::size_t hops_to_controller(NodeId v) const { return depth_.at(v); }

    /// Nodes after v on its route to the controller (controller last).
    std::vector<NodeId> route_to_controller(NodeId v) const {
        std::vector<NodeId> out;
        while (v != controller_) {
            v = parent_[v];
            out.push_back(v);
        }
        return out;
    }

    /// Breadth-first hop distances from a set of sources.
    std::vector<std::size_t> hop_distance(const std::vector<NodeId>& sources) const {
        constexpr auto inf = std::numeric_limits<std::size_t>::max();
        std::vector<std::size_t> dist(size(), inf);
        std::deque<NodeId> q;
        for (auto s : sources) {
            dist.at(s) = 0;
            q.push_back(s);
        }
        while (!q.empty()) {
            const auto v = q.front();
            q.pop_front();
            for (auto u : neighbors_[v]) {
                if (dist[u] == inf) {
                    dist[u] = dist[v] + 1;
                    q.push_back(u);
                }
            }
        }
        return dist;
    }

    // Cluster assignment: node -> cluster id. Defaults to one node per cluster.
    const std::vector<std::size_t>& clusters() const noexcept { return cluster_; }
    std::size_t cluster_of(NodeId v) const { return cluster_.at(v); }
    std::size_t cluster_count() const {
        return cluster_.empty() ? 0 : *std::max_element(cluster_.begin(), cluster_.end()) + 1;
    }

    void set_clusters(std::vector<std::size_t> assignment) {
        if (assignment.size() != size()) {
            throw std::invalid_argument("Topology: cluster assignment must cover every node");
        }
        cluster_ = std::move(assignment);
    }

    /// Tiles the grid with block_rows x block_cols clusters, numbered row-major.
    void assign_block_clusters(std::size_t block_rows = 2, std::size_t block_cols = 2) {
        if (block_rows < 1 || block_cols < 1) throw std::invalid_argument("Topology: empty block");
        const std::size_t per_row = (cols_ + block_cols - 1) / block_cols;
        std::vector<std::size_t> a(size());
        for (std::size_t r = 0; r < rows_; ++r) {
            for (std::size_t c = 0; c < cols_; ++c) {
                a[r * cols_ + c] = (r / block_rows) * per_row + c / block_cols;
            }
        }
        cluster_ = std::move(a);
    }

    /// Members of each cluster in ascending id order; the first is the head.
    std::vector<std::vector<NodeId>> cluster_members() const {
        std::vector<std::vector<NodeId>> out(cluster_count());
        for (NodeId v = 0; v < size(); ++v) out[cluster_[v]].push_back(v);
        return out;
    }

private:
    void build_routes() {
        depth_ = hop_distance({controller_});
        parent_.assign(size(), controller_);
        for (NodeId v = 0; v < size(); ++v) {
            if (v == controller_) continue;
            for (auto u : neighbors_[v]) {  // ascending ids
                if (depth_[u] + 1 == depth_[v]) {
                    parent_[v] = u;
                    break;
                }
            }
        }
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    NodeId controller_ = 0;
    std::vector<std::vector<NodeId>> neighbors_;
    std::vector<std::size_t> depth_;
    std::vector<NodeId> parent_;
    std::vector<std::size_t> cluster_;
};

struct AttackScenario {
    std::vector<NodeId> attackers;
    std::size_t attack_start = 301;      // first affected sample (1-based)
    std::size_t horizon = 600;           // samples per node
    double injection_rate = 3.0;         // unknown-flow packets per sample period
    double ticks_per_packet = 5.0;       // radio-on ticks per transmitted packet
    double baseline_mean = 50.0;
    double ar_coef = 0.3;
    double noise_sigma = 5.0;            // marginal sd of the AR(1) baseline
    double hop_decay = 0.4;              // forwarding load factor per hop
    double background_unknown_rate = 0.0;  // benign unknown-flow packets per node per period

    void validate(const Topology& topo) const {
        for (auto a : attackers) {
            if (a >= topo.size()) throw std::invalid_argument("AttackScenario: attacker not in topology");
        }
        if (horizon < 1 || attack_start < 1 || attack_start > horizon) {
            throw std::invalid_argument("AttackScenario: need 1 <= attack_start <= horizon");
        }
        if (!(std::abs(ar_coef) < 1.0)) throw std::invalid_argument("AttackScenario: |ar_coef| must be < 1");
        if (injection_rate < 0.0 || noise_sigma < 0.0 || background_unknown_rate < 0.0 ||
            background_unknown_rate > 1.0 || hop_decay < 0.0) {
            throw std::invalid_argument("AttackScenario: negative rate or scale");
        }
    }
};

/// Random attacker positions (never the controller) with pairwise Manhattan
/// distance of at least `min_separation`, so no two attackers share a neighbour
/// when it is 3 or more.
inline std::vector<NodeId> place_attackers(const Topology& topo, std::size_t count, std::uint64_t seed,
                                           std::size_t min_separation = 3) {
    Engine eng = make_engine(seed, 0, 0x5EED);
    std::uniform_int_distribution<NodeId> pick(0, topo.size() - 1);
    auto manhattan = [&](NodeId a, NodeId b) {
        const auto ra = a / topo.cols(), ca = a % topo.cols();
        const auto rb = b / topo.cols(), cb = b % topo.cols();
        return (ra > rb ? ra - rb : rb - ra) + (ca > cb ? ca - cb : cb - ca);
    };
    for (int attempt = 0; attempt < 1000; ++attempt) {
        std::vector<NodeId> chosen;
        for (int tries = 0; chosen.size() < count && tries < 10000; ++tries) {
            const NodeId v = pick(eng);
            if (v == topo.controller()) continue;
            const bool ok = std::all_of(chosen.begin(), chosen.end(),
                                        [&](NodeId u) { return manhattan(u, v) >= min_separation; });
            if (ok) chosen.push_back(v);
        }
        if (chosen.size() == count) {
            std::sort(chosen.begin(), chosen.end());
            return chosen;
        }
    }
    throw std::invalid_argument("place_attackers: cannot place attackers with this separation");
}

struct SenderEntry {
    std::size_t time = 0;  // 1-based sample index
    NodeId sender = 0;
};

struct NodeTrace {
    TimeSeries transmit;                  // radio-on ticks per period
    std::vector<SenderEntry> sender_log;  // unknown-flow senders, time ordered
};

namespace detail {

// Adds `load` to node v and the decayed forwarding load to its route.
inline void add_request_load(const Topology& topo, double hop_decay, NodeId v, double load,
                             std::vector<double>& out) {
    out[v] += load;
    double f = load;
    for (auto u : topo.route_to_controller(v)) {
        f *= hop_decay;
        out[u] += f;
    }
}

}  // namespace detail

/// Deterministic post-attack mean increase of every node's transmit time.
inline std::vector<double> expected_shift(const Topology& topo, const AttackScenario& sc) {
    std::vector<double> shift(topo.size(), 0.0);
    const double load = sc.injection_rate * sc.ticks_per_packet;
    for (auto a : sc.attackers) {
        shift[a] += load;
        for (auto v : topo.neighbors(a)) {
            detail::add_request_load(topo, sc.hop_decay, v, load, shift);
        }
    }
    return shift;
}

/// Synthetic transmit-time traces: AR(1) baseline, benign unknown-flow noise,
/// and after attack_start each attacker broadcasts Poisson(injection_rate)
/// unknown-flow packets per period to its neighbours, which forward a flow
/// request toward the controller.
inline std::vector<NodeTrace> generate_traces(const Topology& topo, const AttackScenario& sc,
                                              std::uint64_t seed) {
    sc.validate(topo);
    const std::size_t n = topo.size();
    const std::size_t horizon = sc.horizon;
    std::vector<Matrix> series(n, Matrix(static_cast<Eigen::Index>(horizon), 1));
    std::vector<std::vector<SenderEntry>> logs(n);

    const double innov_sd = sc.noise_sigma * std::sqrt(1.0 - sc.ar_coef * sc.ar_coef);
    for (NodeId v = 0; v < n; ++v) {
        Engine eng = make_engine(seed, v, 0xB0);
        std::normal_distribution<double> z(0.0, 1.0);
        std::bernoulli_distribution unknown(sc.background_unknown_rate);
        const auto& nb = topo.neighbors(v);
        std::uniform_int_distribution<std::size_t> which(0, nb.empty() ? 0 : nb.size() - 1);
        double y = sc.noise_sigma * z(eng);
        for (std::size_t t = 1; t <= horizon; ++t) {
            if (t > 1) y = sc.ar_coef * y + innov_sd * z(eng);
            double value = sc.baseline_mean + y;
            if (!nb.empty() && unknown(eng)) {
                logs[v].push_back({t, nb[which(eng)]});
                value += sc.ticks_per_packet;
            }
            series[v](static_cast<Eigen::Index>(t - 1), 0) = value;
        }
    }

    std::vector<double> load(n);
    for (auto a : sc.attackers) {
        Engine eng = make_engine(seed, a, 0xA7);
        std::poisson_distribution<int> packets(sc.injection_rate);
        for (std::size_t t = sc.attack_start; t <= horizon; ++t) {
            const int count = sc.injection_rate > 0.0 ? packets(eng) : 0;
            if (count == 0) continue;
            std::fill(load.begin(), load.end(), 0.0);
            const double l = count * sc.ticks_per_packet;
            load[a] += l;
            for (auto v : topo.neighbors(a)) {
                for (int p = 0; p < count; ++p) logs[v].push_back({t, a});
                detail::add_request_load(topo, sc.hop_decay, v, l, load);
            }
            for (NodeId v = 0; v < n; ++v) {
                series[v](static_cast<Eigen::Index>(t - 1), 0) += load[v];
            }
        }
    }

    std::vector<NodeTrace> out;
    out.reserve(n);
    for (NodeId v = 0; v < n; ++v) {
        auto& log = logs[v];
        std::stable_sort(log.begin(), log.end(),
                         [](const SenderEntry& a, const SenderEntry& b) { return a.time < b.time; });
        out.push_back({TimeSeries(std::move(series[v]), 1.0, "node" + std::to_string(v)), std::move(log)});
    }
    return out;
}

struct DetectorConfig {
    std::size_t m = 200;      // initial training length
    std::size_t block = 50;   // retraining period while no alarm
    double gamma = 0.0;
    double alpha = 0.05;
};

/// Standard detector with cumulative retraining: train on the first m
/// samples, monitor `block` samples, and on silence fold them into the
/// training prefix. Returns the 1-based alarm index.
inline std::optional<std::size_t> detect_series(const SampleBlock& x, const DetectorConfig& cfg,
                                                const CritVal& cv) {
    const auto n = static_cast<std::size_t>(x.rows());
    if (n <= cfg.m) throw std::invalid_argument("detect_series: horizon must exceed m");
    if (cfg.block < 1) throw std::invalid_argument("detect_series: block must be positive");
    for (std::size_t m = cfg.m; m < n; m += cfg.block) {
        auto det = OnlineDetector::train(x.topRows(static_cast<Eigen::Index>(m)),
                                         DetectorKind::Standard, cfg.gamma, cv);
        const auto [verdict, consumed] =
            det.run_window(x.middleRows(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n - m)),
                           cfg.block);
        if (verdict.alarm) return m + consumed;
    }
    return std::nullopt;
}

struct DetectionReport {
    std::vector<std::optional<std::size_t>> node_alarm;     // per-node mode
    std::vector<std::optional<std::size_t>> cluster_alarm;  // cluster mode
    std::set<NodeId> identified;                            // true attackers declared
    std::set<NodeId> false_positives;                       // non-attackers declared
    std::size_t packets_overhead = 0;                       // sample messages to cluster heads
};

inline CritVal detector_critval(CritValSource& source, const DetectorConfig& cfg) {
    return source.get(CritKind::OnlineStandard, 1, cfg.gamma, cfg.alpha);
}

inline DetectionReport detect_per_node(const std::vector<NodeTrace>& traces, const DetectorConfig& cfg,
                                       const CritVal& cv) {
    DetectionReport rep;
    rep.node_alarm.reserve(traces.size());
    for (const auto& tr : traces) {
        rep.node_alarm.push_back(detect_series(tr.transmit.values(), cfg, cv));
    }
    return rep;
}

/// Cluster heads sum their members' samples per period and run one detector
/// on the aggregate. Every non-head member sends one sample message per period.
inline DetectionReport detect_clustered(const std::vector<NodeTrace>& traces, const Topology& topo,
                                        const DetectorConfig& cfg, const CritVal& cv) {
    if (traces.size() != topo.size()) {
        throw std::invalid_argument("detect_clustered: traces do not match topology");
    }
    DetectionReport rep;
    for (const auto& members : topo.cluster_members()) {
        if (members.empty()) {
            rep.cluster_alarm.push_back(std::nullopt);
            continue;
        }
        Matrix sum = traces[members.front()].transmit.values();
        for (std::size_t i = 1; i < members.size(); ++i) {
            sum += traces[members[i]].transmit.values();
        }
        rep.cluster_alarm.push_back(detect_series(sum, cfg, cv));
        rep.packets_overhead += (members.size() - 1) * static_cast<std::size_t>(sum.rows());
    }
    return rep;
}

/// Most frequent sender among the last `window` log entries up to `time`;
/// lowest id wins ties.
inline std::optional<NodeId> suspect_of(const std::vector<SenderEntry>& log, std::size_t time,
                                        std::size_t window = 10) {
    const auto end = std::upper_bound(log.begin(), log.end(), time,
                                      [](std::size_t t, const SenderEntry& e) { return t < e.time; });
    const auto count = static_cast<std::size_t>(end - log.begin());
    if (count == 0) return std::nullopt;
    const auto begin = end - static_cast<std::ptrdiff_t>(std::min(window, count));
    std::map<NodeId, std::size_t> freq;
    for (auto it = begin; it != end; ++it) ++freq[it->sender];
    NodeId best = freq.begin()->first;
    std::size_t best_n = 0;
    for (const auto& [id, c] : freq) {
        if (c > best_n) {
            best = id;
            best_n = c;
        }
    }
    return best;
}

/// Central tally: every alarming node accuses its suspect; a suspect accused
/// by as many nodes as it has neighbours is declared an attacker.
inline std::set<NodeId> identify_attackers(const std::vector<NodeTrace>& traces,
                                           const std::vector<std::optional<std::size_t>>& alarms,
                                           const Topology& topo) {
    std::map<NodeId, std::size_t> accusations;
    for (NodeId v = 0; v < alarms.size(); ++v) {
        if (!alarms[v]) continue;
        if (const auto s = suspect_of(traces.at(v).sender_log, *alarms[v])) {
            ++accusations[*s];
        }
    }
    std::set<NodeId> out;
    for (const auto& [s, c] : accusations) {
        if (c == topo.neighbors(s).size()) out.insert(s);
    }
    return out;
}

enum class Mode { PerNode, Cluster };

inline const char* to_string(Mode m) { return m == Mode::PerNode ? "per-node" : "cluster"; }

/// One full replication: traces, detection, and (per-node mode) attacker
/// identification split into true and false positives.
inline DetectionReport run_replication(const Topology& topo, const AttackScenario& sc, std::uint64_t seed,
                                       Mode mode, const DetectorConfig& cfg, const CritVal& cv) {
    const auto traces = generate_traces(topo, sc, seed);
    DetectionReport rep;
    if (mode == Mode::PerNode) {
        rep = detect_per_node(traces, cfg, cv);
        const std::set<NodeId> attackers(sc.attackers.begin(), sc.attackers.end());
        for (auto id : identify_attackers(traces, rep.node_alarm, topo)) {
            (attackers.count(id) ? rep.identified : rep.false_positives).insert(id);
        }
    } else {
        rep = detect_clustered(traces, topo, cfg, cv);
    }
    return rep;
}

struct SimulationSummary {
    Mode mode = Mode::PerNode;
    std::size_t replications = 0;
    std::vector<NodeId> attackers;
    // Alarms at or after attack_start; earlier alarms are counted separately.
    std::vector<double> detection_probability;  // per node (cluster value in cluster mode)
    std::vector<double> cluster_detection_probability;
    std::vector<double> pre_attack_alarm_probability;  // per node or per cluster
    double attacker_adjacent_mean = 0.0;
    double attacker_adjacent_min = 0.0;
    std::vector<double> detection_by_hop;  // index = hop distance from nearest attacker
    double all_identified_rate = 0.0;
    double zero_false_positive_rate = 0.0;
    double per_attacker_identification = 0.0;
    double mean_packets_overhead = 0.0;
    std::vector<DetectionReport> reports;
};

/// Replications share the scenario and differ only in traffic noise. Results
/// do not depend on the number of threads.
inline SimulationSummary simulate(const Topology& topo, const AttackScenario& sc, std::size_t reps,
                                  std::uint64_t seed, Mode mode, const DetectorConfig& cfg,
                                  const CritVal& cv, unsigned threads = 1) {
    if (reps < 1) throw std::invalid_argument("simulate: need at least one replication");
    sc.validate(topo);
    SimulationSummary s;
    s.mode = mode;
    s.replications = reps;
    s.attackers = sc.attackers;
    s.reports.resize(reps);
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t r = begin; r < end; ++r) {
            s.reports[r] = run_replication(topo, sc, substream_seed(seed, r, 0x51A), mode, cfg, cv);
        }
    };
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(reps)));
    if (threads == 1) {
        work(0, reps);
    } else {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (reps + threads - 1) / threads;
        for (unsigned t = 0; t < threads; ++t) {
            const std::size_t b = t * chunk, e = std::min(reps, b + chunk);
            if (b < e) pool.emplace_back(work, b, e);
        }
    }

    const std::size_t n = topo.size();
    // Tallies are counts until divided by reps, so certain events read as exactly 1.
    const auto rate = [reps](std::vector<double>& v) {
        for (double& x : v) x /= static_cast<double>(reps);
    };
    s.detection_probability.assign(n, 0.0);
    if (mode == Mode::PerNode) {
        s.pre_attack_alarm_probability.assign(n, 0.0);
        for (const auto& rep : s.reports) {
            for (NodeId v = 0; v < n; ++v) {
                if (!rep.node_alarm[v]) continue;
                if (*rep.node_alarm[v] < sc.attack_start) {
                    s.pre_attack_alarm_probability[v] += 1.0;
                } else {
                    s.detection_probability[v] += 1.0;
                }
            }
        }
        rate(s.pre_attack_alarm_probability);
        rate(s.detection_probability);
    } else {
        const std::size_t nc = topo.cluster_count();
        s.cluster_detection_probability.assign(nc, 0.0);
        s.pre_attack_alarm_probability.assign(nc, 0.0);
        for (const auto& rep : s.reports) {
            for (std::size_t c = 0; c < nc; ++c) {
                if (!rep.cluster_alarm[c]) continue;
                if (*rep.cluster_alarm[c] < sc.attack_start) {
                    s.pre_attack_alarm_probability[c] += 1.0;
                } else {
                    s.cluster_detection_probability[c] += 1.0;
                }
            }
            s.mean_packets_overhead += static_cast<double>(rep.packets_overhead);
        }
        rate(s.pre_attack_alarm_probability);
        rate(s.cluster_detection_probability);
        s.mean_packets_overhead /= static_cast<double>(reps);
        for (NodeId v = 0; v < n; ++v) {
            s.detection_probability[v] = s.cluster_detection_probability[topo.cluster_of(v)];
        }
    }

    if (!sc.attackers.empty()) {
        const auto dist = topo.hop_distance(sc.attackers);
        std::size_t max_hop = 0;
        for (auto d : dist) max_hop = std::max(max_hop, d);
        std::vector<double> sum(max_hop + 1, 0.0), cnt(max_hop + 1, 0.0);
        double adj_sum = 0.0, adj_cnt = 0.0, adj_min = 1.0;
        for (NodeId v = 0; v < n; ++v) {
            sum[dist[v]] += s.detection_probability[v];
            cnt[dist[v]] += 1.0;
            if (dist[v] == 1) {
                adj_sum += s.detection_probability[v];
                adj_cnt += 1.0;
                adj_min = std::min(adj_min, s.detection_probability[v]);
            }
        }
        s.detection_by_hop.resize(max_hop + 1);
        for (std::size_t h = 0; h <= max_hop; ++h) {
            s.detection_by_hop[h] = cnt[h] > 0 ? sum[h] / cnt[h] : 0.0;
        }
        s.attacker_adjacent_mean = adj_cnt > 0 ? adj_sum / adj_cnt : 0.0;
        s.attacker_adjacent_min = adj_cnt > 0 ? adj_min : 0.0;
    }

    if (mode == Mode::PerNode) {
        std::size_t all = 0, clean = 0, found = 0;
        for (const auto& rep : s.reports) {
            if (rep.identified.size() == sc.attackers.size()) ++all;
            if (rep.false_positives.empty()) ++clean;
            found += rep.identified.size();
        }
        const auto r = static_cast<double>(reps);
        s.all_identified_rate = static_cast<double>(all) / r;
        s.zero_false_positive_rate = static_cast<double>(clean) / r;
        if (!sc.attackers.empty()) {
            s.per_attacker_identification =
                static_cast<double>(found) / (r * static_cast<double>(sc.attackers.size()));
        }
    }
    return s;
}

}  // namespace cpd::netsim
