// cpd: change point detection from the command line.
//
//   cpd critval  --kind offline --d 1 --alpha 0.05
//   cpd offline  --input series.csv
//   cpd segment  --input series.csv --alpha 0.01
//   cpd monitor  --input - < stream.csv
//   cpd trend    --input series.csv --index 120
//   cpd simulate --grid 10x10 --attackers 10 --reps 100 --heatmap heat.csv
//
// Reports are JSON on stdout. `monitor` prints one JSON line per event and
// writes its configuration and skipped windows to stderr.
//
// Exit status: 0 success, 1 detection-domain error (bad data, untabulated
// critical value, insufficient training), 2 usage error.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cpd/cpd.hpp"

using nlohmann::ordered_json;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Options shared by every subcommand that needs critical values.
struct CritOptions {
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::size_t grid_steps = 10000;
    std::size_t replications = 100000;
    double horizon = 10.0;
    bool no_correction = false;
    std::string table;

    void add_to(CLI::App* app) {
        app->add_option("--seed", seed, "Root seed for Monte Carlo critical values")->capture_default_str();
        app->add_option("--threads", threads, "Worker threads")->check(CLI::Range(1u, 256u))->capture_default_str();
        app->add_option("--grid-steps", grid_steps, "Monte Carlo grid steps per unit time")
            ->check(CLI::Range(std::size_t{100}, std::size_t{10000000}))
            ->capture_default_str();
        app->add_option("--replications", replications, "Monte Carlo replications")
            ->check(CLI::Range(std::size_t{1000}, std::size_t{100000000}))
            ->capture_default_str();
        app->add_option("--horizon", horizon, "Horizon T of the ratio functional")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        app->add_flag("--no-correction", no_correction, "Disable the discrete-grid continuity correction");
        app->add_option("--critval-table", table, "Read critical values from this table only")
            ->check(CLI::ExistingFile);
    }

    cpd::CritValRequest request() const {
        cpd::CritValRequest r;
        r.seed = seed;
        r.grid_steps = grid_steps;
        r.replications = replications;
        r.horizon_T = horizon;
        r.continuity_correction = !no_correction;
        return r;
    }

    std::unique_ptr<cpd::CritValSource> source() const {
        if (!table.empty()) {
            return std::make_unique<cpd::CritValSource>(cpd::CritValTable::load(table));
        }
        return std::make_unique<cpd::CritValSource>(request(), threads);
    }

    ordered_json json() const {
        ordered_json j;
        if (!table.empty()) {
            j["critval_table"] = table;
        } else {
            j["seed"] = seed;
            j["grid_steps"] = grid_steps;
            j["replications"] = replications;
            j["horizon_T"] = horizon;
            j["continuity_correction"] = !no_correction;
        }
        return j;
    }
};

struct InputOptions {
    std::string input = "-";
    std::string columns = "1";

    void add_to(CLI::App* app, bool required) {
        auto* opt = app->add_option("--input", input, "CSV file, or - for standard input");
        if (required) opt->required();
        app->add_option("--columns", columns, "Comma-separated 1-based value columns")->capture_default_str();
    }

    std::vector<std::size_t> column_list() const {
        std::vector<std::size_t> out;
        std::stringstream ss(columns);
        std::string item;
        while (std::getline(ss, item, ',')) {
            const auto v = cpd::parse_finite(item);
            if (!v || *v < 1 || *v != static_cast<double>(static_cast<std::size_t>(*v))) {
                throw UsageError("--columns: expected positive integers, got '" + columns + "'");
            }
            out.push_back(static_cast<std::size_t>(*v));
        }
        if (out.empty()) throw UsageError("--columns: empty selection");
        return out;
    }

    cpd::TimeSeries load() const {
        if (input == "-") return cpd::read_csv(std::cin, column_list(), 1.0, "stdin");
        return cpd::load_csv(input, column_list());
    }
};

std::optional<std::string> output_path;

void emit(const ordered_json& report) {
    if (output_path && *output_path != "-") {
        std::ofstream out(*output_path);
        if (!out) throw cpd::Error("cannot write '" + *output_path + "'");
        out << report.dump(2) << '\n';
        return;
    }
    std::cout << report.dump(2) << '\n';
}

ordered_json indices_json(const std::vector<std::size_t>& v) {
    ordered_json a = ordered_json::array();
    for (auto x : v) a.push_back(x);
    return a;
}

ordered_json offline_json(const cpd::OfflineTestResult& r) {
    ordered_json j;
    j["statistic"] = r.statistic;
    j["reject"] = r.reject;
    j["cp_index"] = r.cp_index ? ordered_json(*r.cp_index) : ordered_json(nullptr);
    j["cp_fraction"] = r.cp_fraction() ? ordered_json(*r.cp_fraction()) : ordered_json(nullptr);
    j["critval"] = r.critval_used;
    j["n"] = r.n;
    return j;
}

std::pair<std::size_t, std::size_t> parse_dims(const std::string& text, const char* flag) {
    const auto x = text.find_first_of("xX");
    if (x == std::string::npos) throw UsageError(std::string(flag) + ": expected RxC, got '" + text + "'");
    const auto r = cpd::parse_finite(text.substr(0, x));
    const auto c = cpd::parse_finite(text.substr(x + 1));
    if (!r || !c || *r < 1 || *c < 1 || *r != std::floor(*r) || *c != std::floor(*c)) {
        throw UsageError(std::string(flag) + ": expected RxC, got '" + text + "'");
    }
    return {static_cast<std::size_t>(*r), static_cast<std::size_t>(*c)};
}

// ---------------------------------------------------------------------------

struct CritvalCmd {
    std::string kind = "offline";
    std::size_t d = 1;
    double alpha = 0.05;
    double gamma = 0.0;
    std::string table_out;
    CritOptions crit;

    void add(CLI::App& app) {
        auto* sub = app.add_subcommand("critval", "Simulate a critical value or build a table");
        sub->add_option("--kind", kind, "offline, standard or ratio")
            ->check(CLI::IsMember({"offline", "standard", "ratio"}))
            ->capture_default_str();
        sub->add_option("--d", d, "Dimension")->check(CLI::Range(std::size_t{1}, std::size_t{64}))->capture_default_str();
        sub->add_option("--alpha", alpha, "Significance level")->check(CLI::Range(1e-6, 0.999999))->capture_default_str();
        sub->add_option("--gamma", gamma, "Boundary exponent (online kinds)")->check(CLI::Range(0.0, 0.4999999))->capture_default_str();
        sub->add_option("--table", table_out, "Write the full default grid table to this CSV file");
        crit.add_to(sub);
        sub->callback([this] { run(); });
    }

    void run() {
        auto req = crit.request();
        if (!table_out.empty()) {
            const auto table = cpd::CritValTable::build({}, req, crit.threads);
            table.save(table_out);
            ordered_json j;
            j["table"] = table_out;
            j["entries"] = table.size();
            j["params"] = crit.json();
            emit(j);
            return;
        }
        req.kind = cpd::crit_kind_from_string(kind);
        req.d = d;
        req.alpha = alpha;
        req.gamma = req.kind == cpd::CritKind::OfflineMax ? 0.0 : gamma;
        cpd::CritVal cv;
        if (!crit.table.empty()) {
            cv = cpd::CritValTable::load(crit.table).lookup(req.kind, d, req.gamma, alpha);
        } else {
            cv = cpd::compute_critval(req, crit.threads);
        }
        ordered_json j;
        j["kind"] = kind;
        j["d"] = d;
        j["alpha"] = alpha;
        j["gamma"] = req.gamma;
        j["value"] = cv.value;
        j["mc_stderr"] = cv.mc_stderr;
        j["params"] = crit.json();
        emit(j);
    }
};

struct OfflineCmd {
    double alpha = 0.05;
    InputOptions in;
    CritOptions crit;

    void add(CLI::App& app) {
        auto* sub = app.add_subcommand("offline", "At-most-one-change CUSUM test");
        sub->add_option("--alpha", alpha, "Significance level")->check(CLI::Range(1e-6, 0.999999))->capture_default_str();
        in.add_to(sub, true);
        crit.add_to(sub);
        sub->callback([this] { run(); });
    }

    void run() {
        const auto s = in.load();
        auto source = crit.source();
        const auto cv = source->get(cpd::CritKind::OfflineMax, s.dim(), 0.0, alpha);
        const auto r = cpd::offline_test(s.values(), alpha, cv);
        ordered_json j = offline_json(r);
        j["cps"] = r.cp_index ? indices_json({*r.cp_index}) : ordered_json::array();
        j["alpha"] = alpha;
        ordered_json p = crit.json();
        p["input"] = in.input;
        p["columns"] = in.columns;
        j["params"] = p;
        emit(j);
    }
};

struct SegmentCmd {
    double alpha = 0.05;
    std::size_t min_seg = 20;
    std::size_t max_rounds = 10;
    InputOptions in;
    CritOptions crit;

    void add(CLI::App& app) {
        auto* sub = app.add_subcommand("segment", "Multiple change points by validated binary segmentation");
        sub->add_option("--alpha", alpha, "Significance level")->check(CLI::Range(1e-6, 0.999999))->capture_default_str();
        sub->add_option("--min-seg", min_seg, "Shortest segment split further")->check(CLI::PositiveNumber)->capture_default_str();
        sub->add_option("--max-rounds", max_rounds, "Validation round cap")->check(CLI::PositiveNumber)->capture_default_str();
        in.add_to(sub, true);
        crit.add_to(sub);
        sub->callback([this] { run(); });
    }

    void run() {
        const auto s = in.load();
        auto source = crit.source();
        const auto provider = cpd::offline_provider(*source);
        const auto whole = cpd::offline_test(s.values(), alpha, provider(s.dim(), alpha));
        const auto set = cpd::segment(s.values(), alpha, provider, {min_seg, max_rounds});
        ordered_json j;
        j["statistic"] = whole.statistic;
        j["cps"] = indices_json(set.indices());
        ordered_json details = ordered_json::array();
        for (const auto& cp : set.cps) {
            ordered_json d = offline_json(cp.validation);
            d["index"] = cp.index;
            d["window"] = {cp.window_lo, cp.window_hi};
            details.push_back(d);
        }
        j["validation"] = details;
        j["alpha"] = alpha;
        j["validation_rounds"] = set.validation_rounds;
        j["hit_round_cap"] = set.hit_round_cap;
        j["n"] = s.size();
        ordered_json p = crit.json();
        p["input"] = in.input;
        p["columns"] = in.columns;
        p["min_seg"] = min_seg;
        p["max_rounds"] = max_rounds;
        j["params"] = p;
        emit(j);
    }
};

struct MacdOptions {
    cpd::MacdParams macd;

    void add_to(CLI::App* app) {
        app->set_help_flag("--help", "Print this help message and exit");  // frees -h for --h
        app->add_option("--p1", macd.p1, "Signal EMA lag")->capture_default_str();
        app->add_option("--p2", macd.p2, "Fast EMA lag")->capture_default_str();
        app->add_option("--p3", macd.p3, "Slow EMA lag")->capture_default_str();
        app->add_option("--h", macd.h, "Interval window length")->capture_default_str();
    }

    ordered_json json() const { return {{"p1", macd.p1}, {"p2", macd.p2}, {"p3", macd.p3}, {"h", macd.h}}; }
};

struct MonitorCmd {
    cpd::MonitorConfig cfg;
    std::string detector = "standard";
    InputOptions in;
    MacdOptions macd;
    CritOptions crit;

    void add(CLI::App& app) {
        auto* sub = app.add_subcommand("monitor", "Train, monitor and label changes on a stream");
        sub->add_option("--detector", detector, "standard or ratio")
            ->check(CLI::IsMember({"standard", "ratio"}))
            ->capture_default_str();
        sub->add_option("--alpha", cfg.alpha, "Significance level")->check(CLI::Range(1e-6, 0.999999))->capture_default_str();
        sub->add_option("--gamma", cfg.gamma, "Boundary exponent")->check(CLI::Range(0.0, 0.4999999))->capture_default_str();
        sub->add_option("--m", cfg.m_min, "Minimal training length (first window origin)")->capture_default_str();
        sub->add_option("--window", cfg.window_k, "Monitoring window length k")->check(CLI::PositiveNumber)->capture_default_str();
        sub->add_option("--quiet-gap", cfg.quiet_gap_d, "Samples skipped after an alarm")->capture_default_str();
        sub->add_option("--min-seg", cfg.min_seg, "Segmentation minimum segment")->check(CLI::PositiveNumber)->capture_default_str();
        sub->add_option("--trend-dim", cfg.trend_dimension, "1-based dimension fed to the trend indicator")->capture_default_str();
        in.add_to(sub, false);
        macd.add_to(sub);
        crit.add_to(sub);
        sub->callback([this] { run(); });
    }

    ordered_json config_json() const {
        ordered_json j;
        j["detector"] = detector;
        j["alpha"] = cfg.alpha;
        j["gamma"] = cfg.gamma;
        j["m"] = cfg.m_min;
        j["window"] = cfg.window_k;
        j["quiet_gap"] = cfg.quiet_gap_d;
        j["min_seg"] = cfg.min_seg;
        j["trend_dim"] = cfg.trend_dimension;
        j["macd"] = macd.json();
        j["input"] = in.input;
        j["columns"] = in.columns;
        j["critvals"] = crit.json();
        return j;
    }

    static void print_event(const cpd::ChangeEvent& e) {
        ordered_json j;
        j["index"] = e.detected_at;
        j["onset"] = e.change_onset;
        j["direction"] = cpd::to_string(e.direction);
        j["action"] = cpd::to_string(e.action);
        j["ti"] = e.trend.ti_value;
        j["trend_mode"] = cpd::to_string(e.trend.mode);
        j["trend_span"] = e.trend.span;
        j["training"] = {e.training_used.lo, e.training_used.hi};
        std::cout << j.dump() << '\n' << std::flush;
    }

    void run() {
        cfg.kind = cpd::detector_kind_from_string(detector);
        cfg.macd = macd.macd;
        const auto columns = in.column_list();
        cfg.validate(columns.size());
        std::cerr << ordered_json{{"config", config_json()}}.dump() << '\n';

        std::ifstream file;
        std::istream* stream = &std::cin;
        if (in.input != "-") {
            file.open(in.input);
            if (!file) throw cpd::Error("cannot open '" + in.input + "'");
            stream = &file;
        }
        auto source = crit.source();
        cpd::Monitor mon(cfg, *source, columns.size());
        cpd::CsvRowReader reader(columns);
        std::size_t skips_seen = 0;
        auto report_skips = [&] {
            for (; skips_seen < mon.skips().size(); ++skips_seen) {
                const auto& s = mon.skips()[skips_seen];
                std::cerr << ordered_json{{"skipped_window",
                                           {{"at", s.at}, {"last_cp", s.last_cp}, {"resume_at", s.resume_at}}}}
                                 .dump()
                          << '\n';
            }
        };
        std::string line;
        cpd::Vector row;
        while (std::getline(*stream, line)) {
            if (!reader.parse(line, row)) continue;
            for (const auto& e : mon.push(row)) print_event(e);
            report_skips();
        }
        for (const auto& e : mon.finish()) print_event(e);
        report_skips();
    }
};

struct TrendCmd {
    std::size_t index = 0;
    std::string mode = "interval";
    bool clamp = false;
    InputOptions in;
    MacdOptions macd;

    void add(CLI::App& app) {
        auto* sub = app.add_subcommand("trend", "Direction of a change from the MACD trend indicator");
        sub->add_option("--index", index, "1-based change point index")->required()->check(CLI::PositiveNumber);
        sub->add_option("--mode", mode, "point or interval")->check(CLI::IsMember({"point", "interval"}))->capture_default_str();
        sub->add_flag("--clamp", clamp, "Truncate the interval window at the end of the series");
        in.add_to(sub, true);
        macd.add_to(sub);
        sub->callback([this] { run(); });
    }

    void run() {
        if (in.column_list().size() != 1) throw UsageError("trend: select exactly one column");
        macd.macd.validate();
        const auto s = in.load();
        const auto x = s.column(1);
        cpd::TrendVerdict v;
        if (mode == "point") {
            v = cpd::ti_point(x, index, macd.macd);
        } else if (clamp) {
            v = cpd::ti_interval_clamped(x, index, macd.macd);
        } else {
            v = cpd::ti_interval(x, index, macd.macd);
        }
        ordered_json j;
        j["ti"] = v.ti_value;
        j["direction"] = cpd::to_string(v.direction);
        j["mode"] = cpd::to_string(v.mode);
        j["index"] = v.at_index;
        j["span"] = v.span;
        ordered_json p = macd.json();
        p["input"] = in.input;
        p["columns"] = in.columns;
        p["clamp"] = clamp;
        j["params"] = p;
        emit(j);
    }
};

struct SimulateCmd {
    std::string grid = "10x10";
    std::optional<std::size_t> attackers;
    std::string mode = "per-node";
    std::size_t reps = 100;
    std::string cluster = "2x2";
    std::uint64_t scenario_seed = 1;
    std::string heatmap;
    cpd::netsim::AttackScenario sc;
    cpd::netsim::DetectorConfig det;
    CritOptions crit;

    void add(CLI::App& app) {
        auto* sub = app.add_subcommand("simulate", "Distributed attack detection on a synthetic grid network");
        sub->add_option("--grid", grid, "Grid size RxC")->capture_default_str();
        sub->add_option("--attackers", attackers, "Number of attackers (default 10% of nodes)");
        sub->add_option("--mode", mode, "per-node or cluster")->check(CLI::IsMember({"per-node", "cluster"}))->capture_default_str();
        sub->add_option("--reps", reps, "Replications")->check(CLI::PositiveNumber)->capture_default_str();
        sub->add_option("--cluster", cluster, "Cluster block size RxC")->capture_default_str();
        sub->add_option("--scenario-seed", scenario_seed, "Seed for attacker placement")->capture_default_str();
        sub->add_option("--heatmap", heatmap, "Write the detection probability grid to this CSV file");
        sub->add_option("--m", det.m, "Initial training length")->check(CLI::Range(std::size_t{4}, std::size_t{1000000}))->capture_default_str();
        sub->add_option("--block", det.block, "Retraining block length")->check(CLI::PositiveNumber)->capture_default_str();
        sub->add_option("--alpha", det.alpha, "Significance level")->check(CLI::Range(1e-6, 0.999999))->capture_default_str();
        sub->add_option("--gamma", det.gamma, "Boundary exponent")->check(CLI::Range(0.0, 0.4999999))->capture_default_str();
        sub->add_option("--horizon-samples", sc.horizon, "Samples per node")->capture_default_str();
        sub->add_option("--attack-start", sc.attack_start, "First attacked sample")->capture_default_str();
        sub->add_option("--injection-rate", sc.injection_rate, "Unknown-flow packets per period per attacker")->capture_default_str();
        sub->add_option("--ticks", sc.ticks_per_packet, "Transmit ticks per packet")->capture_default_str();
        sub->add_option("--hop-decay", sc.hop_decay, "Forwarding load factor per hop")->capture_default_str();
        sub->add_option("--noise-sigma", sc.noise_sigma, "Baseline standard deviation")->capture_default_str();
        sub->add_option("--ar", sc.ar_coef, "Baseline AR(1) coefficient")->capture_default_str();
        sub->add_option("--background-rate", sc.background_unknown_rate, "Benign unknown-flow probability per period")->capture_default_str();
        crit.add_to(sub);
        sub->callback([this] { run(); });
    }

    void run() {
        using namespace cpd::netsim;
        const auto [rows, cols] = parse_dims(grid, "--grid");
        auto topo = Topology::grid(rows, cols);
        const std::size_t count = attackers.value_or(std::max<std::size_t>(1, topo.size() / 10));
        sc.attackers = place_attackers(topo, count, scenario_seed);
        const Mode m = mode == "cluster" ? Mode::Cluster : Mode::PerNode;
        if (m == Mode::Cluster) {
            const auto [br, bc] = parse_dims(cluster, "--cluster");
            topo.assign_block_clusters(br, bc);
        }
        auto source = crit.source();
        const auto cv = detector_critval(*source, det);
        const auto s = simulate(topo, sc, reps, crit.seed, m, det, cv, crit.threads);

        ordered_json prob = ordered_json::array();
        for (std::size_t r = 0; r < rows; ++r) {
            ordered_json row = ordered_json::array();
            for (std::size_t c = 0; c < cols; ++c) row.push_back(s.detection_probability[r * cols + c]);
            prob.push_back(row);
        }
        if (!heatmap.empty()) {
            std::ofstream out(heatmap);
            if (!out) throw cpd::Error("cannot write '" + heatmap + "'");
            for (std::size_t r = 0; r < rows; ++r) {
                for (std::size_t c = 0; c < cols; ++c) {
                    out << (c ? "," : "") << cpd::format_double(s.detection_probability[r * cols + c]);
                }
                out << '\n';
            }
        }
        ordered_json j;
        j["mode"] = mode;
        j["grid"] = {rows, cols};
        j["attackers"] = indices_json(sc.attackers);
        j["replications"] = reps;
        j["detection_probability"] = prob;
        j["attacker_adjacent"] = {{"mean", s.attacker_adjacent_mean}, {"min", s.attacker_adjacent_min}};
        j["detection_by_hop"] = s.detection_by_hop;
        double pre = 0.0;
        for (double p : s.pre_attack_alarm_probability) pre = std::max(pre, p);
        j["pre_attack_alarm_max"] = pre;
        if (m == Mode::PerNode) {
            j["identification"] = {{"all_identified_rate", s.all_identified_rate},
                                   {"zero_false_positive_rate", s.zero_false_positive_rate},
                                   {"per_attacker_rate", s.per_attacker_identification}};
        } else {
            j["cluster_detection_probability"] = s.cluster_detection_probability;
        }
        j["packets_overhead"] = s.mean_packets_overhead;
        if (!heatmap.empty()) j["heatmap"] = heatmap;
        ordered_json p = crit.json();
        p["m"] = det.m;
        p["block"] = det.block;
        p["alpha"] = det.alpha;
        p["gamma"] = det.gamma;
        p["scenario_seed"] = scenario_seed;
        p["attack_start"] = sc.attack_start;
        p["horizon_samples"] = sc.horizon;
        p["injection_rate"] = sc.injection_rate;
        p["ticks"] = sc.ticks_per_packet;
        p["hop_decay"] = sc.hop_decay;
        p["noise_sigma"] = sc.noise_sigma;
        p["ar"] = sc.ar_coef;
        p["background_rate"] = sc.background_unknown_rate;
        if (m == Mode::Cluster) p["cluster"] = cluster;
        j["params"] = p;
        emit(j);
    }
};

// ---------------------------------------------------------------------------
// Config files hold `key = value` lines naming long options of the chosen
// subcommand. They are expanded in front of the command-line arguments; every
// option keeps its last value, so flags override the file.

std::vector<std::string> config_args(const std::string& path, CLI::App* sub) {
    std::ifstream in(path);
    if (!in) throw UsageError("--config: cannot open '" + path + "'");
    std::vector<std::string> out;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        const auto text = cpd::trim(line);
        if (text.empty() || text.front() == '#' || text.front() == ';') continue;
        const auto eq = text.find('=');
        if (eq == std::string_view::npos) {
            throw UsageError(path + ":" + std::to_string(row) + ": expected key = value");
        }
        std::string key(cpd::trim(text.substr(0, eq)));
        std::string value(cpd::trim(text.substr(eq + 1)));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
            value = value.substr(1, value.size() - 2);
        }
        std::replace(key.begin(), key.end(), '_', '-');
        const auto* opt = sub->get_option_no_throw("--" + key);
        if (!opt || key == "config" || key == "help") {
            throw UsageError(path + ":" + std::to_string(row) + ": unknown key '" + key + "' for " +
                             sub->get_name());
        }
        if (opt->get_expected_max() == 0) {
            if (value == "true" || value == "1") out.push_back("--" + key);
            else if (value != "false" && value != "0") {
                throw UsageError(path + ":" + std::to_string(row) + ": '" + key + "' takes true or false");
            }
            continue;
        }
        out.push_back("--" + key);
        out.push_back(value);
    }
    return out;
}

// Finds the subcommand and config path in raw arguments and splices the
// config entries directly after the subcommand name.
std::vector<std::string> expand_config(CLI::App& app, std::vector<std::string> args) {
    std::size_t sub_pos = 0;
    for (std::size_t i = 1; i < args.size(); ++i) {
        if (!args[i].empty() && args[i][0] != '-') {
            sub_pos = i;
            break;
        }
    }
    if (sub_pos == 0) return args;
    CLI::App* sub = app.get_subcommand_no_throw(args[sub_pos]);
    if (!sub) return args;
    std::optional<std::string> path;
    for (std::size_t i = sub_pos + 1; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
    }
    if (!path) return args;
    auto extra = config_args(*path, sub);
    args.insert(args.begin() + static_cast<std::ptrdiff_t>(sub_pos + 1), extra.begin(), extra.end());
    return args;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Change point detection for monitored metrics"};
    app.set_version_flag("--version", "cpd 1.0.0");
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.fallthrough(false);

    CritvalCmd critval;
    OfflineCmd offline;
    SegmentCmd segment;
    MonitorCmd monitor;
    TrendCmd trend;
    SimulateCmd simulate;
    critval.add(app);
    offline.add(app);
    segment.add(app);
    monitor.add(app);
    trend.add(app);
    simulate.add(app);

    std::string config_path;
    for (auto* sub : app.get_subcommands({})) {
        sub->add_option("--config", config_path, "File of key = value lines (flags take precedence)")
            ->check(CLI::ExistingFile);
        if (sub->get_name() != "monitor") {
            sub->add_option("--output", output_path, "Write the JSON report here instead of stdout");
        }
    }

    try {
        std::vector<std::string> args(argv, argv + argc);
        args = expand_config(app, std::move(args));
        std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
        app.parse(rev);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid argument: " << e.what() << '\n';
        return 2;
    } catch (const std::out_of_range& e) {
        std::cerr << "out of range: " << e.what() << '\n';
        return 2;
    } catch (const cpd::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
