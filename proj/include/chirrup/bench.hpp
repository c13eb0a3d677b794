#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "chirrup/channel.hpp"
#include "chirrup/chirrup.hpp"
#include "chirrup/ost.hpp"
#include "chirrup/rng.hpp"
#include "chirrup/version.hpp"

namespace chirrup {

/// Declarative experiment description, usually parsed from a JSON config
/// file whose keys mirror these field names.
struct ExperimentSpec {
    std::string run_mode = "chirrup";  // chirrup | ost-predict | ost-mc

    // chirrup grid
    std::vector<int> grid_m{6};
    std::vector<int> grid_p{3};
    std::vector<int> grid_r{0};
    std::vector<CodebookMode> grid_mode{CodebookMode::Complex};
    std::map<int, std::vector<int>> l_by_r;  // overrides keyed by r

    std::vector<int> k_list;
    std::vector<double> ebn0_list;
    bool auto_bisect = false;
    int trials = 20;
    double target_error = 0.05;
    std::uint64_t seed = 0;
    std::string out = "results.csv";
    int threads = 1;
    std::optional<int> min_bits;
    bool truncate_to_k = false;
    std::optional<int> max_rows;  // stop after N rows (testing / partial runs)

    // ost-predict
    std::vector<double> predict_bits{50, 75, 100};
    double predict_n = 32768;
    double predict_epsilon = 0.05;
    std::vector<double> predict_ebn0;
    VarianceConvention convention = kDefaultVarianceConvention;

    // ost-mc
    int ost_n = 512;
    int ost_bits = 12;
    std::vector<int> ost_k;
    std::vector<double> ost_q;
    int ost_trials = 100;
};

namespace bench_detail {

inline std::vector<int> parse_int_list_or_range(const nlohmann::json& j) {
    std::vector<int> out;
    if (j.is_array()) {
        for (const auto& v : j) out.push_back(v.get<int>());
    } else if (j.is_object()) {
        const int from = j.at("from").get<int>();
        const int to = j.at("to").get<int>();
        const int step = j.value("step", 1);
        if (step <= 0) throw std::invalid_argument("spec: range step must be positive");
        for (int v = from; v <= to; v += step) out.push_back(v);
    } else {
        out.push_back(j.get<int>());
    }
    return out;
}

inline CodebookMode parse_mode(const std::string& s) {
    if (s == "complex") return CodebookMode::Complex;
    if (s == "real") return CodebookMode::Real;
    throw std::invalid_argument("spec: unknown codebook mode '" + s + "'");
}

inline std::string fmt(const char* format, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), format, v);
    return buf;
}

}  // namespace bench_detail

inline ExperimentSpec parse_experiment_spec(const nlohmann::json& j) {
    using bench_detail::parse_int_list_or_range;
    ExperimentSpec spec;
    spec.run_mode = j.value("mode", std::string("chirrup"));
    if (spec.run_mode != "chirrup" && spec.run_mode != "ost-predict" &&
        spec.run_mode != "ost-mc")
        throw std::invalid_argument("spec: mode must be chirrup, ost-predict or ost-mc");

    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        if (g.contains("m")) spec.grid_m = parse_int_list_or_range(g.at("m"));
        if (g.contains("p")) spec.grid_p = parse_int_list_or_range(g.at("p"));
        if (g.contains("r")) spec.grid_r = parse_int_list_or_range(g.at("r"));
        if (g.contains("mode")) {
            spec.grid_mode.clear();
            for (const auto& s : g.at("mode"))
                spec.grid_mode.push_back(bench_detail::parse_mode(s.get<std::string>()));
        }
    }
    if (j.contains("l")) {
        for (const auto& [key, val] : j.at("l").items()) {
            std::vector<int> l;
            for (const auto& v : val) l.push_back(v.get<int>());
            spec.l_by_r[std::stoi(key)] = l;
        }
    }
    if (j.contains("K")) spec.k_list = parse_int_list_or_range(j.at("K"));
    if (j.contains("ebn0_db")) {
        const auto& e = j.at("ebn0_db");
        if (e.is_string()) {
            const auto s = e.get<std::string>();
            if (s != "auto" && s != "auto-bisect")
                throw std::invalid_argument("spec: ebn0_db must be a list or 'auto'");
            spec.auto_bisect = true;
        } else {
            for (const auto& v : e) spec.ebn0_list.push_back(v.get<double>());
        }
    }
    spec.trials = j.value("trials", spec.trials);
    spec.target_error = j.value("target_error", spec.target_error);
    spec.seed = j.value("seed", spec.seed);
    spec.out = j.value("out", spec.out);
    spec.threads = j.value("threads", spec.threads);
    if (j.contains("min_bits")) spec.min_bits = j.at("min_bits").get<int>();
    spec.truncate_to_k = j.value("truncate_to_k", spec.truncate_to_k);
    if (j.contains("max_rows")) spec.max_rows = j.at("max_rows").get<int>();

    if (j.contains("predict")) {
        const auto& pj = j.at("predict");
        if (pj.contains("B")) {
            spec.predict_bits.clear();
            for (const auto& v : pj.at("B")) spec.predict_bits.push_back(v.get<double>());
        }
        spec.predict_n = pj.value("n", spec.predict_n);
        spec.predict_epsilon = pj.value("epsilon", spec.predict_epsilon);
        if (pj.contains("ebn0_db"))
            for (const auto& v : pj.at("ebn0_db")) spec.predict_ebn0.push_back(v.get<double>());
        if (pj.contains("convention")) {
            const auto s = pj.at("convention").get<std::string>();
            if (s == "paper-literal")
                spec.convention = VarianceConvention::PaperLiteral;
            else if (s == "stddev")
                spec.convention = VarianceConvention::StdDev;
            else
                throw std::invalid_argument("spec: unknown variance convention '" + s + "'");
        }
    }
    if (j.contains("ost")) {
        const auto& oj = j.at("ost");
        spec.ost_n = oj.value("n", spec.ost_n);
        spec.ost_bits = oj.value("B", spec.ost_bits);
        if (oj.contains("K")) spec.ost_k = parse_int_list_or_range(oj.at("K"));
        if (oj.contains("Q"))
            for (const auto& v : oj.at("Q")) spec.ost_q.push_back(v.get<double>());
        spec.ost_trials = oj.value("trials", spec.ost_trials);
    }
    return spec;
}

inline ExperimentSpec load_experiment_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    nlohmann::json j;
    in >> j;
    return parse_experiment_spec(j);
}

inline constexpr const char* kCsvHeader =
    "mode,m,p,r,B,K,Q,ebn0_db,trials,per_user_error,time_decode_mean_s,"
    "time_decode_median_s,seed";

inline std::string format_csv_row(const ExperimentResult& row) {
    std::ostringstream os;
    os << row.mode << ',' << row.m << ',' << row.p << ',' << row.r << ',' << row.message_bits
       << ',' << row.k << ',' << bench_detail::fmt("%.17g", row.power) << ','
       << bench_detail::fmt("%.12g", row.ebn0_db) << ',' << row.trials << ','
       << bench_detail::fmt("%.10g", row.per_user_error) << ','
       << bench_detail::fmt("%.6g", row.time_decode_mean_s) << ','
       << bench_detail::fmt("%.6g", row.time_decode_median_s) << ',' << row.seed;
    return os.str();
}

/// One schedulable unit of the run: a grid point at one K and one Eb/N0
/// entry (or the bisection). The fingerprint names the task for resume
/// bookkeeping and seeds its random streams.
struct BenchTask {
    std::string fingerprint;
    CodeConfig config;            // chirrup tasks
    int k = 0;
    std::optional<double> ebn0;   // nullopt = auto-bisect
    // predictor tasks
    bool is_predict = false;
    double predict_bits = 0;
    double predict_ebn0 = 0;
    // ost-mc tasks
    bool is_ost_mc = false;
    double ost_q = 0;
};

namespace bench_detail {

inline std::string l_string(const std::vector<int>& l) {
    std::string s;
    for (std::size_t i = 0; i < l.size(); ++i) {
        if (i) s += ':';
        s += std::to_string(l[i]);
    }
    return s;
}

}  // namespace bench_detail

inline std::vector<BenchTask> enumerate_tasks(const ExperimentSpec& spec) {
    std::vector<BenchTask> tasks;
    if (spec.run_mode == "ost-predict") {
        for (double bits : spec.predict_bits) {
            for (double db : spec.predict_ebn0) {
                BenchTask t;
                t.is_predict = true;
                t.predict_bits = bits;
                t.predict_ebn0 = db;
                t.fingerprint = "ost-predict|B=" + bench_detail::fmt("%.12g", bits) +
                                "|n=" + bench_detail::fmt("%.12g", spec.predict_n) +
                                "|eps=" + bench_detail::fmt("%.12g", spec.predict_epsilon) +
                                "|ebn0=" + bench_detail::fmt("%.12g", db);
                tasks.push_back(std::move(t));
            }
        }
        return tasks;
    }
    if (spec.run_mode == "ost-mc") {
        for (int k : spec.ost_k) {
            for (double q : spec.ost_q) {
                BenchTask t;
                t.is_ost_mc = true;
                t.k = k;
                t.ost_q = q;
                t.fingerprint = "ost-mc|n=" + std::to_string(spec.ost_n) +
                                "|B=" + std::to_string(spec.ost_bits) +
                                "|K=" + std::to_string(k) +
                                "|Q=" + bench_detail::fmt("%.12g", q);
                tasks.push_back(std::move(t));
            }
        }
        return tasks;
    }

    for (CodebookMode mode : spec.grid_mode) {
        for (int m : spec.grid_m) {
            for (int p : spec.grid_p) {
                for (int r : spec.grid_r) {
                    for (int k : spec.k_list) {
                        std::optional<std::vector<int>> l;
                        const auto it = spec.l_by_r.find(r);
                        if (it != spec.l_by_r.end()) l = it->second;
                        CodeConfig cfg = make_config(m, p, r, mode, 1.0, k, l);
                        validate_config(cfg);  // reject invalid specs before any work
                        if (spec.min_bits && cfg.message_bits() <= *spec.min_bits) continue;
                        const std::string base =
                            std::string("chirrup|") + to_string(mode) + "|m=" +
                            std::to_string(m) + "|p=" + std::to_string(p) + "|r=" +
                            std::to_string(r) + "|l=" + bench_detail::l_string(cfg.l) +
                            "|K=" + std::to_string(k);
                        if (spec.auto_bisect) {
                            BenchTask t;
                            t.config = cfg;
                            t.k = k;
                            t.fingerprint = base + "|ebn0=auto";
                            tasks.push_back(std::move(t));
                        } else {
                            for (double db : spec.ebn0_list) {
                                BenchTask t;
                                t.config = cfg;
                                t.k = k;
                                t.ebn0 = db;
                                t.fingerprint = base + "|ebn0=" + bench_detail::fmt("%.12g", db);
                                tasks.push_back(std::move(t));
                            }
                        }
                    }
                }
            }
        }
    }
    return tasks;
}

inline std::optional<ExperimentResult> run_task(const BenchTask& task,
                                                const ExperimentSpec& spec) {
    const std::uint64_t row_seed = derive_seed(spec.seed, fnv1a64(task.fingerprint));
    ExperimentResult row;
    row.seed = row_seed;

    if (task.is_predict) {
        row.mode = "ost-predict";
        row.message_bits = static_cast<int>(task.predict_bits);
        const double power =
            2.0 * task.predict_bits * std::pow(10.0, task.predict_ebn0 / 10.0) / spec.predict_n;
        const double k = ost_predict_k(spec.predict_n, task.predict_bits, power,
                                       spec.predict_epsilon, spec.convention);
        if (k < 1.0) return std::nullopt;  // below one message: no operating point
        row.k = static_cast<int>(k);
        row.power = power;
        row.ebn0_db = task.predict_ebn0;
        row.trials = 0;
        row.per_user_error = spec.predict_epsilon;
        row.seed = 0;
        return row;
    }

    if (task.is_ost_mc) {
        const std::size_t count = std::size_t{1} << spec.ost_bits;
        row.mode = "ost-mc";
        row.message_bits = spec.ost_bits;
        row.k = task.k;
        row.power = task.ost_q;
        row.ebn0_db = 10.0 * std::log10(spec.ost_n * task.ost_q / (2.0 * spec.ost_bits));
        row.trials = spec.ost_trials;
        std::vector<double> times;
        double err = 0.0;
        for (int t = 0; t < spec.ost_trials; ++t) {
            Rng rng(derive_seed(row_seed, static_cast<std::uint64_t>(t)));
            const auto cb = gaussian_codebook(static_cast<std::size_t>(spec.ost_n), count,
                                              task.ost_q, rng);
            std::set<std::size_t> active;
            while (active.size() < static_cast<std::size_t>(task.k))
                active.insert(static_cast<std::size_t>(rng.below(count)));
            std::vector<double> y(static_cast<std::size_t>(spec.ost_n), 0.0);
            for (std::size_t i : active) {
                const double* col = cb.column(i);
                for (std::size_t a = 0; a < y.size(); ++a) y[a] += col[a];
            }
            for (auto& v : y) v += rng.normal();
            const auto t0 = std::chrono::steady_clock::now();
            const auto got = ost_decode(y, cb, static_cast<std::size_t>(task.k));
            const auto t1 = std::chrono::steady_clock::now();
            times.push_back(std::chrono::duration<double>(t1 - t0).count());
            std::size_t hit = 0;
            for (std::size_t i : got)
                if (active.count(i)) ++hit;
            err += 1.0 - static_cast<double>(hit) / static_cast<double>(task.k);
        }
        row.per_user_error = err / std::max(1, spec.ost_trials);
        row.time_decode_mean_s = mean(times);
        row.time_decode_median_s = median(times);
        return row;
    }

    row.mode = to_string(task.config.mode);
    row.m = task.config.m;
    row.p = task.config.p;
    row.r = task.config.r;
    row.message_bits = task.config.message_bits();
    row.k = task.k;
    row.trials = spec.trials;
    row.real_equivalent_len = task.config.mode == CodebookMode::Complex
                                  ? task.config.signal_len() * 2
                                  : task.config.signal_len();
    std::optional<PointEstimate> pt;
    if (task.ebn0) {
        pt = evaluate_point(task.config, task.k, *task.ebn0, spec.trials, row_seed,
                            spec.truncate_to_k, spec.threads);
    } else {
        pt = find_min_ebn0(task.config, task.k, spec.target_error, spec.trials, row_seed,
                           spec.truncate_to_k, spec.threads);
        if (!pt) return std::nullopt;  // infeasible within the search window
    }
    row.power = pt->power;
    row.ebn0_db = pt->ebn0_db;
    row.per_user_error = pt->error;
    row.time_decode_mean_s = mean(pt->decode_seconds);
    row.time_decode_median_s = median(pt->decode_seconds);
    return row;
}

struct BenchOutcome {
    std::size_t rows_emitted = 0;
    std::size_t rows_skipped = 0;   // already present (resume)
    std::size_t rows_dropped = 0;   // infeasible points
    bool stopped_early = false;     // hit max_rows
};

/// Execute a spec, appending CSV rows to spec.out and keeping a JSON sidecar
/// (spec.out + ".meta.json") with reproducibility metadata and the
/// fingerprints of completed rows. With resume = true, rows already in the
/// sidecar are skipped, so an interrupted run finishes with the same row set
/// an uninterrupted one would have produced.
inline BenchOutcome run_experiment(const ExperimentSpec& spec, bool resume = false) {
    const auto tasks = enumerate_tasks(spec);
    const std::string meta_path = spec.out + ".meta.json";

    std::set<std::string> completed;
    nlohmann::json meta;
    if (resume) {
        std::ifstream in(meta_path);
        if (in) {
            in >> meta;
            for (const auto& f : meta.value("completed", nlohmann::json::array()))
                completed.insert(f.get<std::string>());
        }
    }
    if (!resume || !meta.is_object()) {
        meta = nlohmann::json::object();
        meta["library"] = "chirrup";
        meta["version"] = kVersion;
        meta["variance_convention"] = to_string(spec.convention);
        meta["seed"] = spec.seed;
        meta["run_mode"] = spec.run_mode;
        meta["completed"] = nlohmann::json::array();
    }

    const bool fresh = !resume;
    std::ofstream csv;
    if (fresh) {
        csv.open(spec.out, std::ios::trunc);
        csv << kCsvHeader << '\n';
    } else {
        std::ifstream probe(spec.out);
        const bool has_content = probe && probe.peek() != std::ifstream::traits_type::eof();
        csv.open(spec.out, std::ios::app);
        if (!has_content) csv << kCsvHeader << '\n';
    }
    if (!csv) throw std::runtime_error("cannot open output file: " + spec.out);

    const auto write_meta = [&]() {
        std::ofstream mf(meta_path, std::ios::trunc);
        mf << meta.dump(2) << '\n';
        mf.flush();
    };
    write_meta();

    BenchOutcome outcome;
    std::size_t produced = 0;
    for (const auto& task : tasks) {
        if (completed.count(task.fingerprint)) {
            ++outcome.rows_skipped;
            continue;
        }
        if (spec.max_rows && produced >= static_cast<std::size_t>(*spec.max_rows)) {
            outcome.stopped_early = true;
            break;
        }
        const auto row = run_task(task, spec);
        if (row) {
            csv << format_csv_row(*row) << '\n';
            csv.flush();
            ++outcome.rows_emitted;
        } else {
            ++outcome.rows_dropped;
        }
        ++produced;
        completed.insert(task.fingerprint);
        meta["completed"].push_back(task.fingerprint);
        if (row && task.config.mode == CodebookMode::Complex && !task.is_predict &&
            !task.is_ost_mc)
            meta["real_equivalent_len"][task.fingerprint] = row->real_equivalent_len;
        write_meta();
    }
    return outcome;
}

}  // namespace chirrup
