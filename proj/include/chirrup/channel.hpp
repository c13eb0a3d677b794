#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_set>
#include <vector>

#include "chirrup/bits.hpp"
#include "chirrup/chirrup.hpp"
#include "chirrup/rng.hpp"

namespace chirrup {

/// Noise convention: real mode draws one unit-variance Gaussian per entry;
/// complex mode draws independent unit-variance real and imaginary parts,
/// so a complex signal of length n occupies the same 2n unit-variance real
/// dimensions as its real equivalent.
inline void add_awgn(SignalVector& y, CodebookMode mode, Rng& rng) {
    for (auto& v : y) {
        if (mode == CodebookMode::Complex)
            v += cplx{rng.normal(), rng.normal()};
        else
            v += cplx{rng.normal(), 0.0};
    }
}

/// K distinct uniform B-bit messages. Deterministic given the generator
/// state; rejection keeps the draw uniform without replacement.
inline std::vector<BitString> draw_messages(int k, int message_bits, Rng& rng) {
    if (k < 0) throw std::invalid_argument("draw_messages: negative K");
    std::vector<BitString> out;
    std::unordered_set<std::string> seen;
    out.reserve(static_cast<std::size_t>(k));
    while (static_cast<int>(out.size()) < k) {
        BitString msg = random_bits(static_cast<std::size_t>(message_bits), rng);
        if (seen.insert(bits_key(msg)).second) out.push_back(std::move(msg));
    }
    return out;
}

/// Superposition of every message's encoded signal plus one AWGN draw.
/// Summation order follows the message order, so the result is reproducible
/// bit-for-bit given the generator state.
inline SignalVector transmit(const std::vector<BitString>& messages, const CodeConfig& cfg,
                             Rng& rng, bool noise = true) {
    SignalVector y(cfg.signal_len(), cplx{0.0, 0.0});
    for (const auto& msg : messages) {
        const SignalVector s = chirrup_encode(msg, cfg);
        for (std::size_t a = 0; a < y.size(); ++a) y[a] += s[a];
    }
    if (noise) add_awgn(y, cfg.mode, rng);
    return y;
}

/// Fraction of transmitted messages missing from the recovered list.
inline double per_user_error(const std::vector<BitString>& sent,
                             const std::vector<BitString>& recovered) {
    if (sent.empty()) throw std::invalid_argument("per_user_error: no transmitted messages");
    std::unordered_set<std::string> got;
    for (const auto& msg : recovered) got.insert(bits_key(msg));
    std::size_t missing = 0;
    for (const auto& msg : sent)
        if (got.find(bits_key(msg)) == got.end()) ++missing;
    return static_cast<double>(missing) / static_cast<double>(sent.size());
}

/// Energy per bit over noise density, 10 log10(n Q / 2B) with n the
/// configured codeword length 2^{m+p+r}.
inline double ebn0_db(double power, const CodeConfig& cfg) {
    if (!(power > 0)) throw std::invalid_argument("ebn0_db: power must be positive");
    const double n = static_cast<double>(cfg.signal_len());
    const double b = static_cast<double>(cfg.message_bits());
    return 10.0 * std::log10(n * power / (2.0 * b));
}

inline double power_for_ebn0(double db, const CodeConfig& cfg) {
    const double n = static_cast<double>(cfg.signal_len());
    const double b = static_cast<double>(cfg.message_bits());
    return 2.0 * b * std::pow(10.0, db / 10.0) / n;
}

struct TrialResult {
    double error = 0.0;
    double decode_seconds = 0.0;
};

/// One seeded Monte-Carlo trial at a fixed power; only the decode is timed.
/// truncate_to_k clips the output list to the first K entries for strict
/// fixed-list-size comparisons; by default the full list is scored.
inline TrialResult run_trial(const CodeConfig& cfg, int k, std::uint64_t trial_seed,
                             bool truncate_to_k = false) {
    Rng msg_rng(derive_seed(trial_seed, 1));
    Rng noise_rng(derive_seed(trial_seed, 2));
    const auto messages = draw_messages(k, cfg.message_bits(), msg_rng);
    const SignalVector y = transmit(messages, cfg, noise_rng);
    const auto t0 = std::chrono::steady_clock::now();
    auto recovered = chirrup_decode(y, cfg, derive_seed(trial_seed, 3));
    const auto t1 = std::chrono::steady_clock::now();
    if (truncate_to_k && recovered.size() > static_cast<std::size_t>(k))
        recovered.resize(static_cast<std::size_t>(k));
    TrialResult out;
    out.error = per_user_error(messages, recovered);
    out.decode_seconds = std::chrono::duration<double>(t1 - t0).count();
    return out;
}

struct PointEstimate {
    double ebn0_db = 0.0;
    double power = 0.0;
    double error = 0.0;
    std::vector<double> decode_seconds;
};

/// Evaluate one (config, K, Eb/N0) point over `trials` seeded trials.
/// Trials are independent and may run on up to `threads` workers; results
/// aggregate by trial index, so the estimate does not depend on the worker
/// count.
inline PointEstimate evaluate_point(CodeConfig cfg, int k, double db, int trials,
                                    std::uint64_t seed, bool truncate_to_k = false,
                                    int threads = 1) {
    cfg.power = power_for_ebn0(db, cfg);
    cfg.decoder.column_power = cfg.slot_power();
    PointEstimate pt;
    pt.ebn0_db = db;
    pt.power = cfg.power;
    std::vector<TrialResult> results(static_cast<std::size_t>(std::max(0, trials)));
    const auto trial_seed = [&](int t) {
        return derive_seed(seed, static_cast<std::uint64_t>(std::llround(db * 4.0) + 512),
                           static_cast<std::uint64_t>(t));
    };
    if (threads <= 1 || trials <= 1) {
        for (int t = 0; t < trials; ++t)
            results[static_cast<std::size_t>(t)] = run_trial(cfg, k, trial_seed(t), truncate_to_k);
    } else {
        std::atomic<int> next{0};
        const int workers = std::min(threads, trials);
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&]() {
                for (int t = next.fetch_add(1); t < trials; t = next.fetch_add(1))
                    results[static_cast<std::size_t>(t)] =
                        run_trial(cfg, k, trial_seed(t), truncate_to_k);
            });
        }
        for (auto& th : pool) th.join();
    }
    double err = 0.0;
    for (const auto& res : results) {
        err += res.error;
        pt.decode_seconds.push_back(res.decode_seconds);
    }
    pt.error = err / std::max(1, trials);
    return pt;
}

/// Experiment-level record of one evaluated operating point.
struct ExperimentResult {
    std::string mode;
    int m = 0, p = 0, r = 0;
    int message_bits = 0;
    int k = 0;
    double power = 0.0;
    double ebn0_db = 0.0;
    int trials = 0;
    double per_user_error = 0.0;
    double time_decode_mean_s = 0.0;
    double time_decode_median_s = 0.0;
    std::uint64_t seed = 0;
    std::size_t real_equivalent_len = 0;
};

/// Smallest tested Eb/N0 on a quarter-dB grid within [-5, 25] dB whose
/// pooled per-user error estimate stays at or below the target, found by
/// bisection. Returns nothing when even the top of the window fails.
inline std::optional<PointEstimate> find_min_ebn0(const CodeConfig& cfg, int k,
                                                  double target_error, int trials,
                                                  std::uint64_t seed,
                                                  bool truncate_to_k = false, int threads = 1) {
    constexpr double kLoDb = -5.0, kHiDb = 25.0, kStepDb = 0.25;
    const int grid_max = static_cast<int>(std::lround((kHiDb - kLoDb) / kStepDb));
    const auto db_at = [&](int idx) { return kLoDb + kStepDb * idx; };
    const auto eval = [&](int idx) {
        return evaluate_point(cfg, k, db_at(idx), trials, seed, truncate_to_k, threads);
    };

    PointEstimate hi_pt = eval(grid_max);
    if (hi_pt.error > target_error) return std::nullopt;
    PointEstimate lo_pt = eval(0);
    if (lo_pt.error <= target_error) return lo_pt;

    int lo = 0, hi = grid_max;
    while (hi - lo > 1) {
        const int mid = (lo + hi) / 2;
        PointEstimate mid_pt = eval(mid);
        if (mid_pt.error <= target_error) {
            hi = mid;
            hi_pt = std::move(mid_pt);
        } else {
            lo = mid;
        }
    }
    return hi_pt;
}

inline double mean(const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

inline double median(std::vector<double> xs) {
    if (xs.empty()) return 0.0;
    std::sort(xs.begin(), xs.end());
    const std::size_t h = xs.size() / 2;
    return xs.size() % 2 ? xs[h] : 0.5 * (xs[h - 1] + xs[h]);
}

}  // namespace chirrup
