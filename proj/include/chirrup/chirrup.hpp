#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "chirrup/bits.hpp"
#include "chirrup/codebook.hpp"
#include "chirrup/reconstruct.hpp"
#include "chirrup/rng.hpp"
#include "chirrup/wht.hpp"

namespace chirrup {

/// Coefficient retention rule deciding whether a recovered component is kept
/// and propagated. Complex mode keeps |c - 1| < 0.3; real mode keeps
/// |Re(c) - 1| < 0.1 and |Im(c)| < 0.1.
struct RetentionThresholds {
    double complex_radius = 0.3;
    double real_re = 0.1;
    double real_im = 0.1;
};

/// Full scheme geometry: 2^r patches, each split into 2^p slots of length
/// 2^m. Every patch of a message is sent to two slots, the copies
/// distinguished by the check digit; l[i] parity bits are appended to patch
/// i (never to the first). power is the frame-average power Q: one message's
/// total transmitted energy is 2^{m+p+r} * Q, split evenly over its 2^{r+1}
/// slot codewords, so each codeword carries per-entry power Q * 2^{p-1}.
struct CodeConfig {
    int m = 6;
    int p = 3;
    int r = 0;
    CodebookMode mode = CodebookMode::Complex;
    std::vector<int> l;  // 2^r entries, l[0] == 0
    double power = 1.0;
    DecoderParams decoder;
    int d = 5;  // peel cycles
    RetentionThresholds coeff_test;
    std::uint64_t parity_seed = 0x70617269;

    int patches() const { return 1 << r; }
    int slots() const { return 1 << p; }
    std::size_t slot_len() const { return std::size_t{1} << m; }
    std::size_t patch_len() const { return std::size_t{1} << (m + p); }
    std::size_t signal_len() const { return std::size_t{1} << (m + p + r); }
    int capacity() const { return payload_capacity(m, p, mode); }
    double slot_power() const { return std::ldexp(power, p - 1); }

    int message_bits() const {
        int b = patches() * capacity();
        for (int li : l) b -= li;
        return b;
    }

    int patch_payload_bits(int patch) const {
        return capacity() - l[static_cast<std::size_t>(patch)];
    }

    BitLayout layout() const { return BitLayout(m, p, mode); }
};

/// Default parity allocations: none for one patch, [0,15] for two,
/// [0,10,10,15] for four.
inline std::vector<int> default_parity_bits(int r) {
    switch (r) {
        case 0: return {0};
        case 1: return {0, 15};
        case 2: return {0, 10, 10, 15};
        default: {
            std::vector<int> l(std::size_t{1} << r, 15);
            l[0] = 0;
            return l;
        }
    }
}

/// Stop once the residual is statistically indistinguishable from the noise
/// floor: 1.05 * sqrt(n * v), per-entry noise variance v = 2 complex, 1 real.
inline double default_residual_tol(int m, CodebookMode mode) {
    const double v = mode == CodebookMode::Complex ? 2.0 : 1.0;
    return 1.05 * std::sqrt(static_cast<double>(std::size_t{1} << m) * v);
}

/// Config with all derived defaults filled in. expected_messages is the
/// total message count K the deployment plans for; the per-slot iteration
/// cap is three times the expected per-slot load 2K/2^p.
inline CodeConfig make_config(int m, int p, int r, CodebookMode mode, double power,
                              int expected_messages,
                              std::optional<std::vector<int>> parity = std::nullopt) {
    CodeConfig cfg;
    cfg.m = m;
    cfg.p = p;
    cfg.r = r;
    cfg.mode = mode;
    cfg.power = power;
    cfg.l = parity ? *parity : default_parity_bits(r);
    const double per_slot = 2.0 * expected_messages / static_cast<double>(cfg.slots());
    cfg.decoder.S = std::max(1, 3 * static_cast<int>(std::ceil(per_slot)));
    cfg.decoder.residual_tol = default_residual_tol(m, mode);
    cfg.decoder.c = 3;
    cfg.decoder.alpha = 3.0;
    cfg.decoder.mode = mode;
    cfg.decoder.column_power = cfg.slot_power();
    return cfg;
}

inline void validate_config(const CodeConfig& cfg) {
    if (cfg.r < 0 || cfg.p < 0) throw std::invalid_argument("CodeConfig: negative exponent");
    if (static_cast<int>(cfg.l.size()) != cfg.patches())
        throw std::invalid_argument("CodeConfig: l must have 2^r entries");
    if (cfg.l[0] != 0) throw std::invalid_argument("CodeConfig: first patch takes no parity");
    for (int li : cfg.l)
        if (li < 0 || li >= cfg.capacity())
            throw std::invalid_argument("CodeConfig: parity allocation out of range");
    payload_capacity(cfg.m, cfg.p, cfg.mode);  // validates m, p
    if (cfg.message_bits() <= 0) throw std::invalid_argument("CodeConfig: no message bits left");
    if (cfg.decoder.mode != cfg.mode)
        throw std::invalid_argument("CodeConfig: decoder mode mismatch");
    if (!(cfg.power > 0)) throw std::invalid_argument("CodeConfig: power must be positive");
    if (cfg.d < 1) throw std::invalid_argument("CodeConfig: d must be >= 1");
}

inline bool retention_test(cplx coeff, const CodeConfig& cfg) {
    if (cfg.mode == CodebookMode::Complex)
        return std::abs(coeff - cplx{1.0, 0.0}) < cfg.coeff_test.complex_radius;
    return std::abs(coeff.real() - 1.0) < cfg.coeff_test.real_re &&
           std::abs(coeff.imag()) < cfg.coeff_test.real_im;
}

inline Gf2Matrix parity_matrix(const CodeConfig& cfg, int patch) {
    int prefix = 0;
    for (int j = 0; j < patch; ++j) prefix += cfg.patch_payload_bits(j);
    return Gf2Matrix::random(static_cast<std::size_t>(cfg.l[static_cast<std::size_t>(patch)]),
                             static_cast<std::size_t>(prefix),
                             derive_seed(cfg.parity_seed, static_cast<std::uint64_t>(patch)));
}

/// Append the parity bits to each patch payload: parity of patch i is a
/// fixed pseudorandom GF(2) map of the concatenated payloads of patches
/// 1..i-1. Patch 1 gets none.
inline std::vector<BitString> parity_encode(const std::vector<BitString>& payloads,
                                            const CodeConfig& cfg) {
    if (static_cast<int>(payloads.size()) != cfg.patches())
        throw std::invalid_argument("parity_encode: wrong patch count");
    std::vector<BitString> out(payloads.size());
    BitString prefix;
    for (int i = 0; i < cfg.patches(); ++i) {
        const auto& payload = payloads[static_cast<std::size_t>(i)];
        if (static_cast<int>(payload.size()) != cfg.patch_payload_bits(i))
            throw std::invalid_argument("parity_encode: payload length mismatch");
        BitString patch = payload;
        if (cfg.l[static_cast<std::size_t>(i)] > 0) {
            const BitString parity = parity_matrix(cfg, i).multiply(prefix);
            patch = concat_bits(patch, parity);
        }
        prefix = concat_bits(prefix, payload);
        out[static_cast<std::size_t>(i)] = std::move(patch);
    }
    return out;
}

inline std::vector<BitString> split_message(const BitString& message, const CodeConfig& cfg) {
    if (static_cast<int>(message.size()) != cfg.message_bits())
        throw std::invalid_argument("chirrup: wrong message length");
    std::vector<BitString> payloads;
    std::size_t at = 0;
    for (int i = 0; i < cfg.patches(); ++i) {
        const auto len = static_cast<std::size_t>(cfg.patch_payload_bits(i));
        payloads.push_back(slice_bits(message, at, len));
        at += len;
    }
    return payloads;
}

/// Transmitted signal for one message: per patch, the codeword goes into the
/// primary slot with a clear check digit and into the translate's twin slot
/// with the digit set.
inline SignalVector chirrup_encode(const BitString& message, const CodeConfig& cfg) {
    validate_config(cfg);
    const BitLayout layout = cfg.layout();
    const auto patches = parity_encode(split_message(message, cfg), cfg);
    SignalVector signal(cfg.signal_len(), cplx{0.0, 0.0});
    for (int i = 0; i < cfg.patches(); ++i) {
        const PatchParams pp = bits_to_params(patches[static_cast<std::size_t>(i)], layout);
        const std::size_t block = static_cast<std::size_t>(i) * cfg.patch_len();
        const auto place = [&](const ChirpParams& params, std::uint32_t slot) {
            const SignalVector word = encode_chirp(params, cfg.slot_power(), cfg.mode);
            const std::size_t base = block + static_cast<std::size_t>(slot) * cfg.slot_len();
            for (std::size_t a = 0; a < word.size(); ++a) signal[base + a] += word[a];
        };
        place(pp.params, pp.primary_slot);
        place(with_check_digit(pp.params, true), pp.primary_slot ^ pp.translate);
    }
    return signal;
}

enum class PeelOrigin { OwnDecode, TwinInsert };

/// Working state of one slot during decoding: its measurement, the list of
/// components known to be active there, and what was decoded this cycle.
struct SlotState {
    SignalVector measurement;
    std::vector<std::pair<ChirpParams, PeelOrigin>> peel;
    std::vector<ChirpParams> decoded_this_cycle;
    std::unordered_set<std::string> peel_keys;
    std::size_t decoded_at_version = static_cast<std::size_t>(-1);

    bool insert_peel(const ChirpParams& params, PeelOrigin origin) {
        if (!peel_keys.insert(params.key()).second) return false;
        peel.emplace_back(params, origin);
        return true;
    }
};

/// One partial stitch across patches: the accumulated payloads so far plus
/// whether every parity check on the way held.
struct CandidatePath {
    std::vector<BitString> payloads;
    bool parity_ok = true;
};

/// Optional counters for inspecting a decode run.
struct DecodeTrace {
    std::vector<std::vector<std::size_t>> decoded_per_cycle;  // [patch][cycle]
    std::size_t twin_inserts = 0;
    std::size_t own_inserts = 0;
    std::size_t retention_rejects = 0;
    std::size_t slot_decodes = 0;
    std::size_t slot_skips = 0;
};

namespace detail {

/// Subtract the least-squares fit of the peel-list codewords from the slot
/// measurement. Numerically dependent entries are skipped.
inline SignalVector peel_residual(const SignalVector& measurement,
                                  const std::vector<std::pair<ChirpParams, PeelOrigin>>& peel,
                                  const CodeConfig& cfg) {
    if (peel.empty()) return measurement;
    LsqState state(measurement);
    for (const auto& [params, origin] : peel)
        state.add_column(encode_chirp(params, cfg.slot_power(), cfg.mode));
    return state.residual();
}

}  // namespace detail

/// Peeling decoder over all patches and slots. Each cycle decodes every slot
/// against the peel list frozen at the cycle boundary, keeps components
/// whose coefficient passes the retention test, records the patch bit
/// string, and schedules the twin copy (check digit flipped, slot shifted by
/// the translate) for the twin slot's next cycle. Decoded patch strings
/// accumulate across cycles and are stitched at the end.
inline std::vector<BitString> chirrup_decode(const SignalVector& y, const CodeConfig& cfg,
                                             std::uint64_t seed, DecodeTrace* trace = nullptr);

/// Breadth-first stitching of per-patch candidate strings. A candidate
/// extends a path when its parity bits match the path's accumulated payload;
/// roots with exactly one surviving completion become messages, ambiguous
/// roots are dropped.
inline std::vector<BitString> tree_stitch(const std::vector<std::vector<BitString>>& per_patch,
                                          const CodeConfig& cfg) {
    if (static_cast<int>(per_patch.size()) != cfg.patches())
        throw std::invalid_argument("tree_stitch: wrong patch count");
    if (cfg.patches() == 1) return per_patch[0];

    std::vector<Gf2Matrix> mats;
    for (int i = 1; i < cfg.patches(); ++i) mats.push_back(parity_matrix(cfg, i));

    std::vector<BitString> out;
    for (const auto& root : per_patch[0]) {
        std::vector<CandidatePath> frontier(1);
        frontier[0].payloads.push_back(root);
        for (int i = 1; i < cfg.patches() && !frontier.empty(); ++i) {
            const auto payload_len = static_cast<std::size_t>(cfg.patch_payload_bits(i));
            const auto parity_len = static_cast<std::size_t>(cfg.l[static_cast<std::size_t>(i)]);
            std::vector<CandidatePath> next;
            for (const auto& path : frontier) {
                BitString accum;
                for (const auto& pl : path.payloads) accum = concat_bits(accum, pl);
                const BitString want = mats[static_cast<std::size_t>(i - 1)].multiply(accum);
                for (const auto& cand : per_patch[static_cast<std::size_t>(i)]) {
                    if (slice_bits(cand, payload_len, parity_len) != want) continue;
                    CandidatePath ext = path;
                    ext.payloads.push_back(slice_bits(cand, 0, payload_len));
                    next.push_back(std::move(ext));
                }
            }
            frontier = std::move(next);
        }
        if (frontier.size() != 1) continue;  // lost or ambiguous
        BitString message;
        for (const auto& pl : frontier[0].payloads) message = concat_bits(message, pl);
        out.push_back(std::move(message));
    }
    return out;
}

inline std::vector<BitString> chirrup_decode(const SignalVector& y, const CodeConfig& cfg,
                                             std::uint64_t seed, DecodeTrace* trace) {
    validate_config(cfg);
    if (y.size() != cfg.signal_len())
        throw std::invalid_argument("chirrup_decode: wrong signal length");
    const BitLayout layout = cfg.layout();
    const std::uint32_t slot_mask = cfg.p == 0 ? 0u : (1u << cfg.p) - 1u;
    DecoderParams decoder = cfg.decoder;
    decoder.column_power = cfg.slot_power();

    std::vector<std::vector<BitString>> per_patch(static_cast<std::size_t>(cfg.patches()));
    if (trace)
        trace->decoded_per_cycle.assign(static_cast<std::size_t>(cfg.patches()),
                                        std::vector<std::size_t>());

    for (int patch = 0; patch < cfg.patches(); ++patch) {
        std::vector<SlotState> slots(static_cast<std::size_t>(cfg.slots()));
        const std::size_t block = static_cast<std::size_t>(patch) * cfg.patch_len();
        for (int s = 0; s < cfg.slots(); ++s) {
            const std::size_t base = block + static_cast<std::size_t>(s) * cfg.slot_len();
            slots[static_cast<std::size_t>(s)].measurement.assign(
                y.begin() + static_cast<std::ptrdiff_t>(base),
                y.begin() + static_cast<std::ptrdiff_t>(base + cfg.slot_len()));
        }

        std::unordered_set<std::string> patch_seen;
        std::vector<std::size_t> peel_version(static_cast<std::size_t>(cfg.slots()), 0);
        for (int cycle = 0; cycle < cfg.d; ++cycle) {
            // Twin insertions land here and merge at the end of the cycle,
            // so results do not depend on slot visit order.
            std::vector<std::vector<ChirpParams>> pending(
                static_cast<std::size_t>(cfg.slots()));

            for (int s = 0; s < cfg.slots(); ++s) {
                SlotState& slot = slots[static_cast<std::size_t>(s)];
                const std::size_t version = peel_version[static_cast<std::size_t>(s)];
                if (slot.decoded_at_version == version) {
                    if (trace) ++trace->slot_skips;
                    continue;  // same inputs as last time, same outcome
                }
                slot.decoded_at_version = version;
                if (trace) ++trace->slot_decodes;
                slot.decoded_this_cycle.clear();

                const SignalVector residual =
                    detail::peel_residual(slot.measurement, slot.peel, cfg);
                Rng rng(derive_seed(seed, static_cast<std::uint64_t>(patch),
                                    static_cast<std::uint64_t>(s), version));
                const auto components = chirp_reconstruct(residual, decoder, rng);
                for (const auto& comp : components) {
                    if (!retention_test(comp.coeff, cfg)) {
                        if (trace) ++trace->retention_rejects;
                        continue;
                    }
                    const bool digit = check_digit(comp.params);
                    const ChirpParams params0 = with_check_digit(comp.params, false);
                    const std::uint32_t translate = layout.read_translate(params0);
                    const std::uint32_t twin =
                        (static_cast<std::uint32_t>(s) ^ translate) & slot_mask;
                    const std::uint32_t primary = digit ? twin : static_cast<std::uint32_t>(s);

                    const BitString patch_bits = params_to_bits(params0, primary, layout);
                    if (patch_seen.insert(bits_key(patch_bits)).second)
                        per_patch[static_cast<std::size_t>(patch)].push_back(patch_bits);

                    slot.decoded_this_cycle.push_back(comp.params);
                    pending[static_cast<std::size_t>(s)].push_back(comp.params);
                    pending[twin].push_back(with_check_digit(comp.params, !digit));
                }
            }

            for (int s = 0; s < cfg.slots(); ++s) {
                SlotState& slot = slots[static_cast<std::size_t>(s)];
                bool grew = false;
                for (const auto& params : pending[static_cast<std::size_t>(s)]) {
                    const bool own = !slot.decoded_this_cycle.empty() &&
                                     std::find(slot.decoded_this_cycle.begin(),
                                               slot.decoded_this_cycle.end(),
                                               params) != slot.decoded_this_cycle.end();
                    if (slot.insert_peel(params,
                                         own ? PeelOrigin::OwnDecode : PeelOrigin::TwinInsert)) {
                        grew = true;
                        if (trace) {
                            if (own)
                                ++trace->own_inserts;
                            else
                                ++trace->twin_inserts;
                        }
                    }
                }
                if (grew) ++peel_version[static_cast<std::size_t>(s)];
            }
            if (trace)
                trace->decoded_per_cycle[static_cast<std::size_t>(patch)].push_back(
                    per_patch[static_cast<std::size_t>(patch)].size());
        }
    }
    return tree_stitch(per_patch, cfg);
}

}  // namespace chirrup
