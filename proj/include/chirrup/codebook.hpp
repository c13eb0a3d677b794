#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "chirrup/bits.hpp"
#include "chirrup/rng.hpp"
#include "chirrup/wht.hpp"

namespace chirrup {

enum class CodebookMode { Complex, Real };

inline const char* to_string(CodebookMode mode) {
    return mode == CodebookMode::Complex ? "complex" : "real";
}

/// One binary chirp codeword identity: an m x m symmetric bit matrix P and a
/// bit vector b. Rows of P are stored as little-endian masks, so row i bit j
/// is entry (i, j); b bit j is entry j. Index a of a length-2^m signal maps
/// to the binary m-tuple (a_0, ..., a_{m-1}) with a_0 the least significant
/// bit, and that convention is shared by every transform in this library.
struct ChirpParams {
    int m = 0;
    std::vector<std::uint32_t> rows;  // rows.size() == m, symmetric
    std::uint32_t b = 0;

    ChirpParams() = default;
    ChirpParams(int m_, std::vector<std::uint32_t> rows_, std::uint32_t b_)
        : m(m_), rows(std::move(rows_)), b(b_) {}

    static ChirpParams zero(int m) { return ChirpParams(m, std::vector<std::uint32_t>(m, 0), 0); }

    bool get(int i, int j) const { return (rows[static_cast<std::size_t>(i)] >> j) & 1u; }

    void set(int i, int j, bool v) {
        auto& ri = rows[static_cast<std::size_t>(i)];
        auto& rj = rows[static_cast<std::size_t>(j)];
        if (v) {
            ri |= 1u << j;
            rj |= 1u << i;
        } else {
            ri &= ~(1u << j);
            rj &= ~(1u << i);
        }
    }

    bool symmetric() const {
        for (int i = 0; i < m; ++i)
            for (int j = i + 1; j < m; ++j)
                if (get(i, j) != get(j, i)) return false;
        return true;
    }

    bool zero_diagonal() const {
        for (int i = 0; i < m; ++i)
            if (get(i, i)) return false;
        return true;
    }

    /// P * e over GF(2): XOR of the columns selected by e (columns equal rows
    /// by symmetry).
    std::uint32_t mul_vec(std::uint32_t e) const {
        std::uint32_t out = 0;
        for (int i = 0; i < m; ++i)
            if ((e >> i) & 1u) out ^= rows[static_cast<std::size_t>(i)];
        return out;
    }

    bool operator==(const ChirpParams& o) const { return m == o.m && b == o.b && rows == o.rows; }

    /// Stable key for dedup sets.
    std::string key() const {
        std::string k;
        k.reserve(4u * (rows.size() + 1));
        auto put = [&k](std::uint32_t v) {
            for (int s = 0; s < 32; s += 8) k.push_back(static_cast<char>((v >> s) & 0xff));
        };
        put(b);
        for (auto r : rows) put(r);
        return k;
    }
};

inline void validate_params(const ChirpParams& params, CodebookMode mode) {
    if (static_cast<int>(params.rows.size()) != params.m)
        throw std::invalid_argument("ChirpParams: row count does not match m");
    if (params.m < 32 && (params.b >> params.m) != 0)
        throw std::invalid_argument("ChirpParams: b has bits beyond m");
    if (!params.symmetric()) throw std::invalid_argument("ChirpParams: P is not symmetric");
    if (mode == CodebookMode::Real && !params.zero_diagonal())
        throw std::invalid_argument("ChirpParams: real mode requires zero diagonal");
}

/// (2 b.v + v'Pv) mod 4: the chirp exponent at index v, both dot products
/// taken as integer sums before the final reduction.
inline int chirp_exponent(std::uint32_t v, const ChirpParams& params) {
    if ((params.m < 32 && (v >> params.m) != 0) ||
        static_cast<int>(params.rows.size()) != params.m)
        throw std::invalid_argument("chirp_exponent: dimension mismatch");
    int e = 2 * std::popcount(params.b & v);
    for (int i = 0; i < params.m; ++i)
        if ((v >> i) & 1u) e += std::popcount(params.rows[static_cast<std::size_t>(i)] & v);
    return e & 3;
}

namespace detail {
inline cplx ipow(int e) {
    switch (e & 3) {
        case 0: return {1.0, 0.0};
        case 1: return {0.0, 1.0};
        case 2: return {-1.0, 0.0};
        default: return {0.0, -1.0};
    }
}
}  // namespace detail

/// Codeword of length 2^m with entries sqrt(Q) * i^{chirp_exponent}. Real
/// mode requires a zero diagonal, which makes every exponent even and every
/// entry +-sqrt(Q). Squared norm is 2^m * Q.
inline SignalVector encode_chirp(const ChirpParams& params, double power, CodebookMode mode) {
    validate_params(params, mode);
    const std::size_t n = std::size_t{1} << params.m;
    const double amp = std::sqrt(power);
    SignalVector out(n);
    for (std::size_t a = 0; a < n; ++a)
        out[a] = amp * detail::ipow(chirp_exponent(static_cast<std::uint32_t>(a), params));
    return out;
}

/// Number of message bits carried by one patch: the (P, b) payload plus the
/// p primary-slot bits, minus the reserved check digit.
inline int payload_capacity(int m, int p, CodebookMode mode) {
    if (m < 2) throw std::invalid_argument("payload_capacity: m must be at least 2");
    const int pb_bits = mode == CodebookMode::Complex ? m + m * (m + 1) / 2 - 1
                                                      : m + m * (m - 1) / 2 - 1;
    if (p < 0 || p > pb_bits)
        throw std::invalid_argument("payload_capacity: p too large for the translate");
    return pb_bits + p;
}

/// Fixed bit layout of one patch string. The (P, b) payload comes first
/// (b bits, then the P entries in canonical row-major order, skipping the
/// reserved check digit P(0,1)); the final p bits are the primary slot
/// index. The translate is read from the first p payload positions: the b
/// bits, then strict-upper P entries if p exceeds m.
struct BitLayout {
    int m = 0;
    int p = 0;
    CodebookMode mode = CodebookMode::Complex;
    std::vector<std::pair<int, int>> p_entries;  // canonical (i, j) order, i <= j
    std::vector<int> translate_source;           // positions within the patch string
    int pb_bits = 0;
    int total_bits = 0;

    BitLayout(int m_, int p_, CodebookMode mode_) : m(m_), p(p_), mode(mode_) {
        total_bits = payload_capacity(m, p, mode);
        for (int i = 0; i < m; ++i) {
            for (int j = (mode == CodebookMode::Complex ? i : i + 1); j < m; ++j) {
                if (i == 0 && j == 1) continue;  // check digit
                p_entries.emplace_back(i, j);
            }
        }
        pb_bits = m + static_cast<int>(p_entries.size());
        for (int k = 0; k < p && k < m; ++k) translate_source.push_back(k);
        if (p > m) {
            // Continue through strict-upper entries in row-major order.
            int need = p - m;
            for (int i = 0; i < m && need > 0; ++i) {
                for (int j = i + 1; j < m && need > 0; ++j) {
                    if (i == 0 && j == 1) continue;
                    translate_source.push_back(m + entry_position(i, j));
                    --need;
                }
            }
        }
    }

    int slot_bits_position() const { return pb_bits; }

    int entry_position(int i, int j) const {
        for (std::size_t k = 0; k < p_entries.size(); ++k)
            if (p_entries[k].first == i && p_entries[k].second == j) return static_cast<int>(k);
        throw std::logic_error("BitLayout: entry not in canonical order");
    }

    std::uint32_t read_translate(const ChirpParams& params) const {
        BitString bits = pb_bits_of(params);
        std::uint32_t t = 0;
        for (int k = 0; k < p; ++k)
            if (bits[static_cast<std::size_t>(translate_source[static_cast<std::size_t>(k)])])
                t |= 1u << k;
        return t;
    }

    BitString pb_bits_of(const ChirpParams& params) const {
        BitString bits(static_cast<std::size_t>(pb_bits), 0);
        for (int k = 0; k < m; ++k) bits[static_cast<std::size_t>(k)] = (params.b >> k) & 1u;
        for (std::size_t k = 0; k < p_entries.size(); ++k)
            bits[m + k] = params.get(p_entries[k].first, p_entries[k].second) ? 1 : 0;
        return bits;
    }
};

struct PatchParams {
    ChirpParams params;       // check digit cleared
    std::uint32_t primary_slot = 0;
    std::uint32_t translate = 0;
};

/// Deterministic bijection from a patch bit string onto
/// ((P, b) with zero check digit, primary slot, translate).
inline PatchParams bits_to_params(const BitString& patch_bits, const BitLayout& layout) {
    if (patch_bits.size() != static_cast<std::size_t>(layout.total_bits))
        throw std::invalid_argument("bits_to_params: wrong bit-string length");
    PatchParams out;
    out.params = ChirpParams::zero(layout.m);
    for (int k = 0; k < layout.m; ++k)
        if (patch_bits[static_cast<std::size_t>(k)]) out.params.b |= 1u << k;
    for (std::size_t k = 0; k < layout.p_entries.size(); ++k)
        out.params.set(layout.p_entries[k].first, layout.p_entries[k].second,
                       patch_bits[layout.m + k] != 0);
    for (int k = 0; k < layout.p; ++k)
        if (patch_bits[static_cast<std::size_t>(layout.pb_bits + k)])
            out.primary_slot |= 1u << k;
    out.translate = layout.read_translate(out.params);
    return out;
}

/// Exact inverse of bits_to_params. The check digit must be clear.
inline BitString params_to_bits(const ChirpParams& params, std::uint32_t primary_slot,
                                const BitLayout& layout) {
    if (params.m != layout.m || static_cast<int>(params.rows.size()) != layout.m)
        throw std::invalid_argument("params_to_bits: dimension mismatch");
    if (layout.m >= 2 && params.get(0, 1))
        throw std::invalid_argument("params_to_bits: check digit is set");
    BitString bits(static_cast<std::size_t>(layout.total_bits), 0);
    BitString pb = layout.pb_bits_of(params);
    for (int k = 0; k < layout.pb_bits; ++k) bits[static_cast<std::size_t>(k)] = pb[static_cast<std::size_t>(k)];
    for (int k = 0; k < layout.p; ++k)
        bits[static_cast<std::size_t>(layout.pb_bits + k)] = (primary_slot >> k) & 1u;
    return bits;
}

inline ChirpParams with_check_digit(const ChirpParams& params, bool digit) {
    ChirpParams out = params;
    out.set(0, 1, digit);
    return out;
}

inline bool check_digit(const ChirpParams& params) { return params.get(0, 1); }

inline ChirpParams random_params(int m, CodebookMode mode, Rng& rng) {
    ChirpParams out = ChirpParams::zero(m);
    out.b = static_cast<std::uint32_t>(rng.u64()) & ((m == 32 ? ~0u : (1u << m) - 1u));
    for (int i = 0; i < m; ++i) {
        const int j0 = mode == CodebookMode::Complex ? i : i + 1;
        for (int j = j0; j < m; ++j) out.set(i, j, rng.bit());
    }
    return out;
}

}  // namespace chirrup
