#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "chirrup/rng.hpp"

namespace chirrup {

/// A message or patch bit string, one 0/1 value per entry. Sizes here are
/// tens to low hundreds of bits, so the unpacked form is the simple choice.
using BitString = std::vector<std::uint8_t>;

inline BitString random_bits(std::size_t n, Rng& rng) {
    BitString out(n);
    for (auto& b : out) b = rng.bit() ? 1 : 0;
    return out;
}

/// Pack to a byte-per-8-bits key for use in hash sets.
inline std::string bits_key(const BitString& bits) {
    std::string key((bits.size() + 7) / 8, '\0');
    for (std::size_t i = 0; i < bits.size(); ++i)
        if (bits[i]) key[i / 8] = static_cast<char>(key[i / 8] | (1 << (i % 8)));
    return key;
}

inline BitString concat_bits(const BitString& a, const BitString& b) {
    BitString out = a;
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

inline BitString slice_bits(const BitString& a, std::size_t from, std::size_t len) {
    if (from + len > a.size()) throw std::out_of_range("slice_bits: range");
    return BitString(a.begin() + static_cast<std::ptrdiff_t>(from),
                     a.begin() + static_cast<std::ptrdiff_t>(from + len));
}

/// Dense GF(2) matrix, one row per BitString. Rows are generated from a
/// counter-based stream so encoder and decoder can rebuild the same matrix
/// from a shared seed without transmitting it.
struct Gf2Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<BitString> row;

    static Gf2Matrix random(std::size_t rows, std::size_t cols, std::uint64_t seed) {
        Gf2Matrix g;
        g.rows = rows;
        g.cols = cols;
        g.row.resize(rows);
        for (std::size_t r = 0; r < rows; ++r) {
            Rng rng(derive_seed(seed, 0x67663264u, r));
            g.row[r] = random_bits(cols, rng);
        }
        return g;
    }

    BitString multiply(const BitString& x) const {
        if (x.size() != cols) throw std::invalid_argument("Gf2Matrix: dimension mismatch");
        BitString out(rows, 0);
        for (std::size_t r = 0; r < rows; ++r) {
            unsigned acc = 0;
            for (std::size_t c = 0; c < cols; ++c) acc ^= (row[r][c] & x[c]);
            out[r] = static_cast<std::uint8_t>(acc & 1u);
        }
        return out;
    }
};

}  // namespace chirrup
