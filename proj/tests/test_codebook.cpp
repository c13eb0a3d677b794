#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <vector>

#include "chirrup/codebook.hpp"
#include "chirrup/rng.hpp"

using namespace chirrup;

namespace {

double norm_sq(const SignalVector& x) {
    double s = 0.0;
    for (const auto& v : x) s += std::norm(v);
    return s;
}

}  // namespace

TEST_CASE("chirp exponent worked example") {
    // b = e1, P = [[1,1,0],[1,0,0],[0,0,0]], v = (1,1,1): 2 + 3 = 5 = 1 mod 4.
    ChirpParams params(3, {0b011, 0b001, 0b000}, 0b001);
    REQUIRE(params.symmetric());
    REQUIRE(chirp_exponent(0b111, params) == 1);

    REQUIRE(chirp_exponent(0, params) == 0);  // empty sums

    ChirpParams unit = ChirpParams::zero(3);
    unit.b = 0b001;
    REQUIRE(chirp_exponent(0b001, unit) == 2);  // 2*1 + 0
}

TEST_CASE("chirp exponent rejects dimension mismatch") {
    ChirpParams params = ChirpParams::zero(3);
    REQUIRE_THROWS_AS(chirp_exponent(0b1000, params), std::invalid_argument);
}

TEST_CASE("encode_chirp basics") {
    const auto flat = encode_chirp(ChirpParams::zero(2), 1.0, CodebookMode::Complex);
    REQUIRE(flat.size() == 4);
    for (const auto& v : flat) REQUIRE(std::abs(v - cplx{1.0, 0.0}) < 1e-15);

    Rng rng(3);
    const auto word = encode_chirp(random_params(3, CodebookMode::Complex, rng), 4.0,
                                   CodebookMode::Complex);
    REQUIRE(norm_sq(word) == Catch::Approx(32.0).epsilon(1e-12));
}

TEST_CASE("real mode codewords are +-sqrt(Q) with even exponents") {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const auto params = random_params(4, CodebookMode::Real, rng);
        for (std::uint32_t v = 0; v < 16; ++v) REQUIRE(chirp_exponent(v, params) % 2 == 0);
        const auto word = encode_chirp(params, 2.0, CodebookMode::Real);
        for (const auto& e : word) {
            REQUIRE(e.imag() == 0.0);
            REQUIRE(std::abs(std::abs(e.real()) - std::sqrt(2.0)) < 1e-12);
        }
    }
}

TEST_CASE("real mode rejects a nonzero diagonal") {
    ChirpParams params = ChirpParams::zero(3);
    params.set(1, 1, true);
    REQUIRE_THROWS_AS(encode_chirp(params, 1.0, CodebookMode::Real), std::invalid_argument);
    REQUIRE_NOTHROW(encode_chirp(params, 1.0, CodebookMode::Complex));
}

TEST_CASE("payload capacity formulas") {
    REQUIRE(payload_capacity(8, 6, CodebookMode::Complex) == 49);
    REQUIRE(payload_capacity(8, 1, CodebookMode::Complex) == 44);
    REQUIRE(payload_capacity(10, 5, CodebookMode::Real) == 59);
    // p may not exceed the (P, b) payload that supplies the translate.
    REQUIRE_NOTHROW(payload_capacity(4, 13, CodebookMode::Complex));
    REQUIRE_THROWS_AS(payload_capacity(4, 14, CodebookMode::Complex), std::invalid_argument);
    REQUIRE_THROWS_AS(payload_capacity(4, 10, CodebookMode::Real), std::invalid_argument);
}

TEST_CASE("bits_to_params accepts exactly the advertised length") {
    const BitLayout layout(8, 6, CodebookMode::Complex);
    REQUIRE(layout.total_bits == 49);
    BitString bits(49, 0);
    REQUIRE_NOTHROW(bits_to_params(bits, layout));
    bits.push_back(0);
    REQUIRE_THROWS_AS(bits_to_params(bits, layout), std::invalid_argument);
}

TEST_CASE("all-zero patch maps to the zero parameters") {
    const BitLayout layout(6, 4, CodebookMode::Complex);
    const auto pp = bits_to_params(BitString(static_cast<std::size_t>(layout.total_bits), 0),
                                   layout);
    REQUIRE(pp.params == ChirpParams::zero(6));
    REQUIRE(pp.primary_slot == 0);
    REQUIRE(pp.translate == 0);
}

TEST_CASE("slot field occupies the trailing bits") {
    const BitLayout layout(6, 4, CodebookMode::Complex);
    BitString bits(static_cast<std::size_t>(layout.total_bits), 0);
    const auto slot_at = static_cast<std::size_t>(layout.slot_bits_position());
    bits[slot_at] = 1;      // slot bit 0
    bits[slot_at + 2] = 1;  // slot bit 2
    const auto pp = bits_to_params(bits, layout);
    REQUIRE(pp.params == ChirpParams::zero(6));
    REQUIRE(pp.primary_slot == 5);
    REQUIRE(params_to_bits(pp.params, 5, layout) == bits);
}

TEST_CASE("round trip is the identity") {
    // Exhaustive at m = 3 (complex, p = 2), randomized for larger shapes.
    const BitLayout small(3, 2, CodebookMode::Complex);
    for (std::uint32_t x = 0; x < (1u << small.total_bits); ++x) {
        BitString bits(static_cast<std::size_t>(small.total_bits));
        for (int k = 0; k < small.total_bits; ++k)
            bits[static_cast<std::size_t>(k)] = (x >> k) & 1u;
        const auto pp = bits_to_params(bits, small);
        REQUIRE(params_to_bits(pp.params, pp.primary_slot, small) == bits);
    }

    Rng rng(17);
    for (const auto mode : {CodebookMode::Complex, CodebookMode::Real}) {
        const BitLayout layout(8, 6, mode);
        for (int trial = 0; trial < 2000; ++trial) {
            const BitString bits = random_bits(static_cast<std::size_t>(layout.total_bits), rng);
            const auto pp = bits_to_params(bits, layout);
            REQUIRE_FALSE(check_digit(pp.params));
            REQUIRE(params_to_bits(pp.params, pp.primary_slot, layout) == bits);
        }
    }
}

TEST_CASE("params_to_bits rejects a set check digit") {
    const BitLayout layout(6, 3, CodebookMode::Complex);
    Rng rng(23);
    auto params = random_params(6, CodebookMode::Complex, rng);
    params.set(0, 1, true);
    REQUIRE_THROWS_AS(params_to_bits(params, 0, layout), std::invalid_argument);
}

TEST_CASE("translate reads b bits first, then strict-upper P entries") {
    // p > m exercises the continuation into the P entries.
    const int m = 5, p = 7;
    const BitLayout layout(m, p, CodebookMode::Complex);
    Rng rng(31);
    for (int trial = 0; trial < 200; ++trial) {
        auto params = random_params(m, CodebookMode::Complex, rng);
        params.set(0, 1, false);
        const auto t = layout.read_translate(params);
        std::uint32_t want = params.b & ((1u << m) - 1u);
        // Strict-upper entries row-major, skipping the check digit (0,1):
        // next sources are (0,2) and (0,3).
        if (params.get(0, 2)) want |= 1u << m;
        if (params.get(0, 3)) want |= 1u << (m + 1);
        REQUIRE(t == want);
    }
}

TEST_CASE("distinct parameters give distinct codewords") {
    // Exhaustive over the full complex codebook for m <= 3: every (P, b),
    // enumerated as the canonical patch bits plus the check digit.
    for (int m : {2, 3}) {
        const BitLayout layout(m, 0, CodebookMode::Complex);
        const int total = layout.total_bits + 1;
        REQUIRE(total == m * (m + 3) / 2);
        std::vector<SignalVector> words;
        for (std::uint32_t x = 0; x < (1u << total); ++x) {
            BitString bits(static_cast<std::size_t>(layout.total_bits));
            for (int k = 0; k < layout.total_bits; ++k)
                bits[static_cast<std::size_t>(k)] = (x >> k) & 1u;
            auto params = bits_to_params(bits, layout).params;
            params.set(0, 1, (x >> layout.total_bits) & 1u);
            words.push_back(encode_chirp(params, 1.0, CodebookMode::Complex));
        }
        std::size_t collisions = 0;
        for (std::size_t i = 0; i < words.size(); ++i) {
            for (std::size_t j = i + 1; j < words.size(); ++j) {
                double diff = 0.0;
                for (std::size_t a = 0; a < words[i].size(); ++a)
                    diff = std::max(diff, std::abs(words[i][a] - words[j][a]));
                if (diff < 1e-9) ++collisions;
            }
        }
        REQUIRE(collisions == 0);
    }
}
