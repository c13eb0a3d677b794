#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include "chirrup/rng.hpp"
#include "chirrup/wht.hpp"

using namespace chirrup;

namespace {

// O(n^2) direct summation of the transform definition, used as the oracle.
SignalVector wht_direct(const SignalVector& x) {
    const std::size_t n = x.size();
    const int m = log2_exact(n);
    SignalVector out(n, cplx{0.0, 0.0});
    for (std::size_t v = 0; v < n; ++v) {
        for (std::size_t a = 0; a < n; ++a) {
            const int sign = std::popcount(v & a) % 2 ? -1 : 1;
            out[v] += static_cast<double>(sign) * x[a];
        }
        out[v] *= std::pow(2.0, -0.5 * m);
    }
    return out;
}

double max_abs_diff(const SignalVector& a, const SignalVector& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

double norm2(const SignalVector& a) {
    double s = 0.0;
    for (const auto& v : a) s += std::norm(v);
    return std::sqrt(s);
}

}  // namespace

TEST_CASE("delta input gives constant spectrum") {
    SignalVector x(4, cplx{0.0, 0.0});
    x[0] = 1.0;
    fwht(x);
    for (const auto& v : x) REQUIRE(std::abs(v - cplx{0.5, 0.0}) < 1e-14);
}

TEST_CASE("a Walsh function maps to a scaled delta") {
    const std::uint32_t freq = 3;
    SignalVector x(4);
    for (std::size_t a = 0; a < 4; ++a)
        x[a] = std::popcount(freq & static_cast<std::uint32_t>(a)) % 2 ? -1.0 : 1.0;
    fwht(x);
    for (std::size_t v = 0; v < 4; ++v) {
        const cplx want = v == freq ? cplx{2.0, 0.0} : cplx{0.0, 0.0};
        REQUIRE(std::abs(x[v] - want) < 1e-14);
    }
}

TEST_CASE("matches direct summation") {
    SignalVector x{1.0, 1.0, 1.0, -1.0};
    REQUIRE(max_abs_diff(fwht_copy(x), wht_direct(x)) < 1e-12);

    Rng rng(11);
    for (int m = 1; m <= 6; ++m) {
        SignalVector y(std::size_t{1} << m);
        for (auto& v : y) v = cplx{rng.normal(), rng.normal()};
        const auto fast = fwht_copy(y);
        const auto slow = wht_direct(y);
        REQUIRE(max_abs_diff(fast, slow) < 1e-10 * norm2(y));
    }
}

TEST_CASE("involution and Parseval") {
    Rng rng(7);
    for (int m : {1, 3, 5, 8}) {
        SignalVector x(std::size_t{1} << m);
        for (auto& v : x) v = cplx{rng.normal(), rng.normal()};
        SignalVector t = x;
        fwht(t);
        REQUIRE(std::abs(norm2(t) - norm2(x)) < 1e-10 * norm2(x));
        fwht(t);
        REQUIRE(max_abs_diff(t, x) < 1e-10 * norm2(x));
    }
}

TEST_CASE("rejects non-power-of-two lengths") {
    SignalVector x(3);
    REQUIRE_THROWS_AS(fwht(x), std::invalid_argument);
    SignalVector empty;
    REQUIRE_THROWS_AS(fwht(empty), std::invalid_argument);
}
