#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "chirrup/codebook.hpp"
#include "chirrup/rng.hpp"

namespace chirrup {

/// Standard normal distribution function.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// How the limit parameter rho enters the Gaussian tail arguments. The
/// central-limit statement uses rho as a variance (scale by sqrt(rho)); the
/// closed-form rate expressions are also implemented verbatim with rho in
/// the denominator. Monte-Carlo referee runs select StdDev as the default.
enum class VarianceConvention { PaperLiteral, StdDev };

inline const char* to_string(VarianceConvention c) {
    return c == VarianceConvention::PaperLiteral ? "paper-literal" : "stddev";
}

constexpr VarianceConvention kDefaultVarianceConvention = VarianceConvention::StdDev;

/// Asymptotic regime of one-step thresholding: delta = K/C, rho = (K+1/Q)/n.
struct OstAsymptotics {
    double delta = 0.0;
    double rho = 0.0;
    double epsilon = 0.05;
    double lambda = 0.0;
    VarianceConvention convention = kDefaultVarianceConvention;
};

inline double ost_scale(double rho, VarianceConvention convention) {
    return convention == VarianceConvention::PaperLiteral ? rho : std::sqrt(rho);
}

/// Limiting fractions of correlations above lambda coming from active
/// (EP) and inactive (EQ) indices.
inline std::pair<double, double> ost_rates(double lambda, const OstAsymptotics& asym) {
    const double s = ost_scale(asym.rho, asym.convention);
    const double ep = asym.delta * (1.0 - normal_cdf((lambda - 1.0) / s));
    const double eq = (1.0 - asym.delta) * (1.0 - normal_cdf(lambda / s));
    return {ep, eq};
}

namespace detail {

/// lambda solving EP + EQ = delta at fixed rho; the sum is strictly
/// decreasing in lambda.
inline double solve_lambda(double rho, double delta, VarianceConvention convention) {
    const double s = ost_scale(rho, convention);
    OstAsymptotics asym{delta, rho, 0.0, 0.0, convention};
    double lo = -1.0 - 60.0 * s;
    double hi = 1.0 + 60.0 * s;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const auto [ep, eq] = ost_rates(mid, asym);
        if (ep + eq > delta)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

/// Phase-transition load rho = c(delta, epsilon): the rho at which the
/// threshold keeping the total detection count at delta recovers exactly a
/// (1-epsilon) fraction of the active mass. Nested bisection, outer on rho
/// (absolute tolerance 1e-9), inner on lambda.
inline double ost_phase_transition(double delta, double epsilon,
                                   VarianceConvention convention = kDefaultVarianceConvention) {
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("ost: delta out of (0,1)");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("ost: epsilon out of (0,1)");

    const auto active_rate = [&](double rho) {
        const double lambda = detail::solve_lambda(rho, delta, convention);
        OstAsymptotics asym{delta, rho, epsilon, lambda, convention};
        return ost_rates(lambda, asym).first;
    };
    const double want = (1.0 - epsilon) * delta;

    double lo = 1e-12;
    double hi = 1.0;
    while (active_rate(hi) > want) {
        hi *= 2.0;
        if (hi > 1e9) throw std::runtime_error("ost_phase_transition: no root in bracket");
    }
    if (active_rate(lo) < want) throw std::runtime_error("ost_phase_transition: no root in bracket");
    while (hi - lo > 1e-9) {
        const double mid = 0.5 * (lo + hi);
        if (active_rate(mid) > want)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

/// Solved (lambda, rho) pair for inspection.
inline OstAsymptotics ost_solve(double delta, double epsilon,
                                VarianceConvention convention = kDefaultVarianceConvention) {
    OstAsymptotics asym;
    asym.delta = delta;
    asym.epsilon = epsilon;
    asym.convention = convention;
    asym.rho = ost_phase_transition(delta, epsilon, convention);
    asym.lambda = detail::solve_lambda(asym.rho, delta, convention);
    return asym;
}

/// Largest supportable K at (n, B, Q, epsilon): fixed point of
/// K = rho(K / 2^B, epsilon) * n - 1/Q. delta depends on K only through a
/// logarithm, so the iteration settles in a handful of steps.
inline double ost_predict_k(double n, double message_bits, double power, double epsilon,
                            VarianceConvention convention = kDefaultVarianceConvention) {
    if (!(n > 0) || !(message_bits > 0) || !(power > 0))
        throw std::invalid_argument("ost_predict_k: inputs must be positive");
    const double total = std::pow(2.0, message_bits);
    double k = std::max(1.0, ost_phase_transition(1.0 / total, epsilon, convention) * n -
                                 1.0 / power);
    for (int it = 0; it < 100; ++it) {
        const double delta = std::min(0.5, std::max(k, 1.0) / total);
        const double next = ost_phase_transition(delta, epsilon, convention) * n - 1.0 / power;
        if (std::abs(next - k) < 1e-6) return next;
        k = next;
    }
    throw std::runtime_error("ost_predict_k: fixed point did not converge");
}

/// Dense codebook for desk-scale OST runs, columns i.i.d. N(0, Q) so the
/// expected squared column norm is n * Q. Column-major.
struct DenseCodebook {
    std::size_t n = 0;
    std::size_t count = 0;
    std::vector<double> data;  // n * count, column-major

    const double* column(std::size_t i) const { return data.data() + i * n; }
};

inline DenseCodebook gaussian_codebook(std::size_t n, std::size_t count, double power, Rng& rng) {
    DenseCodebook cb;
    cb.n = n;
    cb.count = count;
    cb.data.resize(n * count);
    const double amp = std::sqrt(power);
    for (auto& v : cb.data) v = amp * rng.normal();
    return cb;
}

/// Real-mode chirp columns drawn at random, for checking that deterministic
/// chirp frames behave like Gaussian codebooks under one-step thresholding.
inline DenseCodebook chirp_codebook(int m, std::size_t count, double power, Rng& rng) {
    DenseCodebook cb;
    cb.n = std::size_t{1} << m;
    cb.count = count;
    cb.data.resize(cb.n * count);
    for (std::size_t i = 0; i < count; ++i) {
        const auto params = random_params(m, CodebookMode::Real, rng);
        const auto word = encode_chirp(params, power, CodebookMode::Real);
        for (std::size_t a = 0; a < cb.n; ++a) cb.data[i * cb.n + a] = word[a].real();
    }
    return cb;
}

/// One-step thresholding: correlate and keep the K largest correlations
/// (signed, no absolute value). Ties break toward the lower index.
inline std::vector<std::size_t> ost_decode(const std::vector<double>& y,
                                           const DenseCodebook& codebook, std::size_t k) {
    if (k > codebook.count) throw std::invalid_argument("ost_decode: K exceeds codebook size");
    if (y.size() != codebook.n) throw std::invalid_argument("ost_decode: length mismatch");
    std::vector<double> g(codebook.count, 0.0);
    for (std::size_t i = 0; i < codebook.count; ++i) {
        const double* col = codebook.column(i);
        double acc = 0.0;
        for (std::size_t a = 0; a < codebook.n; ++a) acc += col[a] * y[a];
        g[i] = acc;
    }
    std::vector<std::size_t> idx(codebook.count);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                      [&g](std::size_t a, std::size_t b) {
                          return g[a] != g[b] ? g[a] > g[b] : a < b;
                      });
    idx.resize(k);
    return idx;
}

}  // namespace chirrup
