#pragma once

#include <cmath>
#include <complex>
#include <span>
#include <stdexcept>
#include <vector>

namespace chirrup {

using cplx = std::complex<double>;
using SignalVector = std::vector<cplx>;

inline bool is_power_of_two(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }

inline int log2_exact(std::size_t n) {
    if (!is_power_of_two(n)) throw std::invalid_argument("length is not a power of two");
    int m = 0;
    while ((std::size_t{1} << m) < n) ++m;
    return m;
}

/// In-place fast Walsh-Hadamard transform with orthonormal scaling 2^{-m/2},
/// so the transform is an involution and preserves the 2-norm. Coefficient v
/// equals 2^{-m/2} * sum_a (-1)^{v.a} x_a, indices paired with binary
/// m-tuples little-endian. O(n log n).
inline void fwht(std::span<cplx> x) {
    const std::size_t n = x.size();
    const int m = log2_exact(n);
    for (std::size_t h = 1; h < n; h <<= 1) {
        for (std::size_t i = 0; i < n; i += h << 1) {
            for (std::size_t j = i; j < i + h; ++j) {
                const cplx a = x[j];
                const cplx b = x[j + h];
                x[j] = a + b;
                x[j + h] = a - b;
            }
        }
    }
    const double scale = std::pow(2.0, -0.5 * m);
    for (auto& v : x) v *= scale;
}

inline SignalVector fwht_copy(const SignalVector& x) {
    SignalVector out = x;
    fwht(out);
    return out;
}

}  // namespace chirrup
