#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "chirrup/codebook.hpp"
#include "chirrup/rng.hpp"
#include "chirrup/wht.hpp"

namespace chirrup {

/// Knobs of the greedy chirp reconstruction loop. c = 1 runs the plain
/// row-by-row search; c >= 2 engages the depth-first tree over the top-c row
/// candidates per level with the alpha acceptance test at each leaf.
/// column_power is the per-codeword power the dictionary is built with, so
/// recovered coefficients sit near 1 when it matches the transmit power.
struct DecoderParams {
    int S = 1;
    double residual_tol = 0.0;
    int c = 3;
    double alpha = 3.0;
    CodebookMode mode = CodebookMode::Complex;
    double column_power = 1.0;
};

inline void validate_decoder_params(const DecoderParams& d) {
    if (d.S < 1) throw std::invalid_argument("DecoderParams: S must be >= 1");
    if (d.c < 1) throw std::invalid_argument("DecoderParams: c must be >= 1");
    if (!(d.alpha > 0)) throw std::invalid_argument("DecoderParams: alpha must be > 0");
    if (d.residual_tol < 0) throw std::invalid_argument("DecoderParams: residual_tol < 0");
}

struct DecodedComponent {
    ChirpParams params;
    cplx coeff{0.0, 0.0};
    bool fallback = false;
};

/// f^e_a = conj(y_a) * y_{a XOR e}. For a single active chirp the transform
/// of f^e has one peak, at index P*e over GF(2).
inline SignalVector shift_multiply(const SignalVector& y, std::uint32_t e) {
    const std::size_t n = y.size();
    const int m = log2_exact(n);
    if (m < 32 && (e >> m) != 0) throw std::invalid_argument("shift_multiply: shift out of range");
    SignalVector out(n);
    for (std::size_t a = 0; a < n; ++a) out[a] = std::conj(y[a]) * y[a ^ e];
    return out;
}

/// Multiply entry a by i^{-(a'Pa mod 4)}, stripping a known matrix P so the
/// transform exposes b as the dominant coefficient.
inline SignalVector dechirp(const SignalVector& y, const ChirpParams& params) {
    const std::size_t n = y.size();
    const int m = log2_exact(n);
    if (m != params.m || static_cast<int>(params.rows.size()) != params.m)
        throw std::invalid_argument("dechirp: dimension mismatch");
    SignalVector out(n);
    for (std::size_t a = 0; a < n; ++a) {
        int q = 0;
        for (int i = 0; i < m; ++i)
            if ((a >> i) & 1u)
                q += std::popcount(params.rows[static_cast<std::size_t>(i)] &
                                   static_cast<std::uint32_t>(a));
        out[a] = detail::ipow((4 - (q & 3)) & 3) * y[a];
    }
    return out;
}

namespace detail {

inline std::vector<double> abs_fwht(SignalVector v) {
    fwht(v);
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::abs(v[i]);
    return out;
}

/// Per-level row scores. Level r (0-based) uses the shift e_r, and for r >= 1
/// also the shift e_r ^ e_{r-1}. The second spectrum peaks at
/// P*e_r XOR P*e_{r-1}, i.e. it is indexed relative to the previous row, so
/// scoring XOR-translates it by the row chosen at the previous level to line
/// both peaks up on the same index before summing the magnitudes.
struct LevelScores {
    int m = 0;
    std::vector<std::vector<double>> first;   // |WHT(f^{e_r})|
    std::vector<std::vector<double>> second;  // |WHT(f^{e_r + e_{r-1}})|, empty at r = 0

    explicit LevelScores(const SignalVector& y) {
        m = log2_exact(y.size());
        first.resize(static_cast<std::size_t>(m));
        second.resize(static_cast<std::size_t>(m));
        for (int r = 0; r < m; ++r) {
            first[static_cast<std::size_t>(r)] =
                abs_fwht(shift_multiply(y, 1u << r));
            if (r > 0)
                second[static_cast<std::size_t>(r)] =
                    abs_fwht(shift_multiply(y, (1u << r) | (1u << (r - 1))));
        }
    }

    double score(int level, std::uint32_t prev_row, std::uint32_t x) const {
        const auto& f = first[static_cast<std::size_t>(level)];
        double s = f[x];
        if (level > 0) s += second[static_cast<std::size_t>(level)][x ^ prev_row];
        return s;
    }

    /// Full score vector at one level given the previously selected row.
    std::vector<double> level_score(int level, std::uint32_t prev_row) const {
        std::vector<double> h(first[static_cast<std::size_t>(level)].size());
        for (std::size_t x = 0; x < h.size(); ++x)
            h[x] = score(level, prev_row, static_cast<std::uint32_t>(x));
        return h;
    }

    /// Best up-to-c candidate rows at one level, by score descending with
    /// the lowest index on ties. Candidates are restricted to rows
    /// consistent with the already-chosen ones: bit j of row r must equal
    /// bit r of row j for j < r, so the assembled matrix is symmetric by
    /// construction and earlier rows prune the noise competitors at deeper
    /// levels. Real mode additionally pins the diagonal bit to zero.
    std::vector<std::uint32_t> top_candidates(int level,
                                              const std::vector<std::uint32_t>& rows_so_far,
                                              int c, CodebookMode mode) const {
        const std::size_t n = first[static_cast<std::size_t>(level)].size();
        std::uint32_t fixed_mask = 0, fixed_bits = 0;
        for (int j = 0; j < level; ++j) {
            fixed_mask |= 1u << j;
            if ((rows_so_far[static_cast<std::size_t>(j)] >> level) & 1u) fixed_bits |= 1u << j;
        }
        if (mode == CodebookMode::Real) fixed_mask |= 1u << level;  // diagonal stays clear
        const std::uint32_t prev_row =
            level > 0 ? rows_so_far[static_cast<std::size_t>(level - 1)] : 0;

        std::vector<std::pair<double, std::uint32_t>> best;  // score, candidate
        best.reserve(static_cast<std::size_t>(c) + 1);
        for (std::size_t x = 0; x < n; ++x) {
            const auto cand = static_cast<std::uint32_t>(x);
            if ((cand & fixed_mask) != fixed_bits) continue;
            const double s = score(level, prev_row, cand);
            if (static_cast<int>(best.size()) == c && s <= best.back().first) continue;
            best.emplace_back(s, cand);
            std::sort(best.begin(), best.end(), [](const auto& a, const auto& b) {
                return a.first != b.first ? a.first > b.first : a.second < b.second;
            });
            if (static_cast<int>(best.size()) > c) best.pop_back();
        }
        std::vector<std::uint32_t> out;
        out.reserve(best.size());
        for (auto& e : best) out.push_back(e.second);
        return out;
    }
};

/// Assemble P from the per-level rows. Candidate restriction makes the rows
/// mutually consistent, so reading the upper triangle from the later row is
/// exact; the real-mode diagonal is already clear at selection time.
inline ChirpParams assemble_matrix(const std::vector<std::uint32_t>& rows, int m,
                                   CodebookMode mode) {
    ChirpParams params = ChirpParams::zero(m);
    for (int i = 0; i < m; ++i) {
        params.set(i, i, (rows[static_cast<std::size_t>(i)] >> i) & 1u);
        for (int j = i + 1; j < m; ++j)
            params.set(i, j, (rows[static_cast<std::size_t>(j)] >> i) & 1u);
    }
    if (mode == CodebookMode::Real)
        for (int i = 0; i < m; ++i) params.set(i, i, false);
    return params;
}

struct LeafResult {
    std::uint32_t b = 0;
    double peak = 0.0;
    double rms_rest = 0.0;
};

inline LeafResult leaf_b_stage(const SignalVector& y, const ChirpParams& params) {
    SignalVector z = dechirp(y, params);
    fwht(z);
    LeafResult out;
    double sumsq = 0.0;
    for (std::size_t v = 0; v < z.size(); ++v) {
        const double w = std::abs(z[v]);
        sumsq += w * w;
        if (w > out.peak) {
            out.peak = w;
            out.b = static_cast<std::uint32_t>(v);
        }
    }
    const std::size_t rest = z.size() > 1 ? z.size() - 1 : 1;
    out.rms_rest = std::sqrt(std::max(0.0, sumsq - out.peak * out.peak) /
                             static_cast<double>(rest));
    return out;
}

}  // namespace detail

struct FindResult {
    ChirpParams params;
    bool fallback = false;
};

/// Plain row-by-row component identification: at each level take the argmax
/// of the combined shift scores, then recover b from the dechirped
/// transform. Returns nothing on an all-zero residual.
inline std::optional<FindResult> find_pb(const SignalVector& y, const DecoderParams& dp) {
    validate_decoder_params(dp);
    const int m = log2_exact(y.size());
    double energy = 0.0;
    for (const auto& v : y) energy += std::norm(v);
    if (energy == 0.0) return std::nullopt;

    detail::LevelScores scores(y);
    std::vector<std::uint32_t> rows(static_cast<std::size_t>(m), 0);
    for (int r = 0; r < m; ++r)
        rows[static_cast<std::size_t>(r)] = scores.top_candidates(r, rows, 1, dp.mode).at(0);
    ChirpParams params = detail::assemble_matrix(rows, m, dp.mode);
    params.b = detail::leaf_b_stage(y, params).b;
    return FindResult{params, false};
}

/// Depth-first search over per-level candidate lists (top-c of the combined
/// scores, best first). A leaf is accepted when its dominant dechirped
/// coefficient exceeds alpha times the RMS of the remaining entries. If the
/// whole tree is rejected, a uniformly random valid (P, b) is returned and
/// flagged. With c = 1 this is exactly find_pb.
inline std::optional<FindResult> find_pb_tree(const SignalVector& y, const DecoderParams& dp,
                                              Rng& rng) {
    validate_decoder_params(dp);
    if (dp.c == 1) return find_pb(y, dp);
    const int m = log2_exact(y.size());
    double energy = 0.0;
    for (const auto& v : y) energy += std::norm(v);
    if (energy == 0.0) return std::nullopt;

    detail::LevelScores scores(y);
    std::vector<std::vector<std::uint32_t>> cand(static_cast<std::size_t>(m));
    std::vector<std::size_t> pos(static_cast<std::size_t>(m), 0);
    std::vector<std::uint32_t> rows(static_cast<std::size_t>(m), 0);

    int level = 0;
    cand[0] = scores.top_candidates(0, rows, dp.c, dp.mode);
    while (true) {
        if (pos[static_cast<std::size_t>(level)] >=
            cand[static_cast<std::size_t>(level)].size()) {
            // Exhausted this level; retreat.
            if (level == 0) break;
            pos[static_cast<std::size_t>(level)] = 0;
            --level;
            ++pos[static_cast<std::size_t>(level)];
            continue;
        }
        rows[static_cast<std::size_t>(level)] =
            cand[static_cast<std::size_t>(level)][pos[static_cast<std::size_t>(level)]];
        if (level + 1 < m) {
            ++level;
            cand[static_cast<std::size_t>(level)] =
                scores.top_candidates(level, rows, dp.c, dp.mode);
            pos[static_cast<std::size_t>(level)] = 0;
            continue;
        }
        // Leaf: assemble and test.
        ChirpParams params = detail::assemble_matrix(rows, m, dp.mode);
        const auto leaf = detail::leaf_b_stage(y, params);
        if (leaf.peak >= dp.alpha * leaf.rms_rest) {
            params.b = leaf.b;
            return FindResult{params, false};
        }
        ++pos[static_cast<std::size_t>(level)];
    }
    return FindResult{random_params(m, dp.mode, rng), true};
}

/// Incremental thin QR of the selected codeword matrix. Appending a column
/// costs O(nK); coefficients solve the least-squares fit exactly and the
/// residual stays orthogonal to the span of the selected columns.
class LsqState {
  public:
    explicit LsqState(SignalVector y) : y0_(std::move(y)), residual_(y0_) {}

    const SignalVector& residual() const { return residual_; }

    double residual_norm() const {
        double s = 0.0;
        for (const auto& v : residual_) s += std::norm(v);
        return std::sqrt(s);
    }

    std::size_t size() const { return q_.size(); }

    /// Orthogonalize and append one column. Returns false (state unchanged)
    /// when the column is numerically dependent on the current span.
    bool add_column(const SignalVector& column) {
        if (column.size() != y0_.size())
            throw std::invalid_argument("LsqState: column length mismatch");
        double colsq = 0.0;
        for (const auto& v : column) colsq += std::norm(v);
        const double colnorm = std::sqrt(colsq);

        SignalVector q = column;
        std::vector<cplx> rcol(q_.size(), cplx{0.0, 0.0});
        // Modified Gram-Schmidt with one reorthogonalization pass.
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t i = 0; i < q_.size(); ++i) {
                cplx proj{0.0, 0.0};
                for (std::size_t a = 0; a < q.size(); ++a) proj += std::conj(q_[i][a]) * q[a];
                rcol[i] += proj;
                for (std::size_t a = 0; a < q.size(); ++a) q[a] -= proj * q_[i][a];
            }
        }
        double qsq = 0.0;
        for (const auto& v : q) qsq += std::norm(v);
        const double qnorm = std::sqrt(qsq);
        if (qnorm < 1e-8 * colnorm) return false;

        for (auto& v : q) v /= qnorm;
        cplx qy{0.0, 0.0};
        for (std::size_t a = 0; a < q.size(); ++a) qy += std::conj(q[a]) * y0_[a];
        for (std::size_t a = 0; a < q.size(); ++a) residual_[a] -= qy * q[a];

        q_.push_back(std::move(q));
        rcol.push_back(qnorm);
        r_.push_back(std::move(rcol));
        qty_.push_back(qy);
        return true;
    }

    /// Joint least-squares coefficients of all columns added so far,
    /// R c = Q^H y by back substitution.
    std::vector<cplx> coefficients() const {
        const std::size_t k = q_.size();
        std::vector<cplx> c(k, cplx{0.0, 0.0});
        for (std::size_t i = k; i-- > 0;) {
            cplx s = qty_[i];
            for (std::size_t j = i + 1; j < k; ++j) s -= r_[j][i] * c[j];
            c[i] = s / r_[i][i];
        }
        return c;
    }

    const std::vector<SignalVector>& q_columns() const { return q_; }

  private:
    SignalVector y0_;
    SignalVector residual_;
    std::vector<SignalVector> q_;       // orthonormal columns
    std::vector<std::vector<cplx>> r_;  // r_[j] = column j of R (length j+1)
    std::vector<cplx> qty_;             // Q^H y0
};

/// Convenience wrapper matching the one-column update contract: extends the
/// state with the codeword and returns the refreshed joint coefficients.
/// Throws when the column is numerically dependent.
inline std::vector<cplx> lsq_add_column(LsqState& state, const SignalVector& codeword) {
    if (!state.add_column(codeword))
        throw std::runtime_error("lsq_add_column: numerically dependent column");
    return state.coefficients();
}

/// Greedy loop: find a component, append its codeword, refit, and subtract,
/// until the residual drops to residual_tol or S components are taken.
/// Stops early when the search returns an already-selected (P, b). All
/// components are returned with their final joint coefficients; callers
/// filter with their own retention rule.
inline std::vector<DecodedComponent> chirp_reconstruct(const SignalVector& y,
                                                       const DecoderParams& dp, Rng& rng) {
    validate_decoder_params(dp);
    log2_exact(y.size());
    LsqState state(y);
    std::vector<DecodedComponent> components;
    std::unordered_set<std::string> seen;

    for (int s = 1; s <= dp.S; ++s) {
        if (state.residual_norm() <= dp.residual_tol) break;
        const auto found = find_pb_tree(state.residual(), dp, rng);
        if (!found) break;
        if (!seen.insert(found->params.key()).second) break;  // duplicate: no progress
        const SignalVector column = encode_chirp(found->params, dp.column_power, dp.mode);
        if (!state.add_column(column)) break;  // dependent column: cannot refine
        components.push_back({found->params, cplx{0.0, 0.0}, found->fallback});
    }

    const auto coeffs = state.coefficients();
    for (std::size_t i = 0; i < components.size(); ++i) components[i].coeff = coeffs[i];
    return components;
}

}  // namespace chirrup
