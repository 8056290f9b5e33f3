#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <mutex>
#include <numeric>
#include <vector>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include "kinit/matrix.hpp"

namespace kinit::stats {

enum class Direction { lower_is_better, higher_is_better };

/// B x T within-block ranks; rank 1 is the best treatment of a block.
struct RankTable {
    Matrix ranks;
    Direction direction = Direction::lower_is_better;

    std::size_t blocks() const noexcept { return ranks.rows(); }
    std::size_t treatments() const noexcept { return ranks.cols(); }

    std::vector<double> rank_sums() const {
        std::vector<double> sums(treatments(), 0.0);
        for (std::size_t b = 0; b < blocks(); ++b) {
            for (std::size_t t = 0; t < treatments(); ++t) sums[t] += ranks(b, t);
        }
        return sums;
    }

    std::vector<double> mean_ranks() const {
        auto sums = rank_sums();
        for (double& s : sums) s /= static_cast<double>(blocks());
        return sums;
    }
};

/// Ranks each row separately; tied values share the mean of their positions.
inline RankTable rank_blocks(const Matrix& values, Direction direction) {
    if (values.rows() < 2 || values.cols() < 2) throw Error("ranking needs at least two blocks and two treatments");
    RankTable out{Matrix(values.rows(), values.cols()), direction};
    std::vector<std::size_t> order(values.cols());
    for (std::size_t b = 0; b < values.rows(); ++b) {
        const auto row = values.row(b);
        for (double v : row) {
            if (std::isnan(v)) throw Error("ranking: NaN in block " + std::to_string(b));
        }
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
            return direction == Direction::lower_is_better ? row[x] < row[y] : row[x] > row[y];
        });
        for (std::size_t i = 0; i < order.size();) {
            std::size_t j = i;
            while (j + 1 < order.size() && row[order[j + 1]] == row[order[i]]) ++j;
            const double mean_rank = 0.5 * static_cast<double>(i + j) + 1.0;
            for (std::size_t t = i; t <= j; ++t) out.ranks(b, order[t]) = mean_rank;
            i = j + 1;
        }
    }
    return out;
}

struct TestOutcome {
    double statistic = 0.0;
    double df1 = 0.0;
    /// Second degrees of freedom; 0 for single-df-parameter distributions.
    double df2 = 0.0;
    double p_value = 1.0;
    /// Statistic undefined (division by zero); p_value is set to 0.
    bool degenerate = false;

    bool rejects(double alpha) const noexcept { return p_value <= alpha; }
};

/// Upper tail of the chi-square distribution.
inline double chi_square_sf(double x, double df) {
    if (x <= 0.0) return 1.0;
    return boost::math::gamma_q(0.5 * df, 0.5 * x);
}

/// Upper tail of the F distribution.
inline double f_sf(double x, double df1, double df2) {
    if (x <= 0.0) return 1.0;
    return boost::math::ibeta(0.5 * df2, 0.5 * df1, df2 / (df2 + df1 * x));
}

/// Two-sided tail of the standard normal.
inline double normal_two_sided(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

/// Friedman rank statistic with a chi-square(T - 1) p-value.
inline TestOutcome friedman(const RankTable& rt) {
    const double b = static_cast<double>(rt.blocks());
    const double t = static_cast<double>(rt.treatments());
    double sum_sq = 0.0;
    for (double r : rt.rank_sums()) sum_sq += r * r;
    double chi = 12.0 / (b * t * (t + 1.0)) * sum_sq - 3.0 * b * (t + 1.0);
    // Rounding can leave a tiny negative or overshoot the attainable maximum.
    chi = std::clamp(chi, 0.0, b * (t - 1.0));
    if (std::abs(chi) < 1e-12 * b * t) chi = 0.0;
    if (std::abs(chi - b * (t - 1.0)) < 1e-12 * b * t) chi = b * (t - 1.0);
    return {chi, t - 1.0, 0.0, chi_square_sf(chi, t - 1.0), false};
}

/// Iman-Davenport F statistic derived from the Friedman statistic.
inline TestOutcome iman_davenport(double chi, std::size_t blocks, std::size_t treatments) {
    const double b = static_cast<double>(blocks);
    const double t = static_cast<double>(treatments);
    const double max_chi = b * (t - 1.0);
    if (!(chi >= 0.0) || chi > max_chi) {
        throw Error("Friedman statistic " + std::to_string(chi) + " outside [0, " + std::to_string(max_chi) + "]");
    }
    const double df1 = t - 1.0, df2 = (t - 1.0) * (b - 1.0);
    if (chi == max_chi) return {std::numeric_limits<double>::infinity(), df1, df2, 0.0, true};
    const double f = (b - 1.0) * chi / (max_chi - chi);
    return {f, df1, df2, f_sf(f, df1, df2), false};
}

/// Symmetric T x T matrices of pairwise z statistics and two-sided p-values.
struct Pairwise {
    std::size_t treatments = 0;
    std::vector<double> z;
    std::vector<double> p;

    double z_at(std::size_t i, std::size_t j) const { return z[i * treatments + j]; }
    double p_at(std::size_t i, std::size_t j) const { return p[i * treatments + j]; }

    /// Builds from p-values only (z left at 0).
    static Pairwise from_p(std::size_t t, std::vector<double> p) {
        if (p.size() != t * t) throw Error("pairwise p matrix must be T x T");
        return Pairwise{t, std::vector<double>(t * t, 0.0), std::move(p)};
    }
};

/// Friedman post-hoc z_ij = (mean rank_i - mean rank_j) / sqrt(T(T+1) / 6B).
inline Pairwise pairwise_pvalues(const RankTable& rt) {
    const std::size_t t = rt.treatments();
    const double se = std::sqrt(static_cast<double>(t * (t + 1)) / (6.0 * static_cast<double>(rt.blocks())));
    const auto mean = rt.mean_ranks();
    Pairwise out{t, std::vector<double>(t * t, 0.0), std::vector<double>(t * t, 1.0)};
    for (std::size_t i = 0; i < t; ++i) {
        for (std::size_t j = 0; j < t; ++j) {
            if (i == j) continue;
            const double z = (mean[i] - mean[j]) / se;
            out.z[i * t + j] = z;
            out.p[i * t + j] = normal_two_sided(z);
        }
    }
    return out;
}

enum class PosthocMethod { bergmann_hommel, holm };

struct PairDecision {
    std::size_t i = 0, j = 0;
    double z = 0.0, p = 1.0;
    bool rejected = false;
};

struct PosthocResult {
    std::vector<PairDecision> pairs;  // i < j, lexicographic
    PosthocMethod method = PosthocMethod::holm;

    bool rejected(std::size_t a, std::size_t b) const {
        if (a > b) std::swap(a, b);
        for (const auto& d : pairs) {
            if (d.i == a && d.j == b) return d.rejected;
        }
        return false;
    }
};

namespace detail {

inline std::size_t pair_index(std::size_t i, std::size_t j, std::size_t t) {
    // Lexicographic index of (i, j), i < j, among the T(T-1)/2 pairs.
    return i * t - i * (i + 1) / 2 + (j - i - 1);
}

inline std::vector<PairDecision> pair_list(const Pairwise& pw) {
    std::vector<PairDecision> out;
    for (std::size_t i = 0; i < pw.treatments; ++i) {
        for (std::size_t j = i + 1; j < pw.treatments; ++j) out.push_back({i, j, pw.z_at(i, j), pw.p_at(i, j), false});
    }
    return out;
}

}  // namespace detail

inline constexpr std::size_t max_bergmann_hommel_treatments = 9;

/// Exhaustive sets of pairwise-equality hypotheses over T treatments, one per
/// set partition with at least one non-singleton block, as bitmasks over the
/// lexicographic pair index. Computed once per T.
inline const std::vector<std::uint64_t>& exhaustive_sets(std::size_t t) {
    if (t < 2 || t > max_bergmann_hommel_treatments) {
        throw Error("exhaustive sets are enumerated for 2..9 treatments only");
    }
    static std::array<std::vector<std::uint64_t>, max_bergmann_hommel_treatments + 1> cache;
    static std::array<std::once_flag, max_bergmann_hommel_treatments + 1> once;
    std::call_once(once[t], [t] {
        auto& sets = cache[t];
        // Restricted growth strings enumerate every set partition exactly once.
        std::vector<std::size_t> block(t, 0), max_prefix(t, 0);
        while (true) {
            std::uint64_t mask = 0;
            for (std::size_t i = 0; i < t; ++i) {
                for (std::size_t j = i + 1; j < t; ++j) {
                    if (block[i] == block[j]) mask |= std::uint64_t{1} << detail::pair_index(i, j, t);
                }
            }
            if (mask != 0) sets.push_back(mask);
            std::size_t pos = t - 1;
            while (pos > 0 && block[pos] == max_prefix[pos - 1] + 1) --pos;
            if (pos == 0) break;
            ++block[pos];
            max_prefix[pos] = std::max(max_prefix[pos - 1], block[pos]);
            for (std::size_t q = pos + 1; q < t; ++q) {
                block[q] = 0;
                max_prefix[q] = max_prefix[pos];
            }
        }
    });
    return cache[t];
}

/// Bergmann-Hommel: a hypothesis is retained when it belongs to some
/// exhaustive set I with min p over I > alpha / |I|; the rest are rejected.
inline PosthocResult bergmann_hommel(const Pairwise& pw, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error("alpha must lie in (0, 1)");
    const std::size_t t = pw.treatments;
    if (t > max_bergmann_hommel_treatments) {
        throw Error("Bergmann-Hommel is limited to " + std::to_string(max_bergmann_hommel_treatments) +
                    " treatments; use Holm for " + std::to_string(t));
    }
    PosthocResult out{detail::pair_list(pw), PosthocMethod::bergmann_hommel};
    if (t < 2) return out;
    std::uint64_t accepted = 0;
    for (std::uint64_t set : exhaustive_sets(t)) {
        double min_p = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < out.pairs.size(); ++k) {
            if (set >> k & 1U) min_p = std::min(min_p, out.pairs[k].p);
        }
        if (min_p > alpha / static_cast<double>(std::popcount(set))) accepted |= set;
    }
    for (std::size_t k = 0; k < out.pairs.size(); ++k) out.pairs[k].rejected = !(accepted >> k & 1U);
    return out;
}

/// Holm step-down over the T(T-1)/2 pairwise hypotheses.
inline PosthocResult holm(const Pairwise& pw, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error("alpha must lie in (0, 1)");
    PosthocResult out{detail::pair_list(pw), PosthocMethod::holm};
    const std::size_t m = out.pairs.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return out.pairs[a].p < out.pairs[b].p; });
    for (std::size_t r = 0; r < m; ++r) {
        if (out.pairs[order[r]].p > alpha / static_cast<double>(m - r)) break;
        out.pairs[order[r]].rejected = true;
    }
    return out;
}

using BigInt = boost::multiprecision::cpp_int;

/// Stirling number of the second kind S(n, k): ways to split n items into k
/// non-empty groups. Exact, 1 <= k <= n <= 200.
inline BigInt stirling2(unsigned n, unsigned k) {
    if (k < 1 || k > n || n > 200) throw Error("stirling2 requires 1 <= k <= n <= 200");
    std::vector<BigInt> row(k + 1, 0);
    row[0] = 1;  // S(0, 0)
    for (unsigned m = 1; m <= n; ++m) {
        for (unsigned j = std::min(m, k); j >= 1; --j) row[j] = j * row[j] + row[j - 1];
        row[0] = 0;
    }
    return row[k];
}

}  // namespace kinit::stats
