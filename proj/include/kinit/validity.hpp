#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "kinit/matrix.hpp"

namespace kinit {

/// R x C co-occurrence counts of two partitions of the same points.
/// Cluster ids are compacted in order of first appearance.
class ContingencyTable {
public:
    ContingencyTable(std::size_t rows, std::size_t cols, std::vector<std::uint64_t> counts)
        : rows_(rows), cols_(cols), counts_(std::move(counts)), row_sums_(rows, 0), col_sums_(cols, 0) {
        if (counts_.size() != rows * cols) throw Error("contingency table: wrong number of cells");
        for (std::size_t i = 0; i < rows_; ++i) {
            for (std::size_t j = 0; j < cols_; ++j) {
                row_sums_[i] += at(i, j);
                col_sums_[j] += at(i, j);
                n_ += at(i, j);
            }
        }
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::uint64_t at(std::size_t i, std::size_t j) const noexcept { return counts_[i * cols_ + j]; }
    const std::vector<std::uint64_t>& row_sums() const noexcept { return row_sums_; }
    const std::vector<std::uint64_t>& col_sums() const noexcept { return col_sums_; }
    std::uint64_t n() const noexcept { return n_; }

    /// True when the two partitions coincide up to relabeling.
    bool is_matching() const {
        for (std::size_t i = 0; i < rows_; ++i) {
            for (std::size_t j = 0; j < cols_; ++j) {
                const auto c = at(i, j);
                if (c != 0 && (c != row_sums_[i] || c != col_sums_[j])) return false;
            }
        }
        return true;
    }

private:
    std::size_t rows_, cols_;
    std::vector<std::uint64_t> counts_;
    std::vector<std::uint64_t> row_sums_, col_sums_;
    std::uint64_t n_ = 0;
};

inline ContingencyTable contingency(const Assignment& a, const Assignment& b) {
    if (a.size() != b.size()) {
        throw Error("partitions differ in length (" + std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
    }
    if (a.empty()) throw Error("partitions must cover at least one point");
    auto compact = [](const Assignment& p) {
        std::unordered_map<ClusterId, std::size_t> ids;
        std::vector<std::size_t> out(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) out[i] = ids.try_emplace(p[i], ids.size()).first->second;
        return std::pair{out, ids.size()};
    };
    const auto [ra, rows] = compact(a);
    const auto [cb, cols] = compact(b);
    std::vector<std::uint64_t> counts(rows * cols, 0);
    for (std::size_t i = 0; i < a.size(); ++i) ++counts[ra[i] * cols + cb[i]];
    return ContingencyTable(rows, cols, std::move(counts));
}

namespace detail {
inline double pairs(std::uint64_t n) { return 0.5 * static_cast<double>(n) * static_cast<double>(n - (n > 0)); }
}  // namespace detail

struct AdjustedRand {
    double value = 0.0;
    /// Set when the chance-corrected denominator vanishes; value is then 1
    /// for matching partitions and 0 otherwise.
    bool degenerate = false;
};

/// Hubert-Arabie adjusted Rand index. Can be negative.
inline AdjustedRand adjusted_rand_checked(const ContingencyTable& t) {
    if (t.n() < 2) throw Error("adjusted Rand index needs at least two points");
    double index = 0.0, sum_a = 0.0, sum_b = 0.0;
    for (std::size_t i = 0; i < t.rows(); ++i) {
        for (std::size_t j = 0; j < t.cols(); ++j) index += detail::pairs(t.at(i, j));
    }
    for (auto s : t.row_sums()) sum_a += detail::pairs(s);
    for (auto s : t.col_sums()) sum_b += detail::pairs(s);
    const double expected = sum_a * sum_b / detail::pairs(t.n());
    const double max_index = 0.5 * (sum_a + sum_b);
    if (max_index == expected) return {t.is_matching() ? 1.0 : 0.0, true};
    return {(index - expected) / (max_index - expected), false};
}

inline double adjusted_rand(const ContingencyTable& t) { return adjusted_rand_checked(t).value; }

/// van Dongen criterion in [0, 1]; 0 for identical partitions.
inline double van_dongen(const ContingencyTable& t) {
    if (t.n() < 1) throw Error("van Dongen criterion needs at least one point");
    std::uint64_t row_max = 0, col_max = 0;
    for (std::size_t i = 0; i < t.rows(); ++i) {
        std::uint64_t m = 0;
        for (std::size_t j = 0; j < t.cols(); ++j) m = std::max(m, t.at(i, j));
        row_max += m;
    }
    for (std::size_t j = 0; j < t.cols(); ++j) {
        std::uint64_t m = 0;
        for (std::size_t i = 0; i < t.rows(); ++i) m = std::max(m, t.at(i, j));
        col_max += m;
    }
    const double two_n = 2.0 * static_cast<double>(t.n());
    return (two_n - static_cast<double>(row_max + col_max)) / two_n;
}

enum class ViNormalization { log_n, none };

/// Variation of information H(A) + H(B) - 2 I(A, B) in nats, divided by ln n
/// unless normalization is `none`.
inline double variation_of_information(const ContingencyTable& t, ViNormalization norm = ViNormalization::log_n) {
    if (t.n() < 2) throw Error("variation of information needs at least two points");
    if (t.is_matching()) return 0.0;
    const double n = static_cast<double>(t.n());
    auto plogp = [n](std::uint64_t c) {
        if (c == 0) return 0.0;
        const double p = static_cast<double>(c) / n;
        return p * std::log(p);
    };
    double h_a = 0.0, h_b = 0.0, mutual = 0.0;
    for (auto s : t.row_sums()) h_a -= plogp(s);
    for (auto s : t.col_sums()) h_b -= plogp(s);
    for (std::size_t i = 0; i < t.rows(); ++i) {
        for (std::size_t j = 0; j < t.cols(); ++j) {
            const auto c = t.at(i, j);
            if (c == 0) continue;
            const double pij = static_cast<double>(c) / n;
            const double pa = static_cast<double>(t.row_sums()[i]) / n;
            const double pb = static_cast<double>(t.col_sums()[j]) / n;
            mutual += pij * std::log(pij / (pa * pb));
        }
    }
    const double vi = std::max(0.0, h_a + h_b - 2.0 * mutual);
    return norm == ViNormalization::log_n ? std::min(1.0, vi / std::log(n)) : vi;
}

}  // namespace kinit
