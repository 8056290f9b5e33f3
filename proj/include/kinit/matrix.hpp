#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace kinit {

/// Every failure raised by the library. Messages are meant for end users.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using ClusterId = std::uint32_t;
using Assignment = std::vector<ClusterId>;

/// Dense row-major matrix of doubles. One row per point.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
        : rows_(rows), cols_(cols), values_(std::move(values)) {
        if (values_.size() != rows_ * cols_) {
            throw Error("matrix: value count does not match " + std::to_string(rows_) + "x" +
                        std::to_string(cols_));
        }
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return rows_ == 0; }

    std::span<const double> row(std::size_t i) const noexcept {
        return {values_.data() + i * cols_, cols_};
    }
    std::span<double> row(std::size_t i) noexcept { return {values_.data() + i * cols_, cols_}; }

    double operator()(std::size_t i, std::size_t j) const noexcept { return values_[i * cols_ + j]; }
    double& operator()(std::size_t i, std::size_t j) noexcept { return values_[i * cols_ + j]; }

    const std::vector<double>& values() const noexcept { return values_; }

    void append_row(std::span<const double> r) {
        if (rows_ == 0 && cols_ == 0) cols_ = r.size();
        if (r.size() != cols_) throw Error("matrix: appended row has wrong width");
        values_.insert(values_.end(), r.begin(), r.end());
        ++rows_;
    }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
};

/// Squared Euclidean distance, accumulated in dimension order.
inline double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
    double sum = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d) {
        const double diff = a[d] - b[d];
        sum += diff * diff;
    }
    return sum;
}

/// Same accumulation order as squared_distance, but gives up as soon as the
/// running sum exceeds `bound`. The returned value is then a lower bound and
/// `complete` is false.
inline double squared_distance_bounded(std::span<const double> a, std::span<const double> b,
                                       double bound, bool& complete) noexcept {
    double sum = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d) {
        const double diff = a[d] - b[d];
        sum += diff * diff;
        if (sum > bound) {
            complete = d + 1 == a.size();
            return sum;
        }
    }
    complete = true;
    return sum;
}

inline double squared_norm(std::span<const double> a) noexcept {
    double sum = 0.0;
    for (double v : a) sum += v * v;
    return sum;
}

}  // namespace kinit
