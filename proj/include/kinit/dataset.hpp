#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "kinit/matrix.hpp"

namespace kinit {

/// N x D matrix of finite reals with optional dense class labels 0..K'-1.
/// Immutable once constructed.
class DataSet {
public:
    DataSet(Matrix points, std::optional<Assignment> labels = std::nullopt, std::string name = {})
        : points_(std::move(points)), labels_(std::move(labels)), name_(std::move(name)) {
        validate();
    }

    const Matrix& points() const noexcept { return points_; }
    std::span<const double> point(std::size_t i) const noexcept { return points_.row(i); }
    std::size_t size() const noexcept { return points_.rows(); }
    std::size_t dims() const noexcept { return points_.cols(); }
    const std::string& name() const noexcept { return name_; }

    bool has_labels() const noexcept { return labels_.has_value(); }
    const Assignment& labels() const {
        if (!labels_) throw Error("data set '" + name_ + "' has no class labels");
        return *labels_;
    }
    const std::optional<Assignment>& maybe_labels() const noexcept { return labels_; }
    std::size_t num_classes() const noexcept { return num_classes_; }

    DataSet with_name(std::string name) const { return DataSet(points_, labels_, std::move(name)); }

    friend bool operator==(const DataSet& a, const DataSet& b) {
        return a.points_ == b.points_ && a.labels_ == b.labels_;
    }

private:
    void validate() {
        if (points_.rows() == 0 || points_.cols() == 0) {
            throw Error("data set '" + name_ + "' must have at least one point and one attribute");
        }
        for (std::size_t i = 0; i < points_.rows(); ++i) {
            for (double v : points_.row(i)) {
                if (!std::isfinite(v)) {
                    throw Error("data set '" + name_ + "': non-finite value in row " + std::to_string(i));
                }
            }
        }
        if (!labels_) return;
        if (labels_->size() != points_.rows()) {
            throw Error("data set '" + name_ + "': " + std::to_string(labels_->size()) +
                        " labels for " + std::to_string(points_.rows()) + " points");
        }
        const ClusterId max_label = *std::max_element(labels_->begin(), labels_->end());
        std::vector<bool> seen(std::size_t{max_label} + 1, false);
        for (ClusterId l : *labels_) seen[l] = true;
        if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
            throw Error("data set '" + name_ + "': class ids must cover 0.." + std::to_string(max_label));
        }
        num_classes_ = seen.size();
    }

    Matrix points_;
    std::optional<Assignment> labels_;
    std::string name_;
    std::size_t num_classes_ = 0;
};

struct CsvOptions {
    static constexpr std::size_t last_column = std::numeric_limits<std::size_t>::max();

    char delimiter = ',';
    bool has_header = false;
    /// Zero-based index, `last_column`, or nullopt for unlabeled data.
    std::optional<std::size_t> label_column;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\"'");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\"'");
    return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split(std::string_view line, char delimiter) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(delimiter, start);
        fields.push_back(trim(line.substr(start, pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return fields;
}

inline std::optional<double> parse_real(std::string_view s) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(value)) return std::nullopt;
    return value;
}

/// Dense ids for raw label strings: numeric order when every label is a
/// number, lexicographic order otherwise.
inline Assignment encode_labels(const std::vector<std::string>& raw) {
    std::vector<std::string> distinct(raw);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    const bool numeric = std::all_of(distinct.begin(), distinct.end(),
                                     [](const std::string& s) { return parse_real(s).has_value(); });
    if (numeric) {
        std::stable_sort(distinct.begin(), distinct.end(), [](const std::string& a, const std::string& b) {
            return *parse_real(a) < *parse_real(b);
        });
    }
    std::map<std::string, ClusterId> ids;
    for (std::size_t i = 0; i < distinct.size(); ++i) ids.emplace(distinct[i], static_cast<ClusterId>(i));
    Assignment out;
    out.reserve(raw.size());
    for (const auto& s : raw) out.push_back(ids.at(s));
    return out;
}

}  // namespace detail

/// Parses delimited text. Blank lines are ignored; every other row must have
/// the same number of fields.
inline DataSet parse_csv(std::istream& in, const CsvOptions& options, std::string name = {}) {
    std::vector<double> values;
    std::vector<std::string> raw_labels;
    std::size_t width = 0;
    std::size_t rows = 0;
    std::size_t line_no = 0;
    std::string line;
    bool header_pending = options.has_header;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        if (header_pending) {
            header_pending = false;
            continue;
        }
        const auto fields = detail::split(line, options.delimiter);
        if (width == 0) {
            width = fields.size();
            if (options.label_column && *options.label_column != CsvOptions::last_column &&
                *options.label_column >= width) {
                throw Error(name + ": label column " + std::to_string(*options.label_column) +
                            " out of range for rows of width " + std::to_string(width));
            }
            if (options.label_column && width < 2) {
                throw Error(name + ": rows need at least one attribute besides the label");
            }
        } else if (fields.size() != width) {
            throw Error(name + ": line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                        " fields, expected " + std::to_string(width));
        }
        std::optional<std::size_t> label_at;
        if (options.label_column) {
            label_at = *options.label_column == CsvOptions::last_column ? width - 1 : *options.label_column;
        }
        for (std::size_t c = 0; c < fields.size(); ++c) {
            if (label_at && c == *label_at) {
                raw_labels.emplace_back(fields[c]);
                continue;
            }
            const auto v = detail::parse_real(fields[c]);
            if (!v) {
                throw Error(name + ": line " + std::to_string(line_no) + ", column " + std::to_string(c + 1) +
                            ": cannot parse '" + std::string(fields[c]) + "' as a finite real");
            }
            values.push_back(*v);
        }
        ++rows;
    }
    if (rows == 0) throw Error(name + ": no data rows");
    const std::size_t dims = options.label_column ? width - 1 : width;
    std::optional<Assignment> labels;
    if (options.label_column) labels = detail::encode_labels(raw_labels);
    return DataSet(Matrix(rows, dims, std::move(values)), std::move(labels), std::move(name));
}

/// Loads a data set from a file. The data set is named after the file stem.
inline DataSet load_csv(const std::string& path, const CsvOptions& options = {}) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    auto stem = path.substr(path.find_last_of('/') + 1);
    stem = stem.substr(0, stem.find_last_of('.'));
    return parse_csv(in, options, stem);
}

/// Writes points (round-trip precision) and, if present, labels as the last column.
inline void write_csv(std::ostream& out, const DataSet& data, char delimiter = ',') {
    char buf[32];
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto row = data.point(i);
        for (std::size_t d = 0; d < row.size(); ++d) {
            if (d) out << delimiter;
            std::snprintf(buf, sizeof buf, "%.17g", row[d]);
            out << buf;
        }
        if (data.has_labels()) out << delimiter << data.labels()[i];
        out << '\n';
    }
}

inline void save_csv(const std::string& path, const DataSet& data, char delimiter = ',') {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    write_csv(out, data, delimiter);
    if (!out) throw Error("write failed for '" + path + "'");
}

/// Per-attribute ranges used by min-max scaling.
struct AttributeRange {
    std::vector<double> min;
    std::vector<double> max;

    static AttributeRange of(const Matrix& m) {
        AttributeRange r{std::vector<double>(m.row(0).begin(), m.row(0).end()),
                         std::vector<double>(m.row(0).begin(), m.row(0).end())};
        for (std::size_t i = 1; i < m.rows(); ++i) {
            const auto row = m.row(i);
            for (std::size_t d = 0; d < row.size(); ++d) {
                r.min[d] = std::min(r.min[d], row[d]);
                r.max[d] = std::max(r.max[d], row[d]);
            }
        }
        return r;
    }

    /// Constant attributes use divisor 1, so they map to 0.
    double scale(std::size_t d) const noexcept {
        const double range = max[d] - min[d];
        return range > 0.0 ? range : 1.0;
    }

    Matrix apply(const Matrix& m) const {
        Matrix out(m.rows(), m.cols());
        for (std::size_t i = 0; i < m.rows(); ++i) {
            const auto src = m.row(i);
            auto dst = out.row(i);
            for (std::size_t d = 0; d < src.size(); ++d) dst[d] = (src[d] - min[d]) / scale(d);
        }
        return out;
    }
};

/// Maps every attribute onto [0, 1] by (x - min) / (max - min). Labels are kept.
inline DataSet minmax_normalize(const DataSet& data) {
    const auto range = AttributeRange::of(data.points());
    return DataSet(range.apply(data.points()), data.maybe_labels(), data.name());
}

}  // namespace kinit
