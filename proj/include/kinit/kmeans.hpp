#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "kinit/dataset.hpp"
#include "kinit/matrix.hpp"

namespace kinit {

struct KMeansConfig {
    int max_iters = 100;
    /// Relative SSE improvement threshold; +inf stops after one iteration.
    double eps = 1e-6;
    bool accelerate = true;

    void validate() const {
        if (max_iters < 1) throw Error("max_iters must be at least 1");
        if (!(eps >= 0.0)) throw Error("eps must be non-negative");
    }
};

enum class StopReason { eps, max_iters };

struct ClusteringResult {
    Matrix centers;
    Assignment assignment;
    double sse = 0.0;
    /// SSE of the nearest-center assignment to the initial centers.
    double initial_sse = 0.0;
    int iterations = 0;
    StopReason converged_by = StopReason::max_iters;
    /// Post-update SSE of every iteration.
    std::vector<double> sse_trace;
    /// Point-to-center distance evaluations spent in each iteration's
    /// assignment step (partial evaluations count as one).
    std::vector<std::uint64_t> distance_evals;
    std::size_t empty_cluster_repairs = 0;
};

struct AssignResult {
    Assignment assignment;
    double sse = 0.0;
};

/// Process-wide audit of every Lloyd run: how many traces were checked and
/// how many rose between consecutive iterations.
struct TraceAudit {
    /// Relative slack for rounding noise when comparing consecutive SSE values.
    static constexpr double tolerance = 1e-12;
    std::atomic<std::uint64_t> runs{0};
    std::atomic<std::uint64_t> violations{0};
    std::atomic<std::uint64_t> strict_violations{0};
};

inline TraceAudit& trace_audit() {
    static TraceAudit audit;
    return audit;
}

inline bool is_non_increasing(const std::vector<double>& trace, double rel_tol = 0.0) {
    for (std::size_t i = 1; i < trace.size(); ++i) {
        if (trace[i] > trace[i - 1] + rel_tol * std::abs(trace[i - 1])) return false;
    }
    return true;
}

namespace detail {

inline void check_dims(const Matrix& points, const Matrix& centers) {
    if (centers.rows() == 0) throw Error("at least one center is required");
    if (centers.cols() != points.cols()) {
        throw Error("dimension mismatch: points have " + std::to_string(points.cols()) +
                    " attributes, centers have " + std::to_string(centers.cols()));
    }
}

/// Nearest center by squared distance; ties go to the lowest index.
inline ClusterId nearest(std::span<const double> x, const Matrix& centers, double& best_d) {
    ClusterId best = 0;
    best_d = squared_distance(x, centers.row(0));
    for (std::size_t j = 1; j < centers.rows(); ++j) {
        const double d = squared_distance(x, centers.row(j));
        if (d < best_d) {
            best_d = d;
            best = static_cast<ClusterId>(j);
        }
    }
    return best;
}

inline void update_centroids(const Matrix& points, const Assignment& assignment, Matrix& centers) {
    const std::size_t k = centers.rows();
    Matrix sums(k, points.cols());
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < points.rows(); ++i) {
        auto s = sums.row(assignment[i]);
        const auto x = points.row(i);
        for (std::size_t d = 0; d < x.size(); ++d) s[d] += x[d];
        ++counts[assignment[i]];
    }
    for (std::size_t j = 0; j < k; ++j) {
        if (counts[j] == 0) continue;  // unrepairable empty cluster keeps its center
        auto c = centers.row(j);
        const auto s = sums.row(j);
        const double n = static_cast<double>(counts[j]);
        for (std::size_t d = 0; d < c.size(); ++d) c[d] = s[d] / n;
    }
}

/// Plain nearest-center assignment, N*K distances per pass.
class NaiveAssigner {
public:
    std::uint64_t full_assign(const Matrix& points, const Matrix& centers, Assignment& assignment) {
        double d = 0.0;
        for (std::size_t i = 0; i < points.rows(); ++i) assignment[i] = nearest(points.row(i), centers, d);
        return static_cast<std::uint64_t>(points.rows()) * centers.rows();
    }
    std::uint64_t step_assign(const Matrix& points, const Matrix& centers, Assignment& assignment) {
        return full_assign(points, centers, assignment);
    }
    void centers_moved(const Matrix&, const Matrix&) {}
};

/// Exact accelerated assignment.
///
/// Each point keeps an upper bound on the distance to its assigned center and
/// a lower bound on the distance to every other center. Centers that move
/// loosen the bounds. A point is rescanned only when the bounds cannot prove
/// that its assignment is unchanged. A rescan skips center j when
/// d(c_best, c_j) > 2 d(x, c_best) and otherwise abandons the squared-distance
/// sum as soon as it can no longer beat the current best. Results, including
/// lowest-index tie-breaking, are identical to NaiveAssigner.
class AcceleratedAssigner {
public:
    std::uint64_t full_assign(const Matrix& points, const Matrix& centers, Assignment& assignment) {
        prepare(points, centers);
        std::uint64_t evals = 0;
        for (std::size_t i = 0; i < points.rows(); ++i) {
            const auto x = points.row(i);
            const double d0 = squared_distance(x, centers.row(0));
            ++evals;
            assignment[i] = scan(x, centers, 0, d0, i, evals);
        }
        return evals;
    }

    std::uint64_t step_assign(const Matrix& points, const Matrix& centers, Assignment& assignment) {
        if (upper_.size() != points.rows()) return full_assign(points, centers, assignment);
        prepare(points, centers);
        std::uint64_t evals = 0;
        for (std::size_t i = 0; i < points.rows(); ++i) {
            const ClusterId a = assignment[i];
            const double bound = std::max(half_gap_[a], lower_[i]);
            if (proves_closer(upper_[i], bound)) continue;
            const auto x = points.row(i);
            const double da = squared_distance(x, centers.row(a));
            ++evals;
            upper_[i] = std::sqrt(da);
            if (proves_closer(upper_[i], bound)) continue;
            assignment[i] = scan(x, centers, a, da, i, evals);
        }
        return evals;
    }

    void centers_moved(const Matrix& before, const Matrix& after) {
        const std::size_t k = after.rows();
        moved_.assign(k, 0.0);
        for (std::size_t j = 0; j < k; ++j) moved_[j] = std::sqrt(squared_distance(before.row(j), after.row(j)));
        std::size_t top = 0;
        for (std::size_t j = 1; j < k; ++j) {
            if (moved_[j] > moved_[top]) top = j;
        }
        double runner_up = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            if (j != top) runner_up = std::max(runner_up, moved_[j]);
        }
        for (std::size_t i = 0; i < upper_.size(); ++i) {
            const ClusterId a = (*owner_)[i];
            upper_[i] += moved_[a];
            lower_[i] -= (a == top) ? runner_up : moved_[top];
        }
    }

    /// The assignment whose bounds are tracked; needed to apply center moves.
    void track(const Assignment& assignment) { owner_ = &assignment; }

private:
    static constexpr double margin = 1e-9;

    static bool proves_closer(double upper, double bound) noexcept {
        return upper * (1.0 + margin) < bound * (1.0 - margin);
    }

    void prepare(const Matrix& points, const Matrix& centers) {
        const std::size_t k = centers.rows();
        if (upper_.size() != points.rows()) {
            upper_.assign(points.rows(), 0.0);
            lower_.assign(points.rows(), 0.0);
        }
        cc_.assign(k * k, 0.0);
        half_gap_.assign(k, std::numeric_limits<double>::infinity());
        for (std::size_t a = 0; a < k; ++a) {
            for (std::size_t b = a + 1; b < k; ++b) {
                const double d = squared_distance(centers.row(a), centers.row(b));
                cc_[a * k + b] = cc_[b * k + a] = d;
                const double half = 0.5 * std::sqrt(d);
                half_gap_[a] = std::min(half_gap_[a], half);
                half_gap_[b] = std::min(half_gap_[b], half);
            }
        }
    }

    /// Lexicographic minimum of (distance, index) over all centers, starting
    /// from the known exact distance to `start`. Refreshes both bounds of point i.
    ClusterId scan(std::span<const double> x, const Matrix& centers, ClusterId start, double start_d,
                   std::size_t i, std::uint64_t& evals) {
        const std::size_t k = centers.rows();
        ClusterId best = start;
        double best_d = start_d;
        double second = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < k; ++j) {
            if (j == start) continue;
            const double cc = cc_[best * k + j];
            if (cc > 4.0 * best_d * (1.0 + margin)) {
                second = std::min(second, std::sqrt(cc) - std::sqrt(best_d));
                continue;
            }
            // j wins ties only against a higher index.
            const double bound = j < best ? best_d : std::nextafter(best_d, -1.0);
            bool complete = false;
            const double d = squared_distance_bounded(x, centers.row(j), bound, complete);
            ++evals;
            if (d <= bound) {
                second = std::min(second, std::sqrt(best_d));
                best = static_cast<ClusterId>(j);
                best_d = d;
            } else {
                second = std::min(second, std::sqrt(d));
            }
        }
        upper_[i] = std::sqrt(best_d);
        lower_[i] = second;
        return best;
    }

    std::vector<double> upper_, lower_, cc_, half_gap_, moved_;
    const Assignment* owner_ = nullptr;
};

/// Moves each empty cluster's center onto the point farthest from its own
/// center, then reassigns everything. Returns the number of relocations.
template <class Assigner>
std::size_t repair_empty_clusters(const Matrix& points, Matrix& centers, Assignment& assignment,
                                  Assigner& assigner, std::uint64_t& evals) {
    const std::size_t k = centers.rows();
    std::size_t repairs = 0;
    for (std::size_t attempt = 0; attempt < k; ++attempt) {
        std::vector<std::size_t> counts(k, 0);
        for (ClusterId a : assignment) ++counts[a];
        const auto empty = std::find(counts.begin(), counts.end(), 0);
        if (empty == counts.end()) break;
        std::size_t far = 0;
        double far_d = -1.0;
        for (std::size_t i = 0; i < points.rows(); ++i) {
            const double d = squared_distance(points.row(i), centers.row(assignment[i]));
            if (d > far_d) {
                far_d = d;
                far = i;
            }
        }
        if (far_d <= 0.0) break;  // all points sit on centers; nothing to move
        const auto src = points.row(far);
        std::copy(src.begin(), src.end(), centers.row(static_cast<std::size_t>(empty - counts.begin())).begin());
        evals += assigner.full_assign(points, centers, assignment);
        ++repairs;
    }
    return repairs;
}

template <class Assigner>
ClusteringResult run_lloyd(const Matrix& points, const Matrix& initial, const KMeansConfig& config,
                           Assigner& assigner) {
    config.validate();
    check_dims(points, initial);
    if (initial.rows() > points.rows()) {
        throw Error("cannot place " + std::to_string(initial.rows()) + " centers on " +
                    std::to_string(points.rows()) + " points");
    }
    ClusteringResult r;
    r.centers = initial;
    r.assignment.assign(points.rows(), 0);
    if constexpr (requires { assigner.track(r.assignment); }) assigner.track(r.assignment);

    std::uint64_t evals = assigner.full_assign(points, r.centers, r.assignment);
    r.initial_sse = 0.0;
    for (std::size_t i = 0; i < points.rows(); ++i) {
        r.initial_sse += squared_distance(points.row(i), r.centers.row(r.assignment[i]));
    }
    double previous = r.initial_sse;
    for (int iter = 1;; ++iter) {
        if (iter > 1) evals = assigner.step_assign(points, r.centers, r.assignment);
        r.empty_cluster_repairs += repair_empty_clusters(points, r.centers, r.assignment, assigner, evals);
        r.distance_evals.push_back(evals);

        const Matrix before = r.centers;
        update_centroids(points, r.assignment, r.centers);
        assigner.centers_moved(before, r.centers);

        double sse = 0.0;
        for (std::size_t i = 0; i < points.rows(); ++i) {
            sse += squared_distance(points.row(i), r.centers.row(r.assignment[i]));
        }
        r.sse_trace.push_back(sse);
        r.iterations = iter;
        const double improvement = sse > 0.0 ? (previous - sse) / sse : 0.0;
        if (improvement <= config.eps) {
            r.converged_by = StopReason::eps;
            break;
        }
        if (iter >= config.max_iters) {
            r.converged_by = StopReason::max_iters;
            break;
        }
        previous = sse;
    }
    r.sse = r.sse_trace.back();

    auto& audit = trace_audit();
    ++audit.runs;
    std::vector<double> full{r.initial_sse};
    full.insert(full.end(), r.sse_trace.begin(), r.sse_trace.end());
    if (!is_non_increasing(full)) ++audit.strict_violations;
    if (!is_non_increasing(full, TraceAudit::tolerance)) ++audit.violations;
    return r;
}

}  // namespace detail

/// Nearest-center assignment (ties to the lowest index) and its SSE.
inline AssignResult assign_points(const Matrix& points, const Matrix& centers) {
    detail::check_dims(points, centers);
    AssignResult r;
    r.assignment.resize(points.rows());
    for (std::size_t i = 0; i < points.rows(); ++i) {
        double d = 0.0;
        r.assignment[i] = detail::nearest(points.row(i), centers, d);
        r.sse += d;
    }
    return r;
}

inline AssignResult assign_points(const DataSet& data, const Matrix& centers) {
    return assign_points(data.points(), centers);
}

/// Sum of squared distances of every point to the center of its cluster.
inline double compute_sse(const Matrix& points, const Assignment& assignment, const Matrix& centers) {
    if (assignment.size() != points.rows()) throw Error("assignment length does not match point count");
    detail::check_dims(points, centers);
    double sse = 0.0;
    for (std::size_t i = 0; i < points.rows(); ++i) {
        if (assignment[i] >= centers.rows()) {
            throw Error("cluster id " + std::to_string(assignment[i]) + " out of range for " +
                        std::to_string(centers.rows()) + " centers");
        }
        sse += squared_distance(points.row(i), centers.row(assignment[i]));
    }
    return sse;
}

inline double compute_sse(const DataSet& data, const Assignment& assignment, const Matrix& centers) {
    return compute_sse(data.points(), assignment, centers);
}

/// Lloyd's algorithm with a full N*K assignment pass per iteration.
inline ClusteringResult lloyd(const Matrix& points, const Matrix& initial, const KMeansConfig& config = {}) {
    detail::NaiveAssigner assigner;
    return detail::run_lloyd(points, initial, config, assigner);
}

/// Same result as lloyd(), with distance work pruned by bounds.
inline ClusteringResult lloyd_accelerated(const Matrix& points, const Matrix& initial,
                                          const KMeansConfig& config = {}) {
    detail::AcceleratedAssigner assigner;
    return detail::run_lloyd(points, initial, config, assigner);
}

/// Dispatches on config.accelerate.
inline ClusteringResult kmeans(const Matrix& points, const Matrix& initial, const KMeansConfig& config = {}) {
    return config.accelerate ? lloyd_accelerated(points, initial, config) : lloyd(points, initial, config);
}

inline ClusteringResult lloyd(const DataSet& data, const Matrix& initial, const KMeansConfig& config = {}) {
    return lloyd(data.points(), initial, config);
}
inline ClusteringResult lloyd_accelerated(const DataSet& data, const Matrix& initial,
                                          const KMeansConfig& config = {}) {
    return lloyd_accelerated(data.points(), initial, config);
}
inline ClusteringResult kmeans(const DataSet& data, const Matrix& initial, const KMeansConfig& config = {}) {
    return kmeans(data.points(), initial, config);
}

}  // namespace kinit
