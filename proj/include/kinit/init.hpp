#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kinit/dataset.hpp"
#include "kinit/kmeans.hpp"
#include "kinit/matrix.hpp"
#include "kinit/random.hpp"

namespace kinit {

enum class Method { forgy, macqueen, maximin, bradley_fayyad, kmeanspp, greedy_kmeanspp, var_part, pca_part };

inline constexpr std::array<Method, 8> all_methods{Method::forgy,    Method::macqueen,        Method::maximin,
                                                   Method::bradley_fayyad, Method::kmeanspp, Method::greedy_kmeanspp,
                                                   Method::var_part, Method::pca_part};

/// Name accepted on the command line.
constexpr std::string_view method_name(Method m) {
    constexpr std::array<std::string_view, 8> names{"forgy", "macqueen", "maximin", "bf",
                                                    "kmeanspp", "greedy", "varpart", "pcapart"};
    return names[static_cast<std::size_t>(m)];
}

/// One-letter code used in ranking strings: F M X B K G V P.
constexpr char method_letter(Method m) { return "FMXBKGVP"[static_cast<std::size_t>(m)]; }

constexpr bool is_deterministic(Method m) { return m == Method::var_part || m == Method::pca_part; }

inline Method parse_method(std::string_view name) {
    for (Method m : all_methods) {
        if (name == method_name(m) || (name.size() == 1 && name[0] == method_letter(m))) return m;
    }
    throw Error("unknown initialization method '" + std::string(name) +
                "' (expected forgy|macqueen|maximin|bf|kmeanspp|greedy|varpart|pcapart)");
}

enum class FirstCenter { random, max_norm };

struct InitConfig {
    Method method = Method::kmeanspp;
    std::size_t k = 2;
    std::uint64_t seed = 0;
    Engine engine = Engine::mt19937_64;
    /// Bradley-Fayyad subset count.
    std::size_t j_subsets = 10;
    /// Greedy k-means++ candidates per round; defaults to 2 + floor(ln k).
    std::optional<std::size_t> candidates;
    FirstCenter first_center = FirstCenter::random;
    /// Convergence settings of the Lloyd runs inside Bradley-Fayyad.
    KMeansConfig kmeans;

    std::size_t candidate_count() const {
        return candidates.value_or(2 + static_cast<std::size_t>(std::floor(std::log(static_cast<double>(k)))));
    }
};

/// K starting centers plus the method and seed that produced them.
struct Centers {
    Matrix coords;
    Method method = Method::forgy;
    std::uint64_t seed = 0;

    std::size_t size() const noexcept { return coords.rows(); }
};

namespace detail {

inline void check_k(const Matrix& points, std::size_t k) {
    if (k < 1) throw Error("k must be at least 1");
    if (k > points.rows()) {
        throw Error("k = " + std::to_string(k) + " exceeds the number of points (" + std::to_string(points.rows()) + ")");
    }
}

inline std::vector<double> mean_of(const Matrix& points, const std::vector<std::size_t>& members) {
    std::vector<double> mean(points.cols(), 0.0);
    for (std::size_t i : members) {
        const auto x = points.row(i);
        for (std::size_t d = 0; d < x.size(); ++d) mean[d] += x[d];
    }
    for (double& v : mean) v /= static_cast<double>(members.size());
    return mean;
}

inline bool same_point(std::span<const double> a, std::span<const double> b) {
    return std::equal(a.begin(), a.end(), b.begin(), b.end());
}

/// Index drawn with probability weight[i] / sum(weight); uniform if all are zero.
inline std::size_t sample_proportional(const std::vector<double>& weight, Rng& rng) {
    double total = 0.0;
    for (double w : weight) total += w;
    if (!(total > 0.0)) return static_cast<std::size_t>(rng.uniform_index(weight.size()));
    const double target = rng.uniform01() * total;
    double cumulative = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < weight.size(); ++i) {
        if (weight[i] <= 0.0) continue;
        cumulative += weight[i];
        last_positive = i;
        if (cumulative > target) return i;
    }
    return last_positive;
}

inline void lower_min_distances(const Matrix& points, std::span<const double> center, std::vector<double>& md) {
    for (std::size_t i = 0; i < points.rows(); ++i) md[i] = std::min(md[i], squared_distance(points.row(i), center));
}

struct CandidateChoice {
    std::size_t position = 0;  // index into the candidate list
    double potential = 0.0;    // SSE to nearest center once the candidate is added
};

/// Candidate whose addition leaves the smallest total squared distance to the
/// nearest center; earlier candidates win ties.
inline CandidateChoice best_candidate(const Matrix& points, const std::vector<double>& md,
                                      const std::vector<std::size_t>& candidates) {
    CandidateChoice best{0, std::numeric_limits<double>::infinity()};
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        const auto x = points.row(candidates[c]);
        double potential = 0.0;
        for (std::size_t i = 0; i < points.rows(); ++i) {
            potential += std::min(md[i], squared_distance(points.row(i), x));
        }
        if (potential < best.potential) best = {c, potential};
    }
    return best;
}

/// Picks up to k points with pairwise-distinct coordinates, each draw uniform
/// over the points not yet drawn. Returns fewer when the data runs out.
inline std::vector<std::size_t> draw_distinct(const Matrix& points, const std::vector<std::size_t>& pool,
                                              std::size_t k, Rng& rng) {
    std::vector<std::size_t> order(pool);
    std::vector<std::size_t> chosen;
    for (std::size_t n = order.size(); n > 0 && chosen.size() < k; --n) {
        const auto j = rng.uniform_index(n);
        std::swap(order[n - 1], order[j]);
        const std::size_t candidate = order[n - 1];
        const bool duplicate = std::any_of(chosen.begin(), chosen.end(), [&](std::size_t c) {
            return same_point(points.row(c), points.row(candidate));
        });
        if (!duplicate) chosen.push_back(candidate);
    }
    return chosen;
}

inline Matrix rows_of(const Matrix& points, const std::vector<std::size_t>& rows) {
    Matrix out(rows.size(), points.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto src = points.row(rows[r]);
        std::copy(src.begin(), src.end(), out.row(r).begin());
    }
    return out;
}

}  // namespace detail

/// Random partition into k non-empty clusters; centers are their centroids.
inline Matrix forgy(const Matrix& points, std::size_t k, Rng& rng) {
    detail::check_k(points, k);
    constexpr int max_attempts = 1000;
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        Assignment labels(points.rows());
        std::vector<std::size_t> counts(k, 0);
        for (auto& l : labels) {
            l = static_cast<ClusterId>(rng.uniform_index(k));
            ++counts[l];
        }
        if (std::find(counts.begin(), counts.end(), 0) != counts.end()) continue;
        Matrix centers(k, points.cols());
        detail::update_centroids(points, labels, centers);
        return centers;
    }
    throw Error("forgy: no random partition with " + std::to_string(k) + " non-empty clusters after " +
                std::to_string(max_attempts) + " attempts");
}

/// k distinct data points drawn uniformly without replacement.
inline Matrix macqueen_random(const Matrix& points, std::size_t k, Rng& rng) {
    detail::check_k(points, k);
    std::vector<std::size_t> all(points.rows());
    std::iota(all.begin(), all.end(), 0);
    const auto chosen = detail::draw_distinct(points, all, k, rng);
    if (chosen.size() < k) {
        throw Error("macqueen: only " + std::to_string(chosen.size()) + " distinct points, " +
                    std::to_string(k) + " centers requested");
    }
    return detail::rows_of(points, chosen);
}

/// Each new center is the point farthest from the centers chosen so far.
inline Matrix maximin(const Matrix& points, std::size_t k, Rng& rng, FirstCenter rule = FirstCenter::random) {
    detail::check_k(points, k);
    std::size_t first = 0;
    if (rule == FirstCenter::max_norm) {
        double best = -1.0;
        for (std::size_t i = 0; i < points.rows(); ++i) {
            const double n = squared_norm(points.row(i));
            if (n > best) {
                best = n;
                first = i;
            }
        }
    } else {
        first = static_cast<std::size_t>(rng.uniform_index(points.rows()));
    }
    std::vector<std::size_t> chosen{first};
    if (k == 1) return detail::rows_of(points, chosen);
    std::vector<double> md(points.rows(), std::numeric_limits<double>::infinity());
    detail::lower_min_distances(points, points.row(first), md);
    while (chosen.size() < k) {
        const auto next = static_cast<std::size_t>(std::max_element(md.begin(), md.end()) - md.begin());
        chosen.push_back(next);
        detail::lower_min_distances(points, points.row(next), md);
    }
    return detail::rows_of(points, chosen);
}

/// k-means++: first center uniform, then D^2 sampling.
inline Matrix kmeanspp(const Matrix& points, std::size_t k, Rng& rng) {
    detail::check_k(points, k);
    std::vector<std::size_t> chosen{static_cast<std::size_t>(rng.uniform_index(points.rows()))};
    std::vector<double> md(points.rows(), std::numeric_limits<double>::infinity());
    detail::lower_min_distances(points, points.row(chosen[0]), md);
    while (chosen.size() < k) {
        const std::size_t next = detail::sample_proportional(md, rng);
        chosen.push_back(next);
        detail::lower_min_distances(points, points.row(next), md);
    }
    return detail::rows_of(points, chosen);
}

/// Greedy k-means++: each round draws `candidates` points by D^2 sampling and
/// keeps the one that lowers the SSE the most. One candidate reproduces kmeanspp.
inline Matrix greedy_kmeanspp(const Matrix& points, std::size_t k, Rng& rng, std::size_t candidates) {
    detail::check_k(points, k);
    if (candidates < 1) throw Error("greedy k-means++ needs at least one candidate per round");
    std::vector<std::size_t> chosen{static_cast<std::size_t>(rng.uniform_index(points.rows()))};
    std::vector<double> md(points.rows(), std::numeric_limits<double>::infinity());
    detail::lower_min_distances(points, points.row(chosen[0]), md);
    std::vector<std::size_t> pool(candidates);
    while (chosen.size() < k) {
        for (auto& c : pool) c = detail::sample_proportional(md, rng);
        const std::size_t next = pool[candidates == 1 ? 0 : detail::best_candidate(points, md, pool).position];
        chosen.push_back(next);
        detail::lower_min_distances(points, points.row(next), md);
    }
    return detail::rows_of(points, chosen);
}

/// Bradley-Fayyad refinement: cluster J random subsets, then cluster the pooled
/// subset solutions J times and keep the solution with the least pooled SSE.
inline Matrix bradley_fayyad(const Matrix& points, std::size_t k, std::size_t j_subsets, Rng& rng,
                             const KMeansConfig& config = {}) {
    detail::check_k(points, k);
    if (j_subsets < 1) throw Error("bradley-fayyad needs at least one subset");
    if (k > points.rows() / j_subsets) {
        throw Error("bradley-fayyad: " + std::to_string(j_subsets) + " subsets of " + std::to_string(points.rows()) +
                    " points cannot each hold " + std::to_string(k) + " centers; use a smaller J or k");
    }
    std::vector<std::size_t> order(points.rows());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order.begin(), order.end());

    Matrix pooled(0, 0);
    std::vector<Matrix> solutions;
    const std::size_t base = points.rows() / j_subsets;
    const std::size_t extra = points.rows() % j_subsets;
    std::size_t offset = 0;
    for (std::size_t s = 0; s < j_subsets; ++s) {
        const std::size_t len = base + (s < extra ? 1 : 0);
        std::vector<std::size_t> members(order.begin() + static_cast<std::ptrdiff_t>(offset),
                                         order.begin() + static_cast<std::ptrdiff_t>(offset + len));
        offset += len;
        std::sort(members.begin(), members.end());
        const Matrix subset = detail::rows_of(points, members);
        std::vector<std::size_t> local(members.size());
        std::iota(local.begin(), local.end(), 0);
        auto seeds = detail::draw_distinct(subset, local, k, rng);
        // A subset with fewer than k distinct points repeats some of them.
        while (seeds.size() < k) seeds.push_back(local[rng.uniform_index(local.size())]);
        auto result = kmeans(subset, detail::rows_of(subset, seeds), config);
        for (std::size_t r = 0; r < k; ++r) pooled.append_row(result.centers.row(r));
        solutions.push_back(std::move(result.centers));
    }

    Matrix best;
    double best_sse = std::numeric_limits<double>::infinity();
    for (const auto& start : solutions) {
        auto refined = kmeans(pooled, start, config);
        if (refined.sse < best_sse) {
            best_sse = refined.sse;
            best = std::move(refined.centers);
        }
    }
    return best;
}

namespace detail {

struct Cell {
    std::vector<std::size_t> members;
    std::vector<double> mean;
    double sse = 0.0;
};

inline Cell make_cell(const Matrix& points, std::vector<std::size_t> members) {
    Cell c{std::move(members), {}, 0.0};
    c.mean = mean_of(points, c.members);
    for (std::size_t i : c.members) c.sse += squared_distance(points.row(i), c.mean);
    return c;
}

/// Attribute with the largest spread in the cell; lowest index on ties.
inline std::size_t widest_axis(const Matrix& points, const Cell& cell) {
    std::vector<double> spread(points.cols(), 0.0);
    for (std::size_t i : cell.members) {
        const auto x = points.row(i);
        for (std::size_t d = 0; d < x.size(); ++d) {
            const double diff = x[d] - cell.mean[d];
            spread[d] += diff * diff;
        }
    }
    return static_cast<std::size_t>(std::max_element(spread.begin(), spread.end()) - spread.begin());
}

/// Repeatedly bisects the highest-SSE cell until there are k cells.
/// `make_rule(points, cell)` returns a predicate that is true for points that
/// stay in the first half. Cells that cannot be split are passed over.
template <class SplitRule>
Matrix divisive_split(const Matrix& points, std::size_t k, SplitRule make_rule, std::string_view who) {
    check_k(points, k);
    std::vector<std::size_t> all(points.rows());
    std::iota(all.begin(), all.end(), 0);
    std::vector<Cell> cells{make_cell(points, std::move(all))};
    while (cells.size() < k) {
        std::vector<std::size_t> order(cells.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return cells[a].sse > cells[b].sse; });
        bool split = false;
        for (std::size_t c : order) {
            if (!(cells[c].sse > 0.0)) break;
            const auto goes_left = make_rule(points, cells[c]);
            std::vector<std::size_t> left, right;
            for (std::size_t i : cells[c].members) (goes_left(points.row(i)) ? left : right).push_back(i);
            if (left.empty() || right.empty()) continue;
            cells[c] = make_cell(points, std::move(left));
            cells.push_back(make_cell(points, std::move(right)));
            split = true;
            break;
        }
        if (!split) {
            throw Error(std::string(who) + ": only " + std::to_string(cells.size()) +
                        " splittable clusters, " + std::to_string(k) + " requested");
        }
    }
    Matrix centers(k, points.cols());
    for (std::size_t c = 0; c < k; ++c) std::copy(cells[c].mean.begin(), cells[c].mean.end(), centers.row(c).begin());
    return centers;
}

}  // namespace detail

/// Principal eigenvector of the covariance of `members` by power iteration,
/// starting from the attribute axis of largest variance. Stops when successive
/// unit estimates differ by less than `tolerance` or after `max_iters` steps.
inline std::vector<double> principal_direction(const Matrix& points, const std::vector<std::size_t>& members,
                                               double tolerance = 1e-10, int max_iters = 1000) {
    const auto cell = detail::make_cell(points, members);
    const std::size_t dims = points.cols();
    Matrix cov(dims, dims);
    for (std::size_t i : members) {
        const auto x = points.row(i);
        for (std::size_t a = 0; a < dims; ++a) {
            const double da = x[a] - cell.mean[a];
            for (std::size_t b = a; b < dims; ++b) cov(a, b) += da * (x[b] - cell.mean[b]);
        }
    }
    for (std::size_t a = 0; a < dims; ++a) {
        for (std::size_t b = 0; b < a; ++b) cov(a, b) = cov(b, a);
    }
    std::vector<double> v(dims, 0.0), next(dims);
    v[detail::widest_axis(points, cell)] = 1.0;
    for (int it = 0; it < max_iters; ++it) {
        for (std::size_t a = 0; a < dims; ++a) {
            double s = 0.0;
            for (std::size_t b = 0; b < dims; ++b) s += cov(a, b) * v[b];
            next[a] = s;
        }
        const double norm = std::sqrt(squared_norm(next));
        if (!(norm > 0.0)) break;
        for (double& x : next) x /= norm;
        const double change = std::sqrt(squared_distance(next, v));
        v.swap(next);
        if (change < tolerance) break;
    }
    return v;
}

/// Var-Part: split at the cell mean along the attribute of largest variance.
inline Matrix var_part(const Matrix& points, std::size_t k) {
    return detail::divisive_split(
        points, k,
        [](const Matrix& pts, const detail::Cell& cell) {
            const std::size_t axis = detail::widest_axis(pts, cell);
            const double threshold = cell.mean[axis];
            return [axis, threshold](std::span<const double> x) { return x[axis] <= threshold; };
        },
        "varpart");
}

/// PCA-Part: split through the cell centroid, orthogonal to the principal eigenvector.
inline Matrix pca_part(const Matrix& points, std::size_t k) {
    return detail::divisive_split(
        points, k,
        [](const Matrix& pts, const detail::Cell& cell) {
            auto dir = principal_direction(pts, cell.members);
            return [dir = std::move(dir), mean = cell.mean](std::span<const double> x) {
                double proj = 0.0;
                for (std::size_t d = 0; d < x.size(); ++d) proj += (x[d] - mean[d]) * dir[d];
                return proj <= 0.0;
            };
        },
        "pcapart");
}

/// Runs the configured method with a generator seeded from config.seed.
inline Centers initialize(const Matrix& points, const InitConfig& config) {
    Rng rng(config.seed, config.engine);
    Matrix c;
    switch (config.method) {
        case Method::forgy: c = forgy(points, config.k, rng); break;
        case Method::macqueen: c = macqueen_random(points, config.k, rng); break;
        case Method::maximin: c = maximin(points, config.k, rng, config.first_center); break;
        case Method::bradley_fayyad: c = bradley_fayyad(points, config.k, config.j_subsets, rng, config.kmeans); break;
        case Method::kmeanspp: c = kmeanspp(points, config.k, rng); break;
        case Method::greedy_kmeanspp: c = greedy_kmeanspp(points, config.k, rng, config.candidate_count()); break;
        case Method::var_part: c = var_part(points, config.k); break;
        case Method::pca_part: c = pca_part(points, config.k); break;
    }
    return Centers{std::move(c), config.method, config.seed};
}

inline Centers initialize(const DataSet& data, const InitConfig& config) {
    return initialize(data.points(), config);
}

}  // namespace kinit
