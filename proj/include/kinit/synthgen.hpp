#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "kinit/dataset.hpp"
#include "kinit/kmeans.hpp"
#include "kinit/random.hpp"
#include "kinit/validity.hpp"

namespace kinit {

/// Spherical Gaussian mixture with equal weights and unit component deviation.
struct MixtureSpec {
    std::size_t n_points = 1024;
    std::size_t n_dims = 2;
    std::size_t n_clusters = 4;
    /// Minimum distance between component means, in component standard deviations.
    double separation = 4.0;
    std::uint64_t seed = 0;
    Engine engine = Engine::mt19937_64;

    void validate() const {
        if (n_points < 1 || n_dims < 1 || n_clusters < 1) {
            throw Error("mixture: point, dimension and cluster counts must be positive");
        }
        if (n_clusters > n_points) throw Error("mixture: more clusters than points");
        if (!(separation > 0.0) || !std::isfinite(separation)) throw Error("mixture: separation must be positive");
    }

    std::string to_string() const {
        return "gauss:n=" + std::to_string(n_points) + ",d=" + std::to_string(n_dims) + ",k=" +
               std::to_string(n_clusters) + ",sep=" + nlohmann::json(separation).dump() +
               ",seed=" + std::to_string(seed);
    }
};

/// Parses "gauss:n=1024,d=2,k=4,sep=6,seed=1". Omitted keys keep their defaults.
inline MixtureSpec parse_mixture_spec(std::string_view text) {
    constexpr std::string_view prefix = "gauss:";
    if (text.substr(0, prefix.size()) != prefix) throw Error("mixture spec must start with 'gauss:'");
    MixtureSpec spec;
    std::string body(text.substr(prefix.size()));
    std::size_t start = 0;
    while (start < body.size()) {
        auto end = body.find(',', start);
        if (end == std::string::npos) end = body.size();
        const std::string item = body.substr(start, end - start);
        start = end + 1;
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw Error("mixture spec: expected key=value, got '" + item + "'");
        const std::string key = item.substr(0, eq);
        const std::string value = item.substr(eq + 1);
        try {
            if (key == "n") spec.n_points = std::stoull(value);
            else if (key == "d") spec.n_dims = std::stoull(value);
            else if (key == "k") spec.n_clusters = std::stoull(value);
            else if (key == "sep") spec.separation = std::stod(value);
            else if (key == "seed") spec.seed = std::stoull(value);
            else throw Error("mixture spec: unknown key '" + key + "'");
        } catch (const std::logic_error&) {
            throw Error("mixture spec: bad value '" + value + "' for '" + key + "'");
        }
    }
    spec.validate();
    return spec;
}

struct Mixture {
    DataSet data;
    /// Generating means after the same [0, 1] scaling as the points.
    Matrix true_centers;
    MixtureSpec spec;
};

namespace detail {

/// K means at least 1 apart in a cube of side 1.5 ceil(K^(1/D)), by rejection.
/// Scaling by the separation afterwards keeps the layout identical across
/// separations for a given seed.
inline Matrix place_unit_means(const MixtureSpec& spec, Rng& rng) {
    const std::size_t k = spec.n_clusters, dims = spec.n_dims;
    const double side = 1.5 * std::ceil(std::pow(static_cast<double>(k), 1.0 / static_cast<double>(dims)));
    constexpr int restarts = 100;
    constexpr int tries_per_center = 1000;
    Matrix means(k, dims);
    for (int restart = 0; restart < restarts; ++restart) {
        std::size_t count = 0;
        for (int t = 0; t < tries_per_center * static_cast<int>(k) && count < k; ++t) {
            auto m = means.row(count);
            for (auto& v : m) v = rng.uniform(0.0, side);
            bool ok = true;
            for (std::size_t j = 0; j < count && ok; ++j) ok = squared_distance(m, means.row(j)) >= 1.0;
            if (ok) ++count;
        }
        if (count == k) return means;
    }
    throw Error("mixture: could not place " + std::to_string(k) + " means at separation " +
                std::to_string(spec.separation) + "; try a smaller separation or fewer clusters");
}

inline Matrix scaled(Matrix m, double factor) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (auto& v : m.row(i)) v *= factor;
    }
    return m;
}

}  // namespace detail

/// Probability mass two equal-weight unit-variance spherical components at
/// this distance assign to each other: 2 Phi(-d / 2).
inline double pair_overlap(double distance) { return std::erfc(distance / (2.0 * std::sqrt(2.0))); }

/// Mean of pair_overlap over all pairs of component means (unscaled units).
inline double mean_pairwise_overlap(const Matrix& means) {
    if (means.rows() < 2) throw Error("mean overlap needs at least two components");
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < means.rows(); ++i) {
        for (std::size_t j = i + 1; j < means.rows(); ++j, ++pairs) {
            sum += pair_overlap(std::sqrt(squared_distance(means.row(i), means.row(j))));
        }
    }
    return sum / static_cast<double>(pairs);
}

/// Component means of the spec before attribute scaling.
inline Matrix mixture_means(const MixtureSpec& spec) {
    spec.validate();
    Rng rng(spec.seed, spec.engine);
    return detail::scaled(detail::place_unit_means(spec, rng), spec.separation);
}

/// Copy of `spec` whose separation gives the requested mean pairwise overlap.
/// The mean layout depends only on the seed, so overlap falls monotonically
/// with separation and bisection finds it.
inline MixtureSpec with_mean_overlap(MixtureSpec spec, double target) {
    if (!(target > 0.0 && target < 1.0)) throw Error("mean overlap must lie in (0, 1)");
    if (spec.n_clusters < 2) throw Error("mean overlap needs at least two components");
    spec.separation = 1.0;
    const Matrix unit = mixture_means(spec);
    double lo = 0.0, hi = 1.0;
    while (mean_pairwise_overlap(detail::scaled(unit, hi)) > target) hi *= 2.0;
    for (int i = 0; i < 100 && hi - lo > 1e-12 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        (mean_pairwise_overlap(detail::scaled(unit, mid)) > target ? lo : hi) = mid;
    }
    spec.separation = hi;
    return spec;
}

/// Draws a labeled mixture. Means are placed by rejection sampling in a cube
/// so that every pair is at least `separation` apart; points are then scaled
/// attribute-wise into [0, 1]. Same spec, same output.
inline Mixture generate_mixture(const MixtureSpec& spec) {
    spec.validate();
    Rng rng(spec.seed, spec.engine);
    const std::size_t k = spec.n_clusters, dims = spec.n_dims;
    const Matrix means = detail::scaled(detail::place_unit_means(spec, rng), spec.separation);

    Assignment labels(spec.n_points);
    for (std::size_t i = 0; i < spec.n_points; ++i) labels[i] = static_cast<ClusterId>(i % k);
    rng.shuffle(labels.begin(), labels.end());
    Matrix raw(spec.n_points, dims);
    for (std::size_t i = 0; i < spec.n_points; ++i) {
        auto x = raw.row(i);
        const auto mu = means.row(labels[i]);
        for (std::size_t d = 0; d < dims; ++d) x[d] = mu[d] + rng.normal();
    }
    const auto range = AttributeRange::of(raw);
    return Mixture{DataSet(range.apply(raw), std::move(labels), spec.to_string()), range.apply(means), spec};
}

enum class Complexity { easy, moderate, difficult };

inline std::string_view to_string(Complexity c) {
    switch (c) {
        case Complexity::easy: return "easy";
        case Complexity::moderate: return "moderate";
        case Complexity::difficult: return "difficult";
    }
    return "?";
}

/// Closed-above bins: [0, .25] easy, (.25, .5] moderate, (.5, 1] difficult.
constexpr Complexity classify(double omega) {
    if (omega <= 0.25) return Complexity::easy;
    if (omega <= 0.5) return Complexity::moderate;
    return Complexity::difficult;
}

struct ComplexityScore {
    double omega = 0.0;
    Complexity level = Complexity::easy;
    /// 1 - max(ARI, 0).
    double inverted_rand = 0.0;
    double van_dongen = 0.0;
    double variation_of_information = 0.0;
    /// Unclamped adjusted Rand index.
    double adjusted_rand = 0.0;
};

/// Clusters from the true centers and averages how far the converged
/// partition is from the labels.
inline ComplexityScore complexity_score(const DataSet& data, const Matrix& true_centers,
                                        const KMeansConfig& config = {}) {
    const auto& labels = data.labels();
    if (true_centers.rows() < 2) throw Error("complexity score needs at least two classes");
    if (true_centers.rows() != data.num_classes()) {
        throw Error("complexity score: " + std::to_string(true_centers.rows()) + " centers for " +
                    std::to_string(data.num_classes()) + " classes");
    }
    const auto result = kmeans(data, true_centers, config);
    const auto table = contingency(result.assignment, labels);
    ComplexityScore s;
    s.adjusted_rand = adjusted_rand(table);
    s.inverted_rand = 1.0 - std::clamp(s.adjusted_rand, 0.0, 1.0);
    s.van_dongen = std::clamp(van_dongen(table), 0.0, 1.0);
    s.variation_of_information = std::clamp(variation_of_information(table), 0.0, 1.0);
    s.omega = (s.inverted_rand + s.van_dongen + s.variation_of_information) / 3.0;
    s.level = classify(s.omega);
    return s;
}

/// Key/value description of a generated mixture.
inline nlohmann::json sidecar_json(const MixtureSpec& spec, const ComplexityScore& score) {
    return nlohmann::json{{"generator", "gauss"},
                          {"n_points", spec.n_points},
                          {"n_dims", spec.n_dims},
                          {"n_clusters", spec.n_clusters},
                          {"separation", spec.separation},
                          {"seed", spec.seed},
                          {"engine", std::string(to_string(spec.engine))},
                          {"omega", score.omega},
                          {"class", std::string(to_string(score.level))},
                          {"inverted_rand", score.inverted_rand},
                          {"van_dongen", score.van_dongen},
                          {"variation_of_information", score.variation_of_information}};
}

/// Writes `<stem>.csv` (label in the last column) and `<stem>.json`.
inline ComplexityScore save_mixture(const Mixture& m, const std::string& stem) {
    const auto score = complexity_score(m.data, m.true_centers);
    const auto parent = std::filesystem::path(stem).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    save_csv(stem + ".csv", m.data);
    std::ofstream meta(stem + ".json");
    if (!meta) throw Error("cannot write '" + stem + ".json'");
    meta << sidecar_json(m.spec, score).dump(2) << '\n';
    return score;
}

}  // namespace kinit
