#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <sys/resource.h>

#include "kinit/dataset.hpp"
#include "kinit/init.hpp"
#include "kinit/kmeans.hpp"
#include "kinit/stats.hpp"
#include "kinit/synthgen.hpp"
#include "kinit/validity.hpp"

namespace kinit {

enum class Criterion { initial_sse, final_sse, rand, vd, vi, iterations, cpu_time };

inline constexpr std::array<Criterion, 7> all_criteria{Criterion::initial_sse, Criterion::final_sse, Criterion::rand,
                                                       Criterion::vd,          Criterion::vi,        Criterion::iterations,
                                                       Criterion::cpu_time};

constexpr std::string_view criterion_name(Criterion c) {
    constexpr std::array<std::string_view, 7> names{"initial_sse", "final_sse", "rand", "vd",
                                                    "vi",          "iterations", "cpu_time"};
    return names[static_cast<std::size_t>(c)];
}

constexpr bool needs_labels(Criterion c) {
    return c == Criterion::rand || c == Criterion::vd || c == Criterion::vi;
}

constexpr stats::Direction criterion_direction(Criterion c) {
    return c == Criterion::rand ? stats::Direction::higher_is_better : stats::Direction::lower_is_better;
}

enum class Statistic { min, mean, stdev };

inline constexpr std::array<Statistic, 3> all_statistics{Statistic::min, Statistic::mean, Statistic::stdev};

constexpr std::string_view statistic_name(Statistic s) {
    return s == Statistic::min ? "min" : s == Statistic::mean ? "mean" : "stdev";
}

struct ExperimentConfig {
    /// File paths or "gauss:..." mixture specs.
    std::vector<std::string> datasets;
    std::vector<Method> methods{all_methods.begin(), all_methods.end()};
    std::size_t runs = 100;
    /// Cluster count; empty means one cluster per class.
    std::optional<std::size_t> k;
    std::uint64_t seed = 1;
    Engine engine = Engine::mt19937_64;
    KMeansConfig kmeans;
    bool normalize = true;
    CsvOptions csv{',', false, CsvOptions::last_column};
    unsigned threads = 1;

    void validate() const {
        if (datasets.empty()) throw Error("no data sets given");
        if (methods.empty()) throw Error("no initialization methods given");
        if (runs < 1) throw Error("runs must be at least 1");
        if (k && *k < 1) throw Error("k must be at least 1");
        if (threads < 1) throw Error("threads must be at least 1");
        kmeans.validate();
    }

    std::size_t runs_for(Method m) const { return is_deterministic(m) ? 1 : runs; }
};

/// Reads a data file (optionally min-max scaled) or generates a mixture.
inline DataSet load_source(const std::string& source, const CsvOptions& csv, bool normalize) {
    if (source.rfind("gauss:", 0) == 0) return generate_mixture(parse_mixture_spec(source)).data;
    auto data = load_csv(source, csv);
    return normalize ? minmax_normalize(data) : data;
}

struct RunRecord {
    std::size_t run = 0;
    std::uint64_t seed = 0;
    double initial_sse = 0.0;
    double final_sse = 0.0;
    std::optional<double> rand, vd, vi;
    int iterations = 0;
    double cpu_ms = 0.0;

    std::optional<double> value(Criterion c) const {
        switch (c) {
            case Criterion::initial_sse: return initial_sse;
            case Criterion::final_sse: return final_sse;
            case Criterion::rand: return rand;
            case Criterion::vd: return vd;
            case Criterion::vi: return vi;
            case Criterion::iterations: return static_cast<double>(iterations);
            case Criterion::cpu_time: return cpu_ms;
        }
        return std::nullopt;
    }
};

struct RunStats {
    double min = 0.0;
    double mean = 0.0;
    /// Sample standard deviation; 0 for a single run or identical values.
    double stdev = 0.0;

    double get(Statistic s) const { return s == Statistic::min ? min : s == Statistic::mean ? mean : stdev; }

    static RunStats of(const std::vector<double>& v) {
        if (v.empty()) throw Error("statistics of an empty sample");
        RunStats s;
        s.min = *std::min_element(v.begin(), v.end());
        const double max = *std::max_element(v.begin(), v.end());
        double sum = 0.0;
        for (double x : v) sum += x;
        s.mean = sum / static_cast<double>(v.size());
        // The summed mean of identical values can drift an ulp off them.
        if (s.min == max) s.mean = s.min;
        s.mean = std::max(s.mean, s.min);
        if (v.size() > 1 && s.min != max) {
            double ss = 0.0;
            for (double x : v) ss += (x - s.mean) * (x - s.mean);
            s.stdev = std::sqrt(ss / static_cast<double>(v.size() - 1));
        }
        return s;
    }
};

struct MethodResult {
    Method method = Method::forgy;
    std::vector<RunRecord> runs;
    std::array<std::optional<RunStats>, all_criteria.size()> stats;

    const std::optional<RunStats>& stat(Criterion c) const { return stats[static_cast<std::size_t>(c)]; }
};

struct DatasetResult {
    std::string name;
    std::string source;
    std::size_t n = 0, dims = 0, k = 0;
    bool has_labels = false;
    std::vector<MethodResult> methods;

    const MethodResult* find(Method m) const {
        for (const auto& r : methods) {
            if (r.method == m) return &r;
        }
        return nullptr;
    }
};

struct ReportBundle {
    ExperimentConfig config;
    std::vector<DatasetResult> datasets;
    std::vector<std::string> warnings;
    /// Set when per-thread CPU time was unavailable and wall time was used.
    bool wall_clock_fallback = false;
};

namespace detail {

/// Per-thread CPU time (user + system) in microseconds, or nothing when the
/// platform cannot provide it.
inline std::optional<double> thread_cpu_us() {
#ifdef RUSAGE_THREAD
    rusage u{};
    if (getrusage(RUSAGE_THREAD, &u) == 0) {
        return 1e6 * static_cast<double>(u.ru_utime.tv_sec + u.ru_stime.tv_sec) +
               static_cast<double>(u.ru_utime.tv_usec + u.ru_stime.tv_usec);
    }
#endif
    return std::nullopt;
}

inline double wall_us() {
    using namespace std::chrono;
    return static_cast<double>(duration_cast<microseconds>(steady_clock::now().time_since_epoch()).count());
}

inline RunRecord execute_run(const DataSet& data, Method method, std::size_t k, std::size_t run,
                             const ExperimentConfig& config, bool& fallback) {
    InitConfig init;
    init.method = method;
    init.k = k;
    init.seed = derive_seed(config.seed, run);
    init.engine = config.engine;
    init.kmeans = config.kmeans;

    const auto cpu0 = thread_cpu_us();
    const double wall0 = wall_us();
    const auto centers = initialize(data, init);
    const auto result = kmeans(data, centers.coords, config.kmeans);
    const auto cpu1 = thread_cpu_us();
    const double wall1 = wall_us();

    RunRecord r;
    r.run = run;
    r.seed = init.seed;
    r.initial_sse = result.initial_sse;
    r.final_sse = result.sse;
    r.iterations = result.iterations;
    if (cpu0 && cpu1) {
        r.cpu_ms = (*cpu1 - *cpu0) / 1000.0;
    } else {
        r.cpu_ms = (wall1 - wall0) / 1000.0;
        fallback = true;
    }
    if (data.has_labels()) {
        const auto table = contingency(result.assignment, data.labels());
        r.rand = adjusted_rand(table);
        r.vd = van_dongen(table);
        r.vi = variation_of_information(table);
    }
    return r;
}

inline void summarize(MethodResult& m) {
    for (Criterion c : all_criteria) {
        std::vector<double> values;
        for (const auto& r : m.runs) {
            if (auto v = r.value(c)) values.push_back(*v);
        }
        if (values.size() == m.runs.size() && !values.empty()) m.stats[static_cast<std::size_t>(c)] = RunStats::of(values);
    }
}

inline std::string unique_name(std::string name, const std::vector<DatasetResult>& existing) {
    auto taken = [&](const std::string& s) {
        return std::any_of(existing.begin(), existing.end(), [&](const auto& d) { return d.name == s; });
    };
    if (!taken(name)) return name;
    for (int i = 2;; ++i) {
        auto candidate = name + "#" + std::to_string(i);
        if (!taken(candidate)) return candidate;
    }
}

}  // namespace detail

/// Runs every method on every data set. Run r of a method uses the seed
/// derived from (config.seed, r), so results do not depend on thread count.
inline ReportBundle run_experiment(const ExperimentConfig& config) {
    config.validate();
    ReportBundle bundle{config, {}, {}, false};
    for (const auto& source : config.datasets) {
        const DataSet data = load_source(source, config.csv, config.normalize);
        DatasetResult out;
        out.name = detail::unique_name(data.name().empty() ? source : data.name(), bundle.datasets);
        out.source = source;
        out.n = data.size();
        out.dims = data.dims();
        out.has_labels = data.has_labels();
        if (config.k) {
            out.k = *config.k;
        } else if (data.has_labels()) {
            out.k = data.num_classes();
        } else {
            throw Error("data set '" + out.name + "' has no labels; give an explicit --k");
        }
        if (!data.has_labels()) {
            bundle.warnings.push_back("data set '" + out.name + "' has no labels; rand, vd and vi omitted");
        }
        for (Method method : config.methods) {
            MethodResult mr;
            mr.method = method;
            const std::size_t runs = config.runs_for(method);
            mr.runs.resize(runs);
            const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(config.threads, runs));
            std::atomic<std::size_t> next{0};
            std::atomic<bool> fallback{false};
            std::vector<std::exception_ptr> errors(workers);
            auto work = [&](unsigned w) {
                try {
                    bool fb = false;
                    for (std::size_t r; (r = next.fetch_add(1)) < runs;) {
                        mr.runs[r] = detail::execute_run(data, method, out.k, r, config, fb);
                    }
                    if (fb) fallback = true;
                } catch (...) {
                    errors[w] = std::current_exception();
                    next = runs;
                }
            };
            if (workers == 1) {
                work(0);
            } else {
                std::vector<std::jthread> pool;
                for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
            }
            for (auto& e : errors) {
                if (e) std::rethrow_exception(e);
            }
            if (fallback) bundle.wall_clock_fallback = true;
            detail::summarize(mr);
            out.methods.push_back(std::move(mr));
        }
        bundle.datasets.push_back(std::move(out));
    }
    if (bundle.wall_clock_fallback) bundle.warnings.push_back("per-thread CPU time unavailable; cpu_time is wall time");
    return bundle;
}

/// Friedman / Iman-Davenport / post-hoc outcome for one criterion and statistic.
struct RankingReport {
    Criterion criterion = Criterion::final_sse;
    Statistic statistic = Statistic::mean;
    std::vector<Method> methods;
    std::vector<std::string> datasets;
    /// Blocks (data sets) by treatments (methods).
    Matrix values;
    stats::RankTable ranks;
    std::vector<double> mean_ranks;
    stats::TestOutcome friedman;
    stats::TestOutcome iman_davenport;
    std::optional<stats::PosthocResult> posthoc;
    bool significant = false;
    /// Worst to best, e.g. "X < {F, M}".
    std::string ordering;
    std::string note;
};

namespace detail {

inline std::string group_string(std::vector<Method> group) {
    std::sort(group.begin(), group.end());
    if (group.size() == 1) return std::string(1, method_letter(group[0]));
    std::string s = "{";
    for (std::size_t i = 0; i < group.size(); ++i) {
        if (i) s += ", ";
        s += method_letter(group[i]);
    }
    return s + "}";
}

}  // namespace detail

/// Orders methods worst to best by mean rank and cuts the sequence into
/// maximal consecutive groups whose members are pairwise indistinguishable.
inline std::string ordering_string(const std::vector<Method>& methods, const std::vector<double>& mean_ranks,
                                   const stats::PosthocResult* posthoc) {
    std::vector<std::size_t> order(methods.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (mean_ranks[a] != mean_ranks[b]) return mean_ranks[a] > mean_ranks[b];
        return methods[a] < methods[b];
    });
    std::vector<std::vector<std::size_t>> groups;
    for (std::size_t idx : order) {
        bool joins = !groups.empty();
        if (joins && posthoc) {
            for (std::size_t other : groups.back()) joins = joins && !posthoc->rejected(idx, other);
        }
        if (joins) {
            groups.back().push_back(idx);
        } else {
            groups.push_back({idx});
        }
    }
    std::string s;
    for (const auto& g : groups) {
        std::vector<Method> ms;
        for (std::size_t i : g) ms.push_back(methods[i]);
        if (!s.empty()) s += " < ";
        s += detail::group_string(ms);
    }
    return s;
}

/// Ranks methods within each data set and tests for differences. Rankings of
/// the standard deviation leave out deterministic methods, whose spread is
/// zero by construction. Data sets lacking the criterion are skipped.
inline RankingReport rank_and_test(const ReportBundle& bundle, Criterion criterion, Statistic statistic,
                                   double alpha = 0.05) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error("alpha must lie in (0, 1)");
    RankingReport rep;
    rep.criterion = criterion;
    rep.statistic = statistic;
    for (Method m : bundle.config.methods) {
        if (statistic == Statistic::stdev && is_deterministic(m)) continue;
        if (std::find(rep.methods.begin(), rep.methods.end(), m) == rep.methods.end()) rep.methods.push_back(m);
    }
    std::vector<std::vector<double>> rows;
    for (const auto& d : bundle.datasets) {
        std::vector<double> row;
        for (Method m : rep.methods) {
            const auto* mr = d.find(m);
            if (!mr || !mr->stat(criterion)) break;
            row.push_back(mr->stat(criterion)->get(statistic));
        }
        if (row.size() != rep.methods.size()) continue;
        rep.datasets.push_back(d.name);
        rows.push_back(std::move(row));
    }
    if (rows.size() < 2 || rep.methods.size() < 2) {
        throw Error("ranking " + std::string(criterion_name(criterion)) + "/" + std::string(statistic_name(statistic)) +
                    " needs at least two data sets and two methods");
    }
    rep.values = Matrix(rows.size(), rep.methods.size());
    for (std::size_t b = 0; b < rows.size(); ++b) std::copy(rows[b].begin(), rows[b].end(), rep.values.row(b).begin());
    rep.ranks = stats::rank_blocks(rep.values, criterion_direction(criterion));
    rep.mean_ranks = rep.ranks.mean_ranks();
    rep.friedman = stats::friedman(rep.ranks);
    rep.iman_davenport = stats::iman_davenport(rep.friedman.statistic, rep.ranks.blocks(), rep.ranks.treatments());
    rep.significant = rep.iman_davenport.rejects(alpha);
    if (!rep.significant) {
        rep.note = "no significant differences";
        rep.ordering = ordering_string(rep.methods, std::vector<double>(rep.methods.size(), 0.0), nullptr);
        return rep;
    }
    const auto pw = stats::pairwise_pvalues(rep.ranks);
    rep.posthoc = rep.methods.size() <= stats::max_bergmann_hommel_treatments ? stats::bergmann_hommel(pw, alpha)
                                                                              : stats::holm(pw, alpha);
    rep.ordering = ordering_string(rep.methods, rep.mean_ranks, &*rep.posthoc);
    return rep;
}

}  // namespace kinit
