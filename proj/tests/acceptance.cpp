// Acceptance run: one PASS/FAIL line per criterion, exit code 1 if any fail.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/distributions/binomial.hpp>
#include <fmt/format.h>

#include "kinit/kinit.hpp"

using namespace kinit;

namespace {

struct Outcome {
    std::string name;
    bool pass = false;
    std::string detail;
};

unsigned worker_count() { return std::max(1u, std::thread::hardware_concurrency()); }

/// Calls fn(i) for i in [0, n) on all cores.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < std::min<std::size_t>(worker_count(), n); ++w) {
        pool.emplace_back([&] {
            for (std::size_t i; (i = next.fetch_add(1)) < n;) fn(i);
        });
    }
}

// --- AC1 ---------------------------------------------------------------

Outcome golden_rows() {
    struct Row {
        const char* file;
        double lo, hi;
    };
    const std::array<Row, 3> rows{{{"breast_cancer_wisconsin.csv", 238.5, 239.5},
                                   {"magic_gamma_telescope.csv", 2922.5, 2923.5},
                                   {"spectf_heart.csv", 213.5, 214.5}}};
    ExperimentConfig config;
    for (const auto& r : rows) config.datasets.push_back(std::string(KINIT_DATA_DIR) + "/" + r.file);
    config.k = 2;
    config.runs = 100;
    config.threads = worker_count();
    const auto bundle = run_experiment(config);
    std::string bad, summary;
    for (std::size_t d = 0; d < rows.size(); ++d) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (const auto& mr : bundle.datasets[d].methods) {
            const auto& s = *mr.stat(Criterion::final_sse);
            for (double v : {s.min, s.mean}) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
                if (v < rows[d].lo || v > rows[d].hi) {
                    bad += fmt::format(" {}:{}={:.3f}", rows[d].file, method_letter(mr.method), v);
                }
            }
        }
        summary += fmt::format("{}{} [{:.3f}, {:.3f}]", d ? "; " : "", rows[d].file, lo, hi);
    }
    return {"AC1 golden final SSE rows", bad.empty(), bad.empty() ? summary : "out of range:" + bad};
}

// --- AC2 ---------------------------------------------------------------

Outcome acceleration_exactness() {
    constexpr std::size_t cases = 100;
    std::vector<int> identical(cases, 0), fewer(cases, 0);
    parallel_for(cases, [&](std::size_t c) {
        Rng r(derive_seed(2024, c));
        MixtureSpec spec;
        spec.n_points = 100 + r.uniform_index(4901);
        spec.n_dims = 1 + r.uniform_index(16);
        spec.n_clusters = 2 + r.uniform_index(9);
        spec.separation = r.uniform(0.5, 3.0);
        spec.seed = derive_seed(77, c);
        const auto m = generate_mixture(spec);
        const auto& x = m.data.points();
        const std::size_t k = 2 + r.uniform_index(9);
        Rng init_rng(spec.seed + 1);
        const Matrix init = c % 2 ? kmeanspp(x, k, init_rng) : forgy(x, k, init_rng);
        const auto slow = lloyd(x, init);
        const auto fast = lloyd_accelerated(x, init);
        identical[c] = slow.assignment == fast.assignment && slow.iterations == fast.iterations &&
                       std::abs(slow.sse - fast.sse) <= 1e-9 * std::max(slow.sse, 1e-300);
        bool below = fast.distance_evals.size() > 1;
        for (std::size_t it = 1; it < fast.distance_evals.size(); ++it) {
            below = below && fast.distance_evals[it] < x.rows() * k;
        }
        fewer[c] = below;
    });
    const int same = std::accumulate(identical.begin(), identical.end(), 0);
    const int pruned = std::accumulate(fewer.begin(), fewer.end(), 0);
    return {"AC2 accelerated Lloyd exactness", same == 100 && pruned >= 95,
            fmt::format("identical {}/100, fewer than N*K evaluations after iteration 1 on {}/100", same, pruned)};
}

// --- AC4 ---------------------------------------------------------------

Outcome statistics_oracles() {
    Matrix example(4, 3);
    const double v[4][3] = {{1, 2, 3}, {1, 2, 3}, {1, 2, 3}, {2, 1, 3}};
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 3; ++j) example(i, j) = v[i][j];
    }
    const auto fr = stats::friedman(stats::rank_blocks(example, stats::Direction::lower_is_better));
    const auto id = stats::iman_davenport(fr.statistic, 4, 3);
    Matrix constant(5, 4);
    for (std::size_t i = 0; i < 5; ++i) {
        for (auto& x : constant.row(i)) x = static_cast<double>(i);
    }
    const double chi0 = stats::friedman(stats::rank_blocks(constant, stats::Direction::lower_is_better)).statistic;

    Rng r(4);
    int superset = 0, total = 0;
    for (std::size_t t = 3; t <= 6; ++t) {
        for (int trial = 0; trial < 1000; ++trial, ++total) {
            std::vector<double> p(t * t, 1.0);
            for (std::size_t i = 0; i < t; ++i) {
                for (std::size_t j = i + 1; j < t; ++j) {
                    const double u = r.uniform01();
                    p[i * t + j] = p[j * t + i] = r.uniform_index(3) == 0 ? u : std::pow(u, 6.0);
                }
            }
            const auto pw = stats::Pairwise::from_p(t, p);
            const auto bh = stats::bergmann_hommel(pw, 0.05);
            const auto ho = stats::holm(pw, 0.05);
            bool ok = true;
            for (std::size_t k = 0; k < ho.pairs.size(); ++k) ok = ok && (!ho.pairs[k].rejected || bh.rejected(ho.pairs[k].i, ho.pairs[k].j));
            superset += ok;
        }
    }
    const bool pass = std::abs(fr.statistic - 6.5) < 1e-12 && std::abs(id.statistic - 13.0) < 1e-12 && chi0 == 0.0 &&
                      superset == total;
    return {"AC4 statistical oracles", pass,
            fmt::format("chi2 {:.6g}, F {:.6g}, constant chi2 {:g}, BH covers Holm on {}/{}", fr.statistic,
                        id.statistic, chi0, superset, total)};
}

// --- AC5 ---------------------------------------------------------------

std::vector<Assignment> all_partitions(std::size_t n) {
    std::vector<Assignment> out;
    Assignment a(n, 0);
    std::function<void(std::size_t, ClusterId)> rec = [&](std::size_t i, ClusterId used) {
        if (i == n) {
            out.push_back(a);
            return;
        }
        for (ClusterId c = 0; c <= used; ++c) {
            a[i] = c;
            rec(i + 1, std::max<ClusterId>(used, c + 1));
        }
    };
    rec(0, 0);
    return out;
}

/// Pair-counting ARI; nullopt when the index is undefined (max == expected).
std::optional<double> pair_counting_ari(const Assignment& a, const Assignment& b) {
    double both = 0, same_a = 0, same_b = 0, pairs = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = i + 1; j < a.size(); ++j) {
            const bool sa = a[i] == a[j], sb = b[i] == b[j];
            both += sa && sb;
            same_a += sa;
            same_b += sb;
            pairs += 1;
        }
    }
    const double expected = same_a * same_b / pairs, max_index = 0.5 * (same_a + same_b);
    if (max_index == expected) return std::nullopt;
    return (both - expected) / (max_index - expected);
}

Outcome validity_identities() {
    int failures = 0;
    Rng r(5);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + r.uniform_index(60), k = 1 + r.uniform_index(6);
        Assignment a(n), b(n);
        std::vector<ClusterId> perm(k);
        std::iota(perm.begin(), perm.end(), 0);
        r.shuffle(perm.begin(), perm.end());
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = static_cast<ClusterId>(r.uniform_index(k));
            b[i] = perm[a[i]] * 5 + 2;
        }
        const auto t = contingency(a, b);
        failures += adjusted_rand(t) != 1.0 || van_dongen(t) != 0.0 || variation_of_information(t) != 0.0;
    }
    const auto cross = contingency({0, 0, 1, 1}, {0, 1, 0, 1});
    const double ari = adjusted_rand(cross), vd = van_dongen(cross), vi = variation_of_information(cross);
    failures += std::abs(ari + 0.5) > 1e-12 || std::abs(vd - 0.5) > 1e-12 || std::abs(vi - 1.0) > 1e-12;

    std::size_t pairs_checked = 0, mismatches = 0;
    for (std::size_t n = 2; n <= 6; ++n) {
        const auto parts = all_partitions(n);
        for (const auto& a : parts) {
            for (const auto& b : parts) {
                ++pairs_checked;
                const auto oracle = pair_counting_ari(a, b);
                const auto got = adjusted_rand_checked(contingency(a, b));
                if (oracle.has_value() == got.degenerate) ++mismatches;
                else if (oracle && std::abs(*oracle - got.value) > 1e-12) ++mismatches;
            }
        }
    }
    return {"AC5 validity identities", failures == 0 && mismatches == 0,
            fmt::format("crossing ARI {:.6g} VD {:.6g} VI {:.6g}; {} identity failures; {} mismatches over {} "
                        "partition pairs",
                        ari, vd, vi, failures, mismatches, pairs_checked)};
}

// --- AC6 ---------------------------------------------------------------

Outcome method_quality_trend() {
    constexpr std::size_t sets = 200, runs = 100;
    constexpr std::array<double, 4> overlap_grid{0.025, 0.05, 0.1, 0.2};
    std::vector<MixtureSpec> specs;
    std::size_t drawn = 0;
    for (std::uint64_t seed = 1; specs.size() < sets; ++seed, ++drawn) {
        MixtureSpec spec;
        spec.n_points = 1024;
        spec.n_dims = 2;
        spec.n_clusters = 4;
        spec.seed = seed;
        spec = with_mean_overlap(spec, overlap_grid[seed % overlap_grid.size()]);
        const auto m = generate_mixture(spec);
        if (complexity_score(m.data, m.true_centers).level == Complexity::easy) specs.push_back(spec);
    }

    constexpr std::array<Method, 8> methods = all_methods;
    std::vector<std::array<double, 8>> mean_sse(sets);
    parallel_for(sets, [&](std::size_t s) {
        const auto m = generate_mixture(specs[s]);
        const auto& x = m.data.points();
        for (std::size_t j = 0; j < methods.size(); ++j) {
            InitConfig init;
            init.method = methods[j];
            init.k = 4;
            const std::size_t r_count = is_deterministic(methods[j]) ? 1 : runs;
            double sum = 0.0;
            for (std::size_t r = 0; r < r_count; ++r) {
                init.seed = derive_seed(specs[s].seed, r);
                sum += assign_points(x, initialize(x, init).coords).sse;
            }
            mean_sse[s][j] = sum / static_cast<double>(r_count);
        }
    });

    auto idx = [](Method m) { return static_cast<std::size_t>(m); };
    struct Check {
        Method worse, better;
    };
    const std::array<Check, 5> checks{{{Method::maximin, Method::macqueen},
                                       {Method::macqueen, Method::kmeanspp},
                                       {Method::kmeanspp, Method::var_part},
                                       {Method::kmeanspp, Method::pca_part},
                                       {Method::kmeanspp, Method::bradley_fayyad}}};
    const boost::math::binomial_distribution<> null(static_cast<double>(sets), 0.5);
    bool pass = true;
    std::string detail = fmt::format("{} easy sets from {} drawn;", sets, drawn);
    for (const auto& c : checks) {
        std::size_t wins = 0;
        double worse_total = 0, better_total = 0;
        for (const auto& row : mean_sse) {
            wins += row[idx(c.worse)] > row[idx(c.better)];
            worse_total += row[idx(c.worse)];
            better_total += row[idx(c.better)];
        }
        const double p = wins == 0 ? 1.0 : boost::math::cdf(boost::math::complement(null, static_cast<double>(wins - 1)));
        const bool ok = p <= 0.05 && worse_total > better_total;
        pass = pass && ok;
        detail += fmt::format(" {}>{} {}/{} p={:.2g} (means {:.2f} vs {:.2f}){}", method_letter(c.worse),
                              method_letter(c.better), wins, sets, p, worse_total / sets, better_total / sets,
                              ok ? "" : " FAILED");
    }
    return {"AC6 initial SSE trend on easy mixtures", pass, detail};
}

// --- AC7 ---------------------------------------------------------------

/// Hex-float dump of the deterministic seedings on a fixed collection.
std::string deterministic_dump() {
    std::vector<DataSet> sets;
    sets.push_back(minmax_normalize(load_csv(std::string(KINIT_DATA_DIR) + "/breast_cancer_wisconsin.csv",
                                             {',', false, CsvOptions::last_column})));
    for (std::uint64_t s = 1; s <= 5; ++s) {
        sets.push_back(generate_mixture(parse_mixture_spec(fmt::format("gauss:n=800,d={},k=5,sep=3,seed={}", 1 + s, s))).data);
    }
    std::string out;
    for (const auto& d : sets) {
        for (std::size_t k : {2, 5, 9}) {
            for (const Matrix& c : {var_part(d.points(), k), pca_part(d.points(), k)}) {
                for (std::size_t i = 0; i < c.rows(); ++i) {
                    for (double v : c.row(i)) out += fmt::format("{:a} ", v);
                }
                out += '\n';
            }
        }
    }
    return out;
}

std::string run_child(const std::string& self) {
    std::string out;
    FILE* pipe = popen((self + " --dump-deterministic").c_str(), "r");
    if (!pipe) return out;
    char buf[4096];
    for (std::size_t n; (n = fread(buf, 1, sizeof buf, pipe)) > 0;) out.append(buf, n);
    pclose(pipe);
    return out;
}

Outcome determinism(const std::string& self) {
    const std::string here = deterministic_dump();
    const std::string a = run_child(self), b = run_child(self);
    const bool partitions_same = !here.empty() && here == a && a == b;

    ExperimentConfig config;
    config.datasets = {"gauss:n=500,d=3,k=4,sep=3,seed=11", "gauss:n=400,d=5,k=3,sep=2,seed=12",
                       std::string(KINIT_DATA_DIR) + "/spectf_heart.csv"};
    config.runs = 20;
    config.seed = 42;
    config.threads = worker_count();
    const auto first = run_experiment(config);
    config.threads = 1;
    const auto second = run_experiment(config);
    std::size_t compared = 0, differing = 0;
    for (std::size_t d = 0; d < first.datasets.size(); ++d) {
        for (std::size_t m = 0; m < first.datasets[d].methods.size(); ++m) {
            for (Criterion c : all_criteria) {
                if (c == Criterion::cpu_time) continue;
                const auto& x = first.datasets[d].methods[m].stat(c);
                const auto& y = second.datasets[d].methods[m].stat(c);
                for (Statistic s : all_statistics) {
                    ++compared;
                    differing += x.has_value() != y.has_value() || (x && x->get(s) != y->get(s));
                }
            }
        }
    }
    return {"AC7 determinism", partitions_same && differing == 0,
            fmt::format("var_part/pca_part output {} across 3 processes ({} bytes); {} of {} non-time statistics "
                        "differ on rerun",
                        partitions_same ? "identical" : "DIFFERENT", here.size(), differing, compared)};
}

// --- AC8 ---------------------------------------------------------------

Outcome complexity_classes() {
    double worst = 0.0;
    bool all_easy = true;
    int count = 0;
    for (std::size_t k = 2; k <= 8; k += 2) {
        for (std::size_t d = 2; d <= 5; ++d, ++count) {
            MixtureSpec spec;
            spec.n_points = 1000;
            spec.n_dims = d;
            spec.n_clusters = k;
            spec.separation = 14.0;
            spec.seed = 100 * k + d;
            const auto m = generate_mixture(spec);
            const auto score = complexity_score(m.data, m.true_centers);
            worst = std::max(worst, score.omega);
            all_easy = all_easy && score.level == Complexity::easy;
        }
    }
    const double up = std::numeric_limits<double>::infinity();
    const bool bounds = classify(0.0) == Complexity::easy && classify(0.25) == Complexity::easy &&
                        classify(std::nextafter(0.25, up)) == Complexity::moderate &&
                        classify(0.5) == Complexity::moderate &&
                        classify(std::nextafter(0.5, up)) == Complexity::difficult &&
                        classify(1.0) == Complexity::difficult;
    return {"AC8 complexity classification", worst < 0.05 && all_easy && bounds,
            fmt::format("largest omega {:.4g} over {} well separated mixtures; boundaries {}", worst, count,
                        bounds ? "ok" : "WRONG")};
}

}  // namespace

int main(int argc, char** argv) {
    if (argc > 1 && std::string(argv[1]) == "--dump-deterministic") {
        std::fputs(deterministic_dump().c_str(), stdout);
        return 0;
    }
    std::vector<Outcome> results;
    auto attempt = [&](const char* name, const std::function<Outcome()>& fn) {
        try {
            results.push_back(fn());
        } catch (const std::exception& e) {
            results.push_back({name, false, std::string("exception: ") + e.what()});
        }
    };
    attempt("AC1 golden final SSE rows", golden_rows);
    attempt("AC2 accelerated Lloyd exactness", acceleration_exactness);
    attempt("AC4 statistical oracles", statistics_oracles);
    attempt("AC5 validity identities", validity_identities);
    attempt("AC6 initial SSE trend on easy mixtures", method_quality_trend);
    attempt("AC7 determinism", [&] { return determinism(argv[0]); });
    attempt("AC8 complexity classification", complexity_classes);

    // Every Lloyd run above went through the audit.
    const auto& audit = trace_audit();
    results.insert(results.begin() + 2,
                   Outcome{"AC3 SSE trace never rises", audit.violations == 0 && audit.runs > 0,
                           fmt::format("{} runs audited, {} rises beyond 1e-12 relative, {} rises at all",
                                       audit.runs.load(), audit.violations.load(), audit.strict_violations.load())});

    bool all = true;
    for (const auto& r : results) {
        fmt::print("{} {}: {}\n", r.pass ? "PASS" : "FAIL", r.name, r.detail);
        all = all && r.pass;
    }
    return all ? 0 : 1;
}
