#include <cmath>
#include <limits>
#include <numeric>

#include <gtest/gtest.h>

#include "kinit/kmeans.hpp"
#include "kinit/random.hpp"

using namespace kinit;

namespace {

Matrix col(std::initializer_list<double> v) { return Matrix(v.size(), 1, std::vector<double>(v)); }

Matrix random_points(std::size_t n, std::size_t d, std::uint64_t seed) {
    Rng r(seed);
    Matrix m(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        const double shift = static_cast<double>(i % 3) * 4.0;
        for (auto& v : m.row(i)) v = shift + r.normal();
    }
    return m;
}

Matrix first_rows(const Matrix& m, std::size_t k) {
    Matrix c(k, m.cols());
    for (std::size_t i = 0; i < k; ++i) std::copy(m.row(i * 7 % m.rows()).begin(), m.row(i * 7 % m.rows()).end(), c.row(i).begin());
    return c;
}

}  // namespace

TEST(AssignPoints, PointsOnCenters) {
    const auto r = assign_points(col({0, 10}), col({0, 10}));
    EXPECT_EQ(r.assignment, (Assignment{0, 1}));
    EXPECT_EQ(r.sse, 0.0);
}

TEST(AssignPoints, NearestCenterAndSse) {
    const auto r = assign_points(col({0, 4, 10}), col({0, 10}));
    EXPECT_EQ(r.assignment, (Assignment{0, 0, 1}));
    EXPECT_EQ(r.sse, 16.0);
}

TEST(AssignPoints, TiesGoToLowestIndex) {
    EXPECT_EQ(assign_points(col({5}), col({0, 10})).assignment, (Assignment{0}));
    EXPECT_EQ(assign_points(col({5}), col({10, 0, 10})).assignment, (Assignment{0}));
}

TEST(AssignPoints, DimensionMismatchIsAnError) {
    EXPECT_THROW(assign_points(col({1, 2}), Matrix(2, 2)), Error);
    EXPECT_THROW(assign_points(col({1, 2}), Matrix(0, 1)), Error);
}

TEST(ComputeSse, Basics) {
    EXPECT_EQ(compute_sse(col({1, 2}), Assignment{0, 1}, col({1, 2})), 0.0);
    Matrix x(2, 2, std::vector<double>{0, 0, 2, 0});
    Matrix c(1, 2, std::vector<double>{1, 0});
    EXPECT_EQ(compute_sse(x, Assignment{0, 0}, c), 2.0);
    EXPECT_THROW(compute_sse(x, Assignment{0, 1}, c), Error);
    EXPECT_THROW(compute_sse(x, Assignment{0}, c), Error);
}

TEST(ComputeSse, MatchesReorderedSummation) {
    const auto x = random_points(20, 3, 5);
    const auto c = first_rows(x, 4);
    const auto a = assign_points(x, c).assignment;
    // Oracle: dimension-major, reverse point order, compensated summation.
    double sum = 0.0, comp = 0.0;
    for (std::size_t d = 0; d < 3; ++d) {
        for (std::size_t i = 20; i-- > 0;) {
            const double diff = x(i, d) - c(a[i], d);
            const double y = diff * diff - comp;
            const double t = sum + y;
            comp = (t - sum) - y;
            sum = t;
        }
    }
    EXPECT_NEAR(compute_sse(x, a, c), sum, 1e-12 * sum);
}

TEST(Lloyd, HandTracedRunMatchesExhaustiveOptimum) {
    const auto x = col({0, 2, 10, 12});
    const auto r = lloyd(x, col({1, 3}));
    EXPECT_EQ(r.centers, col({1, 11}));
    EXPECT_EQ(r.sse, 4.0);
    EXPECT_EQ(r.assignment, (Assignment{0, 0, 1, 1}));
    // Oracle: every split of the four points into two non-empty groups.
    double best = std::numeric_limits<double>::infinity();
    for (unsigned mask = 1; mask < 15; ++mask) {
        Assignment a(4);
        for (unsigned i = 0; i < 4; ++i) a[i] = (mask >> i) & 1U;
        Matrix c(2, 1);
        double n[2] = {0, 0};
        for (unsigned i = 0; i < 4; ++i) {
            c(a[i], 0) += x(i, 0);
            n[a[i]] += 1;
        }
        c(0, 0) /= n[0];
        c(1, 0) /= n[1];
        best = std::min(best, compute_sse(x, a, c));
    }
    EXPECT_EQ(r.sse, best);
}

TEST(Lloyd, FixedPointConvergesImmediately) {
    const auto x = col({0, 1, 2, 10, 11, 12});
    const auto r = lloyd(x, col({1, 11}));
    EXPECT_LE(r.iterations, 2);
    EXPECT_EQ(r.converged_by, StopReason::eps);
    EXPECT_EQ(r.sse, r.initial_sse);
}

TEST(Lloyd, InfiniteEpsStopsAfterOneIteration) {
    KMeansConfig cfg;
    cfg.eps = std::numeric_limits<double>::infinity();
    const auto r = lloyd(random_points(50, 2, 1), first_rows(random_points(50, 2, 1), 3), cfg);
    EXPECT_EQ(r.iterations, 1);
    EXPECT_EQ(r.converged_by, StopReason::eps);
}

TEST(Lloyd, IterationCapIsHonoured) {
    KMeansConfig cfg;
    cfg.eps = 0.0;
    cfg.max_iters = 2;
    const auto x = random_points(300, 2, 4);
    const auto r = lloyd(x, first_rows(x, 6), cfg);
    EXPECT_LE(r.iterations, 2);
    EXPECT_EQ(r.sse_trace.size(), static_cast<std::size_t>(r.iterations));
}

TEST(Lloyd, InvalidConfigIsRejected) {
    KMeansConfig cfg;
    cfg.max_iters = 0;
    EXPECT_THROW(lloyd(col({1, 2}), col({1}), cfg), Error);
    cfg = {};
    cfg.eps = -1;
    EXPECT_THROW(lloyd(col({1, 2}), col({1}), cfg), Error);
    EXPECT_THROW(lloyd(col({1, 2}), col({1, 2, 3})), Error);
}

TEST(Lloyd, EmptyClusterIsRepaired) {
    // The third center starts far from everything and would own no point.
    const auto x = col({0, 1, 2, 10, 11, 30});
    const auto r = lloyd(x, col({1, 11, 1000}));
    EXPECT_GE(r.empty_cluster_repairs, 1u);
    std::vector<int> used(3, 0);
    for (auto a : r.assignment) used[a] = 1;
    EXPECT_EQ(std::accumulate(used.begin(), used.end(), 0), 3);
    EXPECT_TRUE(is_non_increasing(r.sse_trace));
}

TEST(Lloyd, ResultInvariants) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto x = random_points(200, 3, seed);
        const auto r = lloyd(x, first_rows(x, 5));
        EXPECT_NEAR(r.sse, compute_sse(x, r.assignment, r.centers), 1e-9 * r.sse);
        EXPECT_GE(r.initial_sse, r.sse);
        EXPECT_TRUE(is_non_increasing(r.sse_trace, TraceAudit::tolerance));
        EXPECT_LE(r.iterations, 100);
        std::vector<int> used(5, 0);
        for (auto a : r.assignment) used[a] = 1;
        EXPECT_EQ(std::accumulate(used.begin(), used.end(), 0), 5);
    }
}

TEST(Lloyd, CentroidsAreLocallyOptimalForTheirAssignment) {
    const auto x = random_points(150, 2, 8);
    const auto r = lloyd(x, first_rows(x, 4));
    const double base = compute_sse(x, r.assignment, r.centers);
    for (std::size_t j = 0; j < 4; ++j) {
        for (std::size_t d = 0; d < 2; ++d) {
            for (double delta : {1e-3, -1e-3}) {
                auto moved = r.centers;
                moved(j, d) += delta;
                EXPECT_GE(compute_sse(x, r.assignment, moved), base);
            }
        }
    }
}

TEST(LloydAccelerated, MatchesPlainLloydExactly) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng r(seed);
        const std::size_t n = 50 + r.uniform_index(400), d = 1 + r.uniform_index(8), k = 1 + r.uniform_index(9);
        const auto x = random_points(n, d, seed + 1000);
        const auto c = first_rows(x, k);
        const auto plain = lloyd(x, c);
        const auto fast = lloyd_accelerated(x, c);
        ASSERT_EQ(fast.assignment, plain.assignment) << "seed " << seed;
        ASSERT_EQ(fast.iterations, plain.iterations) << "seed " << seed;
        EXPECT_NEAR(fast.sse, plain.sse, 1e-9 * plain.sse);
        EXPECT_EQ(fast.centers, plain.centers);
    }
}

TEST(LloydAccelerated, DoesLessDistanceWork) {
    Rng r(99);
    Matrix x(10000, 4);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const double shift = static_cast<double>(i % 8) * 6.0;
        for (auto& v : x.row(i)) v = shift + r.normal();
    }
    const auto c = first_rows(x, 8);
    const auto fast = lloyd_accelerated(x, c);
    ASSERT_GT(fast.iterations, 1);
    for (std::size_t it = 1; it < fast.distance_evals.size(); ++it) {
        EXPECT_LT(fast.distance_evals[it], x.rows() * 8) << "iteration " << it + 1;
    }
}

TEST(LloydAccelerated, SingleCenter) {
    const auto x = random_points(40, 2, 2);
    const auto plain = lloyd(x, first_rows(x, 1));
    const auto fast = lloyd_accelerated(x, first_rows(x, 1));
    EXPECT_EQ(plain.assignment, fast.assignment);
    EXPECT_EQ(plain.iterations, fast.iterations);
    EXPECT_EQ(plain.sse, fast.sse);
}

TEST(LloydAccelerated, DuplicatePointsAndTies) {
    // Points equidistant from several centers and repeated points.
    const auto x = col({0, 0, 5, 5, 5, 10, 10, 15, 20, 20});
    for (const auto& c : {col({0, 10, 20}), col({5, 15, 5}), col({0, 10, 10, 20})}) {
        const auto plain = lloyd(x, c);
        const auto fast = lloyd_accelerated(x, c);
        EXPECT_EQ(plain.assignment, fast.assignment);
        EXPECT_EQ(plain.iterations, fast.iterations);
    }
}
