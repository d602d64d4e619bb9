#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "ktsp/errors.hpp"
#include "ktsp/oracle.hpp"
#include "support.hpp"

using namespace ktsp;

namespace {

// Brute force over subsets and permutations; only for n <= 7.
double brute_k_tsp(const std::vector<RealPoint>& pts, int k) {
    const int n = static_cast<int>(pts.size());
    double best = INFINITY;
    for (int mask = 0; mask < (1 << n); ++mask) {
        if (__builtin_popcount(mask) < k) continue;
        std::vector<int> order;
        for (int i = 0; i < n; ++i)
            if (mask >> i & 1) order.push_back(i);
        if (order.size() == 1) { best = std::min(best, 0.0); continue; }
        do {
            if (order[0] != __builtin_ctz(mask)) break;
            best = std::min(best, cycle_cost(pts, order));
        } while (std::next_permutation(order.begin() + 1, order.end()));
    }
    return best;
}

double sweep_k_cube(const std::vector<RealPoint>& pts, int k, double step) {
    // Candidate corners on a step-spaced grid, side searched on the same grid.
    double lo[2] = {INFINITY, INFINITY}, hi[2] = {-INFINITY, -INFINITY};
    for (const auto& p : pts)
        for (int a = 0; a < 2; ++a) lo[a] = std::min(lo[a], p[a]), hi[a] = std::max(hi[a], p[a]);
    double best = INFINITY;
    for (double x = lo[0] - step; x <= hi[0]; x += step)
        for (double y = lo[1] - step; y <= hi[1]; y += step) {
            std::vector<double> need;
            for (const auto& p : pts)
                if (p[0] >= x && p[1] >= y) need.push_back(std::max(p[0] - x, p[1] - y));
            if (static_cast<int>(need.size()) < k) continue;
            std::nth_element(need.begin(), need.begin() + (k - 1), need.end());
            best = std::min(best, need[k - 1]);
        }
    return best;
}

}  // namespace

TEST_CASE("exact_k_tsp examples") {
    CHECK(exact_k_tsp({{0, 0}, {3, 0}}, 2).value == 6.0);
    CHECK(exact_k_tsp({{0, 0}, {3, 0}, {3, 4}}, 3).value == doctest::Approx(12.0));
    std::vector<RealPoint> sq{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    double tri = INFINITY;
    for (int skip = 0; skip < 4; ++skip) {
        std::vector<int> o;
        for (int i = 0; i < 4; ++i)
            if (i != skip) o.push_back(i);
        tri = std::min(tri, cycle_cost(sq, o));
    }
    auto r = exact_k_tsp(sq, 3);
    CHECK(r.value == doctest::Approx(tri));
    CHECK(r.value == doctest::Approx(2 + std::sqrt(2.0)));
    CHECK(exact_k_tsp(sq, 4).value == doctest::Approx(4.0));
}

TEST_CASE("exact_k_tsp matches brute force and its witness") {
    for (std::uint64_t seed = 1; seed <= 25; ++seed) {
        int n = 3 + static_cast<int>(seed % 5);
        auto pts = testgen::uniform(n, 2, seed);
        for (int k = 2; k <= n; ++k) {
            auto r = exact_k_tsp(pts, k);
            CHECK(r.value == doctest::Approx(brute_k_tsp(pts, k)).epsilon(1e-12));
            CHECK(static_cast<int>(r.tour.size()) >= k);
            CHECK(std::abs(cycle_cost(pts, r.tour) - r.value) <= 1e-9 * std::max(1.0, r.value));
        }
    }
}

TEST_CASE("exact_k_tsp is monotone in k and refuses large n") {
    auto pts = testgen::uniform(9, 2, 77);
    double prev = 0;
    for (int k = 2; k <= 9; ++k) {
        double v = exact_k_tsp(pts, k).value;
        CHECK(v >= prev - 1e-12);
        prev = v;
    }
    CHECK_THROWS_AS(exact_k_tsp(testgen::uniform(kExactTspCap + 1, 2, 1), 3), CapExceeded);
}

TEST_CASE("exact_k_cube examples and sweep cross-check") {
    std::vector<RealPoint> sq{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    CHECK(exact_k_cube(sq, 1).value == 0.0);
    CHECK(exact_k_cube(sq, 4).value == 1.0);
    for (std::uint64_t seed = 3; seed < 6; ++seed) {
        auto pts = testgen::uniform(20, 2, seed);
        auto r = exact_k_cube(pts, 7);
        CHECK(std::abs(r.value - sweep_k_cube(pts, 7, 1e-3)) <= 2e-3);
        CHECK(count_in_cube(pts, r.anchor, r.value) >= 7);
    }
    auto pts = testgen::uniform(30, 2, 8);
    double prev = 0;
    for (int k = 1; k <= 30; ++k) {
        double v = exact_k_cube(pts, k).value;
        CHECK(v >= prev);
        prev = v;
    }
}

TEST_CASE("exact_k_ball_2d examples") {
    std::vector<RealPoint> tri{{0, 0}, {1, 0}, {0.5, std::sqrt(3.0) / 2}};
    CHECK(exact_k_ball_2d(tri, 3).value == doctest::Approx(1 / std::sqrt(3.0)));
    auto pts = testgen::uniform(25, 2, 4);
    double closest = INFINITY;
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j) closest = std::min(closest, dist(pts[i], pts[j]));
    CHECK(exact_k_ball_2d(pts, 2).value == doctest::Approx(closest / 2));
    auto r = exact_k_ball_2d(pts, 9);
    CHECK(count_in_ball(pts, r.anchor, r.value) >= 9);
    // Shrinking the witness slightly loses the k-th point.
    CHECK(count_in_ball(pts, r.anchor, r.value * (1 - 1e-6), 0) < 9);
    CHECK_THROWS_AS(exact_k_ball_2d({{0, 0, 0}, {1, 1, 1}}, 2), InvalidArgument);
}
