#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "ktsp/errors.hpp"
#include "ktsp/kenclosing.hpp"
#include "ktsp/oracle.hpp"
#include "support.hpp"

using namespace ktsp;

TEST_CASE("approx_k_ball small examples") {
    std::vector<RealPoint> two{{0, 0}, {2, 0}};
    CHECK(approx_k_ball(two, 1, 1.0).radius == 0.0);
    double r = approx_k_ball(two, 2, 1.0).radius;
    CHECK(r >= 1.0);
    CHECK(r <= 2.0);
    CHECK_THROWS_AS(approx_k_ball(two, 3, 1.0), InvalidArgument);
    CHECK_THROWS_AS(approx_k_ball(two, 2, 0.0), InvalidArgument);
}

TEST_CASE("approx_k_ball within (1+lambda) of the exact radius") {
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
        int n = 5 + static_cast<int>(seed % 50);
        auto pts = seed % 2 ? testgen::uniform(n, 2, seed) : testgen::clustered(n, 2, seed);
        int k = 2 + static_cast<int>(seed % (n - 1));
        double exact = exact_k_ball_2d(pts, k).value;
        for (double lambda : {1.0, 0.5, 0.25}) {
            auto est = approx_k_ball(pts, k, lambda);
            CHECK(est.radius >= exact - 1e-9);
            CHECK(est.radius <= (1 + lambda) * exact + 1e-9);
            CHECK(count_in_ball(pts, est.witness_center, est.radius) >= k);
            auto der = approx_k_ball_derandomized(pts, k, lambda);
            CHECK(der.radius >= exact - 1e-9);
            CHECK(der.radius <= (1 + lambda) * exact + 1e-9);
        }
    }
}

TEST_CASE("approx_k_cube within 2 sqrt(d) of the exact side") {
    std::vector<RealPoint> sq{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    double s = approx_k_cube(sq, 4).side;
    CHECK(s >= 1.0);
    CHECK(s <= 2 * std::sqrt(2.0));
    CHECK(approx_k_cube(sq, 1).side == 0.0);
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        auto pts = testgen::uniform(30, 2, seed + 100);
        double exact = exact_k_cube(pts, 10).value;
        double side = approx_k_cube(pts, 10).side;
        CHECK(side >= exact - 1e-9);
        CHECK(side <= 2 * std::sqrt(2.0) * exact + 1e-9);
    }
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        auto pts = testgen::uniform(25, 3, seed + 300);
        double exact = exact_k_cube(pts, 6).value;
        double side = approx_k_cube(pts, 6).side;
        CHECK(side >= exact - 1e-9);
        CHECK(side <= 2 * std::sqrt(3.0) * exact + 1e-9);
    }
}

TEST_CASE("opt_upper_estimate brackets the optimum") {
    std::vector<RealPoint> two{{0, 0}, {2, 0}};
    double A = opt_upper_estimate(two, 2).A;
    CHECK(A >= 4.0);
    CHECK(A <= 2 * std::sqrt(2.0) * 4 * std::sqrt(2.0) + 1e-12);
    CHECK(opt_upper_estimate({{1, 1}, {1, 1}, {1, 1}}, 2).A == 0.0);
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        auto pts = testgen::uniform(8, 2, seed + 40);
        double opt = exact_k_tsp(pts, 5).value;
        double a = opt_upper_estimate(pts, 5).A;
        CHECK(a >= opt - 1e-9);
        CHECK(a <= 2 * std::pow(2.0, 1.5) * std::sqrt(5.0) * opt + 1e-9);
    }
}

TEST_CASE("derandomized_sparsify_loop on synthetic steps") {
    auto halve = [](int p, const std::vector<int>& w) {
        // Keep the ceil(|W|/2) elements closest to p on a line.
        std::vector<int> v = w;
        std::stable_sort(v.begin(), v.end(),
                         [p](int a, int b) { return std::abs(a - p) < std::abs(b - p); });
        v.resize((w.size() + 1) / 2);
        return v;
    };
    SparsifyStats st;
    auto one = derandomized_sparsify_loop({3}, halve, 1, &st);
    CHECK(one == std::vector<int>{3});
    CHECK(st.iterations == 0);

    std::vector<int> w0;
    for (int i = 0; i < 16; ++i) w0.push_back(i);
    auto out = derandomized_sparsify_loop(w0, halve, 1, &st);
    CHECK(out.size() == 1);
    int bound = static_cast<int>(std::ceil(std::log(16.0) / std::log(16.0 / 15.0)));
    CHECK(st.iterations <= bound);
    CHECK(st.iterations == 4);
    CHECK(st.max_shrink <= 15.0 / 16.0);
    CHECK(st.work <= 16 * 16 * 16);

    auto stuck = [](int, const std::vector<int>& w) { return w; };
    CHECK_THROWS_AS(derandomized_sparsify_loop(w0, stuck, 1, nullptr), ContractViolation);

    // Every pivot yields the same size; the smallest pivot's set wins.
    auto drop_self = [](int p, const std::vector<int>& w) {
        std::vector<int> v;
        for (int x : w)
            if (x != p) v.push_back(x);
        v.resize(v.size() / 2);
        return v;
    };
    auto tie = derandomized_sparsify_loop({5, 1, 9, 7}, drop_self, 2, &st);
    CHECK(tie == std::vector<int>{5});
}

TEST_CASE("sparsify accounting on random shrinking steps") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        std::mt19937_64 rng(seed);
        std::vector<int> w0(64 + static_cast<int>(seed * 7));
        for (std::size_t i = 0; i < w0.size(); ++i) w0[i] = static_cast<int>(i);
        auto step = [&rng](int, const std::vector<int>& w) {
            std::size_t keep = std::uniform_int_distribution<std::size_t>(0, w.size() - 1)(rng);
            return std::vector<int>(w.begin(), w.begin() + static_cast<long>(keep));
        };
        SparsifyStats st;
        derandomized_sparsify_loop(w0, step, 1, &st);
        CHECK(st.max_shrink <= 15.0 / 16.0);
        CHECK(st.work <= 16 * static_cast<std::int64_t>(w0.size() * w0.size()));
    }
}
