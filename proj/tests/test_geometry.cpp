#include <cmath>

#include "doctest.h"
#include "ktsp/errors.hpp"
#include "ktsp/geometry.hpp"
#include "support.hpp"

using namespace ktsp;

TEST_CASE("dist on small triangles") {
    CHECK(dist(GridPoint{0, 0}, GridPoint{3, 4}) == 5.0);
    CHECK(dist(GridPoint{2, 7}, GridPoint{2, 7}) == 0.0);
    CHECK(dist(GridPoint{1, 1}, GridPoint{4, 5}) == 5.0);
    CHECK(dist(RealPoint{0.5, 0.5}, RealPoint{3.5, 4.5}) == 5.0);
}

TEST_CASE("derive_params with default constants") {
    auto p = derive_params(1.0, 10, 2, 64);
    CHECK(p.r == 4);
    CHECK(p.m_tilde == 9);  // ceil(sqrt(2) * 6)
    CHECK(p.grid_cap == 16);
    CHECK(p.facet_cross_cap == 4);
    CHECK(derive_params(0.5, 10, 2, 64).r == 8);

    for (int r : {1, 2, 3, 5}) {
        auto q = params_from_r(1.0, r, 1, 2);
        CHECK(q.grid_cap == r * r);
        CHECK(q.facet_cross_cap == r);
        CHECK(params_consistent(q, 2));
    }
    auto q3 = params_from_r(1.0, 3, 1, 3);
    CHECK(q3.grid_cap == 81);
    CHECK(q3.facet_cross_cap == 9);
}

TEST_CASE("derive_params is monotone in epsilon") {
    for (int d : {2, 3})
        for (std::int64_t L : {8, 64, 1024}) {
            auto prev = derive_params(2.0, 10, d, L);
            for (double eps : {1.5, 1.0, 0.75, 0.5, 0.3, 0.1}) {
                auto cur = derive_params(eps, 10, d, L);
                CHECK(cur.r >= prev.r);
                CHECK(cur.m_tilde >= prev.m_tilde);
                prev = cur;
            }
        }
}

TEST_CASE("normalize two points and degenerate clusters") {
    RawInstance raw{{{0, 0}, {1, 0}}, 2, 2};
    auto inst = normalize(raw, 1.0);
    CHECK(inst.points[0] != inst.points[1]);
    CHECK(inst.L >= 64 * 2 * std::sqrt(2.0));
    CHECK((inst.L & (inst.L - 1)) == 0);
    double ratio = dist(inst.to_raw(inst.points[0]), inst.to_raw(inst.points[1]));
    CHECK(ratio == doctest::Approx(1.0));

    RawInstance same{{{3, 3}, {3, 3}, {3, 3}}, 2, 2};
    auto s = normalize(same, 1.0);
    CHECK(s.points.size() == 3);
    CHECK(s.points[0] == s.points[1]);
    CHECK(s.points[1] == s.points[2]);

    RawInstance one{{{1, 2}}, 1, 2};
    CHECK_THROWS_AS(normalize(one, 1.0), InvalidInstance);
}

TEST_CASE("normalize keeps pairwise distances within 1 +- eps/n") {
    const double eps = 0.5;
    RawInstance raw{testgen::uniform(10, 2, 11), 3, 2};
    auto inst = normalize(raw, eps);
    const double n = 10;
    for (int i = 0; i < 10; ++i)
        for (int j = i + 1; j < 10; ++j) {
            double g = dist(inst.to_raw(inst.points[i]), inst.to_raw(inst.points[j]));
            double r = dist(raw.points[i], raw.points[j]);
            CHECK(g / r >= 1 - eps / n);
            CHECK(g / r <= 1 + eps / n);
        }
    for (const auto& p : inst.points)
        for (auto x : p) {
            CHECK(x >= 0);
            CHECK(x <= inst.L);
        }
}

TEST_CASE("normalize separates far points and keeps tour cost within eps/2") {
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        const double eps = 0.5;
        int n = 4 + static_cast<int>(seed % 6);
        RawInstance raw{testgen::uniform(n, 2, seed * 7 + 1, 100.0), 2, 2};
        auto inst = normalize(raw, eps);
        double diam = 0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) diam = std::max(diam, dist(raw.points[i], raw.points[j]));
        double raw_cost = 0, grid_cost = 0;
        for (int i = 0; i < n; ++i) {
            int j = (i + 1) % n;
            raw_cost += dist(raw.points[i], raw.points[j]);
            grid_cost += dist(inst.to_raw(inst.points[i]), inst.to_raw(inst.points[j]));
            for (int l = i + 1; l < n; ++l)
                if (dist(raw.points[i], raw.points[l]) > eps * diam / (2 * n))
                    CHECK(inst.points[i] != inst.points[l]);
        }
        CHECK(std::abs(grid_cost - raw_cost) <= eps / 2 * raw_cost);
    }
}

TEST_CASE("validate rejects bad instances") {
    CHECK_THROWS_AS(validate(RawInstance{{{0, 0}, {1, 1}}, 3, 2}), InvalidInstance);
    CHECK_THROWS_AS(validate(RawInstance{{{0, 0}, {1}}, 2, 2}), InvalidInstance);
    CHECK_THROWS_AS(validate(RawInstance{{{0}, {1}}, 2, 1}), InvalidInstance);
    CHECK_NOTHROW(validate(RawInstance{{{0, 0}, {1, 1}}, 2, 2}));
}
