#include <algorithm>
#include <random>
#include <set>

#include "doctest.h"
#include "ktsp/errors.hpp"
#include "ktsp/rankmatch.hpp"

using namespace ktsp;

namespace {

PerfectMatching pm(Pairing p) { return PerfectMatching::from_pairs(p); }

// Independent fits oracle: union-find component count on the multigraph.
bool fits_oracle(const PerfectMatching& a, const PerfectMatching& b) {
    const int n = a.size();
    std::vector<int> parent(n);
    for (int i = 0; i < n; ++i) parent[i] = i;
    auto find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (int i = 0; i < n; ++i) {
        parent[find(i)] = find(a.mate[i]);
        parent[find(i)] = find(b.mate[i]);
    }
    std::set<int> roots;
    for (int i = 0; i < n; ++i) roots.insert(find(i));
    return roots.size() <= 1;
}

std::vector<PortalId> support(int b) {
    std::vector<PortalId> s;
    for (int i = 0; i < b; ++i) s.push_back(static_cast<PortalId>(10 + 3 * i));
    return s;
}

RepSet random_set(int b, int size, std::mt19937_64& rng) {
    auto all = all_perfect_matchings(support(b));
    std::uniform_int_distribution<std::size_t> pick(0, all.size() - 1);
    std::uniform_int_distribution<int> kap(0, 20);
    RepSet a;
    a.support = support(b);
    for (int i = 0; i < size; ++i) a.entries.push_back(Entry{all[pick(rng)], kap(rng)});
    return a;
}

bool represents(const RepSet& small, const RepSet& big) {
    for (const auto& m : all_perfect_matchings(big.support))
        if (opt_of(m, small) != opt_of(m, big)) return false;
    return true;
}

}  // namespace

TEST_CASE("fits on small supports") {
    CHECK(fits(pm({{1, 2}, {3, 4}}), pm({{1, 3}, {2, 4}})));
    CHECK_FALSE(fits(pm({{1, 2}, {3, 4}}), pm({{1, 2}, {3, 4}})));
    CHECK(fits(pm({{1, 2}}), pm({{1, 2}})));
    CHECK(fits(PerfectMatching{}, PerfectMatching{}));
    CHECK_THROWS_AS(fits(pm({{1, 2}}), pm({{1, 3}})), InvalidArgument);
}

TEST_CASE("fits agrees with a component-count oracle and is symmetric") {
    for (int b : {2, 4, 6, 8}) {
        auto all = all_perfect_matchings(support(b));
        for (const auto& x : all)
            for (const auto& y : all) {
                CHECK(fits(x, y) == fits_oracle(x, y));
                CHECK(fits(x, y) == fits(y, x));
            }
    }
}

TEST_CASE("perfect matching counts") {
    CHECK(all_perfect_matchings(support(2)).size() == 1);
    CHECK(all_perfect_matchings(support(4)).size() == 3);
    CHECK(all_perfect_matchings(support(6)).size() == 15);
    CHECK(all_perfect_matchings(support(8)).size() == 105);
    CHECK(all_perfect_matchings(support(3)).empty());
}

TEST_CASE("join concatenates paths") {
    const PortalId a = 1, b = 2, c = 3, d = 4;
    CHECK(join({{a, b}}, {{b, c}}) == Pairing{{a, c}});
    CHECK(join({{a, b}}, {{c, d}}) == Pairing{{a, b}, {c, d}});
    CHECK_FALSE(join({{a, b}}, {{a, b}}).has_value());
    CHECK_THROWS_AS(join({{a, b}, {a, c}}, {{a, d}}), InvalidArgument);
}

TEST_CASE("close_cycle requires exactly one cycle") {
    const PortalId a = 1, b = 2, c = 3, d = 4;
    CHECK(close_cycle({{a, b}}, {{a, b}}) == Pairing{});
    CHECK(close_cycle({{a, b}, {c, d}}, {{b, c}, {d, a}}) == Pairing{});
    CHECK_FALSE(close_cycle({{a, b}, {c, d}}, {{a, b}, {c, d}}).has_value());
    CHECK_FALSE(close_cycle({{a, b}}, {{b, c}}).has_value());
}

TEST_CASE("join is associative up to cycle absorption") {
    // Random partial pairings over 10 identifiers with degree <= 2 in total.
    std::mt19937_64 rng(5);
    int checked = 0;
    for (int t = 0; t < 3000; ++t) {
        std::vector<int> deg(10, 0);
        std::vector<Pairing> ms(3);
        for (auto& m : ms) {
            std::vector<PortalId> used;
            int pairs = std::uniform_int_distribution<int>(0, 3)(rng);
            for (int e = 0; e < pairs; ++e) {
                PortalId x = static_cast<PortalId>(rng() % 10), y = static_cast<PortalId>(rng() % 10);
                if (x == y || deg[x] >= 2 || deg[y] >= 2) continue;
                if (std::find(used.begin(), used.end(), x) != used.end() ||
                    std::find(used.begin(), used.end(), y) != used.end())
                    continue;
                used.push_back(x);
                used.push_back(y);
                ++deg[x];
                ++deg[y];
                m.emplace_back(x, y);
            }
            m = normalize_pairing(m);
        }
        auto left = join(ms[0], ms[1]);
        auto right = join(ms[1], ms[2]);
        std::optional<Pairing> l2, r2;
        if (left) l2 = join(*left, ms[2]);
        if (right) r2 = join(ms[0], *right);
        CHECK(l2 == r2);
        ++checked;
    }
    CHECK(checked == 3000);
}

TEST_CASE("opt_of examples") {
    RepSet a{{1, 2, 3, 4}, {Entry{pm({{1, 2}, {3, 4}}), 5}}};
    CHECK(opt_of(pm({{1, 3}, {2, 4}}), a) == 5);
    CHECK_FALSE(opt_of(pm({{1, 2}, {3, 4}}), a).has_value());

    std::mt19937_64 rng(9);
    auto big = random_set(6, 40, rng);
    for (const auto& m : all_perfect_matchings(big.support)) {
        std::optional<int> scan;
        for (const auto& e : big.entries)
            if (fits_oracle(m, e.matching) && (!scan || e.kappa > *scan)) scan = e.kappa;
        CHECK(opt_of(m, big) == scan);
    }
}

TEST_CASE("reduce keeps the dominant copy of a matching") {
    RepSet a{{1, 2, 3, 4}, {Entry{pm({{1, 2}, {3, 4}}), 3}, Entry{pm({{1, 2}, {3, 4}}), 7}}};
    auto r = reduce(a);
    REQUIRE(r.entries.size() == 1);
    CHECK(r.entries[0].kappa == 7);
}

TEST_CASE("reduce contract on random sets") {
    std::mt19937_64 rng(17);
    for (int b : {2, 4, 6}) {
        for (int t = 0; t < 40; ++t) {
            int size = std::uniform_int_distribution<int>(1, 200)(rng);
            auto a = random_set(b, size, rng);
            auto r = reduce(a);
            CHECK(r.entries.size() <= (std::size_t{1} << (b - 1)));
            for (const auto& e : r.entries) {
                bool found = false;
                for (const auto& x : a.entries)
                    found = found || (x.kappa == e.kappa && x.matching == e.matching);
                CHECK(found);
            }
            CHECK(represents(r, a));
            auto rr = reduce(r);
            CHECK(rr.entries.size() <= r.entries.size());
            CHECK(represents(rr, a));
        }
    }
}

TEST_CASE("representation is transitive") {
    std::mt19937_64 rng(23);
    for (int t = 0; t < 30; ++t) {
        auto a = random_set(6, 120, rng);
        auto a1 = reduce(a);
        auto extra = a1;
        // a1 plus dominated junk still represents a; reducing it again must too.
        for (int i = 0; i < 10; ++i) extra.entries.push_back(a.entries[rng() % a.entries.size()]);
        CHECK(represents(extra, a));
        auto a2 = reduce(extra);
        CHECK(represents(a2, extra));
        CHECK(represents(a2, a));
    }
}

TEST_CASE("reduce on the empty support keeps the best count") {
    RepSet a{{}, {Entry{PerfectMatching{}, 2}, Entry{PerfectMatching{}, 9}, Entry{PerfectMatching{}, 4}}};
    auto r = reduce(a);
    REQUIRE(r.entries.size() == 1);
    CHECK(r.entries[0].kappa == 9);
}
