#include "ktsp/rankmatch.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "ktsp/errors.hpp"

namespace ktsp {

Pairing normalize_pairing(Pairing p) {
    for (auto& e : p)
        if (e.first > e.second) std::swap(e.first, e.second);
    std::sort(p.begin(), p.end());
    return p;
}

PerfectMatching PerfectMatching::from_pairs(const Pairing& pairs) {
    PerfectMatching m;
    for (const auto& e : pairs) {
        m.support.push_back(e.first);
        m.support.push_back(e.second);
    }
    std::sort(m.support.begin(), m.support.end());
    if (std::adjacent_find(m.support.begin(), m.support.end()) != m.support.end())
        throw InvalidArgument("pairing is not a perfect matching: repeated identifier");
    m.mate.assign(m.support.size(), 0);
    auto pos = [&](PortalId x) {
        return static_cast<std::uint8_t>(
            std::lower_bound(m.support.begin(), m.support.end(), x) - m.support.begin());
    };
    for (const auto& e : pairs) {
        auto a = pos(e.first), b = pos(e.second);
        m.mate[a] = b;
        m.mate[b] = a;
    }
    return m;
}

Pairing PerfectMatching::pairs() const {
    Pairing out;
    for (std::size_t i = 0; i < support.size(); ++i)
        if (i < mate[i]) out.emplace_back(support[i], support[mate[i]]);
    return out;
}

bool fits(const PerfectMatching& m1, const PerfectMatching& m2) {
    if (m1.support != m2.support) throw InvalidArgument("fits: supports differ");
    const int b = m1.size();
    if (b == 0) return true;
    // Walk the alternating cycle through element 0.
    int len = 0;
    int cur = 0;
    do {
        cur = m1.mate[cur];
        cur = m2.mate[cur];
        len += 2;
    } while (cur != 0);
    return len == b;
}

namespace {

struct Graph {
    std::map<PortalId, std::vector<PortalId>> adj;

    void add(const Pairing& m) {
        for (const auto& e : m) {
            adj[e.first].push_back(e.second);
            adj[e.second].push_back(e.first);
        }
    }
    void check_degree() const {
        for (const auto& [v, nb] : adj)
            if (nb.size() > 2) throw InvalidArgument("join: identifier of degree > 2");
    }
};

// Walks from an endpoint until the other endpoint; marks edges used.
PortalId walk(const Graph& g, PortalId start, std::map<PortalId, bool>& seen) {
    PortalId prev = start, cur = start;
    seen[start] = true;
    const auto& first = g.adj.at(start);
    cur = first[0];
    while (true) {
        seen[cur] = true;
        const auto& nb = g.adj.at(cur);
        if (nb.size() == 1) return cur;
        PortalId next = (nb[0] == prev) ? nb[1] : nb[0];
        prev = cur;
        cur = next;
    }
}

}  // namespace

std::optional<Pairing> join(const Pairing& m1, const Pairing& m2) {
    Graph g;
    g.add(m1);
    g.add(m2);
    g.check_degree();
    std::map<PortalId, bool> seen;
    Pairing out;
    for (const auto& [v, nb] : g.adj) {
        if (nb.size() != 1 || seen[v]) continue;
        PortalId w = walk(g, v, seen);
        out.emplace_back(v, w);
    }
    for (const auto& [v, nb] : g.adj)
        if (!seen[v]) return std::nullopt;  // vertex on a cycle
    return normalize_pairing(out);
}

std::optional<Pairing> close_cycle(const Pairing& m1, const Pairing& m2) {
    Graph g;
    g.add(m1);
    g.add(m2);
    g.check_degree();
    if (g.adj.empty()) return std::nullopt;
    for (const auto& [v, nb] : g.adj)
        if (nb.size() != 2) return std::nullopt;
    // Count vertices reachable from the first one along the cycle.
    PortalId start = g.adj.begin()->first;
    PortalId prev = start, cur = g.adj.begin()->second[0];
    std::size_t count = 1;
    while (cur != start) {
        ++count;
        const auto& nb = g.adj.at(cur);
        PortalId next = (nb[0] == prev) ? nb[1] : nb[0];
        prev = cur;
        cur = next;
    }
    if (count != g.adj.size()) return std::nullopt;
    return Pairing{};
}

std::optional<int> opt_of(const PerfectMatching& m, const RepSet& a) {
    std::optional<int> best;
    for (const auto& e : a.entries)
        if (fits(m, e.matching) && (!best || e.kappa > *best)) best = e.kappa;
    return best;
}

int cut_words(int b) {
    if (b <= 1) return 1;
    std::int64_t bits = std::int64_t{1} << (b - 1);
    return static_cast<int>((bits + 63) / 64);
}

void cut_vector(const std::uint8_t* mate, int b, std::uint64_t* out) {
    const int words = cut_words(b);
    std::fill(out, out + words, 0);
    if (b == 0) {
        out[0] = 1;
        return;
    }
    // Masks over positions 1..b-1 of the pairs other than the one holding 0.
    std::uint64_t base = std::uint64_t{1} << (mate[0] - 1);
    std::vector<std::uint64_t> pair_masks;
    for (int i = 1; i < b; ++i)
        if (i < mate[i] && i != mate[0])
            pair_masks.push_back((std::uint64_t{1} << (i - 1)) | (std::uint64_t{1} << (mate[i] - 1)));
    const std::size_t m = pair_masks.size();
    for (std::uint64_t a = 0; a < (std::uint64_t{1} << m); ++a) {
        std::uint64_t col = base;
        for (std::size_t j = 0; j < m; ++j)
            if (a >> j & 1) col |= pair_masks[j];
        out[col >> 6] |= std::uint64_t{1} << (col & 63);
    }
}

Gf2Basis::Gf2Basis(int nbits)
    : words_((nbits + 63) / 64), row_of_bit_(static_cast<std::size_t>(words_) * 64, -1) {}

bool Gf2Basis::eliminate(std::vector<std::uint64_t>& v) const {
    for (int w = 0; w < words_; ++w) {
        while (v[w]) {
            int bit = w * 64 + __builtin_ctzll(v[w]);
            int r = row_of_bit_[bit];
            if (r < 0) return true;
            const auto& row = rows_[r];
            for (int j = w; j < words_; ++j) v[j] ^= row[j];
        }
    }
    return false;
}

bool Gf2Basis::independent(std::vector<std::uint64_t> v) const { return eliminate(v); }

bool Gf2Basis::insert(std::vector<std::uint64_t> v) {
    if (!eliminate(v)) return false;
    int bit = -1;
    for (int w = 0; w < words_ && bit < 0; ++w)
        if (v[w]) bit = w * 64 + __builtin_ctzll(v[w]);
    row_of_bit_[bit] = static_cast<int>(rows_.size());
    pivot_.push_back(bit);
    rows_.push_back(std::move(v));
    return true;
}

RepSet reduce(const RepSet& a) {
    const int b = static_cast<int>(a.support.size());
    for (const auto& e : a.entries)
        if (e.matching.support != a.support) throw InvalidArgument("reduce: entry support differs");
    std::vector<std::size_t> order(a.entries.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        const auto& ex = a.entries[x];
        const auto& ey = a.entries[y];
        if (ex.kappa != ey.kappa) return ex.kappa > ey.kappa;
        return ex.matching.mate < ey.matching.mate;
    });
    RepSet out;
    out.support = a.support;
    const int words = cut_words(b);
    Gf2Basis basis(words * 64);
    std::vector<std::uint64_t> v(words);
    for (std::size_t idx : order) {
        const auto& e = a.entries[idx];
        cut_vector(e.matching.mate.data(), b, v.data());
        if (basis.insert(v)) out.entries.push_back(e);
    }
    return out;
}

std::vector<PerfectMatching> all_perfect_matchings(const std::vector<PortalId>& support) {
    std::vector<PortalId> sorted = support;
    std::sort(sorted.begin(), sorted.end());
    const int b = static_cast<int>(sorted.size());
    std::vector<PerfectMatching> out;
    if (b % 2) return out;
    std::vector<std::uint8_t> mate(b, 0xff);
    auto rec = [&](auto&& self) -> void {
        int i = 0;
        while (i < b && mate[i] != 0xff) ++i;
        if (i == b) {
            out.push_back(PerfectMatching{sorted, mate});
            return;
        }
        for (int j = i + 1; j < b; ++j) {
            if (mate[j] != 0xff) continue;
            mate[i] = static_cast<std::uint8_t>(j);
            mate[j] = static_cast<std::uint8_t>(i);
            self(self);
            mate[i] = mate[j] = 0xff;
        }
    };
    rec(rec);
    return out;
}

}  // namespace ktsp
