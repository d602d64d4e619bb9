#include "ktsp/budget_dp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <numeric>
#include <set>
#include <string>

#include "ktsp/errors.hpp"

namespace ktsp {

int BudgetThresholds::ceil_index(double x) const {
    if (x <= 0) return 0;
    const double want = x * (1 - 1e-12);
    auto it = std::lower_bound(values.begin(), values.end(), want);
    if (it == values.end()) return -1;
    return static_cast<int>(it - values.begin());
}

BudgetThresholds build_thresholds(double epsilon, int n, int d, int k, std::int64_t L) {
    if (n < 2) throw InvalidArgument("build_thresholds: n must be >= 2");
    BudgetThresholds s;
    s.base = 1 + epsilon / std::log2(static_cast<double>(n));
    const double cap = (1 + epsilon) * d * std::pow(static_cast<double>(k), 1.0 - 1.0 / d) *
                       static_cast<double>(L);
    s.values.push_back(0);
    for (double v = 1; v <= cap * (1 + 1e-12); v *= s.base) s.values.push_back(v);
    return s;
}

const DpGroup* CellTable::find(const std::vector<PortalId>& ports) const {
    auto it = index.find(ports);
    return it == index.end() ? nullptr : &groups[it->second];
}

const DpEntry& DpResult::entry(const EntryRef& r) const {
    const CellTable& t = tables[r.cell];
    return r.group < 0 ? t.closed[r.entry] : t.groups[r.group].entries[r.entry];
}

std::vector<std::uint8_t> mate_of(const std::vector<PortalId>& support, const Pairing& pairs) {
    std::vector<std::uint8_t> mate(support.size(), 0);
    auto pos = [&](PortalId x) {
        return static_cast<std::uint8_t>(std::lower_bound(support.begin(), support.end(), x) -
                                         support.begin());
    };
    for (const auto& [a, b] : pairs) {
        auto i = pos(a), j = pos(b);
        mate[i] = j;
        mate[j] = i;
    }
    return mate;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Pick {
    EntryRef ref;
    Relabel relabel;
};

struct Cand {
    Pairing pairs;
    int kappa = 0;
    double budget = 0;  // threshold index for stored entries, real cost while folding
    bool closed = false;
    Provenance prov;
};

PortalId swap_label(PortalId l, const std::vector<int>& swapped) {
    int p = portal_of(l);
    return std::find(swapped.begin(), swapped.end(), p) != swapped.end() ? l ^ 1u : l;
}

Pairing swap_pairs(const Pairing& pairs, const std::vector<int>& swapped) {
    if (swapped.empty()) return pairs;
    Pairing out;
    out.reserve(pairs.size());
    for (const auto& [a, b] : pairs) out.emplace_back(swap_label(a, swapped), swap_label(b, swapped));
    return normalize_pairing(std::move(out));
}

Relabel swap_relabel(const std::vector<int>& swapped) {
    Relabel r;
    for (int p : swapped) {
        r.emplace_back(slot_id(p, 0), slot_id(p, 1));
        r.emplace_back(slot_id(p, 1), slot_id(p, 0));
    }
    return r;
}

struct SelItem {
    const Pair* pairs;
    int np;
    int kappa;
    double budget;
};

// Keeps candidate c iff its cut vector is independent of the candidates
// ordered before it (kappa desc, matching lex) with budget <= its own. In
// unreduced mode only exact duplicates of (matching, kappa) are merged.
std::vector<std::size_t> select(const std::vector<PortalId>& support, const std::vector<SelItem>& items,
                                bool rank) {
    const std::size_t n = items.size();
    const int b = static_cast<int>(support.size());
    std::vector<std::uint8_t> mates(n * static_cast<std::size_t>(b));
    for (std::size_t i = 0; i < n; ++i) {
        std::uint8_t* m = mates.data() + i * b;
        for (int q = 0; q < items[i].np; ++q) {
            auto pos = [&](PortalId x) {
                return static_cast<std::uint8_t>(std::lower_bound(support.begin(), support.end(), x) -
                                                 support.begin());
            };
            auto x = pos(items[i].pairs[q].first), y = pos(items[i].pairs[q].second);
            m[x] = y;
            m[y] = x;
        }
    }
    auto mate = [&](std::size_t i) { return mates.data() + i * b; };
    auto cmp_mate = [&](std::size_t x, std::size_t y) { return b ? std::memcmp(mate(x), mate(y), b) : 0; };
    if (n == 1) return {0};
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        if (items[x].kappa != items[y].kappa) return items[x].kappa > items[y].kappa;
        int c = cmp_mate(x, y);
        if (c != 0) return c < 0;
        if (items[x].budget != items[y].budget) return items[x].budget < items[y].budget;
        return x < y;
    });
    // Same matching: an entry is dropped when an earlier one has at least its
    // kappa and at most its budget (exact duplicates only in unreduced mode).
    std::vector<std::size_t> live;
    if (rank) {
        std::vector<std::pair<std::size_t, double>> best;  // matching -> least budget so far
        for (std::size_t c : order) {
            auto it = std::find_if(best.begin(), best.end(), [&](const auto& e) { return cmp_mate(e.first, c) == 0; });
            if (it != best.end()) {
                if (it->second <= items[c].budget) continue;
                it->second = items[c].budget;
            } else {
                best.emplace_back(c, items[c].budget);
            }
            live.push_back(c);
        }
    } else {
        for (std::size_t i = 0; i < order.size(); ++i) {
            std::size_t c = order[i];
            if (i > 0) {
                std::size_t o = order[i - 1];
                if (items[o].kappa == items[c].kappa && cmp_mate(o, c) == 0) continue;
            }
            live.push_back(c);
        }
        return live;
    }
    if (support.empty()) {
        // Over the empty support every entry fits every other; keep the
        // kappa/budget frontier.
        std::vector<std::size_t> out;
        double best = kInf;
        for (std::size_t c : live)
            if (items[c].budget < best) {
                out.push_back(c);
                best = items[c].budget;
            }
        return out;
    }
    const int words = cut_words(b);
    std::vector<double> budgets;
    for (std::size_t c : live) budgets.push_back(items[c].budget);
    std::sort(budgets.begin(), budgets.end());
    budgets.erase(std::unique(budgets.begin(), budgets.end()), budgets.end());
    std::vector<char> keep(n, 0);
    std::vector<std::uint64_t> cuts(live.size() * words);
    for (std::size_t i = 0; i < live.size(); ++i) cut_vector(mate(live[i]), b, cuts.data() + i * words);
    const std::size_t full = std::size_t{1} << (b - 1);
    if (words == 1) {
        // One-word vectors: plain xor basis indexed by leading bit.
        for (double f : budgets) {
            std::uint64_t basis[64] = {};
            std::size_t rank_now = 0;
            for (std::size_t i = 0; i < live.size() && rank_now < full; ++i) {
                std::size_t c = live[i];
                if (items[c].budget > f) continue;
                std::uint64_t v = cuts[i];
                while (v) {
                    int hb = 63 - __builtin_clzll(v);
                    if (!basis[hb]) {
                        basis[hb] = v;
                        ++rank_now;
                        if (items[c].budget == f) keep[c] = 1;
                        break;
                    }
                    v ^= basis[hb];
                }
            }
        }
    } else {
        for (double f : budgets) {
            Gf2Basis basis(words * 64);
            for (std::size_t i = 0; i < live.size(); ++i) {
                std::size_t c = live[i];
                if (items[c].budget > f) continue;
                std::vector<std::uint64_t> v(cuts.begin() + static_cast<long>(i * words),
                                             cuts.begin() + static_cast<long>((i + 1) * words));
                bool added = basis.insert(std::move(v));
                if (added && items[c].budget == f) keep[c] = 1;
                if (static_cast<std::size_t>(basis.rank()) == full) break;
            }
        }
    }
    std::vector<std::size_t> out;
    for (std::size_t c : live)
        if (keep[c]) out.push_back(c);
    return out;
}

struct Solver {
    const WellRoundedInstance& inst;
    DpResult& r;
    int k;
    bool filtering;
    double cap;
    int max_m;  // facet_cross_cap
    std::vector<std::uint64_t> lattice_mask;  // per portal
    std::vector<double> portal_lb;            // per portal
    std::vector<std::vector<double>> outside;  // per cell, sorted distances of outside points

    Solver(const WellRoundedInstance& w, DpResult& res)
        : inst(w), r(res), k(w.k), filtering(std::isfinite(res.opt.cost_cap)),
          cap(res.opt.cost_cap), max_m(res.params.facet_cross_cap) {
        if (max_m > 62) throw CapExceeded("facet crossing cap above 62 is not supported");
    }

    const std::vector<RealPoint>& pts() const { return r.qt.points; }

    void register_portal(int id) {
        while (static_cast<int>(lattice_mask.size()) <= id) {
            int pid = static_cast<int>(lattice_mask.size());
            const Portal& p = r.reg.get(pid);
            std::uint64_t mask = in_lattice(r.qt, p, r.params.m_tilde) ? 1 : 0;
            for (int mf = 1; mf <= max_m; ++mf) {
                int g = r.params.grid_cap / mf;
                if (g >= 1 && in_lattice(r.qt, p, g)) mask |= std::uint64_t{1} << mf;
            }
            lattice_mask.push_back(mask);
            // A closed tour through p visiting k points reaches the k-th
            // nearest point and comes back.
            std::vector<double> ds;
            for (const auto& q : pts()) ds.push_back(dist(p.pos, q));
            std::nth_element(ds.begin(), ds.begin() + (k - 1), ds.end());
            portal_lb.push_back(2 * ds[k - 1]);
        }
    }

    double seg_lb(const RealPoint& u, const RealPoint& v) const {
        std::vector<double> ds;
        for (const auto& q : pts()) ds.push_back(dist(u, q) + dist(q, v));
        std::nth_element(ds.begin(), ds.begin() + (k - 1), ds.end());
        return dist(u, v) + ds[k - 1];
    }

    void build_outside() {
        const auto& qt = r.qt;
        outside.resize(qt.cells.size());
        for (std::size_t ci = 0; ci < qt.cells.size(); ++ci) {
            const Cell& c = qt.cells[ci];
            std::vector<char> in(pts().size(), 0);
            for (int p : c.points) in[p] = 1;
            auto& out = outside[ci];
            for (std::size_t i = 0; i < pts().size(); ++i) {
                if (in[i]) continue;
                double s = 0;
                for (int a = 0; a < qt.d; ++a) {
                    double lo = static_cast<double>(c.lo[a]), hi = lo + static_cast<double>(c.side);
                    double x = pts()[i][a];
                    double g = x < lo ? lo - x : (x > hi ? x - hi : 0);
                    s += g * g;
                }
                out.push_back(std::sqrt(s));
            }
            std::sort(out.begin(), out.end());
        }
    }

    // Lower bound on a tour of which this entry is the part inside cell ci.
    bool entry_ok(int ci, double cost, int kappa) const {
        if (!filtering) return true;
        double lb = cost;
        if (kappa < k) {
            std::size_t need = static_cast<std::size_t>(k - kappa);
            const auto& o = outside[ci];
            if (o.size() < need) return false;
            lb += 2 * o[need - 1];
        }
        return lb <= cap * (1 + 1e-12);
    }

    bool port_ok(int pid) const { return !filtering || portal_lb[pid] <= cap * (1 + 1e-12); }

    // Fine-set test with per-portal lattice masks.
    bool fine(int ci, const std::vector<PortalId>& ports) const {
        if (ports.size() % 2) return false;
        const int nf = 2 * r.qt.d;
        std::vector<int> count(nf, 0);
        std::vector<std::uint64_t> mask(nf, ~std::uint64_t{0});
        for (std::size_t i = 0; i < ports.size(); ++i) {
            PortalId x = ports[i];
            if (i > 0 && ports[i - 1] >= x) return false;
            if (slot_of(x) == 1 && (i == 0 || ports[i - 1] != (x ^ 1u))) return false;
            int pid = portal_of(x);
            int f = facet_index_of(r.qt, ci, r.reg.get(pid));
            if (f < 0) return false;
            ++count[f];
            mask[f] &= lattice_mask[pid];
        }
        for (int f = 0; f < nf; ++f) {
            if (count[f] == 0) continue;
            if (count[f] == 1 && (mask[f] & 1)) continue;
            if (count[f] > max_m) return false;
            std::uint64_t want = 0;
            for (int mf = count[f]; mf <= max_m; ++mf) want |= std::uint64_t{1} << mf;
            if (!(mask[f] & want)) return false;
        }
        return true;
    }

    // Necessary condition for labels to extend to a fine set of cell ci:
    // labels off the cell are ignored.
    bool partial_fine(int ci, const std::vector<PortalId>& labels) const {
        const int nf = 2 * r.qt.d;
        int total = 0;
        std::vector<int> count(nf, 0);
        std::vector<std::uint64_t> mask(nf, ~std::uint64_t{0});
        for (PortalId x : labels) {
            int pid = portal_of(x);
            int f = facet_index_of(r.qt, ci, r.reg.get(pid));
            if (f < 0) continue;
            ++total;
            ++count[f];
            mask[f] &= lattice_mask[pid];
        }
        if (total > r.opt.max_ports) return false;
        for (int f = 0; f < nf; ++f) {
            if (count[f] == 0) continue;
            if (count[f] == 1 && (mask[f] & 1)) continue;
            if (count[f] > max_m) return false;
            if (!(mask[f] >> count[f])) return false;
        }
        return true;
    }

    std::vector<int> cell_portals(int ci) {
        const auto& p = r.params;
        std::vector<int> gs{p.m_tilde};
        for (int mf = 1; mf <= p.facet_cross_cap; ++mf)
            if (p.grid_cap / mf >= 1) gs.push_back(p.grid_cap / mf);
        std::sort(gs.begin(), gs.end());
        gs.erase(std::unique(gs.begin(), gs.end()), gs.end());
        std::vector<int> out;
        for (int f = 0; f < 2 * r.qt.d; ++f) {
            Facet fc{ci, f / 2, f % 2};
            for (int g : gs)
                for (int x : facet_portals(r.qt, r.reg, fc, g)) out.push_back(x);
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        for (int x : out) register_portal(x);
        std::vector<int> kept;
        for (int x : out)
            if (port_ok(x)) kept.push_back(x);
        return kept;
    }

    const RealPoint& pos(PortalId l) const { return r.reg.get(portal_of(l)).pos; }

    int add_prov(Provenance p) {
        r.prov.push_back(std::move(p));
        return static_cast<int>(r.prov.size()) - 1;
    }

    void count(std::size_t n) {
        r.stats.candidates += n;
        if (r.stats.candidates > r.opt.max_candidates)
            throw CapExceeded("DP candidate count exceeds " + std::to_string(r.opt.max_candidates));
    }

    // Stores the selected candidates of one group; returns the group index.
    void store(int ci, const std::vector<PortalId>& ports, std::vector<Cand>& cands) {
        std::vector<SelItem> items;
        items.reserve(cands.size());
        for (const auto& c : cands)
            items.push_back({c.pairs.data(), static_cast<int>(c.pairs.size()), c.kappa, c.budget});
        auto keep = select(ports, items, r.opt.reduce);
        if (keep.empty()) return;
        CellTable& t = r.tables[ci];
        DpGroup g;
        g.ports = ports;
        std::sort(keep.begin(), keep.end());
        for (std::size_t i : keep) {
            DpEntry e;
            e.pairs = cands[i].pairs;
            e.kappa = cands[i].kappa;
            e.first = static_cast<int>(cands[i].budget);
            e.prov = add_prov(std::move(cands[i].prov));
            g.entries.push_back(std::move(e));
        }
        t.index.emplace(ports, static_cast<int>(t.groups.size()));
        t.groups.push_back(std::move(g));
    }

    void store_closed(int ci, std::vector<Cand>& cands) {
        std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
            if (a.kappa != b.kappa) return a.kappa > b.kappa;
            return a.budget < b.budget;
        });
        CellTable& t = r.tables[ci];
        double best = kInf;
        int last_kappa = -1;
        for (auto& c : cands) {
            bool keep = r.opt.reduce ? c.budget < best : c.kappa != last_kappa;
            if (!keep) continue;
            best = std::min(best, c.budget);
            last_kappa = c.kappa;
            DpEntry e;
            e.kappa = c.kappa;
            e.first = static_cast<int>(c.budget);
            e.prov = add_prov(std::move(c.prov));
            t.closed.push_back(std::move(e));
        }
    }

    void add_empty(int ci) {
        std::vector<Cand> c(1);
        c[0].prov.kind = Provenance::LeafStraight;
        c[0].budget = 0;
        store(ci, {}, c);
    }

    void solve_leaf(int ci) {
        const Cell& cell = r.qt.cells[ci];
        const auto& S = r.S;
        add_empty(ci);
        const int mult = static_cast<int>(cell.points.size());
        if (mult >= k && mult >= 2) {
            std::vector<Cand> c(1);
            c[0].kappa = mult;
            c[0].budget = 0;
            c[0].closed = true;
            c[0].prov.kind = Provenance::LeafClosed;
            c[0].prov.points = cell.points;
            store_closed(ci, c);
        }
        auto ports = cell_portals(ci);
        const RealPoint* p = mult > 0 ? &pts()[cell.points[0]] : nullptr;

        // |B| = 2.
        std::map<std::vector<PortalId>, std::vector<Cand>> two;
        for (std::size_t i = 0; i < ports.size(); ++i)
            for (std::size_t j = i; j < ports.size(); ++j) {
                PortalId u = slot_id(ports[i], 0), v = slot_id(ports[j], i == j ? 1 : 0);
                std::vector<PortalId> B{u, v};
                if (!fine(ci, B)) continue;
                const RealPoint &pu = pos(u), &pv = pos(v);
                std::vector<Cand> cs;
                double straight = dist(pu, pv);
                if (i != j) {
                    int f = S.ceil_index(straight);
                    if (f >= 0 && entry_ok(ci, S.values[f], 0) &&
                        (!filtering || seg_lb(pu, pv) <= cap * (1 + 1e-12))) {
                        Cand c;
                        c.pairs = {{u, v}};
                        c.budget = f;
                        c.prov.kind = Provenance::LeafStraight;
                        c.prov.u = u;
                        c.prov.v = v;
                        cs.push_back(std::move(c));
                    }
                }
                if (p) {
                    int f = S.ceil_index(dist(pu, *p) + dist(*p, pv));
                    if (f >= 0 && entry_ok(ci, S.values[f], mult) &&
                        (!filtering || seg_lb(pu, pv) <= cap * (1 + 1e-12))) {
                        Cand c;
                        c.pairs = {{u, v}};
                        c.kappa = mult;
                        c.budget = f;
                        c.prov.kind = Provenance::LeafPath;
                        c.prov.u = u;
                        c.prov.v = v;
                        c.prov.points = cell.points;
                        cs.push_back(std::move(c));
                    }
                }
                count(cs.size());
                if (!cs.empty()) two.emplace(std::move(B), std::move(cs));
            }
        for (auto& [B, cs] : two) store(ci, B, cs);
        if (r.opt.max_ports < 4) return;

        // Straight segments available for |B| > 2.
        struct Straight {
            int x, y, first;
        };
        std::vector<Straight> straights;
        for (std::size_t i = 0; i < ports.size(); ++i)
            for (std::size_t j = i + 1; j < ports.size(); ++j) {
                const RealPoint &a = r.reg.get(ports[i]).pos, &b = r.reg.get(ports[j]).pos;
                int f = S.ceil_index(dist(a, b));
                if (f < 0) continue;
                if (filtering && seg_lb(a, b) > cap * (1 + 1e-12)) continue;
                straights.push_back({ports[i], ports[j], f});
            }

        for (int b = 4; b <= r.opt.max_ports; b += 2) {
            std::map<std::vector<PortalId>, std::vector<Cand>> next;
            CellTable& t = r.tables[ci];
            const int ng = static_cast<int>(t.groups.size());
            for (int gi = 0; gi < ng; ++gi) {
                if (static_cast<int>(t.groups[gi].ports.size()) != b - 2) continue;
                const std::vector<PortalId> gp = t.groups[gi].ports;
                auto cnt = [&](int portal) {
                    return static_cast<int>(std::count_if(gp.begin(), gp.end(),
                                                          [&](PortalId l) { return portal_of(l) == portal; }));
                };
                for (const auto& st : straights) {
                    int cx = cnt(st.x), cy = cnt(st.y);
                    if (cx >= 2 || cy >= 2) continue;
                    PortalId lx = slot_id(st.x, cx), ly = slot_id(st.y, cy);
                    std::vector<PortalId> B = gp;
                    B.push_back(lx);
                    B.push_back(ly);
                    std::sort(B.begin(), B.end());
                    count(1);
                    if (!fine(ci, B)) continue;
                    std::vector<int> swappable;
                    if (cx == 1) swappable.push_back(st.x);
                    if (cy == 1) swappable.push_back(st.y);
                    const auto& entries = r.tables[ci].groups[gi].entries;
                    for (std::size_t ei = 0; ei < entries.size(); ++ei) {
                        const DpEntry& e = entries[ei];
                        int f = S.ceil_index(S.values[e.first] + S.values[st.first]);
                        if (f < 0 || !entry_ok(ci, S.values[f], e.kappa)) continue;
                        for (int m = 0; m < (1 << swappable.size()); ++m) {
                            std::vector<int> sw;
                            for (std::size_t q = 0; q < swappable.size(); ++q)
                                if (m >> q & 1) sw.push_back(swappable[q]);
                            Pairing pr = e.pairs;
                            pr.emplace_back(lx, ly);
                            Cand c;
                            c.pairs = swap_pairs(normalize_pairing(std::move(pr)), sw);
                            c.kappa = e.kappa;
                            c.budget = f;
                            c.prov.kind = Provenance::LeafExtend;
                            c.prov.u = swap_label(lx, sw);
                            c.prov.v = swap_label(ly, sw);
                            c.prov.parts.push_back(EntryRef{ci, gi, static_cast<int>(ei)});
                            c.prov.relabel.push_back(swap_relabel(sw));
                            count(1);
                            next[B].push_back(std::move(c));
                        }
                    }
                }
            }
            for (auto& [B, cs] : next) store(ci, B, cs);
        }
    }

    static constexpr int kMaxFoldPairs = 16;

    struct SmallPairing {
        std::array<Pair, kMaxFoldPairs> p;
        int n = 0;

        void push(PortalId a, PortalId b) {
            if (n == kMaxFoldPairs) throw CapExceeded("fold state with too many open paths");
            p[n++] = a < b ? Pair{a, b} : Pair{b, a};
        }
        void normalize() { std::sort(p.begin(), p.begin() + n); }
        Pairing to_pairing() const { return Pairing(p.begin(), p.begin() + n); }
    };

    // Joins two path systems through shared labels. Returns -1 on a label of
    // degree > 2, otherwise the number of closed cycles.
    static int join_small(const SmallPairing& a, const Pair* b, int nb, const std::vector<int>& sw,
                          SmallPairing& out) {
        PortalId lab[4 * kMaxFoldPairs];
        int nbr[4 * kMaxFoldPairs][2];
        int deg[4 * kMaxFoldPairs];
        int n = 0;
        auto id = [&](PortalId x) {
            for (int i = 0; i < n; ++i)
                if (lab[i] == x) return i;
            lab[n] = x;
            deg[n] = 0;
            return n++;
        };
        auto edge = [&](PortalId x, PortalId y) {
            int i = id(x), j = id(y);
            if (deg[i] >= 2 || deg[j] >= 2) return false;
            nbr[i][deg[i]++] = j;
            nbr[j][deg[j]++] = i;
            return true;
        };
        if (nb + a.n > 2 * kMaxFoldPairs) throw CapExceeded("fold state with too many open paths");
        for (int i = 0; i < a.n; ++i)
            if (!edge(a.p[i].first, a.p[i].second)) return -1;
        for (int i = 0; i < nb; ++i)
            if (!edge(swap_label(b[i].first, sw), swap_label(b[i].second, sw))) return -1;
        bool seen[4 * kMaxFoldPairs] = {};
        out.n = 0;
        for (int s = 0; s < n; ++s) {
            if (deg[s] != 1 || seen[s]) continue;
            int prev = -1, cur = s;
            seen[s] = true;
            while (true) {
                int next = nbr[cur][0] == prev && deg[cur] == 2 ? nbr[cur][1] : nbr[cur][0];
                if (cur != s && deg[cur] == 1) break;
                prev = cur;
                cur = next;
                seen[cur] = true;
            }
            out.push(lab[s], lab[cur]);
        }
        int cycles = 0;
        for (int s = 0; s < n; ++s) {
            if (seen[s]) continue;
            ++cycles;
            int prev = -1, cur = s;
            while (!seen[cur]) {
                seen[cur] = true;
                int next = nbr[cur][0] == prev ? nbr[cur][1] : nbr[cur][0];
                prev = cur;
                cur = next;
            }
        }
        out.normalize();
        return cycles;
    }

    struct PickNode {
        EntryRef ref;
        std::vector<int> swapped;
        int parent = -1;
    };

    struct FoldCand {
        SmallPairing pairs;
        int kappa = 0;
        double cost = 0;
        bool closed = false;
        int pick = -1;  // last node in the pick arena
    };

    std::vector<PickNode> arena;

    int add_pick(int parent, const EntryRef& ref, std::vector<int> swapped) {
        arena.push_back(PickNode{ref, std::move(swapped), parent});
        return static_cast<int>(arena.size()) - 1;
    }

    // Per-key selection while folding: budget is the real cost.
    void prune_fold(std::map<std::vector<PortalId>, std::vector<FoldCand>>& states) {
        for (auto& [key, cands] : states) {
            std::vector<FoldCand> open, closed;
            for (auto& c : cands) (c.closed ? closed : open).push_back(c);
            std::vector<FoldCand> out;
            if (!open.empty()) {
                std::vector<SelItem> items;
                items.reserve(open.size());
                for (const auto& c : open) items.push_back({c.pairs.p.data(), c.pairs.n, c.kappa, c.cost});
                auto keep = select(key, items, r.opt.reduce);
                std::sort(keep.begin(), keep.end());
                for (auto i : keep) out.push_back(open[i]);
            }
            if (!closed.empty()) {
                std::stable_sort(closed.begin(), closed.end(), [](const FoldCand& a, const FoldCand& b) {
                    if (a.kappa != b.kappa) return a.kappa > b.kappa;
                    return a.cost < b.cost;
                });
                double best = kInf;
                int last = -1;
                for (auto& c : closed) {
                    bool keep = r.opt.reduce ? c.cost < best : c.kappa != last;
                    if (!keep) continue;
                    best = std::min(best, c.cost);
                    last = c.kappa;
                    out.push_back(c);
                }
            }
            cands = std::move(out);
        }
    }

    void solve_internal(int ci) {
        const Cell& cell = r.qt.cells[ci];
        const auto& S = r.S;
        const int d = r.qt.d;
        const int nc = 1 << d;
        arena.clear();
        // lookahead[jj][j]: ports of child jj's groups restricted to its
        // facets towards children 0..j. A state whose labels there match
        // none of them is dead.
        std::vector<std::vector<std::set<std::vector<PortalId>>>> lookahead(nc, std::vector<std::set<std::vector<PortalId>>>(nc));
        auto towards = [&](int jj, int j) {
            std::vector<int> fs;
            for (int a = 0; a < d; ++a)
                if ((jj >> a & 1) && (jj ^ (1 << a)) <= j) fs.push_back(2 * a);
            return fs;
        };
        auto restrict_to = [&](int child, const std::vector<int>& fs, const std::vector<PortalId>& ports) {
            std::vector<PortalId> out;
            for (PortalId l : ports) {
                int f = facet_index_of(r.qt, child, r.reg.get(portal_of(l)));
                if (std::find(fs.begin(), fs.end(), f) != fs.end()) out.push_back(l);
            }
            return out;
        };
        for (int jj = 1; jj < nc; ++jj) {
            const int child = cell.children[jj];
            for (int j = 0; j < jj; ++j) {
                auto fs = towards(jj, j);
                auto& set = lookahead[jj][j];
                if (!r.tables[child].closed.empty()) set.insert({});
                for (const auto& g : r.tables[child].groups) set.insert(restrict_to(child, fs, g.ports));
            }
        }
        std::map<std::vector<PortalId>, std::vector<FoldCand>> states;
        states[{}].push_back(FoldCand{});
        for (int j = 0; j < nc; ++j) {
            const int child = cell.children[j];
            const CellTable& T = r.tables[child];
            std::vector<int> shared;
            for (int a = 0; a < d; ++a)
                if (j >> a & 1) shared.push_back(2 * a);
            auto on_shared = [&](PortalId l) {
                int f = facet_index_of(r.qt, child, r.reg.get(portal_of(l)));
                return std::find(shared.begin(), shared.end(), f) != shared.end();
            };
            auto split = [&](const std::vector<PortalId>& ports, std::vector<PortalId>& sig,
                             std::vector<PortalId>& rest) {
                for (PortalId l : ports) (on_shared(l) ? sig : rest).push_back(l);
            };
            std::map<std::vector<PortalId>, std::vector<int>> by_sig;
            std::vector<std::vector<PortalId>> g_rest(T.groups.size());
            for (std::size_t gi = 0; gi < T.groups.size(); ++gi) {
                std::vector<PortalId> sig;
                split(T.groups[gi].ports, sig, g_rest[gi]);
                by_sig[sig].push_back(static_cast<int>(gi));
            }
            std::map<std::vector<PortalId>, std::vector<FoldCand>> next;
            std::vector<FoldCand> closed_next;
            for (auto& [key, cands] : states) {
                std::vector<PortalId> sig, rest;
                split(key, sig, rest);
                std::vector<int> doubles;
                for (std::size_t i = 0; i + 1 < sig.size(); ++i)
                    if (portal_of(sig[i]) == portal_of(sig[i + 1])) doubles.push_back(portal_of(sig[i]));
                std::vector<std::vector<int>> swaps(std::size_t{1} << doubles.size());
                for (std::size_t m = 0; m < swaps.size(); ++m)
                    for (std::size_t q = 0; q < doubles.size(); ++q)
                        if (m >> q & 1) swaps[m].push_back(doubles[q]);
                auto it = by_sig.find(sig);
                if (it != by_sig.end()) {
                    for (int gi : it->second) {
                        const DpGroup& g = T.groups[gi];
                        std::vector<PortalId> open = rest;
                        open.insert(open.end(), g_rest[gi].begin(), g_rest[gi].end());
                        std::sort(open.begin(), open.end());
                        if (std::adjacent_find(open.begin(), open.end()) != open.end())
                            throw InternalError("fold: open label shared by two children");
                        bool viable = partial_fine(ci, open);
                        for (int jj = j + 1; viable && jj < nc; ++jj)
                            viable = partial_fine(cell.children[jj], open) &&
                                     lookahead[jj][j].count(restrict_to(cell.children[jj], towards(jj, j), open));
                        if (!viable) continue;
                        std::vector<FoldCand> open_next;
                        for (const auto& c : cands) {
                            for (std::size_t ei = 0; ei < g.entries.size(); ++ei) {
                                const DpEntry& e = g.entries[ei];
                                EntryRef ref{child, gi, static_cast<int>(ei)};
                                if (c.closed) {
                                    if (!g.ports.empty() || e.kappa != 0) continue;
                                    FoldCand n = c;
                                    n.pick = add_pick(c.pick, ref, {});
                                    closed_next.push_back(n);
                                    count(1);
                                    continue;
                                }
                                const double cost = c.cost + S.values[e.first];
                                if (filtering && cost > cap * (1 + 1e-12)) continue;
                                for (const auto& sw : swaps) {
                                    FoldCand n;
                                    int cycles = join_small(c.pairs, e.pairs.data(), static_cast<int>(e.pairs.size()), sw, n.pairs);
                                    if (cycles < 0) continue;
                                    n.kappa = c.kappa + e.kappa;
                                    n.cost = cost;
                                    if (cycles == 1 && n.pairs.n == 0 && open.empty()) {
                                        if (n.kappa < k) continue;
                                        n.closed = true;
                                    } else if (cycles != 0) {
                                        continue;
                                    }
                                    n.pick = add_pick(c.pick, ref, sw);
                                    (n.closed ? closed_next : open_next).push_back(n);
                                    count(1);
                                }
                            }
                        }
                        if (!open_next.empty()) {
                            auto& dst = next[open];
                            dst.insert(dst.end(), open_next.begin(), open_next.end());
                        }
                    }
                }
                // A finished tour of the child joins only an empty state.
                if (key.empty() && !T.closed.empty()) {
                    for (const auto& c : cands) {
                        if (c.closed || c.pairs.n != 0 || c.kappa != 0) continue;
                        for (std::size_t ei = 0; ei < T.closed.size(); ++ei) {
                            FoldCand n = c;
                            n.kappa = T.closed[ei].kappa;
                            n.cost = c.cost + S.values[T.closed[ei].first];
                            n.closed = true;
                            if (filtering && n.cost > cap * (1 + 1e-12)) continue;
                            n.pick = add_pick(c.pick, EntryRef{child, -1, static_cast<int>(ei)}, {});
                            closed_next.push_back(n);
                            count(1);
                        }
                    }
                }
            }
            if (!closed_next.empty()) {
                auto& dst = next[{}];
                dst.insert(dst.end(), closed_next.begin(), closed_next.end());
            }
            prune_fold(next);
            states = std::move(next);
        }

        std::vector<Cand> closed;
        for (auto& [B, cands] : states) {
            std::vector<Cand> open;
            bool port_fine = static_cast<int>(B.size()) <= r.opt.max_ports && fine(ci, B);
            if (port_fine && filtering)
                for (PortalId l : B) port_fine = port_fine && port_ok(portal_of(l));
            for (auto& fc : cands) {
                if (!fc.closed && !port_fine) continue;
                int f = S.ceil_index(fc.cost);
                if (f < 0) continue;
                Cand c;
                c.pairs = fc.pairs.to_pairing();
                c.kappa = fc.kappa;
                c.budget = f;
                c.closed = fc.closed;
                c.prov.kind = Provenance::Internal;
                for (int q = fc.pick; q >= 0; q = arena[q].parent) {
                    c.prov.parts.push_back(arena[q].ref);
                    c.prov.relabel.push_back(swap_relabel(arena[q].swapped));
                }
                std::reverse(c.prov.parts.begin(), c.prov.parts.end());
                std::reverse(c.prov.relabel.begin(), c.prov.relabel.end());
                if (c.closed) {
                    if (c.kappa >= k && (!filtering || S.values[f] <= cap * (1 + 1e-12)))
                        closed.push_back(std::move(c));
                    continue;
                }
                // A tour may miss the cell entirely, so the empty state is never cut.
                if (!B.empty() && !entry_ok(ci, S.values[f], c.kappa)) continue;
                open.push_back(std::move(c));
            }
            if (!open.empty()) store(ci, B, open);
        }
        if (!closed.empty()) store_closed(ci, closed);
    }

    void run() {
        const auto& qt = r.qt;
        r.tables.assign(qt.cells.size(), CellTable{});
        build_outside();
        // Children always have larger indices than their parent.
        for (int ci = static_cast<int>(qt.cells.size()) - 1; ci >= 0; --ci) {
            if (qt.cells[ci].leaf()) solve_leaf(ci);
            else solve_internal(ci);
        }
        const CellTable& root = r.tables[0];
        r.root_kappa.assign(r.S.size(), -1);
        for (std::size_t i = 0; i < root.closed.size(); ++i) {
            const DpEntry& e = root.closed[i];
            for (int s = e.first; s < r.S.size(); ++s) r.root_kappa[s] = std::max(r.root_kappa[s], e.kappa);
            if (e.kappa < k) continue;
            if (r.answer < 0) {
                r.answer = static_cast<int>(i);
                continue;
            }
            const DpEntry& b = root.closed[r.answer];
            if (e.first < b.first || (e.first == b.first && e.kappa > b.kappa)) r.answer = static_cast<int>(i);
        }
        r.stats.cells = static_cast<int>(qt.cells.size());
        r.stats.thresholds = r.S.size();
        for (const auto& t : r.tables) {
            r.stats.groups += t.groups.size();
            for (const auto& g : t.groups) r.stats.entries += g.entries.size();
            r.stats.entries += t.closed.size();
        }
    }
};

void apply_relabel(std::vector<Segment>& segs, const Relabel& rl) {
    if (rl.empty()) return;
    auto map = [&](PortalId x) {
        for (const auto& [from, to] : rl)
            if (from == x) return to;
        return x;
    };
    for (auto& s : segs) {
        if (s.a != kNoPort) s.a = map(s.a);
        if (s.b != kNoPort) s.b = map(s.b);
    }
}

}  // namespace

DpResult run_dp(const WellRoundedInstance& inst, const Params& p, const Shift& a, const DpOptions& opt) {
    if (inst.k < 2 || inst.k > inst.n()) throw InvalidArgument("run_dp: need 2 <= k <= n");
    DpResult r;
    r.qt = build_quadtree(inst, a);
    r.params = p;
    r.opt = opt;
    r.k = inst.k;
    int nb = opt.n_for_base > 0 ? opt.n_for_base : inst.n();
    r.S = build_thresholds(p.epsilon, std::max(nb, 2), inst.d, inst.k, r.qt.L);
    Solver s(inst, r);
    s.run();
    return r;
}

std::vector<Segment> expand(const DpResult& r, const EntryRef& ref) {
    const DpEntry& e = r.entry(ref);
    const Provenance& pv = r.prov[e.prov];
    std::vector<Segment> out;
    switch (pv.kind) {
    case Provenance::LeafStraight:
        if (pv.u != kNoPort) out.push_back(Segment{pv.u, pv.v, {}});
        break;
    case Provenance::LeafPath:
        out.push_back(Segment{pv.u, pv.v, pv.points});
        break;
    case Provenance::LeafClosed:
        out.push_back(Segment{kNoPort, kNoPort, pv.points});
        break;
    case Provenance::LeafExtend:
    case Provenance::Internal:
        for (std::size_t i = 0; i < pv.parts.size(); ++i) {
            auto sub = expand(r, pv.parts[i]);
            apply_relabel(sub, pv.relabel[i]);
            out.insert(out.end(), sub.begin(), sub.end());
        }
        if (pv.kind == Provenance::LeafExtend) out.push_back(Segment{pv.u, pv.v, {}});
        break;
    }
    return out;
}

double segments_cost(const DpResult& r, const std::vector<Segment>& segs) {
    double total = 0;
    for (const auto& s : segs) {
        std::vector<const RealPoint*> path;
        if (s.a != kNoPort) path.push_back(&r.reg.get(portal_of(s.a)).pos);
        for (int p : s.points) path.push_back(&r.qt.points[p]);
        if (s.b != kNoPort) path.push_back(&r.reg.get(portal_of(s.b)).pos);
        for (std::size_t i = 1; i < path.size(); ++i) total += dist(*path[i - 1], *path[i]);
    }
    return total;
}

double tour_cost(const std::vector<GridPoint>& points, const std::vector<int>& order) {
    if (order.size() < 2) return 0;
    double c = 0;
    for (std::size_t i = 0; i < order.size(); ++i)
        c += dist(points[order[i]], points[order[(i + 1) % order.size()]]);
    return c;
}

Tour reconstruct(const DpResult& r, const WellRoundedInstance& inst) {
    if (!r.feasible()) throw InternalError("reconstruct: no feasible root entry");
    auto segs = expand(r, EntryRef{0, -1, r.answer});
    Tour t;
    if (segs.size() == 1 && segs[0].a == kNoPort) {
        t.order = segs[0].points;
    } else {
        std::map<PortalId, std::vector<int>> at;
        for (std::size_t i = 0; i < segs.size(); ++i) {
            if (segs[i].a == kNoPort || segs[i].b == kNoPort)
                throw InternalError("reconstruct: closed piece next to open segments");
            at[segs[i].a].push_back(static_cast<int>(i));
            at[segs[i].b].push_back(static_cast<int>(i));
        }
        for (const auto& [l, v] : at)
            if (v.size() != 2) throw InternalError("reconstruct: portal label not used exactly twice");
        std::vector<char> used(segs.size(), 0);
        int cur = 0;
        PortalId enter = segs[0].a;
        std::size_t steps = 0;
        while (!used[cur]) {
            used[cur] = 1;
            ++steps;
            const Segment& s = segs[cur];
            bool forward = s.a == enter;
            if (forward) t.order.insert(t.order.end(), s.points.begin(), s.points.end());
            else t.order.insert(t.order.end(), s.points.rbegin(), s.points.rend());
            PortalId leave = forward ? s.b : s.a;
            const auto& v = at[leave];
            int next = v[0] == cur ? v[1] : v[0];
            if (v[0] == v[1]) next = cur;  // a segment that starts and ends on one label
            enter = leave;
            cur = next;
        }
        if (steps != segs.size()) throw InternalError("reconstruct: segments form more than one cycle");
    }
    t.visited = static_cast<int>(t.order.size());
    if (t.visited < inst.k) throw InternalError("reconstruct: tour visits fewer than k points");
    const DpEntry& root = r.tables[0].closed[r.answer];
    if (t.visited != root.kappa) throw InternalError("reconstruct: visited count differs from kappa");
    t.cost = tour_cost(inst.points, t.order);
    return t;
}

}  // namespace ktsp
