#include "ktsp/quadtree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include "ktsp/errors.hpp"

namespace ktsp {

Shift sample_shift(std::int64_t L, int d, std::mt19937_64& rng) {
    Shift s;
    s.a.resize(d, 0);
    if (L <= 0) return s;
    std::uniform_int_distribution<std::int64_t> u(0, L);
    for (auto& x : s.a) x = u(rng);
    return s;
}

std::int64_t quadtree_bound(const WellRoundedInstance& inst) {
    return next_pow2(inst.bbox_side + 1);
}

namespace {

void split_cell(Quadtree& qt, int ci) {
    // Copy what we need: push_back below may reallocate qt.cells.
    const std::int64_t side = qt.cells[ci].side;
    const std::vector<std::int64_t> lo = qt.cells[ci].lo;
    const std::vector<int> pts = qt.cells[ci].points;
    const int depth = qt.cells[ci].depth;
    if (pts.size() <= 1 || side <= 1) return;
    const int d = qt.d;
    const std::int64_t half = side / 2;
    std::vector<int> kids;
    for (int c = 0; c < (1 << d); ++c) {
        Cell child;
        child.lo = lo;
        for (int a = 0; a < d; ++a)
            if (c >> a & 1) child.lo[a] += half;
        child.side = half;
        child.depth = depth + 1;
        child.parent = ci;
        for (int p : pts) {
            bool in = true;
            for (int a = 0; a < d && in; ++a) {
                double u = qt.points[p][a];
                in = u > static_cast<double>(child.lo[a]) &&
                     u < static_cast<double>(child.lo[a] + half);
            }
            if (in) child.points.push_back(p);
        }
        kids.push_back(static_cast<int>(qt.cells.size()));
        qt.cells.push_back(std::move(child));
    }
    qt.cells[ci].children = kids;
    std::size_t total = 0;
    for (int k : kids) total += qt.cells[k].points.size();
    if (total != pts.size()) throw InternalError("point lies on a cell boundary");
    for (int k : kids) split_cell(qt, k);
    int h = 0;
    for (int k : kids) h = std::max(h, qt.cells[k].height + 1);
    qt.cells[ci].height = h;
}

std::int64_t ceil_div(std::int64_t a, std::int64_t b) {
    // b > 0
    std::int64_t q = a / b;
    if (a % b != 0 && a > 0) ++q;
    return q;
}

}  // namespace

Quadtree build_quadtree(const WellRoundedInstance& inst, const Shift& a) {
    Quadtree qt;
    qt.d = inst.d;
    qt.L = quadtree_bound(inst);
    qt.shift = a;
    if (static_cast<int>(a.a.size()) != inst.d) throw InvalidArgument("shift dimension mismatch");
    for (auto x : a.a)
        if (x < 0 || x > qt.L) throw InvalidArgument("shift outside {0..L}");
    for (const auto& p : inst.points) {
        RealPoint u(inst.d);
        for (int i = 0; i < inst.d; ++i) {
            u[i] = static_cast<double>(p[i] + 1 + a.a[i]) - 0.5;
            if (u[i] <= 0 || u[i] >= static_cast<double>(2 * qt.L))
                throw InternalError("point outside the root cube");
        }
        qt.points.push_back(std::move(u));
    }
    Cell root;
    root.lo.assign(inst.d, 0);
    root.side = 2 * qt.L;
    for (int i = 0; i < inst.n(); ++i) root.points.push_back(i);
    qt.cells.push_back(std::move(root));
    split_cell(qt, 0);
    return qt;
}

std::int64_t facet_plane(const Quadtree& qt, const Facet& f) {
    const Cell& c = qt.cells[f.cell];
    return c.lo[f.axis] + (f.side ? c.side : 0);
}

bool on_root_boundary(const Quadtree& qt, const Facet& f) {
    std::int64_t p = facet_plane(qt, f);
    return p == 0 || p == 2 * qt.L;
}

std::int64_t plane_level_side(std::int64_t plane) { return plane & -plane; }

int per_axis_count(int m, int d) {
    if (m <= 1 || d <= 1) return 1;
    int s = 1;
    while (ipow(s, d - 1) < m) ++s;
    return s;
}

PortalGrid grid_points(const Quadtree& qt, const Facet& f, int m) {
    if (m < 1) throw InvalidArgument("grid_points: m must be >= 1");
    PortalGrid g;
    g.facet = f;
    g.m = m;
    g.per_axis = per_axis_count(m, qt.d);
    const Cell& c = qt.cells[f.cell];
    const int s = g.per_axis;
    std::vector<int> idx(qt.d, 0);
    while (true) {
        RealPoint p(qt.d);
        for (int a = 0; a < qt.d; ++a) {
            if (a == f.axis) p[a] = static_cast<double>(facet_plane(qt, f));
            else p[a] = static_cast<double>(c.lo[a]) + (idx[a] + 0.5) * static_cast<double>(c.side) / s;
        }
        g.points.push_back(std::move(p));
        int a = 0;
        while (a < qt.d && (a == f.axis || ++idx[a] == s)) {
            if (a != f.axis) idx[a] = 0;
            ++a;
        }
        if (a == qt.d) break;
    }
    return g;
}

int PortalRegistry::intern(int axis, std::int64_t plane, const std::vector<std::int64_t>& num,
                           const std::vector<std::int64_t>& den, int d) {
    std::vector<std::int64_t> key{axis, plane};
    for (std::size_t i = 0; i < num.size(); ++i) {
        key.push_back(num[i]);
        key.push_back(den[i]);
    }
    auto it = index_.find(key);
    if (it != index_.end()) return it->second;
    Portal p;
    p.axis = axis;
    p.plane = plane;
    p.num = num;
    p.den = den;
    p.pos.assign(d, 0);
    int j = 0;
    for (int a = 0; a < d; ++a) {
        if (a == axis) p.pos[a] = static_cast<double>(plane);
        else {
            p.pos[a] = static_cast<double>(num[j]) / static_cast<double>(den[j]);
            ++j;
        }
    }
    int id = static_cast<int>(portals_.size());
    portals_.push_back(std::move(p));
    index_.emplace(std::move(key), id);
    return id;
}

std::vector<int> facet_portals(const Quadtree& qt, PortalRegistry& reg, const Facet& f, int g) {
    std::vector<int> out;
    if (g < 1 || on_root_boundary(qt, f)) return out;
    const Cell& c = qt.cells[f.cell];
    const std::int64_t plane = facet_plane(qt, f);
    const std::int64_t sh = plane_level_side(plane);
    const std::int64_t s = per_axis_count(g, qt.d);
    std::vector<int> axes;
    for (int a = 0; a < qt.d; ++a)
        if (a != f.axis) axes.push_back(a);
    const int m = static_cast<int>(axes.size());
    std::vector<std::int64_t> qlo(m), qhi(m);
    for (int j = 0; j < m; ++j) {
        std::int64_t A = 2 * s * c.lo[axes[j]];
        std::int64_t B = 2 * s * (c.lo[axes[j]] + c.side);
        qlo[j] = ceil_div(A - sh, 2 * sh);
        qhi[j] = ceil_div(B - sh, 2 * sh) - 1;
        if (qlo[j] > qhi[j]) return out;
    }
    std::vector<std::int64_t> q = qlo, num(m), den(m);
    while (true) {
        for (int j = 0; j < m; ++j) {
            std::int64_t nu = (2 * q[j] + 1) * sh, de = 2 * s;
            std::int64_t gg = std::gcd(nu, de);
            num[j] = nu / gg;
            den[j] = de / gg;
        }
        out.push_back(reg.intern(f.axis, plane, num, den, qt.d));
        int j = 0;
        while (j < m && ++q[j] > qhi[j]) q[j] = qlo[j], ++j;
        if (j == m) break;
    }
    return out;
}

bool in_lattice(const Quadtree& qt, const Portal& p, int g) {
    if (g < 1) return false;
    const std::int64_t sh = plane_level_side(p.plane);
    const std::int64_t s = per_axis_count(g, qt.d);
    for (std::size_t j = 0; j < p.num.size(); ++j) {
        std::int64_t top = 2 * s * p.num[j];
        std::int64_t bot = p.den[j] * sh;
        if (top % bot != 0) return false;
        if (((top / bot) & 1) == 0) return false;
    }
    return true;
}

int facet_index_of(const Quadtree& qt, int ci, const Portal& p) {
    const Cell& c = qt.cells[ci];
    int side;
    if (p.plane == c.lo[p.axis]) side = 0;
    else if (p.plane == c.lo[p.axis] + c.side) side = 1;
    else return -1;
    int j = 0;
    for (int a = 0; a < qt.d; ++a) {
        if (a == p.axis) continue;
        std::int64_t lo = c.lo[a] * p.den[j], hi = (c.lo[a] + c.side) * p.den[j];
        if (p.num[j] < lo || p.num[j] >= hi) return -1;
        ++j;
    }
    return 2 * p.axis + side;
}

namespace {

using Option = std::vector<PortalId>;

void multisets(const std::vector<int>& ports, std::size_t i, int left, Option& cur,
               std::set<Option>& out) {
    if (i == ports.size()) {
        if (!cur.empty()) {
            Option o = cur;
            std::sort(o.begin(), o.end());
            out.insert(std::move(o));
        }
        return;
    }
    multisets(ports, i + 1, left, cur, out);
    for (int mult = 1; mult <= 2 && mult <= left; ++mult) {
        for (int t = 0; t < mult; ++t) cur.push_back(slot_id(ports[i], t));
        multisets(ports, i + 1, left - mult, cur, out);
        for (int t = 0; t < mult; ++t) cur.pop_back();
    }
}

}  // namespace

std::vector<FineSet> enumerate_fine_sets(const Quadtree& qt, PortalRegistry& reg, int c,
                                         const Params& p, const FineSetFilter& filter) {
    const int nf = 2 * qt.d;
    std::vector<std::vector<std::pair<Option, FacetChoice>>> per_facet(nf);
    auto allowed = [&](const std::vector<int>& v) {
        std::vector<int> out;
        for (int x : v)
            if (!filter.allow || filter.allow(x)) out.push_back(x);
        return out;
    };
    for (int f = 0; f < nf; ++f) {
        Facet fc{c, f / 2, f % 2};
        std::map<Option, FacetChoice> opts;
        opts.emplace(Option{}, FacetChoice{0, 0});
        for (int x : allowed(facet_portals(qt, reg, fc, p.m_tilde)))
            opts.emplace(Option{slot_id(x, 0)}, FacetChoice{1, 0});
        for (int mf = 1; mf <= p.facet_cross_cap; ++mf) {
            int g = p.grid_cap / mf;
            if (g < 1) continue;
            auto ports = allowed(facet_portals(qt, reg, fc, g));
            std::set<Option> sets;
            Option cur;
            multisets(ports, 0, std::min(mf, filter.max_size), cur, sets);
            for (auto& o : sets) opts.emplace(o, FacetChoice{2, mf});
        }
        for (auto& [o, ch] : opts) per_facet[f].emplace_back(o, ch);
        std::stable_sort(per_facet[f].begin(), per_facet[f].end(),
                         [](const auto& x, const auto& y) { return x.first.size() < y.first.size(); });
    }
    std::vector<FineSet> out;
    std::vector<std::size_t> idx(nf, 0);
    FineSet cur;
    cur.cell = c;
    cur.choices.resize(nf);
    auto rec = [&](auto&& self, int f, int size) -> void {
        if (size > filter.max_size) return;
        if (f == nf) {
            if (size % 2) return;
            FineSet fs;
            fs.cell = c;
            fs.choices = cur.choices;
            fs.ports = cur.ports;
            std::sort(fs.ports.begin(), fs.ports.end());
            out.push_back(std::move(fs));
            return;
        }
        for (const auto& [o, ch] : per_facet[f]) {
            if (size + static_cast<int>(o.size()) > filter.max_size) break;
            cur.choices[f] = ch;
            cur.ports.insert(cur.ports.end(), o.begin(), o.end());
            self(self, f + 1, size + static_cast<int>(o.size()));
            cur.ports.resize(cur.ports.size() - o.size());
        }
    };
    rec(rec, 0, 0);
    std::stable_sort(out.begin(), out.end(),
                     [](const FineSet& x, const FineSet& y) { return x.ports.size() < y.ports.size(); });
    return out;
}

bool is_fine(const Quadtree& qt, PortalRegistry& reg, int c, const std::vector<PortalId>& ports,
             const Params& p, std::vector<FacetChoice>* choices) {
    const int nf = 2 * qt.d;
    if (ports.size() % 2) return false;
    for (std::size_t i = 1; i < ports.size(); ++i)
        if (ports[i] <= ports[i - 1]) return false;
    std::vector<std::vector<int>> on(nf);  // portal ids per facet, with multiplicity
    for (PortalId x : ports) {
        int pid = portal_of(x);
        if (pid >= reg.size()) return false;
        int f = facet_index_of(qt, c, reg.get(pid));
        if (f < 0) return false;
        if (slot_of(x) == 1 &&
            !std::binary_search(ports.begin(), ports.end(), slot_id(pid, 0)))
            return false;
        on[f].push_back(pid);
    }
    if (choices) choices->assign(nf, FacetChoice{});
    for (int f = 0; f < nf; ++f) {
        const auto& v = on[f];
        if (v.empty()) continue;
        if (v.size() == 1 && in_lattice(qt, reg.get(v[0]), p.m_tilde)) {
            if (choices) (*choices)[f] = FacetChoice{1, 0};
            continue;
        }
        bool ok = false;
        for (int mf = static_cast<int>(v.size()); mf <= p.facet_cross_cap && !ok; ++mf) {
            int g = p.grid_cap / mf;
            if (g < 1) continue;
            bool all = true;
            for (int pid : v) all = all && in_lattice(qt, reg.get(pid), g);
            if (all) {
                ok = true;
                if (choices) (*choices)[f] = FacetChoice{2, mf};
            }
        }
        if (!ok) return false;
    }
    return true;
}

}  // namespace ktsp
