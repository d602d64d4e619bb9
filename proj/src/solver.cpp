#include "ktsp/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>

#include "ktsp/errors.hpp"
#include "ktsp/quadtree.hpp"

namespace ktsp {

namespace {

double raw_cycle(const std::vector<RealPoint>& pts, const std::vector<int>& order) {
    if (order.size() < 2) return 0;
    double c = 0;
    for (std::size_t i = 0; i < order.size(); ++i) c += dist(pts[order[i]], pts[order[(i + 1) % order.size()]]);
    return c;
}

void two_opt(const std::vector<GridPoint>& pts, std::vector<int>& t) {
    const std::size_t n = t.size();
    if (n < 4) return;
    bool improved = true;
    while (improved) {
        improved = false;
        for (std::size_t i = 0; i + 1 < n; ++i)
            for (std::size_t j = i + 2; j < n; ++j) {
                std::size_t jn = (j + 1) % n;
                if (jn == i) continue;
                double before = dist(pts[t[i]], pts[t[i + 1]]) + dist(pts[t[j]], pts[t[jn]]);
                double after = dist(pts[t[i]], pts[t[j]]) + dist(pts[t[i + 1]], pts[t[jn]]);
                if (after < before - 1e-9) {
                    std::reverse(t.begin() + static_cast<long>(i) + 1, t.begin() + static_cast<long>(j) + 1);
                    improved = true;
                }
            }
    }
}

}  // namespace

std::vector<int> heuristic_k_tour(const std::vector<GridPoint>& points, int k) {
    const int n = static_cast<int>(points.size());
    if (k < 2 || k > n) throw InvalidArgument("heuristic_k_tour: need 2 <= k <= n");
    std::vector<int> best;
    double best_cost = std::numeric_limits<double>::infinity();
    for (int s = 0; s < n; ++s) {
        std::vector<int> t{s};
        std::vector<char> used(n, 0);
        used[s] = 1;
        while (static_cast<int>(t.size()) < k) {
            double bc = std::numeric_limits<double>::infinity();
            int bp = -1;
            std::size_t bpos = 0;
            for (int p = 0; p < n; ++p) {
                if (used[p]) continue;
                for (std::size_t i = 0; i < t.size(); ++i) {
                    int a = t[i], b = t[(i + 1) % t.size()];
                    double c = dist(points[a], points[p]) + dist(points[p], points[b]) -
                               (t.size() > 1 ? dist(points[a], points[b]) : 0);
                    if (c < bc) {
                        bc = c;
                        bp = p;
                        bpos = i + 1;
                    }
                }
            }
            used[bp] = 1;
            t.insert(t.begin() + static_cast<long>(bpos), bp);
        }
        two_opt(points, t);
        double c = tour_cost(points, t);
        if (c < best_cost) {
            best_cost = c;
            best = t;
        }
    }
    return best;
}

std::vector<Shift> derandomized_shifts(std::int64_t L, int d, int per_axis) {
    std::vector<std::int64_t> vals;
    if (L + 1 <= per_axis) {
        for (std::int64_t v = 0; v <= L; ++v) vals.push_back(v);
    } else {
        for (int i = 0; i < per_axis; ++i) vals.push_back(i * (L + 1) / per_axis);
    }
    std::vector<Shift> out;
    std::vector<std::size_t> idx(d, 0);
    while (true) {
        Shift s;
        for (int a = 0; a < d; ++a) s.a.push_back(vals[idx[a]]);
        out.push_back(std::move(s));
        int a = 0;
        while (a < d && ++idx[a] == vals.size()) idx[a++] = 0;
        if (a == d) break;
    }
    return out;
}

RunRecord solve_subinstance(const WellRoundedInstance& w, const Params& p, const Shift& a,
                            const SolveOptions& opt, std::vector<int>* tour_out, int n_for_base) {
    RunRecord rec;
    rec.shift = a.a;
    auto h = heuristic_k_tour(w.points, w.k);
    const double ub = tour_cost(w.points, h);
    std::vector<double> caps;
    for (double f : opt.cap_factors) caps.push_back(f);
    caps.push_back(0);
    for (double f : caps) {
        DpOptions o;
        o.max_ports = opt.max_ports;
        o.reduce = opt.reduce;
        o.n_for_base = n_for_base;
        o.max_candidates = opt.max_candidates;
        if (f > 0) o.cost_cap = ub * f;
        DpResult r = run_dp(w, p, a, o);
        rec.stats = r.stats;
        if (!r.feasible()) continue;
        Tour t = reconstruct(r, w);
        rec.feasible = true;
        rec.cost = t.cost * w.back_map.scale;
        rec.chosen_s = r.tables[0].closed[r.answer].first;
        rec.cap_factor = f;
        if (tour_out) *tour_out = t.order;
        break;
    }
    return rec;
}

SolveReport solve(const RawInstance& raw, const SolveOptions& opt) {
    validate(raw);
    if (!(opt.epsilon > 0)) throw InvalidArgument("epsilon must be positive");
    SolveReport rep;
    Instance inst = normalize(raw, opt.epsilon);
    const int n = inst.n();

    // k points on one normalized location: any order of them is a tour.
    std::map<GridPoint, std::vector<int>> at;
    for (int i = 0; i < n; ++i) at[inst.points[i]].push_back(i);
    {
        std::vector<int> best;
        double best_cost = std::numeric_limits<double>::infinity();
        for (const auto& [g, ids] : at) {
            if (static_cast<int>(ids.size()) < inst.k) continue;
            std::vector<int> t(ids.begin(), ids.begin() + inst.k);
            double c = raw_cycle(raw.points, t);
            if (c < best_cost) {
                best_cost = c;
                best = t;
            }
        }
        if (!best.empty()) {
            rep.feasible = true;
            rep.tour = best;
            rep.cost = best_cost;
            rep.chosen_s = 0;
            return rep;
        }
    }

    std::vector<PartitionOutput> parts;
    std::mt19937_64 rng(opt.seed);
    if (opt.mode == Mode::Randomized) parts.push_back(partition_randomized(inst, opt.epsilon, rng, opt.partition_constants));
    else parts = derandomized_partition(inst, opt.epsilon, opt.partition_constants);
    rep.partitions = static_cast<int>(parts.size());
    if (!parts.empty()) {
        rep.A = parts[0].A;
        rep.rho = parts[0].rho;
    }

    std::set<std::vector<int>> seen;
    std::vector<const WellRoundedInstance*> subs;
    for (const auto& part : parts)
        for (const auto& w : part.subinstances)
            if (seen.insert(w.source).second) subs.push_back(&w);
    rep.subinstances = static_cast<int>(subs.size());

    double best = std::numeric_limits<double>::infinity();
    for (std::size_t si = 0; si < subs.size(); ++si) {
        const WellRoundedInstance& w = *subs[si];
        const std::int64_t L = quadtree_bound(w);
        Params p = derive_params(opt.epsilon, n, w.d, L, opt.param_constants);
        if (opt.r > 0 || opt.m_tilde > 0)
            p = params_from_r(opt.epsilon, opt.r > 0 ? opt.r : p.r, opt.m_tilde > 0 ? opt.m_tilde : p.m_tilde, w.d);
        rep.params = p;
        std::vector<Shift> shifts;
        if (opt.mode == Mode::Randomized) shifts.push_back(sample_shift(L, w.d, rng));
        else shifts = derandomized_shifts(L, w.d, opt.shifts_per_axis);
        for (const auto& a : shifts) {
            std::vector<int> order;
            RunRecord rec = solve_subinstance(w, p, a, opt, &order, n);
            rec.subinstance = static_cast<int>(si);
            rep.dp_states += rec.stats.entries;
            rep.thresholds = std::max(rep.thresholds, rec.stats.thresholds);
            if (rec.feasible) {
                std::vector<int> tour;
                for (int i : order) tour.push_back(w.source[i]);
                double c = raw_cycle(raw.points, tour);
                if (c < best) {
                    best = c;
                    rep.feasible = true;
                    rep.tour = tour;
                    rep.cost = c;
                    rep.chosen_s = rec.chosen_s;
                }
            }
            rep.runs.push_back(std::move(rec));
        }
    }
    return rep;
}

}  // namespace ktsp
