#include "ktsp/partition.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>

#include "ktsp/errors.hpp"
#include "ktsp/kenclosing.hpp"

namespace ktsp {

RealPoint BackMap::apply(const GridPoint& p) const {
    RealPoint out(p.size());
    for (std::size_t i = 0; i < p.size(); ++i)
        out[i] = offset[i] + scale * static_cast<double>(p[i]);
    return out;
}

double compute_rho(double A, double epsilon, int k, int d) {
    double dd = static_cast<double>(d);
    return A * epsilon / (16.0 * std::pow(dd, 1.5) * std::pow(static_cast<double>(k), 2.0 - 1.0 / dd));
}

WellRoundedCheck check_well_rounded(const WellRoundedInstance& w, double c_b) {
    WellRoundedCheck c;
    // Coordinates are integers by type; check they are non-negative and the
    // declared bbox matches.
    std::int64_t side = 0;
    for (int i = 0; i < w.d; ++i) {
        std::int64_t lo = INT64_MAX, hi = INT64_MIN;
        for (const auto& p : w.points) {
            lo = std::min(lo, p[i]);
            hi = std::max(hi, p[i]);
        }
        if (lo < 0) c.integral = false;
        side = std::max(side, hi - lo);
    }
    if (side != w.bbox_side) c.integral = false;
    for (std::size_t i = 0; i < w.points.size(); ++i)
        for (std::size_t j = i + 1; j < w.points.size(); ++j) {
            double dd = dist(w.points[i], w.points[j]);
            if (dd > 0 && dd < 8) c.min_distance = false;
        }
    c.bbox = static_cast<double>(w.bbox_side) <= c_b * static_cast<double>(w.k) * w.k;
    return c;
}

std::vector<GridPoint> snap_to_rho(const Instance& inst, double rho) {
    std::vector<GridPoint> out;
    out.reserve(inst.points.size());
    for (const auto& p : inst.points) {
        GridPoint g(p.size());
        for (std::size_t i = 0; i < p.size(); ++i)
            g[i] = static_cast<std::int64_t>(std::floor(static_cast<double>(p[i]) / rho + 0.5));
        out.push_back(std::move(g));
    }
    return out;
}

namespace {

std::vector<RealPoint> as_real(const Instance& inst) {
    std::vector<RealPoint> pts;
    for (const auto& p : inst.points) pts.emplace_back(p.begin(), p.end());
    return pts;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

struct Prepared {
    double A = 0, rho = 0, T = 0;
    std::int64_t T_cells = 1;
    std::vector<GridPoint> snapped;
};

Prepared prepare(const Instance& inst, double epsilon, const PartitionConstants& c) {
    if (inst.k < 2) throw InvalidArgument("partition requires k >= 2");
    Prepared pr;
    pr.A = opt_upper_estimate(as_real(inst), inst.k).A;
    if (pr.A <= 0) throw InvalidArgument("partition: A = 0 (k coincident points)");
    pr.rho = compute_rho(pr.A, epsilon, inst.k, inst.d);
    pr.T = c.c_T * inst.d * pr.A * std::log2(static_cast<double>(inst.k));
    pr.T_cells = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(pr.T / pr.rho)));
    pr.snapped = snap_to_rho(inst, pr.rho);
    return pr;
}

PartitionOutput split(const Instance& inst, const Prepared& pr,
                      const std::vector<std::int64_t>& shift, const PartitionConstants& c) {
    PartitionOutput out;
    out.A = pr.A;
    out.rho = pr.rho;
    out.T = pr.T;
    out.T_cells = pr.T_cells;
    out.coarse_shift = shift;
    std::map<std::vector<std::int64_t>, std::vector<int>> cells;
    for (int i = 0; i < inst.n(); ++i) {
        std::vector<std::int64_t> key(inst.d);
        for (int a = 0; a < inst.d; ++a) key[a] = floor_div(pr.snapped[i][a] - shift[a], pr.T_cells);
        cells[key].push_back(i);
    }
    for (const auto& [key, members] : cells) {
        if (static_cast<int>(members.size()) < inst.k) continue;
        WellRoundedInstance w;
        w.k = inst.k;
        w.d = inst.d;
        w.source = members;
        GridPoint lo(inst.d, INT64_MAX);
        for (int i : members)
            for (int a = 0; a < inst.d; ++a) lo[a] = std::min(lo[a], pr.snapped[i][a]);
        for (int i : members) {
            GridPoint g(inst.d);
            for (int a = 0; a < inst.d; ++a) g[a] = 8 * (pr.snapped[i][a] - lo[a]);
            w.bbox_side = std::max(w.bbox_side, *std::max_element(g.begin(), g.end()));
            w.points.push_back(std::move(g));
        }
        w.back_map.scale = inst.scale * pr.rho / 8.0;
        w.back_map.offset.resize(inst.d);
        for (int a = 0; a < inst.d; ++a)
            w.back_map.offset[a] = inst.offset[a] + inst.scale * pr.rho * static_cast<double>(lo[a]);
        auto chk = check_well_rounded(w, c.c_b);
        if (!chk.ok())
            throw InternalError(std::string("subinstance is not well-rounded:") +
                                (chk.integral ? "" : " integrality") +
                                (chk.min_distance ? "" : " min-distance") +
                                (chk.bbox ? "" : " bbox"));
        out.subinstances.push_back(std::move(w));
    }
    return out;
}

}  // namespace

PartitionOutput partition_with_shift(const Instance& inst, double epsilon,
                                     const std::vector<std::int64_t>& shift,
                                     PartitionConstants c) {
    auto pr = prepare(inst, epsilon, c);
    std::vector<std::int64_t> s(inst.d);
    for (int a = 0; a < inst.d; ++a) s[a] = ((shift[a] % pr.T_cells) + pr.T_cells) % pr.T_cells;
    return split(inst, pr, s, c);
}

PartitionOutput partition_instance(const Instance& inst, double epsilon, std::mt19937_64& rng,
                                   PartitionConstants c) {
    auto pr = prepare(inst, epsilon, c);
    std::uniform_int_distribution<std::int64_t> u(0, pr.T_cells - 1);
    std::vector<std::int64_t> s(inst.d);
    for (auto& x : s) x = u(rng);
    return split(inst, pr, s, c);
}

PartitionOutput partition_randomized(const Instance& inst, double epsilon, std::mt19937_64& rng,
                                     PartitionConstants c, int max_retries) {
    for (int t = 0; t < max_retries; ++t) {
        auto out = partition_instance(inst, epsilon, rng, c);
        if (!out.subinstances.empty()) return out;
    }
    for (auto& out : derandomized_partition(inst, epsilon, c))
        if (!out.subinstances.empty()) return out;
    throw InternalError("no coarse shift yields a cell with k points");
}

std::vector<std::vector<std::int64_t>> canonical_coarse_shifts(const Instance& inst,
                                                               double epsilon,
                                                               PartitionConstants c) {
    auto pr = prepare(inst, epsilon, c);
    std::vector<std::vector<std::int64_t>> axis(inst.d);
    for (int a = 0; a < inst.d; ++a) {
        std::set<std::int64_t> vals;
        for (const auto& p : pr.snapped) vals.insert(((p[a] % pr.T_cells) + pr.T_cells) % pr.T_cells);
        axis[a].assign(vals.begin(), vals.end());
    }
    std::vector<std::vector<std::int64_t>> out;
    std::vector<std::size_t> idx(inst.d, 0);
    while (true) {
        std::vector<std::int64_t> s(inst.d);
        for (int a = 0; a < inst.d; ++a) s[a] = axis[a][idx[a]];
        out.push_back(std::move(s));
        int a = 0;
        while (a < inst.d && ++idx[a] == axis[a].size()) idx[a++] = 0;
        if (a == inst.d) break;
    }
    return out;
}

std::vector<PartitionOutput> derandomized_partition(const Instance& inst, double epsilon,
                                                    PartitionConstants c) {
    auto pr = prepare(inst, epsilon, c);
    std::vector<PartitionOutput> out;
    std::set<std::vector<std::vector<int>>> seen;
    for (const auto& s : canonical_coarse_shifts(inst, epsilon, c)) {
        auto part = split(inst, pr, s, c);
        std::vector<std::vector<int>> sig;
        for (const auto& w : part.subinstances) sig.push_back(w.source);
        if (!seen.insert(sig).second) continue;
        out.push_back(std::move(part));
    }
    return out;
}

}  // namespace ktsp
