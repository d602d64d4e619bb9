#include "ktsp/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ktsp/errors.hpp"

namespace ktsp {

RealPoint Instance::to_raw(const GridPoint& p) const {
    RealPoint out(p.size());
    for (std::size_t i = 0; i < p.size(); ++i)
        out[i] = offset[i] + scale * static_cast<double>(p[i]);
    return out;
}

void validate(const RawInstance& raw) {
    if (raw.d < 2) throw InvalidInstance("dimension must be at least 2");
    if (raw.points.size() < 2) throw InvalidInstance("need at least 2 points");
    if (raw.k < 2 || raw.k > static_cast<int>(raw.points.size()))
        throw InvalidInstance("k must satisfy 2 <= k <= n (k=" + std::to_string(raw.k) +
                              ", n=" + std::to_string(raw.points.size()) + ")");
    for (std::size_t i = 0; i < raw.points.size(); ++i) {
        if (static_cast<int>(raw.points[i].size()) != raw.d)
            throw InvalidInstance("point " + std::to_string(i) + " has " +
                                  std::to_string(raw.points[i].size()) +
                                  " coordinates, expected " + std::to_string(raw.d));
        for (double x : raw.points[i])
            if (!std::isfinite(x))
                throw InvalidInstance("point " + std::to_string(i) + " has a non-finite coordinate");
    }
}

double dist(const RealPoint& p, const RealPoint& q) {
    double s = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        double t = p[i] - q[i];
        s += t * t;
    }
    return std::sqrt(s);
}

double dist(const GridPoint& p, const GridPoint& q) {
    double s = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        double t = static_cast<double>(p[i] - q[i]);
        s += t * t;
    }
    return std::sqrt(s);
}

std::int64_t next_pow2(std::int64_t x) {
    std::int64_t p = 1;
    while (p < x) p <<= 1;
    return p;
}

std::int64_t ipow(std::int64_t base, int e) {
    std::int64_t r = 1;
    for (int i = 0; i < e; ++i) r *= base;
    return r;
}

Instance normalize(const RawInstance& raw, double epsilon, double c_norm) {
    if (raw.points.size() < 2) throw InvalidInstance("need at least 2 points");
    if (!(epsilon > 0)) throw InvalidArgument("epsilon must be positive");
    validate(raw);

    const int d = raw.d;
    const int n = static_cast<int>(raw.points.size());
    RealPoint lo(d, std::numeric_limits<double>::infinity());
    RealPoint hi(d, -std::numeric_limits<double>::infinity());
    for (const auto& p : raw.points)
        for (int i = 0; i < d; ++i) {
            lo[i] = std::min(lo[i], p[i]);
            hi[i] = std::max(hi[i], p[i]);
        }
    double side = 0;
    for (int i = 0; i < d; ++i) side = std::max(side, hi[i] - lo[i]);

    Instance inst;
    inst.k = raw.k;
    inst.d = d;
    double target = c_norm * n * std::sqrt(static_cast<double>(d)) / epsilon;
    inst.L = next_pow2(static_cast<std::int64_t>(std::ceil(target)));
    inst.offset = lo;
    inst.scale = side > 0 ? side / static_cast<double>(inst.L) : 1.0;
    inst.points.reserve(n);
    for (const auto& p : raw.points) {
        GridPoint g(d);
        for (int i = 0; i < d; ++i) {
            double u = side > 0 ? (p[i] - lo[i]) / inst.scale : 0.0;
            auto v = static_cast<std::int64_t>(std::floor(u + 0.5));
            g[i] = std::clamp<std::int64_t>(v, 0, inst.L);
        }
        inst.points.push_back(std::move(g));
    }
    return inst;
}

static int ceil_tol(double x) {
    // Guard against values like 9.000000000001 produced by rounding.
    return static_cast<int>(std::ceil(x - 1e-9));
}

Params params_from_r(double epsilon, int r, int m_tilde, int d) {
    Params p;
    p.epsilon = epsilon;
    p.r = std::max(1, r);
    p.m_tilde = std::max(1, m_tilde);
    p.grid_cap = static_cast<int>(ipow(p.r, 2 * d - 2));
    p.facet_cross_cap = static_cast<int>(ipow(p.r, d - 1));
    return p;
}

Params derive_params(double epsilon, int n, int d, std::int64_t L, ParamConstants c) {
    if (!(epsilon > 0)) throw InvalidArgument("epsilon must be positive");
    if (n < 2) throw InvalidArgument("n must be at least 2");
    int r = ceil_tol(c.c_r / epsilon);
    double logL = L > 1 ? std::log2(static_cast<double>(L)) : 0.0;
    double base = c.c_m * std::sqrt(static_cast<double>(d)) / epsilon * logL;
    int m = ceil_tol(std::pow(base, d - 1));
    return params_from_r(epsilon, r, m, d);
}

bool params_consistent(const Params& p, int d) {
    return p.r >= 1 && p.m_tilde >= 1 && p.grid_cap == ipow(p.r, 2 * d - 2) &&
           p.facet_cross_cap == ipow(p.r, d - 1);
}

}  // namespace ktsp
