#pragma once

#include <cstdint>
#include <vector>

namespace ktsp {

using RealPoint = std::vector<double>;
using GridPoint = std::vector<std::int64_t>;

struct RawInstance {
    std::vector<RealPoint> points;
    int k = 0;
    int d = 0;
};

// Points on {0..L}^d. raw = offset + scale * grid.
struct Instance {
    std::vector<GridPoint> points;
    int k = 0;
    int d = 0;
    std::int64_t L = 1;
    double scale = 1.0;
    RealPoint offset;

    RealPoint to_raw(const GridPoint& p) const;
    int n() const { return static_cast<int>(points.size()); }
};

struct Params {
    double epsilon = 1.0;
    int r = 1;
    int m_tilde = 1;
    int grid_cap = 1;         // r^{2d-2}
    int facet_cross_cap = 1;  // r^{d-1}
};

struct ParamConstants {
    double c_r = 4.0;
    double c_m = 1.0;
};

// Throws InvalidInstance when the raw instance breaks its invariants.
void validate(const RawInstance& raw);

double dist(const RealPoint& p, const RealPoint& q);
double dist(const GridPoint& p, const GridPoint& q);

std::int64_t next_pow2(std::int64_t x);

// Translate the bounding box to the origin, scale it to side L and round
// half-up. L is the least power of two >= c_norm * n * sqrt(d) / epsilon.
Instance normalize(const RawInstance& raw, double epsilon, double c_norm = 64.0);

Params derive_params(double epsilon, int n, int d, std::int64_t L,
                     ParamConstants c = {});

// Params with caps recomputed from r.
Params params_from_r(double epsilon, int r, int m_tilde, int d);

bool params_consistent(const Params& p, int d);

std::int64_t ipow(std::int64_t base, int e);

}  // namespace ktsp
