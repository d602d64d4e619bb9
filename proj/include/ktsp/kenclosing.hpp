#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ktsp/geometry.hpp"

namespace ktsp {

struct BallEstimate {
    double radius = 0;
    RealPoint witness_center;
};

struct CubeEstimate {
    double side = 0;
};

struct CostEstimate {
    double A = 0;
};

struct SparsifyStats {
    int iterations = 0;
    std::int64_t work = 0;  // one unit per element scanned by a step call
    std::vector<std::size_t> sizes;  // |W_0|, |W_1|, ...
    double max_shrink = 0;           // max |W_i| / |W_{i-1}|
};

// step(p, W) returns W_i^p ⊆ W for the pivot p ∈ W.
using SparsifyStep = std::function<std::vector<int>(int p, const std::vector<int>& w)>;

// Every iteration tries all pivots and keeps the smallest W_i^p (ties: smallest
// pivot). Stops once |W| <= floor. Throws ContractViolation if no pivot
// shrinks W to at most 15/16 of its size.
std::vector<int> derandomized_sparsify_loop(std::vector<int> w0, const SparsifyStep& step,
                                            std::size_t floor = 1,
                                            SparsifyStats* stats = nullptr);

// Radius of the smallest ball around some input point holding k points
// (at most 2R*), refined by a local net round when lambda < 1.
BallEstimate approx_k_ball(const std::vector<RealPoint>& points, int k, double lambda);

// Same contract; the centre point is chosen through the sparsify loop.
BallEstimate approx_k_ball_derandomized(const std::vector<RealPoint>& points, int k,
                                        double lambda, SparsifyStats* stats = nullptr);

CubeEstimate approx_k_cube(const std::vector<RealPoint>& points, int k);

CostEstimate opt_upper_estimate(const std::vector<RealPoint>& points, int k);

}  // namespace ktsp
