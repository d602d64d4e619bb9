#pragma once

#include <vector>

#include "ktsp/geometry.hpp"

namespace ktsp {

inline constexpr int kExactTspCap = 13;
inline constexpr int kExactCubeCap = 500;
inline constexpr int kExactBallCap = 200;

// value plus a witness: the tour for k-TSP, the lower corner of the cube, or
// the centre of the ball.
struct OracleResult {
    double value = 0;
    std::vector<int> tour;
    RealPoint anchor;
};

OracleResult exact_k_tsp(const std::vector<RealPoint>& points, int k);
OracleResult exact_k_cube(const std::vector<RealPoint>& points, int k);
OracleResult exact_k_ball_2d(const std::vector<RealPoint>& points, int k);

// Witness re-evaluation.
double cycle_cost(const std::vector<RealPoint>& points, const std::vector<int>& order);
int count_in_cube(const std::vector<RealPoint>& points, const RealPoint& corner, double side,
                  double tol = 1e-9);
int count_in_ball(const std::vector<RealPoint>& points, const RealPoint& center, double radius,
                  double tol = 1e-9);

}  // namespace ktsp
