#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "ktsp/geometry.hpp"

namespace testgen {

inline std::vector<ktsp::RealPoint> uniform(int n, int d, std::uint64_t seed, double side = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, side);
    std::vector<ktsp::RealPoint> pts(n, ktsp::RealPoint(d));
    for (auto& p : pts)
        for (auto& x : p) x = u(rng);
    return pts;
}

inline std::vector<ktsp::RealPoint> clustered(int n, int d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> g(0.0, 0.05);
    std::vector<ktsp::RealPoint> centres(2, ktsp::RealPoint(d));
    for (auto& c : centres)
        for (auto& x : c) x = u(rng) * 10;
    std::vector<ktsp::RealPoint> pts(n, ktsp::RealPoint(d));
    for (int i = 0; i < n; ++i)
        for (int a = 0; a < d; ++a) pts[i][a] = centres[i % 2][a] + g(rng);
    return pts;
}

}  // namespace testgen
