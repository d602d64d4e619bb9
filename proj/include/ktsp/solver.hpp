#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ktsp/budget_dp.hpp"
#include "ktsp/geometry.hpp"
#include "ktsp/partition.hpp"

namespace ktsp {

enum class Mode { Randomized, Derandomized };

struct SolveOptions {
    double epsilon = 0.5;
    Mode mode = Mode::Derandomized;
    std::uint64_t seed = 0;
    int r = 0;        // 0: derived
    int m_tilde = 0;  // 0: derived
    ParamConstants param_constants;
    PartitionConstants partition_constants;
    int max_ports = 4;
    bool reduce = true;
    // Per axis, derandomized mode runs every shift in {0..L} when L + 1 is at
    // most this, and an evenly spaced subset of this many values otherwise.
    int shifts_per_axis = 2;
    // Pruning caps tried in order, as multiples of a heuristic tour; a last
    // uncapped run follows when all of them come back empty.
    std::vector<double> cap_factors{2.0, 4.0};
    std::size_t max_candidates = 20'000'000;
};

struct RunRecord {
    int subinstance = 0;
    std::vector<std::int64_t> shift;
    bool feasible = false;
    double cost = 0;  // input units
    int chosen_s = -1;
    double cap_factor = 0;  // 0: uncapped
    DpStats stats;
};

struct SolveReport {
    bool feasible = false;
    std::vector<int> tour;  // input point indices, cyclic
    double cost = 0;
    int chosen_s = -1;
    int thresholds = 0;
    std::size_t dp_states = 0;
    int subinstances = 0;
    int partitions = 0;
    double A = 0, rho = 0;
    Params params;
    std::vector<RunRecord> runs;
};

// Cheapest insertion from every start point followed by 2-opt; a closed tour
// on k of the points.
std::vector<int> heuristic_k_tour(const std::vector<GridPoint>& points, int k);

// One DP run on a subinstance with the cap schedule from `opt`.
RunRecord solve_subinstance(const WellRoundedInstance& w, const Params& p, const Shift& a,
                            const SolveOptions& opt, std::vector<int>* tour_out, int n_for_base);

std::vector<Shift> derandomized_shifts(std::int64_t L, int d, int per_axis);

SolveReport solve(const RawInstance& raw, const SolveOptions& opt);

}  // namespace ktsp
