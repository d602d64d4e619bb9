#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "ktsp/geometry.hpp"

namespace ktsp {

// Maps subinstance coordinates back to the raw input frame:
// raw = offset + scale * sub.
struct BackMap {
    double scale = 1.0;
    RealPoint offset;

    RealPoint apply(const GridPoint& p) const;
};

struct WellRoundedInstance {
    std::vector<GridPoint> points;
    std::vector<int> source;  // index of each point in the input instance
    int k = 0;
    int d = 0;
    std::int64_t bbox_side = 0;
    BackMap back_map;

    int n() const { return static_cast<int>(points.size()); }
};

struct PartitionConstants {
    double c_T = 1.0;
    double c_b = 1e3;
};

struct PartitionOutput {
    std::vector<WellRoundedInstance> subinstances;
    double A = 0;
    double rho = 0;
    double T = 0;                      // coarse side, normalized units
    std::int64_t T_cells = 0;          // coarse side in rho-cells
    std::vector<std::int64_t> coarse_shift;  // in rho-cells, within [0, T_cells)
};

struct WellRoundedCheck {
    bool integral = true;
    bool min_distance = true;
    bool bbox = true;
    bool ok() const { return integral && min_distance && bbox; }
};

double compute_rho(double A, double epsilon, int k, int d);

WellRoundedCheck check_well_rounded(const WellRoundedInstance& w, double c_b);

// Snapped rho-grid indices of every point of inst.
std::vector<GridPoint> snap_to_rho(const Instance& inst, double rho);

// Partition for one coarse shift. Throws InternalError if an emitted
// subinstance fails a well-roundedness clause.
PartitionOutput partition_with_shift(const Instance& inst, double epsilon,
                                     const std::vector<std::int64_t>& shift,
                                     PartitionConstants c = {});

// Random coarse shift. The output may hold no subinstance; see
// partition_randomized for the retrying front end.
PartitionOutput partition_instance(const Instance& inst, double epsilon, std::mt19937_64& rng,
                                   PartitionConstants c = {});

// Retries up to max_retries random shifts, then falls back to the first
// derandomized partition with a subinstance.
PartitionOutput partition_randomized(const Instance& inst, double epsilon, std::mt19937_64& rng,
                                     PartitionConstants c = {}, int max_retries = 16);

// Canonical coarse shifts: per axis, every distinct snapped coordinate
// reduced modulo T, combined over axes.
std::vector<std::vector<std::int64_t>> canonical_coarse_shifts(const Instance& inst,
                                                               double epsilon,
                                                               PartitionConstants c = {});

// One partition per canonical shift, dropping shifts whose partition (as a
// set of source-index groups) repeats an earlier one.
std::vector<PartitionOutput> derandomized_partition(const Instance& inst, double epsilon,
                                                    PartitionConstants c = {});

}  // namespace ktsp
