#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ktsp/budget_dp.hpp"

namespace planted {

// What a planted tour looks like from inside one cell.
struct CellView {
    int cell = 0;
    std::vector<ktsp::PortalId> labels;  // sorted, registry of the planting
    ktsp::Pairing pairs;                 // in-cell paths between labels
    int kappa = 0;                       // input points visited inside
    double cost = 0;                     // length inside
    bool closed = false;                 // the whole tour is inside
};

struct Planting {
    ktsp::PortalRegistry reg;
    std::vector<CellView> cells;  // every cell the tour touches
    double cost = 0;
};

// Routes the closed polygon `order` (indices of w.points) through the leaves
// of qt, moving every leaf-to-leaf crossing to the nearest portal of the
// granularity-g lattice on the shared facet. Returns nullopt with a reason
// when the result is not a fine, portal-respecting tour with at most
// max_ports labels per cell.
std::optional<Planting> plant(const ktsp::Quadtree& qt, const ktsp::Params& p, int max_ports,
                              const std::vector<int>& order, int g, std::string* why = nullptr);

struct CheckResult {
    int cells = 0;
    int failures = 0;
    std::string first_failure;
};

// For every touched cell C: the table of r holds the planted matching with
// kappa >= the planted kappa at a threshold <= cost_C * base^(2r + h_C).
// Expects an unreduced run on the same quadtree.
CheckResult check(const ktsp::DpResult& r, const Planting& pl);

}  // namespace planted
