#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ktsp/budget_dp.hpp"

namespace refdp {

// Smallest threshold index at which each (matching, kappa) is reachable, per
// cell and portal set. Built by plain recursion over fine sets without any
// reduction, for cross-checking the production tables.
struct RefCell {
    std::map<std::vector<ktsp::PortalId>, std::map<std::pair<ktsp::Pairing, int>, int>> open;
    std::map<int, int> closed;  // kappa -> first threshold
};

struct RefTables {
    std::vector<RefCell> cells;
    std::size_t combos = 0;
};

// Uses the quadtree, portal ids, thresholds and options of `r`; ignores its
// tables. Expects an uncapped run.
RefTables unreduced_dp_recompute(const ktsp::DpResult& r, const ktsp::WellRoundedInstance& inst);

struct Comparison {
    std::size_t checks = 0;
    std::size_t mismatches = 0;
    std::string first_mismatch;
};

// opt_of agreement for every (cell, threshold, portal set, perfect matching),
// plus the best closed kappa per threshold.
Comparison compare_tables(const ktsp::DpResult& r, const RefTables& ref);

}  // namespace refdp
