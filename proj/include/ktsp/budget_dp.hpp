#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <vector>

#include "ktsp/geometry.hpp"
#include "ktsp/partition.hpp"
#include "ktsp/quadtree.hpp"
#include "ktsp/rankmatch.hpp"

namespace ktsp {

struct BudgetThresholds {
    double base = 2.0;
    std::vector<double> values;  // values[0] = 0, values[i] = base^(i-1)

    // Smallest index whose value is >= x, or -1 if x is beyond the ladder.
    int ceil_index(double x) const;
    int size() const { return static_cast<int>(values.size()); }
};

// base = 1 + epsilon / log2(n); values up to (1 + epsilon) d k^(1-1/d) L.
BudgetThresholds build_thresholds(double epsilon, int n, int d, int k, std::int64_t L);

struct DpOptions {
    int max_ports = 4;  // |B| cap per cell
    // Entries that cannot lie on a tour of cost <= cost_cap are dropped.
    double cost_cap = std::numeric_limits<double>::infinity();
    bool reduce = true;  // false: keep every distinct (matching, kappa)
    int n_for_base = 0;  // n in the threshold base; 0 means the subinstance size
    // Work guard: generated candidates plus leaf port-set attempts. Going
    // over it throws CapExceeded.
    std::size_t max_candidates = 20'000'000;
};

inline constexpr PortalId kNoPort = 0xffffffffu;

struct DpEntry {
    Pairing pairs;
    int kappa = 0;
    int first = 0;  // smallest threshold index at which the entry is available
    int prov = -1;
};

struct DpGroup {
    std::vector<PortalId> ports;  // B, sorted
    std::vector<DpEntry> entries;
};

struct CellTable {
    std::vector<DpGroup> groups;
    std::map<std::vector<PortalId>, int> index;
    std::vector<DpEntry> closed;  // one finished tour inside the cell

    const DpGroup* find(const std::vector<PortalId>& ports) const;
};

struct EntryRef {
    int cell = -1;
    int group = -1;  // -1: closed list
    int entry = -1;
};

using Relabel = std::vector<std::pair<PortalId, PortalId>>;

struct Provenance {
    enum Kind { LeafPath, LeafStraight, LeafClosed, LeafExtend, Internal };
    Kind kind = LeafStraight;
    PortalId u = kNoPort, v = kNoPort;
    std::vector<int> points;
    std::vector<EntryRef> parts;
    std::vector<Relabel> relabel;  // one per part, applied to its labels
};

struct DpStats {
    int cells = 0;
    int thresholds = 0;
    std::size_t groups = 0;
    std::size_t entries = 0;
    std::size_t candidates = 0;
};

struct DpResult {
    Quadtree qt;
    PortalRegistry reg;
    Params params;
    BudgetThresholds S;
    DpOptions opt;
    int k = 0;
    std::vector<CellTable> tables;
    std::vector<Provenance> prov;
    DpStats stats;
    int answer = -1;  // index into the root's closed list
    // Best kappa among the root's closed entries available at each threshold
    // (-1: none).
    std::vector<int> root_kappa;

    bool feasible() const { return answer >= 0; }
    const DpEntry& entry(const EntryRef& r) const;
};

DpResult run_dp(const WellRoundedInstance& inst, const Params& p, const Shift& a,
                const DpOptions& opt = {});

struct Segment {
    PortalId a = kNoPort, b = kNoPort;
    std::vector<int> points;
};

// Segments behind an entry, labelled as seen from its cell.
std::vector<Segment> expand(const DpResult& r, const EntryRef& e);

// Length of the segments through their portals.
double segments_cost(const DpResult& r, const std::vector<Segment>& segs);

struct Tour {
    std::vector<int> order;  // point indices, cyclic
    double cost = 0;
    int visited = 0;
};

double tour_cost(const std::vector<GridPoint>& points, const std::vector<int>& order);

// Stitches the root answer into one cycle. Throws InternalError when the
// provenance does not describe a single closed tour.
Tour reconstruct(const DpResult& r, const WellRoundedInstance& inst);

// Mate positions of a pairing over its sorted support.
std::vector<std::uint8_t> mate_of(const std::vector<PortalId>& support, const Pairing& pairs);

}  // namespace ktsp
