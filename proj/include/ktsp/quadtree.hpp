#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <vector>

#include "ktsp/geometry.hpp"
#include "ktsp/partition.hpp"
#include "ktsp/rankmatch.hpp"

namespace ktsp {

struct Shift {
    std::vector<std::int64_t> a;
};

Shift sample_shift(std::int64_t L, int d, std::mt19937_64& rng);

// Cells live in the frame u = x + 1 + a - 1/2, where the root is [0, 2L]^d
// and every cell corner is an integer. Input points sit at half-integers.
struct Cell {
    std::vector<std::int64_t> lo;
    std::int64_t side = 0;
    int depth = 0;
    int height = 0;  // 0 for leaves
    int parent = -1;
    std::vector<int> children;  // child c is the upper half on axis a iff bit a of c
    std::vector<int> points;    // indices into Quadtree::points

    bool leaf() const { return children.empty(); }
};

struct Quadtree {
    int d = 2;
    std::int64_t L = 1;
    Shift shift;
    std::vector<RealPoint> points;  // frame coordinates of the input points
    std::vector<Cell> cells;        // cells[0] is the root

    const Cell& root() const { return cells[0]; }
};

// Least power of two >= bbox_side + 1 (points are placed on {1..L}^d).
std::int64_t quadtree_bound(const WellRoundedInstance& inst);

Quadtree build_quadtree(const WellRoundedInstance& inst, const Shift& a);

struct Facet {
    int cell = 0;
    int axis = 0;
    int side = 0;  // 0: lower face, 1: upper face
};

std::int64_t facet_plane(const Quadtree& qt, const Facet& f);
bool on_root_boundary(const Quadtree& qt, const Facet& f);

// Side of the coarsest cells having the hyperplane u_axis = plane as a face.
std::int64_t plane_level_side(std::int64_t plane);

// Points per axis of a (d-1)-dimensional lattice holding at least m points.
int per_axis_count(int m, int d);

struct PortalGrid {
    Facet facet;
    int m = 1;
    int per_axis = 1;
    std::vector<RealPoint> points;  // full d-dimensional frame positions
};

// Facet-local lattice: per axis ceil(m^{1/(d-1)}) points at offsets (i+1/2)/s.
PortalGrid grid_points(const Quadtree& qt, const Facet& f, int m);

struct Portal {
    int axis = 0;
    std::int64_t plane = 0;
    std::vector<std::int64_t> num, den;  // exact offsets along the other axes
    RealPoint pos;
};

// Interns portals by exact position so neighbouring cells share identities.
class PortalRegistry {
public:
    int intern(int axis, std::int64_t plane, const std::vector<std::int64_t>& num,
               const std::vector<std::int64_t>& den, int d);
    const Portal& get(int id) const { return portals_[id]; }
    int size() const { return static_cast<int>(portals_.size()); }

private:
    std::map<std::vector<std::int64_t>, int> index_;
    std::vector<Portal> portals_;
};

inline PortalId slot_id(int portal, int slot) { return static_cast<PortalId>(portal * 2 + slot); }
inline int portal_of(PortalId x) { return static_cast<int>(x >> 1); }
inline int slot_of(PortalId x) { return static_cast<int>(x & 1); }

// Portals of the hyperplane lattice at granularity g that fall on facet f.
std::vector<int> facet_portals(const Quadtree& qt, PortalRegistry& reg, const Facet& f, int g);

bool in_lattice(const Quadtree& qt, const Portal& p, int g);

// Facet of cell c holding portal p, or -1.
int facet_index_of(const Quadtree& qt, int c, const Portal& p);

struct FacetChoice {
    int mode = 0;  // 0: empty, 1: single crossing on grid(F, m_tilde), 2: multi-crossing
    int m_F = 0;
};

struct FineSet {
    int cell = 0;
    std::vector<PortalId> ports;        // sorted portal-slot ids
    std::vector<FacetChoice> choices;   // one per facet, index 2*axis+side
};

struct FineSetFilter {
    std::function<bool(int portal)> allow;  // empty: all portals
    int max_size = 1 << 30;
};

// Every fine portal set of cell c, once each, in non-decreasing size.
std::vector<FineSet> enumerate_fine_sets(const Quadtree& qt, PortalRegistry& reg, int c,
                                         const Params& p, const FineSetFilter& filter = {});

// Validator; fills choices when non-null.
bool is_fine(const Quadtree& qt, PortalRegistry& reg, int c, const std::vector<PortalId>& ports,
             const Params& p, std::vector<FacetChoice>* choices = nullptr);

}  // namespace ktsp
