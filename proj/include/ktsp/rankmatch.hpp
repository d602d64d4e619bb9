#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace ktsp {

using PortalId = std::uint32_t;
using Pair = std::pair<PortalId, PortalId>;
// Normalized: first < second within a pair, pairs sorted.
using Pairing = std::vector<Pair>;

Pairing normalize_pairing(Pairing p);

struct PerfectMatching {
    std::vector<PortalId> support;   // ascending
    std::vector<std::uint8_t> mate;  // mate[i] = position of the partner of support[i]

    static PerfectMatching from_pairs(const Pairing& pairs);
    Pairing pairs() const;
    int size() const { return static_cast<int>(support.size()); }

    friend bool operator==(const PerfectMatching&, const PerfectMatching&) = default;
    friend auto operator<=>(const PerfectMatching&, const PerfectMatching&) = default;
};

struct Entry {
    PerfectMatching matching;
    int kappa = 0;
};

struct RepSet {
    std::vector<PortalId> support;
    std::vector<Entry> entries;
};

// True iff M1 ∪ M2 is one cycle through all of B. For |B| = 2 two identical
// pairs form the 2-cycle; for B = ∅ the empty matchings fit.
bool fits(const PerfectMatching& m1, const PerfectMatching& m2);

// Path concatenation through shared identifiers. nullopt if a cycle closes.
std::optional<Pairing> join(const Pairing& m1, const Pairing& m2);

// Succeeds iff the union is exactly one cycle using every identifier.
std::optional<Pairing> close_cycle(const Pairing& m1, const Pairing& m2);

std::optional<int> opt_of(const PerfectMatching& m, const RepSet& a);

// Rank-based reduction: keeps a representing subset of size <= 2^{|B|-1}.
RepSet reduce(const RepSet& a);

std::vector<PerfectMatching> all_perfect_matchings(const std::vector<PortalId>& support);

// Low-level pieces shared with the DP.

int cut_words(int b);

// Indicator vector of the cuts consistent with a matching given as mate
// positions over b elements (element 0 fixed on the left side).
void cut_vector(const std::uint8_t* mate, int b, std::uint64_t* out);

class Gf2Basis {
public:
    explicit Gf2Basis(int nbits);
    // Inserts v if independent of the basis; returns whether it was added.
    bool insert(std::vector<std::uint64_t> v);
    bool independent(std::vector<std::uint64_t> v) const;
    int rank() const { return static_cast<int>(rows_.size()); }

private:
    bool eliminate(std::vector<std::uint64_t>& v) const;
    int words_;
    std::vector<std::vector<std::uint64_t>> rows_;
    std::vector<int> pivot_;  // pivot bit of each row
    std::vector<int> row_of_bit_;
};

}  // namespace ktsp
