#pragma once

#include <map>
#include <string>
#include <vector>

#include "fockbox/fock.hpp"

namespace fockbox {

// The set of species present in a state: which kinds of particle exist, with
// no reference to how many. Two photons and one photon carry the same
// signature; an electron-positron pair and a photon do not.
class ContentSignature {
  public:
    ContentSignature() = default;  // empty set = vacuum signature
    explicit ContentSignature(std::vector<std::string> species_ids);

    const std::vector<std::string>& species() const { return species_; }
    bool empty() const { return species_.empty(); }
    bool contains(const std::string& id) const;

    // CSV/JSON-friendly label: species ids joined by '|', "vacuum" if empty.
    std::string label() const;
    static ContentSignature from_label(const std::string& label);

    bool operator==(const ContentSignature& other) const { return species_ == other.species_; }
    bool operator!=(const ContentSignature& other) const { return !(*this == other); }
    bool operator<(const ContentSignature& other) const { return species_ < other.species_; }

  private:
    std::vector<std::string> species_;  // sorted, unique
};

ContentSignature signature(const Registry& reg, const BasisState& b);

// True iff the species sets differ: some species present on one side is
// absent on the other.
bool content_changed(const ContentSignature& in_sig, const ContentSignature& out_sig);

struct SectorPart {
    double probability = 0.0;
    StateVector component;  // normalized, single-signature support
};

// Partition of a state's support by content signature. Parts whose weight
// falls below eps_p are dropped and the remaining probabilities rescaled, so
// numerical dust never shows up as a phantom sector.
using SectorDecomposition = std::map<ContentSignature, SectorPart>;

inline constexpr double default_sector_epsilon = 1e-12;

SectorDecomposition sector_decompose(const StateVector& s,
                                     double eps_p = default_sector_epsilon);

bool is_cross_sector_superposition(const StateVector& s, double eps_p = default_sector_epsilon);

}  // namespace fockbox
