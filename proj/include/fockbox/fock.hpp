#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "fockbox/errors.hpp"

namespace fockbox {

using cplx = std::complex<double>;

enum class Statistics { boson, fermion };

struct ParticleSpecies {
    std::string id;
    Statistics statistics = Statistics::boson;
    double mass = 0.0;
    int charge = 0;
    int max_occupation = 1;  // forced to 1 for fermions
};

using ModeIndex = std::uint32_t;

// A single-particle mode: species label plus a point on the discrete momentum
// grid and a spin index. Momentum components beyond the grid dimension are
// kept at zero.
struct Mode {
    std::uint32_t species = 0;  // index into the registry's species table
    std::array<int, 3> momentum{0, 0, 0};
    int spin = 0;
};

struct MomentumGrid {
    int dims = 1;
    std::array<int, 3> min{0, 0, 0};
    std::array<int, 3> max{0, 0, 0};

    bool contains(const std::array<int, 3>& p) const {
        for (int d = 0; d < dims; ++d)
            if (p[d] < min[d] || p[d] > max[d]) return false;
        for (int d = dims; d < 3; ++d)
            if (p[d] != 0) return false;
        return true;
    }
};

class Registry;
using RegistryPtr = std::shared_ptr<const Registry>;

// Species table, declared modes and the global truncation. Immutable once
// built; shared by every state and model that refers to it.
//
// Modes are held in a fixed canonical order (species id, then momentum
// lexicographically, then spin). This order defines basis-state equality and
// the fermionic sign convention.
class Registry {
  public:
    class Builder;

    std::size_t species_count() const { return species_.size(); }
    std::size_t mode_count() const { return modes_.size(); }
    int n_max() const { return n_max_; }
    const MomentumGrid& grid() const { return grid_; }

    const ParticleSpecies& species(std::uint32_t s) const { return species_.at(s); }
    const Mode& mode(ModeIndex m) const { return modes_.at(m); }
    const ParticleSpecies& mode_species(ModeIndex m) const { return species_[modes_.at(m).species]; }
    bool mode_is_fermionic(ModeIndex m) const {
        return mode_species(m).statistics == Statistics::fermion;
    }
    int mode_cap(ModeIndex m) const { return mode_species(m).max_occupation; }

    std::uint32_t species_index(const std::string& id) const;
    ModeIndex mode_index(const std::string& species_id, const std::array<int, 3>& momentum,
                         int spin) const;
    // Lone mode of a species; errors if the species has zero or several modes.
    ModeIndex sole_mode(const std::string& species_id) const;

  private:
    friend class Builder;
    Registry() = default;

    std::vector<ParticleSpecies> species_;
    std::vector<Mode> modes_;
    std::unordered_map<std::string, std::uint32_t> species_by_id_;
    int n_max_ = 1;
    MomentumGrid grid_;
};

class Registry::Builder {
  public:
    Builder& grid(const MomentumGrid& g) {
        grid_ = g;
        return *this;
    }
    Builder& truncation(int n_max);
    Builder& species(ParticleSpecies s);
    // Declares one mode; the species must already be declared.
    Builder& mode(const std::string& species_id, const std::array<int, 3>& momentum = {0, 0, 0},
                  int spin = 0);
    // Declares one mode per grid point (spin fixed) for the given species.
    Builder& modes_on_grid(const std::string& species_id, int spin = 0);
    RegistryPtr build();

  private:
    std::vector<ParticleSpecies> species_;
    std::vector<std::pair<std::string, Mode>> modes_;  // species id kept for sorting
    int n_max_ = 1;
    MomentumGrid grid_{1, {0, 0, 0}, {0, 0, 0}};
};

// One Fock basis element: occupation counts per mode, stored sparsely as
// (mode, count) pairs sorted by mode index with zero counts removed.
class BasisState {
  public:
    BasisState() = default;
    explicit BasisState(std::vector<std::pair<ModeIndex, std::uint32_t>> occupations);

    static BasisState vacuum() { return BasisState(); }

    std::uint32_t occupation(ModeIndex m) const;
    int total() const;
    const std::vector<std::pair<ModeIndex, std::uint32_t>>& occupations() const { return occ_; }
    bool is_vacuum() const { return occ_.empty(); }

    // Checks caps and truncation against a registry; throws RegistryError.
    void validate(const Registry& reg) const;

    bool operator==(const BasisState& other) const { return occ_ == other.occ_; }
    bool operator<(const BasisState& other) const { return occ_ < other.occ_; }

    std::string label(const Registry& reg) const;

  private:
    std::vector<std::pair<ModeIndex, std::uint32_t>> occ_;
};

struct BasisStateHash {
    std::size_t operator()(const BasisState& b) const {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (const auto& [m, n] : b.occupations()) {
            h = (h ^ m) * 0x100000001b3ULL;
            h = (h ^ n) * 0x100000001b3ULL;
        }
        return static_cast<std::size_t>(h);
    }
};

// Sparse state: map from basis state to complex amplitude. Amplitudes with
// |a| < drop_tolerance are pruned when states are assembled; each pruned
// entry perturbs the norm by at most drop_tolerance, so a pruning pass moves
// the norm by no more than drop_tolerance * sqrt(#pruned entries).
class StateVector {
  public:
    static constexpr double drop_tolerance = 1e-14;

    StateVector() = default;  // empty state with no registry, assign before use
    explicit StateVector(RegistryPtr reg) : reg_(std::move(reg)) {}
    StateVector(RegistryPtr reg, const BasisState& b, cplx amplitude = 1.0);

    const RegistryPtr& registry() const { return reg_; }
    const std::unordered_map<BasisState, cplx, BasisStateHash>& amplitudes() const { return amps_; }
    bool truncated() const { return truncated_; }
    void set_truncated(bool t) { truncated_ = t; }

    std::size_t support_size() const { return amps_.size(); }
    cplx amplitude(const BasisState& b) const;
    void accumulate(const BasisState& b, cplx amplitude);
    void prune();

    // Deterministically ordered view of the support (sorted by basis state).
    std::vector<std::pair<BasisState, cplx>> sorted_entries() const;

  private:
    RegistryPtr reg_;
    std::unordered_map<BasisState, cplx, BasisStateHash> amps_;
    bool truncated_ = false;
};

// Ladder operators. Bosonic factors are sqrt(n+1) / sqrt(n); fermionic
// factors are +-1 with the sign counting occupied fermionic modes that
// precede the target mode in canonical order (bosonic occupations carry no
// sign, so mixed-statistics pairs commute). Components that would exceed the
// truncation or a per-mode cap are dropped and flagged on the result.
StateVector create(const StateVector& state, ModeIndex mode);
StateVector annihilate(const StateVector& state, ModeIndex mode);

// Largest violation of the canonical (anti)commutation relations over the
// probe states: checks [a_a, a†_b] -+ delta_ab together with the [a,a] and
// [a†,a†] variants. Probes must sit at least two particles below the
// truncation, where the relations hold exactly.
double commutator_defect(const RegistryPtr& reg, ModeIndex mode_a, ModeIndex mode_b,
                         std::span<const BasisState> probes);

cplx inner_product(const StateVector& x, const StateVector& y);
double norm(const StateVector& x);
double norm_squared(const StateVector& x);
StateVector normalize(const StateVector& x);
StateVector add(const StateVector& x, const StateVector& y);
StateVector scale(const StateVector& x, cplx factor);

// Total charge of a basis state (sum of species charge times occupation).
int total_charge(const Registry& reg, const BasisState& b);

}  // namespace fockbox
