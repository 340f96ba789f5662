#include "fockbox/fock.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace fockbox {

std::uint32_t Registry::species_index(const std::string& id) const {
    auto it = species_by_id_.find(id);
    if (it == species_by_id_.end()) throw RegistryError("unknown species id: " + id);
    return it->second;
}

ModeIndex Registry::mode_index(const std::string& species_id, const std::array<int, 3>& momentum,
                               int spin) const {
    const std::uint32_t s = species_index(species_id);
    for (ModeIndex m = 0; m < modes_.size(); ++m) {
        const Mode& mode = modes_[m];
        if (mode.species == s && mode.momentum == momentum && mode.spin == spin) return m;
    }
    throw RegistryError("mode not declared for species " + species_id);
}

ModeIndex Registry::sole_mode(const std::string& species_id) const {
    const std::uint32_t s = species_index(species_id);
    ModeIndex found = 0;
    int count = 0;
    for (ModeIndex m = 0; m < modes_.size(); ++m) {
        if (modes_[m].species == s) {
            found = m;
            ++count;
        }
    }
    if (count != 1)
        throw RegistryError("species " + species_id + " has " + std::to_string(count) +
                            " modes, expected exactly one");
    return found;
}

Registry::Builder& Registry::Builder::truncation(int n_max) {
    if (n_max < 1) throw RegistryError("truncation N_max must be >= 1");
    n_max_ = n_max;
    return *this;
}

Registry::Builder& Registry::Builder::species(ParticleSpecies s) {
    if (s.id.empty()) throw RegistryError("species id must be nonempty");
    for (const auto& existing : species_)
        if (existing.id == s.id) throw RegistryError("duplicate species id: " + s.id);
    if (s.mass < 0.0) throw RegistryError("species mass must be nonnegative: " + s.id);
    if (s.statistics == Statistics::fermion)
        s.max_occupation = 1;
    else if (s.max_occupation < 1)
        throw RegistryError("max_occupation must be >= 1: " + s.id);
    species_.push_back(std::move(s));
    return *this;
}

Registry::Builder& Registry::Builder::mode(const std::string& species_id,
                                           const std::array<int, 3>& momentum, int spin) {
    std::uint32_t s = 0;
    bool found = false;
    for (std::uint32_t i = 0; i < species_.size(); ++i) {
        if (species_[i].id == species_id) {
            s = i;
            found = true;
            break;
        }
    }
    if (!found) throw RegistryError("mode declared for unknown species: " + species_id);
    if (!grid_.contains(momentum))
        throw RegistryError("mode momentum outside declared grid for species " + species_id);
    for (const auto& [id, m] : modes_)
        if (m.species == s && m.momentum == momentum && m.spin == spin)
            throw RegistryError("duplicate mode for species " + species_id);
    modes_.emplace_back(species_id, Mode{s, momentum, spin});
    return *this;
}

Registry::Builder& Registry::Builder::modes_on_grid(const std::string& species_id, int spin) {
    std::array<int, 3> p{0, 0, 0};
    // iterate the grid box in lexicographic order
    std::vector<std::array<int, 3>> points;
    std::function<void(int)> walk = [&](int d) {
        if (d == grid_.dims) {
            points.push_back(p);
            return;
        }
        for (int v = grid_.min[d]; v <= grid_.max[d]; ++v) {
            p[d] = v;
            walk(d + 1);
        }
        p[d] = 0;
    };
    walk(0);
    for (const auto& point : points) mode(species_id, point, spin);
    return *this;
}

RegistryPtr Registry::Builder::build() {
    if (species_.empty()) throw RegistryError("registry needs at least one species");
    std::stable_sort(modes_.begin(), modes_.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first < b.first;
        if (a.second.momentum != b.second.momentum) return a.second.momentum < b.second.momentum;
        return a.second.spin < b.second.spin;
    });
    auto reg = std::shared_ptr<Registry>(new Registry());
    reg->species_ = species_;
    reg->n_max_ = n_max_;
    reg->grid_ = grid_;
    for (std::uint32_t i = 0; i < species_.size(); ++i) reg->species_by_id_[species_[i].id] = i;
    reg->modes_.reserve(modes_.size());
    for (auto& [id, m] : modes_) reg->modes_.push_back(m);
    return reg;
}

BasisState::BasisState(std::vector<std::pair<ModeIndex, std::uint32_t>> occupations)
    : occ_(std::move(occupations)) {
    std::sort(occ_.begin(), occ_.end());
    std::size_t w = 0;
    for (std::size_t r = 0; r < occ_.size(); ++r) {
        if (occ_[r].second == 0) continue;
        if (w > 0 && occ_[w - 1].first == occ_[r].first) {
            occ_[w - 1].second += occ_[r].second;
        } else {
            occ_[w++] = occ_[r];
        }
    }
    occ_.resize(w);
}

std::uint32_t BasisState::occupation(ModeIndex m) const {
    for (const auto& [mode, n] : occ_)
        if (mode == m) return n;
    return 0;
}

int BasisState::total() const {
    int t = 0;
    for (const auto& [mode, n] : occ_) t += static_cast<int>(n);
    return t;
}

void BasisState::validate(const Registry& reg) const {
    int t = 0;
    for (const auto& [m, n] : occ_) {
        if (m >= reg.mode_count()) throw RegistryError("basis state references unknown mode");
        if (static_cast<int>(n) > reg.mode_cap(m))
            throw RegistryError("occupation exceeds max_occupation for species " +
                                reg.mode_species(m).id);
        t += static_cast<int>(n);
    }
    if (t > reg.n_max()) throw RegistryError("basis state exceeds truncation N_max");
}

std::string BasisState::label(const Registry& reg) const {
    if (occ_.empty()) return "|0>";
    std::string out = "|";
    bool first = true;
    for (const auto& [m, n] : occ_) {
        if (!first) out += ",";
        first = false;
        const Mode& mode = reg.mode(m);
        out += std::to_string(n) + "*" + reg.mode_species(m).id;
        if (reg.grid().dims > 0 && reg.mode_count() > reg.species_count()) {
            out += "@p" + std::to_string(mode.momentum[0]);
            for (int d = 1; d < reg.grid().dims; ++d) out += "," + std::to_string(mode.momentum[d]);
            if (mode.spin != 0) out += "s" + std::to_string(mode.spin);
        }
    }
    return out + ">";
}

StateVector::StateVector(RegistryPtr reg, const BasisState& b, cplx amplitude)
    : reg_(std::move(reg)) {
    b.validate(*reg_);
    if (std::abs(amplitude) >= drop_tolerance) amps_.emplace(b, amplitude);
}

cplx StateVector::amplitude(const BasisState& b) const {
    auto it = amps_.find(b);
    return it == amps_.end() ? cplx(0.0) : it->second;
}

void StateVector::accumulate(const BasisState& b, cplx amplitude) {
    auto it = amps_.find(b);
    if (it != amps_.end()) {
        it->second += amplitude;
        return;
    }
    if (reg_) b.validate(*reg_);
    amps_.emplace(b, amplitude);
}

void StateVector::prune() {
    for (auto it = amps_.begin(); it != amps_.end();) {
        if (std::abs(it->second) < drop_tolerance)
            it = amps_.erase(it);
        else
            ++it;
    }
}

std::vector<std::pair<BasisState, cplx>> StateVector::sorted_entries() const {
    std::vector<std::pair<BasisState, cplx>> out(amps_.begin(), amps_.end());
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    return out;
}

namespace {

// Parity of the number of fermions sitting in modes strictly before `mode`
// in canonical order. Fermion occupations are 0/1, so this is the usual
// Jordan-Wigner string.
int fermi_parity_before(const Registry& reg, const BasisState& b, ModeIndex mode) {
    int count = 0;
    for (const auto& [m, n] : b.occupations()) {
        if (m >= mode) break;
        if (reg.mode_is_fermionic(m)) count += static_cast<int>(n);
    }
    return count & 1;
}

struct LadderOutcome {
    BasisState state;
    double factor = 0.0;  // zero factor means the component vanished
    bool truncated = false;
};

LadderOutcome apply_create(const Registry& reg, const BasisState& b, ModeIndex mode) {
    LadderOutcome out;
    const std::uint32_t n = b.occupation(mode);
    const bool fermion = reg.mode_is_fermionic(mode);
    if (fermion && n >= 1) return out;  // a†a† = 0, not a truncation artifact
    if (static_cast<int>(n) + 1 > reg.mode_cap(mode) || b.total() + 1 > reg.n_max()) {
        out.truncated = true;
        return out;
    }
    auto occ = b.occupations();
    bool placed = false;
    for (auto& [m, c] : occ) {
        if (m == mode) {
            ++c;
            placed = true;
            break;
        }
    }
    if (!placed) occ.emplace_back(mode, 1);
    out.state = BasisState(std::move(occ));
    if (fermion)
        out.factor = fermi_parity_before(reg, b, mode) ? -1.0 : 1.0;
    else
        out.factor = std::sqrt(static_cast<double>(n) + 1.0);
    return out;
}

LadderOutcome apply_annihilate(const Registry& reg, const BasisState& b, ModeIndex mode) {
    LadderOutcome out;
    const std::uint32_t n = b.occupation(mode);
    if (n == 0) return out;  // annihilates the vacuum component
    auto occ = b.occupations();
    for (auto& [m, c] : occ) {
        if (m == mode) {
            --c;
            break;
        }
    }
    out.state = BasisState(std::move(occ));
    if (reg.mode_is_fermionic(mode))
        out.factor = fermi_parity_before(reg, b, mode) ? -1.0 : 1.0;
    else
        out.factor = std::sqrt(static_cast<double>(n));
    return out;
}

template <typename Apply>
StateVector apply_ladder(const StateVector& state, ModeIndex mode, Apply&& apply) {
    const Registry& reg = *state.registry();
    if (mode >= reg.mode_count()) throw RegistryError("unknown mode index");
    StateVector result(state.registry());
    result.set_truncated(state.truncated());
    for (const auto& [b, amp] : state.amplitudes()) {
        LadderOutcome o = apply(reg, b, mode);
        if (o.truncated) result.set_truncated(true);
        if (o.factor != 0.0) result.accumulate(o.state, amp * o.factor);
    }
    result.prune();
    return result;
}

}  // namespace

StateVector create(const StateVector& state, ModeIndex mode) {
    return apply_ladder(state, mode, apply_create);
}

StateVector annihilate(const StateVector& state, ModeIndex mode) {
    return apply_ladder(state, mode, apply_annihilate);
}

cplx inner_product(const StateVector& x, const StateVector& y) {
    if (x.registry() != y.registry())
        throw RegistryError("inner_product requires states over the same registry");
    const auto& small = x.support_size() <= y.support_size() ? x : y;
    const auto& large = x.support_size() <= y.support_size() ? y : x;
    const bool swapped = &small != &x;
    cplx sum = 0.0;
    for (const auto& [b, amp] : small.amplitudes()) {
        const cplx other = large.amplitude(b);
        if (other == cplx(0.0)) continue;
        sum += swapped ? std::conj(other) * amp : std::conj(amp) * other;
    }
    return sum;
}

double norm_squared(const StateVector& x) {
    double s = 0.0;
    for (const auto& [b, amp] : x.amplitudes()) s += std::norm(amp);
    return s;
}

double norm(const StateVector& x) { return std::sqrt(norm_squared(x)); }

StateVector normalize(const StateVector& x) {
    const double n = norm(x);
    if (n < StateVector::drop_tolerance)
        throw DegenerateStateError("cannot normalize a (near-)zero state");
    return scale(x, 1.0 / n);
}

StateVector add(const StateVector& x, const StateVector& y) {
    if (x.registry() != y.registry())
        throw RegistryError("add requires states over the same registry");
    StateVector result(x.registry());
    result.set_truncated(x.truncated() || y.truncated());
    for (const auto& [b, amp] : x.amplitudes()) result.accumulate(b, amp);
    for (const auto& [b, amp] : y.amplitudes()) result.accumulate(b, amp);
    result.prune();
    return result;
}

StateVector scale(const StateVector& x, cplx factor) {
    StateVector result(x.registry());
    result.set_truncated(x.truncated());
    for (const auto& [b, amp] : x.amplitudes()) result.accumulate(b, amp * factor);
    result.prune();
    return result;
}

double commutator_defect(const RegistryPtr& reg, ModeIndex mode_a, ModeIndex mode_b,
                         std::span<const BasisState> probes) {
    if (mode_a >= reg->mode_count() || mode_b >= reg->mode_count())
        throw RegistryError("unknown mode index");
    const bool fermion_pair = reg->mode_is_fermionic(mode_a) && reg->mode_is_fermionic(mode_b);
    // anticommutator for fermion pairs, commutator otherwise
    const double sign = fermion_pair ? 1.0 : -1.0;
    const double delta = mode_a == mode_b ? 1.0 : 0.0;

    double worst = 0.0;
    for (const BasisState& probe : probes) {
        if (probe.total() > reg->n_max() - 2)
            throw BoundaryError("probe too close to the truncation boundary");
        // per-mode caps are part of the truncation: a bosonic probe sitting
        // at a probed mode's cap breaks the ladder relation by construction
        for (ModeIndex m : {mode_a, mode_b}) {
            if (!reg->mode_is_fermionic(m) &&
                static_cast<int>(probe.occupation(m)) > reg->mode_cap(m) - 1)
                throw BoundaryError("probe occupies a probed mode at its cap");
        }
        StateVector p(reg, probe);

        // [a_a, a†_b] -+ delta
        StateVector lhs = annihilate(create(p, mode_b), mode_a);
        StateVector rhs = create(annihilate(p, mode_a), mode_b);
        StateVector defect = add(lhs, scale(rhs, sign));
        defect = add(defect, scale(p, -delta));
        worst = std::max(worst, norm(defect));

        // [a_a, a_b]
        lhs = annihilate(annihilate(p, mode_b), mode_a);
        rhs = annihilate(annihilate(p, mode_a), mode_b);
        worst = std::max(worst, norm(add(lhs, scale(rhs, sign))));

        // [a†_a, a†_b]
        lhs = create(create(p, mode_b), mode_a);
        rhs = create(create(p, mode_a), mode_b);
        worst = std::max(worst, norm(add(lhs, scale(rhs, sign))));
    }
    return worst;
}

int total_charge(const Registry& reg, const BasisState& b) {
    int q = 0;
    for (const auto& [m, n] : b.occupations())
        q += reg.mode_species(m).charge * static_cast<int>(n);
    return q;
}

}  // namespace fockbox
