#include "fockbox/sectors.hpp"

#include <algorithm>
#include <cmath>

namespace fockbox {

ContentSignature::ContentSignature(std::vector<std::string> species_ids)
    : species_(std::move(species_ids)) {
    std::sort(species_.begin(), species_.end());
    species_.erase(std::unique(species_.begin(), species_.end()), species_.end());
}

bool ContentSignature::contains(const std::string& id) const {
    return std::binary_search(species_.begin(), species_.end(), id);
}

std::string ContentSignature::label() const {
    if (species_.empty()) return "vacuum";
    std::string out;
    for (std::size_t i = 0; i < species_.size(); ++i) {
        if (i) out += "|";
        out += species_[i];
    }
    return out;
}

ContentSignature ContentSignature::from_label(const std::string& label) {
    if (label.empty() || label == "vacuum") return ContentSignature();
    std::vector<std::string> ids;
    std::size_t start = 0;
    while (start <= label.size()) {
        std::size_t end = label.find('|', start);
        if (end == std::string::npos) end = label.size();
        ids.push_back(label.substr(start, end - start));
        start = end + 1;
    }
    return ContentSignature(std::move(ids));
}

ContentSignature signature(const Registry& reg, const BasisState& b) {
    std::vector<std::string> ids;
    for (const auto& [m, n] : b.occupations())
        if (n > 0) ids.push_back(reg.mode_species(m).id);
    return ContentSignature(std::move(ids));
}

bool content_changed(const ContentSignature& in_sig, const ContentSignature& out_sig) {
    return in_sig != out_sig;
}

SectorDecomposition sector_decompose(const StateVector& s, double eps_p) {
    const double total = norm_squared(s);
    if (total < StateVector::drop_tolerance * StateVector::drop_tolerance)
        throw DegenerateStateError("sector_decompose: zero state");

    SectorDecomposition parts;
    for (const auto& [b, amp] : s.amplitudes()) {
        ContentSignature sig = signature(*s.registry(), b);
        auto [it, inserted] = parts.try_emplace(sig, SectorPart{0.0, StateVector(s.registry())});
        it->second.probability += std::norm(amp) / total;
        it->second.component.accumulate(b, amp);
    }

    // drop negligible sectors and redistribute their weight proportionally
    double kept = 0.0;
    for (auto it = parts.begin(); it != parts.end();) {
        if (it->second.probability <= eps_p)
            it = parts.erase(it);
        else
            kept += (it++)->second.probability;
    }
    if (parts.empty()) throw DegenerateStateError("sector_decompose: all sectors negligible");
    for (auto& [sig, part] : parts) {
        part.probability /= kept;
        part.component = normalize(part.component);
    }
    return parts;
}

bool is_cross_sector_superposition(const StateVector& s, double eps_p) {
    return sector_decompose(s, eps_p).size() >= 2;
}

}  // namespace fockbox
