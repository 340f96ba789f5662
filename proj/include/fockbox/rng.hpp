#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "fockbox/errors.hpp"

namespace fockbox {

// splitmix64, used to derive child stream seeds from (seed, index) pairs.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Seedable stream with 64-bit seeding and cheap splitting. Every stochastic
// result carries the stream's path ("s<seed>" for a root, "s<seed>/t<k>" for
// trial k) so any single trial can be reproduced bit-for-bit. Substreams are
// derived by hashing, so trials are independent and order-insensitive.
class RngStream {
  public:
    explicit RngStream(std::uint64_t seed)
        : gen_(splitmix64(seed)), seed_(seed), path_("s" + std::to_string(seed)) {}

    RngStream(std::uint64_t seed, const std::string& path)
        : gen_(splitmix64(seed)), seed_(seed), path_(path) {}

    RngStream substream(std::uint64_t index) const {
        std::uint64_t child = splitmix64(seed_ ^ splitmix64(index + 0x51ed270b7a93c6ULL));
        return RngStream(child, path_ + "/t" + std::to_string(index));
    }

    const std::string& path() const { return path_; }
    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() { return gen_(); }

    // uniform in [0, 1) with 53 random bits; avoids the non-portable
    // std::uniform_real_distribution.
    double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double exponential(double rate) {
        if (rate <= 0.0) throw DomainError("exponential rate must be positive");
        return -std::log1p(-uniform01()) / rate;
    }

    // Samples index i with probability weights[i]/sum(weights).
    std::size_t pick(const std::vector<double>& weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        if (total <= 0.0) throw DomainError("pick requires positive total weight");
        double u = uniform01() * total;
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
            acc += weights[i];
            if (u < acc) return i;
        }
        return weights.empty() ? 0 : weights.size() - 1;
    }

    bool bernoulli(double p) { return uniform01() < p; }

  private:
    std::mt19937_64 gen_;
    std::uint64_t seed_;
    std::string path_;
};

}  // namespace fockbox
