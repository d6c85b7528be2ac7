#pragma once

#include <cstdint>
#include <span>
#include <string_view>

#include "lockstep/hash.hpp"

namespace lockstep {

// Splittable deterministic generator built on the splitmix64 step function.
// Streams are derived by label, never by draw order, so per-store and
// per-item streams stay independent of configuration order. All draws use
// integer and exact IEEE-754 operations only; sequences are bit-identical
// across platforms.
class SplitRng {
public:
    explicit SplitRng(std::uint64_t seed) : state_(mix(seed ^ 0x9e3779b97f4a7c15ULL)) {}

    SplitRng stream(std::string_view label) const {
        return SplitRng(mix(state_ ^ mix(fnv1a64(label))), raw_state{});
    }
    SplitRng stream(std::string_view label, std::string_view id) const {
        SplitRng s = stream(label);
        return SplitRng(mix(s.state_ ^ mix(fnv1a64(id))), raw_state{});
    }
    SplitRng stream(std::string_view label, std::uint64_t index) const {
        SplitRng s = stream(label);
        return SplitRng(mix(s.state_ ^ mix(index + 0x9e3779b97f4a7c15ULL)), raw_state{});
    }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix(state_);
    }

    // Uniform in [0, 1), 53-bit resolution.
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return next_unit() < p; }

    // Uniform integer in [lo, hi], inclusive. Modulo reduction: the bias is
    // below 2^-32 for any range this toolkit uses and the draw stays
    // platform-stable.
    std::int64_t next_int(std::int64_t lo, std::int64_t hi) {
        std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<std::int64_t>(next_u64() % range);
    }

    // Index drawn proportionally to non-negative weights.
    std::size_t weighted_index(std::span<const double> weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        double u = next_unit() * total;
        double acc = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            acc += weights[i];
            if (u < acc) return i;
        }
        return weights.empty() ? 0 : weights.size() - 1;
    }

private:
    struct raw_state {};
    SplitRng(std::uint64_t state, raw_state) : state_(state) {}

    static constexpr std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
};

}  // namespace lockstep
