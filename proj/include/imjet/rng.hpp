#pragma once

#include "imjet/common.hpp"

#include <cstdint>
#include <string_view>

namespace imjet {

/// SplitMix64 stream; identical output on every platform.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
    std::uint64_t next();
    /// Uniform in [0, 1).
    double uniform();
    double uniform(double a, double b) { return a + (b - a) * uniform(); }
    /// Standard normal (Box-Muller).
    double normal();
    Vec normal_vector(int n);
    /// Uniform on the unit sphere in R^n.
    Vec unit_vector(int n);

private:
    std::uint64_t state_;
};

/// Seed of substream `index` of the named stream under a root seed; independent of
/// the order in which streams are requested.
std::uint64_t derive_seed(std::uint64_t root, std::string_view stream, std::uint64_t index = 0);

} // namespace imjet
