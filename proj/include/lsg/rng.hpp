#pragma once

#include <cstdint>
#include <vector>

#include "lsg/tensor.hpp"

// Deterministic random numbers, identical across platforms and runs.
//
// Generator: xoshiro256++ (Blackman & Vigna). The 256-bit state is seeded
// by four successive outputs of splitmix64. Standard normals come from the
// Box-Muller transform (pairs per two uniforms, second value cached).
// Substreams derive their state by folding a stream index into the
// splitmix64 seed, so (seed, index) pairs give independent streams without
// coordination.

namespace lsg {

class Rng {
public:
    explicit Rng(std::uint64_t seed);

    // Independent stream for (seed, index); index 0 is not Rng(seed).
    static Rng substream(std::uint64_t seed, std::uint64_t index);

    std::uint64_t next_u64();

    // Uniform on [0, 1) with 53 random bits.
    double uniform();

    // Standard normal via Box-Muller.
    double normal();

    // Tensor of i.i.d. standard normals, filled in row-major order.
    Tensor normal_tensor(std::vector<std::size_t> shape);

    // Uniform on [lo, hi).
    double uniform(double lo, double hi);

    // Unbiased integer in [0, n) via rejection sampling.
    std::uint64_t below(std::uint64_t n);

    // Fisher-Yates permutation of 0..n-1.
    std::vector<std::size_t> permutation(std::size_t n);

private:
    std::uint64_t s_[4];
    double cached_ = 0.0;
    bool has_cached_ = false;
};

} // namespace lsg
