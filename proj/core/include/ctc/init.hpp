#pragma once

#include <cstdint>
#include <random>

#include "ctc/tensor.hpp"

namespace ctc {

// Deterministic parameter-init stream. The unit-interval mapping is pinned to
// (x >> 11) * 2^-53 so the same seed produces the same weights on every
// platform, independent of libstdc++'s distribution implementations.
class SeededRng {
  public:
    explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

    double next_unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }
    std::uint64_t next_u64() { return engine_(); }
    std::mt19937_64& engine() { return engine_; }

  private:
    std::mt19937_64 engine_;
};

// Uniform in [-r, r] with r = sqrt(6 / (fan_in + fan_out)).
template <typename S>
TensorT<S> glorot_uniform(Shape shape, Extent fan_in, Extent fan_out, SeededRng& rng,
                          bool requires_grad = true);

}  // namespace ctc
