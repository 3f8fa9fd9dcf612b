#pragma once

#include <cstdint>
#include <span>

namespace fgml {

// Counter-based random stream. Draw i of stream (seed, stream_id) is a pure
// function of (seed, stream_id, i): substreams for any (epoch, sample, ...)
// tuple can be derived without shared mutable state, so results never depend
// on evaluation order or worker count. The core is the SplitMix64 finalizer
// over a per-stream key; sequences are bit-identical across platforms.
class RngStream {
  public:
    RngStream() : RngStream(0, 0) {}
    RngStream(uint64_t seed, uint64_t stream_id);

    uint64_t seed() const { return seed_; }
    uint64_t stream_id() const { return stream_id_; }

    // Derived stream with an independent counter; mixing is non-commutative in
    // (a, b) so substream(1, 2) and substream(2, 1) differ.
    RngStream substream(uint64_t a, uint64_t b = 0) const;

    uint64_t next_u64();

    // Uniform double in [lo, hi); requires lo < hi.
    double uniform(double lo, double hi);
    double uniform01();

    // Gaussian via Box-Muller (two uniform draws per call); requires std >= 0.
    double normal(double mean, double std_dev);

    // Unbiased integer in [0, n) by masked rejection; requires n > 0.
    uint64_t below(uint64_t n);

  private:
    uint64_t seed_ = 0;
    uint64_t stream_id_ = 0;
    uint64_t key_ = 0;
    uint64_t counter_ = 0;
};

// Deterministic Fisher-Yates shuffle.
void shuffle_indices(std::span<size_t> indices, RngStream& rng);

}  // namespace fgml
