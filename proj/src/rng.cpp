#include "fgml/rng.hpp"

#include <cmath>

#include "fgml/error.hpp"
#include "fgml/pmath.hpp"

namespace fgml {

namespace {

constexpr uint64_t kGolden = 0x9E3779B97F4A7C15ull;
constexpr double kTwoPi = 6.283185307179586476925286766559;

uint64_t splitmix64(uint64_t x) {
    x += kGolden;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

}  // namespace

RngStream::RngStream(uint64_t seed, uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
    key_ = splitmix64(splitmix64(seed) ^ stream_id);
}

RngStream RngStream::substream(uint64_t a, uint64_t b) const {
    const uint64_t mixed = splitmix64(splitmix64(stream_id_ ^ splitmix64(a)) ^ b);
    return RngStream(seed_, mixed);
}

uint64_t RngStream::next_u64() {
    counter_ += 1;
    return splitmix64(key_ + counter_ * kGolden);
}

double RngStream::uniform01() {
    // 53 random bits scaled into [0, 1).
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
    if (!(lo < hi)) raise(ErrorKind::Parameter, "uniform bounds require lo < hi");
    return lo + uniform01() * (hi - lo);
}

double RngStream::normal(double mean, double std_dev) {
    if (std_dev < 0.0) raise(ErrorKind::Parameter, "normal requires std >= 0");
    const double u1 = uniform01();
    const double u2 = uniform01();
    // 1 - u1 lies in (0, 1], so the log argument is never zero.
    const double radius = std::sqrt(-2.0 * pmath::log(1.0 - u1));
    return mean + std_dev * radius * pmath::cos(kTwoPi * u2);
}

uint64_t RngStream::below(uint64_t n) {
    if (n == 0) raise(ErrorKind::Parameter, "below requires n > 0");
    if ((n & (n - 1)) == 0) return next_u64() & (n - 1);
    uint64_t mask = n - 1;
    mask |= mask >> 1;
    mask |= mask >> 2;
    mask |= mask >> 4;
    mask |= mask >> 8;
    mask |= mask >> 16;
    mask |= mask >> 32;
    for (;;) {
        const uint64_t draw = next_u64() & mask;
        if (draw < n) return draw;
    }
}

void shuffle_indices(std::span<size_t> indices, RngStream& rng) {
    for (size_t i = indices.size(); i > 1; --i) {
        const size_t j = static_cast<size_t>(rng.below(i));
        std::swap(indices[i - 1], indices[j]);
    }
}

}  // namespace fgml
