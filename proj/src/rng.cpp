#include "covarlab/rng.hpp"

#include <cmath>

namespace covarlab {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t replication, SeedLane lane) {
    std::uint64_t s = splitmix64(master ^ (0x9E3779B97F4A7C15ULL * (replication + 1)));
    s = splitmix64(s ^ (0xC2B2AE3D27D4EB4FULL * (static_cast<std::uint64_t>(lane) + 1)));
    return s;
}

double GaussianStream::next() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_;
    }
    // u1 in (0, 1], u2 in [0, 1); 53-bit mantissas.
    const double u1 =
        (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 6.283185307179586476925286766559 * u2;
    cached_ = radius * std::sin(angle);
    has_cached_ = true;
    return radius * std::cos(angle);
}

void GaussianStream::fill(double* out, Eigen::Index count) {
    for (Eigen::Index i = 0; i < count; ++i) {
        out[i] = next();
    }
}

Eigen::ArrayXd GaussianStream::draw(Eigen::Index count) {
    Eigen::ArrayXd out(count);
    fill(out.data(), count);
    return out;
}

}  // namespace covarlab
