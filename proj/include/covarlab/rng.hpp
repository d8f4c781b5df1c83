#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>

namespace covarlab {

// Fixed seed-lane layout. Drivers, correlation and volatility all consume
// from disjoint streams so the independence structure of the model is exact
// by construction.
enum class SeedLane : std::uint64_t {
    Driver1 = 0,      // Brownian measure W^(1)
    DriverTilde = 1,  // independent Brownian measure coupled through rho
    Correlation = 2,
    Volatility1 = 3,
    Volatility2 = 4,
    Auxiliary = 5,
};

// SplitMix64 finalizer (public-domain constants).
std::uint64_t splitmix64(std::uint64_t x);

// Documented mixing function for lane seeds: two SplitMix64 rounds keyed by
// replication and lane. Identical (master, replication, lane) always yields
// the identical stream seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t replication, SeedLane lane);

// Standard normal stream: mt19937_64 uniforms fed through Box-Muller with a
// fixed consumption order (two uniforms per pair of normals), so sequences
// are reproducible bit-for-bit for a given seed.
class GaussianStream {
public:
    explicit GaussianStream(std::uint64_t seed) : engine_(seed) {}

    double next();
    void fill(double* out, Eigen::Index count);
    Eigen::ArrayXd draw(Eigen::Index count);

private:
    std::mt19937_64 engine_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace covarlab
