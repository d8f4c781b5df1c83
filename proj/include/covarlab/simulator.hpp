#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <utility>

#include "covarlab/kernels.hpp"
#include "covarlab/paths.hpp"

namespace covarlab {

// Default fine-substep count and truncation horizon (the horizon formula is
// conservative: the exponential tails are far below 1e-16 there).
constexpr int kDefaultKappa = 16;
inline double default_truncation_horizon(const KernelPair& kernels) {
    const double lambda_min =
        std::min(kernels.k1->decay_rate(), kernels.k2->decay_rate());
    return std::max(10.0, 50.0 / lambda_min);
}

struct SimulationConfig {
    int n = 0;            // coarse steps per unit time
    double T = 1.0;       // horizon
    int kappa = kDefaultKappa;
    double M = 10.0;      // truncation horizon for the infinite past
    std::uint64_t seed = 1;
    KernelPair kernels;
    CorrelationModel correlation;
    std::optional<std::pair<VolatilityModel, VolatilityModel>> volatility;

    std::int64_t coarse_steps() const { return std::llround(n * T); }
    double delta_n() const { return 1.0 / n; }
    FineGrid grid() const { return FineGrid::make(n, T, kappa, M); }
    void validate() const;
};

// Coarse increments of both legs plus the fine-grid paths that produced them.
struct IncrementSeries {
    Eigen::ArrayXd dy1;
    Eigen::ArrayXd dy2;
    PathBundle bundle;
    SimulationConfig config;
};

// Cell-effective increment weights, precomputed once per configuration and
// shared read-only across replications. Entry l of the level table is the
// midpoint kernel value at lag (l - 1/2) h, except l = 1 (the cell adjacent
// to the evaluation time) which carries the exact cell average so that the
// singular kernels keep their small-scale variance.
class IncrementWeights {
public:
    explicit IncrementWeights(const SimulationConfig& config);

    // Reversed increment-weight tables: dy_i = sum_c wrev[(nT-i)*kappa + c] * x_c.
    const Eigen::ArrayXd& wrev1() const { return wrev1_; }
    const Eigen::ArrayXd& wrev2() const { return wrev2_; }
    std::int64_t cells() const { return cells_; }

    // Covariance of the discretised increments at a coarse lag under unit
    // correlation: h * sum_c w_a[.] w_b[.]. Deterministic oracle for
    // refinement and symmetry checks.
    double discrete_increment_covariance(int leg_a, int leg_b, int lag) const;

private:
    Eigen::ArrayXd wrev1_;
    Eigen::ArrayXd wrev2_;
    std::int64_t cells_ = 0;
    std::int64_t coarse_steps_ = 0;
    int kappa_ = 1;
    double cell_width_ = 0.0;
};

// Moving-average increments (unit volatility). Requires volatility absent or
// both legs constant 1.
IncrementSeries simulate_ma_increments(const SimulationConfig& config,
                                       std::uint64_t replication = 0);
IncrementSeries simulate_ma_increments(const SimulationConfig& config, std::uint64_t replication,
                                       const IncrementWeights& weights);

// Brownian semistationary increments with volatility paths drawn from
// streams independent of the drivers.
IncrementSeries simulate_bss_increments(const SimulationConfig& config,
                                        std::uint64_t replication = 0);
IncrementSeries simulate_bss_increments(const SimulationConfig& config, std::uint64_t replication,
                                        const IncrementWeights& weights);

// Covariance matrix of the stacked increment vector
// (dy1_1..dy1_nT, dy2_1..dy2_nT) from the analytic increment covariances.
// Requires constant correlation and unit volatility.
Eigen::MatrixXd exact_increment_covariance(const SimulationConfig& config);

// Exact Gaussian sampler for constant correlation: Cholesky factorisation of
// the assembled covariance with diagonal jitter escalation 1e-12 -> 1e-8.
// Requires n*T <= 512 (dense matrix budget).
IncrementSeries exact_gaussian_increments(const SimulationConfig& config,
                                          std::uint64_t replication = 0);

}  // namespace covarlab
