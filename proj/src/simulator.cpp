#include "covarlab/simulator.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "covarlab/errors.hpp"
#include "covarlab/oracles.hpp"
#include "covarlab/rng.hpp"

namespace covarlab {

namespace {

// Per-array budget: keeps one replication's working set around a gigabyte
// even with all five fine-grid arrays alive.
constexpr std::int64_t kMaxCells = std::int64_t{1} << 26;

}  // namespace

void SimulationConfig::validate() const {
    if (n < 2) throw ConfigError("simulation: n must be >= 2");
    if (kappa < 1) throw ConfigError("simulation: kappa must be >= 1");
    if (!(M > 0.0)) throw ConfigError("simulation: M must be positive");
    if (!(T > 0.0)) throw ConfigError("simulation: T must be positive");
    if (!kernels.k1 || !kernels.k2) throw ConfigError("simulation: both kernels required");
    if (coarse_steps() < 1) throw ConfigError("simulation: n*T must be >= 1");
    const double cells = (M + T) * static_cast<double>(n) * kappa;
    if (cells > static_cast<double>(kMaxCells)) {
        throw ConfigError("simulation: fine grid of " + std::to_string(cells) +
                          " cells exceeds the memory budget");
    }
}

namespace {

Eigen::ArrayXd reversed_increment_weights(const Kernel& g, const FineGrid& grid, int kappa) {
    const std::int64_t cells = grid.n_cells;
    const double h = grid.cell_width;

    // level weights by lag index l = 1..cells
    Eigen::ArrayXd level(cells + 1);
    level[0] = 0.0;
    {
        // adjacent cell: exact average (1/h) int_0^h g
        QuadratureOptions opts;
        opts.rel_tol = 1e-10;
        auto f = [&g](double s) { return g.value(s); };
        const QuadratureResult head =
            integrate_power_singular(f, h, std::min(0.0, g.shape_index()), opts);
        level[1] = require_converged(head, "adjacent-cell kernel average") / h;
    }
    for (std::int64_t l = 2; l <= cells; ++l) {
        level[l] = g.value((static_cast<double>(l) - 0.5) * h);
    }

    Eigen::ArrayXd wrev(cells);
    for (std::int64_t l = 1; l <= cells; ++l) {
        const double w = l > kappa ? level[l] - level[l - kappa] : level[l];
        wrev[cells - l] = w;
    }
    return wrev;
}

// Dot product with eight independent accumulator lanes. The association is
// fixed (lane-striped, lanes combined pairwise at the end), so results are
// bit-identical run to run while the loop still vectorises.
double striped_dot(const double* w, const double* x, std::int64_t len) {
    double lanes[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    std::int64_t c = 0;
    for (; c + 8 <= len; c += 8) {
        for (int j = 0; j < 8; ++j) {
            lanes[j] += w[c + j] * x[c + j];
        }
    }
    double tail = 0.0;
    for (; c < len; ++c) {
        tail += w[c] * x[c];
    }
    return ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) +
           ((lanes[4] + lanes[5]) + (lanes[6] + lanes[7])) + tail;
}

// dy_i = sum_{c < past + i*kappa} wrev[(nT - i)*kappa + c] * x_c, blocked so
// the noise block stays cache-resident across all coarse increments.
void convolve_increments(const Eigen::ArrayXd& wrev, const Eigen::ArrayXd& noise,
                         std::int64_t coarse_steps, int kappa, Eigen::ArrayXd& out) {
    const std::int64_t cells = noise.size();
    const std::int64_t past = cells - coarse_steps * kappa;
    out.setZero(coarse_steps);
    constexpr std::int64_t kBlock = 8192;
    const double* w_base = wrev.data();
    const double* x_base = noise.data();
    for (std::int64_t c0 = 0; c0 < cells; c0 += kBlock) {
        const std::int64_t c1 = std::min(c0 + kBlock, cells);
        // increments whose window reaches this block: past + i*kappa > c0
        std::int64_t i_first = (c0 - past) / kappa + 1;
        if (i_first < 1) i_first = 1;
        for (std::int64_t i = i_first; i <= coarse_steps; ++i) {
            const std::int64_t window_end = past + i * kappa;
            const std::int64_t hi = std::min(c1, window_end);
            const std::int64_t len = hi - c0;
            if (len <= 0) continue;
            out[i - 1] += striped_dot(w_base + (coarse_steps - i) * kappa + c0, x_base + c0, len);
        }
    }
}

struct DriverNoise {
    Eigen::ArrayXd x1;  // sigma1 * dW1
    Eigen::ArrayXd x2;  // sigma2 * (rho dW1 + sqrt(1-rho^2) dWtilde)
};

DriverNoise build_driver_noise(const SimulationConfig& config, std::uint64_t replication,
                               const PathBundle& bundle) {
    const FineGrid& grid = bundle.grid;
    const double sqrt_h = std::sqrt(grid.cell_width);

    GaussianStream driver1(derive_seed(config.seed, replication, SeedLane::Driver1));
    GaussianStream tilde(derive_seed(config.seed, replication, SeedLane::DriverTilde));

    DriverNoise noise;
    noise.x1.resize(grid.n_cells);
    noise.x2.resize(grid.n_cells);
    for (std::int64_t k = 0; k < grid.n_cells; ++k) {
        const double dw1 = sqrt_h * driver1.next();
        const double dwt = sqrt_h * tilde.next();
        const double rho = bundle.rho[k];
        const double dw2 = rho * dw1 + std::sqrt(std::max(0.0, 1.0 - rho * rho)) * dwt;
        noise.x1[k] = bundle.sigma1[k] * dw1;
        noise.x2[k] = bundle.sigma2[k] * dw2;
    }
    return noise;
}

PathBundle build_bundle(const SimulationConfig& config, std::uint64_t replication,
                        bool with_volatility) {
    PathBundle bundle;
    bundle.grid = config.grid();
    bundle.rho = sample_correlation_path(
        config.correlation, bundle.grid,
        derive_seed(config.seed, replication, SeedLane::Correlation));
    if (with_volatility) {
        bundle.sigma1 = sample_volatility_path(
            config.volatility->first, bundle.grid,
            derive_seed(config.seed, replication, SeedLane::Volatility1));
        bundle.sigma2 = sample_volatility_path(
            config.volatility->second, bundle.grid,
            derive_seed(config.seed, replication, SeedLane::Volatility2));
    } else {
        bundle.sigma1 = Eigen::ArrayXd::Ones(bundle.grid.n_cells);
        bundle.sigma2 = Eigen::ArrayXd::Ones(bundle.grid.n_cells);
    }
    return bundle;
}

IncrementSeries simulate_impl(const SimulationConfig& config, std::uint64_t replication,
                              const IncrementWeights& weights, bool with_volatility) {
    IncrementSeries series;
    series.config = config;
    series.bundle = build_bundle(config, replication, with_volatility);
    const DriverNoise noise = build_driver_noise(config, replication, series.bundle);
    convolve_increments(weights.wrev1(), noise.x1, config.coarse_steps(), config.kappa,
                        series.dy1);
    convolve_increments(weights.wrev2(), noise.x2, config.coarse_steps(), config.kappa,
                        series.dy2);
    return series;
}

}  // namespace

IncrementWeights::IncrementWeights(const SimulationConfig& config) {
    config.validate();
    const FineGrid grid = config.grid();
    cells_ = grid.n_cells;
    coarse_steps_ = config.coarse_steps();
    kappa_ = config.kappa;
    cell_width_ = grid.cell_width;
    wrev1_ = reversed_increment_weights(*config.kernels.k1, grid, config.kappa);
    wrev2_ = reversed_increment_weights(*config.kernels.k2, grid, config.kappa);
}

double IncrementWeights::discrete_increment_covariance(int leg_a, int leg_b, int lag) const {
    if (lag < 0 || lag >= coarse_steps_) {
        throw ContractViolation("discrete_increment_covariance: lag out of range");
    }
    const Eigen::ArrayXd& wa = leg_a == 1 ? wrev1_ : wrev2_;
    const Eigen::ArrayXd& wb = leg_b == 1 ? wrev1_ : wrev2_;
    // increments 1 and 1+lag share cells c < past + kappa; leg b is shifted
    // lag*kappa cells further back in the reversed table
    const std::int64_t past = cells_ - coarse_steps_ * kappa_;
    const std::int64_t shared = past + kappa_;
    const std::int64_t oa = (coarse_steps_ - 1) * kappa_;
    const std::int64_t ob = (coarse_steps_ - 1 - lag) * kappa_;
    double acc = 0.0;
    for (std::int64_t c = 0; c < shared; ++c) {
        acc += wa[oa + c] * wb[ob + c];
    }
    return acc * cell_width_;
}

IncrementSeries simulate_ma_increments(const SimulationConfig& config,
                                       std::uint64_t replication) {
    const IncrementWeights weights(config);
    return simulate_ma_increments(config, replication, weights);
}

IncrementSeries simulate_ma_increments(const SimulationConfig& config, std::uint64_t replication,
                                       const IncrementWeights& weights) {
    config.validate();
    if (config.volatility &&
        !(config.volatility->first.is_unit() && config.volatility->second.is_unit())) {
        throw ContractViolation(
            "simulate_ma_increments: volatility must be absent or constant 1");
    }
    return simulate_impl(config, replication, weights, false);
}

IncrementSeries simulate_bss_increments(const SimulationConfig& config,
                                        std::uint64_t replication) {
    const IncrementWeights weights(config);
    return simulate_bss_increments(config, replication, weights);
}

IncrementSeries simulate_bss_increments(const SimulationConfig& config, std::uint64_t replication,
                                        const IncrementWeights& weights) {
    config.validate();
    if (!config.volatility) {
        throw ContractViolation("simulate_bss_increments: volatility models required");
    }
    return simulate_impl(config, replication, weights, true);
}

Eigen::MatrixXd exact_increment_covariance(const SimulationConfig& config) {
    config.validate();
    if (config.correlation.kind != CorrelationModel::Kind::Constant) {
        throw ContractViolation("exact_increment_covariance: requires constant correlation");
    }
    if (config.volatility &&
        !(config.volatility->first.is_unit() && config.volatility->second.is_unit())) {
        throw ContractViolation("exact_increment_covariance: requires unit volatility");
    }
    const std::int64_t steps = config.coarse_steps();
    if (steps > 512) {
        throw ContractViolation("exact_increment_covariance: n*T must be <= 512");
    }
    const double rho = config.correlation.rho0;
    const int n = config.n;

    // r_ab(k) = E[Delta_1 G^a Delta_{1+k} G^b] (includes the rho_ab factor)
    Eigen::ArrayXd r11(steps), r22(steps), r12(steps), r21(steps);
    for (std::int64_t k = 0; k < steps; ++k) {
        const int lag = static_cast<int>(k);
        r11[k] = increment_covariance(config.kernels, 1, 1, n, lag, rho);
        r22[k] = increment_covariance(config.kernels, 2, 2, n, lag, rho);
        r12[k] = increment_covariance(config.kernels, 1, 2, n, lag, rho);
        r21[k] = increment_covariance(config.kernels, 2, 1, n, lag, rho);
    }

    Eigen::MatrixXd cov(2 * steps, 2 * steps);
    for (std::int64_t i = 0; i < steps; ++i) {
        for (std::int64_t j = 0; j < steps; ++j) {
            const std::int64_t k = std::abs(j - i);
            cov(i, j) = r11[k];
            cov(steps + i, steps + j) = r22[k];
            // stacked (leg1, leg2): entry (i, steps+j) = E[dy1_i dy2_j]
            cov(i, steps + j) = j >= i ? r12[k] : r21[k];
            cov(steps + i, j) = j >= i ? r21[k] : r12[k];
        }
    }
    return cov;
}

IncrementSeries exact_gaussian_increments(const SimulationConfig& config,
                                          std::uint64_t replication) {
    const Eigen::MatrixXd cov = exact_increment_covariance(config);
    const std::int64_t dim = cov.rows();
    const std::int64_t steps = dim / 2;

    Eigen::LLT<Eigen::MatrixXd> llt;
    bool factored = false;
    for (const double jitter : {0.0, 1e-12, 1e-10, 1e-8}) {
        Eigen::MatrixXd shifted = cov;
        shifted.diagonal().array() += jitter;
        llt.compute(shifted);
        if (llt.info() == Eigen::Success) {
            factored = true;
            break;
        }
    }
    if (!factored) {
        const double min_eig =
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(cov).eigenvalues().minCoeff();
        throw NumericalError(
            "exact_gaussian_increments: covariance not positive semidefinite within the "
            "jitter budget (min eigenvalue " +
                std::to_string(min_eig) + ")",
            min_eig);
    }

    GaussianStream stream(derive_seed(config.seed, replication, SeedLane::Driver1));
    Eigen::VectorXd z(dim);
    for (std::int64_t i = 0; i < dim; ++i) z[i] = stream.next();
    const Eigen::VectorXd x = llt.matrixL() * z;

    IncrementSeries series;
    series.config = config;
    series.bundle = build_bundle(config, replication, false);
    series.dy1 = x.head(steps).array();
    series.dy2 = x.tail(steps).array();
    return series;
}

}  // namespace covarlab
