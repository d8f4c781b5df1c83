#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <memory>

#include "covarlab/errors.hpp"
#include "covarlab/oracles.hpp"
#include "covarlab/quadrature.hpp"
#include "covarlab/simulator.hpp"

using namespace covarlab;

namespace {

SimulationConfig exp_config(int n, int kappa, double M, double rho, std::uint64_t seed = 99) {
    SimulationConfig config;
    config.n = n;
    config.kappa = kappa;
    config.M = M;
    config.seed = seed;
    auto e = std::make_shared<ExpKernel>(1.0);
    config.kernels = {e, e};
    config.correlation = CorrelationModel::constant(rho);
    return config;
}

}  // namespace

TEST_CASE("config validation") {
    SimulationConfig config = exp_config(8, 2, 2.0, 0.0);
    config.validate();

    SimulationConfig bad = config;
    bad.n = 1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = config;
    bad.kappa = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = config;
    bad.M = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = config;
    bad.kernels.k2 = nullptr;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("oversized fine grids are rejected before allocation") {
    SimulationConfig config = exp_config(1 << 20, 64, 1024.0, 0.0);
    CHECK_THROWS_AS(config.validate(), ConfigError);
    CHECK_THROWS_AS((void)simulate_ma_increments(config), ConfigError);
}

TEST_CASE("simulation is deterministic across runs and weight instances") {
    const SimulationConfig config = exp_config(16, 4, 3.0, 0.4, 1234);
    const IncrementSeries a = simulate_ma_increments(config, 3);
    const IncrementSeries b = simulate_ma_increments(config, 3);
    CHECK((a.dy1 == b.dy1).all());
    CHECK((a.dy2 == b.dy2).all());

    const IncrementWeights w1(config), w2(config);
    const IncrementSeries c = simulate_ma_increments(config, 3, w1);
    const IncrementSeries d = simulate_ma_increments(config, 3, w2);
    CHECK((c.dy1 == d.dy1).all());
    CHECK((c.dy1 == a.dy1).all());

    const IncrementSeries other_rep = simulate_ma_increments(config, 4);
    CHECK_FALSE((other_rep.dy1 == a.dy1).all());
}

TEST_CASE("perfect correlation with equal kernels collapses the legs") {
    const SimulationConfig config = exp_config(16, 4, 3.0, 1.0);
    const IncrementSeries s = simulate_ma_increments(config, 0);
    CHECK((s.dy1 == s.dy2).all());
}

TEST_CASE("independent legs are empirically uncorrelated") {
    const SimulationConfig config = exp_config(4, 2, 2.0, 0.0);
    const IncrementWeights weights(config);
    const int reps = 10000;
    const int i = 2;  // fixed increment index
    double s1 = 0, s2 = 0, s11 = 0, s22 = 0, s12 = 0;
    for (int rep = 0; rep < reps; ++rep) {
        const IncrementSeries s = simulate_ma_increments(config, rep, weights);
        s1 += s.dy1[i];
        s2 += s.dy2[i];
        s11 += s.dy1[i] * s.dy1[i];
        s22 += s.dy2[i] * s.dy2[i];
        s12 += s.dy1[i] * s.dy2[i];
    }
    const double m1 = s1 / reps, m2 = s2 / reps;
    const double corr = (s12 / reps - m1 * m2) /
                        std::sqrt((s11 / reps - m1 * m1) * (s22 / reps - m2 * m2));
    CHECK(std::abs(corr) <= 3.0 / std::sqrt(double(reps)));
}

TEST_CASE("increment variance matches the variogram oracle") {
    const SimulationConfig config = exp_config(8, 64, 8.0, 0.0);
    const IncrementWeights weights(config);
    const int reps = 10000;
    double sum_sq = 0.0;
    for (int rep = 0; rep < reps; ++rep) {
        const IncrementSeries s = simulate_ma_increments(config, rep, weights);
        sum_sq += s.dy1[0] * s.dy1[0];
    }
    const double mc_var = sum_sq / reps;
    const double oracle = variogram(config.kernels, 1.0, config.delta_n());
    const double se = oracle * std::sqrt(2.0 / reps);
    CHECK(std::abs(mc_var - oracle) <= 3.0 * se);
}

TEST_CASE("truncating the past at M is within the analytic tail bound") {
    for (bool gamma : {false, true}) {
        SimulationConfig config = exp_config(8, 16, 4.0, 0.0);
        if (gamma) {
            auto g = std::make_shared<GammaKernel>(-0.2, 1.0);
            config.kernels = {g, g};
        }
        SimulationConfig doubled = config;
        doubled.M = 8.0;
        const IncrementWeights w1(config), w2(doubled);
        const double v1 = w1.discrete_increment_covariance(1, 1, 0);
        const double v2 = w2.discrete_increment_covariance(1, 1, 0);
        // tail of int phi^2 over [M, inf)
        const Kernel& k = *config.kernels.k1;
        const double d = config.delta_n();
        auto tail = integrate(
            [&](double s) {
                const double diff = k.value(s + d) - k.value(s);
                return diff * diff;
            },
            config.M, tail_horizon(k));
        REQUIRE(tail.converged);
        const double bound = tail.value + d * d * k.derivative_tail_sq_bound(tail_horizon(k));
        CHECK(std::abs(v2 - v1) <= bound * 1.05 + 1e-18);
    }
}

TEST_CASE("discretised covariances converge to the exact ones in kappa") {
    // refinement consistency at kappa = 64 for the exponential baseline
    const SimulationConfig config = exp_config(8, 64, 8.0, 0.0);
    const IncrementWeights weights(config);
    for (int leg : {1, 2}) {
        const double disc = weights.discrete_increment_covariance(leg, leg, 0);
        const double exact = variogram(config.kernels, 1.0, config.delta_n());
        CHECK(std::abs(disc / exact - 1.0) < 0.02);
    }
    // and the discrepancy shrinks as kappa grows
    SimulationConfig coarse = exp_config(8, 4, 8.0, 0.0);
    const IncrementWeights coarse_weights(coarse);
    const double exact = variogram(config.kernels, 1.0, config.delta_n());
    const double err_fine =
        std::abs(weights.discrete_increment_covariance(1, 1, 0) / exact - 1.0);
    const double err_coarse =
        std::abs(coarse_weights.discrete_increment_covariance(1, 1, 0) / exact - 1.0);
    CHECK(err_fine <= err_coarse);
}

TEST_CASE("relabelling the legs transposes the discrete statistics") {
    SimulationConfig config = exp_config(8, 8, 4.0, 0.5);
    config.kernels = {std::make_shared<ExpKernel>(1.0),
                      std::make_shared<GammaKernel>(-0.2, 1.0)};
    SimulationConfig swapped = config;
    swapped.kernels = {config.kernels.k2, config.kernels.k1};
    const IncrementWeights wa(config), wb(swapped);
    for (int lag : {0, 1, 3}) {
        CHECK(wa.discrete_increment_covariance(1, 2, lag) ==
              wb.discrete_increment_covariance(2, 1, lag));
        CHECK(wa.discrete_increment_covariance(1, 1, lag) ==
              wb.discrete_increment_covariance(2, 2, lag));
    }
}

TEST_CASE("moving-average precondition on volatility") {
    SimulationConfig config = exp_config(8, 2, 2.0, 0.0);
    config.volatility = {VolatilityModel::constant(1.0), VolatilityModel::constant(1.0)};
    CHECK_NOTHROW((void)simulate_ma_increments(config, 0));
    config.volatility = {VolatilityModel::constant(2.0), VolatilityModel::constant(1.0)};
    CHECK_THROWS_AS((void)simulate_ma_increments(config, 0), ContractViolation);
}

TEST_CASE("unit-volatility BSS increments equal the moving-average increments") {
    SimulationConfig config = exp_config(16, 4, 3.0, 0.3, 777);
    SimulationConfig bss = config;
    bss.volatility = {VolatilityModel::constant(1.0), VolatilityModel::constant(1.0)};
    const IncrementSeries ma = simulate_ma_increments(config, 5);
    const IncrementSeries xs = simulate_bss_increments(bss, 5);
    CHECK((ma.dy1 == xs.dy1).all());
    CHECK((ma.dy2 == xs.dy2).all());

    // zero-noise ExpOU collapses to the constant-volatility run
    SimulationConfig frozen = config;
    frozen.volatility = {VolatilityModel::exp_ou(1.0, 0.0, 0.0),
                         VolatilityModel::exp_ou(2.0, 0.0, 0.0)};
    const IncrementSeries fs = simulate_bss_increments(frozen, 5);
    CHECK((fs.dy1 == ma.dy1).all());
    CHECK((fs.dy2 == ma.dy2).all());

    CHECK_THROWS_AS((void)simulate_bss_increments(config, 0), ContractViolation);
}

TEST_CASE("constant volatilities scale the increment covariance bilinearly") {
    SimulationConfig config = exp_config(8, 8, 5.0, 0.6, 31415);
    config.volatility = {VolatilityModel::constant(2.0), VolatilityModel::constant(3.0)};
    const IncrementWeights weights(config);
    const int reps = 4000;
    double acc = 0.0;
    for (int rep = 0; rep < reps; ++rep) {
        const IncrementSeries s = simulate_bss_increments(config, rep, weights);
        acc += (s.dy1 * s.dy2).mean();
    }
    const double mean = acc / reps;
    const double oracle = 6.0 * 0.6 * scaling_factor(config.kernels, config.delta_n());
    // crude se bound: var of the product mean is ~ (1 + rho^2) c^2 / (n reps)
    const double se = std::sqrt(2.0) * (oracle / 0.6) /
                      std::sqrt(double(reps) * config.coarse_steps());
    CHECK(std::abs(mean - oracle) <= 3.0 * se);
}

TEST_CASE("exact Gaussian sampler: assembled covariance") {
    SimulationConfig config = exp_config(8, 2, 4.0, 0.7);
    const Eigen::MatrixXd cov = exact_increment_covariance(config);
    const std::int64_t steps = config.coarse_steps();
    REQUIRE(cov.rows() == 2 * steps);
    const double d = config.delta_n();

    // diagonal: Var(D_1 Y^(j)) = r_jj(0) = c(d) for the exponential pair
    const double c_d = 1.0 - std::exp(-d);
    for (std::int64_t i = 0; i < 2 * steps; ++i) {
        CHECK(cov(i, i) == doctest::Approx(c_d).epsilon(1e-8));
    }
    // cross-leg same-index: rho * c(d)
    CHECK(cov(0, steps) == doctest::Approx(0.7 * c_d).epsilon(1e-8));
    // symmetry of the assembled matrix
    CHECK((cov - cov.transpose()).cwiseAbs().maxCoeff() == 0.0);

    SimulationConfig jacobi_cfg = config;
    jacobi_cfg.correlation = CorrelationModel::jacobi(0.0);
    CHECK_THROWS_AS((void)exact_increment_covariance(jacobi_cfg), ContractViolation);
    SimulationConfig big = config;
    big.n = 1024;
    CHECK_THROWS_AS((void)exact_increment_covariance(big), ContractViolation);
}

TEST_CASE("exact Gaussian sampler: Monte Carlo self-check") {
    SimulationConfig config = exp_config(4, 2, 4.0, 0.7, 2718);
    const Eigen::MatrixXd cov = exact_increment_covariance(config);
    const std::int64_t steps = config.coarse_steps();

    const int reps = 100000;
    Eigen::MatrixXd sample = Eigen::MatrixXd::Zero(2 * steps, 2 * steps);
    for (int rep = 0; rep < reps; ++rep) {
        const IncrementSeries s = exact_gaussian_increments(config, rep);
        Eigen::VectorXd x(2 * steps);
        x.head(steps) = s.dy1.matrix();
        x.tail(steps) = s.dy2.matrix();
        sample.noalias() += x * x.transpose();
    }
    sample /= double(reps);
    // entrywise 3 sigma on a 4x4 sub-block spanning both legs
    for (std::int64_t i = 0; i < 4; ++i) {
        for (std::int64_t j = 0; j < 4; ++j) {
            const std::int64_t a = i < 2 ? i : steps + (i - 2);
            const std::int64_t b = j < 2 ? j : steps + (j - 2);
            const double se = std::sqrt(
                (cov(a, a) * cov(b, b) + cov(a, b) * cov(a, b)) / reps);
            CHECK(std::abs(sample(a, b) - cov(a, b)) <= 3.0 * se);
        }
    }
    // determinism of the sampler itself
    const IncrementSeries s1 = exact_gaussian_increments(config, 11);
    const IncrementSeries s2 = exact_gaussian_increments(config, 11);
    CHECK((s1.dy1 == s2.dy1).all());
}

TEST_CASE("path bundle covers the whole grid with valid values") {
    SimulationConfig config = exp_config(8, 2, 2.0, 0.0, 5);
    config.correlation = CorrelationModel::jacobi(0.3);
    config.volatility = {VolatilityModel::exp_ou(1.0, 0.4, 0.0),
                         VolatilityModel::exp_ou(1.0, 0.4, 0.1)};
    const IncrementSeries s = simulate_bss_increments(config, 0);
    CHECK(s.bundle.rho.size() == s.bundle.grid.n_cells);
    CHECK(s.bundle.rho.abs().maxCoeff() <= 1.0);
    CHECK(s.bundle.sigma1.minCoeff() > 0.0);
    CHECK(s.bundle.sigma2.minCoeff() > 0.0);
    CHECK(s.dy1.size() == config.coarse_steps());
    CHECK(s.dy1.isFinite().all());
    CHECK(s.dy2.isFinite().all());
}
