#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "covarlab/grid.hpp"

namespace covarlab {

// Stochastic correlation process rho on [-1, 1], defined on the whole grid
// including the truncated past.
struct CorrelationModel {
    enum class Kind { Constant, Jacobi, Sinusoid };
    Kind kind = Kind::Constant;
    double rho0 = 0.0;       // Constant
    double rho_init = 0.0;   // Jacobi start value
    double amplitude = 0.0;  // Sinusoid
    double frequency = 0.0;  // Sinusoid
    double holder_alpha = 1.0;  // claimed Holder exponent of the paths

    static CorrelationModel constant(double rho);
    static CorrelationModel jacobi(double init);
    static CorrelationModel sinusoid(double amplitude, double omega);
    std::string spec_string() const;
};

// Positive volatility process for the Brownian semistationary legs.
struct VolatilityModel {
    enum class Kind { Constant, ExpOU };
    Kind kind = Kind::Constant;
    double sigma0 = 1.0;   // Constant
    double kappa_v = 0.0;  // ExpOU mean reversion
    double xi = 0.0;       // ExpOU vol-of-vol
    double level = 0.0;    // ExpOU mean level of log sigma

    static VolatilityModel constant(double sigma);
    static VolatilityModel exp_ou(double kappa, double xi, double level);
    std::string spec_string() const;
    bool is_unit() const { return kind == Kind::Constant && sigma0 == 1.0; }
};

// `const(rho=<f>)`, `jacobi(init=<f>)`, `sin(a=<f>,omega=<f>)`
CorrelationModel parse_correlation(const std::string& spec);
// `const(sigma=<f>)`, `expou(kappa=<f>,xi=<f>,m=<f>)`
VolatilityModel parse_volatility(const std::string& spec);

// Correlation path at the cell left endpoints. The Jacobi variant is an
// Euler-Maruyama scheme for d rho = sqrt((1-rho)(1+rho)) dW*, clamped to
// [-1, 1] so Euler overshoot cannot leave the admissible band.
Eigen::ArrayXd sample_correlation_path(const CorrelationModel& model, const FineGrid& grid,
                                       std::uint64_t stream_seed);

// Volatility path at the cell left endpoints; ExpOU is sigma = exp(U) with U
// an Euler-discretised OU process started from U = 0 at the grid start.
Eigen::ArrayXd sample_volatility_path(const VolatilityModel& model, const FineGrid& grid,
                                      std::uint64_t stream_seed);

// Log-log regression of the maximal increment against dyadic lags. Returns
// +inf for a constant path (flag value, not an error).
double empirical_holder_exponent(const Eigen::ArrayXd& path, const FineGrid& grid);

// Fine-grid paths backing one simulated replication.
struct PathBundle {
    Eigen::ArrayXd rho;
    Eigen::ArrayXd sigma1;
    Eigen::ArrayXd sigma2;
    FineGrid grid;
};

}  // namespace covarlab
