#pragma once

#include <Eigen/Dense>

#include "covarlab/kernels.hpp"

namespace covarlab {

// Deterministic square-integrable step function with compact support;
// identically zero outside [breakpoints.front(), breakpoints.back()).
struct StepFunction {
    Eigen::ArrayXd breakpoints;  // strictly increasing, size m+1
    Eigen::ArrayXd values;       // size m

    StepFunction(Eigen::ArrayXd breaks, Eigen::ArrayXd vals);

    static StepFunction indicator(double a, double b, double value = 1.0);

    double operator()(double t) const;
};

// Exact L^2 inner product on the common refinement of the two partitions.
double inner_product(const StepFunction& f, const StepFunction& g);

// E[ prod_i int h_i dW ] for one Brownian motion: the three-pairing sum
// <h1,h3><h2,h4> + <h1,h2><h3,h4> + <h1,h4><h2,h3>.
double wick_fourth_moment(const StepFunction& h1, const StepFunction& h2,
                          const StepFunction& h3, const StepFunction& h4);

// E[ (int h1 dW * int h2 k dW)^2 | k ] for a bounded deterministic weight k:
// int h1^2 * int h2^2 k^2 + 2 (int h1 h2 k)^2.
double second_moment_product(const StepFunction& h1, const StepFunction& h2,
                             const StepFunction& k);

// E[ Delta_1^n G^(a) Delta_{1+k}^n G^(b) ] for the Gaussian cores under a
// constant correlation: rho_ab * c_ab(Delta_n) at lag 0, and the two-term
// increment-overlap integral for k >= 1 (rho_ab = 1 when a == b).
QuadratureResult increment_covariance_detailed(const KernelPair& pair, int leg_a, int leg_b,
                                               int n, int lag, double rho_const);
double increment_covariance(const KernelPair& pair, int leg_a, int leg_b, int n, int lag,
                            double rho_const);

// tau_n = sqrt(E[(Delta_1^n G)^2]) = sqrt(variogram at Delta_n).
double tau_n(const KernelPtr& kernel, int n);

}  // namespace covarlab
