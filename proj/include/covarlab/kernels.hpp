#pragma once

#include <memory>
#include <string>

#include "covarlab/quadrature.hpp"

namespace covarlab {

// Weight function g: R -> R+ of a moving-average / Brownian semistationary
// process. g vanishes on (-inf, 0], is continuous on (0, inf) and square
// integrable. Implementations are immutable; all members are safe to call
// concurrently.
class Kernel {
public:
    virtual ~Kernel() = default;

    // g(x); 0 for x <= 0 by the support convention.
    virtual double value(double x) const = 0;
    // g'(x) for x > 0.
    virtual double derivative(double x) const = 0;
    // lim_{x->0+} g(x); +inf when the kernel blows up at zero.
    virtual double zero_limit() const = 0;
    // Scaling parameter delta governing the small-scale power law (0 for the
    // exponential baseline).
    virtual double shape_index() const = 0;
    // Exponential decay rate lambda.
    virtual double decay_rate() const = 0;
    // Threshold b beyond which (g')^2 is non-increasing and g' in L^2.
    virtual double monotonicity_threshold() const = 0;
    // Whether g is decreasing on all of (0, inf).
    virtual bool decreasing() const = 0;
    // Analytic upper bound for the tail integral of g^2 over [from, inf).
    virtual double tail_sq_bound(double from) const = 0;
    // Analytic upper bound for the tail integral of (g')^2 over [from, inf).
    virtual double derivative_tail_sq_bound(double from) const = 0;
    // Round-trippable spec string, e.g. "gamma(delta=-0.2,lambda=1)".
    virtual std::string spec_string() const = 0;
};

using KernelPtr = std::shared_ptr<const Kernel>;

// g(x) = x^delta * exp(-lambda x) on (0, inf).
class GammaKernel final : public Kernel {
public:
    GammaKernel(double delta, double lambda);

    double value(double x) const override;
    double derivative(double x) const override;
    double zero_limit() const override;
    double shape_index() const override { return delta_; }
    double decay_rate() const override { return lambda_; }
    double monotonicity_threshold() const override { return b_; }
    bool decreasing() const override { return delta_ < 0.0; }
    double tail_sq_bound(double from) const override;
    double derivative_tail_sq_bound(double from) const override;
    std::string spec_string() const override;

private:
    double delta_;
    double lambda_;
    double b_;
};

// g(x) = exp(-lambda x) on (0, inf). Satisfies the semimartingale
// conditions; used as the baseline for sanity oracles.
class ExpKernel final : public Kernel {
public:
    explicit ExpKernel(double lambda);

    double value(double x) const override;
    double derivative(double x) const override;
    double zero_limit() const override { return 1.0; }
    double shape_index() const override { return 0.0; }
    double decay_rate() const override { return lambda_; }
    double monotonicity_threshold() const override { return 1.0; }
    bool decreasing() const override { return true; }
    double tail_sq_bound(double from) const override;
    double derivative_tail_sq_bound(double from) const override;
    std::string spec_string() const override;

private:
    double lambda_;
};

struct KernelPair {
    KernelPtr k1;
    KernelPtr k2;
};

// Parses "gamma(delta=<f>,lambda=<f>)" or "exp(lambda=<f>)",
// case-insensitively; both parameters mandatory. Throws ConfigError.
KernelPtr parse_kernel(const std::string& spec);

// Increment kernel phi_Delta: g(s) on (0, Delta], g(s) - g(s - Delta)
// beyond, 0 for s <= 0.
double increment_kernel(const Kernel& g, double delta_n, double s);

// Truncation horizon used for the numerically infinite upper limits: beyond
// b + max(50/lambda, 50) the exponential tails are below 1e-16.
double tail_horizon(const Kernel& g);
double tail_horizon(const KernelPair& pair);

// integral of (g(s+delta_n) - g(s))^2 over (0, upper); upper may be +inf.
// The truncation remainder bound is folded into the error estimate.
QuadratureResult squared_increment_integral_detailed(const Kernel& g, double delta_n,
                                                     double upper);
double squared_increment_integral(const Kernel& g, double delta_n, double upper);

// integral of g^2 over (0, inf).
QuadratureResult kernel_norm_sq_detailed(const Kernel& g);
double kernel_norm_sq(const Kernel& g);

// Scaling factor c(x) = int_0^x g1 g2 + int_0^inf (g1(s+x)-g1(s))(g2(s+x)-g2(s)) ds.
// Requires a sign-consistent pair (both monotone in the same direction, or
// identical), detected by sampling the increment product.
QuadratureResult scaling_factor_detailed(const KernelPair& pair, double delta_n);
double scaling_factor(const KernelPair& pair, double delta_n);

// Variogram R(t) = |g1|^2 + |g2|^2 - 2 rho int_0^inf g1(x) g2(x+t) dx for the
// bivariate Gaussian cores with constant correlation rho (rho = 1 on the
// diagonal legs).
QuadratureResult variogram_detailed(const KernelPair& pair, double rho_const, double t);
double variogram(const KernelPair& pair, double rho_const, double t);

}  // namespace covarlab
