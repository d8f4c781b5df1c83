#pragma once

#include <functional>

namespace covarlab {

struct QuadratureOptions {
    double rel_tol = 1e-9;
    double abs_tol = 1e-15;
    // Budget of interval refinements before the integrator gives up.
    int max_intervals = 20000;
};

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;  // estimated absolute error
    bool converged = false;

    // Tightens nothing, just accumulates an extra error contribution
    // (used for analytic truncation remainders).
    QuadratureResult& add_error(double extra) {
        error += extra;
        return *this;
    }
};

// Globally adaptive Gauss-Kronrod (G7,K15) integration of f over [a, b].
// Endpoints are never evaluated, so integrable endpoint singularities are
// tolerated as long as the refinement converges.
QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           const QuadratureOptions& opts = {});

// Integrates f over (0, s0] where f(s) ~ s^singularity near 0 with
// singularity in (-1, 0). The substitution u = s^(1+singularity) turns the
// leading power into a constant, so the transformed integrand is bounded.
// For singularity >= 0 this falls back to plain integration.
QuadratureResult integrate_power_singular(const std::function<double(double)>& f, double s0,
                                          double singularity, const QuadratureOptions& opts = {});

// Unwraps a result, throwing QuadratureError when the tolerance was not met.
double require_converged(const QuadratureResult& result, const char* what);

}  // namespace covarlab
