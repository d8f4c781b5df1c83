#pragma once

#include <Eigen/Dense>
#include <vector>

namespace covarlab {

// Numeric regular-variation diagnostic: fit f(x) ~ x^exponent L(x) on a
// probe grid decreasing to zero and sample the slowly varying remainder.
struct RVFit {
    double exponent = 0.0;
    double r_squared = 0.0;
    Eigen::ArrayXd probe_points;           // strictly decreasing toward 0
    Eigen::ArrayXd slowly_varying_samples;  // f(x) / x^exponent at the probes
};

struct SamplePoint {
    double x;
    double fx;
};

// Least-squares slope of log f against log x. Requires >= 4 samples with
// positive abscissae and positive values; throws ContractViolation otherwise.
RVFit rv_index_fit(const std::vector<SamplePoint>& samples);

// Geometric probe grid (ratio 1/2) from `start` downward.
std::vector<double> rv_probe_grid(double start = 1e-2, int count = 12);

// Potter-bound diagnostic: samples x^alpha * L(x) at the fit's probes; for a
// genuinely slowly varying L these decay to zero for every alpha > 0.
Eigen::ArrayXd potter_samples(const RVFit& fit, double alpha);

// Plain least-squares slope of y against x (shared log-log helper).
double least_squares_slope(const Eigen::ArrayXd& x, const Eigen::ArrayXd& y);

}  // namespace covarlab
