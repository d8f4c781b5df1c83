#include "covarlab/regvar.hpp"

#include <cmath>

#include "covarlab/errors.hpp"

namespace covarlab {

double least_squares_slope(const Eigen::ArrayXd& x, const Eigen::ArrayXd& y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw ContractViolation("least_squares_slope: need >= 2 paired samples");
    }
    const double mean_x = x.mean();
    const double mean_y = y.mean();
    const double sxx = ((x - mean_x) * (x - mean_x)).sum();
    if (sxx == 0.0) {
        throw ContractViolation("least_squares_slope: degenerate abscissae");
    }
    return ((x - mean_x) * (y - mean_y)).sum() / sxx;
}

RVFit rv_index_fit(const std::vector<SamplePoint>& samples) {
    if (samples.size() < 4) {
        throw ContractViolation("rv_index_fit: need at least 4 samples");
    }
    const auto count = static_cast<Eigen::Index>(samples.size());
    Eigen::ArrayXd log_x(count), log_f(count), xs(count);
    for (Eigen::Index i = 0; i < count; ++i) {
        if (!(samples[i].x > 0.0)) {
            throw ContractViolation("rv_index_fit: probe points must be positive");
        }
        if (!(samples[i].fx > 0.0)) {
            throw ContractViolation("rv_index_fit: sample values must be positive");
        }
        xs[i] = samples[i].x;
        log_x[i] = std::log(samples[i].x);
        log_f[i] = std::log(samples[i].fx);
    }

    RVFit fit;
    fit.exponent = least_squares_slope(log_x, log_f);

    const double mean_y = log_f.mean();
    const double mean_x = log_x.mean();
    const double intercept = mean_y - fit.exponent * mean_x;
    const Eigen::ArrayXd residual = log_f - (fit.exponent * log_x + intercept);
    const double ss_res = (residual * residual).sum();
    const double ss_tot = ((log_f - mean_y) * (log_f - mean_y)).sum();
    fit.r_squared = ss_tot > 0.0 ? std::max(0.0, 1.0 - ss_res / ss_tot) : 1.0;

    fit.probe_points = xs;
    fit.slowly_varying_samples = Eigen::ArrayXd(count);
    for (Eigen::Index i = 0; i < count; ++i) {
        fit.slowly_varying_samples[i] = samples[i].fx / std::pow(samples[i].x, fit.exponent);
    }
    return fit;
}

std::vector<double> rv_probe_grid(double start, int count) {
    std::vector<double> grid;
    grid.reserve(count);
    double x = start;
    for (int i = 0; i < count; ++i, x *= 0.5) {
        grid.push_back(x);
    }
    return grid;
}

Eigen::ArrayXd potter_samples(const RVFit& fit, double alpha) {
    if (!(alpha > 0.0)) {
        throw ContractViolation("potter_samples: alpha must be positive");
    }
    return fit.probe_points.pow(alpha) * fit.slowly_varying_samples;
}

}  // namespace covarlab
