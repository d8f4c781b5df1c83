#include "covarlab/estimators.hpp"

#include <cmath>

#include "covarlab/errors.hpp"

namespace covarlab {

namespace {

Eigen::ArrayXd coarse_grid(Eigen::Index steps, double delta_n) {
    Eigen::ArrayXd t(steps + 1);
    for (Eigen::Index i = 0; i <= steps; ++i) t[i] = i * delta_n;
    return t;
}

PartialSumPath partial_sums(const Eigen::ArrayXd& terms, double delta_n) {
    PartialSumPath path;
    path.values.resize(terms.size() + 1);
    path.values[0] = 0.0;
    double sum = 0.0, comp = 0.0;
    for (Eigen::Index i = 0; i < terms.size(); ++i) {
        const double y = terms[i] - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        path.values[i + 1] = sum;
    }
    path.t_grid = coarse_grid(terms.size(), delta_n);
    return path;
}

}  // namespace

PartialSumPath realised_covariation(const IncrementSeries& series) {
    if (series.dy1.size() != series.dy2.size()) {
        throw ContractViolation("realised_covariation: increment arrays differ in length");
    }
    return partial_sums(series.dy1 * series.dy2, series.config.delta_n());
}

PartialSumPath scaled_realised_covariation(const IncrementSeries& series, double c_value) {
    if (!(c_value > 0.0)) {
        throw ContractViolation("scaled_realised_covariation: c_value must be positive");
    }
    PartialSumPath path = realised_covariation(series);
    path.values *= series.config.delta_n() / c_value;
    return path;
}

PartialSumPath realised_variance(const Eigen::ArrayXd& increments, double delta_n) {
    return partial_sums(increments * increments, delta_n);
}

TargetPath integrated_target(const PathBundle& bundle, TargetKind kind, const KernelPair& pair,
                             std::int64_t coarse_steps, int kappa) {
    const std::int64_t zero_cell = bundle.grid.time_zero_cell();
    if (zero_cell + coarse_steps * kappa > bundle.grid.n_cells) {
        throw ContractViolation("integrated_target: bundle does not cover [0, T]");
    }

    double scale = 1.0;
    if (kind == TargetKind::QcLimit) {
        const double z1 = pair.k1->zero_limit();
        const double z2 = pair.k2->zero_limit();
        if (!std::isfinite(z1) || !std::isfinite(z2)) {
            throw UndefinedLimitError(
                "integrated_target: g(0+) diverges; the quadratic-covariation limit is "
                "undefined (use the scaled estimator)");
        }
        scale = z1 * z2;
    }

    TargetPath target;
    target.kind = kind;
    target.values.resize(coarse_steps + 1);
    target.values[0] = 0.0;
    const double h = bundle.grid.cell_width;
    double sum = 0.0, comp = 0.0;
    std::int64_t cell = zero_cell;
    for (std::int64_t i = 1; i <= coarse_steps; ++i) {
        for (int s = 0; s < kappa; ++s, ++cell) {
            double term = bundle.rho[cell];
            if (kind == TargetKind::IntegratedVolCorrelation) {
                term *= bundle.sigma1[cell] * bundle.sigma2[cell];
            }
            const double y = term * h - comp;
            const double t = sum + y;
            comp = (t - sum) - y;
            sum = t;
        }
        target.values[i] = scale * sum;
    }
    target.t_grid = coarse_grid(coarse_steps, h * kappa);
    return target;
}

double sup_error(const PartialSumPath& estimate, const TargetPath& target) {
    if (estimate.values.size() != target.values.size()) {
        throw ContractViolation("sup_error: paths live on different grids");
    }
    return (estimate.values - target.values).abs().maxCoeff();
}

}  // namespace covarlab
