#pragma once

#include <Eigen/Dense>

#include "covarlab/simulator.hpp"

namespace covarlab {

// Partial-sum path on the coarse grid; values[0] = 0 and values has one more
// entry than there are increments.
struct PartialSumPath {
    Eigen::ArrayXd values;
    Eigen::ArrayXd t_grid;
};

enum class TargetKind { IntegratedCorrelation, IntegratedVolCorrelation, QcLimit };

// Limit path evaluated on the same coarse grid.
struct TargetPath {
    Eigen::ArrayXd values;
    Eigen::ArrayXd t_grid;
    TargetKind kind = TargetKind::IntegratedCorrelation;
};

// Realised covariation: partial sums of dy1 * dy2.
PartialSumPath realised_covariation(const IncrementSeries& series);

// Realised covariation scaled by delta_n / c_value.
PartialSumPath scaled_realised_covariation(const IncrementSeries& series, double c_value);

// Partial sums of squared increments (nondecreasing path).
PartialSumPath realised_variance(const Eigen::ArrayXd& increments, double delta_n);

// Left-endpoint Riemann sums of rho (or sigma1 sigma2 rho) over the fine
// cells in [0, t_i]. QcLimit scales the integrated correlation by
// g1(0+) g2(0+); it throws UndefinedLimitError when a kernel blows up at
// zero (use the scaled estimator in that regime).
TargetPath integrated_target(const PathBundle& bundle, TargetKind kind, const KernelPair& pair,
                             std::int64_t coarse_steps, int kappa);

// Finite-grid proxy for the u.c.p. distance: max_i |estimate_i - target_i|.
double sup_error(const PartialSumPath& estimate, const TargetPath& target);

}  // namespace covarlab
