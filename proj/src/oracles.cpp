#include "covarlab/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "covarlab/errors.hpp"

namespace covarlab {

StepFunction::StepFunction(Eigen::ArrayXd breaks, Eigen::ArrayXd vals)
    : breakpoints(std::move(breaks)), values(std::move(vals)) {
    if (breakpoints.size() != values.size() + 1 || values.size() < 1) {
        throw ContractViolation("StepFunction: need m+1 breakpoints for m values");
    }
    for (Eigen::Index i = 0; i + 1 < breakpoints.size(); ++i) {
        if (!(breakpoints[i] < breakpoints[i + 1])) {
            throw ContractViolation("StepFunction: breakpoints must be strictly increasing");
        }
    }
}

StepFunction StepFunction::indicator(double a, double b, double value) {
    Eigen::ArrayXd breaks(2);
    breaks << a, b;
    Eigen::ArrayXd vals(1);
    vals << value;
    return StepFunction(std::move(breaks), std::move(vals));
}

double StepFunction::operator()(double t) const {
    if (t < breakpoints[0] || t >= breakpoints[breakpoints.size() - 1]) return 0.0;
    // piecewise-constant on [b_i, b_{i+1})
    Eigen::Index lo = 0, hi = breakpoints.size() - 1;
    while (hi - lo > 1) {
        const Eigen::Index mid = (lo + hi) / 2;
        if (t < breakpoints[mid]) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return values[lo];
}

double inner_product(const StepFunction& f, const StepFunction& g) {
    // merge both partitions, then sum value products segment by segment
    std::vector<double> cuts;
    cuts.reserve(f.breakpoints.size() + g.breakpoints.size());
    for (Eigen::Index i = 0; i < f.breakpoints.size(); ++i) cuts.push_back(f.breakpoints[i]);
    for (Eigen::Index i = 0; i < g.breakpoints.size(); ++i) cuts.push_back(g.breakpoints[i]);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    double sum = 0.0, comp = 0.0;
    for (size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double left = cuts[i];
        const double len = cuts[i + 1] - left;
        const double term = f(left) * g(left) * len;
        const double y = term - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    return sum;
}

double wick_fourth_moment(const StepFunction& h1, const StepFunction& h2,
                          const StepFunction& h3, const StepFunction& h4) {
    return inner_product(h1, h3) * inner_product(h2, h4) +
           inner_product(h1, h2) * inner_product(h3, h4) +
           inner_product(h1, h4) * inner_product(h2, h3);
}

namespace {

StepFunction pointwise_product(const StepFunction& f, const StepFunction& g) {
    std::vector<double> cuts;
    for (Eigen::Index i = 0; i < f.breakpoints.size(); ++i) cuts.push_back(f.breakpoints[i]);
    for (Eigen::Index i = 0; i < g.breakpoints.size(); ++i) cuts.push_back(g.breakpoints[i]);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    Eigen::ArrayXd breaks(static_cast<Eigen::Index>(cuts.size()));
    for (size_t i = 0; i < cuts.size(); ++i) breaks[static_cast<Eigen::Index>(i)] = cuts[i];
    Eigen::ArrayXd vals(breaks.size() - 1);
    for (Eigen::Index i = 0; i + 1 < breaks.size(); ++i) {
        vals[i] = f(breaks[i]) * g(breaks[i]);
    }
    return StepFunction(std::move(breaks), std::move(vals));
}

}  // namespace

double second_moment_product(const StepFunction& h1, const StepFunction& h2,
                             const StepFunction& k) {
    const StepFunction h2k = pointwise_product(h2, k);
    const double cross = inner_product(h1, h2k);
    return inner_product(h1, h1) * inner_product(h2k, h2k) + 2.0 * cross * cross;
}

QuadratureResult increment_covariance_detailed(const KernelPair& pair, int leg_a, int leg_b,
                                               int n, int lag, double rho_const) {
    if (lag < 0) throw ContractViolation("increment_covariance: lag must be >= 0");
    if (n < 1) throw ContractViolation("increment_covariance: n must be >= 1");
    if ((leg_a != 1 && leg_a != 2) || (leg_b != 1 && leg_b != 2)) {
        throw ContractViolation("increment_covariance: legs must be 1 or 2");
    }
    const Kernel& ga = leg_a == 1 ? *pair.k1 : *pair.k2;
    const Kernel& gb = leg_b == 1 ? *pair.k1 : *pair.k2;
    const double rho_ab = leg_a == leg_b ? 1.0 : rho_const;
    const double delta_n = 1.0 / n;

    QuadratureResult result;
    if (lag == 0) {
        KernelPair ordered{leg_a == 1 ? pair.k1 : pair.k2, leg_b == 1 ? pair.k1 : pair.k2};
        result = scaling_factor_detailed(ordered, delta_n);
    } else {
        QuadratureOptions opts;
        opts.rel_tol = 1e-9;
        const double horizon = tail_horizon(pair);

        // second factor: lag-Delta difference of g_b shifted by (lag-1) Delta
        auto far_diff = [&gb, delta_n, lag](double s) {
            return gb.value(lag * delta_n + s) - gb.value((lag - 1) * delta_n + s);
        };
        // head exponent: g_a contributes delta_a; for lag == 1 the shifted
        // difference also blows up like s^{delta_b}
        const double da = ga.shape_index();
        const double db = gb.shape_index();
        const double head_power_near =
            std::min(0.0, lag == 1 ? da + db : da);

        auto near_term = [&ga, &far_diff](double s) { return ga.value(s) * far_diff(s); };
        QuadratureResult near = integrate_power_singular(near_term, delta_n, head_power_near, opts);

        auto far_term = [&ga, &far_diff, delta_n](double s) {
            return (ga.value(s + delta_n) - ga.value(s)) * far_diff(s);
        };
        const double head_end = std::min(delta_n, 1.0);
        QuadratureResult far_head =
            integrate_power_singular(far_term, head_end, head_power_near, opts);
        QuadratureResult far_mid = integrate(far_term, head_end, horizon, opts);

        result.value = near.value + far_head.value + far_mid.value;
        result.error = near.error + far_head.error + far_mid.error +
                       delta_n * delta_n *
                           std::sqrt(ga.derivative_tail_sq_bound(horizon) *
                                     gb.derivative_tail_sq_bound(horizon));
        result.converged = near.converged && far_head.converged && far_mid.converged;
    }
    result.value *= rho_ab;
    result.error *= std::abs(rho_ab);
    if (rho_ab == 0.0) result.converged = true;
    return result;
}

double increment_covariance(const KernelPair& pair, int leg_a, int leg_b, int n, int lag,
                            double rho_const) {
    return require_converged(increment_covariance_detailed(pair, leg_a, leg_b, n, lag, rho_const),
                             "increment_covariance");
}

double tau_n(const KernelPtr& kernel, int n) {
    if (n < 1) throw ContractViolation("tau_n: n must be >= 1");
    const KernelPair same{kernel, kernel};
    return std::sqrt(variogram(same, 1.0, 1.0 / n));
}

}  // namespace covarlab
