#include "covarlab/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

#include "covarlab/errors.hpp"

namespace covarlab {

namespace {

// Gauss-Kronrod (G7,K15) nodes and weights on [-1,1] (QUADPACK constants).
constexpr double kKronrodNodes[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
};
constexpr double kKronrodWeights[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
};
constexpr double kGaussWeights[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
};

struct Segment {
    double a, b;
    double value;
    double error;
};

struct SegmentOrder {
    bool operator()(const Segment& x, const Segment& y) const { return x.error < y.error; }
};

Segment evaluate_segment(const std::function<double(double)>& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double kronrod = 0.0;
    double gauss = 0.0;
    double f_abs = 0.0;
    for (int j = 0; j < 8; ++j) {
        const double offset = half * kKronrodNodes[j];
        double fsum;
        if (j == 7) {
            fsum = f(center);
        } else {
            fsum = f(center - offset) + f(center + offset);
        }
        kronrod += kKronrodWeights[j] * fsum;
        if (j % 2 == 1) {
            gauss += kGaussWeights[j / 2] * fsum;
        }
        f_abs += kKronrodWeights[j] * std::abs(fsum);
    }
    Segment seg;
    seg.a = a;
    seg.b = b;
    seg.value = kronrod * half;
    if (!std::isfinite(seg.value)) {
        seg.error = std::numeric_limits<double>::infinity();
        return seg;
    }
    // QUADPACK-style error heuristic: sharper than |K15 - G7| once the
    // segment is resolved, conservative when it is not.
    const double diff = std::abs((kronrod - gauss) * half);
    const double scale = f_abs * half;
    seg.error = diff;
    if (scale > 0.0 && diff > 0.0) {
        const double ratio = 200.0 * diff / scale;
        seg.error = scale * std::min(1.0, ratio * std::sqrt(ratio));
    }
    return seg;
}

double kahan_total(std::vector<Segment>& segments) {
    std::sort(segments.begin(), segments.end(),
              [](const Segment& x, const Segment& y) { return x.a < y.a; });
    double sum = 0.0, comp = 0.0;
    for (const Segment& s : segments) {
        const double y = s.value - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    return sum;
}

}  // namespace

QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           const QuadratureOptions& opts) {
    QuadratureResult result;
    if (!(b > a)) {
        result.converged = true;
        return result;
    }

    std::priority_queue<Segment, std::vector<Segment>, SegmentOrder> queue;
    queue.push(evaluate_segment(f, a, b));
    double total_value = queue.top().value;
    double total_error = queue.top().error;

    int refinements = 0;
    while (total_error > std::max(opts.abs_tol, opts.rel_tol * std::abs(total_value)) &&
           refinements < opts.max_intervals) {
        Segment worst = queue.top();
        queue.pop();
        if (!std::isfinite(worst.error) && worst.b - worst.a < 1e-300) {
            // Unresolvable non-finite values on a vanishing interval.
            queue.push(worst);
            break;
        }
        const double mid = 0.5 * (worst.a + worst.b);
        if (mid <= worst.a || mid >= worst.b) {
            queue.push(worst);  // interval at roundoff resolution
            break;
        }
        Segment left = evaluate_segment(f, worst.a, mid);
        Segment right = evaluate_segment(f, mid, worst.b);
        total_value += left.value + right.value - worst.value;
        total_error += left.error + right.error - worst.error;
        queue.push(left);
        queue.push(right);
        ++refinements;
    }

    // Re-accumulate in spatial order: deterministic and compensates roundoff.
    std::vector<Segment> segments;
    segments.reserve(queue.size());
    double error = 0.0;
    while (!queue.empty()) {
        error += queue.top().error;
        segments.push_back(queue.top());
        queue.pop();
    }
    result.value = kahan_total(segments);
    result.error = error;
    result.converged =
        std::isfinite(result.value) &&
        error <= std::max(opts.abs_tol, opts.rel_tol * std::abs(result.value)) * 1.000001;
    return result;
}

QuadratureResult integrate_power_singular(const std::function<double(double)>& f, double s0,
                                          double singularity, const QuadratureOptions& opts) {
    if (!(s0 > 0.0)) {
        QuadratureResult r;
        r.converged = true;
        return r;
    }
    if (singularity >= 0.0) {
        return integrate(f, 0.0, s0, opts);
    }
    if (singularity <= -1.0) {
        throw ContractViolation("integrate_power_singular: exponent must exceed -1");
    }
    const double p = 1.0 / (1.0 + singularity);  // s = u^p with p > 1
    const double u0 = std::pow(s0, 1.0 / p);
    auto transformed = [&f, p](double u) {
        const double s = std::pow(u, p);
        return f(s) * p * std::pow(u, p - 1.0);
    };
    return integrate(transformed, 0.0, u0, opts);
}

double require_converged(const QuadratureResult& result, const char* what) {
    if (!result.converged) {
        throw QuadratureError(std::string("quadrature failed to converge in ") + what,
                              result.error);
    }
    return result.value;
}

}  // namespace covarlab
