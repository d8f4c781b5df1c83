#include "covarlab/kernels.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <vector>

#include "covarlab/errors.hpp"

namespace covarlab {

namespace {

std::string format_param(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

GammaKernel::GammaKernel(double delta, double lambda) : delta_(delta), lambda_(lambda) {
    if (!(lambda > 0.0)) {
        throw ConfigError("gamma kernel: lambda must be positive");
    }
    if (!(delta > -0.5 && delta < 0.5) || delta == 0.0) {
        throw ConfigError("gamma kernel: delta must lie in (-1/2, 0) or (0, 1/2)");
    }
    if (delta_ < 0.0) {
        b_ = 1.0;
    } else {
        // (g')^2 is non-increasing past the upper inflection point
        // (delta + sqrt(delta)) / lambda; round up to a whole time unit.
        b_ = std::max(1.0, std::ceil((delta_ + std::sqrt(delta_)) / lambda_));
    }
}

double GammaKernel::value(double x) const {
    if (x <= 0.0) return 0.0;
    return std::pow(x, delta_) * std::exp(-lambda_ * x);
}

double GammaKernel::derivative(double x) const {
    if (x <= 0.0) return 0.0;
    return std::exp(-lambda_ * x) * std::pow(x, delta_ - 1.0) * (delta_ - lambda_ * x);
}

double GammaKernel::zero_limit() const {
    return delta_ > 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
}

double GammaKernel::tail_sq_bound(double from) const {
    // g^2(s) = s^(2 delta) e^(-2 lambda s)
    const double head = std::pow(from, 2.0 * delta_) * std::exp(-2.0 * lambda_ * from);
    if (delta_ <= 0.0) {
        return head / (2.0 * lambda_);  // s^(2 delta) non-increasing
    }
    // Valid for from >= 2 delta / lambda, which holds at the tail horizon.
    return head / lambda_;
}

double GammaKernel::derivative_tail_sq_bound(double from) const {
    // |g'(s)| <= (lambda + |delta|/from) s^delta e^(-lambda s) for s >= from.
    const double factor = lambda_ + std::abs(delta_) / from;
    return factor * factor * tail_sq_bound(from);
}

std::string GammaKernel::spec_string() const {
    return "gamma(delta=" + format_param(delta_) + ",lambda=" + format_param(lambda_) + ")";
}

ExpKernel::ExpKernel(double lambda) : lambda_(lambda) {
    if (!(lambda > 0.0)) {
        throw ConfigError("exp kernel: lambda must be positive");
    }
}

double ExpKernel::value(double x) const {
    if (x <= 0.0) return 0.0;
    return std::exp(-lambda_ * x);
}

double ExpKernel::derivative(double x) const {
    if (x <= 0.0) return 0.0;
    return -lambda_ * std::exp(-lambda_ * x);
}

double ExpKernel::tail_sq_bound(double from) const {
    return std::exp(-2.0 * lambda_ * from) / (2.0 * lambda_);
}

double ExpKernel::derivative_tail_sq_bound(double from) const {
    return lambda_ * std::exp(-2.0 * lambda_ * from) / 2.0;
}

std::string ExpKernel::spec_string() const {
    return "exp(lambda=" + format_param(lambda_) + ")";
}

namespace {

std::string lowercase(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string strip(const std::string& s) {
    auto begin = s.find_first_not_of(" \t");
    auto end = s.find_last_not_of(" \t");
    if (begin == std::string::npos) return "";
    return s.substr(begin, end - begin + 1);
}

// Parses "name(key=value,key=value)" into (name, {key: value}).
std::pair<std::string, std::map<std::string, double>> parse_call(const std::string& spec,
                                                                 const char* context) {
    const std::string text = strip(spec);
    const auto open = text.find('(');
    if (open == std::string::npos || text.back() != ')') {
        throw ConfigError(std::string(context) + ": expected name(key=value,...), got '" +
                          spec + "'");
    }
    const std::string name = lowercase(strip(text.substr(0, open)));
    const std::string body = text.substr(open + 1, text.size() - open - 2);
    std::map<std::string, double> params;
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(std::string(context) + ": malformed parameter '" + item +
                              "' in '" + spec + "'");
        }
        const std::string key = lowercase(strip(item.substr(0, eq)));
        const std::string value_text = strip(item.substr(eq + 1));
        try {
            size_t used = 0;
            const double value = std::stod(value_text, &used);
            if (used != value_text.size()) throw std::invalid_argument(value_text);
            if (params.count(key)) {
                throw ConfigError(std::string(context) + ": duplicate parameter '" + key + "'");
            }
            params[key] = value;
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception&) {
            throw ConfigError(std::string(context) + ": cannot parse number '" + value_text +
                              "' for '" + key + "'");
        }
    }
    return {name, params};
}

double take_param(std::map<std::string, double>& params, const std::string& key,
                  const std::string& name, const char* context) {
    auto it = params.find(key);
    if (it == params.end()) {
        throw ConfigError(std::string(context) + ": '" + name + "' requires parameter '" + key +
                          "'");
    }
    const double v = it->second;
    params.erase(it);
    return v;
}

void expect_no_extras(const std::map<std::string, double>& params, const std::string& name,
                      const char* context) {
    if (!params.empty()) {
        throw ConfigError(std::string(context) + ": unknown parameter '" +
                          params.begin()->first + "' for '" + name + "'");
    }
}

}  // namespace

KernelPtr parse_kernel(const std::string& spec) {
    auto [name, params] = parse_call(spec, "kernel");
    if (name == "gamma") {
        const double delta = take_param(params, "delta", name, "kernel");
        const double lambda = take_param(params, "lambda", name, "kernel");
        expect_no_extras(params, name, "kernel");
        return std::make_shared<GammaKernel>(delta, lambda);
    }
    if (name == "exp") {
        const double lambda = take_param(params, "lambda", name, "kernel");
        expect_no_extras(params, name, "kernel");
        return std::make_shared<ExpKernel>(lambda);
    }
    throw ConfigError("kernel: unknown family '" + name + "' (expected gamma or exp)");
}

double increment_kernel(const Kernel& g, double delta_n, double s) {
    if (!(delta_n > 0.0)) {
        throw ContractViolation("increment_kernel: delta_n must be positive");
    }
    if (s <= 0.0) return 0.0;
    if (s <= delta_n) return g.value(s);
    return g.value(s) - g.value(s - delta_n);
}

double tail_horizon(const Kernel& g) {
    return g.monotonicity_threshold() + std::max(50.0 / g.decay_rate(), 50.0);
}

double tail_horizon(const KernelPair& pair) {
    return std::max(tail_horizon(*pair.k1), tail_horizon(*pair.k2));
}

namespace {

constexpr double kRelTol = 1e-9;

// Negative part of the small-s power exponent of an integrand built from
// kernel values, used to pick the head substitution.
double head_exponent(double power) { return std::min(power, 0.0); }

// Splits (0, upper) into a singular head, a smooth middle and (for infinite
// upper limits) an analytically bounded tail.
struct SplitIntegral {
    QuadratureResult total;

    void add(const QuadratureResult& part) {
        total.value += part.value;
        total.error += part.error;
        total.converged = total.converged && part.converged;
    }
};

}  // namespace

QuadratureResult squared_increment_integral_detailed(const Kernel& g, double delta_n,
                                                     double upper) {
    if (!(delta_n >= 0.0)) {
        throw ContractViolation("squared_increment_integral: delta_n must be nonnegative");
    }
    if (!(upper > 0.0)) {
        throw ContractViolation("squared_increment_integral: upper must be positive");
    }
    QuadratureResult zero;
    zero.converged = true;
    if (delta_n == 0.0) return zero;

    auto f = [&g, delta_n](double s) {
        const double d = g.value(s + delta_n) - g.value(s);
        return d * d;
    };
    QuadratureOptions opts;
    opts.rel_tol = kRelTol;

    const double horizon = tail_horizon(g);
    const bool infinite = !std::isfinite(upper);
    const double far_end = infinite ? horizon : std::min(upper, horizon);
    const double head_end = std::min({delta_n, far_end, 1.0});

    SplitIntegral split;
    split.total.converged = true;
    split.add(integrate_power_singular(f, head_end, head_exponent(2.0 * g.shape_index()), opts));
    if (far_end > head_end) {
        split.add(integrate([&f](double s) { return f(s); }, head_end, far_end, opts));
    }
    if (infinite || upper > horizon) {
        // On [horizon, inf) the mean value theorem gives
        // (g(s+d)-g(s))^2 <= d^2 (g'(s))^2.
        split.total.add_error(delta_n * delta_n * g.derivative_tail_sq_bound(horizon));
    }
    return split.total;
}

double squared_increment_integral(const Kernel& g, double delta_n, double upper) {
    return require_converged(squared_increment_integral_detailed(g, delta_n, upper),
                             "squared_increment_integral");
}

QuadratureResult kernel_norm_sq_detailed(const Kernel& g) {
    auto f = [&g](double s) {
        const double v = g.value(s);
        return v * v;
    };
    QuadratureOptions opts;
    opts.rel_tol = kRelTol;
    const double horizon = tail_horizon(g);
    SplitIntegral split;
    split.total.converged = true;
    split.add(integrate_power_singular(f, 1.0, head_exponent(2.0 * g.shape_index()), opts));
    split.add(integrate(f, 1.0, horizon, opts));
    split.total.add_error(g.tail_sq_bound(horizon));
    return split.total;
}

double kernel_norm_sq(const Kernel& g) {
    return require_converged(kernel_norm_sq_detailed(g), "kernel_norm_sq");
}

namespace {

// The scaled estimator needs the increment product to keep one sign;
// this holds for same-direction monotone pairs and for identical kernels.
void check_sign_consistency(const KernelPair& pair, double delta_n) {
    const double horizon = tail_horizon(pair);
    double s = delta_n * 1e-3;
    const double ratio = std::pow(horizon / s, 1.0 / 63.0);
    for (int i = 0; i < 64; ++i, s *= ratio) {
        const double d1 = pair.k1->value(s + delta_n) - pair.k1->value(s);
        const double d2 = pair.k2->value(s + delta_n) - pair.k2->value(s);
        const double product = d1 * d2;
        if (product < -1e-12 * std::abs(d1 * d2) - 1e-300) {
            throw ContractViolation(
                "scaling_factor: increment product changes sign (kernels are not monotone in "
                "the same direction)");
        }
    }
}

}  // namespace

QuadratureResult scaling_factor_detailed(const KernelPair& pair, double delta_n) {
    if (!(delta_n > 0.0)) {
        throw ContractViolation("scaling_factor: delta_n must be positive");
    }
    check_sign_consistency(pair, delta_n);

    const Kernel& g1 = *pair.k1;
    const Kernel& g2 = *pair.k2;
    const double power = g1.shape_index() + g2.shape_index();
    QuadratureOptions opts;
    opts.rel_tol = kRelTol;

    SplitIntegral split;
    split.total.converged = true;

    auto product = [&g1, &g2](double s) { return g1.value(s) * g2.value(s); };
    split.add(integrate_power_singular(product, delta_n, head_exponent(power), opts));

    auto diff_product = [&g1, &g2, delta_n](double s) {
        return (g1.value(s + delta_n) - g1.value(s)) * (g2.value(s + delta_n) - g2.value(s));
    };
    const double horizon = tail_horizon(pair);
    const double head_end = std::min({delta_n, horizon, 1.0});
    split.add(integrate_power_singular(diff_product, head_end, head_exponent(power), opts));
    if (horizon > head_end) {
        split.add(integrate(diff_product, head_end, horizon, opts));
    }
    split.total.add_error(delta_n * delta_n *
                          std::sqrt(g1.derivative_tail_sq_bound(horizon) *
                                    g2.derivative_tail_sq_bound(horizon)));
    return split.total;
}

double scaling_factor(const KernelPair& pair, double delta_n) {
    return require_converged(scaling_factor_detailed(pair, delta_n), "scaling_factor");
}

QuadratureResult variogram_detailed(const KernelPair& pair, double rho_const, double t) {
    if (!(t >= 0.0)) {
        throw ContractViolation("variogram: t must be nonnegative");
    }
    if (!(rho_const >= -1.0 && rho_const <= 1.0)) {
        throw ContractViolation("variogram: correlation must lie in [-1, 1]");
    }
    const Kernel& g1 = *pair.k1;
    const Kernel& g2 = *pair.k2;
    QuadratureOptions opts;
    opts.rel_tol = kRelTol;

    auto cross_fn = [&g1, &g2, t](double x) { return g1.value(x) * g2.value(x + t); };
    const double cross_power = t > 0.0 ? g1.shape_index()
                                       : g1.shape_index() + g2.shape_index();
    const double horizon = tail_horizon(pair);
    SplitIntegral cross;
    cross.total.converged = true;
    cross.add(integrate_power_singular(cross_fn, 1.0, head_exponent(cross_power), opts));
    cross.add(integrate(cross_fn, 1.0, horizon, opts));
    cross.total.add_error(
        std::sqrt(g1.tail_sq_bound(horizon) * g2.tail_sq_bound(horizon)));

    const QuadratureResult n1 = kernel_norm_sq_detailed(g1);
    const QuadratureResult n2 = kernel_norm_sq_detailed(g2);

    QuadratureResult result;
    result.value = n1.value + n2.value - 2.0 * rho_const * cross.total.value;
    result.error = n1.error + n2.error + 2.0 * std::abs(rho_const) * cross.total.error;
    result.converged = n1.converged && n2.converged && cross.total.converged;
    return result;
}

double variogram(const KernelPair& pair, double rho_const, double t) {
    return require_converged(variogram_detailed(pair, rho_const, t), "variogram");
}

}  // namespace covarlab
