#include "covarlab/paths.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "covarlab/regvar.hpp"
#include "covarlab/rng.hpp"

namespace covarlab {

CorrelationModel CorrelationModel::constant(double rho) {
    if (!(rho >= -1.0 && rho <= 1.0)) {
        throw ConfigError("correlation const: rho must lie in [-1, 1]");
    }
    CorrelationModel m;
    m.kind = Kind::Constant;
    m.rho0 = rho;
    m.holder_alpha = 1.0;
    return m;
}

CorrelationModel CorrelationModel::jacobi(double init) {
    if (!(init > -1.0 && init < 1.0)) {
        throw ConfigError("correlation jacobi: init must lie in (-1, 1)");
    }
    CorrelationModel m;
    m.kind = Kind::Jacobi;
    m.rho_init = init;
    m.holder_alpha = 0.5;  // diffusive scaling
    return m;
}

CorrelationModel CorrelationModel::sinusoid(double amplitude, double omega) {
    if (!(amplitude >= 0.0 && amplitude <= 1.0)) {
        throw ConfigError("correlation sin: amplitude must lie in [0, 1]");
    }
    CorrelationModel m;
    m.kind = Kind::Sinusoid;
    m.amplitude = amplitude;
    m.frequency = omega;
    m.holder_alpha = 1.0;  // Lipschitz
    return m;
}

VolatilityModel VolatilityModel::constant(double sigma) {
    if (!(sigma > 0.0)) {
        throw ConfigError("volatility const: sigma must be positive");
    }
    VolatilityModel m;
    m.kind = Kind::Constant;
    m.sigma0 = sigma;
    return m;
}

VolatilityModel VolatilityModel::exp_ou(double kappa, double xi, double level) {
    if (!(kappa > 0.0)) {
        throw ConfigError("volatility expou: kappa must be positive");
    }
    if (!(xi >= 0.0)) {
        throw ConfigError("volatility expou: xi must be nonnegative");
    }
    VolatilityModel m;
    m.kind = Kind::ExpOU;
    m.kappa_v = kappa;
    m.xi = xi;
    m.level = level;
    return m;
}

namespace {

std::string format_value(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

// Minimal name(key=value,...) splitter shared with kernels would be overkill
// to generalise; correlation/volatility specs only need these few shapes.
struct CallSpec {
    std::string name;
    std::vector<std::pair<std::string, double>> params;
};

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

CallSpec parse_call(const std::string& spec, const char* context) {
    const std::string text = strip(spec);
    const auto open = text.find('(');
    if (open == std::string::npos || text.empty() || text.back() != ')') {
        throw ConfigError(std::string(context) + ": expected name(key=value,...), got '" + spec +
                          "'");
    }
    CallSpec out;
    out.name = lowercase(strip(text.substr(0, open)));
    std::stringstream ss(text.substr(open + 1, text.size() - open - 2));
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(std::string(context) + ": malformed parameter '" + item + "'");
        }
        const std::string key = lowercase(strip(item.substr(0, eq)));
        const std::string value_text = strip(item.substr(eq + 1));
        try {
            size_t used = 0;
            const double value = std::stod(value_text, &used);
            if (used != value_text.size()) throw std::invalid_argument(value_text);
            out.params.emplace_back(key, value);
        } catch (const std::exception&) {
            throw ConfigError(std::string(context) + ": cannot parse number '" + value_text +
                              "'");
        }
    }
    return out;
}

double require_param(const CallSpec& call, const std::string& key, const char* context) {
    for (const auto& [k, v] : call.params) {
        if (k == key) return v;
    }
    throw ConfigError(std::string(context) + ": '" + call.name + "' requires parameter '" + key +
                      "'");
}

void require_param_count(const CallSpec& call, size_t count, const char* context) {
    if (call.params.size() != count) {
        throw ConfigError(std::string(context) + ": '" + call.name + "' takes exactly " +
                          std::to_string(count) + " parameter(s)");
    }
}

}  // namespace

CorrelationModel parse_correlation(const std::string& spec) {
    const CallSpec call = parse_call(spec, "correlation");
    if (call.name == "const") {
        require_param_count(call, 1, "correlation");
        return CorrelationModel::constant(require_param(call, "rho", "correlation"));
    }
    if (call.name == "jacobi") {
        require_param_count(call, 1, "correlation");
        return CorrelationModel::jacobi(require_param(call, "init", "correlation"));
    }
    if (call.name == "sin") {
        require_param_count(call, 2, "correlation");
        return CorrelationModel::sinusoid(require_param(call, "a", "correlation"),
                                          require_param(call, "omega", "correlation"));
    }
    throw ConfigError("correlation: unknown model '" + call.name +
                      "' (expected const, jacobi or sin)");
}

VolatilityModel parse_volatility(const std::string& spec) {
    const CallSpec call = parse_call(spec, "volatility");
    if (call.name == "const") {
        require_param_count(call, 1, "volatility");
        return VolatilityModel::constant(require_param(call, "sigma", "volatility"));
    }
    if (call.name == "expou") {
        require_param_count(call, 3, "volatility");
        return VolatilityModel::exp_ou(require_param(call, "kappa", "volatility"),
                                       require_param(call, "xi", "volatility"),
                                       require_param(call, "m", "volatility"));
    }
    throw ConfigError("volatility: unknown model '" + call.name +
                      "' (expected const or expou)");
}

std::string CorrelationModel::spec_string() const {
    switch (kind) {
        case Kind::Constant:
            return "const(rho=" + format_value(rho0) + ")";
        case Kind::Jacobi:
            return "jacobi(init=" + format_value(rho_init) + ")";
        case Kind::Sinusoid:
            return "sin(a=" + format_value(amplitude) + ",omega=" + format_value(frequency) +
                   ")";
    }
    return "";
}

std::string VolatilityModel::spec_string() const {
    switch (kind) {
        case Kind::Constant:
            return "const(sigma=" + format_value(sigma0) + ")";
        case Kind::ExpOU:
            return "expou(kappa=" + format_value(kappa_v) + ",xi=" + format_value(xi) +
                   ",m=" + format_value(level) + ")";
    }
    return "";
}

Eigen::ArrayXd sample_correlation_path(const CorrelationModel& model, const FineGrid& grid,
                                       std::uint64_t stream_seed) {
    Eigen::ArrayXd path(grid.n_cells);
    switch (model.kind) {
        case CorrelationModel::Kind::Constant:
            path.setConstant(model.rho0);
            break;
        case CorrelationModel::Kind::Sinusoid:
            for (std::int64_t k = 0; k < grid.n_cells; ++k) {
                path[k] = model.amplitude * std::sin(model.frequency * grid.left_endpoint(k));
            }
            break;
        case CorrelationModel::Kind::Jacobi: {
            GaussianStream stream(stream_seed);
            const double sqrt_h = std::sqrt(grid.cell_width);
            double rho = model.rho_init;
            path[0] = rho;
            for (std::int64_t k = 1; k < grid.n_cells; ++k) {
                const double diffusion = std::sqrt(std::max(0.0, 1.0 - rho * rho));
                rho = std::clamp(rho + diffusion * sqrt_h * stream.next(), -1.0, 1.0);
                path[k] = rho;
            }
            break;
        }
    }
    return path;
}

Eigen::ArrayXd sample_volatility_path(const VolatilityModel& model, const FineGrid& grid,
                                      std::uint64_t stream_seed) {
    Eigen::ArrayXd path(grid.n_cells);
    switch (model.kind) {
        case VolatilityModel::Kind::Constant:
            path.setConstant(model.sigma0);
            break;
        case VolatilityModel::Kind::ExpOU: {
            GaussianStream stream(stream_seed);
            const double h = grid.cell_width;
            const double sqrt_h = std::sqrt(h);
            double u = 0.0;  // burn-in over [-M, 0) brings U close to its stationary law
            path[0] = std::exp(u);
            for (std::int64_t k = 1; k < grid.n_cells; ++k) {
                u += model.kappa_v * (model.level - u) * h + model.xi * sqrt_h * stream.next();
                path[k] = std::exp(u);
            }
            break;
        }
    }
    return path;
}

double empirical_holder_exponent(const Eigen::ArrayXd& path, const FineGrid& grid) {
    if (path.size() < 64) {
        throw ContractViolation("empirical_holder_exponent: need at least 64 cells");
    }
    std::vector<double> log_lag, log_max;
    for (Eigen::Index lag = 1; 4 * lag <= path.size(); lag *= 2) {
        double max_inc = 0.0;
        for (Eigen::Index k = 0; k + lag < path.size(); ++k) {
            max_inc = std::max(max_inc, std::abs(path[k + lag] - path[k]));
        }
        if (max_inc == 0.0) {
            return std::numeric_limits<double>::infinity();  // constant path sentinel
        }
        log_lag.push_back(std::log(lag * grid.cell_width));
        log_max.push_back(std::log(max_inc));
    }
    Eigen::ArrayXd x = Eigen::Map<Eigen::ArrayXd>(log_lag.data(), log_lag.size());
    Eigen::ArrayXd y = Eigen::Map<Eigen::ArrayXd>(log_max.data(), log_max.size());
    return least_squares_slope(x, y);
}

}  // namespace covarlab
