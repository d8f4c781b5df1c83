#include "covarlab/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "covarlab/errors.hpp"

namespace covarlab {

namespace {

std::string strip(const std::string& s) {
    auto begin = s.find_first_not_of(" \t\r");
    auto end = s.find_last_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    return s.substr(begin, end - begin + 1);
}

std::string lowercase(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

// section -> known keys; "" is the top level
const std::map<std::string, std::vector<std::string>>& known_keys() {
    static const std::map<std::string, std::vector<std::string>> keys = {
        {"", {"seed"}},
        {"kernels", {"k1", "k2"}},
        {"correlation", {"model", "holder_alpha"}},
        {"volatility", {"v1", "v2"}},
        {"grid", {"n", "t", "kappa", "m"}},
        {"study", {"theorem", "n_list", "replications", "tolerance", "force"}},
        {"output", {"path", "format"}},
    };
    return keys;
}

void check_known(const std::string& section, const std::string& key, int line) {
    const auto& keys = known_keys();
    const auto sec = keys.find(section);
    const std::string where =
        line > 0 ? " (line " + std::to_string(line) + ")" : "";
    if (sec == keys.end()) {
        throw ConfigError("config: unknown section [" + section + "]" + where);
    }
    if (std::find(sec->second.begin(), sec->second.end(), key) == sec->second.end()) {
        const std::string name = section.empty() ? key : section + "." + key;
        throw ConfigError("config: unknown key '" + name + "'" + where);
    }
}

double parse_number(const std::string& value, const std::string& name) {
    try {
        size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: cannot parse number '" + value + "' for '" + name + "'");
    }
}

long parse_integer(const std::string& value, const std::string& name) {
    try {
        size_t used = 0;
        const long v = std::stol(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: cannot parse integer '" + value + "' for '" + name + "'");
    }
}

bool parse_bool(const std::string& value, const std::string& name) {
    const std::string v = lowercase(value);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config: cannot parse boolean '" + value + "' for '" + name + "'");
}

const std::string* find(const RawConfig& raw, const std::string& section,
                        const std::string& key) {
    const auto sec = raw.find(section);
    if (sec == raw.end()) return nullptr;
    const auto it = sec->second.find(key);
    if (it == sec->second.end()) return nullptr;
    return &it->second;
}

}  // namespace

RawConfig parse_raw_config(const std::string& text) {
    RawConfig raw;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto comment = line.find('#');
        if (comment != std::string::npos) line = line.substr(0, comment);
        line = strip(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError("config: malformed section header (line " +
                                  std::to_string(line_no) + ")");
            }
            section = lowercase(strip(line.substr(1, line.size() - 2)));
            if (known_keys().find(section) == known_keys().end()) {
                throw ConfigError("config: unknown section [" + section + "] (line " +
                                  std::to_string(line_no) + ")");
            }
            raw[section];  // a section may be present but empty
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config: expected 'key = value' (line " + std::to_string(line_no) +
                              ")");
        }
        const std::string key = lowercase(strip(line.substr(0, eq)));
        const std::string value = strip(line.substr(eq + 1));
        check_known(section, key, line_no);
        if (raw[section].count(key)) {
            throw ConfigError("config: duplicate key '" + key + "' (line " +
                              std::to_string(line_no) + ")");
        }
        raw[section][key] = value;
    }
    return raw;
}

RawConfig load_raw_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("config: cannot open '" + path + "'");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_raw_config(buffer.str());
}

void apply_override(RawConfig& raw, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) {
        throw ConfigError("override: expected section.key=value, got '" + assignment + "'");
    }
    const std::string target = lowercase(strip(assignment.substr(0, eq)));
    const std::string value = strip(assignment.substr(eq + 1));
    const auto dot = target.find('.');
    std::string section, key;
    if (dot == std::string::npos) {
        key = target;
    } else {
        section = target.substr(0, dot);
        key = target.substr(dot + 1);
    }
    check_known(section, key, 0);
    raw[section][key] = value;
}

CliConfig validate_config(const RawConfig& raw) {
    for (const auto& [section, entries] : raw) {
        for (const auto& [key, value] : entries) {
            check_known(section, key, 0);
            (void)value;
        }
    }

    CliConfig config;
    if (const std::string* v = find(raw, "", "seed")) {
        try {
            config.seed = std::stoull(*v);
        } catch (const std::exception&) {
            throw ConfigError("config: cannot parse seed '" + *v + "'");
        }
    }

    if (raw.find("kernels") == raw.end()) {
        throw ConfigError("config: missing required section [kernels]");
    }
    const std::string* k1 = find(raw, "kernels", "k1");
    const std::string* k2 = find(raw, "kernels", "k2");
    if (!k1 || !k2) {
        throw ConfigError("config: section [kernels] requires both k1 and k2");
    }
    config.k1_spec = *k1;
    config.k2_spec = *k2;
    parse_kernel(config.k1_spec);  // validate eagerly
    parse_kernel(config.k2_spec);

    if (raw.find("correlation") == raw.end()) {
        throw ConfigError("config: missing required section [correlation]");
    }
    const std::string* model = find(raw, "correlation", "model");
    if (!model) {
        throw ConfigError("config: section [correlation] requires key model");
    }
    config.correlation_spec = *model;
    parse_correlation(config.correlation_spec);
    if (const std::string* v = find(raw, "correlation", "holder_alpha")) {
        const double alpha = parse_number(*v, "correlation.holder_alpha");
        if (!(alpha > 0.0 && alpha <= 1.0)) {
            throw ConfigError("config: correlation.holder_alpha must lie in (0, 1]");
        }
        config.holder_alpha = alpha;
    }

    if (raw.find("volatility") != raw.end()) {
        const std::string* v1 = find(raw, "volatility", "v1");
        const std::string* v2 = find(raw, "volatility", "v2");
        if (!v1 || !v2) {
            throw ConfigError("config: section [volatility] requires both v1 and v2");
        }
        config.v1_spec = *v1;
        config.v2_spec = *v2;
        parse_volatility(*config.v1_spec);
        parse_volatility(*config.v2_spec);
    }

    if (raw.find("grid") == raw.end()) {
        throw ConfigError("config: missing required section [grid]");
    }
    const std::string* n = find(raw, "grid", "n");
    if (!n) {
        throw ConfigError("config: section [grid] requires key n");
    }
    config.n = static_cast<int>(parse_integer(*n, "grid.n"));
    if (const std::string* v = find(raw, "grid", "t")) {
        config.T = parse_number(*v, "grid.T");
    }
    if (const std::string* v = find(raw, "grid", "kappa")) {
        config.kappa = static_cast<int>(parse_integer(*v, "grid.kappa"));
    }
    if (const std::string* v = find(raw, "grid", "m")) {
        config.M = parse_number(*v, "grid.M");
    }

    if (raw.find("study") != raw.end()) {
        const std::string* theorem = find(raw, "study", "theorem");
        if (!theorem) {
            throw ConfigError("config: section [study] requires key theorem");
        }
        config.theorem = theorem_from_name(strip(*theorem));
        if (const std::string* v = find(raw, "study", "n_list")) {
            std::stringstream ss(*v);
            std::string item;
            while (std::getline(ss, item, ',')) {
                config.n_list.push_back(
                    static_cast<int>(parse_integer(strip(item), "study.n_list")));
            }
        }
        if (config.n_list.empty()) config.n_list = {config.n};
        if (const std::string* v = find(raw, "study", "replications")) {
            config.replications = static_cast<int>(parse_integer(*v, "study.replications"));
        }
        if (const std::string* v = find(raw, "study", "tolerance")) {
            config.tolerance = parse_number(*v, "study.tolerance");
        }
        if (const std::string* v = find(raw, "study", "force")) {
            config.force = parse_bool(*v, "study.force");
        }
    }

    if (raw.find("output") != raw.end()) {
        if (const std::string* v = find(raw, "output", "path")) {
            config.output_path = *v;
        }
        if (const std::string* v = find(raw, "output", "format")) {
            const std::string f = lowercase(strip(*v));
            if (f == "csv") {
                config.output_format = ReportFormat::Csv;
            } else if (f == "json") {
                config.output_format = ReportFormat::Json;
            } else {
                throw ConfigError("config: output.format must be csv or json");
            }
        }
    }
    return config;
}

SimulationConfig to_simulation_config(const CliConfig& config) {
    SimulationConfig sim;
    sim.n = config.n;
    sim.T = config.T;
    sim.kappa = config.kappa;
    sim.seed = config.seed;
    sim.kernels = KernelPair{parse_kernel(config.k1_spec), parse_kernel(config.k2_spec)};
    sim.M = config.M ? *config.M : default_truncation_horizon(sim.kernels);
    sim.correlation = parse_correlation(config.correlation_spec);
    if (config.holder_alpha) sim.correlation.holder_alpha = *config.holder_alpha;
    if (config.v1_spec) {
        sim.volatility = {parse_volatility(*config.v1_spec), parse_volatility(*config.v2_spec)};
    }
    sim.validate();
    return sim;
}

StudySpec to_study_spec(const CliConfig& config) {
    if (!config.theorem) {
        throw ConfigError("config: a [study] section with a theorem is required");
    }
    StudySpec spec;
    spec.theorem = *config.theorem;
    spec.n_list = config.n_list;
    spec.replications = config.replications;
    spec.tolerance = config.tolerance;
    spec.force = config.force;
    spec.master_seed = config.seed;
    spec.base_config = to_simulation_config(config);
    return spec;
}

std::string config_key_reference() {
    return "Config file keys (line-based `key = value` with [section] headers):\n"
           "  seed                      64-bit master seed (top level, before any section)\n"
           "  [kernels]  k1, k2         gamma(delta=<f>,lambda=<f>) | exp(lambda=<f>)\n"
           "  [correlation] model       const(rho=<f>) | jacobi(init=<f>) | "
           "sin(a=<f>,omega=<f>)\n"
           "             holder_alpha   claimed Holder exponent in (0,1] (optional)\n"
           "  [volatility] v1, v2       const(sigma=<f>) | expou(kappa=<f>,xi=<f>,m=<f>) "
           "(optional section)\n"
           "  [grid]     n              coarse steps per unit time\n"
           "             T              horizon (default 1)\n"
           "             kappa          fine substeps per coarse step (default 16)\n"
           "             M              truncation horizon (default max(10, 50/lambda_min))\n"
           "  [study]    theorem        T31 | T32 | T34\n"
           "             n_list         comma-separated increasing n values\n"
           "             replications   Monte Carlo replications (>= 10)\n"
           "             tolerance      acceptance floor (default 0.02)\n"
           "             force          run even if the hypothesis audit fails\n"
           "  [output]   path           output file\n"
           "             format         csv | json (default: by file extension)\n";
}

}  // namespace covarlab
