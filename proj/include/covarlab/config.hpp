#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "covarlab/experiments.hpp"

namespace covarlab {

// Parsed and validated view of a config file. The file format is line-based
// `key = value` with `[section]` headers; `seed` lives before the first
// section header. Parsing is strict: unknown sections or keys are errors.
//
//   seed = 42
//   [kernels]      k1, k2            e.g. gamma(delta=-0.2,lambda=1)
//   [correlation]  model, holder_alpha (optional)
//   [volatility]   v1, v2            optional section
//   [grid]         n, T, kappa, M    T, kappa, M optional (defaults 1, 16,
//                                    max(10, 50/lambda_min))
//   [study]        theorem, n_list, replications, tolerance, force
//   [output]       path, format      format optional (csv|json, else by
//                                    file extension)
struct CliConfig {
    std::uint64_t seed = 1;

    std::string k1_spec;
    std::string k2_spec;

    std::string correlation_spec;
    std::optional<double> holder_alpha;

    std::optional<std::string> v1_spec;
    std::optional<std::string> v2_spec;

    int n = 0;
    double T = 1.0;
    int kappa = kDefaultKappa;
    std::optional<double> M;

    std::optional<Theorem> theorem;
    std::vector<int> n_list;
    int replications = 100;
    double tolerance = 0.02;
    bool force = false;

    std::optional<std::string> output_path;
    std::optional<ReportFormat> output_format;
};

// Raw `[section] key = value` representation; kept so overrides can be
// applied textually before validation.
using RawConfig = std::map<std::string, std::map<std::string, std::string>>;

RawConfig parse_raw_config(const std::string& text);
RawConfig load_raw_config(const std::string& path);

// Applies one `--set section.key=value` override (top-level keys take no
// section prefix, e.g. `--set seed=7`).
void apply_override(RawConfig& raw, const std::string& assignment);

// Validates the raw key/value map; throws ConfigError naming the offending
// section/key.
CliConfig validate_config(const RawConfig& raw);

SimulationConfig to_simulation_config(const CliConfig& config);
StudySpec to_study_spec(const CliConfig& config);

// Recognized keys, one per line, for --help output.
std::string config_key_reference();

}  // namespace covarlab
