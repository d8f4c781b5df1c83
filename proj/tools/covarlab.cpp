#include <CLI11.hpp>
#include <charconv>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "covarlab/config.hpp"
#include "covarlab/errors.hpp"
#include "covarlab/estimators.hpp"
#include "covarlab/experiments.hpp"
#include "covarlab/regvar.hpp"
#include "covarlab/simulator.hpp"

namespace {

using namespace covarlab;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitHypothesis = 4;

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> output;
};

CliConfig load_config(const CommonArgs& args) {
    RawConfig raw = load_raw_config(args.config_path);
    for (const std::string& assignment : args.overrides) {
        apply_override(raw, assignment);
    }
    if (args.seed) {
        apply_override(raw, "seed=" + std::to_string(*args.seed));
    }
    return validate_config(raw);
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open '" + path + "' for writing");
    }
    out << text;
    if (!out) {
        throw std::runtime_error("write to '" + path + "' failed");
    }
}

int cmd_simulate(const CommonArgs& args) {
    const CliConfig config = load_config(args);
    const SimulationConfig sim = to_simulation_config(config);
    const IncrementSeries series = sim.volatility ? simulate_bss_increments(sim)
                                                  : simulate_ma_increments(sim);
    std::ostringstream csv;
    csv << "i,t_i,dy1,dy2\n";
    const double delta_n = sim.delta_n();
    for (Eigen::Index i = 0; i < series.dy1.size(); ++i) {
        csv << (i + 1) << ',' << format_double((i + 1) * delta_n) << ','
            << format_double(series.dy1[i]) << ',' << format_double(series.dy2[i]) << '\n';
    }
    std::optional<std::string> path = args.output ? args.output : config.output_path;
    if (path) {
        write_text(*path, csv.str());
    } else {
        std::cout << csv.str();
    }
    return kExitOk;
}

int cmd_converge(const CommonArgs& args, bool force) {
    const CliConfig config = load_config(args);
    StudySpec spec = to_study_spec(config);
    if (force) spec.force = true;

    const ConvergenceReport report = run_study(spec);
    for (const PerNStats& row : report.per_n) {
        std::cout << "n=" << row.n << " delta_n=" << format_double(row.delta_n);
        if (row.c_of_delta_n) std::cout << " c=" << format_double(*row.c_of_delta_n);
        std::cout << " mean_sup_error=" << format_double(row.mean_sup_error)
                  << " rmse_endpoint=" << format_double(row.rmse_endpoint)
                  << " se=" << format_double(row.std_error) << '\n';
    }
    std::cout << "slope=" << format_double(report.fitted_slope) << '\n';
    if (report.hypothesis_violating) {
        std::cout << "warning: hypotheses violated, results are forced\n";
    }
    std::cout << (report.pass ? "PASS" : "FAIL") << '\n';

    std::optional<std::string> path = args.output ? args.output : config.output_path;
    if (!path) path = "report.csv";
    ReportFormat format = config.output_format
                              ? *config.output_format
                              : format_from_path(*path).value_or(ReportFormat::Csv);
    emit_report(report, *path, format);
    return kExitOk;
}

int cmd_audit(const CommonArgs& args) {
    const CliConfig config = load_config(args);
    const SimulationConfig sim = to_simulation_config(config);
    const Theorem theorem = config.theorem.value_or(Theorem::T32);
    const AssumptionAudit audit = audit_assumptions(sim, theorem);
    std::cout << audit_to_json_string(audit);
    return kExitOk;  // audit informs; converge gates
}

int cmd_scaling(const std::string& k1_spec, const std::string& k2_spec,
                const std::string& deltas_csv, const std::optional<std::string>& output) {
    std::vector<double> deltas;
    {
        std::stringstream ss(deltas_csv);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (item.empty()) continue;
            try {
                deltas.push_back(std::stod(item));
            } catch (const std::exception&) {
                throw ConfigError("scaling: cannot parse delta '" + item + "'");
            }
        }
    }
    if (deltas.empty()) {
        throw ConfigError("scaling: the delta list must not be empty");
    }
    const KernelPair pair{parse_kernel(k1_spec), parse_kernel(k2_spec)};

    std::ostringstream table;
    table << "delta_n,c,local_slope\n";
    std::vector<SamplePoint> samples;
    double prev_delta = 0.0, prev_c = 0.0;
    for (size_t i = 0; i < deltas.size(); ++i) {
        const double c = scaling_factor(pair, deltas[i]);
        samples.push_back({deltas[i], c});
        table << format_double(deltas[i]) << ',' << format_double(c) << ',';
        if (i > 0) {
            const double slope =
                std::log(c / prev_c) / std::log(deltas[i] / prev_delta);
            table << format_double(slope);
        }
        table << '\n';
        prev_delta = deltas[i];
        prev_c = c;
    }
    const double theory = pair.k1->shape_index() + pair.k2->shape_index() + 1.0;
    std::string footer;
    if (samples.size() >= 4) {
        const RVFit fit = rv_index_fit(samples);
        footer = "fitted_exponent=" + format_double(fit.exponent) +
                 " theoretical=" + format_double(theory) + "\n";
    } else {
        footer = "theoretical=" + format_double(theory) + " (need >= 4 deltas for a fit)\n";
    }
    if (output) {
        write_text(*output, table.str() + footer);
    } else {
        std::cout << table.str() << footer;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"covarlab: simulation and estimation laboratory for bivariate moving-average "
                 "and Brownian semistationary processes with stochastic correlation"};
    app.require_subcommand(1);
    app.footer(config_key_reference() +
               "\nExit codes: 0 success, 2 config error, 3 numerical failure, "
               "4 hypothesis gate.\nCOVARLAB_THREADS caps the worker count.");

    CommonArgs simulate_args, converge_args, audit_args;
    bool converge_force = false;
    std::string scaling_k1, scaling_k2, scaling_deltas;
    std::optional<std::string> scaling_output;

    auto add_common = [](CLI::App* cmd, CommonArgs& args, bool with_output) {
        cmd->add_option("config", args.config_path, "config file path")->required();
        cmd->add_option("--set", args.overrides,
                        "override a config entry as section.key=value (repeatable)");
        cmd->add_option("--seed", args.seed, "override the master seed");
        if (with_output) {
            cmd->add_option("-o,--output", args.output, "output file (default from [output])");
        }
    };

    CLI::App* simulate =
        app.add_subcommand("simulate", "simulate one replication and write increments CSV");
    add_common(simulate, simulate_args, true);

    CLI::App* converge =
        app.add_subcommand("converge", "run the configured convergence study");
    add_common(converge, converge_args, true);
    converge->add_flag("--force", converge_force,
                       "run even when the hypothesis audit fails");

    CLI::App* audit = app.add_subcommand("audit", "print the assumption audit as JSON");
    add_common(audit, audit_args, false);

    CLI::App* scaling =
        app.add_subcommand("scaling", "tabulate the scaling factor c(delta) and its exponent");
    scaling->add_option("--k1", scaling_k1, "kernel spec for leg 1")->required();
    scaling->add_option("--k2", scaling_k2, "kernel spec for leg 2")->required();
    scaling->add_option("--deltas", scaling_deltas, "comma-separated delta values")->required();
    scaling->add_option("-o,--output", scaling_output, "write the table to a CSV file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        // CLI11 returns 0 for --help; anything else is a usage/config error.
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(simulate_args);
        if (converge->parsed()) return cmd_converge(converge_args, converge_force);
        if (audit->parsed()) return cmd_audit(audit_args);
        if (scaling->parsed()) {
            return cmd_scaling(scaling_k1, scaling_k2, scaling_deltas, scaling_output);
        }
    } catch (const HypothesisViolation& e) {
        std::cerr << "error: " << e.what() << "\n(use --force to run anyway)\n";
        return kExitHypothesis;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const ContractViolation& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const QuadratureError& e) {
        std::cerr << "error: " << e.what()
                  << " (achieved error " << e.achieved_error << ")\n";
        return kExitNumerical;
    } catch (const NumericalError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
    return kExitOk;
}
