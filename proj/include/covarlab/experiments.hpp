#pragma once

#include <optional>
#include <string>
#include <vector>

#include "covarlab/regvar.hpp"
#include "covarlab/simulator.hpp"

namespace covarlab {

enum class Theorem { T31, T32, T34 };

std::string theorem_name(Theorem t);
Theorem theorem_from_name(const std::string& name);

struct StudySpec {
    Theorem theorem = Theorem::T32;
    std::vector<int> n_list;
    int replications = 100;
    SimulationConfig base_config;  // n is overridden per study point
    // Acceptance floor: the pass threshold is max(3 * std_error, tolerance).
    double tolerance = 0.02;
    std::uint64_t master_seed = 1;
    bool force = false;  // run even when the hypothesis audit fails
};

struct RVFitRecord {
    std::string quantity;
    double expected_exponent = 0.0;
    bool valid = false;
    RVFit fit;
    bool matches_expected = false;  // |exponent - expected| <= 0.05 on the probe grid

    bool operator==(const RVFitRecord&) const;
};

struct AssumptionAudit {
    std::vector<RVFitRecord> rv_fits;
    // Sampled ratios c(t) / (t^(d1+d2+1) * sqrt(L0_1 L0_2)): numeric estimate
    // of the limit constant H; reported, never gated.
    std::vector<double> scaling_ratio_samples;
    bool monotonicity_ok = false;
    double holder_estimate = 0.0;  // +inf sentinel for constant pilot paths
    double delta_sum = 0.0;
    bool delta_sum_nonneg = false;
    bool zero_limit_finite = false;
    bool volatility_present = false;
    bool theorem_hypotheses_ok = false;

    bool operator==(const AssumptionAudit&) const;
};

struct PerNStats {
    int n = 0;
    double delta_n = 0.0;
    std::optional<double> c_of_delta_n;  // present for the scaled estimators
    double mean_sup_error = 0.0;
    double rmse_endpoint = 0.0;
    double std_error = 0.0;
    double mean_endpoint_estimate = 0.0;
    double mean_endpoint_target = 0.0;

    bool operator==(const PerNStats&) const;
};

struct ConvergenceReport {
    Theorem theorem = Theorem::T32;
    std::vector<PerNStats> per_n;
    // Log-log slope of mean_sup_error against n; negative means the error
    // shrinks as the mesh refines.
    double fitted_slope = 0.0;
    bool pass = false;
    bool hypothesis_violating = false;
    AssumptionAudit audit;

    bool operator==(const ConvergenceReport&) const;
};

// Numeric audit of the theorem hypotheses: regular-variation fits for the
// increment L2 integrals, variograms and scaling factor, sampled kernel
// monotonicity, a pilot Holder estimate and the delta / zero-limit flags.
// Reports, never aborts.
AssumptionAudit audit_assumptions(const SimulationConfig& config, Theorem theorem);

// Monte Carlo convergence study. Replications parallelise over a worker pool
// capped by COVARLAB_THREADS; aggregation is order-normalised so the thread
// count cannot change any reported digit.
ConvergenceReport run_study(const StudySpec& spec);

enum class ReportFormat { Csv, Json };

std::optional<ReportFormat> format_from_path(const std::string& path);
std::string audit_to_json_string(const AssumptionAudit& audit);
std::string report_to_csv(const ConvergenceReport& report);
std::string report_to_json(const ConvergenceReport& report);
ConvergenceReport report_from_json(const std::string& text);
void emit_report(const ConvergenceReport& report, const std::string& path, ReportFormat format);

// Worker count used by run_study (hardware concurrency capped by the
// COVARLAB_THREADS environment variable).
int worker_count(int replications);

}  // namespace covarlab
