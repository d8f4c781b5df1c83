#include "covarlab/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "covarlab/errors.hpp"
#include "covarlab/estimators.hpp"
#include "covarlab/oracles.hpp"
#include "covarlab/rng.hpp"

namespace covarlab {

std::string theorem_name(Theorem t) {
    switch (t) {
        case Theorem::T31: return "T31";
        case Theorem::T32: return "T32";
        case Theorem::T34: return "T34";
    }
    return "";
}

Theorem theorem_from_name(const std::string& name) {
    if (name == "T31" || name == "t31") return Theorem::T31;
    if (name == "T32" || name == "t32") return Theorem::T32;
    if (name == "T34" || name == "t34") return Theorem::T34;
    throw ConfigError("unknown theorem '" + name + "' (expected T31, T32 or T34)");
}

namespace {

constexpr double kExponentMatchTolerance = 0.05;

bool arrays_equal(const Eigen::ArrayXd& a, const Eigen::ArrayXd& b) {
    return a.size() == b.size() && (a == b).all();
}

double kahan_mean(const std::vector<double>& xs) {
    double sum = 0.0, comp = 0.0;
    for (double x : xs) {
        const double y = x - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    return xs.empty() ? 0.0 : sum / static_cast<double>(xs.size());
}

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

}  // namespace

bool RVFitRecord::operator==(const RVFitRecord& other) const {
    return quantity == other.quantity && expected_exponent == other.expected_exponent &&
           valid == other.valid && matches_expected == other.matches_expected &&
           fit.exponent == other.fit.exponent && fit.r_squared == other.fit.r_squared &&
           arrays_equal(fit.probe_points, other.fit.probe_points) &&
           arrays_equal(fit.slowly_varying_samples, other.fit.slowly_varying_samples);
}

bool AssumptionAudit::operator==(const AssumptionAudit& other) const {
    const bool holder_same =
        holder_estimate == other.holder_estimate ||
        (std::isinf(holder_estimate) && std::isinf(other.holder_estimate));
    return rv_fits == other.rv_fits && scaling_ratio_samples == other.scaling_ratio_samples &&
           monotonicity_ok == other.monotonicity_ok && holder_same &&
           delta_sum == other.delta_sum && delta_sum_nonneg == other.delta_sum_nonneg &&
           zero_limit_finite == other.zero_limit_finite &&
           volatility_present == other.volatility_present &&
           theorem_hypotheses_ok == other.theorem_hypotheses_ok;
}

bool PerNStats::operator==(const PerNStats& other) const {
    return n == other.n && delta_n == other.delta_n && c_of_delta_n == other.c_of_delta_n &&
           mean_sup_error == other.mean_sup_error && rmse_endpoint == other.rmse_endpoint &&
           std_error == other.std_error &&
           mean_endpoint_estimate == other.mean_endpoint_estimate &&
           mean_endpoint_target == other.mean_endpoint_target;
}

bool ConvergenceReport::operator==(const ConvergenceReport& other) const {
    return theorem == other.theorem && per_n == other.per_n &&
           fitted_slope == other.fitted_slope && pass == other.pass &&
           hypothesis_violating == other.hypothesis_violating && audit == other.audit;
}

int worker_count(int replications) {
    int workers = static_cast<int>(std::thread::hardware_concurrency());
    if (workers < 1) workers = 1;
    if (const char* env = std::getenv("COVARLAB_THREADS")) {
        try {
            workers = std::min(workers, std::max(1, std::stoi(env)));
        } catch (const std::exception&) {
            throw ConfigError("COVARLAB_THREADS must be a positive integer");
        }
    }
    return std::min(workers, std::max(1, replications));
}

namespace {

bool kernel_monotone_decreasing(const Kernel& g) {
    // log-spaced sample; analytic for the implemented families but sampled so
    // future kernels get the same treatment
    double x = 1e-6;
    const double top = tail_horizon(g);
    const double ratio = std::pow(top / x, 1.0 / 255.0);
    double prev = g.value(x);
    for (int i = 0; i < 255; ++i) {
        x *= ratio;
        const double cur = g.value(x);
        if (cur > prev * (1.0 + 1e-12)) return false;
        prev = cur;
    }
    return true;
}

RVFitRecord fit_quantity(const std::string& quantity, double expected,
                         const std::function<double(double)>& f,
                         const std::vector<double>& probes) {
    RVFitRecord record;
    record.quantity = quantity;
    record.expected_exponent = expected;
    try {
        std::vector<SamplePoint> samples;
        samples.reserve(probes.size());
        for (double x : probes) {
            samples.push_back({x, f(x)});
        }
        record.fit = rv_index_fit(samples);
        record.valid = true;
        record.matches_expected =
            std::abs(record.fit.exponent - expected) <= kExponentMatchTolerance;
    } catch (const std::exception&) {
        record.valid = false;
    }
    return record;
}

}  // namespace

AssumptionAudit audit_assumptions(const SimulationConfig& config, Theorem theorem) {
    AssumptionAudit audit;
    const KernelPtr& k1 = config.kernels.k1;
    const KernelPtr& k2 = config.kernels.k2;
    const double d1 = k1->shape_index();
    const double d2 = k2->shape_index();
    audit.delta_sum = d1 + d2;
    audit.delta_sum_nonneg = audit.delta_sum >= 0.0;
    audit.zero_limit_finite =
        std::isfinite(k1->zero_limit()) && std::isfinite(k2->zero_limit());
    audit.monotonicity_ok = kernel_monotone_decreasing(*k1) && kernel_monotone_decreasing(*k2);
    audit.volatility_present = config.volatility.has_value();

    const std::vector<double> probes = rv_probe_grid();
    const KernelPair pair11{k1, k1};
    const KernelPair pair22{k2, k2};
    audit.rv_fits.push_back(fit_quantity(
        "increment_l2_leg1", 2.0 * d1 + 1.0,
        [&](double x) {
            return squared_increment_integral(*k1, x, k1->monotonicity_threshold());
        },
        probes));
    audit.rv_fits.push_back(fit_quantity(
        "increment_l2_leg2", 2.0 * d2 + 1.0,
        [&](double x) {
            return squared_increment_integral(*k2, x, k2->monotonicity_threshold());
        },
        probes));
    audit.rv_fits.push_back(fit_quantity(
        "variogram_leg1", 2.0 * d1 + 1.0, [&](double t) { return variogram(pair11, 1.0, t); },
        probes));
    audit.rv_fits.push_back(fit_quantity(
        "variogram_leg2", 2.0 * d2 + 1.0, [&](double t) { return variogram(pair22, 1.0, t); },
        probes));
    audit.rv_fits.push_back(fit_quantity(
        "scaling_factor", d1 + d2 + 1.0,
        [&](double x) { return scaling_factor(config.kernels, x); }, probes));

    // H-ratio samples of the scaling slowly varying part against the
    // geometric mean of the leg variogram parts.
    try {
        for (double t : probes) {
            const double l4 = scaling_factor(config.kernels, t) / std::pow(t, d1 + d2 + 1.0);
            const double l01 = variogram(pair11, 1.0, t) / std::pow(t, 2.0 * d1 + 1.0);
            const double l02 = variogram(pair22, 1.0, t) / std::pow(t, 2.0 * d2 + 1.0);
            audit.scaling_ratio_samples.push_back(l4 / std::sqrt(l01 * l02));
        }
    } catch (const std::exception&) {
        audit.scaling_ratio_samples.clear();
    }

    // pilot correlation path on a small fixed grid
    {
        const FineGrid pilot = FineGrid::make(256, 1.0, 4, 2.0);
        const Eigen::ArrayXd path = sample_correlation_path(
            config.correlation, pilot, derive_seed(config.seed, 0, SeedLane::Auxiliary));
        audit.holder_estimate = empirical_holder_exponent(path, pilot);
    }

    switch (theorem) {
        case Theorem::T31:
            audit.theorem_hypotheses_ok = audit.delta_sum_nonneg && audit.zero_limit_finite;
            break;
        case Theorem::T32:
            audit.theorem_hypotheses_ok = audit.monotonicity_ok;
            break;
        case Theorem::T34:
            audit.theorem_hypotheses_ok = audit.monotonicity_ok && audit.volatility_present;
            break;
    }
    return audit;
}

namespace {

std::string describe_failed_hypotheses(const AssumptionAudit& audit, Theorem theorem) {
    std::ostringstream os;
    os << "hypothesis audit failed for " << theorem_name(theorem) << ":";
    if (theorem == Theorem::T31) {
        if (!audit.delta_sum_nonneg) os << " delta_sum=" << audit.delta_sum << " < 0;";
        if (!audit.zero_limit_finite) os << " g(0+) product diverges;";
    } else {
        if (!audit.monotonicity_ok) os << " kernels are not decreasing;";
        if (theorem == Theorem::T34 && !audit.volatility_present) {
            os << " volatility models missing;";
        }
    }
    return os.str();
}

struct RepResult {
    double sup_err = 0.0;
    double endpoint_estimate = 0.0;
    double endpoint_target = 0.0;
};

}  // namespace

ConvergenceReport run_study(const StudySpec& spec) {
    if (spec.n_list.empty()) throw ConfigError("study: n_list must not be empty");
    for (size_t i = 0; i + 1 < spec.n_list.size(); ++i) {
        if (spec.n_list[i] >= spec.n_list[i + 1]) {
            throw ConfigError("study: n_list must be strictly increasing");
        }
    }
    if (spec.replications < 10) throw ConfigError("study: replications must be >= 10");
    if (spec.theorem == Theorem::T34 && !spec.base_config.volatility) {
        throw ConfigError("study: T34 requires volatility models");
    }

    ConvergenceReport report;
    report.theorem = spec.theorem;

    SimulationConfig audited = spec.base_config;
    audited.n = spec.n_list.front();
    audited.seed = spec.master_seed;
    report.audit = audit_assumptions(audited, spec.theorem);
    if (!report.audit.theorem_hypotheses_ok) {
        if (!spec.force) {
            throw HypothesisViolation(describe_failed_hypotheses(report.audit, spec.theorem));
        }
        report.hypothesis_violating = true;
    }

    const bool scaled = spec.theorem != Theorem::T31;
    const TargetKind kind = spec.theorem == Theorem::T34
                                ? TargetKind::IntegratedVolCorrelation
                                : (spec.theorem == Theorem::T32
                                       ? TargetKind::IntegratedCorrelation
                                       : TargetKind::QcLimit);

    for (int n : spec.n_list) {
        SimulationConfig config = spec.base_config;
        config.n = n;
        config.seed = splitmix64(spec.master_seed ^ splitmix64(static_cast<std::uint64_t>(n)));
        config.validate();

        const IncrementWeights weights(config);
        std::optional<double> c_value;
        if (scaled) {
            c_value = scaling_factor(config.kernels, config.delta_n());
        }

        const int reps = spec.replications;
        std::vector<RepResult> results(reps);
        std::atomic<int> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;

        auto work = [&]() {
            for (;;) {
                const int rep = next.fetch_add(1);
                if (rep >= reps) return;
                try {
                    const IncrementSeries series =
                        spec.theorem == Theorem::T34
                            ? simulate_bss_increments(config, rep, weights)
                            : simulate_ma_increments(config, rep, weights);
                    const PartialSumPath estimate =
                        scaled ? scaled_realised_covariation(series, *c_value)
                               : realised_covariation(series);
                    const TargetPath target =
                        integrated_target(series.bundle, kind, config.kernels,
                                          config.coarse_steps(), config.kappa);
                    RepResult r;
                    r.sup_err = sup_error(estimate, target);
                    r.endpoint_estimate = estimate.values[estimate.values.size() - 1];
                    r.endpoint_target = target.values[target.values.size() - 1];
                    results[rep] = r;
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    next.store(reps);
                    return;
                }
            }
        };

        const int workers = worker_count(reps);
        if (workers <= 1) {
            work();
        } else {
            std::vector<std::thread> pool;
            pool.reserve(workers);
            for (int w = 0; w < workers; ++w) pool.emplace_back(work);
            for (auto& t : pool) t.join();
        }
        if (failure) std::rethrow_exception(failure);

        std::vector<double> sups(reps), endpoint_sq(reps), est(reps), tgt(reps);
        for (int r = 0; r < reps; ++r) {
            sups[r] = results[r].sup_err;
            const double e = results[r].endpoint_estimate - results[r].endpoint_target;
            endpoint_sq[r] = e * e;
            est[r] = results[r].endpoint_estimate;
            tgt[r] = results[r].endpoint_target;
        }

        PerNStats stats;
        stats.n = n;
        stats.delta_n = config.delta_n();
        stats.c_of_delta_n = c_value;
        stats.mean_sup_error = kahan_mean(sups);
        stats.rmse_endpoint = std::sqrt(kahan_mean(endpoint_sq));
        stats.mean_endpoint_estimate = kahan_mean(est);
        stats.mean_endpoint_target = kahan_mean(tgt);
        if (reps > 1) {
            std::vector<double> sq(reps);
            for (int r = 0; r < reps; ++r) {
                const double d = sups[r] - stats.mean_sup_error;
                sq[r] = d * d;
            }
            const double var = kahan_mean(sq) * reps / (reps - 1.0);
            stats.std_error = std::sqrt(var / reps);
        }
        report.per_n.push_back(stats);
    }

    if (report.per_n.size() >= 2) {
        Eigen::ArrayXd log_n(report.per_n.size()), log_err(report.per_n.size());
        for (size_t i = 0; i < report.per_n.size(); ++i) {
            log_n[static_cast<Eigen::Index>(i)] = std::log(report.per_n[i].n);
            log_err[static_cast<Eigen::Index>(i)] =
                std::log(std::max(report.per_n[i].mean_sup_error, 1e-300));
        }
        report.fitted_slope = least_squares_slope(log_n, log_err);
    }

    const PerNStats& last = report.per_n.back();
    const double threshold = std::max(3.0 * last.std_error, spec.tolerance);
    bool nonincreasing = true;
    for (size_t i = 0; i + 1 < report.per_n.size(); ++i) {
        if (report.per_n[i + 1].mean_sup_error >
            report.per_n[i].mean_sup_error + report.per_n[i].std_error) {
            nonincreasing = false;
        }
    }
    report.pass = last.mean_sup_error <= threshold && nonincreasing;
    return report;
}

namespace {

nlohmann::json fit_to_json(const RVFitRecord& record) {
    nlohmann::json j;
    j["quantity"] = record.quantity;
    j["expected_exponent"] = record.expected_exponent;
    j["valid"] = record.valid;
    j["matches_expected"] = record.matches_expected;
    j["exponent"] = record.fit.exponent;
    j["r_squared"] = record.fit.r_squared;
    j["probe_points"] = std::vector<double>(record.fit.probe_points.begin(),
                                            record.fit.probe_points.end());
    j["slowly_varying_samples"] = std::vector<double>(
        record.fit.slowly_varying_samples.begin(), record.fit.slowly_varying_samples.end());
    return j;
}

RVFitRecord fit_from_json(const nlohmann::json& j) {
    RVFitRecord record;
    record.quantity = j.at("quantity").get<std::string>();
    record.expected_exponent = j.at("expected_exponent").get<double>();
    record.valid = j.at("valid").get<bool>();
    record.matches_expected = j.at("matches_expected").get<bool>();
    record.fit.exponent = j.at("exponent").get<double>();
    record.fit.r_squared = j.at("r_squared").get<double>();
    const auto probes = j.at("probe_points").get<std::vector<double>>();
    const auto slowly = j.at("slowly_varying_samples").get<std::vector<double>>();
    record.fit.probe_points =
        Eigen::Map<const Eigen::ArrayXd>(probes.data(), static_cast<Eigen::Index>(probes.size()));
    record.fit.slowly_varying_samples =
        Eigen::Map<const Eigen::ArrayXd>(slowly.data(), static_cast<Eigen::Index>(slowly.size()));
    return record;
}

nlohmann::json audit_to_json(const AssumptionAudit& audit) {
    nlohmann::json j;
    j["monotonicity_ok"] = audit.monotonicity_ok;
    if (std::isfinite(audit.holder_estimate)) {
        j["holder_estimate"] = audit.holder_estimate;
    } else {
        j["holder_estimate"] = nullptr;  // +inf sentinel (constant pilot path)
    }
    j["delta_sum"] = audit.delta_sum;
    j["delta_sum_nonneg"] = audit.delta_sum_nonneg;
    j["zero_limit_finite"] = audit.zero_limit_finite;
    j["volatility_present"] = audit.volatility_present;
    j["theorem_hypotheses_ok"] = audit.theorem_hypotheses_ok;
    j["scaling_ratio_samples"] = audit.scaling_ratio_samples;
    nlohmann::json fits = nlohmann::json::array();
    for (const auto& fit : audit.rv_fits) fits.push_back(fit_to_json(fit));
    j["rv_fits"] = fits;
    return j;
}

AssumptionAudit audit_from_json(const nlohmann::json& j) {
    AssumptionAudit audit;
    audit.monotonicity_ok = j.at("monotonicity_ok").get<bool>();
    if (j.at("holder_estimate").is_null()) {
        audit.holder_estimate = std::numeric_limits<double>::infinity();
    } else {
        audit.holder_estimate = j.at("holder_estimate").get<double>();
    }
    audit.delta_sum = j.at("delta_sum").get<double>();
    audit.delta_sum_nonneg = j.at("delta_sum_nonneg").get<bool>();
    audit.zero_limit_finite = j.at("zero_limit_finite").get<bool>();
    audit.volatility_present = j.at("volatility_present").get<bool>();
    audit.theorem_hypotheses_ok = j.at("theorem_hypotheses_ok").get<bool>();
    audit.scaling_ratio_samples = j.at("scaling_ratio_samples").get<std::vector<double>>();
    for (const auto& fit : j.at("rv_fits")) audit.rv_fits.push_back(fit_from_json(fit));
    return audit;
}

}  // namespace

std::string audit_to_json_string(const AssumptionAudit& audit) {
    return audit_to_json(audit).dump(2) + "\n";
}

std::optional<ReportFormat> format_from_path(const std::string& path) {
    const auto dot = path.find_last_of('.');
    if (dot == std::string::npos) return std::nullopt;
    std::string ext = path.substr(dot + 1);
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (ext == "csv") return ReportFormat::Csv;
    if (ext == "json") return ReportFormat::Json;
    return std::nullopt;
}

std::string report_to_csv(const ConvergenceReport& report) {
    std::ostringstream os;
    os << "theorem,n,delta_n,c_delta_n,mean_sup_error,rmse_endpoint,std_error,slope,pass\n";
    for (const PerNStats& row : report.per_n) {
        os << theorem_name(report.theorem) << ',' << row.n << ',' << format_double(row.delta_n)
           << ',';
        if (row.c_of_delta_n) os << format_double(*row.c_of_delta_n);
        os << ',' << format_double(row.mean_sup_error) << ','
           << format_double(row.rmse_endpoint) << ',' << format_double(row.std_error) << ','
           << format_double(report.fitted_slope) << ',' << (report.pass ? "true" : "false")
           << '\n';
    }
    return os.str();
}

std::string report_to_json(const ConvergenceReport& report) {
    nlohmann::json j;
    j["theorem"] = theorem_name(report.theorem);
    j["fitted_slope"] = report.fitted_slope;
    j["pass"] = report.pass;
    j["hypothesis_violating"] = report.hypothesis_violating;
    nlohmann::json rows = nlohmann::json::array();
    for (const PerNStats& row : report.per_n) {
        nlohmann::json r;
        r["n"] = row.n;
        r["delta_n"] = row.delta_n;
        if (row.c_of_delta_n) {
            r["c_delta_n"] = *row.c_of_delta_n;
        } else {
            r["c_delta_n"] = nullptr;
        }
        r["mean_sup_error"] = row.mean_sup_error;
        r["rmse_endpoint"] = row.rmse_endpoint;
        r["std_error"] = row.std_error;
        r["mean_endpoint_estimate"] = row.mean_endpoint_estimate;
        r["mean_endpoint_target"] = row.mean_endpoint_target;
        rows.push_back(r);
    }
    j["per_n"] = rows;
    j["audit"] = audit_to_json(report.audit);
    return j.dump(2) + "\n";
}

ConvergenceReport report_from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    ConvergenceReport report;
    report.theorem = theorem_from_name(j.at("theorem").get<std::string>());
    report.fitted_slope = j.at("fitted_slope").get<double>();
    report.pass = j.at("pass").get<bool>();
    report.hypothesis_violating = j.at("hypothesis_violating").get<bool>();
    for (const auto& r : j.at("per_n")) {
        PerNStats row;
        row.n = r.at("n").get<int>();
        row.delta_n = r.at("delta_n").get<double>();
        if (!r.at("c_delta_n").is_null()) row.c_of_delta_n = r.at("c_delta_n").get<double>();
        row.mean_sup_error = r.at("mean_sup_error").get<double>();
        row.rmse_endpoint = r.at("rmse_endpoint").get<double>();
        row.std_error = r.at("std_error").get<double>();
        row.mean_endpoint_estimate = r.at("mean_endpoint_estimate").get<double>();
        row.mean_endpoint_target = r.at("mean_endpoint_target").get<double>();
        report.per_n.push_back(row);
    }
    report.audit = audit_from_json(j.at("audit"));
    return report;
}

void emit_report(const ConvergenceReport& report, const std::string& path, ReportFormat format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("emit_report: cannot open '" + path + "' for writing");
    }
    out << (format == ReportFormat::Csv ? report_to_csv(report) : report_to_json(report));
    if (!out) {
        throw std::runtime_error("emit_report: write to '" + path + "' failed");
    }
}

}  // namespace covarlab
