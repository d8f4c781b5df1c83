#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <memory>

#include "covarlab/errors.hpp"
#include "covarlab/experiments.hpp"

using namespace covarlab;

namespace {

SimulationConfig gamma_config(double d1, double d2) {
    SimulationConfig config;
    config.n = 32;
    config.kappa = 2;
    config.M = 3.0;
    config.seed = 11;
    config.kernels = {std::make_shared<GammaKernel>(d1, 1.0),
                      std::make_shared<GammaKernel>(d2, 1.0)};
    config.correlation = CorrelationModel::jacobi(0.3);
    return config;
}

SimulationConfig exp_config() {
    SimulationConfig config;
    config.n = 32;
    config.kappa = 2;
    config.M = 3.0;
    config.seed = 11;
    auto e = std::make_shared<ExpKernel>(1.0);
    config.kernels = {e, e};
    config.correlation = CorrelationModel::constant(0.5);
    return config;
}

StudySpec small_exp_study() {
    StudySpec spec;
    spec.theorem = Theorem::T32;
    spec.n_list = {32, 64};
    spec.replications = 10;
    spec.master_seed = 505;
    spec.tolerance = 1.0;  // plumbing test, not a convergence claim
    spec.base_config = exp_config();
    return spec;
}

}  // namespace

TEST_CASE("audit: decreasing gamma pair satisfies the scaled-theorem hypotheses") {
    const AssumptionAudit audit = audit_assumptions(gamma_config(-0.2, -0.2), Theorem::T32);
    CHECK(audit.monotonicity_ok);
    CHECK(audit.delta_sum == doctest::Approx(-0.4));
    CHECK_FALSE(audit.delta_sum_nonneg);
    CHECK_FALSE(audit.zero_limit_finite);
    CHECK(audit.theorem_hypotheses_ok);
    REQUIRE(audit.rv_fits.size() == 5);
    for (const auto& fit : audit.rv_fits) {
        CHECK(fit.valid);
        if (fit.quantity == "variogram_leg1" || fit.quantity == "scaling_factor") {
            CHECK(fit.matches_expected);
        }
    }
    CHECK(audit.holder_estimate > 0.3);
    CHECK(audit.holder_estimate < 0.7);
    CHECK_FALSE(audit.scaling_ratio_samples.empty());
}

TEST_CASE("audit: increasing-then-decreasing kernels fail the monotonicity gate") {
    const AssumptionAudit audit = audit_assumptions(gamma_config(0.3, 0.3), Theorem::T32);
    CHECK_FALSE(audit.monotonicity_ok);
    CHECK_FALSE(audit.theorem_hypotheses_ok);
    // the same pair is fine for the unscaled theorem (delta sum 0.6, g(0+) = 0)
    const AssumptionAudit t31 = audit_assumptions(gamma_config(0.3, 0.3), Theorem::T31);
    CHECK(t31.theorem_hypotheses_ok);
}

TEST_CASE("audit: exponential baseline satisfies the unscaled-theorem hypotheses") {
    const AssumptionAudit audit = audit_assumptions(exp_config(), Theorem::T31);
    CHECK(audit.zero_limit_finite);
    CHECK(audit.delta_sum == 0.0);
    CHECK(audit.delta_sum_nonneg);
    CHECK(audit.theorem_hypotheses_ok);
    // constant pilot correlation path yields the +inf sentinel
    CHECK(std::isinf(audit.holder_estimate));
}

TEST_CASE("audit: negative delta sum fails the unscaled-theorem gate") {
    const AssumptionAudit audit = audit_assumptions(gamma_config(-0.3, 0.1), Theorem::T31);
    CHECK(audit.delta_sum == doctest::Approx(-0.2));
    CHECK_FALSE(audit.delta_sum_nonneg);
    CHECK_FALSE(audit.theorem_hypotheses_ok);
}

TEST_CASE("audit: T34 needs volatility models") {
    SimulationConfig config = gamma_config(-0.2, -0.2);
    CHECK_FALSE(audit_assumptions(config, Theorem::T34).theorem_hypotheses_ok);
    config.volatility = {VolatilityModel::exp_ou(1.0, 0.3, 0.0),
                         VolatilityModel::exp_ou(1.0, 0.3, 0.0)};
    CHECK(audit_assumptions(config, Theorem::T34).theorem_hypotheses_ok);
}

TEST_CASE("study specs are validated") {
    StudySpec spec = small_exp_study();
    spec.n_list = {64, 32};
    CHECK_THROWS_AS((void)run_study(spec), ConfigError);
    spec = small_exp_study();
    spec.n_list = {};
    CHECK_THROWS_AS((void)run_study(spec), ConfigError);
    spec = small_exp_study();
    spec.replications = 5;
    CHECK_THROWS_AS((void)run_study(spec), ConfigError);
    spec = small_exp_study();
    spec.theorem = Theorem::T34;  // no volatility in the base config
    CHECK_THROWS_AS((void)run_study(spec), ConfigError);
}

TEST_CASE("hypothesis gate: violating studies throw unless forced") {
    StudySpec spec = small_exp_study();
    spec.base_config = gamma_config(0.3, 0.3);  // not decreasing
    CHECK_THROWS_AS((void)run_study(spec), HypothesisViolation);
    spec.force = true;
    const ConvergenceReport report = run_study(spec);
    CHECK(report.hypothesis_violating);
    CHECK(report.per_n.size() == 2);
}

TEST_CASE("studies are reproducible across runs and thread counts") {
    const StudySpec spec = small_exp_study();

    setenv("COVARLAB_THREADS", "1", 1);
    const ConvergenceReport serial = run_study(spec);
    const ConvergenceReport serial_again = run_study(spec);
    setenv("COVARLAB_THREADS", "2", 1);
    const ConvergenceReport threaded = run_study(spec);
    unsetenv("COVARLAB_THREADS");

    CHECK(serial == serial_again);
    CHECK(serial == threaded);
    CHECK(report_to_json(serial) == report_to_json(threaded));
    CHECK(report_to_csv(serial) == report_to_csv(threaded));
}

TEST_CASE("per-n statistics are well-formed") {
    const ConvergenceReport report = run_study(small_exp_study());
    REQUIRE(report.per_n.size() == 2);
    for (const auto& row : report.per_n) {
        CHECK(row.delta_n == doctest::Approx(1.0 / row.n));
        CHECK(row.std_error > 0.0);  // replications > 1
        CHECK(row.mean_sup_error > 0.0);
        REQUIRE(row.c_of_delta_n.has_value());  // scaled estimator
        CHECK(*row.c_of_delta_n > 0.0);
    }
    CHECK(report.pass);  // tolerance was set loose
}

TEST_CASE("fitted slope is negative for the converging baseline") {
    StudySpec spec;
    spec.theorem = Theorem::T32;
    spec.n_list = {64, 256};
    spec.replications = 20;
    spec.master_seed = 99;
    spec.tolerance = 1.0;
    spec.base_config = exp_config();
    spec.base_config.kappa = 4;
    spec.base_config.M = 5.0;
    const ConvergenceReport report = run_study(spec);
    CHECK(report.fitted_slope < 0.0);
}

TEST_CASE("unscaled studies leave the scaling column empty") {
    StudySpec spec = small_exp_study();
    spec.theorem = Theorem::T31;
    const ConvergenceReport report = run_study(spec);
    for (const auto& row : report.per_n) {
        CHECK_FALSE(row.c_of_delta_n.has_value());
    }
    const std::string csv = report_to_csv(report);
    CHECK(csv.find("T31,32,") != std::string::npos);
}

TEST_CASE("the error decreases from n=256 to n=4096 in most study repetitions") {
    // statistical meta-test: 20 independent repetitions at reduced size
    int successes = 0;
    for (int repeat = 0; repeat < 20; ++repeat) {
        StudySpec spec;
        spec.theorem = Theorem::T32;
        spec.n_list = {256, 4096};
        spec.replications = 10;
        spec.master_seed = 7000 + repeat;
        spec.tolerance = 1.0;
        spec.base_config = exp_config();
        spec.base_config.kappa = 4;
        spec.base_config.M = 5.0;
        const ConvergenceReport report = run_study(spec);
        if (report.per_n[1].mean_sup_error < report.per_n[0].mean_sup_error) {
            ++successes;
        }
    }
    CHECK(successes >= 19);
}

TEST_CASE("report serialization") {
    const ConvergenceReport report = run_study(small_exp_study());

    SUBCASE("CSV header and rows") {
        const std::string csv = report_to_csv(report);
        CHECK(csv.rfind("theorem,n,delta_n,c_delta_n,mean_sup_error,rmse_endpoint,"
                        "std_error,slope,pass\n",
                        0) == 0);
        int rows = -1;  // don't count the header
        for (char c : csv) {
            if (c == '\n') ++rows;
        }
        CHECK(rows == int(report.per_n.size()));
    }

    SUBCASE("empty report serialises to a bare header") {
        ConvergenceReport empty;
        const std::string csv = report_to_csv(empty);
        CHECK(csv == "theorem,n,delta_n,c_delta_n,mean_sup_error,rmse_endpoint,"
                     "std_error,slope,pass\n");
    }

    SUBCASE("JSON round trip is lossless") {
        const std::string json = report_to_json(report);
        const ConvergenceReport parsed = report_from_json(json);
        CHECK(parsed == report);
        CHECK(report_to_json(parsed) == json);
    }

    SUBCASE("format selection by extension") {
        CHECK(format_from_path("out.csv") == ReportFormat::Csv);
        CHECK(format_from_path("out.JSON") == ReportFormat::Json);
        CHECK_FALSE(format_from_path("out.txt").has_value());
        CHECK_FALSE(format_from_path("plain").has_value());
    }

    SUBCASE("emit_report writes the file and surfaces IO failures") {
        const std::string path = "test_report_tmp.json";
        emit_report(report, path, ReportFormat::Json);
        std::ifstream in(path);
        REQUIRE(in.good());
        std::string body((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
        CHECK(body == report_to_json(report));
        std::remove(path.c_str());

        CHECK_THROWS_WITH_AS(
            emit_report(report, "/nonexistent_dir_xyz/report.csv", ReportFormat::Csv),
            doctest::Contains("/nonexistent_dir_xyz/report.csv"), std::runtime_error);
    }
}

TEST_CASE("worker count respects the environment cap") {
    setenv("COVARLAB_THREADS", "1", 1);
    CHECK(worker_count(100) == 1);
    setenv("COVARLAB_THREADS", "bogus", 1);
    CHECK_THROWS_AS((void)worker_count(100), ConfigError);
    unsetenv("COVARLAB_THREADS");
    CHECK(worker_count(1) == 1);
    CHECK(worker_count(1000) >= 1);
}
