#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <memory>
#include <vector>

#include "covarlab/errors.hpp"
#include "covarlab/kernels.hpp"
#include "covarlab/quadrature.hpp"
#include "covarlab/regvar.hpp"

using namespace covarlab;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

RVFit fit_over(const std::function<double(double)>& f, const std::vector<double>& probes) {
    std::vector<SamplePoint> samples;
    for (double x : probes) samples.push_back({x, f(x)});
    return rv_index_fit(samples);
}

// probe grid with ratio 1/2 confined to [lo, hi]
std::vector<double> window_grid(double hi, double lo) {
    std::vector<double> grid;
    for (double x = hi; x >= lo * 0.999; x *= 0.5) grid.push_back(x);
    return grid;
}

}  // namespace

TEST_CASE("kernel evaluation matches the analytic formulas") {
    GammaKernel g(0.2, 1.0);
    CHECK(g.value(1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    CHECK(g.value(-0.5) == 0.0);
    CHECK(g.value(0.0) == 0.0);

    ExpKernel e(2.0);
    CHECK(e.value(0.5) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    CHECK(e.value(-1.0) == 0.0);

    // support convention also holds for the singular family
    GammaKernel gneg(-0.3, 1.5);
    CHECK(gneg.value(0.0) == 0.0);
    CHECK(gneg.value(-1e-9) == 0.0);
    CHECK(gneg.value(1e-10) > 1.0);  // blows up near zero
}

TEST_CASE("parameter domains are enforced at construction") {
    CHECK_THROWS_AS(GammaKernel(0.0, 1.0), ConfigError);
    CHECK_THROWS_AS(GammaKernel(0.5, 1.0), ConfigError);
    CHECK_THROWS_AS(GammaKernel(-0.5, 1.0), ConfigError);
    CHECK_THROWS_AS(GammaKernel(0.7, 1.0), ConfigError);
    CHECK_THROWS_AS(GammaKernel(0.2, 0.0), ConfigError);
    CHECK_THROWS_AS(GammaKernel(0.2, -1.0), ConfigError);
    CHECK_THROWS_AS(ExpKernel(0.0), ConfigError);
}

TEST_CASE("monotonicity threshold and zero limits") {
    GammaKernel gneg(-0.2, 1.0);
    CHECK(gneg.decreasing());
    CHECK(gneg.monotonicity_threshold() == 1.0);
    CHECK(std::isinf(gneg.zero_limit()));

    GammaKernel gpos(0.25, 1.0);
    CHECK_FALSE(gpos.decreasing());
    // inflection point (delta + sqrt(delta)) / lambda = 0.75, rounded up
    CHECK(gpos.monotonicity_threshold() == 1.0);
    CHECK(gpos.zero_limit() == 0.0);
    // (g')^2 non-increasing past the threshold
    const double b = gpos.monotonicity_threshold();
    double prev = gpos.derivative(b) * gpos.derivative(b);
    for (double x = b + 0.1; x < 10.0; x += 0.1) {
        const double cur = gpos.derivative(x) * gpos.derivative(x);
        CHECK(cur <= prev * (1.0 + 1e-12));
        prev = cur;
    }

    ExpKernel e(3.0);
    CHECK(e.decreasing());
    CHECK(e.zero_limit() == 1.0);
}

TEST_CASE("kernel spec strings parse case-insensitively and round-trip") {
    KernelPtr k = parse_kernel("GAMMA(Delta=-0.2, Lambda=1.5)");
    CHECK(k->shape_index() == doctest::Approx(-0.2));
    CHECK(k->decay_rate() == doctest::Approx(1.5));
    KernelPtr round = parse_kernel(k->spec_string());
    CHECK(round->shape_index() == k->shape_index());
    CHECK(round->decay_rate() == k->decay_rate());

    KernelPtr e = parse_kernel("exp(lambda=2)");
    CHECK(e->decay_rate() == doctest::Approx(2.0));

    CHECK_THROWS_AS((void)parse_kernel("gamma(delta=-0.2)"), ConfigError);   // lambda mandatory
    CHECK_THROWS_AS((void)parse_kernel("exp()"), ConfigError);
    CHECK_THROWS_AS((void)parse_kernel("gauss(lambda=1)"), ConfigError);
    CHECK_THROWS_AS((void)parse_kernel("exp(lambda=1,extra=2)"), ConfigError);
    CHECK_THROWS_AS((void)parse_kernel("exp(lambda=abc)"), ConfigError);
    CHECK_THROWS_AS((void)parse_kernel("exp lambda=1"), ConfigError);
}

TEST_CASE("increment kernel branches") {
    ExpKernel e(1.0);
    CHECK(increment_kernel(e, 0.1, 0.05) == doctest::Approx(std::exp(-0.05)).epsilon(1e-12));
    CHECK(increment_kernel(e, 0.1, 0.2) ==
          doctest::Approx(std::exp(-0.2) - std::exp(-0.1)).epsilon(1e-12));
    CHECK(increment_kernel(e, 0.1, -1.0) == 0.0);
    CHECK_THROWS_AS((void)increment_kernel(e, 0.0, 0.5), ContractViolation);
}

TEST_CASE("increment kernel is consistent with eval everywhere") {
    auto kernels = std::vector<KernelPtr>{std::make_shared<GammaKernel>(-0.3, 2.0),
                                          std::make_shared<GammaKernel>(0.3, 0.5),
                                          std::make_shared<ExpKernel>(1.0)};
    const double delta = 0.07;
    for (const auto& k : kernels) {
        for (double s = 0.005; s < 3.0; s += 0.0417) {
            const double phi = increment_kernel(*k, delta, s);
            if (s <= delta) {
                CHECK(phi == k->value(s));
            } else {
                CHECK(phi == k->value(s) - k->value(s - delta));
            }
        }
        CHECK(increment_kernel(*k, delta, 0.0) == 0.0);
    }
}

TEST_CASE("squared increment integral: exponential closed form") {
    ExpKernel e(1.0);
    // int_0^inf e^{-2s} (e^{-d} - 1)^2 ds = (1 - e^{-d})^2 / 2
    const double got = squared_increment_integral(e, 0.1, kInf);
    const double expect = std::pow(1.0 - std::exp(-0.1), 2) / 2.0;
    CHECK(got == doctest::Approx(expect).epsilon(1e-8));
    CHECK(squared_increment_integral(e, 0.0, kInf) == 0.0);
    // finite upper limit below the horizon
    const double part = squared_increment_integral(e, 0.1, 2.0);
    const double part_expect = std::pow(1.0 - std::exp(-0.1), 2) *
                               (1.0 - std::exp(-4.0)) / 2.0;
    CHECK(part == doctest::Approx(part_expect).epsilon(1e-8));
}

TEST_CASE("regular variation of the increment integral (singular family)") {
    for (double delta : {-0.3, -0.2}) {
        auto k = std::make_shared<GammaKernel>(delta, 1.0);
        const RVFit fit = fit_over(
            [&](double d) {
                return squared_increment_integral(*k, d, k->monotonicity_threshold());
            },
            window_grid(1e-2, 1e-4));
        CHECK(std::abs(fit.exponent - (2.0 * delta + 1.0)) <= 0.05);
        CHECK(fit.r_squared > 0.999);
    }
}

TEST_CASE("regular variation of the increment integral (bounded family)") {
    // For delta > 0 the increment integral approaches its power law slowly
    // (the correction decays like d^{1-2delta}); the [1e-4, 1e-2] window is
    // preasymptotic, so the tight fit is checked further in.
    for (double delta : {0.2, 0.3}) {
        auto k = std::make_shared<GammaKernel>(delta, 1.0);
        auto f = [&](double d) {
            return squared_increment_integral(*k, d, k->monotonicity_threshold());
        };
        const RVFit deep = fit_over(f, window_grid(1e-5, 1e-7));
        CHECK(std::abs(deep.exponent - (2.0 * delta + 1.0)) <= 0.05);
        const RVFit shallow = fit_over(f, window_grid(1e-2, 1e-4));
        CHECK(std::abs(shallow.exponent - (2.0 * delta + 1.0)) <= 0.1);
    }
}

TEST_CASE("derivative tail bound controls the increment tail") {
    // int_b^inf (g(s+d) - g(s))^2 ds <= d^2 int_b^inf (g'(s))^2 ds
    for (double delta : {-0.2, 0.3}) {
        GammaKernel g(delta, 1.0);
        const double b = g.monotonicity_threshold();
        const double horizon = tail_horizon(g);
        for (double d : {1e-2, 1e-3}) {
            auto lhs = integrate(
                [&](double s) {
                    const double diff = g.value(s + d) - g.value(s);
                    return diff * diff;
                },
                b, horizon);
            auto deriv_sq = integrate(
                [&](double s) {
                    const double gd = g.derivative(s);
                    return gd * gd;
                },
                b, horizon);
            REQUIRE(lhs.converged);
            REQUIRE(deriv_sq.converged);
            CHECK(lhs.value <= d * d * deriv_sq.value * (1.0 + 1e-9));
            // the analytic bound used for truncation is an upper bound too
            CHECK(deriv_sq.value <= g.derivative_tail_sq_bound(b) * (1.0 + 1e-9));
        }
    }
}

TEST_CASE("scaling factor: exponential closed form and monotonicity") {
    auto e = std::make_shared<ExpKernel>(1.0);
    KernelPair pair{e, e};
    CHECK(scaling_factor(pair, 0.1) ==
          doctest::Approx(1.0 - std::exp(-0.1)).epsilon(1e-8));

    double prev = 0.0;
    for (double d : {1e-4, 1e-3, 1e-2, 1e-1, 1.0}) {
        const double c = scaling_factor(pair, d);
        CHECK(c > prev);
        prev = c;
    }

    auto gm = std::make_shared<GammaKernel>(-0.25, 1.0);
    KernelPair gpair{gm, gm};
    prev = 0.0;
    for (double d : {1e-4, 1e-3, 1e-2, 1e-1}) {
        const double c = scaling_factor(gpair, d);
        CHECK(c > prev);
        prev = c;
    }
}

TEST_CASE("scaling factor exponent matches delta1 + delta2 + 1") {
    struct Case {
        double d1, d2;
    };
    for (Case c : {Case{-0.2, -0.2}, Case{-0.3, -0.1}, Case{0.2, 0.2}}) {
        KernelPair pair{std::make_shared<GammaKernel>(c.d1, 1.0),
                        std::make_shared<GammaKernel>(c.d2, 1.0)};
        const RVFit fit = fit_over([&](double d) { return scaling_factor(pair, d); },
                                   window_grid(1e-2, 1e-4));
        CHECK(std::abs(fit.exponent - (c.d1 + c.d2 + 1.0)) <= 0.05);
    }
}

TEST_CASE("scaling factor rejects sign-inconsistent pairs") {
    // one kernel increasing near zero, the other decreasing
    KernelPair mixed{std::make_shared<GammaKernel>(0.3, 1.0), std::make_shared<ExpKernel>(1.0)};
    CHECK_THROWS_AS((void)scaling_factor(mixed, 0.01), ContractViolation);
    KernelPair ok{std::make_shared<GammaKernel>(0.3, 1.0),
                  std::make_shared<GammaKernel>(0.3, 1.0)};
    CHECK(scaling_factor(ok, 0.01) > 0.0);
}

TEST_CASE("variogram values") {
    auto e = std::make_shared<ExpKernel>(1.0);
    KernelPair pair{e, e};
    // |g|^2 = 1/2, E[G_0 G_t] = e^{-t}/2, so R(t) = 1 - rho e^{-t}
    CHECK(variogram(pair, 0.5, 1.0) ==
          doctest::Approx(1.0 - 0.5 * std::exp(-1.0)).epsilon(1e-8));
    CHECK(variogram(pair, 1.0, 0.0) == 0.0);  // same leg at lag zero

    auto gm = std::make_shared<GammaKernel>(-0.2, 1.0);
    KernelPair gpair{gm, gm};
    const RVFit fit =
        fit_over([&](double t) { return variogram(gpair, 1.0, t); }, window_grid(1e-2, 1e-4));
    CHECK(std::abs(fit.exponent - 0.6) <= 0.05);

    CHECK_THROWS_AS((void)variogram(pair, 1.5, 1.0), ContractViolation);
    CHECK_THROWS_AS((void)variogram(pair, 0.5, -1.0), ContractViolation);
}

TEST_CASE("variogram agrees with its increment-integral decomposition") {
    // R(t) = int_0^t g^2 + int_0^inf (g(s+t) - g(s))^2 ds
    for (double delta : {-0.3, -0.15}) {
        auto k = std::make_shared<GammaKernel>(delta, 1.3);
        KernelPair pair{k, k};
        for (double t : {0.01, 0.1, 0.5}) {
            const double direct = variogram(pair, 1.0, t);
            const double head = require_converged(
                integrate_power_singular(
                    [&](double s) {
                        const double v = k->value(s);
                        return v * v;
                    },
                    t, 2.0 * delta),
                "head");
            const double via = head + squared_increment_integral(*k, t, kInf);
            CHECK(direct == doctest::Approx(via).epsilon(1e-7));
        }
    }
}
