#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "../support/garch_oracle.hpp"
#include "infovol/core/rng.hpp"
#include "infovol/garch.hpp"

using namespace infovol;
using namespace infovol::garch;
using Catch::Approx;

namespace {

ParamVector typical(Family f) {
    ParamVector p;
    switch (f) {
        case Family::Garch:
            p.omega = 1e-6;
            p.alpha = 0.1;
            p.beta = 0.85;
            break;
        case Family::Egarch:
            p.omega = -0.5;
            p.alpha = 0.15;
            p.delta = -0.05;
            p.beta = 0.95;
            break;
        case Family::Cgarch:
            p.omega = 2e-7;
            p.rho = 0.99;
            p.theta = 0.03;
            p.alpha = 0.08;
            p.beta = 0.8;
            break;
        case Family::Tgarch:
            p.omega = 1e-4;
            p.alpha = 0.08;
            p.phi = 0.04;
            p.beta = 0.85;
            break;
    }
    return p;
}

TimeSeries noise(std::size_t n, double scale, std::uint64_t seed) {
    Rng r(seed);
    std::vector<double> x(n);
    for (auto& v : x) v = scale * r.normal();
    return TimeSeries(x);
}

constexpr Family kFamilies[] = {Family::Garch, Family::Egarch, Family::Cgarch, Family::Tgarch};

}  // namespace

TEST_CASE("family names round-trip", "[spec]") {
    for (Family f : kFamilies) CHECK(parse_family(to_string(f)) == f);
    CHECK(parse_family("GARCH") == Family::Garch);
    CHECK_THROWS_AS(parse_family("figarch"), ArgumentError);
    CHECK(ModelSpec{Family::Tgarch, true}.name() == "tgarchx");
    CHECK(param_names({Family::Cgarch, true}) ==
          std::vector<std::string>{"mu", "omega", "alpha", "beta", "rho", "theta", "gamma"});
    ParamVector p;
    param_ref(p, "phi") = 0.3;
    CHECK(p.phi == 0.3);
    CHECK_THROWS_AS(param_ref(p, "nu"), ArgumentError);
}

TEST_CASE("constraint checks", "[spec]") {
    const ModelSpec g{Family::Garch, false};
    ParamVector p = typical(Family::Garch);
    CHECK_NOTHROW(check_constraints(g, p));
    p.beta = 0.95;
    CHECK_THROWS_AS(check_constraints(g, p), DomainError);
    p = typical(Family::Garch);
    p.omega = 0.0;
    CHECK_THROWS_AS(check_constraints(g, p), DomainError);
    p = typical(Family::Garch);
    p.gamma = -1.0;
    CHECK_NOTHROW(check_constraints(g, p));  // gamma unused without exog
    CHECK_THROWS_AS(check_constraints({Family::Garch, true}, p), DomainError);

    ParamVector e = typical(Family::Egarch);
    e.gamma = -0.2;
    CHECK_NOTHROW(check_constraints({Family::Egarch, true}, e));
    e.beta = 1.0;
    CHECK_THROWS_AS(check_constraints({Family::Egarch, false}, e), DomainError);

    ParamVector c = typical(Family::Cgarch);
    c.rho = 1.0;
    CHECK_THROWS_AS(check_constraints({Family::Cgarch, false}, c), DomainError);

    ParamVector t = typical(Family::Tgarch);
    t.phi = -0.01;
    CHECK_THROWS_AS(check_constraints({Family::Tgarch, false}, t), DomainError);
    t.phi = 0.2;  // 0.08 + 0.1 + 0.85 >= 1
    CHECK_THROWS_AS(check_constraints({Family::Tgarch, false}, t), DomainError);
}

TEST_CASE("filter examples", "[filter]") {
    const ModelSpec g{Family::Garch, false};
    SECTION("constant variance") {
        ParamVector p;
        p.omega = 4e-6;
        const auto path = filter(g, p, noise(20, 0.01, 1), nullptr, 4e-6);
        for (double v : path.sigma_sq.values) CHECK(v == Approx(4e-6).epsilon(1e-15));
    }
    SECTION("one hand step") {
        ParamVector p;
        p.omega = 1e-6;
        p.alpha = 0.1;
        p.beta = 0.8;
        const auto path = filter(g, p, TimeSeries({0.001, -0.002, 0.0}), nullptr, 1e-6);
        CHECK(path.sigma_sq[0] == 1e-6);
        CHECK(path.sigma_sq[1] == Approx(1.9e-6).epsilon(1e-14));
        CHECK(path.sigma_sq[2] == Approx(1e-6 + 0.1 * 4e-6 + 0.8 * 1.9e-6).epsilon(1e-14));
        CHECK(path.residuals[1] == -0.002);
    }
    SECTION("default sigma0 is the population variance of the returns") {
        const TimeSeries r({0.01, -0.01, 0.02, 0.0});
        const double m = 0.005;
        const double var = ((0.01 - m) * (0.01 - m) + (-0.01 - m) * (-0.01 - m) + (0.02 - m) * (0.02 - m) + m * m) / 4.0;
        CHECK(default_sigma0_sq(r.view()) == Approx(var).epsilon(1e-14));
        CHECK(filter(g, typical(Family::Garch), r).sigma_sq[0] == Approx(var).epsilon(1e-14));
    }
}

TEST_CASE("filter agrees with the direct recursion for every family", "[filter]") {
    Rng r(77);
    for (Family f : kFamilies) {
        for (bool exo : {false, true}) {
            const ModelSpec spec{f, exo};
            ParamVector p = typical(f);
            p.mu = 1e-4;
            if (exo) p.gamma = f == Family::Egarch ? 0.05 : (f == Family::Tgarch ? 1e-4 : 1e-7);
            const auto ret = noise(300, 0.003, r());
            std::vector<double> x(300);
            for (auto& v : x) v = r.uniform() * 2.0;
            const TimeSeries xs(x);
            const auto path = filter(spec, p, ret, exo ? &xs : nullptr, 1e-5);
            const auto want = oracle::garch_variances(f, p, ret.values, exo ? x : std::vector<double>{}, 1e-5);
            for (std::size_t t = 0; t < ret.size(); ++t) REQUIRE(path.sigma_sq[t] == Approx(want[t]).epsilon(1e-12));
        }
    }
}

TEST_CASE("GARCHX with zero gamma equals GARCH", "[filter]") {
    for (Family f : kFamilies) {
        const auto ret = noise(500, 0.002, 5);
        const TimeSeries x = noise(500, 3.0, 6);
        ParamVector p = typical(f);
        const auto plain = filter({f, false}, p, ret);
        const auto ext = filter({f, true}, p, ret, &x);
        CHECK(plain.sigma_sq.values == ext.sigma_sq.values);
    }
}

TEST_CASE("filter errors", "[filter]") {
    const auto ret = noise(10, 0.01, 1);
    CHECK_THROWS_AS(filter({Family::Garch, true}, typical(Family::Garch), ret), ArgumentError);
    const auto short_x = noise(9, 1.0, 2);
    CHECK_THROWS_AS(filter({Family::Garch, true}, typical(Family::Garch), ret, &short_x), AlignmentError);

    // cGARCH positivity is not implied by the constraints: a large negative theta breaks it
    ParamVector c = typical(Family::Cgarch);
    c.theta = -50.0;
    const TimeSeries spike({0.0, 0.5, 0.0, 0.0});
    try {
        filter({Family::Cgarch, false}, c, spike, nullptr, 1e-6);
        FAIL("expected a numeric error");
    } catch (const NumericError& e) {
        CHECK(e.t == 2);
        CHECK(e.kind() == ErrorKind::Numeric);
    }
    CHECK_THROWS_AS(filter({Family::Garch, false}, typical(Family::Garch), ret, nullptr, 0.0), DomainError);
    CHECK(filter({Family::Garch, false}, typical(Family::Garch), TimeSeries{}).sigma_sq.empty());
}

TEST_CASE("nllh hand values", "[nllh]") {
    const ModelSpec g{Family::Garch, false};
    ParamVector p = typical(Family::Garch);
    p.mu = 0.25;
    CHECK(nllh(g, p, TimeSeries({0.25}), nullptr, 1.0 / (2.0 * std::numbers::pi)) == Approx(0.0).margin(1e-15));
    p.mu = 0.0;
    CHECK(nllh(g, p, TimeSeries({0.001}), nullptr, 1e-6) ==
          Approx(0.5 * std::log(1e-6) + 0.5 * std::log(2.0 * std::numbers::pi) + 0.5).epsilon(1e-14));

    const auto ret = noise(1000, 0.001, 3);
    const double a = nllh(g, p, ret);
    CHECK(a == nllh(g, p, ret));
    const auto path = filter(g, p, ret);
    double sum = 0.0;
    for (std::size_t t = 0; t < ret.size(); ++t)
        sum += 0.5 * std::log(2.0 * std::numbers::pi * path.sigma_sq[t]) + ret[t] * ret[t] / (2.0 * path.sigma_sq[t]);
    CHECK(a == Approx(sum).epsilon(1e-12));
    CHECK(nllh(path) == Approx(a).epsilon(1e-15));
}

TEST_CASE("simulated GARCH matches its unconditional variance", "[simulate]") {
    const ModelSpec g{Family::Garch, false};
    ParamVector p;
    p.omega = 1e-5;
    p.alpha = 0.05;
    p.beta = 0.5;
    const auto sim = simulate(g, p, 200000, 4);
    double ss = 0.0;
    for (double v : sim.returns.values) ss += v * v;
    CHECK(ss / 200000.0 == Approx(1e-5 / 0.45).epsilon(0.03));

    const auto again = simulate(g, p, 1000, 4);
    CHECK(again.returns.values == simulate(g, p, 1000, 4).returns.values);
    CHECK_THROWS_AS(simulate({Family::Garch, true}, p, 100, 1), ArgumentError);
}

TEST_CASE("simulated variance path is the filtered path of the simulated returns", "[simulate]") {
    for (Family f : {Family::Garch, Family::Egarch, Family::Tgarch}) {
        // cGARCH is left out: its permanent component at the end of burn-in is not observable
        const ModelSpec spec{f, false};
        const auto sim = simulate(spec, typical(f), 2000, 9);
        const auto path = filter(spec, typical(f), sim.returns, nullptr, sim.sigma_sq[0]);
        for (std::size_t t = 0; t < 2000; ++t) REQUIRE(path.sigma_sq[t] == Approx(sim.sigma_sq[t]).epsilon(1e-9));
    }
}

TEST_CASE("fit recovers GARCH(1,1) parameters", "[fit]") {
    const ModelSpec g{Family::Garch, false};
    const auto sim = simulate(g, typical(Family::Garch), 50000, 2024);
    const auto res = fit(g, sim.returns, nullptr, {.seed = 1});
    REQUIRE(res.converged);
    CHECK(res.params.alpha == Approx(0.1).margin(0.03));
    CHECK(res.params.beta == Approx(0.85).margin(0.03));
    CHECK(res.params.omega / 1e-6 > 1.0 / 1.5);
    CHECK(res.params.omega / 1e-6 < 1.5);
    CHECK(res.nobs == 50000);
    CHECK(res.restarts_used == 5);
    CHECK(res.in_sample_nllh == Approx(nllh(g, res.params, sim.returns, nullptr, res.sigma0_sq)).epsilon(1e-12));

    SECTION("the optimum is a local minimum in every coordinate") {
        for (const auto& name : param_names(g)) {
            for (double rel : {1e-3, -1e-3}) {
                ParamVector q = res.params;
                double& v = param_ref(q, name);
                v += rel * (std::abs(v) > 0 ? std::abs(v) : 1e-6);
                const double f = nllh_unchecked(g, q, sim.returns.view(), {}, res.sigma0_sq);
                CHECK(f >= res.in_sample_nllh - 1e-3);
            }
        }
    }
}

TEST_CASE("fit is deterministic and handles every family", "[fit]") {
    for (Family f : kFamilies) {
        const ModelSpec spec{f, false};
        const auto sim = simulate(spec, typical(f), 3000, 31);
        const auto a = fit(spec, sim.returns, nullptr, {.seed = 8});
        const auto b = fit(spec, sim.returns, nullptr, {.seed = 8});
        CHECK(a.converged);
        CHECK(std::isfinite(a.in_sample_nllh));
        CHECK(a.in_sample_nllh == b.in_sample_nllh);
        for (const auto& name : param_names(spec)) CHECK(param_value(a.params, name) == param_value(b.params, name));
        CHECK_NOTHROW(check_constraints(spec, a.params));
        // the fit never does worse than the un-jittered starting point
        CHECK(a.in_sample_nllh <= a.start_nllh[0]);
    }
}

TEST_CASE("GARCHX with an all-zero exog matches GARCH", "[fit]") {
    const ModelSpec g{Family::Garch, false};
    const auto sim = simulate(g, typical(Family::Garch), 5000, 12);
    const TimeSeries zeros(std::vector<double>(5000, 0.0));
    const auto plain = fit(g, sim.returns, nullptr, {.seed = 3});
    const auto ext = fit({Family::Garch, true}, sim.returns, &zeros, {.seed = 3});
    REQUIRE(plain.converged);
    REQUIRE(ext.converged);
    CHECK(ext.in_sample_nllh == Approx(plain.in_sample_nllh).epsilon(1e-6));
}

TEST_CASE("fit detects a planted exogenous effect", "[fit]") {
    const ModelSpec gx{Family::Garch, true};
    Rng r(40);
    std::vector<double> x(20000);
    for (auto& v : x) v = std::exp(1.5 * r.normal() - 1.125);
    const TimeSeries xs(x);
    ParamVector p;
    p.omega = 3.15e-6;
    p.alpha = 0.05;
    p.beta = 0.5;
    p.gamma = 1.35e-6;
    const auto sim = simulate(gx, p, 20000, 41, &xs);
    const auto res = fit(gx, sim.returns, &xs, {.seed = 2});
    REQUIRE(res.converged);
    // gamma is reported on the scale of exog / exog_scale
    CHECK(res.params.gamma / res.exog_scale == Approx(1.35e-6).epsilon(0.25));
}

TEST_CASE("fit without convergence keeps the best candidate", "[fit]") {
    const ModelSpec g{Family::Garch, false};
    const auto sim = simulate(g, typical(Family::Garch), 1000, 3);
    FitOptions opt;
    opt.max_iter = 5;
    opt.restarts = 2;
    const auto res = fit(g, sim.returns, nullptr, opt);
    CHECK_FALSE(res.converged);
    CHECK(std::isfinite(res.in_sample_nllh));
    CHECK(res.best_start >= 0);

    CHECK_THROWS_AS(fit(g, noise(100, 0.01, 1)), ArgumentError);
    CHECK_THROWS_AS(fit(g, TimeSeries(std::vector<double>(300, 0.01))), DegenerateError);
    CHECK_THROWS_AS(fit({Family::Garch, true}, sim.returns), ArgumentError);
}

TEST_CASE("out-of-sample forecasting", "[forecast]") {
    const ModelSpec g{Family::Garch, false};
    const auto sim = simulate(g, typical(Family::Garch), 3000, 15);
    const auto res = fit(g, sim.returns.slice(0, 2000), nullptr, {.seed = 5});

    CHECK(forecast_oos(res, sim.returns, nullptr, 3000).sigma_sq.empty());
    CHECK_THROWS_AS(forecast_oos(res, sim.returns, nullptr, 3001), ArgumentError);

    SECTION("continuing the in-sample recursion by hand gives the same path") {
        const auto in_path = filter(g, res.params, sim.returns.slice(0, 2000), nullptr, res.sigma0_sq);
        const auto oos = forecast_oos(res, sim.returns, nullptr, 2000);
        REQUIRE(oos.sigma_sq.size() == 1000);
        double s2 = in_path.sigma_sq[1999];
        double e = in_path.residuals[1999];
        for (std::size_t t = 0; t < 1000; ++t) {
            s2 = res.params.omega + res.params.alpha * e * e + res.params.beta * s2;
            REQUIRE(oos.sigma_sq[t] == Approx(s2).epsilon(1e-12));
            e = sim.returns[2000 + t] - res.params.mu;
        }
        CHECK(oos.sigma_sq.start == sim.returns.minute_at(2000));
    }

    SECTION("constant-variance parameters forecast omega") {
        FitResult flat = res;
        flat.params = ParamVector{};
        flat.params.omega = 2e-6;
        const auto oos = forecast_oos(flat, sim.returns, nullptr, 2500);
        for (double v : oos.sigma_sq.values) CHECK(v == Approx(2e-6).epsilon(1e-15));
    }

    SECTION("cGARCH continues its permanent component") {
        const ModelSpec c{Family::Cgarch, false};
        FitResult cf;
        cf.spec = c;
        cf.params = typical(Family::Cgarch);
        cf.sigma0_sq = 1e-6;
        const auto oos = forecast_oos(cf, sim.returns, nullptr, 1000);
        const auto want = oracle::garch_variances(Family::Cgarch, cf.params, sim.returns.values, {}, 1e-6);
        for (std::size_t t = 0; t < 2000; ++t) REQUIRE(oos.sigma_sq[t] == Approx(want[1000 + t]).epsilon(1e-12));
        CHECK(oos.q.size() == 2000);
    }
}
