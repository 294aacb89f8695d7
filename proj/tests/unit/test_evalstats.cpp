#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "infovol/core/rng.hpp"
#include "infovol/evalstats.hpp"

using namespace infovol;
using namespace infovol::eval;
using Catch::Approx;

namespace {

std::vector<double> normals(std::size_t n, std::uint64_t seed) {
    Rng r(seed);
    std::vector<double> x(n);
    for (auto& v : x) v = r.normal();
    return x;
}

/// EDF distance computed by brute force over every sample point.
double ks_oracle(const std::vector<double>& a, const std::vector<double>& b) {
    auto edf = [](const std::vector<double>& s, double x) {
        return static_cast<double>(std::count_if(s.begin(), s.end(), [&](double v) { return v <= x; })) /
               static_cast<double>(s.size());
    };
    double d = 0.0;
    for (const auto* s : {&a, &b})
        for (double x : *s) d = std::max(d, std::abs(edf(a, x) - edf(b, x)));
    return d;
}

}  // namespace

TEST_CASE("Mincer-Zarnowitz regression", "[mz]") {
    SECTION("hand OLS") {
        // r^2 = 2 sigma^2 exactly
        const TimeSeries sigma({1, 2, 3});
        const TimeSeries r({std::sqrt(2.0), std::sqrt(4.0), std::sqrt(6.0)});
        const auto m = mz_regression(sigma, r);
        CHECK(m.a == Approx(2.0).epsilon(1e-10));
        CHECK(m.b == Approx(0.0).margin(1e-10));
        CHECK(m.r_squared == Approx(1.0).epsilon(1e-10));
        CHECK(m.n == 3);
    }
    SECTION("perfect forecast") {
        const auto z = normals(500, 1);
        std::vector<double> s2(z.size());
        for (std::size_t i = 0; i < z.size(); ++i) s2[i] = z[i] * z[i];
        const auto m = mz_regression(TimeSeries(s2), TimeSeries(z));
        CHECK(m.a == Approx(1.0).epsilon(1e-12));
        CHECK(m.b == Approx(0.0).margin(1e-12));
        CHECK(m.r_squared == Approx(1.0).epsilon(1e-12));
        CHECK(m.f_p < 1e-12);
    }
    SECTION("F statistic and p-value against the closed form") {
        const auto z = normals(200, 2);
        const auto u = normals(200, 3);
        std::vector<double> s2(200);
        for (std::size_t i = 0; i < 200; ++i) s2[i] = 1.0 + 0.3 * z[i] * z[i] + std::abs(u[i]);
        const auto m = mz_regression(TimeSeries(s2), TimeSeries(z));
        const double f = m.r_squared / (1.0 - m.r_squared) * 198.0;
        CHECK(m.f_stat == Approx(f).epsilon(1e-12));
        // F(1, d) = t(d)^2
        CHECK(m.f_p == Approx(special::student_t_two_sided(std::sqrt(f), 198.0)).epsilon(1e-9));
    }
    SECTION("independent forecasts are rejected at the nominal rate") {
        int rejects = 0;
        for (std::uint64_t s = 0; s < 200; ++s) {
            const auto z = normals(1000, 100 + s);
            auto s2 = normals(1000, 900 + s);
            for (auto& v : s2) v = std::exp(v);
            const auto m = mz_regression(TimeSeries(s2), TimeSeries(z));
            rejects += m.f_p < 0.05 ? 1 : 0;
        }
        CHECK(rejects >= 2);
        CHECK(rejects <= 20);
    }
    SECTION("errors") {
        CHECK_THROWS_AS(mz_regression(TimeSeries({1, 1, 1}), TimeSeries({1, 2, 3})), DegenerateError);
        CHECK_THROWS_AS(mz_regression(TimeSeries({1, 2}), TimeSeries({1, 2, 3})), AlignmentError);
        CHECK_THROWS_AS(mz_regression(TimeSeries({1, 2}), TimeSeries({1, 2})), ArgumentError);
    }
}

TEST_CASE("Pearson correlation test", "[pcc]") {
    const auto x = normals(100, 4);
    std::vector<double> y(x.size()), neg(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        y[i] = 3.0 * x[i] + 1.0;
        neg[i] = -x[i];
    }
    const auto p = pcc_test(TimeSeries(x), TimeSeries(y));
    CHECK(p.rho == Approx(1.0).epsilon(1e-14));
    CHECK(p.p_value < 1e-12);
    CHECK(pcc_test(x, neg).rho == Approx(-1.0).epsilon(1e-14));

    // uniform p-values under independence
    std::vector<double> ps;
    for (std::uint64_t s = 0; s < 300; ++s) ps.push_back(pcc_test(normals(200, 10 + s), normals(200, 5000 + s)).p_value);
    const auto below = std::count_if(ps.begin(), ps.end(), [](double v) { return v < 0.1; });
    CHECK(below >= 15);
    CHECK(below <= 50);

    CHECK_THROWS_AS(pcc_test(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}), DegenerateError);
    CHECK_THROWS_AS(pcc_test(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2}), AlignmentError);
}

TEST_CASE("likelihood-ratio test", "[lr]") {
    const auto same = lr_test(100.0, 100.0);
    CHECK(same.statistic == 0.0);
    CHECK(same.p_value == 1.0);

    const auto better = lr_test(105.0, 100.0);
    CHECK(better.statistic == Approx(10.0));
    CHECK(better.p_value == Approx(std::erfc(std::sqrt(5.0))).epsilon(1e-12));
    CHECK(better.p_value == Approx(0.001565).margin(1e-6));

    const auto worse = lr_test(97.0, 100.0);
    CHECK(worse.statistic == 0.0);
    CHECK(worse.raw_statistic == Approx(-6.0));
    CHECK(worse.p_value == 1.0);

    CHECK(lr_test(102.0, 100.0, 2).p_value == Approx(std::exp(-2.0)).epsilon(1e-12));
    CHECK_THROWS_AS(lr_test(std::nan(""), 1.0), ArgumentError);
    CHECK_THROWS_AS(lr_test(1.0, INFINITY), ArgumentError);
    CHECK_THROWS_AS(lr_test(1.0, 1.0, 0), ArgumentError);
}

TEST_CASE("two-sample Kolmogorov-Smirnov", "[ks]") {
    const auto hand = ks_two_sample(std::vector<double>{1, 2, 3, 4}, std::vector<double>{3, 4, 5, 6});
    CHECK(hand.statistic == 0.5);
    CHECK(hand.p_value == Approx(special::kolmogorov_sf(std::sqrt(2.0) * 0.5)));

    const std::vector<double> a{0.3, 1.2, -4.0, 2.2};
    const auto same = ks_two_sample(a, a);
    CHECK(same.statistic == 0.0);
    CHECK(same.p_value == 1.0);

    CHECK(ks_two_sample(std::vector<double>{-3, -2, -1}, std::vector<double>{1, 2}).statistic == 1.0);

    for (std::uint64_t s = 0; s < 20; ++s) {
        auto x = normals(37, s);
        auto y = normals(53, 100 + s);
        for (auto& v : y) v = std::round(v * 4.0) / 4.0;  // ties inside and across samples
        for (std::size_t i = 0; i < 10; ++i) x[i] = y[i];
        REQUIRE(ks_two_sample(x, y).statistic == Approx(ks_oracle(x, y)).epsilon(1e-14));
    }
    CHECK_THROWS_AS(ks_two_sample(std::vector<double>{}, a), ArgumentError);
}

TEST_CASE("bootstrap comparison with an uninformative exog", "[bootstrap]") {
    const garch::ModelSpec base{garch::Family::Garch, false};
    const garch::ModelSpec ext{garch::Family::Garch, true};
    // well identified parameters: with alpha near 0 beta is flat and equivalent fits can forecast differently
    garch::ParamVector p;
    p.omega = 1e-6;
    p.alpha = 0.1;
    p.beta = 0.85;
    const auto sim = garch::simulate(base, p, 4000, 7);
    const TimeSeries zeros(std::vector<double>(4000, 0.0));

    BootstrapConfig cfg;
    cfg.segments = 12;
    cfg.length = 1000;
    cfg.seed = 99;
    const auto res = bootstrap_compare(base, ext, sim.returns, &zeros, cfg);
    REQUIRE(res.nllh_base.size() + static_cast<std::size_t>(res.failed_segments) == 12);
    for (std::size_t i = 0; i < res.nllh_base.size(); ++i)
        CHECK(res.nllh_extended[i] == Approx(res.nllh_base[i]).epsilon(1e-4));
    CHECK(res.ks_p > 0.9);
    for (auto s : res.split_points) {
        CHECK(s >= 1000);
        CHECK(s <= 3000);
    }

    const auto again = bootstrap_compare(base, ext, sim.returns, &zeros, cfg);
    CHECK(again.split_points == res.split_points);
    CHECK(again.nllh_base == res.nllh_base);
    CHECK(again.nllh_extended == res.nllh_extended);
    CHECK(again.ks_stat == res.ks_stat);
}

TEST_CASE("bootstrap comparison preconditions", "[bootstrap]") {
    const garch::ModelSpec base{garch::Family::Garch, false};
    const garch::ModelSpec ext{garch::Family::Garch, true};
    const TimeSeries r(normals(900, 1));
    const TimeSeries x(normals(900, 2));
    BootstrapConfig cfg;
    cfg.length = 500;
    CHECK_THROWS_AS(bootstrap_compare(base, ext, r, &x, cfg), ArgumentError);
    cfg.length = 300;
    CHECK_THROWS_AS(bootstrap_compare(base, ext, r, nullptr, cfg), ArgumentError);
    cfg.segments = 5;
    CHECK_THROWS_AS(bootstrap_compare(base, ext, r, &x, cfg), ArgumentError);
    const TimeSeries short_x(normals(800, 2));
    cfg.segments = 10;
    CHECK_THROWS_AS(bootstrap_compare(base, ext, r, &short_x, cfg), AlignmentError);
}

TEST_CASE("bootstrap reports unreliable comparisons", "[bootstrap]") {
    const garch::ModelSpec base{garch::Family::Garch, false};
    const TimeSeries r(normals(1200, 3));
    BootstrapConfig cfg;
    cfg.segments = 10;
    cfg.length = 300;
    cfg.fit.max_iter = 2;  // no fit can converge
    cfg.fit.restarts = 1;
    CHECK_THROWS_AS(bootstrap_compare(base, base, r, nullptr, cfg), ReliabilityError);
}

TEST_CASE("bootstrap can skip gap-heavy segments", "[bootstrap]") {
    const garch::ModelSpec base{garch::Family::Garch, false};
    garch::ParamVector p;
    p.omega = 5e-6;
    p.alpha = 0.05;
    p.beta = 0.5;
    auto r = garch::simulate(base, p, 2000, 8).returns;
    for (std::size_t i = 0; i < 1000; ++i) r.gap_mask[i] = true;
    BootstrapConfig cfg;
    cfg.segments = 10;
    cfg.length = 300;
    cfg.exclude_gap_segments = true;
    cfg.seed = 4;
    const auto res = bootstrap_compare(base, base, r, nullptr, cfg);
    int expected = 0;
    for (auto s : res.split_points) expected += (s - 300) + 30 < 1000 ? 1 : 0;  // more than 5% of 600 points flagged
    CHECK(res.gap_excluded == expected);
    CHECK(res.nllh_base.size() == static_cast<std::size_t>(10 - expected - res.failed_segments));
}
