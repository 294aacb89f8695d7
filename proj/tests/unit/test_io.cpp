#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>

#include "infovol/core/rng.hpp"
#include "infovol/io.hpp"

using namespace infovol;
using Catch::Approx;

TEST_CASE("format_double round-trips exactly", "[io]") {
    Rng r(1);
    for (int i = 0; i < 1000; ++i) {
        const double v = r.normal() * std::pow(10.0, static_cast<double>(r.uniform_int(0, 30)) - 15.0);
        REQUIRE(std::stod(io::format_double(v)) == v);
    }
    CHECK(io::format_double(0.5) == "0.5");
    CHECK(io::format_double(1e-6) == "1e-06");
}

TEST_CASE("series CSV round trip", "[io]") {
    TimeSeries s({0.1, -0.25, 1e-9, 3.0}, {false, true, false, true}, 25925760);
    std::stringstream buf;
    io::write_series_csv(buf, s);
    CHECK(buf.str().rfind("minute_epoch,value,is_gap\n25925760,0.1,0\n25925761,-0.25,1\n", 0) == 0);
    const auto back = io::read_series_csv(buf);
    CHECK(back.start == s.start);
    CHECK(back.interval == 1);
    CHECK(back.values == s.values);
    CHECK(back.gap_mask == s.gap_mask);
}

TEST_CASE("series CSV reader validation", "[io]") {
    std::istringstream irregular("minute_epoch,value,is_gap\n10,1,0\n11,2,0\n13,3,0\n");
    CHECK_THROWS_AS(io::read_series_csv(irregular), IngestionError);
    std::istringstream bad_value("10,1\n11,x\n");
    try {
        io::read_series_csv(bad_value);
        FAIL("expected an ingestion error");
    } catch (const IngestionError& e) {
        CHECK(e.row == 2);
    }
    std::istringstream empty("minute_epoch,value,is_gap\n");
    CHECK_THROWS_AS(io::read_series_csv(empty), EmptyInputError);
    std::istringstream two_col("5,1.5\n7,2.5\n9,3.5\n");
    const auto s = io::read_series_csv(two_col);
    CHECK(s.interval == 2);
    CHECK(s.gap_count() == 0);
    CHECK_THROWS_AS(io::read_series_file("/nonexistent/series.csv"), ConfigError);
}

TEST_CASE("multi-series CSV marks a row as a gap when any column is", "[io]") {
    TimeSeries a({1, 2}, {false, true}, 3);
    TimeSeries b({3, 4}, {false, false}, 3);
    std::ostringstream out;
    io::write_multi_series_csv(out, {"a", "b"}, {&a, &b});
    CHECK(out.str() == "minute_epoch,a,b,is_gap\n3,1,3,0\n4,2,4,1\n");
}

TEST_CASE("non-finite numbers become null", "[io]") {
    CHECK(io::num(std::numeric_limits<double>::infinity()).is_null());
    CHECK(io::num(std::nan("")).is_null());
    CHECK(io::num(2.5) == 2.5);
    CHECK(std::isnan(io::num_from(io::ordered_json(nullptr))));
    CHECK(io::num_from(io::ordered_json(1.5)) == 1.5);
}

TEST_CASE("fit results survive a JSON round trip", "[io]") {
    garch::FitResult f;
    f.spec = {garch::Family::Cgarch, true};
    f.params.mu = 1e-5;
    f.params.omega = 2e-7;
    f.params.alpha = 0.07;
    f.params.beta = 0.81;
    f.params.rho = 0.985;
    f.params.theta = 0.02;
    f.params.gamma = 3.3e-8;
    f.in_sample_nllh = -12345.678901234;
    f.converged = true;
    f.iterations = 812;
    f.restarts_used = 5;
    f.best_start = 2;
    f.sigma0_sq = 1.23e-6;
    f.exog_scale = 17.5;
    f.nobs = 4000;
    f.start_nllh = {-1.0, std::numeric_limits<double>::infinity()};

    const auto j = io::to_json(f);
    CHECK(j["model"] == "cgarchx");
    CHECK(j["params"].contains("theta"));
    CHECK_FALSE(j["params"].contains("phi"));
    const auto back = io::fit_from_json(io::ordered_json::parse(j.dump()));
    CHECK(back.spec == f.spec);
    for (const auto& name : garch::param_names(f.spec))
        CHECK(garch::param_value(back.params, name) == garch::param_value(f.params, name));
    CHECK(back.in_sample_nllh == f.in_sample_nllh);
    CHECK(back.sigma0_sq == f.sigma0_sq);
    CHECK(back.exog_scale == f.exog_scale);
    CHECK(back.nobs == 4000);
    CHECK(back.best_start == 2);
    REQUIRE(back.start_nllh.size() == 2);
    CHECK(std::isnan(back.start_nllh[1]));

    CHECK_THROWS_AS(io::fit_from_json(io::ordered_json::parse(R"({"spec":{"family":"garch"}})")), ConfigError);
    CHECK_THROWS_AS(io::fit_from_json(io::ordered_json::parse(R"({"spec":{"family":"arch"},"params":{}})")),
                    ArgumentError);
}

TEST_CASE("report serialisers", "[io]") {
    infoflow::AdfResult adf;
    adf.statistic = -5.5;
    adf.lag_order = 3;
    adf.critical_values = {{"1%", -3.43}, {"5%", -2.86}, {"10%", -2.57}};
    adf.level = infoflow::AdfLevel::FivePercent;
    adf.reject_unit_root = true;
    const auto a = io::to_json(adf);
    CHECK(a["level"] == "5%");
    CHECK(a["critical_values"]["10%"] == -2.57);

    infoflow::LagCorrelation c;
    c.lags = {-1, 0, 1};
    c.rho = {0.1, 0.2, 0.3};
    const auto cj = io::to_json(c);
    REQUIRE(cj.size() == 3);
    CHECK_FALSE(cj[0].contains("p_value"));

    eval::BootstrapComparison b;
    b.nllh_base = {1, 2};
    b.nllh_extended = {0.5, 1.5};
    b.kept_splits = {1000, 1400};
    std::ostringstream csv;
    io::write_bootstrap_csv(csv, b);
    CHECK(csv.str() == "split_point,nllh_base,nllh_extended\n1000,1,0.5\n1400,2,1.5\n");
    CHECK(io::to_json(b)["kept_segments"] == 2);

    const auto env = io::series_envelope(TimeSeries({1.0, 2.0}, {false, true}, 9), "x", 4);
    CHECK(env["start_minute"] == 9);
    CHECK(env["gap_count"] == 1);
    CHECK(env["malformed_rows"] == 4);
}

TEST_CASE("JSON files", "[io]") {
    const auto dir = std::filesystem::temp_directory_path() / "infovol_io_test";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "x.json").string();
    io::write_json_file(path, {{"b", 1}, {"a", 2}});
    const auto back = io::read_json_file(path);
    CHECK(back.begin().key() == "b");  // insertion order is kept
    {
        std::ofstream bad(dir / "bad.json");
        bad << "{not json";
    }
    CHECK_THROWS_AS(io::read_json_file((dir / "bad.json").string()), ConfigError);
    CHECK_THROWS_AS(io::read_json_file((dir / "missing.json").string()), ConfigError);
    std::filesystem::remove_all(dir);
}
