#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <system_error>

#include <json.hpp>

#include "infovol/core/error.hpp"
#include "infovol/core/time_series.hpp"
#include "infovol/evalstats.hpp"
#include "infovol/garch.hpp"
#include "infovol/infoflow.hpp"
#include "infovol/marketdata.hpp"

namespace infovol::io {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

/// Shortest decimal representation that round-trips exactly.
inline std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw ArgumentError("format_double: conversion failed");
    return std::string(buf, ptr);
}

/// `minute_epoch,value,is_gap` with a header row.
inline void write_series_csv(std::ostream& out, const TimeSeries& s) {
    out << "minute_epoch,value,is_gap\n";
    for (std::size_t i = 0; i < s.size(); ++i)
        out << s.minute_at(i) << ',' << format_double(s.values[i]) << ',' << (s.gap_mask[i] ? 1 : 0) << '\n';
}

/// Several aligned series side by side: `minute_epoch,<name>...,is_gap` (gap = any gap).
inline void write_multi_series_csv(std::ostream& out, const std::vector<std::string>& names,
                                   const std::vector<const TimeSeries*>& series) {
    out << "minute_epoch";
    for (const auto& n : names) out << ',' << n;
    out << ",is_gap\n";
    const std::size_t n = series.front()->size();
    for (std::size_t i = 0; i < n; ++i) {
        out << series.front()->minute_at(i);
        bool gap = false;
        for (const auto* s : series) {
            out << ',' << format_double(s->values[i]);
            gap = gap || s->gap_mask[i];
        }
        out << ',' << (gap ? 1 : 0) << '\n';
    }
}

/// Reads the standard series CSV. The interval is inferred from the first two rows and every
/// later row must continue the fixed grid.
inline TimeSeries read_series_csv(std::istream& in) {
    TimeSeries s;
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::int64_t> minutes;
    while (std::getline(in, line)) {
        ++line_no;
        const auto body = marketdata::detail::trim(line);
        if (body.empty()) continue;
        const auto f = marketdata::detail::split(body, ',');
        const auto minute = f.empty() ? std::nullopt : marketdata::detail::to_int64(f[0]);
        if (!minute) {
            if (minutes.empty() && s.values.empty() && line_no == 1) continue;  // header
            throw IngestionError("series csv: bad minute", line_no);
        }
        if (f.size() < 2) throw IngestionError("series csv: missing value", line_no);
        const auto v = marketdata::detail::to_double(f[1]);
        if (!v) throw IngestionError("series csv: bad value", line_no);
        bool gap = false;
        if (f.size() >= 3) gap = f[2] == "1" || f[2] == "true";
        minutes.push_back(*minute);
        s.values.push_back(*v);
        s.gap_mask.push_back(gap);
        if (minutes.size() >= 3) {
            const auto step = minutes[1] - minutes[0];
            if (minutes.back() - minutes[minutes.size() - 2] != step)
                throw IngestionError("series csv: irregular minute grid", line_no);
        }
    }
    if (s.values.empty()) throw EmptyInputError("series csv: no rows");
    s.start = minutes.front();
    s.interval = minutes.size() >= 2 ? minutes[1] - minutes[0] : 1;
    if (s.interval <= 0) throw IngestionError("series csv: minutes not increasing", 2);
    return s;
}

inline TimeSeries read_series_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open series file '" + path + "'");
    return read_series_csv(in);
}

inline void write_series_file(const std::string& path, const TimeSeries& s) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    write_series_csv(out, s);
}

inline void write_json_file(const std::string& path, const ordered_json& j) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << j.dump(2) << '\n';
}

inline ordered_json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    try {
        return ordered_json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("invalid JSON in '" + path + "': " + e.what());
    }
}

/// Non-finite doubles become JSON null.
inline ordered_json num(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

inline double num_from(const ordered_json& j) {
    return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

/// JSON envelope: metadata plus the values and gap flags.
inline ordered_json series_envelope(const TimeSeries& s, const std::string& name, std::size_t malformed_rows = 0) {
    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["name"] = name;
    j["start_minute"] = s.start;
    j["interval_minutes"] = s.interval;
    j["count"] = s.size();
    j["gap_count"] = s.gap_count();
    j["malformed_rows"] = malformed_rows;
    ordered_json values = ordered_json::array();
    for (double v : s.values) values.push_back(num(v));
    j["values"] = std::move(values);
    ordered_json gaps = ordered_json::array();
    for (bool g : s.gap_mask) gaps.push_back(g ? 1 : 0);
    j["gap_mask"] = std::move(gaps);
    return j;
}

// --- marketdata ----------------------------------------------------------------

inline ordered_json to_json(const marketdata::DescriptiveStats& s) {
    return {{"mean", num(s.mean)},         {"median", num(s.median)},     {"max", num(s.max)},
            {"min", num(s.min)},           {"std_dev", num(s.std_dev)},   {"skewness", num(s.skewness)},
            {"kurtosis", num(s.kurtosis)}};
}

inline ordered_json to_json(const marketdata::Autocorrelation& a) {
    ordered_json acf = ordered_json::array();
    for (std::size_t i = 0; i < a.lags.size(); ++i) acf.push_back({{"lag", a.lags[i]}, {"acf", num(a.acf[i])}});
    return {{"band", num(a.band)}, {"values", std::move(acf)}};
}

// --- infoflow ------------------------------------------------------------------

inline ordered_json to_json(const infoflow::LagCorrelation& c) {
    ordered_json rows = ordered_json::array();
    for (std::size_t i = 0; i < c.lags.size(); ++i) {
        ordered_json row{{"lag", c.lags[i]}, {"rho", num(c.rho[i])}};
        if (i < c.p_values.size()) row["p_value"] = num(c.p_values[i]);
        rows.push_back(std::move(row));
    }
    return rows;
}

inline ordered_json to_json(const infoflow::TransferEntropyResult& r) {
    return {{"source", r.source},     {"target", r.target},         {"te_bits", num(r.te)},
            {"ete_bits", num(r.ete)}, {"surrogate_mean_bits", num(r.surrogate_mean)},
            {"p_value", num(r.p_value)}, {"bins", r.bins},          {"shuffles", r.shuffles}};
}

inline ordered_json to_json(const infoflow::AdfResult& r) {
    ordered_json cv;
    for (const auto& [k, v] : r.critical_values) cv[k] = v;
    const char* level = r.level == infoflow::AdfLevel::OnePercent    ? "1%"
                        : r.level == infoflow::AdfLevel::FivePercent ? "5%"
                                                                     : "10%";
    return {{"statistic", num(r.statistic)}, {"lag_order", r.lag_order}, {"nobs", r.nobs},
            {"critical_values", cv},         {"level", level},           {"reject_unit_root", r.reject_unit_root}};
}

// --- garch ---------------------------------------------------------------------

inline ordered_json to_json(const garch::ModelSpec& s) {
    return {{"family", std::string(garch::to_string(s.family))}, {"exogenous", s.exogenous}, {"mean_model", "constant"}};
}

inline garch::ModelSpec spec_from_json(const ordered_json& j) {
    garch::ModelSpec s;
    s.family = garch::parse_family(j.at("family").get<std::string>());
    s.exogenous = j.value("exogenous", false);
    return s;
}

inline ordered_json to_json(const garch::ModelSpec& spec, const garch::ParamVector& p) {
    ordered_json j;
    for (const auto& name : garch::param_names(spec)) j[name] = num(garch::param_value(p, name));
    return j;
}

inline garch::ParamVector params_from_json(const garch::ModelSpec& spec, const ordered_json& j) {
    garch::ParamVector p;
    for (const auto& name : garch::param_names(spec)) garch::param_ref(p, name) = num_from(j.at(name));
    return p;
}

inline ordered_json to_json(const garch::FitResult& f) {
    ordered_json starts = ordered_json::array();
    for (double v : f.start_nllh) starts.push_back(num(v));
    return {{"schema_version", kSchemaVersion},
            {"model", f.spec.name()},
            {"spec", to_json(f.spec)},
            {"params", to_json(f.spec, f.params)},
            {"in_sample_nllh", num(f.in_sample_nllh)},
            {"converged", f.converged},
            {"iterations", f.iterations},
            {"restarts_used", f.restarts_used},
            {"best_start", f.best_start},
            {"sigma0_sq", num(f.sigma0_sq)},
            {"exog_scale", num(f.exog_scale)},
            {"nobs", f.nobs},
            {"start_nllh", std::move(starts)}};
}

inline garch::FitResult fit_from_json(const ordered_json& j) {
    try {
        garch::FitResult f;
        f.spec = spec_from_json(j.at("spec"));
        f.params = params_from_json(f.spec, j.at("params"));
        f.in_sample_nllh = num_from(j.at("in_sample_nllh"));
        f.converged = j.at("converged").get<bool>();
        f.iterations = j.value("iterations", 0);
        f.restarts_used = j.value("restarts_used", 0);
        f.best_start = j.value("best_start", -1);
        f.sigma0_sq = num_from(j.at("sigma0_sq"));
        f.exog_scale = num_from(j.at("exog_scale"));
        f.nobs = j.at("nobs").get<std::size_t>();
        if (j.contains("start_nllh"))
            for (const auto& v : j["start_nllh"]) f.start_nllh.push_back(num_from(v));
        return f;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed fit JSON: ") + e.what());
    }
}

// --- evalstats -----------------------------------------------------------------

inline ordered_json to_json(const eval::MzResult& m) {
    return {{"a", num(m.a)},           {"b", num(m.b)},       {"r_squared", num(m.r_squared)},
            {"f_stat", num(m.f_stat)}, {"f_p", num(m.f_p)},   {"n", m.n}};
}

inline ordered_json to_json(const eval::PccResult& p) { return {{"rho", num(p.rho)}, {"p_value", num(p.p_value)}}; }

inline ordered_json to_json(const eval::LrResult& r) {
    return {{"statistic", num(r.statistic)}, {"raw_statistic", num(r.raw_statistic)}, {"df", r.df},
            {"p_value", num(r.p_value)}};
}

inline ordered_json to_json(const eval::BootstrapComparison& b) {
    return {{"n_segments", b.n_segments},
            {"seg_train", b.seg_train},
            {"seg_test", b.seg_test},
            {"failed_segments", b.failed_segments},
            {"gap_excluded", b.gap_excluded},
            {"ks_stat", num(b.ks_stat)},
            {"ks_p", num(b.ks_p)},
            {"kept_segments", b.nllh_base.size()}};
}

/// Per-segment out-of-sample NLLH: `split_point,nllh_base,nllh_extended`.
inline void write_bootstrap_csv(std::ostream& out, const eval::BootstrapComparison& b) {
    out << "split_point,nllh_base,nllh_extended\n";
    for (std::size_t i = 0; i < b.nllh_base.size(); ++i)
        out << b.kept_splits[i] << ',' << format_double(b.nllh_base[i]) << ',' << format_double(b.nllh_extended[i])
            << '\n';
}

}  // namespace infovol::io
