#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include "infovol/core/error.hpp"
#include "infovol/core/parallel.hpp"
#include "infovol/core/rng.hpp"
#include "infovol/evalstats.hpp"
#include "infovol/garch.hpp"
#include "infovol/infoflow.hpp"
#include "infovol/io.hpp"
#include "infovol/marketdata.hpp"
#include "infovol/version.hpp"

namespace infovol::pipeline {

namespace fs = std::filesystem;
using io::ordered_json;

enum class ExitCode : int { Ok = 0, Usage = 2, Config = 3, Data = 4, Numeric = 5 };

inline ExitCode exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Argument: return ExitCode::Config;
        case ErrorKind::Config: return ExitCode::Config;
        case ErrorKind::Data: return ExitCode::Data;
        case ErrorKind::Numeric: return ExitCode::Numeric;
    }
    return ExitCode::Numeric;
}

inline const std::vector<std::string>& stage_names() {
    static const std::vector<std::string> names{"ingest", "stats", "infoflow", "fit", "evaluate", "bootstrap"};
    return names;
}

struct SignalInput {
    std::string name;
    std::string path;
    marketdata::Aggregation aggregation = marketdata::Aggregation::Sum;
};

struct ModelEntry {
    garch::ModelSpec spec;
};

struct PipelineConfig {
    std::optional<std::string> trades;
    std::optional<std::string> quotes;
    std::optional<std::string> returns;  // pre-computed return series (standard series CSV)
    std::vector<SignalInput> signals;
    marketdata::CsvFormat csv;
    std::string price_definition = "vwap";  // vwap | midquote | both
    std::size_t in_sample_length = 50000;
    std::size_t out_sample_length = 8000;
    std::vector<garch::ModelSpec> models;
    // infoflow
    int max_lag = 10;
    int bins = 3;
    int shuffles = 100;
    int permutations = 200;
    std::size_t integrate_window = 30;
    std::optional<int> adf_max_lag;
    infoflow::SurrogateMode surrogate = infoflow::SurrogateMode::Shuffle;
    // stats
    int acf_max_lag = 20;
    // fitting
    garch::FitOptions fit;
    // bootstrap
    eval::BootstrapConfig bootstrap;
    std::optional<std::uint64_t> seed;
    std::string output_dir = "out";
    std::set<std::string> skip;
    unsigned threads = 0;
};

namespace detail {

inline marketdata::Aggregation parse_aggregation(const std::string& s) {
    if (s == "sum") return marketdata::Aggregation::Sum;
    if (s == "mean") return marketdata::Aggregation::Mean;
    throw ConfigError("unknown aggregation '" + s + "' (expected sum or mean)");
}

inline const char* aggregation_name(marketdata::Aggregation a) {
    return a == marketdata::Aggregation::Sum ? "sum" : "mean";
}

/// FNV-1a, used to key per-item seed streams by label.
inline std::uint64_t label_hash(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace detail

/// Parses a configuration document. Paths are resolved relative to `base_dir`.
inline PipelineConfig config_from_json(const ordered_json& j, const fs::path& base_dir = {}) {
    PipelineConfig c;
    auto resolve = [&](const std::string& p) {
        const fs::path path(p);
        return (path.is_absolute() || base_dir.empty() ? path : base_dir / path).lexically_normal().string();
    };
    try {
        if (j.contains("seed") && !j["seed"].is_null()) c.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("output_dir")) c.output_dir = resolve(j["output_dir"].get<std::string>());
        if (j.contains("threads")) c.threads = j["threads"].get<unsigned>();
        const auto& in = j.at("inputs");
        if (in.contains("trades")) c.trades = resolve(in["trades"].get<std::string>());
        if (in.contains("quotes")) c.quotes = resolve(in["quotes"].get<std::string>());
        if (in.contains("returns")) c.returns = resolve(in["returns"].get<std::string>());
        if (in.contains("csv")) {
            const auto& f = in["csv"];
            c.csv.has_header = f.value("has_header", false);
            const auto d = f.value("delimiter", std::string(","));
            if (d.size() != 1) throw ConfigError("csv.delimiter must be a single character");
            c.csv.delimiter = d[0];
            c.csv.timestamp_col = f.value("timestamp_col", std::size_t{0});
            c.csv.first_col = f.value("first_col", std::size_t{1});
            c.csv.second_col = f.value("second_col", std::size_t{2});
        }
        if (in.contains("signals"))
            for (const auto& s : in["signals"])
                c.signals.push_back({s.at("name").get<std::string>(), resolve(s.at("path").get<std::string>()),
                                     detail::parse_aggregation(s.value("aggregation", std::string("sum")))});
        c.price_definition = j.value("price_definition", c.price_definition);
        c.in_sample_length = j.value("in_sample_length", c.in_sample_length);
        c.out_sample_length = j.value("out_sample_length", c.out_sample_length);
        if (j.contains("models"))
            for (const auto& m : j["models"]) c.models.push_back(io::spec_from_json(m));
        if (j.contains("infoflow")) {
            const auto& f = j["infoflow"];
            c.max_lag = f.value("max_lag", c.max_lag);
            c.bins = f.value("bins", c.bins);
            c.shuffles = f.value("shuffles", c.shuffles);
            c.permutations = f.value("permutations", c.permutations);
            c.integrate_window = f.value("integrate_window", c.integrate_window);
            if (f.contains("adf_max_lag") && !f["adf_max_lag"].is_null()) c.adf_max_lag = f["adf_max_lag"].get<int>();
            const auto mode = f.value("surrogate", std::string("shuffle"));
            if (mode == "shuffle") c.surrogate = infoflow::SurrogateMode::Shuffle;
            else if (mode == "block") c.surrogate = infoflow::SurrogateMode::StationaryBlock;
            else throw ConfigError("infoflow.surrogate must be 'shuffle' or 'block'");
        }
        if (j.contains("stats")) c.acf_max_lag = j["stats"].value("acf_max_lag", c.acf_max_lag);
        if (j.contains("fit")) {
            const auto& f = j["fit"];
            c.fit.max_iter = f.value("max_iter", c.fit.max_iter);
            c.fit.tol = f.value("tol", c.fit.tol);
            c.fit.restarts = f.value("restarts", c.fit.restarts);
        }
        if (j.contains("bootstrap")) {
            const auto& b = j["bootstrap"];
            c.bootstrap.segments = b.value("segments", c.bootstrap.segments);
            c.bootstrap.length = b.value("length", c.bootstrap.length);
            c.bootstrap.exclude_gap_segments = b.value("exclude_gap_segments", false);
            c.bootstrap.max_gap_fraction = b.value("max_gap_fraction", c.bootstrap.max_gap_fraction);
        }
        if (j.contains("skip"))
            for (const auto& s : j["skip"]) c.skip.insert(s.get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return c;
}

/// Effective configuration as echoed into the manifest.
inline ordered_json config_to_json(const PipelineConfig& c) {
    ordered_json in;
    if (c.trades) in["trades"] = *c.trades;
    if (c.quotes) in["quotes"] = *c.quotes;
    if (c.returns) in["returns"] = *c.returns;
    in["csv"] = {{"has_header", c.csv.has_header},
                 {"delimiter", std::string(1, c.csv.delimiter)},
                 {"timestamp_col", c.csv.timestamp_col},
                 {"first_col", c.csv.first_col},
                 {"second_col", c.csv.second_col}};
    ordered_json sig = ordered_json::array();
    for (const auto& s : c.signals)
        sig.push_back({{"name", s.name}, {"path", s.path}, {"aggregation", detail::aggregation_name(s.aggregation)}});
    in["signals"] = sig;
    ordered_json models = ordered_json::array();
    for (const auto& m : c.models) models.push_back(io::to_json(m));
    ordered_json skip = ordered_json::array();
    for (const auto& s : c.skip) skip.push_back(s);
    return {{"seed", c.seed ? ordered_json(*c.seed) : ordered_json(nullptr)},
            {"output_dir", c.output_dir},
            {"threads", c.threads},
            {"inputs", in},
            {"price_definition", c.price_definition},
            {"in_sample_length", c.in_sample_length},
            {"out_sample_length", c.out_sample_length},
            {"models", models},
            {"infoflow",
             {{"max_lag", c.max_lag},
              {"bins", c.bins},
              {"shuffles", c.shuffles},
              {"permutations", c.permutations},
              {"integrate_window", c.integrate_window},
              {"adf_max_lag", c.adf_max_lag ? ordered_json(*c.adf_max_lag) : ordered_json(nullptr)},
              {"surrogate", c.surrogate == infoflow::SurrogateMode::Shuffle ? "shuffle" : "block"}}},
            {"stats", {{"acf_max_lag", c.acf_max_lag}}},
            {"fit", {{"max_iter", c.fit.max_iter}, {"tol", c.fit.tol}, {"restarts", c.fit.restarts}}},
            {"bootstrap",
             {{"segments", c.bootstrap.segments},
              {"length", c.bootstrap.length},
              {"exclude_gap_segments", c.bootstrap.exclude_gap_segments},
              {"max_gap_fraction", c.bootstrap.max_gap_fraction}}},
            {"skip", skip}};
}

/// Hex SHA-256 of a file's contents.
inline std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, md, &len);
    EVP_MD_CTX_free(ctx);
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0xF]);
    }
    return out;
}

/// Checks everything that can be checked before any stage runs.
inline void validate(const PipelineConfig& c) {
    if (!c.seed) throw ConfigError("config: 'seed' is mandatory");
    if (!c.returns && !c.trades && !c.quotes) throw ConfigError("config: no price input (trades, quotes or returns)");
    if (!c.returns) {
        if (c.price_definition != "vwap" && c.price_definition != "midquote" && c.price_definition != "both")
            throw ConfigError("config: price_definition must be vwap, midquote or both");
        if ((c.price_definition == "vwap" || c.price_definition == "both") && !c.trades)
            throw ConfigError("config: vwap prices need a trades file");
        if ((c.price_definition == "midquote" || c.price_definition == "both") && !c.quotes)
            throw ConfigError("config: midquote prices need a quotes file");
    }
    auto must_exist = [](const std::optional<std::string>& p) {
        if (p && !fs::exists(*p)) throw ConfigError("config: input file '" + *p + "' does not exist");
    };
    must_exist(c.trades);
    must_exist(c.quotes);
    must_exist(c.returns);
    std::set<std::string> names;
    for (const auto& s : c.signals) {
        must_exist(s.path);
        if (!names.insert(s.name).second) throw ConfigError("config: duplicate signal name '" + s.name + "'");
    }
    for (const auto& s : c.skip)
        if (std::find(stage_names().begin(), stage_names().end(), s) == stage_names().end())
            throw ConfigError("config: unknown stage '" + s + "' in skip list");
    for (const auto& m : c.models)
        if (m.exogenous && c.signals.empty()) throw ConfigError("config: exogenous model requires at least one signal");
    if (c.in_sample_length < 200) throw ConfigError("config: in_sample_length must be >= 200");
}

struct PipelineOutcome {
    ExitCode code = ExitCode::Ok;
    std::string failed_stage;
    std::string message;
    fs::path manifest_path;
};

namespace detail {

/// Aligned analysis inputs: one return series per price definition plus the signals, all
/// trimmed to a common minute window.
struct Dataset {
    std::map<std::string, TimeSeries> prices;
    std::map<std::string, TimeSeries> returns;
    std::map<std::string, TimeSeries> signals;
    ordered_json report;
};

inline Dataset ingest(const PipelineConfig& c) {
    Dataset d;
    ordered_json rep;
    rep["schema_version"] = io::kSchemaVersion;
    auto open = [](const std::string& p) {
        std::ifstream in(p);
        if (!in) throw ConfigError("cannot open '" + p + "'");
        return in;
    };
    if (c.returns) {
        d.returns["returns"] = io::read_series_file(*c.returns);
    } else {
        if (c.price_definition != "midquote") {
            auto in = open(*c.trades);
            const auto parsed = marketdata::parse_trades(in, c.csv);
            d.prices["vwap"] = marketdata::vwap_bars(parsed.ticks);
            rep["trades"] = {{"rows", parsed.rows_read}, {"malformed_rows", parsed.malformed_rows.size()}};
        }
        if (c.price_definition != "vwap") {
            auto in = open(*c.quotes);
            const auto parsed = marketdata::parse_quotes(in, c.csv);
            d.prices["midquote"] = marketdata::midquote_bars(parsed.ticks);
            rep["quotes"] = {{"rows", parsed.rows_read}, {"malformed_rows", parsed.malformed_rows.size()}};
        }
        for (const auto& [name, p] : d.prices) d.returns[name] = marketdata::log_returns(p);
    }
    ordered_json sig = ordered_json::object();
    for (const auto& s : c.signals) {
        auto in = open(s.path);
        const auto parsed = marketdata::parse_signal(in, c.csv);
        d.signals[s.name] = marketdata::aggregate_signal(parsed.ticks, s.aggregation);
        sig[s.name] = {{"rows", parsed.rows_read},
                       {"malformed_rows", parsed.malformed_rows.size()},
                       {"aggregation", aggregation_name(s.aggregation)}};
    }
    rep["signals"] = sig;

    // common window over every series
    std::int64_t first = std::numeric_limits<std::int64_t>::min();
    std::int64_t last = std::numeric_limits<std::int64_t>::max();
    auto clip = [&](const TimeSeries& s) {
        first = std::max(first, s.start);
        last = std::min(last, s.start + static_cast<std::int64_t>(s.size()) * s.interval);
    };
    for (const auto& [_, s] : d.returns) clip(s);
    for (const auto& [_, s] : d.signals) clip(s);
    if (last <= first) throw DegenerateError("ingest: inputs share no common minutes");
    auto trim = [&](TimeSeries& s) {
        if (s.interval != 1) throw ConfigError("ingest: only 1-minute series are supported");
        s = s.slice(static_cast<std::size_t>(first - s.start), static_cast<std::size_t>(last - first));
    };
    for (auto& [_, s] : d.returns) trim(s);
    for (auto& [_, s] : d.signals) trim(s);
    rep["window"] = {{"start_minute", first}, {"length", last - first}};
    d.report = std::move(rep);
    return d;
}

inline TimeSeries squared(const TimeSeries& r) {
    TimeSeries out = r;
    for (double& v : out.values) v *= v;
    return out;
}

}  // namespace detail

/// Runs the configured stages in order and writes one report per stage plus manifest.json
/// into the output directory. Errors stop the run with a stage-specific exit code; files
/// already written are kept and a manifest is still produced.
inline PipelineOutcome run_pipeline(const PipelineConfig& config) {
    PipelineOutcome outcome;
    try {
        validate(config);
    } catch (const Error& e) {
        outcome.code = ExitCode::Config;
        outcome.failed_stage = "config";
        outcome.message = e.what();
        return outcome;
    }
    if (config.threads > 0) set_max_threads(config.threads);
    const std::uint64_t seed = *config.seed;
    const fs::path out_dir(config.output_dir);
    fs::create_directories(out_dir / "series");
    fs::create_directories(out_dir / "fits");
    fs::create_directories(out_dir / "bootstrap");

    ordered_json manifest;
    manifest["schema_version"] = io::kSchemaVersion;
    manifest["artifact_version"] = kVersion;
    manifest["config"] = config_to_json(config);
    ordered_json digests;
    auto digest = [&](const std::optional<std::string>& p) {
        if (p) digests[*p] = sha256_file(*p);
    };
    digest(config.trades);
    digest(config.quotes);
    digest(config.returns);
    for (const auto& s : config.signals) digests[s.path] = sha256_file(s.path);
    manifest["input_digests"] = digests;
    ordered_json timings = ordered_json::object();
    ordered_json stages_run = ordered_json::array();

    detail::Dataset data;
    std::map<std::string, garch::FitResult> fits;  // key: <pricedef>/<model>[/<signal>]
    std::map<std::string, std::pair<std::string, std::string>> fit_inputs;  // key -> (pricedef, signal)
    std::size_t in_len = 0, out_len = 0;
    std::string stage;

    auto seed_for = [&](const std::string& label) { return derive_seed(seed, detail::label_hash(label)); };
    auto enabled = [&](const std::string& s) { return !config.skip.contains(s); };

    try {
        // -- ingest ---------------------------------------------------------
        stage = "ingest";
        auto t0 = std::chrono::steady_clock::now();
        data = detail::ingest(config);
        for (const auto& [name, p] : data.prices) io::write_series_file((out_dir / "series" / (name + "_price.csv")).string(), p);
        for (const auto& [name, r] : data.returns) io::write_series_file((out_dir / "series" / (name + "_returns.csv")).string(), r);
        for (const auto& [name, s] : data.signals) io::write_series_file((out_dir / "series" / ("signal_" + name + ".csv")).string(), s);
        io::write_json_file((out_dir / "ingest.json").string(), data.report);
        timings[stage] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        stages_run.push_back(stage);
        const std::size_t n = data.returns.begin()->second.size();
        in_len = std::min(config.in_sample_length, n);
        out_len = std::min(config.out_sample_length, n - in_len);

        // -- stats ----------------------------------------------------------
        stage = "stats";
        if (enabled(stage)) {
            t0 = std::chrono::steady_clock::now();
            ordered_json rep{{"schema_version", io::kSchemaVersion}};
            for (const auto& [name, r] : data.returns) {
                rep["returns"][name]["descriptive"] = io::to_json(marketdata::descriptive_stats(r));
                rep["returns"][name]["autocorrelation"] =
                    io::to_json(marketdata::autocorrelation(r, std::min<int>(config.acf_max_lag, static_cast<int>(r.size()) - 1)));
            }
            for (const auto& [name, s] : data.signals) rep["signals"][name]["descriptive"] = io::to_json(marketdata::descriptive_stats(s));
            io::write_json_file((out_dir / "stats.json").string(), rep);
            timings[stage] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            stages_run.push_back(stage);
        }

        // -- infoflow -------------------------------------------------------
        stage = "infoflow";
        if (enabled(stage)) {
            t0 = std::chrono::steady_clock::now();
            ordered_json rep{{"schema_version", io::kSchemaVersion}};
            ordered_json corr = ordered_json::array(), te = ordered_json::array(), adf = ordered_json::object();
            for (const auto& [rname, r] : data.returns) {
                const TimeSeries r2 = detail::squared(r);
                adf["squared_returns_" + rname] = io::to_json(infoflow::adf_test(r2, config.adf_max_lag));
                const auto r2_symbols = infoflow::discretize(r2, config.bins);
                for (const auto& [sname, s] : data.signals) {
                    const std::string label = sname + "->" + rname;
                    ordered_json row{{"signal", sname}, {"returns", rname}};
                    row["lags"] = io::to_json(infoflow::permutation_pvalues(r2, s, config.max_lag, config.permutations,
                                                                            seed_for("perm/" + label)));
                    if (config.integrate_window > 1 && config.integrate_window <= s.size()) {
                        const TimeSeries integrated = infoflow::integrate_signal(s, config.integrate_window);
                        const std::size_t w = config.integrate_window - 1;
                        row["integrated_window"] = config.integrate_window;
                        row["integrated_lags"] = io::to_json(infoflow::lagged_crosscorr(
                            r2.slice(w, r2.size() - w), integrated.slice(w, integrated.size() - w), config.max_lag));
                    }
                    corr.push_back(std::move(row));

                    const auto s_symbols = infoflow::discretize(s, config.bins);
                    infoflow::EteOptions eo{config.shuffles, seed_for("ete/" + label), config.surrogate, 20.0};
                    auto fwd = infoflow::effective_transfer_entropy(s_symbols, r2_symbols, eo);
                    fwd.source = sname;
                    fwd.target = "squared_returns_" + rname;
                    fwd.bins = config.bins;
                    eo.seed = seed_for("ete/" + rname + "->" + sname);
                    auto rev = infoflow::effective_transfer_entropy(r2_symbols, s_symbols, eo);
                    rev.source = "squared_returns_" + rname;
                    rev.target = sname;
                    rev.bins = config.bins;
                    te.push_back(io::to_json(fwd));
                    te.push_back(io::to_json(rev));
                }
            }
            for (const auto& [sname, s] : data.signals) adf["signal_" + sname] = io::to_json(infoflow::adf_test(s, config.adf_max_lag));
            rep["correlations"] = std::move(corr);
            rep["transfer_entropy"] = std::move(te);
            rep["adf"] = std::move(adf);
            io::write_json_file((out_dir / "infoflow.json").string(), rep);
            timings[stage] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            stages_run.push_back(stage);
        }

        // -- fit ------------------------------------------------------------
        stage = "fit";
        if (enabled(stage) && !config.models.empty()) {
            t0 = std::chrono::steady_clock::now();
            if (in_len < 200) throw ConfigError("fit: only " + std::to_string(in_len) + " in-sample points available");
            for (const auto& [rname, r] : data.returns) {
                const TimeSeries r_in = r.slice(0, in_len);
                for (const auto& spec : config.models) {
                    std::vector<std::string> sigs{""};
                    if (spec.exogenous) {
                        sigs.clear();
                        for (const auto& s : config.signals) sigs.push_back(s.name);
                    }
                    for (const auto& sname : sigs) {
                        const std::string key = rname + "/" + spec.name() + (sname.empty() ? "" : "/" + sname);
                        garch::FitOptions fo = config.fit;
                        fo.seed = seed_for("fit/" + key);
                        std::optional<TimeSeries> x_in;
                        if (spec.exogenous) x_in = data.signals.at(sname).slice(0, in_len);
                        auto fitted = garch::fit(spec, r_in, x_in ? &*x_in : nullptr, fo);
                        fits[key] = fitted;
                        fit_inputs[key] = {rname, sname};
                        ordered_json fj = io::to_json(fitted);
                        fj["returns"] = rname;
                        fj["signal"] = sname.empty() ? ordered_json(nullptr) : ordered_json(sname);
                        fj["in_sample_length"] = in_len;
                        std::string file = rname + "_" + spec.name() + (sname.empty() ? "" : "_" + sname);
                        io::write_json_file((out_dir / "fits" / (file + ".json")).string(), fj);
                        if (!fitted.converged) spdlog::warn("fit {}: no start converged", key);
                    }
                }
            }
            timings[stage] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            stages_run.push_back(stage);
        }

        // -- evaluate -------------------------------------------------------
        stage = "evaluate";
        if (enabled(stage) && !fits.empty()) {
            t0 = std::chrono::steady_clock::now();
            if (out_len < 10) throw ConfigError("evaluate: out-of-sample segment too short");
            ordered_json rep{{"schema_version", io::kSchemaVersion},
                             {"in_sample_length", in_len},
                             {"out_sample_length", out_len}};
            ordered_json models = ordered_json::array();
            std::map<std::string, double> oos_nllh;
            for (const auto& [key, f] : fits) {
                const auto& [rname, sname] = fit_inputs[key];
                const TimeSeries window = data.returns.at(rname).slice(0, in_len + out_len);
                std::optional<TimeSeries> xw;
                if (f.spec.exogenous) xw = data.signals.at(sname).slice(0, in_len + out_len);
                ordered_json row{{"key", key},
                                 {"model", f.spec.name()},
                                 {"returns", rname},
                                 {"signal", sname.empty() ? ordered_json(nullptr) : ordered_json(sname)},
                                 {"converged", f.converged}};
                try {
                    const auto path = garch::forecast_oos(f, window, xw ? &*xw : nullptr, in_len);
                    const TimeSeries r_out = window.slice(in_len, out_len);
                    io::write_series_file((out_dir / "fits" / (rname + "_" + f.spec.name() + (sname.empty() ? "" : "_" + sname) + "_oos_variance.csv")).string(),
                                          path.sigma_sq);
                    const double l = garch::nllh(path);
                    oos_nllh[key] = l;
                    row["oos_nllh"] = io::num(l);
                    row["mz"] = io::to_json(eval::mz_regression(path.sigma_sq, r_out));
                    row["pcc"] = io::to_json(eval::pcc_test(path.sigma_sq, detail::squared(r_out)));
                } catch (const Error& e) {
                    row["error"] = e.what();
                }
                models.push_back(std::move(row));
            }
            ordered_json lr = ordered_json::array();
            for (const auto& [key, f] : fits) {
                if (!f.spec.exogenous || !oos_nllh.contains(key)) continue;
                const auto& [rname, sname] = fit_inputs[key];
                const std::string base_key = rname + "/" + garch::ModelSpec{f.spec.family, false}.name();
                if (!oos_nllh.contains(base_key)) continue;
                lr.push_back({{"returns", rname},
                              {"family", std::string(garch::to_string(f.spec.family))},
                              {"signal", sname},
                              {"nllh_base", io::num(oos_nllh[base_key])},
                              {"nllh_extended", io::num(oos_nllh[key])},
                              {"lr", io::to_json(eval::lr_test(oos_nllh[base_key], oos_nllh[key], 1))}});
            }
            rep["models"] = std::move(models);
            rep["likelihood_ratio"] = std::move(lr);
            io::write_json_file((out_dir / "comparison.json").string(), rep);
            timings[stage] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            stages_run.push_back(stage);
        }

        // -- bootstrap ------------------------------------------------------
        stage = "bootstrap";
        if (enabled(stage)) {
            t0 = std::chrono::steady_clock::now();
            ordered_json rep{{"schema_version", io::kSchemaVersion}};
            ordered_json rows = ordered_json::array();
            std::set<garch::Family> families;
            for (const auto& m : config.models)
                if (m.exogenous) families.insert(m.family);
            for (const auto& [rname, r] : data.returns) {
                for (garch::Family fam : families) {
                    for (const auto& s : config.signals) {
                        const std::string label = rname + "_" + std::string(garch::to_string(fam)) + "_" + s.name;
                        eval::BootstrapConfig bc = config.bootstrap;
                        bc.fit = config.fit;
                        bc.seed = seed_for("bootstrap/" + label);
                        const auto b = eval::bootstrap_compare({fam, false}, {fam, true}, r, &data.signals.at(s.name), bc);
                        std::ofstream csv(out_dir / "bootstrap" / (label + ".csv"));
                        io::write_bootstrap_csv(csv, b);
                        ordered_json row = io::to_json(b);
                        row["returns"] = rname;
                        row["family"] = std::string(garch::to_string(fam));
                        row["signal"] = s.name;
                        rows.push_back(std::move(row));
                    }
                }
            }
            rep["comparisons"] = std::move(rows);
            io::write_json_file((out_dir / "bootstrap.json").string(), rep);
            timings[stage] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            stages_run.push_back(stage);
        }
    } catch (const Error& e) {
        outcome.code = exit_code_for(e.kind());
        outcome.failed_stage = stage;
        outcome.message = e.what();
    } catch (const std::exception& e) {
        outcome.code = ExitCode::Numeric;
        outcome.failed_stage = stage;
        outcome.message = e.what();
    }

    manifest["stages_run"] = stages_run;
    manifest["timings_seconds"] = timings;
    manifest["status"] = outcome.code == ExitCode::Ok ? "ok" : "failed";
    if (outcome.code != ExitCode::Ok) manifest["error"] = {{"stage", outcome.failed_stage}, {"message", outcome.message}};
    outcome.manifest_path = out_dir / "manifest.json";
    io::write_json_file(outcome.manifest_path.string(), manifest);
    return outcome;
}

}  // namespace infovol::pipeline
