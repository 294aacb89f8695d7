// Command-line front end: ingest | simulate | infoflow | fit | evaluate | bootstrap | run.
// Reports go to files; stdout is only used by `simulate` without --out.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "infovol/infovol.hpp"
#include "infovol/pipeline.hpp"

namespace fs = std::filesystem;
using namespace infovol;
using io::ordered_json;
using pipeline::ExitCode;

namespace {

/// "name=path" -> (name, path); a bare path gets `fallback` as its name.
std::pair<std::string, std::string> split_named(const std::string& arg, const std::string& fallback) {
    const auto eq = arg.find('=');
    if (eq == std::string::npos) return {fallback, arg};
    return {arg.substr(0, eq), arg.substr(eq + 1)};
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    return in;
}

void setup_logging(const std::string& level_flag) {
    auto logger = spdlog::stderr_color_mt("infovol");
    spdlog::set_default_logger(logger);
    std::string level = level_flag;
    if (level.empty())
        if (const char* env = std::getenv("INFOVOL_LOG")) level = env;
    spdlog::set_level(level.empty() ? spdlog::level::info : spdlog::level::from_str(level));
}

struct FitFlags {
    int max_iter = 2000;
    double tol = 1e-8;
    int restarts = 5;

    void add(CLI::App* app) {
        app->add_option("--max-iter", max_iter, "Simplex iterations per start")->capture_default_str();
        app->add_option("--tol", tol, "Relative NLLH spread for convergence")->capture_default_str();
        app->add_option("--restarts", restarts, "Number of starting points")->capture_default_str();
    }
    garch::FitOptions options(std::uint64_t seed) const { return {max_iter, tol, restarts, seed, 0.5}; }
};

// ---------------------------------------------------------------------------

struct IngestArgs {
    std::string trades, quotes, price = "vwap", out;
    std::vector<std::string> signals;  // name:sum|mean:path
    bool header = false;
};

int run_ingest(const IngestArgs& a) {
    marketdata::CsvFormat fmt;
    fmt.has_header = a.header;
    fs::create_directories(a.out);
    const fs::path out(a.out);
    std::optional<TimeSeries> prices;
    std::size_t malformed = 0;
    if (a.price == "vwap") {
        if (a.trades.empty()) throw ConfigError("ingest: --price vwap needs --trades");
        auto in = open_input(a.trades);
        const auto parsed = marketdata::parse_trades(in, fmt);
        malformed = parsed.malformed_rows.size();
        prices = marketdata::vwap_bars(parsed.ticks);
    } else if (a.price == "midquote") {
        if (a.quotes.empty()) throw ConfigError("ingest: --price midquote needs --quotes");
        auto in = open_input(a.quotes);
        const auto parsed = marketdata::parse_quotes(in, fmt);
        malformed = parsed.malformed_rows.size();
        prices = marketdata::midquote_bars(parsed.ticks);
    }
    if (prices) {
        const auto returns = marketdata::log_returns(*prices);
        io::write_series_file((out / (a.price + "_price.csv")).string(), *prices);
        io::write_series_file((out / (a.price + "_returns.csv")).string(), returns);
        io::write_json_file((out / (a.price + "_price.json")).string(), io::series_envelope(*prices, a.price + "_price", malformed));
        io::write_json_file((out / (a.price + "_returns.json")).string(),
                            io::series_envelope(returns, a.price + "_returns", malformed));
    }
    for (const auto& spec : a.signals) {
        const auto c1 = spec.find(':');
        const auto c2 = spec.find(':', c1 == std::string::npos ? c1 : c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            throw ConfigError("--signal expects name:sum|mean:path, got '" + spec + "'");
        const std::string name = spec.substr(0, c1);
        const std::string agg = spec.substr(c1 + 1, c2 - c1 - 1);
        auto in = open_input(spec.substr(c2 + 1));
        const auto parsed = marketdata::parse_signal(in, fmt);
        if (agg != "sum" && agg != "mean") throw ConfigError("unknown aggregation '" + agg + "'");
        const auto series = marketdata::aggregate_signal(
            parsed.ticks, agg == "sum" ? marketdata::Aggregation::Sum : marketdata::Aggregation::Mean);
        io::write_series_file((out / ("signal_" + name + ".csv")).string(), series);
        io::write_json_file((out / ("signal_" + name + ".json")).string(),
                            io::series_envelope(series, name, parsed.malformed_rows.size()));
    }
    return 0;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
    std::string process = "poisson", out;
    double c = 1.0, lambda = 1.0, m = 0.0, s = 1.0;
    double sigma1 = 1.0, mu2 = 1.0, sigma2 = 1.0;
    std::size_t n = 1000;
    std::uint64_t seed = 0;
};

int run_simulate(const SimulateArgs& a) {
    mdh::MdhParams p;
    p.sigma1 = a.sigma1;
    p.mu2 = a.mu2;
    p.sigma2 = a.sigma2;
    p.n = a.n;
    p.seed = a.seed;
    if (a.process == "constant") p.info = mdh::ConstantInfo{a.c};
    else if (a.process == "poisson") p.info = mdh::PoissonInfo{a.lambda};
    else if (a.process == "lognormal") p.info = mdh::LogNormalInfo{a.m, a.s};
    else throw ConfigError("unknown information process '" + a.process + "'");
    const auto sample = mdh::simulate(p);
    if (a.out.empty()) {
        io::write_multi_series_csv(std::cout, {"returns", "volume", "info"},
                                   {&sample.returns, &sample.volume, &sample.info});
        return 0;
    }
    io::write_series_file(a.out + "_returns.csv", sample.returns);
    io::write_series_file(a.out + "_volume.csv", sample.volume);
    io::write_series_file(a.out + "_info.csv", sample.info);
    ordered_json env{{"schema_version", io::kSchemaVersion},
                     {"params",
                      {{"process", a.process},
                       {"c", a.c},
                       {"lambda", a.lambda},
                       {"m", a.m},
                       {"s", a.s},
                       {"sigma1", a.sigma1},
                       {"mu2", a.mu2},
                       {"sigma2", a.sigma2},
                       {"n", a.n},
                       {"seed", a.seed}}},
                     {"interval_minutes", 1},
                     {"count", a.n},
                     {"negative_volume_fraction", sample.negative_volume_fraction},
                     {"theoretical_r2v_cov", io::num(mdh::theoretical_r2v_cov(p))}};
    io::write_json_file(a.out + ".json", env);
    return 0;
}

// ---------------------------------------------------------------------------

struct InfoflowArgs {
    std::vector<std::string> returns, signals;
    int max_lag = 10, bins = 3, shuffles = 100, permutations = 200;
    std::size_t window = 30;
    int adf_max_lag = -1;
    std::string surrogate = "shuffle", out;
    std::uint64_t seed = 0;
};

int run_infoflow(const InfoflowArgs& a) {
    pipeline::PipelineConfig cfg;
    cfg.seed = a.seed;
    cfg.max_lag = a.max_lag;
    cfg.bins = a.bins;
    cfg.shuffles = a.shuffles;
    cfg.permutations = a.permutations;
    cfg.integrate_window = a.window;
    if (a.adf_max_lag >= 0) cfg.adf_max_lag = a.adf_max_lag;
    if (a.surrogate == "block") cfg.surrogate = infoflow::SurrogateMode::StationaryBlock;
    else if (a.surrogate != "shuffle") throw ConfigError("--surrogate must be shuffle or block");

    std::map<std::string, TimeSeries> returns, signals;
    for (const auto& r : a.returns) {
        auto [name, path] = split_named(r, "returns");
        returns[name] = io::read_series_file(path);
    }
    for (const auto& s : a.signals) {
        auto [name, path] = split_named(s, fs::path(s).stem().string());
        signals[name] = io::read_series_file(path);
    }
    ordered_json rep{{"schema_version", io::kSchemaVersion}};
    ordered_json corr = ordered_json::array(), te = ordered_json::array(), adf = ordered_json::object();
    const std::optional<int> adf_lag = cfg.adf_max_lag;
    for (const auto& [rname, r_raw] : returns) {
        TimeSeries r2 = r_raw;
        for (double& v : r2.values) v *= v;
        adf["squared_returns_" + rname] = io::to_json(infoflow::adf_test(r2, adf_lag));
        for (const auto& [sname, s_raw] : signals) {
            auto [r2a, s] = align(r2, s_raw);
            const std::string label = sname + "->" + rname;
            ordered_json row{{"signal", sname}, {"returns", rname}};
            row["lags"] = io::to_json(infoflow::permutation_pvalues(
                r2a, s, a.max_lag, a.permutations, derive_seed(a.seed, pipeline::detail::label_hash("perm/" + label))));
            if (a.window > 1 && a.window <= s.size()) {
                const auto integrated = infoflow::integrate_signal(s, a.window);
                const std::size_t w = a.window - 1;
                row["integrated_window"] = a.window;
                row["integrated_lags"] = io::to_json(
                    infoflow::lagged_crosscorr(r2a.slice(w, r2a.size() - w), integrated.slice(w, integrated.size() - w), a.max_lag));
            }
            corr.push_back(std::move(row));
            const auto ys = infoflow::discretize(r2a, a.bins);
            const auto xs = infoflow::discretize(s, a.bins);
            infoflow::EteOptions eo{a.shuffles, derive_seed(a.seed, pipeline::detail::label_hash("ete/" + label)),
                                    cfg.surrogate, 20.0};
            auto fwd = infoflow::effective_transfer_entropy(xs, ys, eo);
            fwd.source = sname;
            fwd.target = "squared_returns_" + rname;
            fwd.bins = a.bins;
            eo.seed = derive_seed(a.seed, pipeline::detail::label_hash("ete/" + rname + "->" + sname));
            auto rev = infoflow::effective_transfer_entropy(ys, xs, eo);
            rev.source = "squared_returns_" + rname;
            rev.target = sname;
            rev.bins = a.bins;
            te.push_back(io::to_json(fwd));
            te.push_back(io::to_json(rev));
        }
    }
    for (const auto& [sname, s] : signals) adf["signal_" + sname] = io::to_json(infoflow::adf_test(s, adf_lag));
    rep["correlations"] = std::move(corr);
    rep["transfer_entropy"] = std::move(te);
    rep["adf"] = std::move(adf);
    io::write_json_file(a.out, rep);
    return 0;
}

// ---------------------------------------------------------------------------

struct FitArgs {
    std::string family = "garch", returns, exog, out, path_out;
    std::size_t in_sample = 0;
    std::uint64_t seed = 0;
    FitFlags flags;
};

int run_fit(const FitArgs& a) {
    const garch::ModelSpec spec{garch::parse_family(a.family), !a.exog.empty()};
    const TimeSeries returns = io::read_series_file(a.returns);
    std::optional<TimeSeries> exog;
    if (spec.exogenous) {
        exog = io::read_series_file(a.exog);
        require_same_length(returns, *exog, "fit: --returns and --exog");
    }
    const std::size_t in_len = a.in_sample == 0 ? returns.size() : a.in_sample;
    if (in_len > returns.size()) throw ConfigError("fit: --in-sample exceeds series length");
    const TimeSeries r_in = returns.slice(0, in_len);
    std::optional<TimeSeries> x_in;
    if (exog) x_in = exog->slice(0, in_len);
    const auto fitted = garch::fit(spec, r_in, x_in ? &*x_in : nullptr, a.flags.options(a.seed));
    ordered_json j = io::to_json(fitted);
    j["returns_path"] = fs::absolute(a.returns).string();
    j["exog_path"] = spec.exogenous ? ordered_json(fs::absolute(a.exog).string()) : ordered_json(nullptr);
    j["in_sample_length"] = in_len;
    io::write_json_file(a.out, j);
    if (!a.path_out.empty()) {
        std::optional<TimeSeries> xs;
        if (exog) xs = garch::scaled_exog(fitted, *exog);
        const auto path = garch::filter(spec, fitted.params, returns, xs ? &*xs : nullptr, fitted.sigma0_sq);
        io::write_series_file(a.path_out, path.sigma_sq);
    }
    if (!fitted.converged) {
        spdlog::error("fit did not converge; best candidate written to {}", a.out);
        return static_cast<int>(ExitCode::Numeric);
    }
    return 0;
}

// ---------------------------------------------------------------------------

struct EvaluateArgs {
    std::vector<std::string> fits;
    std::string returns, exog, out;
    std::size_t split = 0;
};

int run_evaluate(const EvaluateArgs& a) {
    const TimeSeries returns = io::read_series_file(a.returns);
    ordered_json rep{{"schema_version", io::kSchemaVersion}};
    ordered_json models = ordered_json::array();
    struct Scored {
        garch::FitResult fit;
        std::string label;
        double nllh;
    };
    std::vector<Scored> scored;
    for (const auto& path : a.fits) {
        const auto j = io::read_json_file(path);
        const auto f = io::fit_from_json(j);
        const std::size_t split = a.split ? a.split : j.value("in_sample_length", f.nobs);
        std::optional<TimeSeries> exog;
        if (f.spec.exogenous) {
            std::string xp = a.exog;
            if (xp.empty() && j.contains("exog_path") && j["exog_path"].is_string()) xp = j["exog_path"].get<std::string>();
            if (xp.empty()) throw ConfigError("evaluate: " + path + " is exogenous; pass --exog");
            exog = io::read_series_file(xp);
            require_same_length(returns, *exog, "evaluate: --returns and exog");
        }
        const auto oos = garch::forecast_oos(f, returns, exog ? &*exog : nullptr, split);
        const TimeSeries r_out = returns.slice(split, returns.size() - split);
        TimeSeries r2 = r_out;
        for (double& v : r2.values) v *= v;
        const double l = garch::nllh(oos);
        models.push_back({{"fit", path},
                          {"model", f.spec.name()},
                          {"oos_length", r_out.size()},
                          {"oos_nllh", io::num(l)},
                          {"mz", io::to_json(eval::mz_regression(oos.sigma_sq, r_out))},
                          {"pcc", io::to_json(eval::pcc_test(oos.sigma_sq, r2))}});
        scored.push_back({f, path, l});
    }
    ordered_json lr = ordered_json::array();
    for (const auto& ext : scored) {
        if (!ext.fit.spec.exogenous) continue;
        for (const auto& base : scored) {
            if (base.fit.spec.exogenous || base.fit.spec.family != ext.fit.spec.family) continue;
            lr.push_back({{"base", base.label},
                          {"extended", ext.label},
                          {"nllh_base", io::num(base.nllh)},
                          {"nllh_extended", io::num(ext.nllh)},
                          {"lr", io::to_json(eval::lr_test(base.nllh, ext.nllh, 1))}});
        }
    }
    rep["models"] = std::move(models);
    rep["likelihood_ratio"] = std::move(lr);
    io::write_json_file(a.out, rep);
    return 0;
}

// ---------------------------------------------------------------------------

struct BootstrapArgs {
    std::string family = "garch", returns, exog, out, out_csv;
    int segments = 100;
    std::size_t length = 1000;
    std::uint64_t seed = 0;
    bool exclude_gaps = false;
    FitFlags flags;
};

int run_bootstrap(const BootstrapArgs& a) {
    const auto fam = garch::parse_family(a.family);
    const TimeSeries returns = io::read_series_file(a.returns);
    const TimeSeries exog = io::read_series_file(a.exog);
    require_same_length(returns, exog, "bootstrap: --returns and --exog");
    eval::BootstrapConfig bc;
    bc.segments = a.segments;
    bc.length = a.length;
    bc.seed = a.seed;
    bc.fit = a.flags.options(a.seed);
    bc.exclude_gap_segments = a.exclude_gaps;
    const auto b = eval::bootstrap_compare({fam, false}, {fam, true}, returns, &exog, bc);
    ordered_json j = io::to_json(b);
    j["schema_version"] = io::kSchemaVersion;
    j["family"] = a.family;
    io::write_json_file(a.out, j);
    if (!a.out_csv.empty()) {
        std::ofstream csv(a.out_csv);
        io::write_bootstrap_csv(csv, b);
    }
    return 0;
}

// ---------------------------------------------------------------------------

struct RunArgs {
    std::string config, out, skip;
    std::optional<std::uint64_t> seed;
};

int run_run(const RunArgs& a, unsigned threads) {
    const fs::path cfg_path(a.config);
    if (!fs::exists(cfg_path)) throw ConfigError("config file '" + a.config + "' does not exist");
    auto cfg = pipeline::config_from_json(io::read_json_file(a.config), cfg_path.parent_path());
    if (a.seed) cfg.seed = *a.seed;
    if (!a.out.empty()) cfg.output_dir = a.out;
    if (threads > 0) cfg.threads = threads;
    std::stringstream ss(a.skip);
    for (std::string s; std::getline(ss, s, ',');)
        if (!s.empty()) cfg.skip.insert(s);
    const auto outcome = pipeline::run_pipeline(cfg);
    if (outcome.code != ExitCode::Ok) {
        spdlog::error("stage '{}' failed: {}", outcome.failed_stage, outcome.message);
        return static_cast<int>(outcome.code);
    }
    spdlog::info("pipeline complete; manifest at {}", outcome.manifest_path.string());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"infovol: information flow and GARCH-family volatility analysis"};
    app.require_subcommand(1);
    unsigned threads = 0;
    std::string log_level;
    app.add_option("--threads", threads, "Cap on parallel work items (0 = hardware)");
    app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off (default: $INFOVOL_LOG or info)");

    IngestArgs ingest;
    auto* c_ingest = app.add_subcommand("ingest", "Build minute bars, log returns and aggregated signals");
    c_ingest->add_option("--trades", ingest.trades, "Trades CSV (timestamp_ms,price,quantity)");
    c_ingest->add_option("--quotes", ingest.quotes, "Quotes CSV (timestamp_ms,bid,ask)");
    c_ingest->add_option("--signal", ingest.signals, "Signal as name:sum|mean:path (repeatable)");
    c_ingest->add_option("--price", ingest.price, "vwap | midquote | none")->capture_default_str();
    c_ingest->add_flag("--header", ingest.header, "Input CSVs start with a header row");
    c_ingest->add_option("--out", ingest.out, "Output directory")->required();

    SimulateArgs sim;
    auto* c_sim = app.add_subcommand("simulate", "Simulate the returns/volume mixture model");
    c_sim->add_option("--process", sim.process, "constant | poisson | lognormal")->capture_default_str();
    c_sim->add_option("--c", sim.c, "Constant information level");
    c_sim->add_option("--lambda", sim.lambda, "Poisson intensity");
    c_sim->add_option("--m", sim.m, "Lognormal location");
    c_sim->add_option("--s", sim.s, "Lognormal scale");
    c_sim->add_option("--sigma1", sim.sigma1, "Per-event return scale")->capture_default_str();
    c_sim->add_option("--mu2", sim.mu2, "Per-event volume mean")->capture_default_str();
    c_sim->add_option("--sigma2", sim.sigma2, "Per-event volume scale")->capture_default_str();
    c_sim->add_option("--n", sim.n, "Series length")->capture_default_str();
    c_sim->add_option("--seed", sim.seed, "RNG seed")->required();
    c_sim->add_option("--out", sim.out, "Output prefix; writes <prefix>_{returns,volume,info}.csv and <prefix>.json");

    InfoflowArgs inf;
    auto* c_inf = app.add_subcommand("infoflow", "Correlation, transfer entropy and ADF report");
    c_inf->add_option("--returns", inf.returns, "Return series CSV, optionally name=path (repeatable)")->required();
    c_inf->add_option("--signal", inf.signals, "Signal series CSV, optionally name=path (repeatable)")->required();
    c_inf->add_option("--max-lag", inf.max_lag)->capture_default_str();
    c_inf->add_option("--bins", inf.bins)->capture_default_str();
    c_inf->add_option("--shuffles", inf.shuffles)->capture_default_str();
    c_inf->add_option("--permutations", inf.permutations)->capture_default_str();
    c_inf->add_option("--window", inf.window, "Integration window in minutes")->capture_default_str();
    c_inf->add_option("--adf-max-lag", inf.adf_max_lag, "ADF maximum lag (-1 = automatic)")->capture_default_str();
    c_inf->add_option("--surrogate", inf.surrogate, "shuffle | block")->capture_default_str();
    c_inf->add_option("--seed", inf.seed)->required();
    c_inf->add_option("--out", inf.out, "Report JSON path")->required();

    FitArgs fitargs;
    auto* c_fit = app.add_subcommand("fit", "Fit a GARCH-family model by maximum likelihood");
    c_fit->add_option("--family", fitargs.family, "garch | egarch | cgarch | tgarch")->capture_default_str();
    c_fit->add_option("--returns", fitargs.returns, "Return series CSV")->required();
    c_fit->add_option("--exog", fitargs.exog, "Exogenous series CSV (enables the exogenous term)");
    c_fit->add_option("--in-sample", fitargs.in_sample, "In-sample length (default: whole series)");
    c_fit->add_option("--seed", fitargs.seed)->required();
    c_fit->add_option("--out", fitargs.out, "FitResult JSON path")->required();
    c_fit->add_option("--path-out", fitargs.path_out, "Conditional variance path CSV over the whole series");
    fitargs.flags.add(c_fit);

    EvaluateArgs ev;
    auto* c_ev = app.add_subcommand("evaluate", "Out-of-sample comparison of fitted models");
    c_ev->add_option("--fit", ev.fits, "FitResult JSON (repeatable)")->required();
    c_ev->add_option("--returns", ev.returns, "Full return series CSV")->required();
    c_ev->add_option("--exog", ev.exog, "Exogenous series (overrides the path stored in the fit)");
    c_ev->add_option("--split", ev.split, "First out-of-sample index (default: fit in-sample length)");
    c_ev->add_option("--out", ev.out, "ComparisonReport JSON path")->required();

    BootstrapArgs bs;
    auto* c_bs = app.add_subcommand("bootstrap", "Bootstrap KS comparison of a model and its exogenous extension");
    c_bs->add_option("--family", bs.family)->capture_default_str();
    c_bs->add_option("--returns", bs.returns)->required();
    c_bs->add_option("--exog", bs.exog)->required();
    c_bs->add_option("--segments", bs.segments, "N")->capture_default_str();
    c_bs->add_option("--length", bs.length, "T (in-sample and out-of-sample length)")->capture_default_str();
    c_bs->add_option("--seed", bs.seed)->required();
    c_bs->add_flag("--exclude-gaps", bs.exclude_gaps, "Skip segments with more than 5% filled minutes");
    c_bs->add_option("--out", bs.out, "KS result JSON path")->required();
    c_bs->add_option("--out-csv", bs.out_csv, "Per-segment NLLH CSV path");
    bs.flags.add(c_bs);

    RunArgs run;
    auto* c_run = app.add_subcommand("run", "Run the configured pipeline");
    c_run->add_option("--config", run.config, "Pipeline config JSON")->required();
    c_run->add_option("--seed", run.seed, "Override the config seed");
    c_run->add_option("--out", run.out, "Override the output directory");
    c_run->add_option("--skip", run.skip, "Comma-separated stages to skip");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return static_cast<int>(ExitCode::Usage);
    }

    setup_logging(log_level);
    if (threads > 0) set_max_threads(threads);
    try {
        if (*c_ingest) return run_ingest(ingest);
        if (*c_sim) return run_simulate(sim);
        if (*c_inf) return run_infoflow(inf);
        if (*c_fit) return run_fit(fitargs);
        if (*c_ev) return run_evaluate(ev);
        if (*c_bs) return run_bootstrap(bs);
        if (*c_run) return run_run(run, threads);
    } catch (const Error& e) {
        spdlog::error("{}", e.what());
        return static_cast<int>(pipeline::exit_code_for(e.kind()));
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return static_cast<int>(ExitCode::Numeric);
    }
    return 0;
}
