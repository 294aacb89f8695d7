#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "infovol/core/error.hpp"
#include "infovol/core/nelder_mead.hpp"
#include "infovol/core/parallel.hpp"
#include "infovol/core/rng.hpp"
#include "infovol/core/time_series.hpp"

namespace infovol::garch {

enum class Family { Garch, Egarch, Cgarch, Tgarch };

inline std::string_view to_string(Family f) {
    switch (f) {
        case Family::Garch: return "garch";
        case Family::Egarch: return "egarch";
        case Family::Cgarch: return "cgarch";
        case Family::Tgarch: return "tgarch";
    }
    return "?";
}

inline Family parse_family(std::string_view s) {
    std::string lower(s);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower == "garch") return Family::Garch;
    if (lower == "egarch") return Family::Egarch;
    if (lower == "cgarch") return Family::Cgarch;
    if (lower == "tgarch") return Family::Tgarch;
    throw ArgumentError("unknown model family '" + std::string(s) + "'");
}

/// Model family with a constant mean, optionally extended by an exogenous term gamma * I_{t-1}.
struct ModelSpec {
    Family family = Family::Garch;
    bool exogenous = false;

    std::string name() const { return std::string(to_string(family)) + (exogenous ? "x" : ""); }
    friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// Coefficients of all families; fields outside the family are ignored and left at zero.
///   GARCH   s2_t = omega + alpha e2_{t-1} + beta s2_{t-1} + gamma I_{t-1}
///   EGARCH  ln s2_t = omega + alpha (|z| - E|z|) + delta z + beta ln s2_{t-1} + gamma I_{t-1}
///   CGARCH  q_t = omega + rho q_{t-1} + theta (e2_{t-1} - s2_{t-1})
///           s2_t = q_t + alpha (e2_{t-1} - q_{t-1}) + beta (s2_{t-1} - q_{t-1}) + gamma I_{t-1}
///   TGARCH  s_t = omega + alpha |e_{t-1}| + phi |e_{t-1}| 1[e_{t-1} < 0] + beta s_{t-1} + gamma I_{t-1}
struct ParamVector {
    double mu = 0.0;
    double omega = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
    double delta = 0.0;  // EGARCH sign effect
    double rho = 0.0;    // CGARCH permanent-component persistence
    double theta = 0.0;  // CGARCH permanent-component shock loading
    double phi = 0.0;    // TGARCH negative-shock loading
};

/// Names of the free coefficients of a spec, in a stable order.
inline std::vector<std::string> param_names(const ModelSpec& spec) {
    std::vector<std::string> names{"mu", "omega", "alpha", "beta"};
    switch (spec.family) {
        case Family::Garch: break;
        case Family::Egarch: names.emplace_back("delta"); break;
        case Family::Cgarch:
            names.emplace_back("rho");
            names.emplace_back("theta");
            break;
        case Family::Tgarch: names.emplace_back("phi"); break;
    }
    if (spec.exogenous) names.emplace_back("gamma");
    return names;
}

inline double& param_ref(ParamVector& p, std::string_view name) {
    if (name == "mu") return p.mu;
    if (name == "omega") return p.omega;
    if (name == "alpha") return p.alpha;
    if (name == "beta") return p.beta;
    if (name == "gamma") return p.gamma;
    if (name == "delta") return p.delta;
    if (name == "rho") return p.rho;
    if (name == "theta") return p.theta;
    if (name == "phi") return p.phi;
    throw ArgumentError("unknown parameter '" + std::string(name) + "'");
}

inline double param_value(const ParamVector& p, std::string_view name) {
    return param_ref(const_cast<ParamVector&>(p), name);
}

/// Throws DomainError when `p` lies outside the family's constraint domain.
inline void check_constraints(const ModelSpec& spec, const ParamVector& p) {
    auto fail = [&](const char* what) { throw DomainError(spec.name() + ": " + what); };
    for (const auto& name : param_names(spec))
        if (!std::isfinite(param_value(p, name))) fail("non-finite parameter");
    switch (spec.family) {
        case Family::Garch:
            if (!(p.omega > 0.0)) fail("omega must be > 0");
            if (p.alpha < 0.0 || p.beta < 0.0) fail("alpha, beta must be >= 0");
            if (!(p.alpha + p.beta < 1.0)) fail("alpha + beta must be < 1");
            break;
        case Family::Egarch:
            if (!(std::abs(p.beta) < 1.0)) fail("|beta| must be < 1");
            break;
        case Family::Cgarch:
            if (!(p.omega > 0.0)) fail("omega must be > 0");
            if (!(p.rho > 0.0 && p.rho < 1.0)) fail("rho must lie in (0, 1)");
            if (p.alpha < 0.0 || p.beta < 0.0) fail("alpha, beta must be >= 0");
            if (!(p.alpha + p.beta < 1.0)) fail("alpha + beta must be < 1");
            break;
        case Family::Tgarch:
            if (!(p.omega > 0.0)) fail("omega must be > 0");
            if (p.alpha < 0.0 || p.beta < 0.0 || p.phi < 0.0) fail("alpha, beta, phi must be >= 0");
            if (!(p.alpha + 0.5 * p.phi + p.beta < 1.0)) fail("alpha + phi/2 + beta must be < 1");
            break;
    }
    if (spec.exogenous && spec.family != Family::Egarch && p.gamma < 0.0) fail("gamma must be >= 0");
}

inline constexpr double kMeanAbsNormal = 0.79788456080286535588;  // E|z| = sqrt(2/pi)

/// Recursion state carried from t to t+1.
struct State {
    double s2 = 0.0;  // conditional variance
    double sd = 0.0;  // conditional standard deviation (TGARCH recursion variable)
    double q = 0.0;   // permanent component (CGARCH)
    double h = 0.0;   // log variance (EGARCH recursion variable)
};

inline State initial_state(double sigma0_sq) {
    return {sigma0_sq, std::sqrt(sigma0_sq), sigma0_sq, std::log(sigma0_sq)};
}

/// One step of the variance recursion: state at t, residual e_t and exogenous x_t -> state at t+1.
inline State step(Family family, const ParamVector& p, const State& s, double e, double x) {
    State n;
    switch (family) {
        case Family::Garch:
            n.s2 = p.omega + p.alpha * e * e + p.beta * s.s2 + p.gamma * x;
            break;
        case Family::Egarch: {
            const double z = e * std::exp(-0.5 * s.h);
            n.h = p.omega + p.alpha * (std::abs(z) - kMeanAbsNormal) + p.delta * z + p.beta * s.h + p.gamma * x;
            n.s2 = std::exp(n.h);
            break;
        }
        case Family::Cgarch:
            n.q = p.omega + p.rho * s.q + p.theta * (e * e - s.s2);
            n.s2 = n.q + p.alpha * (e * e - s.q) + p.beta * (s.s2 - s.q) + p.gamma * x;
            break;
        case Family::Tgarch: {
            const double a = std::abs(e);
            n.sd = p.omega + p.alpha * a + (e < 0.0 ? p.phi * a : 0.0) + p.beta * s.sd + p.gamma * x;
            n.s2 = n.sd * n.sd;
            if (!(n.sd > 0.0)) n.s2 = std::numeric_limits<double>::quiet_NaN();
            return n;
        }
    }
    n.sd = std::sqrt(n.s2);
    return n;
}

/// Population variance of the returns about their sample mean; the default sigma_0^2.
inline double default_sigma0_sq(std::span<const double> r) {
    if (r.empty()) throw ArgumentError("empty return series");
    double m = 0.0;
    for (double v : r) m += v;
    m /= static_cast<double>(r.size());
    double ss = 0.0;
    for (double v : r) ss += (v - m) * (v - m);
    return ss / static_cast<double>(r.size());
}

/// Runs the recursion over `r`, calling visit(t, e_t, state_t). Returns the index of the first
/// non-finite or non-positive variance, or nullopt.
template <class Visit>
std::optional<std::size_t> run_recursion(const ModelSpec& spec, const ParamVector& p, std::span<const double> r,
                                         std::span<const double> exog, double sigma0_sq, Visit&& visit) {
    State s = initial_state(sigma0_sq);
    const bool use_exog = spec.exogenous;
    for (std::size_t t = 0; t < r.size(); ++t) {
        if (!(s.s2 > 0.0) || !std::isfinite(s.s2)) return t;
        const double e = r[t] - p.mu;
        visit(t, e, s);
        if (t + 1 < r.size()) s = step(spec.family, p, s, e, use_exog ? exog[t] : 0.0);
    }
    return std::nullopt;
}

struct VariancePath {
    TimeSeries sigma_sq;
    TimeSeries residuals;
    TimeSeries q;  // CGARCH only; empty otherwise
};

namespace detail {

inline void check_exog(const ModelSpec& spec, const TimeSeries& returns, const TimeSeries* exog) {
    if (spec.exogenous) {
        if (exog == nullptr) throw ArgumentError(spec.name() + ": exogenous series required");
        require_same_length(returns, *exog, spec.name());
    }
}

inline std::span<const double> exog_view(const TimeSeries* exog) {
    return exog ? exog->view() : std::span<const double>{};
}

}  // namespace detail

/// Conditional variance path. sigma_sq[0] = sigma0_sq (default: variance of the returns);
/// sigma_sq[t] uses residual, variance and exog at t-1 only.
inline VariancePath filter(const ModelSpec& spec, const ParamVector& params, const TimeSeries& returns,
                           const TimeSeries* exog = nullptr, std::optional<double> sigma0_sq = std::nullopt) {
    check_constraints(spec, params);
    detail::check_exog(spec, returns, exog);
    if (returns.empty()) return {};
    const double s0 = sigma0_sq ? *sigma0_sq : default_sigma0_sq(returns.view());
    if (!(s0 > 0.0)) throw DomainError("sigma0_sq must be positive");
    VariancePath out;
    out.sigma_sq = returns;
    out.residuals = returns;
    if (spec.family == Family::Cgarch) out.q = returns;
    const auto bad = run_recursion(spec, params, returns.view(), detail::exog_view(exog), s0,
                                   [&](std::size_t t, double e, const State& s) {
                                       out.sigma_sq.values[t] = s.s2;
                                       out.residuals.values[t] = e;
                                       if (spec.family == Family::Cgarch) out.q.values[t] = s.q;
                                   });
    if (bad) throw NumericError(spec.name() + ": non-finite or non-positive conditional variance", *bad);
    return out;
}

inline double nllh_term(double e, double s2) {
    constexpr double half_log_2pi = 0.91893853320467274178;
    return 0.5 * std::log(s2) + half_log_2pi + e * e / (2.0 * s2);
}

/// Gaussian negative log-likelihood of the whole path, or +inf if the recursion breaks down.
/// No constraint check; used inside the optimiser.
inline double nllh_unchecked(const ModelSpec& spec, const ParamVector& params, std::span<const double> r,
                             std::span<const double> exog, double sigma0_sq) {
    double sum = 0.0;
    const auto bad = run_recursion(spec, params, r, exog, sigma0_sq,
                                   [&](std::size_t, double e, const State& s) { sum += nllh_term(e, s.s2); });
    if (bad || !std::isfinite(sum)) return std::numeric_limits<double>::infinity();
    return sum;
}

/// sum_t [ ln(s2_t)/2 + ln(2 pi)/2 + e_t^2 / (2 s2_t) ].
inline double nllh(const ModelSpec& spec, const ParamVector& params, const TimeSeries& returns,
                   const TimeSeries* exog = nullptr, std::optional<double> sigma0_sq = std::nullopt) {
    const VariancePath path = filter(spec, params, returns, exog, sigma0_sq);
    double sum = 0.0;
    for (std::size_t t = 0; t < returns.size(); ++t) sum += nllh_term(path.residuals[t], path.sigma_sq[t]);
    return sum;
}

/// NLLH of an already-filtered path.
inline double nllh(const VariancePath& path) {
    double sum = 0.0;
    for (std::size_t t = 0; t < path.sigma_sq.size(); ++t) sum += nllh_term(path.residuals[t], path.sigma_sq[t]);
    return sum;
}

// ---------------------------------------------------------------------------
// Fitting
// ---------------------------------------------------------------------------

struct FitOptions {
    int max_iter = 2000;
    double tol = 1e-8;
    int restarts = 5;
    std::uint64_t seed = 0;
    double jitter = 0.5;  // sd of start perturbations in unconstrained coordinates
};

struct FitResult {
    ModelSpec spec;
    ParamVector params;
    double in_sample_nllh = std::numeric_limits<double>::infinity();
    bool converged = false;
    int iterations = 0;     // simplex iterations summed over all starts
    int restarts_used = 0;  // starting points evaluated
    int best_start = -1;
    double sigma0_sq = 0.0;
    double exog_scale = 1.0;  // exog is divided by this before entering the recursion
    std::size_t nobs = 0;
    std::vector<double> start_nllh;  // objective at each starting point
};

namespace detail {

inline double logistic(double u) { return 1.0 / (1.0 + std::exp(-u)); }
inline double logit(double p) { return std::log(p / (1.0 - p)); }

/// Unconstrained coordinates <-> ParamVector. Positive quantities use log, (0,1)-type sums use
/// logistic stick-breaking, gamma >= 0 uses a square so gamma = 0 is reachable.
struct Transform {
    ModelSpec spec;
    double mean = 0.0;
    double var = 1.0;

    double sd() const { return std::sqrt(var); }

    ParamVector to_params(std::span<const double> u) const {
        ParamVector p;
        std::size_t i = 0;
        p.mu = mean + 0.1 * sd() * u[i++];
        switch (spec.family) {
            case Family::Garch: {
                p.omega = var * std::exp(u[i++]);
                const double s = logistic(u[i++]);
                p.alpha = s * logistic(u[i++]);
                p.beta = s - p.alpha;
                break;
            }
            case Family::Egarch:
                p.omega = u[i++];
                p.alpha = u[i++];
                p.delta = u[i++];
                p.beta = std::tanh(u[i++]);
                break;
            case Family::Cgarch: {
                p.omega = var * std::exp(u[i++]);
                p.rho = logistic(u[i++]);
                const double s = logistic(u[i++]);
                p.alpha = s * logistic(u[i++]);
                p.beta = s - p.alpha;
                p.theta = 0.1 * u[i++];
                break;
            }
            case Family::Tgarch: {
                p.omega = sd() * std::exp(u[i++]);
                const double s = logistic(u[i++]);
                const double ea = std::exp(u[i++]);
                const double ep = std::exp(u[i++]);
                const double total = ea + ep + 1.0;
                p.alpha = s * ea / total;
                p.phi = 2.0 * s * ep / total;
                p.beta = s / total;
                break;
            }
        }
        if (spec.exogenous) {
            const double g = u[i++];
            if (spec.family == Family::Egarch) p.gamma = g;
            else if (spec.family == Family::Tgarch) p.gamma = sd() * g * g;
            else p.gamma = var * g * g;
        }
        return p;
    }

    std::vector<double> to_unconstrained(const ParamVector& p) const {
        std::vector<double> u;
        u.push_back((p.mu - mean) / (0.1 * sd()));
        switch (spec.family) {
            case Family::Garch:
                u.push_back(std::log(p.omega / var));
                u.push_back(logit(p.alpha + p.beta));
                u.push_back(logit(p.alpha / (p.alpha + p.beta)));
                break;
            case Family::Egarch:
                u.push_back(p.omega);
                u.push_back(p.alpha);
                u.push_back(p.delta);
                u.push_back(std::atanh(p.beta));
                break;
            case Family::Cgarch:
                u.push_back(std::log(p.omega / var));
                u.push_back(logit(p.rho));
                u.push_back(logit(p.alpha + p.beta));
                u.push_back(logit(p.alpha / (p.alpha + p.beta)));
                u.push_back(p.theta / 0.1);
                break;
            case Family::Tgarch: {
                const double s = p.alpha + 0.5 * p.phi + p.beta;
                u.push_back(std::log(p.omega / sd()));
                u.push_back(logit(s));
                u.push_back(std::log(p.alpha / p.beta));
                u.push_back(std::log(0.5 * p.phi / p.beta));
                break;
            }
        }
        if (spec.exogenous) {
            if (spec.family == Family::Egarch) u.push_back(p.gamma);
            else if (spec.family == Family::Tgarch) u.push_back(std::sqrt(p.gamma / sd()));
            else u.push_back(std::sqrt(p.gamma / var));
        }
        return u;
    }
};

/// Moment-based starting point: alpha = 0.05, beta = 0.90, omega from the sample variance.
inline ParamVector moment_start(const ModelSpec& spec, double mean, double var) {
    ParamVector p;
    p.mu = mean;
    p.alpha = 0.05;
    p.beta = 0.90;
    switch (spec.family) {
        case Family::Garch: p.omega = var * (1.0 - p.alpha - p.beta); break;
        case Family::Egarch: p.omega = (1.0 - p.beta) * std::log(var); break;
        case Family::Cgarch:
            p.rho = 0.99;
            p.theta = 0.02;
            p.omega = var * (1.0 - p.rho);
            break;
        case Family::Tgarch:
            p.phi = 0.02;
            p.omega = std::sqrt(var) * (1.0 - (p.alpha + 0.5 * p.phi) * kMeanAbsNormal - p.beta);
            break;
    }
    if (spec.exogenous) {
        if (spec.family == Family::Egarch) p.gamma = 0.01;
        else if (spec.family == Family::Tgarch) p.gamma = 0.01 * std::sqrt(var);
        else p.gamma = 0.01 * var;
    }
    return p;
}

inline double exog_scale_of(std::span<const double> x) {
    double m = 0.0;
    for (double v : x) m += v;
    m /= static_cast<double>(x.size());
    return (std::isfinite(m) && std::abs(m) > 0.0) ? std::abs(m) : 1.0;
}

}  // namespace detail

/// Maximum-likelihood fit over the whole of `returns` by simplex descent in unconstrained
/// coordinates, from `restarts` starting points (the first un-jittered). Start k draws its
/// jitter from child stream k of `options.seed`. The best converged start wins; if none
/// converges the best candidate is returned with converged = false.
inline FitResult fit(const ModelSpec& spec, const TimeSeries& returns, const TimeSeries* exog = nullptr,
                     const FitOptions& options = {}) {
    detail::check_exog(spec, returns, exog);
    if (returns.size() < 200) throw ArgumentError("fit: need at least 200 returns");
    if (options.restarts < 1) throw ArgumentError("fit: restarts must be >= 1");
    const auto r = returns.view();

    FitResult res;
    res.spec = spec;
    res.nobs = r.size();
    res.sigma0_sq = default_sigma0_sq(r);
    double mean = 0.0;
    for (double v : r) mean += v;
    mean /= static_cast<double>(r.size());
    const auto [lo, hi] = std::minmax_element(r.begin(), r.end());
    if (*lo == *hi || !(res.sigma0_sq > 0.0)) throw DegenerateError("fit: constant return series");

    std::vector<double> x;
    if (spec.exogenous) {
        res.exog_scale = detail::exog_scale_of(exog->view());
        x.reserve(exog->size());
        for (double v : exog->values) x.push_back(v / res.exog_scale);
    }

    const detail::Transform tf{spec, mean, res.sigma0_sq};
    const std::vector<double> base = tf.to_unconstrained(detail::moment_start(spec, mean, res.sigma0_sq));
    auto objective = [&](const std::vector<double>& u) {
        return nllh_unchecked(spec, tf.to_params(u), r, x, res.sigma0_sq);
    };

    NelderMeadOptions nm;
    nm.max_iter = options.max_iter;
    nm.tol = options.tol;
    const auto starts = static_cast<std::size_t>(options.restarts);
    std::vector<NelderMeadResult> runs(starts);
    res.start_nllh.assign(starts, 0.0);
    const Rng master(options.seed);
    parallel_for(starts, [&](std::size_t k) {
        std::vector<double> u0 = base;
        if (k > 0) {
            Rng rng = master.split(k);
            for (double& v : u0) v += options.jitter * rng.normal();
        }
        res.start_nllh[k] = objective(u0);
        runs[k] = nelder_mead(objective, u0, nm);
    });

    int best = -1;
    for (std::size_t k = 0; k < starts; ++k) {
        res.iterations += runs[k].iterations;
        const auto& cand = runs[k];
        if (!std::isfinite(cand.f)) continue;
        const bool better = best < 0 || (cand.converged && !runs[static_cast<std::size_t>(best)].converged) ||
                            (cand.converged == runs[static_cast<std::size_t>(best)].converged &&
                             cand.f < runs[static_cast<std::size_t>(best)].f);
        if (better) best = static_cast<int>(k);
    }
    res.restarts_used = static_cast<int>(starts);
    if (best < 0) return res;
    const auto& win = runs[static_cast<std::size_t>(best)];
    res.best_start = best;
    res.params = tf.to_params(win.x);
    res.in_sample_nllh = win.f;
    res.converged = win.converged;
    if (res.converged) {
        try {
            check_constraints(spec, res.params);
        } catch (const DomainError&) {
            res.converged = false;  // saturated transform landed on a boundary
        }
    }
    return res;
}

/// Scaled copy of an exogenous series as seen by a fitted model.
inline TimeSeries scaled_exog(const FitResult& fit, const TimeSeries& exog) {
    TimeSeries out = exog;
    for (double& v : out.values) v /= fit.exog_scale;
    return out;
}

/// Filters the whole series with the fitted parameters (warm start through the in-sample
/// part) and returns the path over [split, n). Each variance uses information through t-1.
inline VariancePath forecast_oos(const FitResult& fit, const TimeSeries& full_returns, const TimeSeries* exog,
                                 std::size_t split) {
    if (split > full_returns.size()) throw ArgumentError("forecast_oos: split out of range");
    detail::check_exog(fit.spec, full_returns, exog);
    const std::size_t oos = full_returns.size() - split;
    if (oos == 0) return {};
    std::optional<TimeSeries> x;
    if (fit.spec.exogenous) x = scaled_exog(fit, *exog);
    const VariancePath all = filter(fit.spec, fit.params, full_returns, x ? &*x : nullptr, fit.sigma0_sq);
    VariancePath out;
    out.sigma_sq = all.sigma_sq.slice(split, oos);
    out.residuals = all.residuals.slice(split, oos);
    if (!all.q.empty()) out.q = all.q.slice(split, oos);
    return out;
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

struct SimulatedPath {
    TimeSeries returns;
    TimeSeries sigma_sq;
};

/// Simulates r_t = mu + sqrt(s2_t) z_t with Gaussian z_t. `exog` (if the spec is exogenous)
/// must have length n and enters unscaled. The first `burn_in` draws are discarded; during
/// burn-in the exogenous input is held at its sample mean.
inline SimulatedPath simulate(const ModelSpec& spec, const ParamVector& params, std::size_t n, std::uint64_t seed,
                              const TimeSeries* exog = nullptr, std::size_t burn_in = 1000) {
    check_constraints(spec, params);
    if (spec.exogenous && (exog == nullptr || exog->size() != n))
        throw ArgumentError("simulate: exogenous series of length n required");
    const double xbar = spec.exogenous ? detail::exog_scale_of(exog->view()) : 0.0;
    double s0 = 0.0;
    switch (spec.family) {
        case Family::Garch: s0 = (params.omega + params.gamma * xbar) / (1.0 - params.alpha - params.beta); break;
        case Family::Egarch: s0 = std::exp((params.omega + params.gamma * xbar) / (1.0 - params.beta)); break;
        case Family::Cgarch: s0 = params.omega / (1.0 - params.rho); break;
        case Family::Tgarch: {
            const double sd = params.omega / (1.0 - (params.alpha + 0.5 * params.phi) * kMeanAbsNormal - params.beta);
            s0 = sd * sd;
            break;
        }
    }
    if (!(s0 > 0.0) || !std::isfinite(s0)) s0 = 1e-4;
    Rng rng(seed);
    State s = initial_state(s0);
    SimulatedPath out;
    out.returns.values.reserve(n);
    out.sigma_sq.values.reserve(n);
    for (std::size_t t = 0; t < burn_in + n; ++t) {
        const double e = std::sqrt(s.s2) * rng.normal();
        if (t >= burn_in) {
            out.returns.values.push_back(params.mu + e);
            out.sigma_sq.values.push_back(s.s2);
        }
        const double x = !spec.exogenous ? 0.0 : (t < burn_in ? xbar : exog->values[t - burn_in]);
        s = step(spec.family, params, s, e, x);
        if (!(s.s2 > 0.0) || !std::isfinite(s.s2)) throw NumericError("simulate: variance broke down", t);
    }
    out.returns.gap_mask.assign(n, false);
    out.sigma_sq.gap_mask.assign(n, false);
    return out;
}

}  // namespace infovol::garch
