#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "infovol/core/error.hpp"
#include "infovol/core/ols.hpp"
#include "infovol/core/parallel.hpp"
#include "infovol/core/rng.hpp"
#include "infovol/core/time_series.hpp"

namespace infovol::infoflow {

// ---------------------------------------------------------------------------
// Lagged cross-correlation
// ---------------------------------------------------------------------------

struct LagCorrelation {
    std::vector<int> lags;  // positive = external leads target
    std::vector<double> rho;
    std::vector<double> p_values;  // empty until permutation_pvalues fills it
};

namespace detail {

/// Pearson correlation of x[i] and y[i]; nullopt if either side has zero variance.
inline std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
    const auto n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) return std::nullopt;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

/// corr(target_t, external_{t-lag}) over the overlapping window.
inline std::optional<double> lag_corr(std::span<const double> target, std::span<const double> external, int lag) {
    const std::size_t n = target.size();
    const auto k = static_cast<std::size_t>(std::abs(lag));
    if (lag >= 0) return pearson(target.subspan(k), external.subspan(0, n - k));
    return pearson(target.subspan(0, n - k), external.subspan(k));
}

inline void check_lag_inputs(const TimeSeries& target, const TimeSeries& external, int max_lag) {
    require_same_length(target, external, "lagged_crosscorr");
    if (max_lag <= 0) throw ArgumentError("lagged_crosscorr: max_lag must be positive");
    if (target.size() <= 2 * static_cast<std::size_t>(max_lag))
        throw ArgumentError("lagged_crosscorr: series length must exceed 2*max_lag");
}

}  // namespace detail

/// rho(l) for l in [-max_lag, max_lag].
inline LagCorrelation lagged_crosscorr(const TimeSeries& target, const TimeSeries& external, int max_lag) {
    detail::check_lag_inputs(target, external, max_lag);
    LagCorrelation out;
    for (int lag = -max_lag; lag <= max_lag; ++lag) {
        const auto r = detail::lag_corr(target.view(), external.view(), lag);
        if (!r) throw DegenerateError("lagged_crosscorr: zero variance window at lag " + std::to_string(lag));
        out.lags.push_back(lag);
        out.rho.push_back(*r);
    }
    return out;
}

/// Adds permutation p-values: p(l) = (1 + #{|rho_perm(l)| >= |rho(l)|}) / (M + 1), where
/// rho_perm is computed after a random time permutation of the target.
inline LagCorrelation permutation_pvalues(const TimeSeries& target, const TimeSeries& external, int max_lag,
                                          int permutations, std::uint64_t seed) {
    if (permutations < 100) throw ArgumentError("permutation_pvalues: need at least 100 permutations");
    LagCorrelation out = lagged_crosscorr(target, external, max_lag);
    const std::size_t nlags = out.lags.size();
    const Rng master(seed);
    std::vector<std::vector<std::uint8_t>> exceed(static_cast<std::size_t>(permutations));
    parallel_for(exceed.size(), [&](std::size_t rep) {
        Rng rng = master.split(rep);
        std::vector<double> shuffled = target.values;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        auto& hits = exceed[rep];
        hits.assign(nlags, 0);
        for (std::size_t j = 0; j < nlags; ++j) {
            const auto r = detail::lag_corr(shuffled, external.view(), out.lags[j]);
            hits[j] = (r && std::abs(*r) >= std::abs(out.rho[j])) ? 1 : 0;
        }
    });
    out.p_values.assign(nlags, 0.0);
    for (std::size_t j = 0; j < nlags; ++j) {
        std::size_t k = 0;
        for (const auto& h : exceed) k += h[j];
        out.p_values[j] = static_cast<double>(k + 1) / static_cast<double>(permutations + 1);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Signal integration and discretisation
// ---------------------------------------------------------------------------

/// Trailing moving-window sum over `window` minutes. The first window-1 values are partial
/// sums and are flagged in gap_mask.
inline TimeSeries integrate_signal(const TimeSeries& signal, std::size_t window) {
    if (window == 0) throw ArgumentError("integrate_signal: window must be positive");
    if (window > signal.size()) throw ArgumentError("integrate_signal: window exceeds series length");
    TimeSeries out = signal;
    for (std::size_t t = 0; t < signal.size(); ++t) {
        const std::size_t first = t + 1 >= window ? t + 1 - window : 0;
        double s = 0.0;
        for (std::size_t u = first; u <= t; ++u) s += signal.values[u];
        out.values[t] = s;
        out.gap_mask[t] = signal.gap_mask[t] || t + 1 < window;
    }
    return out;
}

/// Quantile binning into {0..bins-1}. Edge k is the empirical k/bins quantile (order statistic
/// ceil(k n / bins)); values equal to an edge go to the lower bin.
inline std::vector<int> discretize(std::span<const double> series, int bins) {
    if (bins < 2) throw ArgumentError("discretize: need at least two bins");
    if (series.empty()) throw ArgumentError("discretize: empty series");
    std::vector<double> sorted(series.begin(), series.end());
    std::sort(sorted.begin(), sorted.end());
    if (sorted.front() == sorted.back()) throw DegenerateError("discretize: constant series");
    const std::size_t n = sorted.size();
    const auto b = static_cast<std::size_t>(bins);
    std::vector<double> edges;
    for (std::size_t k = 1; k < b; ++k) edges.push_back(sorted[(k * n + b - 1) / b - 1]);
    std::vector<int> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = static_cast<int>(std::lower_bound(edges.begin(), edges.end(), series[i]) - edges.begin());
    return out;
}

inline std::vector<int> discretize(const TimeSeries& series, int bins) { return discretize(series.view(), bins); }

// ---------------------------------------------------------------------------
// Transfer entropy
// ---------------------------------------------------------------------------

/// Plug-in transfer entropy source -> target in bits, Markov order 1 on both:
///   sum p(y', y, x) log2 [ p(y' | y, x) / p(y' | y) ].
inline double transfer_entropy(std::span<const int> source, std::span<const int> target) {
    if (source.size() != target.size())
        throw AlignmentError("transfer_entropy: symbol sequences differ", source.size(), target.size());
    if (source.size() < 3) throw ArgumentError("transfer_entropy: need at least three observations");
    const auto alphabet = [](std::span<const int> s) {
        int k = 0;
        for (int v : s) {
            if (v < 0) throw ArgumentError("transfer_entropy: negative symbol");
            k = std::max(k, v + 1);
        }
        return static_cast<std::size_t>(k);
    };
    const std::size_t kx = alphabet(source);
    const std::size_t ky = alphabet(target);

    std::vector<double> joint(ky * ky * kx, 0.0);  // (y_next, y, x)
    for (std::size_t t = 0; t + 1 < target.size(); ++t) {
        const auto yn = static_cast<std::size_t>(target[t + 1]);
        const auto y = static_cast<std::size_t>(target[t]);
        const auto x = static_cast<std::size_t>(source[t]);
        joint[(yn * ky + y) * kx + x] += 1.0;
    }
    std::vector<double> yx(ky * kx, 0.0), yny(ky * ky, 0.0), yc(ky, 0.0);
    for (std::size_t yn = 0; yn < ky; ++yn)
        for (std::size_t y = 0; y < ky; ++y)
            for (std::size_t x = 0; x < kx; ++x) {
                const double c = joint[(yn * ky + y) * kx + x];
                yx[y * kx + x] += c;
                yny[yn * ky + y] += c;
                yc[y] += c;
            }
    const auto total = static_cast<double>(target.size() - 1);
    double te = 0.0;
    for (std::size_t yn = 0; yn < ky; ++yn)
        for (std::size_t y = 0; y < ky; ++y)
            for (std::size_t x = 0; x < kx; ++x) {
                const double c = joint[(yn * ky + y) * kx + x];
                if (c == 0.0) continue;
                te += c * std::log2((c * yc[y]) / (yx[y * kx + x] * yny[yn * ky + y]));
            }
    return std::max(0.0, te / total);
}

enum class SurrogateMode {
    Shuffle,          // full random permutation of the source
    StationaryBlock,  // permutation of geometric-length blocks (mean `mean_block`)
};

struct TransferEntropyResult {
    double te = 0.0;   // bits
    double ete = 0.0;  // te minus mean surrogate te; not clamped
    double surrogate_mean = 0.0;
    double p_value = 1.0;
    std::string source;
    std::string target;
    int bins = 0;
    int shuffles = 0;
};

namespace detail {

inline std::vector<int> block_permutation(std::span<const int> x, double mean_block, Rng& rng) {
    std::geometric_distribution<std::size_t> len(1.0 / mean_block);
    std::vector<std::pair<std::size_t, std::size_t>> blocks;
    for (std::size_t i = 0; i < x.size();) {
        const std::size_t l = std::min(x.size() - i, len(rng) + 1);
        blocks.emplace_back(i, l);
        i += l;
    }
    std::shuffle(blocks.begin(), blocks.end(), rng);
    std::vector<int> out;
    out.reserve(x.size());
    for (auto [first, l] : blocks) out.insert(out.end(), x.begin() + first, x.begin() + first + l);
    return out;
}

}  // namespace detail

struct EteOptions {
    int shuffles = 100;
    std::uint64_t seed = 0;
    SurrogateMode mode = SurrogateMode::Shuffle;
    double mean_block = 20.0;
};

/// TE with its surrogate mean subtracted; p = (1 + #{surrogate te >= te}) / (M + 1).
/// Surrogate m uses the m-th child stream of `seed`.
inline TransferEntropyResult effective_transfer_entropy(std::span<const int> source, std::span<const int> target,
                                                        const EteOptions& opt) {
    if (opt.shuffles < 20) throw ArgumentError("effective_transfer_entropy: need at least 20 shuffles");
    if (opt.mode == SurrogateMode::StationaryBlock && !(opt.mean_block >= 1.0))
        throw ArgumentError("effective_transfer_entropy: mean block length must be >= 1");
    TransferEntropyResult res;
    res.te = transfer_entropy(source, target);
    res.shuffles = opt.shuffles;
    const Rng master(opt.seed);
    std::vector<double> surrogate(static_cast<std::size_t>(opt.shuffles));
    parallel_for(surrogate.size(), [&](std::size_t m) {
        Rng rng = master.split(m);
        std::vector<int> s;
        if (opt.mode == SurrogateMode::Shuffle) {
            s.assign(source.begin(), source.end());
            std::shuffle(s.begin(), s.end(), rng);
        } else {
            s = detail::block_permutation(source, opt.mean_block, rng);
        }
        surrogate[m] = transfer_entropy(s, target);
    });
    std::size_t exceed = 0;
    double sum = 0.0;
    for (double v : surrogate) {
        sum += v;
        if (v >= res.te) ++exceed;
    }
    res.surrogate_mean = sum / static_cast<double>(surrogate.size());
    res.ete = res.te - res.surrogate_mean;
    res.p_value = static_cast<double>(exceed + 1) / static_cast<double>(surrogate.size() + 1);
    return res;
}

// ---------------------------------------------------------------------------
// Augmented Dickey-Fuller
// ---------------------------------------------------------------------------

enum class AdfLevel { OnePercent, FivePercent, TenPercent };

struct AdfResult {
    double statistic = 0.0;
    int lag_order = 0;
    std::map<std::string, double> critical_values;  // "1%", "5%", "10%"
    AdfLevel level = AdfLevel::OnePercent;
    bool reject_unit_root = false;
    std::size_t nobs = 0;
};

/// Asymptotic MacKinnon critical values, constant-only regression.
inline constexpr double kAdfCritical1 = -3.43;
inline constexpr double kAdfCritical5 = -2.86;
inline constexpr double kAdfCritical10 = -2.57;

inline int adf_auto_lag(std::size_t n) {
    return static_cast<int>(std::floor(12.0 * std::pow(static_cast<double>(n) / 100.0, 0.25)));
}

/// Regression dy_t = c + g y_{t-1} + sum_{i<=p} phi_i dy_{t-i} + e_t; statistic is the t-ratio
/// of g. p minimises BIC over 0..max_lag on a common sample, then the chosen model is refit
/// on all usable observations. `max_lag` = nullopt selects floor(12 (n/100)^{1/4}).
inline AdfResult adf_test(std::span<const double> y, std::optional<int> max_lag = std::nullopt,
                          AdfLevel level = AdfLevel::OnePercent) {
    const std::size_t n = y.size();
    const int pmax = max_lag ? *max_lag : adf_auto_lag(n);
    if (pmax < 0) throw ArgumentError("adf_test: max_lag must be non-negative");
    if (n < 25 + static_cast<std::size_t>(pmax)) throw ArgumentError("adf_test: series too short");

    std::vector<double> dy(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) dy[i] = y[i + 1] - y[i];

    // rows i in [first, n-2]: response dy[i], regressors [1, y[i], dy[i-1], ..., dy[i-p]]
    auto design = [&](std::size_t first, int p, Eigen::MatrixXd& x, Eigen::VectorXd& r) {
        const auto rows = static_cast<Eigen::Index>(n - 1 - first);
        x.resize(rows, 2 + p);
        r.resize(rows);
        for (Eigen::Index row = 0; row < rows; ++row) {
            const std::size_t i = first + static_cast<std::size_t>(row);
            r(row) = dy[i];
            x(row, 0) = 1.0;
            x(row, 1) = y[i];
            for (int j = 1; j <= p; ++j) x(row, 1 + j) = dy[i - static_cast<std::size_t>(j)];
        }
    };

    int best_p = 0;
    if (pmax > 0) {
        Eigen::MatrixXd x;
        Eigen::VectorXd r;
        design(static_cast<std::size_t>(pmax), pmax, x, r);
        const Eigen::MatrixXd xtx = x.transpose() * x;
        const Eigen::VectorXd xtr = x.transpose() * r;
        const double rtr = r.squaredNorm();
        const auto nobs = static_cast<double>(x.rows());
        double best_bic = std::numeric_limits<double>::infinity();
        for (int p = 0; p <= pmax; ++p) {
            const Eigen::Index k = 2 + p;
            Eigen::LDLT<Eigen::MatrixXd> ldlt(xtx.topLeftCorner(k, k));
            if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) continue;
            const Eigen::VectorXd b = ldlt.solve(xtr.head(k));
            const double rss = rtr - b.dot(xtr.head(k));
            if (!(rss > 0.0)) continue;
            const double bic = nobs * std::log(rss / nobs) + static_cast<double>(k) * std::log(nobs);
            if (bic < best_bic) {
                best_bic = bic;
                best_p = p;
            }
        }
    }

    Eigen::MatrixXd x;
    Eigen::VectorXd r;
    design(static_cast<std::size_t>(best_p), best_p, x, r);
    const OlsFit fit = ols(x, r);
    if (!(fit.std_err(1) > 0.0) || !(fit.rss > 0.0)) throw DegenerateError("adf_test: degenerate regression");

    AdfResult res;
    res.statistic = fit.coef(1) / fit.std_err(1);
    res.lag_order = best_p;
    res.nobs = fit.nobs;
    res.critical_values = {{"1%", kAdfCritical1}, {"5%", kAdfCritical5}, {"10%", kAdfCritical10}};
    res.level = level;
    const double cv = level == AdfLevel::OnePercent ? kAdfCritical1
                      : level == AdfLevel::FivePercent ? kAdfCritical5
                                                       : kAdfCritical10;
    res.reject_unit_root = res.statistic < cv;
    return res;
}

inline AdfResult adf_test(const TimeSeries& series, std::optional<int> max_lag = std::nullopt,
                          AdfLevel level = AdfLevel::OnePercent) {
    return adf_test(series.view(), max_lag, level);
}

}  // namespace infovol::infoflow
