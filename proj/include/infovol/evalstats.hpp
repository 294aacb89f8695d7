#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "infovol/core/error.hpp"
#include "infovol/core/parallel.hpp"
#include "infovol/core/rng.hpp"
#include "infovol/core/special.hpp"
#include "infovol/core/time_series.hpp"
#include "infovol/garch.hpp"

namespace infovol::eval {

/// r_t^2 = a * sigma_t^2 + b + u_t
struct MzResult {
    double a = 0.0;
    double b = 0.0;
    double r_squared = 0.0;
    double f_stat = 0.0;
    double f_p = 1.0;
    std::size_t n = 0;
};

/// Mincer-Zarnowitz regression of squared returns on predicted variance, with the F-test of
/// a = 0 on (1, n-2) degrees of freedom.
inline MzResult mz_regression(const TimeSeries& sigma_sq, const TimeSeries& returns) {
    require_same_length(sigma_sq, returns, "mz_regression");
    const std::size_t n = returns.size();
    if (n < 3) throw ArgumentError("mz_regression: need at least 3 observations");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += sigma_sq[i];
        my += returns[i] * returns[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = sigma_sq[i] - mx;
        const double dy = returns[i] * returns[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (!(sxx > 0.0)) throw DegenerateError("mz_regression: constant regressor");
    if (!(syy > 0.0)) throw DegenerateError("mz_regression: constant squared returns");
    MzResult res;
    res.n = n;
    res.a = sxy / sxx;
    res.b = my - res.a * mx;
    res.r_squared = std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0);
    const double df2 = static_cast<double>(n - 2);
    if (res.r_squared >= 1.0) {
        res.f_stat = std::numeric_limits<double>::infinity();
        res.f_p = 0.0;
    } else {
        res.f_stat = res.r_squared / (1.0 - res.r_squared) * df2;
        res.f_p = special::f_sf(res.f_stat, 1.0, df2);
    }
    return res;
}

struct PccResult {
    double rho = 0.0;
    double p_value = 1.0;
};

/// Pearson correlation with a two-sided t-test on n-2 degrees of freedom.
inline PccResult pcc_test(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw AlignmentError("pcc_test: series are not aligned", x.size(), y.size());
    const std::size_t n = x.size();
    if (n < 3) throw ArgumentError("pcc_test: need at least 3 observations");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) throw DegenerateError("pcc_test: zero variance");
    PccResult res;
    res.rho = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    const double df = static_cast<double>(n - 2);
    const double denom = 1.0 - res.rho * res.rho;
    if (denom <= 0.0) {
        res.p_value = 0.0;
    } else {
        res.p_value = special::student_t_two_sided(res.rho * std::sqrt(df / denom), df);
    }
    return res;
}

inline PccResult pcc_test(const TimeSeries& x, const TimeSeries& y) { return pcc_test(x.view(), y.view()); }

struct LrResult {
    double statistic = 0.0;      // clamped at 0
    double raw_statistic = 0.0;  // 2 (nllh_restricted - nllh_extended), unclamped
    int df = 1;
    double p_value = 1.0;
};

/// Likelihood-ratio test from two negative log-likelihoods; p from chi-squared(df).
inline LrResult lr_test(double nllh_restricted, double nllh_extended, int df = 1) {
    if (!std::isfinite(nllh_restricted) || !std::isfinite(nllh_extended))
        throw ArgumentError("lr_test: non-finite log-likelihood");
    if (df < 1) throw ArgumentError("lr_test: df must be >= 1");
    LrResult res;
    res.df = df;
    res.raw_statistic = 2.0 * (nllh_restricted - nllh_extended);
    res.statistic = std::max(0.0, res.raw_statistic);
    res.p_value = special::chi2_sf(res.statistic, df);
    return res;
}

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

/// Two-sample Kolmogorov-Smirnov: sup |F_a - F_b|, p from the asymptotic Kolmogorov law at
/// sqrt(n_a n_b / (n_a + n_b)) * D.
inline KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw ArgumentError("ks_two_sample: empty sample");
    std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    const auto na = static_cast<double>(sa.size());
    const auto nb = static_cast<double>(sb.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < sa.size() && j < sb.size()) {
        const double x = std::min(sa[i], sb[j]);
        while (i < sa.size() && sa[i] == x) ++i;
        while (j < sb.size() && sb[j] == x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    KsResult res;
    res.statistic = d;
    res.p_value = special::kolmogorov_sf(std::sqrt(na * nb / (na + nb)) * d);
    return res;
}

// ---------------------------------------------------------------------------
// Bootstrap comparison
// ---------------------------------------------------------------------------

struct BootstrapConfig {
    int segments = 100;  // N
    std::size_t length = 1000;  // T, for both the in-sample and out-of-sample halves
    std::uint64_t seed = 0;
    garch::FitOptions fit;
    bool exclude_gap_segments = false;
    double max_gap_fraction = 0.05;
};

struct BootstrapComparison {
    int n_segments = 0;
    std::size_t seg_train = 0;
    std::size_t seg_test = 0;
    std::vector<std::size_t> split_points;  // index of the first out-of-sample point
    std::vector<double> nllh_base;
    std::vector<double> nllh_extended;
    std::vector<std::size_t> kept_splits;  // split points of segments that entered the samples
    double ks_stat = 0.0;
    double ks_p = 1.0;
    int failed_segments = 0;
    int gap_excluded = 0;
};

namespace detail {

/// Predictive NLLH of the second half of `segment` after fitting on the first half.
inline std::optional<double> segment_nllh(const garch::ModelSpec& spec, const TimeSeries& segment,
                                          const TimeSeries* exog_segment, std::size_t train,
                                          const garch::FitOptions& options) {
    try {
        const TimeSeries in_r = segment.slice(0, train);
        std::optional<TimeSeries> in_x;
        if (spec.exogenous) in_x = exog_segment->slice(0, train);
        const auto fitted = garch::fit(spec, in_r, in_x ? &*in_x : nullptr, options);
        if (!fitted.converged) return std::nullopt;
        const auto path = garch::forecast_oos(fitted, segment, spec.exogenous ? exog_segment : nullptr, train);
        const double v = garch::nllh(path);
        if (!std::isfinite(v)) return std::nullopt;
        return v;
    } catch (const Error&) {
        return std::nullopt;
    }
}

}  // namespace detail

/// Draws N split points s uniformly (with replacement) so that [s-T, s+T) fits the series,
/// fits both models on [s-T, s) and scores each on [s, s+T). Segments where either fit fails
/// are dropped from both samples. Segment i uses child stream i of the seed for its fits.
inline BootstrapComparison bootstrap_compare(const garch::ModelSpec& spec_base, const garch::ModelSpec& spec_ext,
                                             const TimeSeries& returns, const TimeSeries* exog,
                                             const BootstrapConfig& config) {
    const std::size_t t = config.length;
    if (config.segments < 10) throw ArgumentError("bootstrap_compare: need at least 10 segments");
    if (t == 0 || returns.size() < 2 * t) throw ArgumentError("bootstrap_compare: series shorter than 2T");
    if ((spec_base.exogenous || spec_ext.exogenous) && exog == nullptr)
        throw ArgumentError("bootstrap_compare: exogenous series required");
    if (exog) require_same_length(returns, *exog, "bootstrap_compare");

    BootstrapComparison out;
    out.n_segments = config.segments;
    out.seg_train = t;
    out.seg_test = t;
    const Rng master(config.seed);
    Rng draws = master.split(0);
    for (int i = 0; i < config.segments; ++i) out.split_points.push_back(draws.uniform_int(t, returns.size() - t));

    const auto count = static_cast<std::size_t>(config.segments);
    std::vector<std::optional<double>> base(count), ext(count);
    std::vector<std::uint8_t> excluded(count, 0);
    parallel_for(count, [&](std::size_t i) {
        const std::size_t s = out.split_points[i];
        const TimeSeries seg = returns.slice(s - t, 2 * t);
        if (config.exclude_gap_segments &&
            static_cast<double>(seg.gap_count()) > config.max_gap_fraction * static_cast<double>(seg.size())) {
            excluded[i] = 1;
            return;
        }
        std::optional<TimeSeries> xseg;
        if (exog) xseg = exog->slice(s - t, 2 * t);
        const std::uint64_t seg_seed = derive_seed(config.seed, i + 1);
        garch::FitOptions fo = config.fit;
        fo.seed = derive_seed(seg_seed, 0);
        base[i] = detail::segment_nllh(spec_base, seg, xseg ? &*xseg : nullptr, t, fo);
        fo.seed = derive_seed(seg_seed, 1);
        ext[i] = detail::segment_nllh(spec_ext, seg, xseg ? &*xseg : nullptr, t, fo);
    });

    for (std::size_t i = 0; i < count; ++i) {
        if (excluded[i]) {
            ++out.gap_excluded;
            continue;
        }
        if (!base[i] || !ext[i]) {
            ++out.failed_segments;
            continue;
        }
        out.nllh_base.push_back(*base[i]);
        out.nllh_extended.push_back(*ext[i]);
        out.kept_splits.push_back(out.split_points[i]);
    }
    const int attempted = config.segments - out.gap_excluded;
    if (attempted <= 0 || 2 * out.failed_segments > attempted || out.nllh_base.empty())
        throw ReliabilityError("bootstrap_compare: " + std::to_string(out.failed_segments) + " of " +
                               std::to_string(attempted) + " segment fits failed");
    const auto ks = ks_two_sample(out.nllh_base, out.nllh_extended);
    out.ks_stat = ks.statistic;
    out.ks_p = ks.p_value;
    return out;
}

}  // namespace infovol::eval
