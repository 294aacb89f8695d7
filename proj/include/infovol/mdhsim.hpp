#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <variant>

#include <spdlog/spdlog.h>

#include "infovol/core/error.hpp"
#include "infovol/core/rng.hpp"
#include "infovol/core/time_series.hpp"

namespace infovol::mdh {

struct ConstantInfo {
    double c = 1.0;
};
struct PoissonInfo {
    double lambda = 1.0;
};
/// I_t = exp(m + s Z).
struct LogNormalInfo {
    double m = 0.0;
    double s = 1.0;
};

using InfoProcess = std::variant<ConstantInfo, PoissonInfo, LogNormalInfo>;

/// Bivariate mixture of returns and volume driven by a latent information count I_t:
///   r_t = sigma1 sqrt(I_t) z1,   v_t = mu2 I_t + sigma2 sqrt(I_t) z2.
struct MdhParams {
    double sigma1 = 1.0;
    double mu2 = 1.0;
    double sigma2 = 1.0;
    InfoProcess info = PoissonInfo{};
    std::size_t n = 1000;
    std::uint64_t seed = 0;
};

struct MdhSample {
    TimeSeries returns;
    TimeSeries volume;
    TimeSeries info;
    double negative_volume_fraction = 0.0;
};

inline void validate(const MdhParams& p) {
    if (p.n == 0) throw ArgumentError("mdh: n must be positive");
    if (!(p.sigma1 > 0.0) || !(p.sigma2 > 0.0)) throw ArgumentError("mdh: sigma1 and sigma2 must be positive");
    if (!(p.mu2 > 0.0)) throw ArgumentError("mdh: mu2 must be positive");
    std::visit(
        [](const auto& proc) {
            using T = std::decay_t<decltype(proc)>;
            if constexpr (std::is_same_v<T, ConstantInfo>) {
                if (!(proc.c >= 0.0)) throw ArgumentError("mdh: constant info must be >= 0");
            } else if constexpr (std::is_same_v<T, PoissonInfo>) {
                if (!(proc.lambda > 0.0)) throw ArgumentError("mdh: poisson lambda must be > 0");
            } else {
                if (!(proc.s >= 0.0) || !std::isfinite(proc.m)) throw ArgumentError("mdh: lognormal needs finite m, s >= 0");
            }
        },
        p.info);
}

/// Var(I_t) for the configured information process.
inline double info_variance(const InfoProcess& info) {
    return std::visit(
        [](const auto& proc) -> double {
            using T = std::decay_t<decltype(proc)>;
            if constexpr (std::is_same_v<T, ConstantInfo>) {
                return 0.0;
            } else if constexpr (std::is_same_v<T, PoissonInfo>) {
                return proc.lambda;
            } else {
                const double s2 = proc.s * proc.s;
                return std::expm1(s2) * std::exp(2.0 * proc.m + s2);
            }
        },
        info);
}

/// Cov(r_t^2, v_t) = sigma1^2 mu2 Var(I_t).
inline double theoretical_r2v_cov(const MdhParams& p) { return p.sigma1 * p.sigma1 * p.mu2 * info_variance(p.info); }

/// Draws (I_t, z1, z2) in that order for each t from a single stream seeded by `p.seed`.
inline MdhSample simulate(const MdhParams& p) {
    validate(p);
    Rng rng(p.seed);
    std::vector<double> r(p.n), v(p.n), info(p.n);
    auto draw_info = [&]() -> double {
        return std::visit(
            [&](const auto& proc) -> double {
                using T = std::decay_t<decltype(proc)>;
                if constexpr (std::is_same_v<T, ConstantInfo>) {
                    return proc.c;
                } else if constexpr (std::is_same_v<T, PoissonInfo>) {
                    return static_cast<double>(std::poisson_distribution<std::int64_t>(proc.lambda)(rng));
                } else {
                    return std::exp(proc.m + proc.s * rng.normal());
                }
            },
            p.info);
    };
    std::size_t negatives = 0;
    for (std::size_t t = 0; t < p.n; ++t) {
        const double it = draw_info();
        const double root = std::sqrt(it);
        const double z1 = rng.normal();
        const double z2 = rng.normal();
        info[t] = it;
        r[t] = p.sigma1 * root * z1;
        v[t] = p.mu2 * it + p.sigma2 * root * z2;
        if (v[t] < 0.0) ++negatives;
    }
    MdhSample out{TimeSeries(std::move(r)), TimeSeries(std::move(v)), TimeSeries(std::move(info)), 0.0};
    out.negative_volume_fraction = static_cast<double>(negatives) / static_cast<double>(p.n);
    if (out.negative_volume_fraction > 0.01)
        spdlog::warn("mdh: {:.2f}% of simulated volumes are negative; parameters look unrealistic",
                     100.0 * out.negative_volume_fraction);
    return out;
}

}  // namespace infovol::mdh
