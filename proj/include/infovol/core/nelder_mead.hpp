#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

namespace infovol {

struct NelderMeadOptions {
    int max_iter = 2000;
    /// Converged when (f_worst - f_best) <= tol * (1 + |f_best|).
    double tol = 1e-8;
    double initial_step = 0.1;
    /// Re-expand the simplex around the optimum this many times to confirm a minimum.
    int confirm_restarts = 1;
};

struct NelderMeadResult {
    std::vector<double> x;
    double f = std::numeric_limits<double>::infinity();
    bool converged = false;
    int iterations = 0;
    int evaluations = 0;
};

/// Derivative-free simplex minimisation. Non-finite objective values are treated as +inf,
/// so an infeasible point is never accepted as the incumbent. `on_iteration`, if set, is
/// called with the incumbent objective after every iteration.
template <class Objective>
NelderMeadResult nelder_mead(Objective&& objective, std::vector<double> start, const NelderMeadOptions& opt = {},
                             const std::function<void(double)>& on_iteration = {}) {
    const std::size_t dim = start.size();
    NelderMeadResult res;
    auto eval = [&](const std::vector<double>& x) {
        ++res.evaluations;
        const double v = objective(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };

    std::vector<std::vector<double>> simplex(dim + 1);
    std::vector<double> fvals(dim + 1);
    auto build = [&](const std::vector<double>& centre, double centre_f) {
        simplex[0] = centre;
        fvals[0] = centre_f;
        for (std::size_t i = 0; i < dim; ++i) {
            simplex[i + 1] = centre;
            simplex[i + 1][i] += opt.initial_step;
            fvals[i + 1] = eval(simplex[i + 1]);
        }
    };
    build(start, eval(start));

    std::vector<std::size_t> order(dim + 1);
    std::vector<double> centroid(dim), trial(dim), trial2(dim);
    auto along = [&](double coef, std::vector<double>& out) {
        const auto& worst = simplex[order[dim]];
        for (std::size_t j = 0; j < dim; ++j) out[j] = centroid[j] + coef * (worst[j] - centroid[j]);
    };

    int confirms_left = opt.confirm_restarts;
    double last_converged_f = std::numeric_limits<double>::infinity();
    while (res.iterations < opt.max_iter) {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fvals[a] < fvals[b]; });
        const double fbest = fvals[order[0]];
        const double fworst = fvals[order[dim]];
        if (std::isfinite(fworst) && fworst - fbest <= opt.tol * (1.0 + std::abs(fbest))) {
            const bool stable = std::isfinite(last_converged_f) &&
                                last_converged_f - fbest <= opt.tol * (1.0 + std::abs(fbest));
            if (confirms_left <= 0 || stable) {
                res.converged = true;
                break;
            }
            --confirms_left;
            last_converged_f = fbest;
            const auto best = simplex[order[0]];
            build(best, fbest);
            continue;
        }
        ++res.iterations;

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t j = 0; j < dim; ++j) centroid[j] += simplex[order[i]][j];
        for (double& c : centroid) c /= static_cast<double>(dim);

        const std::size_t w = order[dim];
        along(-1.0, trial);  // reflection
        const double fr = eval(trial);
        if (fr < fbest) {
            along(-2.0, trial2);  // expansion
            const double fe = eval(trial2);
            if (fe < fr) {
                simplex[w] = trial2;
                fvals[w] = fe;
            } else {
                simplex[w] = trial;
                fvals[w] = fr;
            }
        } else if (fr < fvals[order[dim - 1]]) {
            simplex[w] = trial;
            fvals[w] = fr;
        } else {
            const bool outside = fr < fworst;
            along(outside ? -0.5 : 0.5, trial2);  // contraction
            const double fc = eval(trial2);
            if (fc < std::min(fr, fworst)) {
                simplex[w] = trial2;
                fvals[w] = fc;
            } else {
                const auto best = simplex[order[0]];
                for (std::size_t i = 1; i <= dim; ++i) {  // shrink toward best
                    auto& v = simplex[order[i]];
                    for (std::size_t j = 0; j < dim; ++j) v[j] = best[j] + 0.5 * (v[j] - best[j]);
                    fvals[order[i]] = eval(v);
                }
            }
        }
        if (on_iteration) on_iteration(*std::min_element(fvals.begin(), fvals.end()));
    }

    const auto best = static_cast<std::size_t>(std::min_element(fvals.begin(), fvals.end()) - fvals.begin());
    res.x = simplex[best];
    res.f = fvals[best];
    return res;
}

}  // namespace infovol
