#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <numeric>
#include <vector>

namespace mindprint {

struct NelderMeadResult {
    std::vector<double> x;
    double fmin = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

// Downhill simplex minimizer (standard alpha=1, gamma=2, rho=0.5, sigma=0.5
// coefficients). Terminates when the simplex diameter falls below xtol in
// every coordinate. Deterministic: no restarts, no randomness.
inline NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                    const std::vector<double>& start,
                                    const std::vector<double>& step,
                                    double xtol = 1e-4,
                                    std::size_t max_iter = 2000) {
    const std::size_t n = start.size();
    std::vector<std::vector<double>> pts(n + 1, start);
    for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] += step[i];
    std::vector<double> fv(n + 1);
    for (std::size_t i = 0; i <= n; ++i) fv[i] = f(pts[i]);

    std::vector<std::size_t> order(n + 1);
    NelderMeadResult result;

    std::size_t iter = 0;
    for (; iter < max_iter; ++iter) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });

        // Diameter-based stop
        bool small = true;
        for (std::size_t d = 0; d < n && small; ++d) {
            double lo = pts[order[0]][d], hi = lo;
            for (std::size_t i = 1; i <= n; ++i) {
                lo = std::min(lo, pts[order[i]][d]);
                hi = std::max(hi, pts[order[i]][d]);
            }
            if (hi - lo > xtol) small = false;
        }
        if (small) {
            result.converged = true;
            break;
        }

        const std::size_t best = order[0], second_worst = order[n - 1], worst = order[n];
        std::vector<double> centroid(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t d = 0; d < n; ++d) centroid[d] += pts[order[i]][d];
        }
        for (double& c : centroid) c /= static_cast<double>(n);

        auto blend = [&](const std::vector<double>& from, double coef) {
            std::vector<double> p(n);
            for (std::size_t d = 0; d < n; ++d) p[d] = centroid[d] + coef * (from[d] - centroid[d]);
            return p;
        };

        std::vector<double> xr = blend(pts[worst], -1.0);
        double fr = f(xr);
        if (fr < fv[best]) {
            std::vector<double> xe = blend(pts[worst], -2.0);
            double fe = f(xe);
            if (fe < fr) { pts[worst] = xe; fv[worst] = fe; }
            else { pts[worst] = xr; fv[worst] = fr; }
        } else if (fr < fv[second_worst]) {
            pts[worst] = xr; fv[worst] = fr;
        } else {
            bool outside = fr < fv[worst];
            std::vector<double> xc = outside ? blend(xr, 0.5) : blend(pts[worst], 0.5);
            double fc = f(xc);
            if (fc < (outside ? fr : fv[worst])) {
                pts[worst] = xc; fv[worst] = fc;
            } else {
                for (std::size_t i = 1; i <= n; ++i) {
                    std::size_t k = order[i];
                    for (std::size_t d = 0; d < n; ++d) {
                        pts[k][d] = pts[best][d] + 0.5 * (pts[k][d] - pts[best][d]);
                    }
                    fv[k] = f(pts[k]);
                }
            }
        }
    }

    std::size_t argmin = 0;
    for (std::size_t i = 1; i <= n; ++i) {
        if (fv[i] < fv[argmin]) argmin = i;
    }
    result.x = pts[argmin];
    result.fmin = fv[argmin];
    result.iterations = iter;
    return result;
}

} // namespace mindprint
