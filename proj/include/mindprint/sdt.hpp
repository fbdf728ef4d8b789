#pragma once

#include <cstddef>

#include "mindprint/errors.hpp"
#include "mindprint/stats.hpp"

namespace mindprint {

struct SdtFit {
    double hit_rate = 0.0;  // corrected, strictly interior
    double fa_rate = 0.0;   // corrected, strictly interior
    double d_prime = 0.0;
    double criterion = 0.0;
    std::size_t n_signal = 0;
    std::size_t n_noise = 0;
    bool corrected = true;
};

// Equal-variance SDT decomposition of an assert/abstain contingency table.
// The log-linear correction (0.5 added to each cell, 1 to each denominator)
// is applied unconditionally so estimates are continuous in the counts and
// finite even for perfect hit or false-alarm rows.
inline SdtFit fit_sdt(std::size_t n_hit, std::size_t n_miss, std::size_t n_fa, std::size_t n_cr) {
    SdtFit fit;
    fit.n_signal = n_hit + n_miss;
    fit.n_noise = n_fa + n_cr;
    if (fit.n_signal == 0 || fit.n_noise == 0) {
        throw InsufficientDataError("fit_sdt: need at least one signal and one noise trial");
    }

    fit.hit_rate = (static_cast<double>(n_hit) + 0.5) / (static_cast<double>(fit.n_signal) + 1.0);
    fit.fa_rate = (static_cast<double>(n_fa) + 0.5) / (static_cast<double>(fit.n_noise) + 1.0);
    fit.corrected = true;

    const double z_hit = normal_quantile(fit.hit_rate);
    const double z_fa = normal_quantile(fit.fa_rate);
    fit.d_prime = z_hit - z_fa;
    fit.criterion = -0.5 * (z_hit + z_fa);
    return fit;
}

} // namespace mindprint
