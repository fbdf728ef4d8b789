#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "mindprint/errors.hpp"

namespace mindprint {

struct ConfidencePair {
    double confidence = 0.0;  // in [0,1]
    bool correct = false;
};

struct CalibrationBin {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t count = 0;
    double mean_confidence = 0.0;
    double accuracy = 0.0;
};

struct CalibrationFit {
    double brier = 0.0;
    double ece = 0.0;
    std::vector<CalibrationBin> bins;  // reliability-diagram data
    std::size_t n = 0;
};

inline constexpr std::size_t kEceBins = 10;

// Brier score and expected calibration error over 10 equal-width bins
// [0,0.1), ..., [0.9,1.0]. The top bin is closed so confidence 1.0 lands in
// it; every confidence lands in exactly one bin.
inline CalibrationFit calibration_metrics(const std::vector<ConfidencePair>& pairs) {
    if (pairs.empty()) throw InsufficientDataError("calibration_metrics: no pairs");

    CalibrationFit fit;
    fit.n = pairs.size();
    fit.bins.resize(kEceBins);
    std::array<double, kEceBins> conf_sum{};
    std::array<double, kEceBins> acc_sum{};

    double brier_sum = 0.0;
    for (const auto& pr : pairs) {
        if (pr.confidence < 0.0 || pr.confidence > 1.0) {
            throw ValidationError("calibration_metrics: confidence outside [0,1]");
        }
        const double x = pr.correct ? 1.0 : 0.0;
        brier_sum += (pr.confidence - x) * (pr.confidence - x);

        std::size_t k = static_cast<std::size_t>(pr.confidence * double(kEceBins));
        if (k >= kEceBins) k = kEceBins - 1;
        fit.bins[k].count += 1;
        conf_sum[k] += pr.confidence;
        acc_sum[k] += x;
    }
    fit.brier = brier_sum / static_cast<double>(fit.n);

    double ece = 0.0;
    for (std::size_t k = 0; k < kEceBins; ++k) {
        auto& bin = fit.bins[k];
        bin.lo = double(k) / double(kEceBins);
        bin.hi = double(k + 1) / double(kEceBins);
        if (bin.count > 0) {
            bin.mean_confidence = conf_sum[k] / double(bin.count);
            bin.accuracy = acc_sum[k] / double(bin.count);
            ece += (double(bin.count) / double(fit.n)) * std::fabs(bin.accuracy - bin.mean_confidence);
        }
    }
    fit.ece = ece;
    return fit;
}

} // namespace mindprint
