#pragma once

// Goodness-of-fit checks used to self-test the trial generator and the
// simulator's null calibration.

#include "numerosity/error.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace numerosity {

struct GoodnessOfFit {
    double statistic = 0.0;
    double p_value = 1.0;
};

/// Pearson chi-square test of observed counts against equal expected counts.
inline GoodnessOfFit chi_square_uniform(std::span<const std::size_t> counts) {
    if (counts.size() < 2) throw Error(ErrorCode::DegenerateInput, "need at least two categories");
    double total = 0.0;
    for (auto c : counts) total += static_cast<double>(c);
    if (total == 0.0) throw Error(ErrorCode::DegenerateInput, "no observations");
    const double expected = total / static_cast<double>(counts.size());
    double stat = 0.0;
    for (auto c : counts) {
        const double d = static_cast<double>(c) - expected;
        stat += d * d / expected;
    }
    const double dof = static_cast<double>(counts.size() - 1);
    return {stat, boost::math::gamma_q(dof / 2.0, stat / 2.0)};
}

/// Asymptotic Kolmogorov survival function P(K > x).
inline double kolmogorov_survival(double x) {
    if (x <= 0.0) return 1.0;
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * x * x);
        sum += (k % 2 ? 1.0 : -1.0) * term;
        if (term < 1e-16) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

/// One-sample Kolmogorov-Smirnov test of samples against Uniform(0,1).
inline GoodnessOfFit ks_uniform(std::vector<double> samples) {
    if (samples.empty()) throw Error(ErrorCode::DegenerateInput, "no samples");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double x = std::clamp(samples[i], 0.0, 1.0);
        d = std::max({d, static_cast<double>(i + 1) / n - x, x - static_cast<double>(i) / n});
    }
    const double sqrt_n = std::sqrt(n);
    // Stephens' small-sample correction.
    return {d, kolmogorov_survival((sqrt_n + 0.12 + 0.11 / sqrt_n) * d)};
}

} // namespace numerosity
