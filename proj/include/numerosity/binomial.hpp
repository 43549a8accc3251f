#pragma once

#include "numerosity/error.hpp"

#include <cmath>
#include <cstdint>

namespace numerosity {

namespace detail {

/// mantissa * 2^exponent, renormalised after every operation so long
/// products such as 0.5^1214 neither underflow nor lose precision.
struct ScaledDouble {
    double mantissa = 1.0;
    long exponent = 0;

    void normalize() {
        if (mantissa == 0.0) return;
        int e = 0;
        mantissa = std::frexp(mantissa, &e);
        exponent += e;
    }
    void multiply(double x) {
        mantissa *= x;
        normalize();
    }
    double value() const { return std::ldexp(mantissa, static_cast<int>(exponent)); }
};

/// pmf(j) of Binomial(n, p) in scaled form. Relative error O((n + j) eps).
inline ScaledDouble binomial_pmf_scaled(std::int64_t j, std::int64_t n, double p) {
    ScaledDouble v;
    const double q = 1.0 - p;
    // C(n, j) as a product of ratios, interleaved with the powers so the
    // running value stays well-conditioned.
    const std::int64_t m = j < n - j ? j : n - j;
    for (std::int64_t i = 0; i < m; ++i)
        v.multiply(static_cast<double>(n - i) / static_cast<double>(i + 1));
    for (std::int64_t i = 0; i < j; ++i) v.multiply(p);
    for (std::int64_t i = 0; i < n - j; ++i) v.multiply(q);
    return v;
}

} // namespace detail

/// P[X >= k] for X ~ Binomial(n, p0), the one-sided "greater" binomial test.
///
/// The tail is summed starting from its largest term, so every term ratio
/// is below one and no cancellation occurs. When k lies at or below the mean
/// the complementary lower tail (which is then at most 1/2) is summed instead
/// and subtracted from one.
inline double binomial_tail(std::int64_t k, std::int64_t n, double p0) {
    if (n < 0 || k < 0 || k > n)
        throw Error(ErrorCode::DomainError, "binomial tail needs 0 <= k <= n");
    if (!(p0 > 0.0 && p0 < 1.0))
        throw Error(ErrorCode::DomainError, "chance probability must lie in (0,1)");
    if (k == 0) return 1.0;
    const double q0 = 1.0 - p0;
    const double odds = p0 / q0;

    if (static_cast<double>(k) > static_cast<double>(n) * p0) {
        // Upper tail: pmf(k) * (1 + r_k + r_k r_{k+1} + ...), r_j = pmf(j+1)/pmf(j) < 1.
        const detail::ScaledDouble head = detail::binomial_pmf_scaled(k, n, p0);
        double sum = 1.0;
        double term = 1.0;
        for (std::int64_t j = k; j < n; ++j) {
            term *= static_cast<double>(n - j) / static_cast<double>(j + 1) * odds;
            sum += term;
            if (term < sum * 1e-18) break;
        }
        detail::ScaledDouble total = head;
        total.multiply(sum);
        return total.value();
    }

    // Lower tail P[X <= k-1], summed downwards from pmf(k-1).
    const std::int64_t top = k - 1;
    const detail::ScaledDouble head = detail::binomial_pmf_scaled(top, n, p0);
    double sum = 1.0;
    double term = 1.0;
    for (std::int64_t j = top; j > 0; --j) {
        term *= static_cast<double>(j) / static_cast<double>(n - j + 1) / odds;
        sum += term;
        if (term < sum * 1e-18) break;
    }
    detail::ScaledDouble lower = head;
    lower.multiply(sum);
    return 1.0 - lower.value();
}

/// Chance success probability for a "pick the maximum out of s" trial.
/// The literal constants (0.5, 0.33, 0.25) reproduce published p-values;
/// `exact` switches to 1/s.
inline double chance_level(int set_size, bool exact = false) {
    if (set_size < 2) throw Error(ErrorCode::DomainError, "set size must be at least 2");
    if (exact) return 1.0 / set_size;
    switch (set_size) {
        case 2: return 0.5;
        case 3: return 0.33;
        case 4: return 0.25;
        case 5: return 0.2;
        default: return 1.0 / set_size;
    }
}

} // namespace numerosity
