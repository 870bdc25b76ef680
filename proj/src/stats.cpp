#include "nelastic/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>

namespace nelastic {

Interval wilson_interval(std::uint64_t successes, std::uint64_t trials, double z)
{
    if (trials == 0 || successes > trials) {
        throw std::invalid_argument("wilson_interval: need 0 <= k <= n and n >= 1");
    }
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double centre = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    Interval ci{centre - half, centre + half};
    // the closed form is exact at the extremes but rounding can leave 1e-17 residue
    if (successes == 0) {
        ci.lo = 0.0;
    }
    if (successes == trials) {
        ci.hi = 1.0;
    }
    ci.lo = std::max(0.0, std::min(ci.lo, p));
    ci.hi = std::min(1.0, std::max(ci.hi, p));
    return ci;
}

double proportion_sigma(double p, std::uint64_t trials)
{
    if (trials == 0) {
        return std::numeric_limits<double>::infinity();
    }
    return std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(trials));
}

double two_proportion_z(std::uint64_t k1, std::uint64_t n1, std::uint64_t k2, std::uint64_t n2)
{
    if (n1 == 0 || n2 == 0) {
        throw std::invalid_argument("two_proportion_z: empty sample");
    }
    const double p1 = static_cast<double>(k1) / static_cast<double>(n1);
    const double p2 = static_cast<double>(k2) / static_cast<double>(n2);
    const double s = std::hypot(proportion_sigma(p1, n1), proportion_sigma(p2, n2));
    const double diff = std::abs(p1 - p2);
    if (s == 0.0) {
        return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    }
    return diff / s;
}

double ks_distance(std::span<const double> sample, const std::function<double(double)>& cdf)
{
    if (sample.empty()) {
        throw std::invalid_argument("ks_distance: empty sample");
    }
    std::vector<double> sorted(sample.begin(), sample.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double f = cdf(sorted[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

double ks_two_sample(std::span<const double> a, std::span<const double> b)
{
    if (a.empty() || b.empty()) {
        throw std::invalid_argument("ks_two_sample: empty sample");
    }
    std::vector<double> x(a.begin(), a.end());
    std::vector<double> y(b.begin(), b.end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    std::size_t i = 0;
    std::size_t j = 0;
    double d = 0.0;
    while (i < x.size() && j < y.size()) {
        const double v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] <= v) {
            ++i;
        }
        while (j < y.size() && y[j] <= v) {
            ++j;
        }
        d = std::max(d, std::abs(static_cast<double>(i) / x.size() - static_cast<double>(j) / y.size()));
    }
    return d;
}

ChiSquareResult chi_square_gof(std::span<const std::uint64_t> observed, std::span<const double> probabilities)
{
    if (observed.size() != probabilities.size() || observed.size() < 2) {
        throw std::invalid_argument("chi_square_gof: need matching observed/probability vectors of size >= 2");
    }
    const double total = static_cast<double>(std::accumulate(observed.begin(), observed.end(), std::uint64_t{0}));
    const double norm = std::accumulate(probabilities.begin(), probabilities.end(), 0.0);
    if (total <= 0.0 || norm <= 0.0) {
        throw std::invalid_argument("chi_square_gof: empty counts or probabilities");
    }
    ChiSquareResult r;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const double expected = total * probabilities[i] / norm;
        if (expected <= 0.0) {
            throw std::invalid_argument("chi_square_gof: zero expected count");
        }
        const double diff = static_cast<double>(observed[i]) - expected;
        r.statistic += diff * diff / expected;
    }
    r.dof = static_cast<double>(observed.size() - 1);
    boost::math::chi_squared dist(r.dof);
    r.p_value = boost::math::cdf(boost::math::complement(dist, r.statistic));
    return r;
}

double quantile(std::vector<double> values, double q)
{
    if (values.empty()) {
        throw std::invalid_argument("quantile: empty input");
    }
    std::sort(values.begin(), values.end());
    const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

double mean(std::span<const double> values)
{
    if (values.empty()) {
        return 0.0;
    }
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

}  // namespace nelastic
