#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace nelastic {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double x) const noexcept { return lo <= x && x <= hi; }
    double width() const noexcept { return hi - lo; }
};

/// Wilson score interval for k successes out of n trials.
Interval wilson_interval(std::uint64_t successes, std::uint64_t trials, double z);

/// Standard error of a proportion estimate, sqrt(p(1-p)/n).
double proportion_sigma(double p, std::uint64_t trials);

/// |p1 - p2| in units of the combined standard error. Returns 0 when both
/// estimates are degenerate and equal, +inf when degenerate and different.
double two_proportion_z(std::uint64_t k1, std::uint64_t n1, std::uint64_t k2, std::uint64_t n2);

/// Kolmogorov-Smirnov statistic sup|F_n - F| of a sample against a cdf.
/// The sample is copied and sorted.
double ks_distance(std::span<const double> sample, const std::function<double(double)>& cdf);

/// Two-sample KS statistic.
double ks_two_sample(std::span<const double> a, std::span<const double> b);

struct ChiSquareResult {
    double statistic = 0.0;
    double dof = 0.0;
    double p_value = 1.0;
};

/// Pearson goodness-of-fit test of observed counts against expected
/// probabilities (which are renormalised over the supplied cells).
ChiSquareResult chi_square_gof(std::span<const std::uint64_t> observed, std::span<const double> probabilities);

/// Linear-interpolated empirical quantile, q in [0,1].
double quantile(std::vector<double> values, double q);

double mean(std::span<const double> values);

}  // namespace nelastic
