#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nelastic/rng.hpp"
#include "nelastic/stats.hpp"

namespace nelastic {

/// Bounded positive step distribution, sampled by inverse cdf from one uniform.
class StepLaw {
public:
    static StepLaw uniform(double lo, double hi);
    /// Arbitrary law given by its quantile function on (0,1) and support
    /// bounds; the mean is computed by quadrature.
    static StepLaw from_quantile(std::function<double(double)> quantile, double lo, double hi);

    double sample(double u) const { return fn_ ? fn_(u) : lo_ + (hi_ - lo_) * u; }
    double lower() const noexcept { return lo_; }
    double upper() const noexcept { return hi_; }
    double mean() const noexcept { return mean_; }
    /// Probability of the step exceeding x (by quadrature of the quantile).
    double exceedance(double x) const;

private:
    std::function<double(double)> fn_;  // empty for uniform
    double lo_ = 0.0;
    double hi_ = 1.0;
    double mean_ = 0.5;
};

/// S_0 = start, odd steps drawn from `odd`, even steps from `even`; stops at
/// the first index m >= 1 with S_m > scale * rate.
struct AlternatingWalk {
    StepLaw odd;
    StepLaw even;
    double start = 0.0;
    double rate = 1.0;    // threshold per unit scale
    double scale = 1.0;   // the large parameter

    double threshold() const noexcept { return scale * rate; }
    /// Limit of P(stopping index is even) as the scale grows.
    double even_limit() const noexcept { return even.mean() / (odd.mean() + even.mean()); }
    void validate() const;
};

/// Stopping index of one realisation.
std::uint64_t stopping_index(const AlternatingWalk& walk, RandomStream& rng);

struct ParityEstimate {
    std::uint64_t even = 0;
    std::uint64_t odd = 0;
    std::uint64_t max_index = 0;
    double mean_index = 0.0;
    double p_even = 0.0;
    double p_odd = 0.0;
    Interval ci_even;     // Wilson interval at the requested z
    double limit = 0.0;   // even_limit()
    std::uint64_t trials() const noexcept { return even + odd; }
};

struct WalkRunOptions {
    std::size_t replicas = 10000;
    std::uint64_t seed = 1;
    std::string experiment = "walk-parity";
    unsigned threads = 0;
    double z = 3.0;
};

ParityEstimate stopping_parity(const AlternatingWalk& walk, const WalkRunOptions& opt);

struct ScanRow {
    double scale = 0.0;
    ParityEstimate estimate;
    double deviation = 0.0;  // |p_even - limit|
};

/// Parity estimates for increasing scale values; scales must be increasing.
std::vector<ScanRow> parity_convergence_scan(const AlternatingWalk& walk, const std::vector<double>& scales,
                                             const WalkRunOptions& opt);

}  // namespace nelastic
