#include "nelastic/walk.hpp"

#include <cmath>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "nelastic/parallel.hpp"

namespace nelastic {

StepLaw StepLaw::uniform(double lo, double hi)
{
    if (!(lo > 0.0) || !(hi > lo)) {
        throw std::invalid_argument("uniform step law needs 0 < lo < hi");
    }
    StepLaw s;
    s.lo_ = lo;
    s.hi_ = hi;
    s.mean_ = 0.5 * (lo + hi);
    return s;
}

StepLaw StepLaw::from_quantile(std::function<double(double)> quantile, double lo, double hi)
{
    if (!quantile || !(lo > 0.0) || !(hi > lo)) {
        throw std::invalid_argument("step law needs a quantile function and 0 < lo < hi");
    }
    StepLaw s;
    s.lo_ = lo;
    s.hi_ = hi;
    s.mean_ = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(quantile, 0.0, 1.0, 20, 1e-12);
    s.fn_ = std::move(quantile);
    return s;
}

double StepLaw::exceedance(double x) const
{
    if (x <= lo_) {
        return 1.0;
    }
    if (x >= hi_) {
        return 0.0;
    }
    if (!fn_) {
        return (hi_ - x) / (hi_ - lo_);
    }
    // P(Q(U) > x) = 1 - u* where Q(u*) = x
    double a = 0.0;
    double b = 1.0;
    for (int i = 0; i < 80; ++i) {
        const double m = 0.5 * (a + b);
        (fn_(m) > x ? b : a) = m;
    }
    return 1.0 - 0.5 * (a + b);
}

void AlternatingWalk::validate() const
{
    if (!(rate > 0.0) || !(scale > 0.0)) {
        throw std::invalid_argument("walk needs rate > 0 and scale > 0");
    }
    if (!std::isfinite(start)) {
        throw std::invalid_argument("walk start must be finite");
    }
}

std::uint64_t stopping_index(const AlternatingWalk& walk, RandomStream& rng)
{
    const double level = walk.threshold();
    double s = walk.start;
    std::uint64_t m = 0;
    do {
        ++m;
        s += (m & 1u) ? walk.odd.sample(rng.uniform()) : walk.even.sample(rng.uniform());
    } while (s <= level);
    return m;
}

ParityEstimate stopping_parity(const AlternatingWalk& walk, const WalkRunOptions& opt)
{
    walk.validate();
    if (opt.replicas == 0) {
        throw std::invalid_argument("stopping_parity needs at least one replica");
    }
    const StreamKey key(opt.seed, opt.experiment);
    std::vector<std::uint64_t> index(opt.replicas);
    parallel_for(opt.replicas, opt.threads, [&](std::size_t r) {
        RandomStream rng(key, static_cast<std::uint32_t>(r));
        index[r] = stopping_index(walk, rng);
    });
    ParityEstimate est;
    double sum = 0.0;
    for (auto m : index) {
        (m % 2 == 0 ? est.even : est.odd) += 1;
        est.max_index = std::max(est.max_index, m);
        sum += static_cast<double>(m);
    }
    const double n = static_cast<double>(index.size());
    est.mean_index = sum / n;
    est.p_even = static_cast<double>(est.even) / n;
    est.p_odd = static_cast<double>(est.odd) / n;
    est.ci_even = wilson_interval(est.even, index.size(), opt.z);
    est.limit = walk.even_limit();
    return est;
}

std::vector<ScanRow> parity_convergence_scan(const AlternatingWalk& walk, const std::vector<double>& scales,
                                             const WalkRunOptions& opt)
{
    std::vector<ScanRow> rows;
    for (std::size_t i = 0; i < scales.size(); ++i) {
        if (i > 0 && !(scales[i] > scales[i - 1])) {
            throw std::invalid_argument("parity scan needs increasing scale values");
        }
        AlternatingWalk w = walk;
        w.scale = scales[i];
        WalkRunOptions o = opt;
        o.experiment = opt.experiment + "/scale-" + std::to_string(i);
        ScanRow row;
        row.scale = scales[i];
        row.estimate = stopping_parity(w, o);
        row.deviation = std::abs(row.estimate.p_even - row.estimate.limit);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace nelastic
