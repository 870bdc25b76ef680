#include "nelastic/regularize.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include "nelastic/parallel.hpp"

namespace nelastic {

// ---------------------------------------------------------------- NoiseLaw

NoiseLaw NoiseLaw::uniform(double lo, double hi)
{
    if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi)) {
        throw std::invalid_argument("noise law needs finite lo < hi");
    }
    NoiseLaw n;
    n.shape_ = Shape::Uniform;
    n.lo_ = lo;
    n.hi_ = hi;
    return n;
}

NoiseLaw NoiseLaw::bump(double lo, double hi)
{
    NoiseLaw n = uniform(lo, hi);
    n.shape_ = Shape::Bump;
    return n;
}

namespace {

// cdf of the density 15/16 (1 - x^2)^2 on [-1, 1]
double bump_cdf(double x)
{
    x = std::clamp(x, -1.0, 1.0);
    const double x2 = x * x;
    return std::clamp(0.5 + (15.0 / 16.0) * x * (1.0 - 2.0 * x2 / 3.0 + x2 * x2 / 5.0), 0.0, 1.0);
}

double bump_quantile(double u)
{
    auto f = [u](double x) {
        const double d = 1.0 - x * x;
        return std::make_pair(bump_cdf(x) - u, (15.0 / 16.0) * d * d);
    };
    return boost::math::tools::newton_raphson_iterate(f, 2.0 * u - 1.0, -1.0, 1.0, 50);
}

}  // namespace

double NoiseLaw::quantile(double u) const
{
    if (shape_ == Shape::Uniform) {
        return lo_ + (hi_ - lo_) * u;
    }
    return mean() + 0.5 * (hi_ - lo_) * bump_quantile(u);
}

double NoiseLaw::cdf(double x) const
{
    const double y = (x - mean()) / (0.5 * (hi_ - lo_));
    if (shape_ == Shape::Uniform) {
        return std::clamp(0.5 * (y + 1.0), 0.0, 1.0);
    }
    return bump_cdf(y);
}

NoiseLaw NoiseLaw::scaled(double factor) const
{
    if (!(factor > 0.0)) {
        throw std::invalid_argument("noise scale factor must be positive");
    }
    NoiseLaw n = *this;
    n.lo_ *= factor;
    n.hi_ *= factor;
    return n;
}

std::string to_string(NoiseLaw::Shape s)
{
    return s == NoiseLaw::Shape::Uniform ? "uniform" : "bump";
}

// ---------------------------------------------------------------- DynNoise

double DynNoise::alpha() const
{
    double a = kInf;
    for (const auto& l : laws) {
        a = std::min(a, l.lower());
    }
    return a;
}

double DynNoise::beta() const
{
    double b = -kInf;
    for (const auto& l : laws) {
        b = std::max(b, l.upper());
    }
    return b;
}

void DynNoise::validate(std::size_t walls) const
{
    if (laws.size() != walls) {
        throw std::invalid_argument("dynamics noise needs one law per wall: expected " + std::to_string(walls) +
                                    ", got " + std::to_string(laws.size()));
    }
    if (!(delta >= 0.0) || !std::isfinite(delta)) {
        throw std::invalid_argument("noise amplitude delta must be non-negative");
    }
    if (!(alpha() > 0.0)) {
        throw std::invalid_argument("noise laws must be supported on positive values");
    }
}

WallNoise DynNoise::bind(const StreamKey& key, std::uint32_t replica) const
{
    return [laws = laws, delta = delta, key, replica](std::size_t wall, std::uint64_t hit) {
        const double u = key.uniform_at(replica, static_cast<std::uint32_t>(wall + 1), hit);
        return delta * laws[wall].quantile(u);
    };
}

DynNoise DynNoise::scaled(double factor) const
{
    DynNoise d = *this;
    for (auto& l : d.laws) {
        l = l.scaled(factor);
    }
    return d;
}

// ---------------------------------------------------------------- InitNoise

double InitNoise::profile_at(double r) const
{
    if (r < 0.0 || r > 1.0) {
        return 0.0;
    }
    switch (profile) {
    case Profile::Bump:
        return (1.0 - r * r) * (1.0 - r * r);
    case Profile::Cone:
        return 1.0 - r;
    case Profile::Flat:
        return 1.0;
    }
    return 0.0;
}

double InitNoise::density(double dq, double dp) const
{
    // 2 pi delta^2 times the integral of g(r) r over [0, 1]
    const double radial = profile == Profile::Flat ? 0.5 : 1.0 / 6.0;
    const double norm = 2.0 * std::numbers::pi * delta * delta * radial;
    return profile_at(std::hypot(dq, dp) / delta) / norm;
}

PhasePoint InitNoise::sample(RandomStream& rng) const
{
    for (;;) {
        const double r = std::sqrt(rng.uniform());
        const double phi = 2.0 * std::numbers::pi * rng.uniform();
        const double accept = profile == Profile::Flat ? 1.0 : rng.uniform();
        if (accept <= profile_at(r)) {
            return PhasePoint{delta * r * std::cos(phi), delta * r * std::sin(phi)};
        }
    }
}

double InitNoise::p_marginal(double dp) const
{
    if (std::abs(dp) >= delta) {
        return 0.0;
    }
    const double half = std::sqrt(delta * delta - dp * dp);
    auto f = [&](double dq) { return density(dq, dp); };
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, -half, half, 15, 1e-12);
}

std::string to_string(InitNoise::Profile p)
{
    switch (p) {
    case InitNoise::Profile::Bump:
        return "bump";
    case InitNoise::Profile::Cone:
        return "cone";
    case InitNoise::Profile::Flat:
        return "flat";
    }
    return "unknown";
}

// ---------------------------------------------------------------- ensembles

double EnsembleResult::freq(std::size_t well) const
{
    if (trapped == 0) {
        return 0.0;
    }
    return static_cast<double>(counts.at(well)) / static_cast<double>(trapped);
}

Interval EnsembleResult::wilson(std::size_t well, double z) const
{
    if (trapped == 0) {
        throw std::domain_error("no replica reached a well");
    }
    return wilson_interval(counts.at(well), trapped, z);
}

std::vector<WellStat> EnsembleResult::summary(double z) const
{
    std::vector<WellStat> out;
    for (std::size_t w = 0; w < counts.size(); ++w) {
        WellStat s;
        s.well = w;
        s.count = counts[w];
        s.freq = freq(w);
        s.ci = trapped > 0 ? wilson(w, z) : Interval{0.0, 1.0};
        out.push_back(s);
    }
    return out;
}

EnsembleResult simulate_ensemble(const FlatModelSpec& spec, PhasePoint x0, const InitNoise* init, const DynNoise* dyn,
                                 double eps, const EnsembleOptions& opt)
{
    spec.validate();
    if (dyn) {
        dyn->validate(spec.wall_count());
    }
    if (init && !(init->delta > 0.0)) {
        throw std::invalid_argument("initial noise radius must be positive");
    }
    if (opt.replicas == 0) {
        throw std::invalid_argument("ensemble needs at least one replica");
    }
    const ReebGraph graph = build_graph(spec);
    const StreamKey key(opt.seed, opt.experiment);
    SimOptions sim = opt.sim;
    sim.record_log = false;
    sim.record_path = opt.keep_paths;

    EnsembleResult res;
    res.wells = spec.well_count();
    res.outcomes.resize(opt.replicas);
    if (opt.keep_paths) {
        res.paths.resize(opt.replicas);
    }
    parallel_for(opt.replicas, opt.threads, [&](std::size_t r) {
        const auto replica = static_cast<std::uint32_t>(r);
        ReplicaOutcome& out = res.outcomes[r];
        PhasePoint start = x0;
        if (init) {
            RandomStream rng(key, replica, 0);
            const PhasePoint d = init->sample(rng);
            start.q += d.q;
            start.p += d.p;
        }
        out.start = start;
        try {
            const WallNoise noise = dyn ? dyn->bind(key, replica) : WallNoise{};
            SimResult s = simulate_flat(spec, graph, start, eps, sim, noise);
            out.well = s.well;
            out.t_end = s.t_end;
            out.collisions = s.collisions;
            if (opt.keep_paths) {
                res.paths[r] = std::move(s.path);
            }
        } catch (const std::exception& e) {
            out.error = e.what();
        }
    });
    res.counts.assign(res.wells, 0);
    for (const auto& o : res.outcomes) {
        if (!o.error.empty()) {
            ++res.failures;
        } else if (o.well) {
            ++res.counts[*o.well];
            ++res.trapped;
        }
    }
    return res;
}

EnsembleResult simulate_with_init_noise(const FlatModelSpec& spec, PhasePoint x0, const InitNoise& noise, double eps,
                                        const EnsembleOptions& opt)
{
    return simulate_ensemble(spec, x0, &noise, nullptr, eps, opt);
}

EnsembleResult simulate_with_dyn_noise(const FlatModelSpec& spec, PhasePoint x0, const DynNoise& noise, double eps,
                                       const EnsembleOptions& opt)
{
    return simulate_ensemble(spec, x0, nullptr, &noise, eps, opt);
}

// ---------------------------------------------------------------- strips

double one_hit(const FlatModelSpec& spec, std::size_t wall, double speed, double eps)
{
    return speed * (1.0 - eps * spec.restitution.at(wall)(speed));
}

double one_hit_inverse(const FlatModelSpec& spec, std::size_t wall, double speed_after, double eps)
{
    const Coefficient& c = spec.restitution.at(wall);
    double v = speed_after / (1.0 - eps * c(speed_after));
    for (int i = 0; i < 60; ++i) {
        const double dv = 1e-6 * v;
        const double slope = 1.0 - eps * c(v) - eps * v * (c(v + dv) - c(v - dv)) / (2.0 * dv);
        const double step = (v * (1.0 - eps * c(v)) - speed_after) / slope;
        v -= step;
        if (std::abs(step) <= 1e-16 * v) {
            break;
        }
    }
    return v;
}

namespace {

void require_two_wells(const FlatModelSpec& spec)
{
    spec.validate();
    if (spec.wall_count() != 3) {
        throw std::invalid_argument("this operation needs a two-well model (three walls)");
    }
}

// wall of collision m (1-based) when the first hit is at `first`
std::size_t wall_of_hit(std::uint64_t m, std::size_t first)
{
    return (m % 2 == 1) ? first : 2 - first;
}

std::uint64_t trapping_hit(const FlatModelSpec& spec, std::size_t first, double v, double eps)
{
    const double gate = spec.heights[0];
    std::uint64_t m = 0;
    while (v > gate) {
        ++m;
        v = one_hit(spec, wall_of_hit(m, first), v, eps);
        if (m > 2'000'000'000ull) {
            throw std::runtime_error("speed does not decay below the separating height");
        }
    }
    return m;
}

}  // namespace

std::size_t two_well_outcome(const FlatModelSpec& spec, double p, double eps)
{
    require_two_wells(spec);
    if (!(eps > 0.0)) {
        throw std::invalid_argument("two_well_outcome needs eps > 0");
    }
    if (!(std::abs(p) > spec.heights[0])) {
        throw std::invalid_argument("start speed must exceed the separating height");
    }
    const std::size_t first = p > 0.0 ? 2 : 0;
    const std::uint64_t m = trapping_hit(spec, first, std::abs(p), eps);
    return wall_of_hit(m, first) == 0 ? 0 : 1;
}

StripRatio strip_ratio(const FlatModelSpec& spec, PhasePoint x, double eps, double half_width, StripWeight weight)
{
    require_two_wells(spec);
    const double gate = spec.heights[0];
    const double v0 = std::abs(x.p);
    if (!(eps > 0.0) || !(half_width > 0.0)) {
        throw std::invalid_argument("strip_ratio needs eps > 0 and a positive window");
    }
    if (!(v0 - half_width > gate)) {
        throw std::invalid_argument("strip window must lie above the separating height");
    }
    const std::size_t first = x.p > 0.0 ? 2 : 0;
    const double lo = v0 - half_width;
    const double hi = v0 + half_width;
    const std::uint64_t m_lo = trapping_hit(spec, first, lo, eps);
    const std::uint64_t m_hi = trapping_hit(spec, first, hi, eps);
    if (m_hi < m_lo + 4) {
        throw std::domain_error("eps too large: the window holds fewer than four strips");
    }
    // b_m: the start speed whose m-th reflected speed equals the gate
    auto boundary = [&](std::uint64_t m) {
        double v = gate;
        for (std::uint64_t j = m; j >= 1; --j) {
            v = one_hit_inverse(spec, wall_of_hit(j, first), v, eps);
        }
        return v;
    };
    auto measure = [&](double a, double b) {
        if (weight == StripWeight::Lebesgue) {
            return b - a;
        }
        auto G = [&](double y) {
            y = std::clamp(y, -half_width, half_width);
            return y * std::sqrt(half_width * half_width - y * y) + half_width * half_width * std::asin(y / half_width);
        };
        return G(b - v0) - G(a - v0);
    };

    StripRatio out;
    out.min_width = kInf;
    double prev = boundary(m_lo - 1);
    for (std::uint64_t m = m_lo; m <= m_hi; ++m) {
        const double next = boundary(m);
        Strip s;
        s.lo = std::max(prev, lo);
        s.hi = std::min(next, hi);
        s.full_width = next - prev;
        s.collisions = m;
        s.well = wall_of_hit(m, first) == 0 ? 0 : 1;
        if (s.hi > s.lo) {
            out.measure[s.well] += measure(s.lo, s.hi);
            out.strips.push_back(s);
            if (prev >= lo && next <= hi) {
                out.min_width = std::min(out.min_width, s.full_width);
                out.max_width = std::max(out.max_width, s.full_width);
            }
        }
        prev = next;
    }
    out.ratio = out.measure[0] / out.measure[1];
    return out;
}

LogWalkBridge log_walk_bridge(const FlatModelSpec& spec, double p0, const DynNoise& noise, double eps)
{
    require_two_wells(spec);
    noise.validate(spec.wall_count());
    if (!(eps > 0.0) || !(eps < 1.0)) {
        throw std::invalid_argument("log_walk_bridge needs eps in (0, 1)");
    }
    const double gate = spec.heights[0];
    if (!(std::abs(p0) > gate)) {
        throw std::invalid_argument("start speed must exceed the separating height");
    }
    const std::size_t first = p0 > 0.0 ? 2 : 0;
    const std::size_t second = 2 - first;
    auto law_for = [&](std::size_t wall) {
        const double c = spec.restitution[wall](gate);
        const NoiseLaw law = noise.laws[wall];
        const double delta = noise.delta;
        auto U = [=](double xi) {
            const double arg = eps * (c + delta * xi);
            if (!(arg < 1.0)) {
                throw std::domain_error("eps (c + delta xi) >= 1 in the log walk");
            }
            return -std::log1p(-arg) / eps;
        };
        return StepLaw::from_quantile([=](double u) { return U(law.quantile(u)); }, U(law.lower()), U(law.upper()));
    };
    LogWalkBridge b;
    b.walk.odd = law_for(first);
    b.walk.even = law_for(second);
    b.walk.start = 0.0;
    b.walk.scale = std::floor(1.0 / eps);
    b.walk.rate = std::log(std::abs(p0) / gate);
    b.odd_well = first == 0 ? 0 : 1;
    b.even_well = 1 - b.odd_well;
    return b;
}

// ---------------------------------------------------------------- three wells

FlatModelSpec ThreeWellGeometry::spec() const
{
    if (!(high > low) || !(low > 0.0)) {
        throw std::invalid_argument("three-well geometry needs high > low > 0");
    }
    FlatModelSpec s;
    s.walls = walls;
    s.heights = {high, low};
    s.restitution = {Coefficient::constant(c_left), Coefficient::constant(c), Coefficient::constant(c),
                     Coefficient::constant(c)};
    s.validate();
    return s;
}

double ThreeWellGeometry::hit_count(double eps) const
{
    return std::log(high / low) / -std::log1p(-eps * c);
}

double ThreeWellGeometry::admissible_eps(long N) const
{
    if (N < 1) {
        throw std::invalid_argument("admissible index must be positive");
    }
    return -std::expm1(std::log(low / high) / static_cast<double>(N)) / c;
}

std::vector<Fig6Row> fig6_counterexample(const ThreeWellGeometry& geo, const std::vector<double>& eps_list,
                                         PhasePoint x0, const InitNoise& init, const DynNoise* dyn,
                                         const EnsembleOptions& opt, double admissible_tol)
{
    const FlatModelSpec spec = geo.spec();
    std::vector<Fig6Row> rows;
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
        Fig6Row row;
        row.eps = eps_list[i];
        row.hit_count = geo.hit_count(row.eps);
        row.admissible = std::abs(row.hit_count - std::round(row.hit_count)) < admissible_tol;
        if (!row.admissible) {
            row.warning = "eps = " + std::to_string(row.eps) + " is not admissible (hit count " +
                          std::to_string(row.hit_count) + "); frequencies reported without a claim";
        }
        EnsembleOptions o = opt;
        o.experiment = opt.experiment + "/init/" + std::to_string(i);
        row.init = simulate_with_init_noise(spec, x0, init, row.eps, o);
        const auto lower = row.init.counts[1] + row.init.counts[2];
        row.middle_freq = row.init.freq(1);
        row.middle_share = lower > 0 ? static_cast<double>(row.init.counts[1]) / static_cast<double>(lower) : 0.0;
        if (dyn) {
            o.experiment = opt.experiment + "/dyn/" + std::to_string(i);
            row.dyn = simulate_with_dyn_noise(spec, x0, *dyn, row.eps, o);
            row.dyn_middle_freq = row.dyn->freq(1);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace nelastic
