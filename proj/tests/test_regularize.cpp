#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "nelastic/limitproc.hpp"
#include "nelastic/regularize.hpp"
#include "nelastic/stats.hpp"
#include "nelastic/walk.hpp"

using namespace nelastic;
using boost::math::quadrature::gauss_kronrod;

namespace {

FlatModelSpec two_well(double c1, double c2)
{
    FlatModelSpec s;
    s.walls = {-1.0, 0.0, 1.0};
    s.heights = {1.0};
    s.restitution = {Coefficient::constant(c1), Coefficient::constant(1.0), Coefficient::constant(c2)};
    return s;
}

EnsembleOptions ensemble(std::size_t n, const std::string& name, std::uint64_t seed = 31)
{
    EnsembleOptions o;
    o.replicas = n;
    o.seed = seed;
    o.experiment = name;
    o.threads = 2;
    return o;
}

DynNoise uniform_noise(std::size_t walls, double delta, double lo, double hi)
{
    DynNoise d;
    d.delta = delta;
    d.laws.assign(walls, NoiseLaw::uniform(lo, hi));
    return d;
}

bool within_sigmas(const EnsembleResult& e, std::size_t well, double target, double k = 3.0)
{
    const std::uint64_t n = e.trapped;
    return std::abs(e.freq(well) - target) <= k * proportion_sigma(target, n);
}

}  // namespace

TEST_CASE("initial-noise densities are normalised and supported on the disc")
{
    for (auto profile : {InitNoise::Profile::Bump, InitNoise::Profile::Cone, InitNoise::Profile::Flat}) {
        InitNoise n;
        n.delta = 0.2;
        n.profile = profile;
        const double mass = gauss_kronrod<double, 31>::integrate(
            [&](double r) { return 2.0 * std::numbers::pi * r * n.density(r, 0.0); }, 0.0, n.delta, 15, 1e-13);
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(n.density(0.0, 0.2001) == 0.0);
        CHECK(n.density(0.15, 0.15) == 0.0);
        CHECK(n.density(0.0, 0.0) > 0.0);
        // the marginal has square-root edges, so substitute p = delta sin(phi)
        const double marginal = gauss_kronrod<double, 31>::integrate(
            [&](double phi) { return n.p_marginal(n.delta * std::sin(phi)) * n.delta * std::cos(phi); },
            -std::numbers::pi / 2.0, std::numbers::pi / 2.0, 6, 1e-10);
        CHECK(marginal == doctest::Approx(1.0).epsilon(1e-8));

        // radii of the samples against the radial cdf
        const StreamKey key(2, "disc");
        RandomStream rng(key, 0);
        std::vector<double> radii;
        for (int i = 0; i < 20000; ++i) {
            const PhasePoint x = n.sample(rng);
            radii.push_back(std::hypot(x.q, x.p));
        }
        CHECK(*std::max_element(radii.begin(), radii.end()) <= n.delta);
        const auto radial_cdf = [&](double r) {
            r = std::clamp(r, 0.0, n.delta);
            return gauss_kronrod<double, 31>::integrate(
                [&](double t) { return 2.0 * std::numbers::pi * t * n.density(t, 0.0); }, 0.0, r, 0, 0.0);
        };
        CHECK(ks_distance(radii, radial_cdf) < 1.95 / std::sqrt(20000.0));
    }
}

TEST_CASE("bounded noise laws")
{
    for (const auto& law : {NoiseLaw::uniform(0.5, 2.0), NoiseLaw::bump(0.5, 2.0)}) {
        for (double u : {0.01, 0.3, 0.5, 0.77, 0.99}) {
            const double x = law.quantile(u);
            CHECK(x > 0.5);
            CHECK(x < 2.0);
            CHECK(law.cdf(x) == doctest::Approx(u).epsilon(1e-10));
        }
        CHECK(law.mean() == 1.25);
        CHECK(law.cdf(0.4) == 0.0);
        CHECK(law.cdf(2.1) == 1.0);
        const NoiseLaw twice = law.scaled(2.0);
        CHECK(twice.quantile(0.3) == doctest::Approx(2.0 * law.quantile(0.3)));
    }
    CHECK_THROWS_AS(NoiseLaw::uniform(1.0, 1.0), std::invalid_argument);
}

TEST_CASE("dynamics noise is addressed by wall and hit index")
{
    DynNoise d = uniform_noise(3, 0.1, 0.2, 0.8);
    d.laws[1] = NoiseLaw::bump(1.0, 2.0);
    CHECK(d.alpha() == 0.2);
    CHECK(d.beta() == 2.0);
    CHECK_NOTHROW(d.validate(3));
    CHECK_THROWS_AS(d.validate(4), std::invalid_argument);
    const StreamKey key(8, "bind");
    const WallNoise a = d.bind(key, 3);
    const WallNoise b = d.bind(key, 3);
    const double late = a(2, 40);
    const double early = a(0, 0);
    CHECK(b(0, 0) == early);
    CHECK(b(2, 40) == late);
    for (std::uint64_t k = 0; k < 200; ++k) {
        const double x = a(1, k);
        CHECK(x >= 0.1 * 1.0);
        CHECK(x <= 0.1 * 2.0);
    }
    CHECK(d.bind(key, 4)(0, 0) != early);
    auto bad = uniform_noise(3, 0.1, -0.5, 0.5);
    CHECK_THROWS_AS(bad.validate(3), std::invalid_argument);
}

TEST_CASE("one-hit map and its inverse")
{
    const auto s = two_well(2.0, 1.0);
    for (std::size_t wall : {0u, 2u}) {
        const double v = 3.7;
        const double after = one_hit(s, wall, v, 1e-3);
        CHECK(after < v);
        CHECK(one_hit_inverse(s, wall, after, 1e-3) == doctest::Approx(v).epsilon(1e-14));
    }
}

TEST_CASE("initial-noise branching with equal coefficients is symmetric")
{
    InitNoise init;
    init.delta = 0.05;
    const EnsembleResult e = simulate_with_init_noise(two_well(1.0, 1.0), {-0.5, 4.0}, init, 1e-3,
                                                      ensemble(4000, "init-sym"));
    CHECK(e.failures == 0);
    CHECK(e.trapped == 4000);
    CHECK(within_sigmas(e, 0, 0.5));
}

TEST_CASE("initial-noise branching follows the coefficient ratio and stabilises in eps")
{
    // the disc must span many strips at both eps; strips are about 4 eps wide here
    InitNoise init;
    init.delta = 0.2;
    const auto s = two_well(2.0, 1.0);
    const EnsembleResult coarse = simulate_with_init_noise(s, {0.0, 4.0}, init, 1e-2, ensemble(4000, "init-c"));
    const EnsembleResult fine = simulate_with_init_noise(s, {0.0, 4.0}, init, 1e-3, ensemble(4000, "init-f"));
    CHECK(within_sigmas(fine, 0, 2.0 / 3.0));
    CHECK(two_proportion_z(coarse.counts[0], coarse.trapped, fine.counts[0], fine.trapped) < 5.0);
    CHECK(fine.wilson(0).contains(fine.freq(0)));
    const auto summary = fine.summary();
    REQUIRE(summary.size() == 2);
    CHECK(summary[0].count + summary[1].count == fine.trapped);
}

TEST_CASE("initial-noise branching does not depend on the density shape")
{
    const auto s = two_well(2.0, 1.0);
    std::vector<EnsembleResult> results;
    for (auto profile : {InitNoise::Profile::Bump, InitNoise::Profile::Cone, InitNoise::Profile::Flat}) {
        InitNoise init;
        init.delta = 0.05;
        init.profile = profile;
        results.push_back(
            simulate_with_init_noise(s, {-0.5, 4.0}, init, 1e-3, ensemble(4000, "shape-" + to_string(profile))));
    }
    for (std::size_t i = 1; i < results.size(); ++i) {
        CHECK(two_proportion_z(results[0].counts[0], results[0].trapped, results[i].counts[0], results[i].trapped) <=
              3.0);
    }
}

TEST_CASE("dynamics-noise branching")
{
    const EnsembleResult sym = simulate_with_dyn_noise(two_well(1.0, 1.0), {-0.5, 4.0},
                                                       uniform_noise(3, 0.1, 0.05, 2.95), 1e-3,
                                                       ensemble(4000, "dyn-sym"));
    CHECK(within_sigmas(sym, 0, 0.5));

    // mean-shifted coefficients (2 + 0.15) : (1 + 0.15)
    const auto s = two_well(2.0, 1.0);
    const DynNoise noise = uniform_noise(3, 0.1, 0.05, 2.95);
    const EnsembleResult e = simulate_with_dyn_noise(s, {-0.5, 4.0}, noise, 1e-3, ensemble(4000, "dyn-21"));
    CHECK(within_sigmas(e, 0, 2.15 / 3.3));

    // the same limit after scaling every coefficient and noise by a common factor
    FlatModelSpec half = s;
    for (auto& c : half.restitution) {
        c = c.scaled(0.5);
    }
    const EnsembleResult scaled =
        simulate_with_dyn_noise(half, {-0.5, 4.0}, noise.scaled(0.5), 1e-3, ensemble(4000, "dyn-21-half"));
    CHECK(two_proportion_z(e.counts[0], e.trapped, scaled.counts[0], scaled.trapped) <= 3.0);
}

TEST_CASE("log-walk bridge parameters")
{
    const auto s = two_well(2.0, 1.0);
    const DynNoise noise = uniform_noise(3, 0.1, 0.05, 2.95);
    const double eps = 1e-3;
    const LogWalkBridge b = log_walk_bridge(s, 4.0, noise, eps);
    CHECK(b.walk.scale == 1000.0);
    CHECK(b.walk.rate == doctest::Approx(std::log(4.0)));
    // moving right, the right wall (coefficient 1) is hit first
    CHECK(b.walk.odd.mean() == doctest::Approx(1.15).epsilon(5.0 * eps));
    CHECK(b.walk.even.mean() == doctest::Approx(2.15).epsilon(5.0 * eps));
    CHECK(b.odd_well == 1);
    CHECK(b.even_well == 0);
    CHECK_THROWS_AS(log_walk_bridge(s, 0.5, noise, eps), std::invalid_argument);
}

TEST_CASE("strip ratio")
{
    const PhasePoint x{-0.5, 3.0};
    const double eps = 1e-3;
    const StripRatio equal = strip_ratio(two_well(1.0, 1.0), x, eps, 0.5);
    CHECK(std::abs(equal.ratio - 1.0) <= 5e-3);

    const auto s = two_well(2.0, 1.0);
    const StripRatio r = strip_ratio(s, x, eps, 0.5);
    CHECK(std::abs(r.ratio / 2.0 - 1.0) <= 5.0 * eps);

    // every speed in the window classified by iterating the one-hit maps
    const int n = 100000;
    std::uint64_t to_first = 0;
    for (int i = 0; i < n; ++i) {
        const double p = 3.0 - 0.5 + 1.0 * (i + 0.5) / n;
        to_first += two_well_outcome(s, p, eps) == 0;
    }
    const double brute = static_cast<double>(to_first) / static_cast<double>(n - to_first);
    CHECK(brute == doctest::Approx(r.ratio).epsilon(1e-2));

    // strip widths are proportional to eps with stable constants
    const StripRatio coarse = strip_ratio(s, x, 1e-2, 0.5);
    CHECK(coarse.min_width > 0.0);
    CHECK(coarse.min_width / 1e-2 == doctest::Approx(r.min_width / eps).epsilon(0.05));
    CHECK(coarse.max_width / 1e-2 == doctest::Approx(r.max_width / eps).epsilon(0.05));
    CHECK(r.min_width <= r.max_width);

    const StripRatio disc = strip_ratio(s, x, eps, 0.1, StripWeight::Disc);
    CHECK(disc.ratio == doctest::Approx(2.0).epsilon(0.02));

    CHECK_THROWS_AS(strip_ratio(s, x, 0.3, 0.05), std::domain_error);
    CHECK_THROWS_AS(strip_ratio(s, {-0.5, 1.05}, eps, 0.1), std::invalid_argument);
}

TEST_CASE("three-well geometry alternates under initial noise")
{
    ThreeWellGeometry geo;
    geo.c_left = 0.05;
    CHECK(geo.hit_count(geo.admissible_eps(690)) == doctest::Approx(690.0).epsilon(1e-12));
    const std::vector<double> eps{geo.admissible_eps(690), geo.admissible_eps(691),
                                  0.5 * (geo.admissible_eps(691) + geo.admissible_eps(692))};
    InitNoise init;
    init.delta = 0.05;
    const auto rows = fig6_counterexample(geo, eps, {-0.5, 4.0}, init, nullptr, ensemble(2000, "fig6-unit"));
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].admissible);
    CHECK(rows[1].admissible);
    CHECK_FALSE(rows[2].admissible);
    CHECK_FALSE(rows[2].warning.empty());
    const double a = rows[0].middle_freq;
    const double b = rows[1].middle_freq;
    CHECK(((a > 0.9 && b < 0.1) || (a < 0.1 && b > 0.9)));
    MESSAGE("non-admissible middle frequency " << rows[2].middle_freq);
}
