#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "nelastic/model1d.hpp"
#include "nelastic/sim1d.hpp"

using namespace nelastic;

namespace {

FlatModelSpec flat(std::vector<double> walls, std::vector<double> heights, double c = 1.0)
{
    FlatModelSpec s;
    s.walls = std::move(walls);
    s.heights = std::move(heights);
    s.restitution.assign(s.walls.size(), Coefficient::constant(c));
    return s;
}

FlatModelSpec five_well()
{
    return flat({-2.5, -1.5, -0.5, 0.5, 1.5, 2.5}, {2.0, 32.0, 8.0, 2.0});
}

// Connected regions of every speed level, as (left wall, right wall) pairs,
// plus the number of merge events, found by sweeping the distinct heights.
struct Sweep {
    std::set<std::pair<std::size_t, std::size_t>> regions;
    std::size_t merges = 0;
};

Sweep sweep_levels(const FlatModelSpec& s)
{
    std::vector<double> levels(s.heights.begin(), s.heights.end());
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    std::vector<double> probes{0.5 * levels.front()};
    for (std::size_t i = 0; i + 1 < levels.size(); ++i) {
        probes.push_back(0.5 * (levels[i] + levels[i + 1]));
    }
    probes.push_back(2.0 * levels.back());

    Sweep out;
    std::set<std::pair<std::size_t, std::size_t>> previous;
    for (double p : probes) {
        std::set<std::pair<std::size_t, std::size_t>> now;
        std::size_t left = 0;
        for (std::size_t w = 1; w < s.walls.size(); ++w) {
            const bool blocks = w + 1 == s.walls.size() || p <= s.heights[w - 1];
            if (blocks) {
                now.insert({left, w});
                left = w;
            }
        }
        for (const auto& r : now) {
            if (!previous.empty() && !previous.count(r)) {
                std::size_t children = 0;
                for (const auto& q : previous) {
                    children += q.first >= r.first && q.second <= r.second;
                }
                CHECK(children == 2);
                ++out.merges;
            }
            out.regions.insert(r);
        }
        previous = now;
    }
    return out;
}

}  // namespace

TEST_CASE("graph of the two-well model")
{
    const auto s = flat({-1.0, 0.0, 1.0}, {1.0});
    const ReebGraph g = build_graph(s);
    CHECK(g.vertices.size() == 1);
    CHECK(g.edges.size() == 3);
    CHECK(g.well_count() == 2);
    CHECK(g.edges[g.root].h_lo == doctest::Approx(0.5));
    CHECK(g.edges[g.leaf_of_well(0)].h_hi == doctest::Approx(0.5));
    CHECK_NOTHROW(g.check_invariants());
}

TEST_CASE("graph of a single well")
{
    const ReebGraph g = build_graph(flat({0.0, 2.0}, {}));
    CHECK(g.vertices.empty());
    CHECK(g.edges.size() == 1);
    CHECK(g.edges[0].is_leaf());
    CHECK(g.edges[0].is_root());
}

TEST_CASE("five-well graph agrees with a brute-force level sweep")
{
    const auto s = five_well();
    const ReebGraph g = build_graph(s);
    const Sweep brute = sweep_levels(s);
    CHECK(g.vertices.size() == 4);
    CHECK(g.edges.size() == 9);
    CHECK(brute.regions.size() == g.edges.size());
    CHECK(brute.merges == g.vertices.size());
    std::set<std::pair<std::size_t, std::size_t>> from_graph;
    for (const auto& e : g.edges) {
        from_graph.insert({e.left_wall, e.right_wall});
    }
    CHECK(from_graph == brute.regions);
    CHECK_NOTHROW(g.check_invariants());
}

TEST_CASE("graph is a binary tree with matching energies")
{
    for (const auto& s : {flat({-1.0, 0.0, 1.0}, {1.0}), five_well(), flat({0, 1, 2, 3, 4}, {1.0, 3.0, 2.0})}) {
        const ReebGraph g = build_graph(s);
        CHECK(g.edges.size() == 2 * g.vertices.size() + 1);
        for (const auto& v : g.vertices) {
            const auto& up = g.edges.at(v.above);
            CHECK(up.h_lo == doctest::Approx(v.energy));
            CHECK(g.edges.at(v.below_left).h_hi == doctest::Approx(v.energy));
            CHECK(g.edges.at(v.below_right).h_hi == doctest::Approx(v.energy));
        }
        for (std::size_t w = 0; w < g.well_count(); ++w) {
            const auto path = g.path_to_root(g.leaf_of_well(w));
            CHECK(path.back() == g.root);
            CHECK(path.size() <= g.edges.size());
        }
    }
}

TEST_CASE("invalid models are rejected")
{
    CHECK_THROWS_AS(flat({0.0, 0.0, 1.0}, {1.0}).validate(), std::invalid_argument);
    CHECK_THROWS_AS(flat({0.0, 2.0, 1.0}, {1.0}).validate(), std::invalid_argument);
    CHECK_THROWS_AS(flat({0.0, 1.0, 2.0}, {}).validate(), std::invalid_argument);
    // two interior maxima at +-1/2
    PotentialSpec two_peaks;
    two_peaks.F = [](double q) { return -(q * q - 0.25) * (q * q - 0.25); };
    two_peaks.dF = [](double q) { return -4.0 * q * (q * q - 0.25); };
    two_peaks.a1 = -1.0;
    two_peaks.a2 = 1.0;
    CHECK_THROWS_AS(two_peaks.validate_and_locate_peak(), std::invalid_argument);
}

TEST_CASE("projection onto the graph")
{
    const auto s = flat({-1.0, 0.0, 1.0}, {1.0});
    const ReebGraph g = build_graph(s);
    const GraphPoint hi = project(s, g, {0.3, 5.0});
    CHECK(hi.K == g.root);
    CHECK(hi.H == doctest::Approx(12.5));
    const GraphPoint left = project(s, g, {-0.5, 0.4});
    CHECK(left.K == g.leaf_of_well(0));
    CHECK(left.H == doctest::Approx(0.08));
    CHECK(project(s, g, {0.5, -0.4}).K == g.leaf_of_well(1));

    auto pot = PotentialSpec::quadratic(1.0, -1.0, 1.0);
    pot.validate_and_locate_peak();
    const ReebGraph pg = build_graph(pot);
    const GraphPoint right = project(pot, pg, {0.9, 0.1});
    CHECK(right.H < pot.vertex_energy());
    CHECK(right.K == 1);
    CHECK(project(pot, pg, {-0.9, 0.1}).K == 0);
    CHECK(project(pot, pg, {0.9, 1.5}).K == 2);
}

TEST_CASE("projection is constant along elastic free flight")
{
    const auto s = five_well();
    const ReebGraph g = build_graph(s);
    for (const PhasePoint x0 : {PhasePoint{-2.0, 1.0}, PhasePoint{0.1, -5.0}, PhasePoint{-1.0, 40.0}}) {
        SimOptions opt;
        opt.collision_limit = 1;
        opt.stop_at_well = false;
        const SimResult r = simulate_flat(s, g, x0, 0.0, opt);
        REQUIRE(r.log.size() == 1);
        const GraphPoint start = project(s, g, x0);
        for (int k = 1; k < 20; ++k) {
            const double t = r.log[0].t * k / 20.0;
            const GraphPoint y = project(s, g, {x0.q + x0.p * t, x0.p});
            CHECK(y.K == start.K);
            CHECK(y.H == start.H);
        }
    }

    auto pot = PotentialSpec::quartic(1.0, 0.5, -1.0, 1.2);
    pot.validate_and_locate_peak();
    const ReebGraph pg = build_graph(pot);
    PhasePoint x{0.6, 0.3};
    const GraphPoint start = project(pot, pg, x);
    for (int i = 0; i < 200; ++i) {
        x = yoshida_step(pot.dF, x, 1e-3);
        const GraphPoint y = project(pot, pg, x);
        CHECK(y.K == start.K);
        CHECK(y.H == doctest::Approx(start.H).epsilon(1e-10));
    }
}

TEST_CASE("flat periods")
{
    const auto s = flat({-1.0, 0.0, 1.0}, {1.0});
    const ReebGraph g = build_graph(s);
    CHECK(period(s, g, g.root, 2.0) == doctest::Approx(2.0).epsilon(1e-15));
    const double T = period(s, g, g.leaf_of_well(0), 0.1);
    CHECK(period(s, g, g.leaf_of_well(0), 0.4) == doctest::Approx(T / 2.0).epsilon(1e-15));
    CHECK_THROWS_AS(period(s, g, g.root, 0.5), std::domain_error);
    CHECK_THROWS_AS(period(s, g, g.leaf_of_well(1), 0.0), std::domain_error);

    const auto f = five_well();
    const ReebGraph fg = build_graph(f);
    for (const auto& e : fg.edges) {
        const double width = f.walls[e.right_wall] - f.walls[e.left_wall];
        for (double frac : {0.1, 0.5, 0.99}) {
            const double H = e.is_root() ? e.h_lo * (1.0 + 10.0 * frac) : e.h_lo + frac * (e.h_hi - e.h_lo);
            CHECK(std::abs(period(f, fg, e.id, H) * std::sqrt(2.0 * H) - 2.0 * width) < 1e-12);
        }
    }
}

TEST_CASE("harmonic period integral against an independent quadrature")
{
    const auto F = [](double q) { return q * q; };
    const auto dF = [](double q) { return 2.0 * q; };
    const double turn = std::sqrt(0.5);
    const PeriodResult r = period_integral(F, -turn, turn, 0.5, true, true, 1e-12, dF);
    // tanh-sinh hands over the distance to the nearer endpoint, which avoids
    // cancellation in 0.5 - q^2 at the turning points
    boost::math::quadrature::tanh_sinh<double> ts;
    const double oracle = 2.0 * ts.integrate(
                                    [&](double, double xc) {
                                        const double d = std::abs(xc);
                                        return 1.0 / std::sqrt(2.0 * d * (2.0 * turn - d));
                                    },
                                    -turn, turn);
    CHECK(r.value == doctest::Approx(oracle).epsilon(1e-10));
    CHECK(r.value == doctest::Approx(std::numbers::pi * std::numbers::sqrt2).epsilon(1e-10));
    // without F' the same integral is still good to a few parts in 1e8
    CHECK(period_integral(F, -turn, turn, 0.5, true, true).value == doctest::Approx(oracle).epsilon(1e-7));
}

TEST_CASE("potential periods match closed forms for a quadratic peak")
{
    // F = -q^2/2 on [-1, 1]: above the vertex T = 4 asinh(1/sqrt(2H)); inside a
    // well (H < 0) T = 2 acosh(1/sqrt(-2H))
    auto pot = PotentialSpec::quadratic(1.0, -1.0, 1.0);
    pot.validate_and_locate_peak();
    for (double H : {0.01, 0.3, 2.0}) {
        const PeriodResult r = period(pot, 2, H);
        CHECK(r.value == doctest::Approx(4.0 * std::asinh(1.0 / std::sqrt(2.0 * H))).epsilon(1e-10));
        CHECK(r.value > 0.0);
    }
    for (double H : {-0.45, -0.2, -0.01}) {
        const double expect = 2.0 * std::acosh(1.0 / std::sqrt(-2.0 * H));
        CHECK(period(pot, 0, H).value == doctest::Approx(expect).epsilon(1e-10));
        CHECK(period(pot, 1, H).value == doctest::Approx(expect).epsilon(1e-10));
    }
    CHECK_THROWS_AS(period(pot, 2, 0.0), std::domain_error);
    CHECK_THROWS_AS(period(pot, 0, -0.5), std::domain_error);
    const PeriodResult clamped = period(pot, 2, 1e-14);
    CHECK(clamped.clamped);
    CHECK(std::isfinite(clamped.value));
}

TEST_CASE("potential period quadrature converges within its error bound")
{
    auto pot = PotentialSpec::cosine(1.0, 2.0, -1.2, 1.0, 0.1);
    pot.validate_and_locate_peak();
    for (EdgeId e : {EdgeId{0}, EdgeId{1}, EdgeId{2}}) {
        const double H = e == 2 ? pot.vertex_energy() + 0.2 : pot.vertex_energy() - 0.3;
        PeriodOptions loose;
        loose.rel_tol = 1e-8;
        PeriodOptions tight;
        tight.rel_tol = 5e-9;
        const PeriodResult a = period(pot, e, H, loose);
        const PeriodResult b = period(pot, e, H, tight);
        CHECK(std::abs(a.value - b.value) <= a.error + 1e-14 * a.value);
    }
}
