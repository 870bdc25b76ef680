#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "nelastic/limitproc.hpp"
#include "nelastic/model1d.hpp"
#include "nelastic/regularize.hpp"
#include "nelastic/rng.hpp"
#include "nelastic/sim1d.hpp"
#include "nelastic/stats.hpp"

using namespace nelastic;

namespace {

FlatModelSpec two_well(double c1 = 1.0, double c2 = 1.0)
{
    FlatModelSpec s;
    s.walls = {-1.0, 0.0, 1.0};
    s.heights = {1.0};
    s.restitution = {Coefficient::constant(c1), Coefficient::constant(1.0), Coefficient::constant(c2)};
    return s;
}

FlatModelSpec five_well()
{
    FlatModelSpec s;
    s.walls = {-2.5, -1.5, -0.5, 0.5, 1.5, 2.5};
    s.heights = {2.0, 32.0, 8.0, 2.0};
    for (double c : {1.0, 2.0, 1.5, 0.5, 1.0, 3.0}) {
        s.restitution.push_back(Coefficient::constant(c));
    }
    return s;
}

// F = -q^2 / 2 on [-1, 1]
PotentialSpec peak(double c1, double c2)
{
    auto s = PotentialSpec::quadratic(1.0, -1.0, 1.0);
    s.c1 = Coefficient::constant(c1);
    s.c2 = Coefficient::constant(c2);
    return s;
}

// Closed-form periods of the quadratic peak.
double peak_period(EdgeId edge, double H)
{
    return edge == 2 ? 4.0 * std::asinh(1.0 / std::sqrt(2.0 * H)) : 2.0 * std::acosh(1.0 / std::sqrt(-2.0 * H));
}

double peak_rhs(double c1, double c2, EdgeId edge, double H)
{
    const double lost = (edge != 1 ? c1 : 0.0) * (H + 0.5) + (edge != 0 ? c2 : 0.0) * (H + 0.5);
    return -2.0 * lost / peak_period(edge, H);
}

// Classical RK4 on a fixed grid.
template <class Rhs>
double rk4(Rhs f, double H, double t, std::size_t steps)
{
    const double h = t / static_cast<double>(steps);
    for (std::size_t i = 0; i < steps; ++i) {
        const double k1 = f(H);
        const double k2 = f(H + 0.5 * h * k1);
        const double k3 = f(H + 0.5 * h * k2);
        const double k4 = f(H + h * k3);
        H += h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
    }
    return H;
}

GraphPath constant_path(double H, EdgeId K, double t_end, std::size_t n = 5)
{
    GraphPath p;
    for (std::size_t i = 0; i < n; ++i) {
        p.points.push_back({t_end * static_cast<double>(i) / static_cast<double>(n - 1), H, K});
    }
    return p;
}

}  // namespace

TEST_CASE("flat edge solution and hitting time")
{
    const LimitModel m = flat_limit(two_well());
    const EdgeFlow& top = m.flows[m.graph.root];
    REQUIRE(top.rate_three_halves.has_value());
    CHECK(*top.rate_three_halves == doctest::Approx(std::numbers::sqrt2).epsilon(1e-15));
    for (double t : {0.0, 0.25, 0.5, 1.0}) {
        CHECK(edge_solution(top, 2.0, t) == doctest::Approx(2.0 / ((t + 1.0) * (t + 1.0))).epsilon(1e-14));
    }
    CHECK(edge_solution(top, 2.0, 1.0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(hitting_time(top, 2.0, 0.5) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(hitting_time(top, 2.0, 2.0) == 0.0);
    CHECK_THROWS_AS(hitting_time(top, 2.0, 3.0), std::domain_error);
    CHECK_THROWS_AS(edge_solution(top, 2.0, 1.01), std::domain_error);
    CHECK_THROWS_AS(edge_solution(top, 0.3, 0.1), std::domain_error);
}

TEST_CASE("a flow with no loss stays put")
{
    EdgeFlow still;
    still.edge = 0;
    still.h_lo = 0.5;
    still.rhs = [](double) { return 0.0; };
    still.rate_three_halves = 0.0;
    CHECK(edge_solution(still, 2.0, 10.0) == 2.0);
    CHECK(edge_solution(still, 2.0, 1e6) == 2.0);
    CHECK(std::isinf(hitting_time(still, 2.0, 1.0)));
}

TEST_CASE("hitting times add up")
{
    const LimitModel flat = flat_limit(two_well(2.0, 1.0));
    const EdgeFlow& top = flat.flows[flat.graph.root];
    CHECK(std::abs(hitting_time(top, 3.0, 1.7) + hitting_time(top, 1.7, 0.6) - hitting_time(top, 3.0, 0.6)) < 1e-10);

    const LimitModel pot = potential_limit(peak(1.0, 0.5));
    const EdgeFlow& upper = pot.flows[2];
    CHECK(std::abs(hitting_time(upper, 1.0, 0.4) + hitting_time(upper, 0.4, 0.05) - hitting_time(upper, 1.0, 0.05)) <
          1e-10);
    const EdgeFlow& well = pot.flows[0];
    CHECK(std::abs(hitting_time(well, -0.05, -0.2) + hitting_time(well, -0.2, -0.4) - hitting_time(well, -0.05, -0.4)) <
          1e-10);
}

TEST_CASE("closed forms satisfy their flows")
{
    // flat: H = (H0^-1/2 + k t / 2)^-2 so dH/dt = -k H^{3/2}
    const LimitModel flat = flat_limit(two_well(2.0, 1.0), {0.15, 0.15, 0.15});
    const EdgeFlow& top = flat.flows[flat.graph.root];
    const double k = *top.rate_three_halves;
    CHECK(k == doctest::Approx(std::numbers::sqrt2 * 3.3 / 2.0).epsilon(1e-15));
    // billiard: H = (sqrt(H0) - k t / 2)^2 so dH/dt = -k sqrt(H)
    const LimitModel bil = billiard_limit(0.5, std::numbers::pi, 6.0, 1.5, 2.0, 1.6, 4.0);
    const EdgeFlow& btop = bil.flows[bil.graph.root];
    const double kb = *btop.rate_half;
    CHECK(kb == doctest::Approx(std::numbers::sqrt2 * 6.0 / (2.0 * std::numbers::pi * std::numbers::pi)));
    const double t_flat = hitting_time(top, 3.0, 0.5);
    const double t_bil = hitting_time(btop, 3.0, 0.5);
    for (int i = 0; i <= 20; ++i) {
        const double tf = t_flat * i / 20.0;
        const double s = 1.0 / std::sqrt(3.0) + 0.5 * k * tf;
        const double Hf = edge_solution(top, 3.0, tf);
        CHECK(std::abs(top.rhs(Hf) + k / (s * s * s)) <= 1e-10 * std::abs(top.rhs(Hf)));
        const double tb = t_bil * i / 20.0;
        const double r = std::sqrt(3.0) - 0.5 * kb * tb;
        const double Hb = edge_solution(btop, 3.0, tb);
        CHECK(std::abs(btop.rhs(Hb) + kb * r) <= 1e-10 * kb * r);
    }
}

TEST_CASE("edge flows lose energy and kernels are proper")
{
    auto check = [](const LimitModel& m) {
        for (const auto& f : m.flows) {
            const double hi = std::isinf(f.h_hi) ? f.h_lo + 4.0 : f.h_hi;
            for (int i = 1; i < 10; ++i) {
                CHECK(f.rhs(f.h_lo + (hi - f.h_lo) * i / 10.0) < 0.0);
            }
        }
        for (const auto& k : m.kernels) {
            CHECK(k.p_left > 0.0);
            CHECK(k.p_left < 1.0);
            CHECK(k.p_left + k.p_right() == 1.0);
        }
    };
    check(flat_limit(five_well()));
    check(potential_limit(peak(2.0, 1.0)));
    check(billiard_limit(0.5, 3.0, 6.0, 1.5, 2.0, 1.5, 4.0));

    const LimitModel m = flat_limit(two_well(2.0, 1.0));
    CHECK(m.kernels[0].p_left == doctest::Approx(2.0 / 3.0));
    // shifted coefficients move the ratio to (2 + 0.15) / (3 + 0.3)
    const LimitModel s = flat_limit(two_well(2.0, 1.0), {0.15, 0.15, 0.15});
    CHECK(s.kernels[0].p_left == doctest::Approx(2.15 / 3.3));
    CHECK_THROWS_AS(flat_limit(two_well(), {0.1}), std::invalid_argument);
}

TEST_CASE("potential flows match the closed-form periods")
{
    const double c1 = 1.0, c2 = 0.5;
    const LimitModel m = potential_limit(peak(c1, c2));
    for (EdgeId e : {EdgeId{0}, EdgeId{1}, EdgeId{2}}) {
        for (double H : e == 2 ? std::vector<double>{1e-3, 0.1, 0.5, 2.0} : std::vector<double>{-0.45, -0.2, -1e-3}) {
            CHECK(m.flows[e].rhs(H) == doctest::Approx(peak_rhs(c1, c2, e, H)).epsilon(1e-10));
        }
    }
    CHECK(m.kernels[0].p_left == doctest::Approx(2.0 / 3.0));

    auto oracle = [&](EdgeId e, double H0, double t) {
        auto f = [&](double H) { return peak_rhs(c1, c2, e, H); };
        const double coarse = rk4(f, H0, t, 400);
        const double fine = rk4(f, H0, t, 800);
        CHECK(std::abs(fine - coarse) < 1e-11);
        return fine;
    };
    const double t_up = 0.5 * hitting_time(m.flows[2], 1.0, 0.0);
    const double H_up = edge_solution(m.flows[2], 1.0, t_up);
    CHECK(std::abs(H_up - oracle(2, 1.0, t_up)) <= 1e-8 * H_up);
    const double t_well = 0.5 * hitting_time(m.flows[0], -0.1, -0.5);
    const double H_well = edge_solution(m.flows[0], -0.1, t_well);
    CHECK(std::abs(H_well - oracle(0, -0.1, t_well)) <= 1e-8 * std::abs(H_well));
}

TEST_CASE("potential hitting time is finite and consistent with the flow")
{
    const LimitModel m = potential_limit(peak(1.0, 0.5));
    const EdgeFlow& up = m.flows[2];
    const double t0 = hitting_time(up, 1.0, 0.0);
    CHECK(std::isfinite(t0));
    CHECK(t0 > 0.0);
    const double near = 1e-8;
    const double t1 = hitting_time(up, 1.0, near);
    CHECK(std::abs(t1 - t0) < 1e-6);
    // invert the flow at t1: the energy misses `near` by at most 1e-6 time units of flow
    const double H1 = edge_solution(up, 1.0, t1);
    CHECK(std::abs(H1 - near) / std::abs(up.rhs(near)) < 1e-6);
}

TEST_CASE("deterministic kernels give seed-independent paths")
{
    LimitModel m = flat_limit(two_well());
    m.kernels[0].p_left = 1.0;
    LimitSampleOptions opt;
    opt.horizon = 3.0;
    opt.points_per_edge = 64;
    const LimitPath a = sample_limit_path(m, {2.0, m.graph.root}, StreamKey(1, "det"), 0, opt);
    const LimitPath b = sample_limit_path(m, {2.0, m.graph.root}, StreamKey(2, "other"), 5, opt);
    REQUIRE(a.path.points.size() == b.path.points.size());
    for (std::size_t i = 0; i < a.path.points.size(); ++i) {
        CHECK(a.path.points[i].t == b.path.points[i].t);
        CHECK(a.path.points[i].H == b.path.points[i].H);
        CHECK(a.path.points[i].K == b.path.points[i].K);
    }
    REQUIRE(a.well.has_value());
    CHECK(*a.well == 0);
    REQUIRE(a.vertex_times.size() == 1);
    CHECK(a.vertex_times[0] == doctest::Approx(1.0).epsilon(1e-14));
    const GraphPoint mid = a.path.at(0.5);
    CHECK(mid.K == m.graph.root);
    CHECK(mid.H == doctest::Approx(2.0 / 2.25).epsilon(1e-3));
}

TEST_CASE("sampled branch frequency matches the kernel")
{
    const LimitModel m = flat_limit(two_well(2.0, 1.0));
    LimitSampleOptions opt;
    opt.horizon = 2.0;
    opt.points_per_edge = 4;
    const StreamKey key(77, "branch");
    const std::uint32_t n = 10'000;
    std::uint64_t left = 0;
    for (std::uint32_t i = 0; i < n; ++i) {
        const LimitPath p = sample_limit_path(m, {2.0, m.graph.root}, key, i, opt);
        REQUIRE(p.well.has_value());
        left += *p.well == 0 ? 1 : 0;
    }
    const double f = static_cast<double>(left) / n;
    CHECK(std::abs(f - 2.0 / 3.0) <= 3.0 * proportion_sigma(2.0 / 3.0, n));
}

TEST_CASE("five-well terminal law is the product of the kernels")
{
    const auto spec = five_well();
    const LimitModel m = flat_limit(spec);
    const std::vector<double> product = leaf_distribution(m);
    REQUIRE(product.size() == 5);
    double total = 0.0;
    for (double p : product) {
        total += p;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-14));

    // independent product along root-to-leaf walks of the graph
    const ReebGraph& g = m.graph;
    for (std::size_t w = 0; w < 5; ++w) {
        double p = 1.0;
        EdgeId e = g.leaf_of_well(w);
        while (!g.edges[e].is_root()) {
            const GraphVertex& v = g.vertices[g.edges[e].upper];
            const GraphEdge& up = g.edges[v.above];
            const double cl = spec.restitution[up.left_wall](0.0);
            const double cr = spec.restitution[up.right_wall](0.0);
            p *= (e == v.below_left ? cl : cr) / (cl + cr);
            e = v.above;
        }
        CHECK(product[w] == doctest::Approx(p).epsilon(1e-14));
    }

    LimitSampleOptions opt;
    opt.horizon = 50.0;
    opt.points_per_edge = 2;
    const StreamKey key(8, "five");
    std::vector<std::uint64_t> counts(5, 0);
    for (std::uint32_t i = 0; i < 10'000; ++i) {
        const LimitPath p = sample_limit_path(m, {g.edges[g.root].h_lo + 100.0, g.root}, key, i, opt);
        REQUIRE(p.well.has_value());
        ++counts[*p.well];
    }
    CHECK(chi_square_gof(counts, product).p_value > 0.01);
}

TEST_CASE("graph distance")
{
    const LimitModel m = flat_limit(two_well());
    const GraphMetric rho(m.graph);
    // vertex at H = 0.5
    CHECK(rho.distance({0.3, 0}, {0.3, 0}) == 0.0);
    CHECK(rho.distance({0.3, 0}, {0.1, 0}) == doctest::Approx(0.2));
    CHECK(rho.distance({0.5 - 0.1, 0}, {0.5 - 0.25, 1}) == doctest::Approx(0.35));
    CHECK(rho.distance({0.4, 0}, {1.2, 2}) == doctest::Approx(0.8));

    const GraphPath a = constant_path(0.4, 0, 2.0);
    CHECK(path_distance(a, a, rho) == 0.0);
    CHECK(path_distance(a, constant_path(0.3, 0, 2.0), rho) == doctest::Approx(0.1));
    CHECK(path_distance(a, constant_path(0.2, 1, 2.0), rho) == doctest::Approx(0.4));
    // compared on the common range only
    GraphPath shorter = constant_path(0.4, 0, 1.0);
    shorter.points.back().H = 0.35;
    CHECK(path_distance(a, shorter, rho) == doctest::Approx(0.05));
    CHECK_THROWS_AS(path_distance(a, GraphPath{}, rho), std::invalid_argument);
}

TEST_CASE("graph distance is a metric on the five-well graph")
{
    const LimitModel m = flat_limit(five_well());
    const ReebGraph& g = m.graph;
    const GraphMetric rho(g);
    RandomStream rng(StreamKey(3, "metric"), 0);
    auto draw = [&] {
        const EdgeId e = static_cast<EdgeId>(rng.uniform() * static_cast<double>(g.edges.size()));
        const auto& edge = g.edges[e];
        const double hi = edge.is_root() ? edge.h_lo + 100.0 : edge.h_hi;
        return GraphPoint{edge.h_lo + (hi - edge.h_lo) * rng.uniform(), e};
    };
    for (int i = 0; i < 2000; ++i) {
        const GraphPoint x = draw(), y = draw(), z = draw();
        CHECK(rho.distance(x, y) == doctest::Approx(rho.distance(y, x)).epsilon(1e-14));
        CHECK(rho.distance(x, z) <= rho.distance(x, y) + rho.distance(y, z) + 1e-12);
        CHECK(rho.distance(x, y) >= std::abs(x.H - y.H) - 1e-12);
    }
}

TEST_CASE("simulated slow paths approach the limit path edge by edge")
{
    const auto spec = two_well(2.0, 1.0);
    DynNoise noise;
    noise.delta = 0.1;
    noise.laws.assign(3, NoiseLaw::uniform(1.0, 2.0));
    std::vector<double> shift;
    for (const auto& law : noise.laws) {
        shift.push_back(noise.delta * law.mean());
    }
    const LimitModel lim = flat_limit(spec, shift);
    const GraphMetric rho(lim.graph);
    const PhasePoint x0{-0.5, 2.0};
    const GraphPoint y0 = project(spec, lim.graph, x0);
    REQUIRE(y0.K == lim.graph.root);
    const double horizon = hitting_time(lim.flows[y0.K], y0.H, 0.5) + 1.0;

    auto percentile95 = [&](double eps) {
        SimOptions so;
        so.horizon = horizon;
        so.stop_at_well = false;
        PathDistanceOptions po;
        po.exclusion_window = 10.0 * eps;
        LimitSampleOptions lo;
        lo.horizon = horizon;
        lo.points_per_edge = 256;
        const StreamKey key(11, "weak");
        std::vector<double> d;
        for (std::uint32_t i = 0; i < 200; ++i) {
            const SimResult r = simulate_flat(spec, lim.graph, x0, eps, so, noise.bind(key, i));
            const EdgeId leaf = r.path.points.back().K;
            REQUIRE(lim.graph.edges[leaf].is_leaf());
            LimitModel forced = lim;
            forced.kernels[0].p_left = leaf == forced.kernels[0].left ? 1.0 : 0.0;
            const LimitPath l = sample_limit_path(forced, y0, key, i, lo);
            d.push_back(path_distance(r.path, l.path, rho, po));
        }
        return quantile(d, 0.95);
    };
    const double coarse = percentile95(1e-2);
    const double fine = percentile95(1e-3);
    MESSAGE("95th percentile sup distance: eps 1e-2 " << coarse << ", eps 1e-3 " << fine);
    CHECK(fine < coarse);
    CHECK(fine < 0.02);
}
