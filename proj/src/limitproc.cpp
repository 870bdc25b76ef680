#include "nelastic/limitproc.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/numeric/odeint.hpp>

namespace nelastic {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

EdgeFlow make_flow(const GraphEdge& e)
{
    EdgeFlow f;
    f.edge = e.id;
    f.h_lo = e.h_lo;
    f.h_hi = e.h_hi;
    return f;
}

void require_inside(const EdgeFlow& flow, double H0)
{
    if (!(H0 >= flow.h_lo) || !(H0 <= flow.h_hi)) {
        throw std::domain_error("energy " + std::to_string(H0) + " outside edge " + std::to_string(flow.edge));
    }
}

}  // namespace

LimitModel flat_limit(const FlatModelSpec& spec, const std::vector<double>& shift)
{
    spec.validate();
    if (!shift.empty() && shift.size() != spec.wall_count()) {
        throw std::invalid_argument("need one coefficient shift per wall");
    }
    LimitModel m;
    m.graph = build_graph(spec);
    auto coeff = [&spec, shift](std::size_t wall) {
        const Coefficient c = spec.restitution[wall];
        const double s = shift.empty() ? 0.0 : shift[wall];
        return std::make_pair(c, s);
    };
    for (const auto& e : m.graph.edges) {
        EdgeFlow f = make_flow(e);
        const double width = spec.walls[e.right_wall] - spec.walls[e.left_wall];
        const auto [cl, sl] = coeff(e.left_wall);
        const auto [cr, sr] = coeff(e.right_wall);
        f.rhs = [=](double H) {
            const double v = std::sqrt(2.0 * H);
            return -(cl(v) + sl + cr(v) + sr) * H * v / width;
        };
        if (cl.is_constant() && cr.is_constant()) {
            f.rate_three_halves = std::numbers::sqrt2 * (cl(0.0) + sl + cr(0.0) + sr) / width;
        }
        m.flows.push_back(std::move(f));
    }
    for (const auto& v : m.graph.vertices) {
        const auto& up = m.graph.edges[v.above];
        const double speed = std::sqrt(2.0 * v.energy);
        const auto [cl, sl] = coeff(up.left_wall);
        const auto [cr, sr] = coeff(up.right_wall);
        const double wl = cl(speed) + sl;
        const double wr = cr(speed) + sr;
        m.kernels.push_back(VertexKernel{v.id, v.below_left, v.below_right, wl / (wl + wr)});
    }
    return m;
}

LimitModel potential_limit(const PotentialSpec& spec, const PeriodOptions& opt)
{
    LimitModel m;
    m.graph = build_graph(spec);
    const double F1 = spec.F(spec.a1);
    const double F2 = spec.F(spec.a2);
    const Coefficient c1 = spec.c1;
    const Coefficient c2 = spec.c2;
    for (const auto& e : m.graph.edges) {
        EdgeFlow f = make_flow(e);
        const EdgeId id = e.id;
        f.rhs = [spec, opt, id, F1, F2, c1, c2](double H) {
            double loss = 0.0;
            if (id != 1) {
                loss += c1(H) * (H - F1);
            }
            if (id != 0) {
                loss += c2(H) * (H - F2);
            }
            return -2.0 * loss / period(spec, id, H, opt).value;
        };
        m.flows.push_back(std::move(f));
    }
    const double top = spec.vertex_energy();
    const double w1 = c1(top) * (top - F1);
    const double w2 = c2(top) * (top - F2);
    m.kernels.push_back(VertexKernel{0, 0, 1, w1 / (w1 + w2)});
    return m;
}

LimitModel billiard_limit(double vertex_energy, double area, double cm_total, double area1, double cm1, double area2,
                          double cm2)
{
    if (!(area > 0.0 && area1 > 0.0 && area2 > 0.0 && cm_total > 0.0 && cm1 > 0.0 && cm2 > 0.0)) {
        throw std::invalid_argument("billiard limit needs positive areas and loss integrals");
    }
    LimitModel m;
    m.graph = two_well_graph(vertex_energy, 0.0);
    const double a[3] = {area1, area2, area};
    const double cm[3] = {cm1, cm2, cm_total};
    for (const auto& e : m.graph.edges) {
        EdgeFlow f = make_flow(e);
        const double k = std::numbers::sqrt2 * cm[e.id] / (kTwoPi * a[e.id]);
        f.rhs = [k](double H) { return -k * std::sqrt(std::max(H, 0.0)); };
        f.rate_half = k;
        m.flows.push_back(std::move(f));
    }
    m.kernels.push_back(VertexKernel{0, 0, 1, cm1 / (cm1 + cm2)});
    return m;
}

double hitting_time(const EdgeFlow& flow, double H0, double H_target)
{
    require_inside(flow, H0);
    if (H_target > H0) {
        throw std::domain_error("hitting_time: target energy above the start");
    }
    if (H_target < flow.h_lo) {
        throw std::domain_error("hitting_time: target below the edge");
    }
    if (H_target == H0) {
        return 0.0;
    }
    if (flow.rate_three_halves) {
        const double k = *flow.rate_three_halves;
        if (k == 0.0) {
            return kInf;
        }
        if (H_target <= 0.0) {
            return kInf;
        }
        return 2.0 * (1.0 / std::sqrt(H_target) - 1.0 / std::sqrt(H0)) / k;
    }
    if (flow.rate_half) {
        const double k = *flow.rate_half;
        if (k == 0.0) {
            return kInf;
        }
        return 2.0 * (std::sqrt(H0) - std::sqrt(std::max(H_target, 0.0))) / k;
    }
    boost::math::quadrature::tanh_sinh<double> integrator;
    auto f = [&](double H) {
        if (H <= flow.h_lo) {
            return 0.0;
        }
        return -1.0 / flow.rhs(H);
    };
    return integrator.integrate(f, H_target, H0, 1e-12);
}

namespace {

// Flow from H0 over time t without checking the edge exit.
double advance(const EdgeFlow& flow, double H0, double t)
{
    if (flow.rate_three_halves) {
        if (*flow.rate_three_halves == 0.0) {
            return H0;
        }
        const double s = 1.0 / std::sqrt(H0) + 0.5 * (*flow.rate_three_halves) * t;
        return 1.0 / (s * s);
    }
    if (flow.rate_half) {
        const double s = std::max(std::sqrt(H0) - 0.5 * (*flow.rate_half) * t, 0.0);
        return std::max(s * s, flow.h_lo);
    }
    using State = std::array<double, 1>;
    namespace ode = boost::numeric::odeint;
    State x{H0};
    auto sys = [&](const State& y, State& dy, double) { dy[0] = flow.rhs(std::max(y[0], flow.h_lo)); };
    auto stepper = ode::make_controlled(1e-14, 1e-10, ode::runge_kutta_dopri5<State>());
    ode::integrate_adaptive(stepper, sys, x, 0.0, t, std::min(t, 1e-3));
    return std::max(x[0], flow.h_lo);
}

}  // namespace

double edge_solution(const EdgeFlow& flow, double H0, double t)
{
    require_inside(flow, H0);
    if (t < 0.0) {
        throw std::domain_error("edge_solution: negative time");
    }
    if (t == 0.0) {
        return H0;
    }
    const double t_exit = hitting_time(flow, H0, flow.h_lo);
    if (t > t_exit * (1.0 + 1e-12)) {
        throw std::domain_error("edge_solution: time " + std::to_string(t) + " is past the edge exit at " +
                                std::to_string(t_exit));
    }
    if (t >= t_exit) {
        return flow.h_lo;
    }
    return advance(flow, H0, t);
}

LimitPath sample_limit_path(const LimitModel& model, GraphPoint y0, const StreamKey& key, std::uint32_t replica,
                            const LimitSampleOptions& opt)
{
    const ReebGraph& g = model.graph;
    if (y0.K >= g.edges.size()) {
        throw std::invalid_argument("start edge not in graph");
    }
    RandomStream rng(key, replica, 0);
    LimitPath out;
    EdgeId e = y0.K;
    double H = y0.H;
    double t = 0.0;
    const std::size_t n = std::max<std::size_t>(opt.points_per_edge, 2);
    out.path.points.push_back(PathPoint{0.0, H, e});
    if (g.edges[e].is_leaf()) {
        out.well = g.edges[e].well;
    }
    while (t < opt.horizon) {
        const EdgeFlow& flow = model.flows[e];
        const GraphEdge& edge = g.edges[e];
        const double t_exit = hitting_time(flow, H, edge.h_lo);
        const double t_end = std::min(t + t_exit, opt.horizon);
        for (std::size_t i = 1; i <= n; ++i) {
            const double tau = t + (t_end - t) * static_cast<double>(i) / static_cast<double>(n);
            const double prev_tau = out.path.points.back().t;
            const double h = (i == n && t_end == t + t_exit) ? edge.h_lo
                                                               : advance(flow, out.path.points.back().H, tau - prev_tau);
            out.path.points.push_back(PathPoint{tau, h, e});
        }
        if (t + t_exit >= opt.horizon) {
            break;
        }
        t += t_exit;
        H = edge.h_lo;
        if (edge.is_leaf()) {
            out.path.points.push_back(PathPoint{opt.horizon, H, e});
            break;
        }
        const VertexKernel& k = model.kernels[edge.lower];
        out.vertex_times.push_back(t);
        e = rng.uniform() < k.p_left ? k.left : k.right;
        if (g.edges[e].is_leaf()) {
            out.well = g.edges[e].well;
        }
    }
    return out;
}

std::vector<double> leaf_distribution(const LimitModel& model)
{
    const ReebGraph& g = model.graph;
    std::vector<double> probs(g.well_count(), 0.0);
    for (const auto& e : g.edges) {
        if (!e.is_leaf()) {
            continue;
        }
        double p = 1.0;
        for (EdgeId c : g.path_to_root(e.id)) {
            const VertexId v = g.edges[c].upper;
            if (v == kNone) {
                break;
            }
            const VertexKernel& k = model.kernels[v];
            p *= (c == k.left) ? k.p_left : k.p_right();
        }
        probs[e.well] = p;
    }
    return probs;
}

GraphMetric::GraphMetric(const ReebGraph& graph) : graph_(graph)
{
    const std::size_t nv = graph.vertices.size();
    vertex_dist_.assign(nv, std::vector<double>(nv, kInf));
    for (std::size_t i = 0; i < nv; ++i) {
        vertex_dist_[i][i] = 0.0;
    }
    for (const auto& e : graph.edges) {
        if (e.upper != kNone && e.lower != kNone) {
            const double d = std::abs(graph.vertices[e.upper].energy - graph.vertices[e.lower].energy);
            vertex_dist_[e.upper][e.lower] = vertex_dist_[e.lower][e.upper] = d;
        }
    }
    for (std::size_t k = 0; k < nv; ++k) {
        for (std::size_t i = 0; i < nv; ++i) {
            for (std::size_t j = 0; j < nv; ++j) {
                vertex_dist_[i][j] = std::min(vertex_dist_[i][j], vertex_dist_[i][k] + vertex_dist_[k][j]);
            }
        }
    }
}

double GraphMetric::distance(GraphPoint a, GraphPoint b) const
{
    if (a.K == b.K) {
        return std::abs(a.H - b.H);
    }
    const auto& ea = graph_.edges.at(a.K);
    const auto& eb = graph_.edges.at(b.K);
    double best = kInf;
    for (VertexId va : {ea.upper, ea.lower}) {
        if (va == kNone) {
            continue;
        }
        for (VertexId vb : {eb.upper, eb.lower}) {
            if (vb == kNone) {
                continue;
            }
            const double d = std::abs(a.H - graph_.vertices[va].energy) + vertex_dist_[va][vb] +
                             std::abs(b.H - graph_.vertices[vb].energy);
            best = std::min(best, d);
        }
    }
    return best;
}

double path_distance(const GraphPath& a, const GraphPath& b, const GraphMetric& metric,
                     const PathDistanceOptions& opt)
{
    if (a.empty() || b.empty()) {
        throw std::invalid_argument("path_distance on an empty path");
    }
    const double lo = std::max(a.t_begin(), b.t_begin());
    const double hi = std::min(a.t_end(), b.t_end());
    if (hi < lo) {
        return 0.0;
    }
    std::vector<double> times{lo, hi};
    for (const auto* p : {&a, &b}) {
        for (const auto& pt : p->points) {
            if (pt.t >= lo && pt.t <= hi) {
                times.push_back(pt.t);
            }
        }
    }
    std::vector<double> passages = a.edge_change_times();
    const auto pb = b.edge_change_times();
    passages.insert(passages.end(), pb.begin(), pb.end());
    std::sort(passages.begin(), passages.end());
    const double half = 0.5 * opt.exclusion_window;
    auto excluded = [&](double t) {
        if (half <= 0.0 || passages.empty()) {
            return false;
        }
        const auto it = std::lower_bound(passages.begin(), passages.end(), t - half);
        return it != passages.end() && *it <= t + half;
    };
    double sup = 0.0;
    for (double t : times) {
        if (!excluded(t)) {
            sup = std::max(sup, metric.distance(a.at(t), b.at(t)));
        }
    }
    return sup;
}

}  // namespace nelastic
