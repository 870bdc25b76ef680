#include "nelastic/sim1d.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nelastic {

GraphPoint GraphPath::at(double t) const
{
    if (points.empty()) {
        throw std::logic_error("GraphPath::at on an empty path");
    }
    if (t <= points.front().t) {
        return GraphPoint{points.front().H, points.front().K};
    }
    if (t >= points.back().t) {
        return GraphPoint{points.back().H, points.back().K};
    }
    const auto it = std::lower_bound(points.begin(), points.end(), t,
                                     [](const PathPoint& p, double value) { return p.t < value; });
    const PathPoint& b = *it;
    const PathPoint& a = *(it - 1);
    const double w = (t - a.t) / (b.t - a.t);
    return GraphPoint{a.H + w * (b.H - a.H), b.K};
}

std::vector<double> GraphPath::edge_change_times() const
{
    std::vector<double> times;
    for (std::size_t i = 1; i < points.size(); ++i) {
        if (points[i].K != points[i - 1].K) {
            times.push_back(points[i].t);
        }
    }
    return times;
}

std::string to_string(StopReason r)
{
    switch (r) {
    case StopReason::Horizon:
        return "horizon";
    case StopReason::StopEnergy:
        return "stop_energy";
    case StopReason::Well:
        return "well";
    case StopReason::CollisionLimit:
        return "collision_limit";
    }
    return "unknown";
}

namespace {

void check_eps(double eps)
{
    if (!(eps >= 0.0) || !(eps < 1.0)) {
        throw std::invalid_argument("eps must lie in [0, 1)");
    }
}

void check_termination(double eps, const SimOptions& opt)
{
    const bool can_stop = std::isfinite(opt.horizon) || opt.collision_limit > 0 ||
                          (eps > 0.0 && (opt.stop_at_well || opt.stop_energy > 0.0));
    if (!can_stop) {
        throw std::invalid_argument("simulation has no stopping rule (set a horizon or a collision limit)");
    }
}

double reflect_factor(double eps, double c, double extra, std::size_t wall)
{
    const double factor = 1.0 - eps * c - eps * extra;
    if (!(factor > 0.0)) {
        throw std::runtime_error("restitution factor " + std::to_string(factor) + " at wall " + std::to_string(wall) +
                                 " is not positive; reduce eps or the noise amplitude");
    }
    return factor;
}

}  // namespace

SimResult simulate_flat(const FlatModelSpec& spec, PhasePoint x0, double eps, const SimOptions& opt,
                        const WallNoise& noise)
{
    spec.validate();
    const ReebGraph graph = build_graph(spec);
    return simulate_flat(spec, graph, x0, eps, opt, noise);
}

SimResult simulate_flat(const FlatModelSpec& spec, const ReebGraph& graph, PhasePoint x0, double eps,
                        const SimOptions& opt, const WallNoise& noise)
{
    check_eps(eps);
    check_termination(eps, opt);
    const auto& walls = spec.walls;
    if (!(x0.q >= walls.front() && x0.q <= walls.back())) {
        throw std::invalid_argument("initial position outside the wall range");
    }
    if (x0.p == 0.0 || !std::isfinite(x0.p)) {
        throw std::invalid_argument("initial momentum must be finite and nonzero");
    }
    const double scale = time_scale(eps);
    const double t_stop = opt.horizon / scale;

    SimResult res;
    double q = x0.q;
    double p = x0.p;
    double t = 0.0;
    std::size_t cell = spec.cell_of(q, p);
    std::vector<std::uint64_t> hits(walls.size(), 0);
    EdgeId edge = edge_of(spec, graph, cell, std::abs(p));
    if (opt.record_path) {
        res.path.points.push_back(PathPoint{0.0, 0.5 * p * p, edge});
    }

    auto finish = [&](StopReason why) {
        res.reason = why;
        res.final_state = PhasePoint{q, p};
        res.final_edge = edge;
        res.t_end = t * scale;
        if (opt.record_path && res.path.points.back().t < res.t_end) {
            res.path.points.push_back(PathPoint{res.t_end, 0.5 * p * p, edge});
        }
    };

    if (opt.stop_at_well && graph.edges[edge].is_leaf()) {
        res.well = graph.edges[edge].well;
        finish(StopReason::Well);
        return res;
    }

    for (;;) {
        const std::size_t target = p > 0.0 ? cell + 1 : cell;
        const double speed = std::abs(p);
        const double dt = std::abs(walls[target] - q) / speed;
        if (t + dt > t_stop) {
            q += p * (t_stop - t);
            t = t_stop;
            finish(StopReason::Horizon);
            return res;
        }
        t += dt;
        q = walls[target];
        if (speed > spec.height(target)) {
            cell = p > 0.0 ? cell + 1 : cell - 1;
            continue;
        }
        if (++res.collisions > opt.max_collisions) {
            throw std::runtime_error("collision count exceeded max_collisions = " +
                                     std::to_string(opt.max_collisions));
        }
        const double extra = noise ? noise(target, hits[target]) : 0.0;
        ++hits[target];
        const double post = speed * reflect_factor(eps, spec.restitution[target](speed), extra, target);
        p = p > 0.0 ? -post : post;
        const double H = 0.5 * post * post;
        edge = edge_of(spec, graph, cell, post);
        if (opt.record_log) {
            res.log.push_back(CollisionRecord{t, target, speed, post, H, edge});
        }
        if (opt.record_path) {
            res.path.points.push_back(PathPoint{t * scale, H, edge});
        }
        if (opt.stop_at_well && graph.edges[edge].is_leaf()) {
            res.well = graph.edges[edge].well;
            finish(StopReason::Well);
            return res;
        }
        if (H < opt.stop_energy) {
            finish(StopReason::StopEnergy);
            return res;
        }
        if (opt.collision_limit > 0 && res.collisions >= opt.collision_limit) {
            finish(StopReason::CollisionLimit);
            return res;
        }
    }
}

PhasePoint yoshida_step(const std::function<double(double)>& dF, PhasePoint x, double h)
{
    static const double cbrt2 = std::cbrt(2.0);
    static const double w1 = 1.0 / (2.0 - cbrt2);
    static const double w0 = -cbrt2 / (2.0 - cbrt2);
    static const double c14 = 0.5 * w1;
    static const double c23 = 0.5 * (w0 + w1);
    x.q += c14 * h * x.p;
    x.p -= w1 * h * dF(x.q);
    x.q += c23 * h * x.p;
    x.p -= w0 * h * dF(x.q);
    x.q += c23 * h * x.p;
    x.p -= w1 * h * dF(x.q);
    x.q += c14 * h * x.p;
    return x;
}

SimResult simulate_potential(const PotentialSpec& spec, PhasePoint x0, double eps, const SimOptions& opt,
                             const WallNoise& noise)
{
    check_eps(eps);
    check_termination(eps, opt);
    if (!(x0.q >= spec.a1 && x0.q <= spec.a2)) {
        throw std::invalid_argument("initial position outside [a1, a2]");
    }
    if (!(opt.step > 0.0)) {
        throw std::invalid_argument("integrator step must be positive");
    }
    const ReebGraph graph = build_graph(spec);
    const double top = spec.F(spec.a0);
    const double scale = time_scale(eps);
    const double t_stop = opt.horizon / scale;
    const double h = opt.step;
    const Coefficient* coeff[2] = {&spec.c1, &spec.c2};
    const double wall_pos[2] = {spec.a1, spec.a2};

    SimResult res;
    PhasePoint x = x0;
    double t = 0.0;
    std::uint64_t hits[2] = {0, 0};
    GraphPoint gp = project(spec, graph, x);
    if (opt.record_path) {
        res.path.points.push_back(PathPoint{0.0, gp.H, gp.K});
    }
    auto finish = [&](StopReason why) {
        res.reason = why;
        res.final_state = x;
        res.final_edge = gp.K;
        res.t_end = t * scale;
        if (opt.record_path && res.path.points.back().t < res.t_end) {
            res.path.points.push_back(PathPoint{res.t_end, gp.H, gp.K});
        }
    };
    if (opt.stop_at_well && gp.H <= top) {
        res.well = gp.K;
        finish(StopReason::Well);
        return res;
    }
    auto inside = [&](double q) { return q >= spec.a1 && q <= spec.a2; };

    for (;;) {
        if (t + h > t_stop) {
            x = yoshida_step(spec.dF, x, t_stop - t);
            t = t_stop;
            if (inside(x.q)) {
                gp = project(spec, graph, x);
                finish(StopReason::Horizon);
                return res;
            }
            // a wall hit inside the final partial step is left unresolved
            x.q = std::clamp(x.q, spec.a1, spec.a2);
            gp = project(spec, graph, x);
            finish(StopReason::Horizon);
            return res;
        }
        const PhasePoint next = yoshida_step(spec.dF, x, h);
        if (inside(next.q)) {
            x = next;
            t += h;
            continue;
        }
        const std::size_t wall = next.q < spec.a1 ? 0 : 1;
        double lo = 0.0;
        double hi = h;
        while (hi - lo > 1e-12 * h) {
            const double mid = 0.5 * (lo + hi);
            if (inside(yoshida_step(spec.dF, x, mid).q)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        const PhasePoint at_wall = yoshida_step(spec.dF, x, hi);
        t += hi;
        x.q = wall_pos[wall];
        const double speed = std::abs(at_wall.p);
        const double H_pre = 0.5 * speed * speed + spec.F(x.q);
        if (++res.collisions > opt.max_collisions) {
            throw std::runtime_error("collision count exceeded max_collisions = " +
                                     std::to_string(opt.max_collisions));
        }
        const double extra = noise ? noise(wall, hits[wall]) : 0.0;
        ++hits[wall];
        const double post = speed * reflect_factor(eps, (*coeff[wall])(H_pre), extra, wall);
        x.p = wall == 0 ? post : -post;
        gp = project(spec, graph, x);
        if (opt.record_log) {
            res.log.push_back(CollisionRecord{t, wall, speed, post, gp.H, gp.K});
        }
        if (opt.record_path) {
            res.path.points.push_back(PathPoint{t * scale, gp.H, gp.K});
        }
        if (opt.stop_at_well && gp.H <= top) {
            res.well = wall;
            finish(StopReason::Well);
            return res;
        }
        if (gp.H < opt.stop_energy) {
            finish(StopReason::StopEnergy);
            return res;
        }
        if (opt.collision_limit > 0 && res.collisions >= opt.collision_limit) {
            finish(StopReason::CollisionLimit);
            return res;
        }
    }
}

GraphPath piecewise_linear_energy(const std::vector<CollisionRecord>& log, GraphPoint start, double eps,
                                  double t_end)
{
    const double scale = time_scale(eps);
    GraphPath path;
    path.points.push_back(PathPoint{0.0, start.H, start.K});
    for (const auto& r : log) {
        const double t = r.t * scale;
        if (t <= path.points.back().t) {
            path.points.back() = PathPoint{path.points.back().t, r.energy_after, r.edge};
            continue;
        }
        path.points.push_back(PathPoint{t, r.energy_after, r.edge});
    }
    if (t_end > path.points.back().t) {
        const PathPoint last = path.points.back();
        path.points.push_back(PathPoint{t_end, last.H, last.K});
    }
    return path;
}

double step_interpolation_gap(const std::vector<CollisionRecord>& log, GraphPoint start, double eps)
{
    const GraphPath path = piecewise_linear_energy(log, start, eps);
    double gap = 0.0;
    // on [t_i, t_{i+1}) the step path equals H_i while the interpolant runs
    // linearly to H_{i+1}; the sup over the piece is the left limit at t_{i+1}
    for (std::size_t i = 1; i < path.points.size(); ++i) {
        const double a = path.points[i - 1].H;
        const double b = path.at(path.points[i].t).H;
        gap = std::max(gap, std::abs(a - b));
    }
    return gap;
}

}  // namespace nelastic
