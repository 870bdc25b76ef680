#include "nelastic/model1d.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

namespace nelastic {

namespace {

using boost::math::quadrature::gauss_kronrod;

struct Quad {
    double value = 0.0;
    double error = 0.0;
};

template <class Fn>
Quad integrate(Fn&& f, double a, double b, double rel_tol)
{
    Quad q;
    if (b <= a) {
        return q;
    }
    // on short intervals Boost reports an absolute error floor, so work on [-1, 1]
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    q.value = gauss_kronrod<double, 31>::integrate([&](double x) { return half * f(mid + half * x); }, -1.0, 1.0, 15,
                                                   rel_tol, &q.error);
    return q;
}

// Root of g on [lo, hi] given opposite signs at the ends.
template <class Fn>
double bracketed_root(Fn&& g, double lo, double hi)
{
    double glo = g(lo);
    double ghi = g(hi);
    if (glo == 0.0) {
        return lo;
    }
    if (ghi == 0.0) {
        return hi;
    }
    if ((glo > 0.0) == (ghi > 0.0)) {
        throw std::invalid_argument("root not bracketed on [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
    std::uintmax_t iters = 300;
    auto r = boost::math::tools::toms748_solve(g, lo, hi, glo, ghi, boost::math::tools::eps_tolerance<double>(52),
                                               iters);
    return 0.5 * (r.first + r.second);
}

double horner(const std::vector<double>& c, double x)
{
    double acc = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) {
        acc = acc * x + *it;
    }
    return acc;
}

std::vector<double> derivative(const std::vector<double>& c)
{
    std::vector<double> d;
    for (std::size_t i = 1; i < c.size(); ++i) {
        d.push_back(static_cast<double>(i) * c[i]);
    }
    if (d.empty()) {
        d.push_back(0.0);
    }
    return d;
}

}  // namespace

// ---------------------------------------------------------------- Coefficient

Coefficient Coefficient::constant(double value)
{
    if (!(value >= 0.0) || !std::isfinite(value)) {
        throw std::invalid_argument("restitution coefficient must be finite and non-negative");
    }
    Coefficient c;
    c.kind_ = Kind::Constant;
    c.c0_ = value;
    return c;
}

Coefficient Coefficient::affine(double at_zero, double slope)
{
    if (!std::isfinite(at_zero) || !std::isfinite(slope)) {
        throw std::invalid_argument("affine restitution coefficient must be finite");
    }
    Coefficient c;
    c.kind_ = slope == 0.0 ? Kind::Constant : Kind::Affine;
    c.c0_ = at_zero;
    c.slope_ = slope;
    return c;
}

Coefficient Coefficient::custom(std::function<double(double)> fn)
{
    if (!fn) {
        throw std::invalid_argument("custom restitution coefficient needs a callable");
    }
    Coefficient c;
    c.kind_ = Kind::Custom;
    c.fn_ = std::move(fn);
    return c;
}

Coefficient Coefficient::scaled(double factor) const
{
    switch (kind_) {
    case Kind::Constant:
        return constant(c0_ * factor);
    case Kind::Affine:
        return affine(c0_ * factor, slope_ * factor);
    case Kind::Custom:
        break;
    }
    auto fn = fn_;
    return custom([fn, factor](double x) { return factor * fn(x); });
}

// ---------------------------------------------------------------- FlatModelSpec

double FlatModelSpec::height(std::size_t wall) const
{
    if (wall == 0 || wall + 1 >= walls.size()) {
        return kInf;
    }
    return heights.at(wall - 1);
}

std::size_t FlatModelSpec::cell_of(double q, double p) const
{
    const auto it = std::upper_bound(walls.begin(), walls.end(), q);
    std::size_t idx = static_cast<std::size_t>(it - walls.begin());
    // idx = number of walls <= q
    if (idx == 0) {
        return 0;
    }
    if (idx >= walls.size()) {
        return well_count() - 1;
    }
    std::size_t cell = idx - 1;
    if (q == walls[cell] && p < 0.0 && cell > 0) {
        --cell;
    }
    return cell;
}

void FlatModelSpec::validate() const
{
    if (walls.size() < 2) {
        throw std::invalid_argument("flat model needs at least two walls");
    }
    for (std::size_t i = 0; i < walls.size(); ++i) {
        if (!std::isfinite(walls[i])) {
            throw std::invalid_argument("wall position " + std::to_string(i) + " is not finite");
        }
        if (i > 0 && !(walls[i] > walls[i - 1])) {
            throw std::invalid_argument("wall positions must be strictly increasing (wall " + std::to_string(i) + ")");
        }
    }
    if (heights.size() != walls.size() - 2) {
        throw std::invalid_argument("need one height per interior wall: expected " + std::to_string(walls.size() - 2) +
                                    ", got " + std::to_string(heights.size()));
    }
    for (std::size_t i = 0; i < heights.size(); ++i) {
        if (!(heights[i] > 0.0) || !std::isfinite(heights[i])) {
            throw std::invalid_argument("interior wall height " + std::to_string(i + 1) + " must be positive");
        }
    }
    if (restitution.size() != walls.size()) {
        throw std::invalid_argument("need one restitution coefficient per wall: expected " +
                                    std::to_string(walls.size()) + ", got " + std::to_string(restitution.size()));
    }
}

// ---------------------------------------------------------------- PotentialSpec

double PotentialSpec::energy_scale() const
{
    const double s = F(a0) - std::min(F(a1), F(a2));
    return s > 0.0 ? s : 1.0;
}

void PotentialSpec::validate_and_locate_peak(int grid)
{
    if (!F || !dF) {
        throw std::invalid_argument("potential needs F and F'");
    }
    if (!(a1 < a2)) {
        throw std::invalid_argument("potential endpoints must satisfy a1 < a2");
    }
    if (!(dF(a1) > 0.0)) {
        throw std::invalid_argument("potential must increase at the left endpoint (F'(a1) > 0)");
    }
    if (!(dF(a2) < 0.0)) {
        throw std::invalid_argument("potential must decrease at the right endpoint (F'(a2) < 0)");
    }
    grid = std::max(grid, 16);
    const double h = (a2 - a1) / grid;
    int changes = 0;
    double prev_q = a1;
    double prev_d = dF(a1);
    double lo = a1;
    double hi = a2;
    for (int i = 1; i <= grid; ++i) {
        const double q = (i == grid) ? a2 : a1 + i * h;
        const double d = dF(q);
        if (d == 0.0) {
            continue;
        }
        if ((d > 0.0) != (prev_d > 0.0)) {
            ++changes;
            lo = prev_q;
            hi = q;
        }
        prev_q = q;
        prev_d = d;
    }
    if (changes != 1) {
        throw std::invalid_argument("potential must have exactly one interior maximum; F' changes sign " +
                                    std::to_string(changes) + " times");
    }
    a0 = bracketed_root([this](double q) { return dF(q); }, lo, hi);
}

PotentialSpec PotentialSpec::quadratic(double k, double a1, double a2, double peak, double top)
{
    if (!(k > 0.0)) {
        throw std::invalid_argument("quadratic potential needs k > 0");
    }
    PotentialSpec s;
    s.F = [=](double q) { return top - 0.5 * k * (q - peak) * (q - peak); };
    s.dF = [=](double q) { return -k * (q - peak); };
    s.a1 = a1;
    s.a2 = a2;
    s.a0 = peak;
    s.label = "quadratic";
    s.validate_and_locate_peak();
    return s;
}

PotentialSpec PotentialSpec::quartic(double k2, double k4, double a1, double a2, double peak, double top)
{
    PotentialSpec s;
    s.F = [=](double q) {
        const double x2 = (q - peak) * (q - peak);
        return top - 0.5 * k2 * x2 - 0.25 * k4 * x2 * x2;
    };
    s.dF = [=](double q) {
        const double x = q - peak;
        return -k2 * x - k4 * x * x * x;
    };
    s.a1 = a1;
    s.a2 = a2;
    s.a0 = peak;
    s.label = "quartic";
    s.validate_and_locate_peak();
    return s;
}

PotentialSpec PotentialSpec::cosine(double amplitude, double k, double a1, double a2, double peak)
{
    if (!(amplitude > 0.0) || !(k > 0.0)) {
        throw std::invalid_argument("cosine potential needs amplitude > 0 and k > 0");
    }
    if (!(k * (peak - a1) < M_PI) || !(k * (a2 - peak) < M_PI)) {
        throw std::invalid_argument("cosine potential needs |k (q - peak)| < pi on [a1, a2]");
    }
    PotentialSpec s;
    s.F = [=](double q) { return amplitude * std::cos(k * (q - peak)); };
    s.dF = [=](double q) { return -amplitude * k * std::sin(k * (q - peak)); };
    s.a1 = a1;
    s.a2 = a2;
    s.a0 = peak;
    s.label = "cosine";
    s.validate_and_locate_peak();
    return s;
}

PotentialSpec PotentialSpec::piecewise_polynomial(std::vector<PolySegment> segments)
{
    if (segments.empty()) {
        throw std::invalid_argument("piecewise potential needs at least one segment");
    }
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const auto& seg = segments[i];
        if (!(seg.hi > seg.lo) || seg.coeffs.empty()) {
            throw std::invalid_argument("piecewise segment " + std::to_string(i) + " is empty");
        }
        if (i > 0) {
            const auto& prev = segments[i - 1];
            if (prev.hi != seg.lo) {
                throw std::invalid_argument("piecewise segments must tile the interval (gap before segment " +
                                            std::to_string(i) + ")");
            }
            const double left = horner(prev.coeffs, prev.hi - prev.lo);
            const double right = seg.coeffs[0];
            if (std::abs(left - right) > 1e-9 * std::max(1.0, std::abs(left))) {
                throw std::invalid_argument("piecewise potential is discontinuous at q = " + std::to_string(seg.lo));
            }
        }
    }
    struct Table {
        std::vector<PolySegment> segs;
        std::vector<std::vector<double>> deriv;

        const PolySegment& find(double q, std::size_t& idx) const
        {
            idx = 0;
            while (idx + 1 < segs.size() && q > segs[idx].hi) {
                ++idx;
            }
            return segs[idx];
        }
    };
    auto table = std::make_shared<Table>();
    table->segs = std::move(segments);
    for (const auto& seg : table->segs) {
        table->deriv.push_back(derivative(seg.coeffs));
    }
    PotentialSpec s;
    s.F = [table](double q) {
        std::size_t i = 0;
        const auto& seg = table->find(q, i);
        return horner(seg.coeffs, q - seg.lo);
    };
    s.dF = [table](double q) {
        std::size_t i = 0;
        const auto& seg = table->find(q, i);
        return horner(table->deriv[i], q - seg.lo);
    };
    s.a1 = table->segs.front().lo;
    s.a2 = table->segs.back().hi;
    s.a0 = 0.5 * (s.a1 + s.a2);
    s.label = "piecewise-polynomial";
    s.validate_and_locate_peak();
    return s;
}

// ---------------------------------------------------------------- ReebGraph

std::size_t ReebGraph::well_count() const
{
    return static_cast<std::size_t>(std::count_if(edges.begin(), edges.end(), [](const GraphEdge& e) {
        return e.is_leaf();
    }));
}

EdgeId ReebGraph::leaf_of_well(std::size_t well) const
{
    for (const auto& e : edges) {
        if (e.is_leaf() && e.well == well) {
            return e.id;
        }
    }
    throw std::out_of_range("no leaf edge for well " + std::to_string(well));
}

std::vector<EdgeId> ReebGraph::path_to_root(EdgeId e) const
{
    std::vector<EdgeId> path;
    while (e != kNone) {
        if (path.size() > edges.size()) {
            throw std::logic_error("Reeb graph contains a cycle");
        }
        path.push_back(e);
        const VertexId v = edges.at(e).upper;
        e = (v == kNone) ? kNone : vertices.at(v).above;
    }
    return path;
}

void ReebGraph::check_invariants() const
{
    if (edges.size() != 2 * vertices.size() + 1) {
        throw std::logic_error("Reeb graph: edge count " + std::to_string(edges.size()) + " != 2 * " +
                               std::to_string(vertices.size()) + " + 1");
    }
    std::size_t roots = 0;
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const auto& e = edges[i];
        if (e.id != i) {
            throw std::logic_error("Reeb graph: edge ids must match their index");
        }
        if (e.is_root()) {
            ++roots;
            if (root != i) {
                throw std::logic_error("Reeb graph: root edge mismatch");
            }
        }
        if (!(e.h_lo < e.h_hi)) {
            throw std::logic_error("Reeb graph: empty energy interval on edge " + std::to_string(i));
        }
    }
    if (roots != 1) {
        throw std::logic_error("Reeb graph must have exactly one top edge");
    }
    for (const auto& v : vertices) {
        const auto& above = edges.at(v.above);
        const auto& bl = edges.at(v.below_left);
        const auto& br = edges.at(v.below_right);
        if (above.lower != v.id || bl.upper != v.id || br.upper != v.id || v.below_left == v.below_right) {
            throw std::logic_error("Reeb graph: vertex " + std::to_string(v.id) + " is not binary");
        }
        if (above.h_lo != v.energy || bl.h_hi != v.energy || br.h_hi != v.energy) {
            throw std::logic_error("Reeb graph: energies do not meet at vertex " + std::to_string(v.id));
        }
    }
    for (const auto& e : edges) {
        (void)path_to_root(e.id);
    }
}

namespace {

struct FlatBuilder {
    const FlatModelSpec& spec;
    ReebGraph graph;
    std::size_t next_internal;

    explicit FlatBuilder(const FlatModelSpec& s) : spec(s), next_internal(s.well_count())
    {
        graph.edges.resize(2 * s.well_count() - 1);
    }

    // Builds the subtree for the region between walls l < r; returns the top edge.
    EdgeId build(std::size_t l, std::size_t r, double ceiling)
    {
        if (r == l + 1) {
            GraphEdge& e = graph.edges[l];
            e.id = l;
            e.h_lo = 0.0;
            e.h_hi = ceiling;
            e.left_wall = l;
            e.right_wall = r;
            e.well = l;
            return l;
        }
        std::size_t split = l + 1;
        for (std::size_t k = l + 2; k < r; ++k) {
            if (spec.heights[k - 1] > spec.heights[split - 1]) {
                split = k;
            }
        }
        const double top = spec.heights[split - 1];
        for (std::size_t k = l + 1; k < r; ++k) {
            if (k != split && spec.heights[k - 1] == top) {
                throw std::invalid_argument("interior walls " + std::to_string(split) + " and " + std::to_string(k) +
                                            " have equal heights inside one region; the graph vertex would not be "
                                            "binary");
            }
        }
        const double energy = 0.5 * top * top;
        const EdgeId left = build(l, split, energy);
        const EdgeId right = build(split, r, energy);
        const EdgeId id = next_internal++;
        const VertexId vid = graph.vertices.size();
        graph.vertices.push_back(GraphVertex{vid, energy, split, id, left, right});
        graph.edges[left].upper = vid;
        graph.edges[right].upper = vid;
        GraphEdge& e = graph.edges[id];
        e.id = id;
        e.h_lo = energy;
        e.h_hi = ceiling;
        e.lower = vid;
        e.left_wall = l;
        e.right_wall = r;
        return id;
    }
};

}  // namespace

ReebGraph build_graph(const FlatModelSpec& spec)
{
    spec.validate();
    FlatBuilder b(spec);
    b.graph.root = b.build(0, spec.wall_count() - 1, kInf);
    b.graph.check_invariants();
    return std::move(b.graph);
}

ReebGraph two_well_graph(double vertex_energy, double floor)
{
    if (!(vertex_energy > floor)) {
        throw std::invalid_argument("vertex energy must exceed the well floor");
    }
    ReebGraph g;
    g.edges.resize(3);
    g.edges[0] = GraphEdge{0, floor, vertex_energy, 0, kNone, 0, 1, 0};
    g.edges[1] = GraphEdge{1, floor, vertex_energy, 0, kNone, 1, 2, 1};
    g.edges[2] = GraphEdge{2, vertex_energy, kInf, kNone, 0, 0, 2, kNone};
    g.vertices.push_back(GraphVertex{0, vertex_energy, 1, 2, 0, 1});
    g.root = 2;
    g.check_invariants();
    return g;
}

ReebGraph build_graph(const PotentialSpec& spec)
{
    const double top = spec.F(spec.a0);
    ReebGraph g;
    g.edges.resize(3);
    g.edges[0] = GraphEdge{0, spec.F(spec.a1), top, 0, kNone, 0, kNone, 0};
    g.edges[1] = GraphEdge{1, spec.F(spec.a2), top, 0, kNone, kNone, 1, 1};
    g.edges[2] = GraphEdge{2, top, kInf, kNone, 0, 0, 1, kNone};
    g.vertices.push_back(GraphVertex{0, top, kNone, 2, 0, 1});
    g.root = 2;
    g.check_invariants();
    return g;
}

EdgeId edge_of(const FlatModelSpec& spec, const ReebGraph& graph, std::size_t cell, double speed)
{
    const double H = 0.5 * speed * speed;
    EdgeId e = graph.root;
    while (!graph.edges[e].is_leaf()) {
        const auto& v = graph.vertices[graph.edges[e].lower];
        if (H > v.energy) {
            return e;
        }
        e = (cell < v.wall) ? v.below_left : v.below_right;
    }
    (void)spec;
    return e;
}

GraphPoint project(const FlatModelSpec& spec, const ReebGraph& graph, PhasePoint x)
{
    const std::size_t cell = spec.cell_of(x.q, x.p);
    return GraphPoint{0.5 * x.p * x.p, edge_of(spec, graph, cell, std::abs(x.p))};
}

GraphPoint project(const PotentialSpec& spec, const ReebGraph& graph, PhasePoint x)
{
    const double H = 0.5 * x.p * x.p + spec.F(x.q);
    const double top = spec.F(spec.a0);
    (void)graph;
    if (H > top) {
        return GraphPoint{H, 2};
    }
    return GraphPoint{H, x.q <= spec.a0 ? EdgeId{0} : EdgeId{1}};
}

double period(const FlatModelSpec& spec, const ReebGraph& graph, EdgeId edge, double H)
{
    const auto& e = graph.edges.at(edge);
    if (!(H > e.h_lo) || !(H > 0.0)) {
        throw std::domain_error("period: energy " + std::to_string(H) + " at or below the bottom of edge " +
                                std::to_string(edge));
    }
    if (H > e.h_hi) {
        throw std::domain_error("period: energy " + std::to_string(H) + " above the top of edge " +
                                std::to_string(edge));
    }
    const double width = spec.walls.at(e.right_wall) - spec.walls.at(e.left_wall);
    return 2.0 * width / std::sqrt(2.0 * H);
}

double turning_point(const std::function<double(double)>& F, double lo, double hi, double H)
{
    return bracketed_root([&](double q) { return F(q) - H; }, lo, hi);
}

PeriodResult period_integral(const std::function<double(double)>& F, double lo, double hi, double H,
                             bool lo_is_turning, bool hi_is_turning, double rel_tol,
                             const std::function<double(double)>& dF)
{
    if (!(hi > lo)) {
        throw std::invalid_argument("period_integral: empty interval");
    }
    auto inv_speed = [&](double q) {
        const double gap = H - F(q);
        return gap > 0.0 ? 1.0 / std::sqrt(2.0 * gap) : 0.0;
    };
    // Integrand after q = turn + dir u^2. Where H - F(q) is small next to |H| it
    // is mostly rounding noise, so the gap is taken as u^2 times the mean slope
    // over [q, turn] instead.
    const double near = 1e-5 * (hi - lo);
    auto turning_integrand = [&](double turn, double dir) {
        return [&, turn, dir](double u) {
            const double w = u * u;
            const double q = turn + dir * w;
            if (dF) {
                const double lo_q = std::min(q, turn);
                const double hi_q = std::max(q, turn);
                double slope = 0.0;
                if (hi_q == lo_q) {
                    slope = -dir * dF(turn);
                } else if (w < near || H - F(q) < 1e-3 * (std::abs(H) + std::abs(F(q)))) {
                    using boost::math::quadrature::gauss;
                    slope = -dir * gauss<double, 8>::integrate(dF, lo_q, hi_q) / (hi_q - lo_q);
                } else {
                    return 2.0 * u * inv_speed(q);
                }
                return slope > 0.0 ? 2.0 / std::sqrt(2.0 * slope) : 0.0;
            }
            return 2.0 * u * inv_speed(q);
        };
    };
    double split_lo = lo;
    double split_hi = hi;
    if (lo_is_turning && hi_is_turning) {
        split_lo = split_hi = 0.5 * (lo + hi);
    } else if (lo_is_turning) {
        split_lo = split_hi = hi;
    } else if (hi_is_turning) {
        split_lo = split_hi = lo;
    }
    Quad total;
    auto add = [&](Quad q) {
        total.value += q.value;
        total.error += q.error;
    };
    if (lo_is_turning) {
        add(integrate(turning_integrand(lo, 1.0), 0.0, std::sqrt(split_lo - lo), rel_tol));
    }
    if (hi_is_turning) {
        add(integrate(turning_integrand(hi, -1.0), 0.0, std::sqrt(hi - split_hi), rel_tol));
    }
    if (!lo_is_turning && !hi_is_turning) {
        add(integrate(inv_speed, lo, hi, rel_tol));
    }
    return PeriodResult{2.0 * total.value, 2.0 * total.error, false};
}

namespace {

// Integral of dq / sqrt(2 (H - F(q))) from the peak a0 outwards over a distance
// `reach`, with H = F(a0) + gap. The substitution q = a0 +/- w sinh(v) with
// w = sqrt(2 gap / k) flattens the near-peak profile for any gap > 0.
Quad peak_side(const PotentialSpec& spec, double gap, double reach, double dir, double rel_tol)
{
    const double top = spec.F(spec.a0);
    const double h = 1e-5 * (spec.a2 - spec.a1);
    const double k = -(spec.dF(spec.a0 + h) - spec.dF(spec.a0 - h)) / (2.0 * h);
    auto depth = [&](double q) { return gap + (top - spec.F(q)); };
    if (!(k > 0.0)) {
        return integrate([&](double x) { return 1.0 / std::sqrt(2.0 * depth(spec.a0 + dir * x)); }, 0.0, reach,
                         rel_tol);
    }
    const double w = std::sqrt(2.0 * gap / k);
    const double vmax = std::asinh(reach / w);
    return integrate(
        [&](double v) {
            const double x = std::min(w * std::sinh(v), reach);
            return w * std::cosh(v) / std::sqrt(2.0 * depth(spec.a0 + dir * x));
        },
        0.0, vmax, rel_tol);
}

}  // namespace

PeriodResult period(const PotentialSpec& spec, EdgeId edge, double H, const PeriodOptions& opt)
{
    const double top = spec.F(spec.a0);
    const double eta = opt.vertex_cutoff * spec.energy_scale();
    PeriodResult r;
    switch (edge) {
    case 2: {
        if (!(H > top)) {
            throw std::domain_error("period: energy at or below the vertex on the upper edge");
        }
        if (H - top < eta) {
            H = top + eta;
            r.clamped = true;
        }
        const Quad left = peak_side(spec, H - top, spec.a0 - spec.a1, -1.0, opt.rel_tol);
        const Quad right = peak_side(spec, H - top, spec.a2 - spec.a0, 1.0, opt.rel_tol);
        r.value = 2.0 * (left.value + right.value);
        r.error = 2.0 * (left.error + right.error);
        return r;
    }
    case 0:
    case 1: {
        const double wall = edge == 0 ? spec.a1 : spec.a2;
        if (!(H > spec.F(wall))) {
            throw std::domain_error("period: energy at or below the floor of well edge " + std::to_string(edge));
        }
        if (H > top) {
            throw std::domain_error("period: energy above the vertex on a well edge");
        }
        if (top - H < eta) {
            H = top - eta;
            r.clamped = true;
        }
        PeriodResult p = edge == 0
                             ? period_integral(spec.F, spec.a1, turning_point(spec.F, spec.a1, spec.a0, H), H, false,
                                               true, opt.rel_tol, spec.dF)
                             : period_integral(spec.F, turning_point(spec.F, spec.a0, spec.a2, H), spec.a2, H, true,
                                               false, opt.rel_tol, spec.dF);
        p.clamped = r.clamped;
        return p;
    }
    default:
        throw std::out_of_range("potential graph has edges 0, 1, 2 only");
    }
}

}  // namespace nelastic
