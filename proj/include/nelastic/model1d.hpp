#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace nelastic {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

using EdgeId = std::size_t;
using VertexId = std::size_t;

/// Position-momentum pair of the one-dimensional particle (unit mass).
struct PhasePoint {
    double q = 0.0;
    double p = 0.0;
};

/// Restitution coefficient c(x) > 0. In the flat model x is the impact speed,
/// in the general-potential model x is the energy at impact.
class Coefficient {
public:
    enum class Kind { Constant, Affine, Custom };

    Coefficient() = default;

    static Coefficient constant(double value);
    static Coefficient affine(double at_zero, double slope);
    static Coefficient custom(std::function<double(double)> fn);

    double operator()(double x) const
    {
        switch (kind_) {
        case Kind::Constant:
            return c0_;
        case Kind::Affine:
            return c0_ + slope_ * x;
        case Kind::Custom:
            break;
        }
        return fn_(x);
    }

    Kind kind() const noexcept { return kind_; }
    bool is_constant() const noexcept { return kind_ == Kind::Constant; }
    double value_at_zero() const noexcept { return c0_; }
    double slope() const noexcept { return slope_; }
    Coefficient scaled(double factor) const;

private:
    Kind kind_ = Kind::Constant;
    double c0_ = 1.0;
    double slope_ = 0.0;
    std::function<double(double)> fn_;
};

/// Free motion on [q_1, q_n] with walls at q_1 < ... < q_n. Interior wall k
/// blocks the particle only when |p| <= heights[k-1]; the exterior walls always
/// reflect. One restitution coefficient per wall, shared by both faces.
struct FlatModelSpec {
    std::vector<double> walls;
    std::vector<double> heights;
    std::vector<Coefficient> restitution;

    std::size_t wall_count() const noexcept { return walls.size(); }
    std::size_t well_count() const noexcept { return walls.size() - 1; }
    /// Blocking speed of wall k; +inf for the two exterior walls.
    double height(std::size_t wall) const;
    /// Index i of the cell [q_i, q_{i+1}] containing q (ties go to the cell on
    /// the side the momentum points away from).
    std::size_t cell_of(double q, double p) const;
    void validate() const;
};

/// Motion in a smooth potential F on [a1, a2] with a single interior maximum
/// at a0. Restitution coefficients are functions of the energy at impact.
struct PotentialSpec {
    std::function<double(double)> F;
    std::function<double(double)> dF;
    double a1 = -1.0;
    double a2 = 1.0;
    double a0 = 0.0;
    Coefficient c1;
    Coefficient c2;
    std::string label;

    double vertex_energy() const { return F(a0); }
    /// Depth scale used for relative tolerances: F(a0) - min(F(a1), F(a2)).
    double energy_scale() const;
    /// Checks endpoint slopes and locates the single interior maximum; throws
    /// std::invalid_argument on violation. Updates a0.
    void validate_and_locate_peak(int grid = 4000);

    /// F(q) = top - k (q - peak)^2 / 2
    static PotentialSpec quadratic(double k, double a1, double a2, double peak = 0.0, double top = 0.0);
    /// F(q) = top - k2 x^2 / 2 - k4 x^4 / 4, x = q - peak
    static PotentialSpec quartic(double k2, double k4, double a1, double a2, double peak = 0.0, double top = 0.0);
    /// F(q) = amplitude cos(k (q - peak)); requires |k (q - peak)| < pi on [a1, a2]
    static PotentialSpec cosine(double amplitude, double k, double a1, double a2, double peak = 0.0);

    struct PolySegment {
        double lo;
        double hi;
        std::vector<double> coeffs;  // in powers of (q - lo)
    };
    /// Piecewise polynomial table; segments must tile [a1, a2] and join continuously.
    static PotentialSpec piecewise_polynomial(std::vector<PolySegment> segments);
};

struct GraphEdge {
    EdgeId id = kNone;
    double h_lo = 0.0;   // energy at the lower end (vertex energy or well floor)
    double h_hi = kInf;  // energy at the upper end (vertex energy, +inf for the root)
    VertexId upper = kNone;
    VertexId lower = kNone;
    std::size_t left_wall = kNone;   // bounding walls of the region this edge describes
    std::size_t right_wall = kNone;
    std::size_t well = kNone;        // well index for leaves

    bool is_leaf() const noexcept { return lower == kNone; }
    bool is_root() const noexcept { return upper == kNone; }
    bool contains(double H) const noexcept { return H > h_lo && H <= h_hi; }
};

struct GraphVertex {
    VertexId id = kNone;
    double energy = 0.0;
    std::size_t wall = kNone;  // separating wall (flat) or peak marker (potential)
    EdgeId above = kNone;
    EdgeId below_left = kNone;
    EdgeId below_right = kNone;
};

/// Tree obtained by collapsing connected components of energy levels.
/// Leaves are numbered by well from left to right; internal edges follow in
/// post-order, so the root (highest) edge is last.
struct ReebGraph {
    std::vector<GraphEdge> edges;
    std::vector<GraphVertex> vertices;
    EdgeId root = kNone;

    std::size_t well_count() const;
    EdgeId leaf_of_well(std::size_t well) const;
    /// Edges from e up to the root, e first.
    std::vector<EdgeId> path_to_root(EdgeId e) const;
    /// Structural checks: binary branching, matching energies, edge count.
    void check_invariants() const;
};

/// Point of the graph: energy H on edge K.
struct GraphPoint {
    double H = 0.0;
    EdgeId K = kNone;
};

ReebGraph build_graph(const FlatModelSpec& spec);
ReebGraph build_graph(const PotentialSpec& spec);

/// Graph for a region split by one wall of height H(O): edges 0, 1 are the
/// two wells (floor energy `floor`), edge 2 is everything above H(O).
ReebGraph two_well_graph(double vertex_energy, double floor = 0.0);

GraphPoint project(const FlatModelSpec& spec, const ReebGraph& graph, PhasePoint x);
GraphPoint project(const PotentialSpec& spec, const ReebGraph& graph, PhasePoint x);
/// Flat model, position given as a cell index and speed.
EdgeId edge_of(const FlatModelSpec& spec, const ReebGraph& graph, std::size_t cell, double speed);

/// Oscillation period on a flat-model edge: 2 * width / sqrt(2H).
double period(const FlatModelSpec& spec, const ReebGraph& graph, EdgeId edge, double H);

struct PeriodOptions {
    double rel_tol = 1e-12;
    /// Energies closer than cutoff * energy_scale to the vertex are evaluated at
    /// that distance; the period diverges logarithmically there.
    double vertex_cutoff = 1e-10;
};

struct PeriodResult {
    double value = 0.0;
    double error = 0.0;
    bool clamped = false;
};

/// Period on an edge of the general-potential graph, by quadrature.
PeriodResult period(const PotentialSpec& spec, EdgeId edge, double H, const PeriodOptions& opt = {});

/// 2 * integral of dq / sqrt(2 (H - F(q))) over [lo, hi]. Either end may be a
/// turning point (F = H there); such ends are handled by the substitution
/// q = turning -/+ u^2 which removes the inverse square-root singularity.
/// Supplying F' keeps the integrand accurate right next to a turning point.
PeriodResult period_integral(const std::function<double(double)>& F, double lo, double hi, double H,
                             bool lo_is_turning, bool hi_is_turning, double rel_tol = 1e-12,
                             const std::function<double(double)>& dF = {});

/// Root of F(q) = H on [lo, hi] for monotone F.
double turning_point(const std::function<double(double)>& F, double lo, double hi, double H);

}  // namespace nelastic
