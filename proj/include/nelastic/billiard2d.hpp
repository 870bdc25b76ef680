#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nelastic/rng.hpp"
#include "nelastic/sim1d.hpp"
#include "nelastic/stats.hpp"

namespace nelastic {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double k, Vec2 a) { return {k * a.x, k * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
double norm(Vec2 a);

/// Closed convex curve X(u), u in [0, 2 pi), traversed counter-clockwise.
class Curve {
public:
    virtual ~Curve() = default;
    virtual Vec2 point(double u) const = 0;
    virtual Vec2 derivative(double u) const = 0;
    virtual std::string describe() const = 0;
};

std::shared_ptr<const Curve> make_circle(double radius);
std::shared_ptr<const Curve> make_ellipse(double a, double b);
/// |x/a|^n + |y/b|^n = 1 in polar form; n >= 2.
std::shared_ptr<const Curve> make_superellipse(double a, double b, double n);

/// Convex domain with an arc-length parameterisation of its boundary. Arc
/// length is tabulated per panel with Gauss-Legendre quadrature and inverted
/// by Newton's method, so s <-> u conversions are smooth to rounding level.
class ConvexDomain {
public:
    explicit ConvexDomain(std::shared_ptr<const Curve> curve, std::size_t panels = 1024);

    double length() const noexcept { return length_; }
    double area() const noexcept { return area_; }
    const Curve& curve() const noexcept { return *curve_; }

    double arclength_at(double u) const;   // s in [0, L) for u in [0, 2 pi)
    double param_at(double s) const;       // inverse, u in [0, 2 pi)
    Vec2 point_at(double s) const { return curve_->point(param_at(s)); }
    Vec2 unit_tangent(double u) const;
    Vec2 inward_normal(double u) const;
    double curvature(double u) const;
    /// s reduced to [0, L).
    double wrap(double s) const;

private:
    std::shared_ptr<const Curve> curve_;
    std::vector<double> cumulative_;  // arc length at panel starts
    double du_ = 0.0;
    double length_ = 0.0;
    double area_ = 0.0;
};

/// Point of the section: arc length s and angle theta in [0, pi] between the
/// outgoing direction and the positive tangent.
struct SectionPoint {
    double s = 0.0;
    double theta = 0.0;
};

struct RayHit {
    double u = 0.0;
    double s = 0.0;
    Vec2 point;
    double distance = 0.0;
};

/// First boundary point hit by the ray P + t d. If `from_u` is set, P is the
/// boundary point X(from_u) and that point itself is excluded.
RayHit cast_ray(const ConvexDomain& dom, Vec2 origin, Vec2 dir, std::optional<double> from_u = std::nullopt);

/// Outgoing direction at boundary parameter u for angle theta.
Vec2 direction_at(const ConvexDomain& dom, double u, double theta);
/// Angle of the reflected direction at the hit point u for incoming dir.
double reflected_angle(const ConvexDomain& dom, double u, Vec2 incoming);

SectionPoint billiard_map(const ConvexDomain& dom, SectionPoint x);
double chord_length(const ConvexDomain& dom, SectionPoint x);
double flight_time(const ConvexDomain& dom, SectionPoint x, double H);

struct IntegralGeometry {
    double lhs = 0.0;  // integral of L sin(theta) over the section
    double rhs = 0.0;  // 2 pi A
    double rel_error = 0.0;
};

struct GeometryQuadrature {
    std::size_t s_nodes = 256;  // periodic trapezoid in s
    double theta_tol = 1e-12;
};

IntegralGeometry check_integral_geometry(const ConvexDomain& dom, const GeometryQuadrature& q = {});

/// Diffusion coefficient a(theta) = a0 + a2 cos(2 theta), symmetric about pi/2.
struct AngularDiffusion {
    double a0 = 1.0;
    double a2 = 0.0;

    double a(double theta) const;
    double da(double theta) const;
    void validate() const;
};

/// Default internal step min(1e-3, delta / 100).
double default_diffusion_step(double delta);

/// One draw of the angle after physical time delta of the reflected diffusion
/// with generator (1 / (2 sin)) d/dtheta (a d/dtheta), built from the
/// non-singular diffusion with generator (1/2)(a u')' and the time change
/// dt = sin(theta) dt~. Euler scheme, folding at 0 and pi. step <= 0 selects
/// the default.
double reflected_diffusion_step(const AngularDiffusion& diff, double theta0, double delta, RandomStream& rng,
                                double step = 0.0);

SectionPoint section_chain_step(const ConvexDomain& dom, const AngularDiffusion& diff, SectionPoint x, double delta,
                                RandomStream& rng, double step = 0.0);

/// States x_1..x_steps of the perturbed section chain started at x0.
std::vector<SectionPoint> run_section_chain(const ConvexDomain& dom, const AngularDiffusion& diff, SectionPoint x0,
                                            double delta, std::size_t steps, RandomStream& rng, double step = 0.0);

/// |det Df(x) sin(Theta) / sin(theta) - 1| for the billiard map, with the
/// Jacobian taken by central differences of width h.
double liouville_defect(const ConvexDomain& dom, SectionPoint x, double h = 1e-6);

/// Boundary loss coefficient c(s, theta).
class LossField {
public:
    static LossField constant(double c);
    /// c_in on the counter-clockwise arc from s_a to s_b, c_out elsewhere.
    static LossField sides(double s_a, double s_b, double c_in, double c_out, double length);
    /// c0 + sum_k (cos_k cos(2 pi k s / L) + sin_k sin(2 pi k s / L)).
    static LossField fourier(double c0, std::vector<double> cos_k, std::vector<double> sin_k, double length);

    double operator()(double s, double theta) const;
    /// Arc-length points where the field jumps.
    std::vector<double> breakpoints() const;
    std::string describe() const;

private:
    enum class Kind { Constant, Sides, Fourier } kind_ = Kind::Constant;
    double c0_ = 1.0;
    double c_in_ = 1.0;
    double c_out_ = 1.0;
    double s_a_ = 0.0;
    double s_b_ = 0.0;
    double length_ = 1.0;
    std::vector<double> cos_;
    std::vector<double> sin_;
};

/// True when s lies on the counter-clockwise arc (s_a, s_b).
bool on_arc(double s, double s_a, double s_b, double length);

/// Interior wall along the chord between boundary points s_a and s_b. Well 0
/// is the region cut off by the counter-clockwise arc (s_a, s_b).
struct ChordWall {
    double s_a = 0.0;
    double s_b = 0.0;
    double vertex_energy = 0.5;
    double c = 0.0;  // loss when the particle reflects off the chord itself
    Vec2 A;
    Vec2 B;
    double area0 = 0.0;
    double area1 = 0.0;

    static ChordWall make(const ConvexDomain& dom, double s_a, double s_b, double vertex_energy, double c = 0.0);
    std::size_t well_of(double s, double length) const;
};

/// Integral of c(s, theta) sin(theta) over s in the ccw arc (s_from, s_to)
/// and theta in (0, pi). s_from == s_to means the whole boundary.
double loss_integral(const ConvexDomain& dom, const LossField& c, double s_from, double s_to);

struct BilliardOptions {
    double horizon = kInf;       // rescaled
    bool stop_at_well = true;
    std::uint64_t collision_limit = 0;
    std::uint64_t max_collisions = 100'000'000;
    bool record_log = true;
    double diffusion_step = 0.0;
};

struct BilliardRecord {
    std::uint64_t n = 0;
    double s = 0.0;
    double theta = 0.0;
    double H = 0.0;
    double t = 0.0;  // rescaled
};

struct BilliardResult {
    std::vector<BilliardRecord> log;
    GraphPath energy;   // (t, H, K) with edges of the two-well graph, or K = 0 without a wall
    std::optional<std::size_t> well;
    SectionPoint final_point;
    double H_final = 0.0;
    double t_end = 0.0;
    std::uint64_t collisions = 0;
};

/// Billiard with additive energy loss H -> max(H - eps c, 0) at each boundary
/// collision and, if delta > 0, angular diffusion after each reflection.
BilliardResult simulate_billiard(const ConvexDomain& dom, const LossField& c, const AngularDiffusion& diff,
                                 const ChordWall* wall, SectionPoint x0, double H0, double eps, double delta,
                                 RandomStream& rng, const BilliardOptions& opt = {});

struct BranchingPrediction {
    double cm_total = 0.0;
    double cm[2] = {0.0, 0.0};
    double area[2] = {0.0, 0.0};
    double p_first = 0.0;  // probability of well 0
};

BranchingPrediction predict_branching(const ConvexDomain& dom, const ChordWall& wall, const LossField& c);

struct BranchingRun {
    std::size_t replicas = 1000;
    std::uint64_t seed = 1;
    std::string experiment = "billiard-branching";
    unsigned threads = 0;
};

struct BranchingEstimate {
    BranchingPrediction prediction;
    std::uint64_t counts[2] = {0, 0};
    std::uint64_t trapped = 0;
    std::uint64_t failures = 0;
    double freq_first = 0.0;
    Interval ci_first;
    double mean_collisions = 0.0;
};

BranchingEstimate branching_estimate(const ConvexDomain& dom, const ChordWall& wall, const LossField& c,
                                     const AngularDiffusion& diff, SectionPoint x0, double H0, double eps,
                                     double delta, const BranchingRun& run, double z = 3.0,
                                     const BilliardOptions& opt = {});

}  // namespace nelastic
