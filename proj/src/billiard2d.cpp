#include "nelastic/billiard2d.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "nelastic/parallel.hpp"

namespace nelastic {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kPi = std::numbers::pi;

using Gauss20 = boost::math::quadrature::gauss<double, 20>;

double wrap_angle(double u)
{
    double r = std::fmod(u, kTwoPi);
    if (r < 0.0) {
        r += kTwoPi;
    }
    return r >= kTwoPi ? 0.0 : r;
}

class Ellipse final : public Curve {
public:
    Ellipse(double a, double b) : a_(a), b_(b)
    {
        if (!(a > 0.0) || !(b > 0.0)) {
            throw std::invalid_argument("ellipse semi-axes must be positive");
        }
    }
    Vec2 point(double u) const override { return {a_ * std::cos(u), b_ * std::sin(u)}; }
    Vec2 derivative(double u) const override { return {-a_ * std::sin(u), b_ * std::cos(u)}; }
    std::string describe() const override
    {
        std::ostringstream os;
        if (a_ == b_) {
            os << "circle(r=" << a_ << ")";
        } else {
            os << "ellipse(a=" << a_ << ", b=" << b_ << ")";
        }
        return os.str();
    }

private:
    double a_;
    double b_;
};

// Polar form r(u) = S(u)^(-1/n), S = |cos u / a|^n + |sin u / b|^n.
class Superellipse final : public Curve {
public:
    Superellipse(double a, double b, double n) : a_(a), b_(b), n_(n)
    {
        if (!(a > 0.0) || !(b > 0.0)) {
            throw std::invalid_argument("superellipse semi-axes must be positive");
        }
        if (!(n >= 2.0)) {
            throw std::invalid_argument("superellipse exponent must be >= 2 for a smooth convex curve");
        }
    }

    Vec2 point(double u) const override
    {
        const double r = radius(u);
        return {r * std::cos(u), r * std::sin(u)};
    }

    Vec2 derivative(double u) const override
    {
        const double c = std::cos(u);
        const double s = std::sin(u);
        const double xc = c / a_;
        const double ys = s / b_;
        const double S = std::pow(std::abs(xc), n_) + std::pow(std::abs(ys), n_);
        // dS/du
        const double dS = n_ * std::pow(std::abs(xc), n_ - 1.0) * std::copysign(1.0, xc) * (-s / a_) +
                          n_ * std::pow(std::abs(ys), n_ - 1.0) * std::copysign(1.0, ys) * (c / b_);
        const double r = std::pow(S, -1.0 / n_);
        const double dr = -(1.0 / n_) * r / S * dS;
        return {dr * c - r * s, dr * s + r * c};
    }

    std::string describe() const override
    {
        std::ostringstream os;
        os << "superellipse(a=" << a_ << ", b=" << b_ << ", n=" << n_ << ")";
        return os.str();
    }

private:
    double radius(double u) const
    {
        const double S = std::pow(std::abs(std::cos(u) / a_), n_) + std::pow(std::abs(std::sin(u) / b_), n_);
        return std::pow(S, -1.0 / n_);
    }

    double a_;
    double b_;
    double n_;
};

}  // namespace

double norm(Vec2 a) { return std::hypot(a.x, a.y); }

std::shared_ptr<const Curve> make_circle(double radius) { return std::make_shared<Ellipse>(radius, radius); }
std::shared_ptr<const Curve> make_ellipse(double a, double b) { return std::make_shared<Ellipse>(a, b); }
std::shared_ptr<const Curve> make_superellipse(double a, double b, double n)
{
    return std::make_shared<Superellipse>(a, b, n);
}

// ---------------------------------------------------------------------------
// Domain

ConvexDomain::ConvexDomain(std::shared_ptr<const Curve> curve, std::size_t panels) : curve_(std::move(curve))
{
    if (!curve_) {
        throw std::invalid_argument("domain needs a curve");
    }
    if (panels < 8) {
        throw std::invalid_argument("arc-length table needs at least 8 panels");
    }
    du_ = kTwoPi / static_cast<double>(panels);
    cumulative_.resize(panels + 1, 0.0);
    const Curve& X = *curve_;
    auto speed = [&X](double u) { return norm(X.derivative(u)); };
    auto areal = [&X](double u) { return 0.5 * cross(X.point(u), X.derivative(u)); };
    double area = 0.0;
    for (std::size_t i = 0; i < panels; ++i) {
        const double lo = du_ * static_cast<double>(i);
        const double hi = lo + du_;
        cumulative_[i + 1] = cumulative_[i] + Gauss20::integrate(speed, lo, hi);
        area += Gauss20::integrate(areal, lo, hi);
    }
    length_ = cumulative_.back();
    area_ = area;
    if (!(area_ > 0.0)) {
        throw std::invalid_argument("boundary must be traversed counter-clockwise");
    }
    // Convexity: curvature must not change sign.
    for (std::size_t i = 0; i < 4 * panels; ++i) {
        const double u = kTwoPi * static_cast<double>(i) / static_cast<double>(4 * panels);
        if (curvature(u) < -1e-9) {
            throw std::invalid_argument("boundary is not convex");
        }
    }
}

double ConvexDomain::wrap(double s) const
{
    double r = std::fmod(s, length_);
    if (r < 0.0) {
        r += length_;
    }
    return r >= length_ ? 0.0 : r;
}

double ConvexDomain::arclength_at(double u) const
{
    u = wrap_angle(u);
    const auto panels = cumulative_.size() - 1;
    auto i = static_cast<std::size_t>(u / du_);
    i = std::min(i, panels - 1);
    const double lo = du_ * static_cast<double>(i);
    const Curve& X = *curve_;
    const double part = u > lo ? Gauss20::integrate([&X](double v) { return norm(X.derivative(v)); }, lo, u) : 0.0;
    return wrap(cumulative_[i] + part);
}

double ConvexDomain::param_at(double s) const
{
    s = wrap(s);
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
    auto i = static_cast<std::size_t>(std::distance(cumulative_.begin(), it));
    i = std::clamp<std::size_t>(i, 1, cumulative_.size() - 1) - 1;
    const double s0 = cumulative_[i];
    const double s1 = cumulative_[i + 1];
    const double lo = du_ * static_cast<double>(i);
    double u = lo + du_ * (s - s0) / (s1 - s0);
    const Curve& X = *curve_;
    auto speed = [&X](double v) { return norm(X.derivative(v)); };
    for (int iter = 0; iter < 20; ++iter) {
        const double f = s0 + (u > lo ? Gauss20::integrate(speed, lo, u) : 0.0) - s;
        const double step = f / speed(u);
        u = std::clamp(u - step, lo, lo + du_);
        if (std::abs(step) < 1e-16 * kTwoPi) {
            break;
        }
    }
    return wrap_angle(u);
}

Vec2 ConvexDomain::unit_tangent(double u) const
{
    const Vec2 d = curve_->derivative(u);
    return (1.0 / norm(d)) * d;
}

Vec2 ConvexDomain::inward_normal(double u) const
{
    const Vec2 t = unit_tangent(u);
    return {-t.y, t.x};
}

double ConvexDomain::curvature(double u) const
{
    const double h = 1e-5;
    const Vec2 d = curve_->derivative(u);
    const Vec2 dd = (1.0 / (2.0 * h)) * (curve_->derivative(u + h) - curve_->derivative(u - h));
    const double sp = norm(d);
    return cross(d, dd) / (sp * sp * sp);
}

// ---------------------------------------------------------------------------
// Billiard map

Vec2 direction_at(const ConvexDomain& dom, double u, double theta)
{
    const Vec2 t = dom.unit_tangent(u);
    const Vec2 n{-t.y, t.x};
    return std::cos(theta) * t + std::sin(theta) * n;
}

double reflected_angle(const ConvexDomain& dom, double u, Vec2 incoming)
{
    const Vec2 t = dom.unit_tangent(u);
    const Vec2 n{-t.y, t.x};
    const double d = norm(incoming);
    return std::atan2(std::max(0.0, -dot(incoming, n) / d), dot(incoming, t) / d);
}

RayHit cast_ray(const ConvexDomain& dom, Vec2 origin, Vec2 dir, std::optional<double> from_u)
{
    const Curve& X = dom.curve();
    dir = (1.0 / norm(dir)) * dir;
    // Signed angle from dir to X(u) - origin. It increases monotonically with u
    // and crosses zero upwards exactly once, at the exit point.
    auto psi = [&](double u) {
        const Vec2 v = X.point(u) - origin;
        return std::atan2(cross(dir, v), dot(dir, v));
    };
    constexpr int kNodes = 64;
    const double start = from_u ? *from_u : 0.0;
    const double step = kTwoPi / kNodes;
    double lo = start;
    double hi = start + kTwoPi;
    double prev = from_u ? -1.0 : psi(start);  // only the sign matters at the excluded origin
    bool found = false;
    for (int k = 1; k <= kNodes; ++k) {
        const double u = start + step * k;
        double cur;
        if (from_u && k == kNodes) {
            cur = 1.0;  // just before returning to the origin the angle is pi - theta > 0
        } else {
            cur = psi(u);
        }
        if (prev < 0.0 && cur >= 0.0) {
            lo = u - step;
            hi = u;
            found = true;
            break;
        }
        prev = cur;
    }
    if (!found) {
        throw std::runtime_error("ray does not leave the domain; origin outside or direction degenerate");
    }
    while (hi - lo > 1e-7) {
        const double mid = 0.5 * (lo + hi);
        if (psi(mid) < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Newton polish on the cross product.
    double u = 0.5 * (lo + hi);
    for (int iter = 0; iter < 8; ++iter) {
        const double g = cross(dir, X.point(u) - origin);
        const double dg = cross(dir, X.derivative(u));
        if (dg == 0.0) {
            break;
        }
        const double next = std::clamp(u - g / dg, lo, hi);
        const double delta = next - u;
        u = next;
        if (std::abs(delta) < 1e-16 * kTwoPi) {
            break;
        }
    }
    RayHit hit;
    hit.u = wrap_angle(u);
    hit.point = X.point(u);
    hit.s = dom.arclength_at(hit.u);
    hit.distance = dot(dir, hit.point - origin);
    return hit;
}

namespace {

void require_transversal(double theta)
{
    if (!(theta > 0.0 && theta < kPi)) {
        throw std::domain_error("section point must have theta in (0, pi)");
    }
}

}  // namespace

SectionPoint billiard_map(const ConvexDomain& dom, SectionPoint x)
{
    require_transversal(x.theta);
    const double u0 = dom.param_at(x.s);
    const Vec2 d = direction_at(dom, u0, x.theta);
    const RayHit hit = cast_ray(dom, dom.curve().point(u0), d, u0);
    return {hit.s, reflected_angle(dom, hit.u, d)};
}

double chord_length(const ConvexDomain& dom, SectionPoint x)
{
    require_transversal(x.theta);
    const double u0 = dom.param_at(x.s);
    return cast_ray(dom, dom.curve().point(u0), direction_at(dom, u0, x.theta), u0).distance;
}

double flight_time(const ConvexDomain& dom, SectionPoint x, double H)
{
    if (!(H > 0.0)) {
        throw std::domain_error("flight time needs positive energy");
    }
    return chord_length(dom, x) / std::sqrt(2.0 * H);
}

IntegralGeometry check_integral_geometry(const ConvexDomain& dom, const GeometryQuadrature& q)
{
    if (q.s_nodes < 4) {
        throw std::invalid_argument("need at least 4 arc-length nodes");
    }
    const double L = dom.length();
    const double ds = L / static_cast<double>(q.s_nodes);
    double total = 0.0;
    for (std::size_t i = 0; i < q.s_nodes; ++i) {
        const double s = ds * static_cast<double>(i);
        const double u0 = dom.param_at(s);
        const Vec2 P = dom.curve().point(u0);
        auto f = [&](double theta) {
            if (theta <= 0.0 || theta >= kPi) {
                return 0.0;
            }
            return cast_ray(dom, P, direction_at(dom, u0, theta), u0).distance * std::sin(theta);
        };
        total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, kPi, 12, q.theta_tol);
    }
    IntegralGeometry r;
    r.lhs = total * ds;
    r.rhs = kTwoPi * dom.area();
    r.rel_error = std::abs(r.lhs - r.rhs) / r.rhs;
    return r;
}

// ---------------------------------------------------------------------------
// Angular diffusion

double AngularDiffusion::a(double theta) const { return a0 + a2 * std::cos(2.0 * theta); }
double AngularDiffusion::da(double theta) const { return -2.0 * a2 * std::sin(2.0 * theta); }

void AngularDiffusion::validate() const
{
    if (!(a0 > std::abs(a2))) {
        throw std::invalid_argument("diffusion coefficient must stay positive: need a0 > |a2|");
    }
}

double default_diffusion_step(double delta) { return std::min(1e-3, delta / 100.0); }

double reflected_diffusion_step(const AngularDiffusion& diff, double theta0, double delta, RandomStream& rng,
                                double step)
{
    if (!(delta > 0.0)) {
        return theta0;
    }
    diff.validate();
    const double h = step > 0.0 ? step : default_diffusion_step(delta);
    const double sqrt_h = std::sqrt(h);
    constexpr double kGrazing = 1e-9;
    constexpr std::uint64_t kMaxSteps = 1'000'000'000ull;
    auto fold = [](double th) {
        for (int i = 0; i < 64 && (th < 0.0 || th > kPi); ++i) {
            th = th < 0.0 ? -th : kTwoPi - th;
        }
        return std::clamp(th, 0.0, kPi);
    };
    double theta = std::clamp(theta0, 0.0, kPi);
    double elapsed = 0.0;
    for (std::uint64_t k = 0; k < kMaxSteps; ++k) {
        const double next = fold(theta + 0.5 * diff.da(theta) * h + std::sqrt(diff.a(theta)) * sqrt_h * rng.normal());
        elapsed += 0.5 * (std::sin(theta) + std::sin(next)) * h;
        theta = next;
        if (elapsed >= delta && theta > kGrazing && theta < kPi - kGrazing) {
            return theta;
        }
    }
    throw std::runtime_error("angular diffusion did not accumulate the requested time");
}

SectionPoint section_chain_step(const ConvexDomain& dom, const AngularDiffusion& diff, SectionPoint x, double delta,
                                RandomStream& rng, double step)
{
    SectionPoint y = billiard_map(dom, x);
    y.theta = reflected_diffusion_step(diff, y.theta, delta, rng, step);
    return y;
}

std::vector<SectionPoint> run_section_chain(const ConvexDomain& dom, const AngularDiffusion& diff, SectionPoint x0,
                                            double delta, std::size_t steps, RandomStream& rng, double step)
{
    std::vector<SectionPoint> out;
    out.reserve(steps);
    SectionPoint x = x0;
    for (std::size_t k = 0; k < steps; ++k) {
        x = section_chain_step(dom, diff, x, delta, rng, step);
        out.push_back(x);
    }
    return out;
}

double liouville_defect(const ConvexDomain& dom, SectionPoint x, double h)
{
    const double L = dom.length();
    const SectionPoint y = billiard_map(dom, x);
    // Image arc length unwrapped next to the centre image.
    auto image = [&](double s, double theta) {
        SectionPoint z = billiard_map(dom, {s, theta});
        double ds = z.s - y.s;
        ds -= L * std::round(ds / L);
        return SectionPoint{y.s + ds, z.theta};
    };
    const SectionPoint sp = image(x.s + h, x.theta);
    const SectionPoint sm = image(x.s - h, x.theta);
    const SectionPoint tp = image(x.s, x.theta + h);
    const SectionPoint tm = image(x.s, x.theta - h);
    const double dS_ds = (sp.s - sm.s) / (2.0 * h);
    const double dT_ds = (sp.theta - sm.theta) / (2.0 * h);
    const double dS_dt = (tp.s - tm.s) / (2.0 * h);
    const double dT_dt = (tp.theta - tm.theta) / (2.0 * h);
    const double det = dS_ds * dT_dt - dS_dt * dT_ds;
    return std::abs(det * std::sin(y.theta) / std::sin(x.theta) - 1.0);
}

// ---------------------------------------------------------------------------
// Loss fields

bool on_arc(double s, double s_a, double s_b, double length)
{
    auto wrap = [length](double v) {
        double r = std::fmod(v, length);
        return r < 0.0 ? r + length : r;
    };
    const double span = wrap(s_b - s_a);
    const double off = wrap(s - s_a);
    return off > 0.0 && off < span;
}

LossField LossField::constant(double c)
{
    if (!(c > 0.0)) {
        throw std::invalid_argument("loss coefficient must be positive");
    }
    LossField f;
    f.kind_ = Kind::Constant;
    f.c0_ = c;
    return f;
}

LossField LossField::sides(double s_a, double s_b, double c_in, double c_out, double length)
{
    if (!(c_in > 0.0) || !(c_out > 0.0)) {
        throw std::invalid_argument("loss coefficients must be positive");
    }
    if (!(length > 0.0)) {
        throw std::invalid_argument("boundary length must be positive");
    }
    LossField f;
    f.kind_ = Kind::Sides;
    f.s_a_ = s_a;
    f.s_b_ = s_b;
    f.c_in_ = c_in;
    f.c_out_ = c_out;
    f.length_ = length;
    return f;
}

LossField LossField::fourier(double c0, std::vector<double> cos_k, std::vector<double> sin_k, double length)
{
    if (!(length > 0.0)) {
        throw std::invalid_argument("boundary length must be positive");
    }
    double amplitude = 0.0;
    for (double v : cos_k) {
        amplitude += std::abs(v);
    }
    for (double v : sin_k) {
        amplitude += std::abs(v);
    }
    if (!(c0 > amplitude)) {
        throw std::invalid_argument("Fourier loss field must stay positive: need c0 > sum of |coefficients|");
    }
    LossField f;
    f.kind_ = Kind::Fourier;
    f.c0_ = c0;
    f.cos_ = std::move(cos_k);
    f.sin_ = std::move(sin_k);
    f.length_ = length;
    return f;
}

double LossField::operator()(double s, double /*theta*/) const
{
    switch (kind_) {
    case Kind::Constant:
        return c0_;
    case Kind::Sides:
        return on_arc(s, s_a_, s_b_, length_) ? c_in_ : c_out_;
    case Kind::Fourier: {
        double v = c0_;
        const double w = kTwoPi * s / length_;
        for (std::size_t k = 0; k < cos_.size(); ++k) {
            v += cos_[k] * std::cos(static_cast<double>(k + 1) * w);
        }
        for (std::size_t k = 0; k < sin_.size(); ++k) {
            v += sin_[k] * std::sin(static_cast<double>(k + 1) * w);
        }
        return v;
    }
    }
    return c0_;
}

std::vector<double> LossField::breakpoints() const
{
    if (kind_ == Kind::Sides) {
        return {s_a_, s_b_};
    }
    return {};
}

std::string LossField::describe() const
{
    std::ostringstream os;
    switch (kind_) {
    case Kind::Constant:
        os << "constant(" << c0_ << ")";
        break;
    case Kind::Sides:
        os << "sides(" << c_in_ << " on (" << s_a_ << ", " << s_b_ << "), " << c_out_ << " elsewhere)";
        break;
    case Kind::Fourier:
        os << "fourier(c0=" << c0_ << ", modes=" << std::max(cos_.size(), sin_.size()) << ")";
        break;
    }
    return os.str();
}

double loss_integral(const ConvexDomain& dom, const LossField& c, double s_from, double s_to)
{
    const double L = dom.length();
    const double a = dom.wrap(s_from);
    double span = dom.wrap(s_to - s_from);
    if (span == 0.0) {
        span = L;
    }
    // Split at jumps of the field so each piece is smooth.
    std::vector<double> cuts{0.0, span};
    for (double b : c.breakpoints()) {
        const double off = dom.wrap(b - a);
        if (off > 0.0 && off < span) {
            cuts.push_back(off);
        }
    }
    std::sort(cuts.begin(), cuts.end());
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    auto inner = [&](double off) {
        const double s = dom.wrap(a + off);
        return GK::integrate([&](double th) { return c(s, th) * std::sin(th); }, 0.0, kPi, 8, 1e-12);
    };
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        if (cuts[i + 1] > cuts[i]) {
            total += GK::integrate(inner, cuts[i], cuts[i + 1], 12, 1e-11);
        }
    }
    return total;
}

// ---------------------------------------------------------------------------
// Chord wall

ChordWall ChordWall::make(const ConvexDomain& dom, double s_a, double s_b, double vertex_energy, double c)
{
    if (!(vertex_energy > 0.0)) {
        throw std::invalid_argument("vertex energy must be positive");
    }
    if (c < 0.0) {
        throw std::invalid_argument("chord loss must be non-negative");
    }
    ChordWall w;
    w.s_a = dom.wrap(s_a);
    w.s_b = dom.wrap(s_b);
    if (std::abs(w.s_a - w.s_b) < 1e-9 * dom.length()) {
        throw std::invalid_argument("chord endpoints must differ");
    }
    w.vertex_energy = vertex_energy;
    w.c = c;
    const double ua = dom.param_at(w.s_a);
    const double ub = dom.param_at(w.s_b);
    w.A = dom.curve().point(ua);
    w.B = dom.curve().point(ub);
    // Area of the region bounded by the ccw arc a -> b and the chord b -> a.
    const Curve& X = dom.curve();
    double ue = ub;
    if (ue <= ua) {
        ue += kTwoPi;
    }
    auto areal = [&X](double u) { return 0.5 * cross(X.point(u), X.derivative(u)); };
    const int panels = 256;
    double arc = 0.0;
    const double du = (ue - ua) / panels;
    for (int i = 0; i < panels; ++i) {
        arc += Gauss20::integrate(areal, ua + du * i, ua + du * (i + 1));
    }
    w.area0 = arc + 0.5 * cross(w.B, w.A);
    w.area1 = dom.area() - w.area0;
    if (!(w.area0 > 0.0) || !(w.area1 > 0.0)) {
        throw std::invalid_argument("chord does not split the domain");
    }
    return w;
}

std::size_t ChordWall::well_of(double s, double length) const { return on_arc(s, s_a, s_b, length) ? 0 : 1; }

// ---------------------------------------------------------------------------
// Dissipative billiard

BilliardResult simulate_billiard(const ConvexDomain& dom, const LossField& c, const AngularDiffusion& diff,
                                 const ChordWall* wall, SectionPoint x0, double H0, double eps, double delta,
                                 RandomStream& rng, const BilliardOptions& opt)
{
    if (!(H0 > 0.0)) {
        throw std::invalid_argument("initial energy must be positive");
    }
    if (eps < 0.0) {
        throw std::invalid_argument("eps must be non-negative");
    }
    if (!(x0.theta > 0.0 && x0.theta < kPi)) {
        throw std::invalid_argument("initial angle must lie in (0, pi)");
    }
    if (delta > 0.0) {
        diff.validate();
    }
    if (opt.horizon == kInf && opt.collision_limit == 0 && eps == 0.0 && !(wall && opt.stop_at_well)) {
        throw std::invalid_argument("elastic billiard run needs a horizon or a collision limit");
    }
    const double scale = time_scale(eps);
    const double L = dom.length();
    const bool trapped_at_start = wall && H0 <= wall->vertex_energy;
    if (trapped_at_start) {
        throw std::invalid_argument("initial energy must lie above the chord wall's vertex energy");
    }
    // Edge labels of the two-well graph: wells 0 and 1, upper edge 2.
    auto edge_label = [&](std::optional<std::size_t> well) -> EdgeId {
        if (!wall) {
            return 0;
        }
        return well ? static_cast<EdgeId>(*well) : 2;
    };

    BilliardResult res;
    double H = H0;
    double t = 0.0;
    double u = dom.param_at(x0.s);
    Vec2 origin = dom.curve().point(u);
    Vec2 dir = direction_at(dom, u, x0.theta);
    std::optional<double> from_u = u;
    SectionPoint here = {dom.wrap(x0.s), x0.theta};
    res.energy.points.push_back({0.0, H, edge_label(std::nullopt)});

    std::uint64_t n = 0;
    for (;;) {
        if (!(H > 0.0)) {
            break;
        }
        RayHit hit = cast_ray(dom, origin, dir, from_u);
        // Reflection off the chord once the wall is closed.
        if (wall && res.well) {
            const Vec2 e = wall->B - wall->A;
            const double denom = cross(dir, e);
            if (std::abs(denom) > 1e-14) {
                const double tc = cross(wall->A - origin, e) / denom;
                const double sc = cross(wall->A - origin, dir) / denom;
                if (tc > 1e-12 && tc < hit.distance && sc >= 0.0 && sc <= 1.0) {
                    const double dt = scale * tc / std::sqrt(2.0 * H);
                    if (t + dt > opt.horizon) {
                        t = opt.horizon;
                        break;
                    }
                    t += dt;
                    origin = origin + tc * dir;
                    const Vec2 nrm = (1.0 / norm(e)) * Vec2{-e.y, e.x};
                    dir = dir - (2.0 * dot(dir, nrm)) * nrm;
                    from_u.reset();
                    H = std::max(H - eps * wall->c, 0.0);
                    continue;
                }
            }
        }
        const double dt = scale * hit.distance / std::sqrt(2.0 * H);
        if (t + dt > opt.horizon) {
            t = opt.horizon;
            break;
        }
        t += dt;
        ++n;
        if (n > opt.max_collisions) {
            throw std::runtime_error("billiard exceeded max_collisions");
        }
        const double theta_out = reflected_angle(dom, hit.u, dir);
        H = std::max(H - eps * c(hit.s, theta_out), 0.0);
        if (wall && !res.well && H <= wall->vertex_energy) {
            res.well = wall->well_of(hit.s, L);
        }
        double theta_next = theta_out;
        if (delta > 0.0) {
            theta_next = reflected_diffusion_step(diff, theta_out, delta, rng, opt.diffusion_step);
        }
        here = {hit.s, theta_next};
        if (opt.record_log) {
            res.log.push_back({n, hit.s, theta_next, H, t});
        }
        res.energy.points.push_back({t, H, edge_label(res.well)});
        if (res.well && opt.stop_at_well) {
            break;
        }
        if (opt.collision_limit != 0 && n >= opt.collision_limit) {
            break;
        }
        u = hit.u;
        origin = hit.point;
        dir = direction_at(dom, u, theta_next);
        from_u = u;
    }
    res.final_point = here;
    res.H_final = H;
    res.t_end = t;
    res.collisions = n;
    if (res.energy.points.back().t < t) {
        res.energy.points.push_back({t, H, edge_label(res.well)});
    }
    return res;
}

BranchingPrediction predict_branching(const ConvexDomain& dom, const ChordWall& wall, const LossField& c)
{
    BranchingPrediction p;
    p.cm[0] = loss_integral(dom, c, wall.s_a, wall.s_b);
    p.cm[1] = loss_integral(dom, c, wall.s_b, wall.s_a);
    p.cm_total = p.cm[0] + p.cm[1];
    p.area[0] = wall.area0;
    p.area[1] = wall.area1;
    p.p_first = p.cm[0] / p.cm_total;
    return p;
}

BranchingEstimate branching_estimate(const ConvexDomain& dom, const ChordWall& wall, const LossField& c,
                                     const AngularDiffusion& diff, SectionPoint x0, double H0, double eps,
                                     double delta, const BranchingRun& run, double z, const BilliardOptions& opt)
{
    if (!(eps > 0.0)) {
        throw std::invalid_argument("branching needs eps > 0");
    }
    BranchingEstimate est;
    est.prediction = predict_branching(dom, wall, c);
    const StreamKey key(run.seed, run.experiment);
    std::vector<int> wells(run.replicas, -1);
    std::vector<std::uint64_t> collisions(run.replicas, 0);
    std::vector<char> failed(run.replicas, 0);
    BilliardOptions o = opt;
    o.stop_at_well = true;
    o.record_log = false;
    parallel_for(run.replicas, run.threads, [&](std::size_t i) {
        RandomStream rng(key, static_cast<std::uint32_t>(i), 0);
        try {
            const BilliardResult r = simulate_billiard(dom, c, diff, &wall, x0, H0, eps, delta, rng, o);
            if (r.well) {
                wells[i] = static_cast<int>(*r.well);
            }
            collisions[i] = r.collisions;
        } catch (const std::runtime_error&) {
            failed[i] = 1;
        }
    });
    double total_collisions = 0.0;
    for (std::size_t i = 0; i < run.replicas; ++i) {
        if (failed[i]) {
            ++est.failures;
            continue;
        }
        if (wells[i] >= 0) {
            ++est.counts[wells[i]];
            ++est.trapped;
        }
        total_collisions += static_cast<double>(collisions[i]);
    }
    est.freq_first = est.trapped ? static_cast<double>(est.counts[0]) / static_cast<double>(est.trapped) : 0.0;
    est.ci_first = wilson_interval(est.counts[0], est.trapped, z);
    const auto ok = run.replicas - est.failures;
    est.mean_collisions = ok ? total_collisions / static_cast<double>(ok) : 0.0;
    return est;
}

}  // namespace nelastic
