#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nelastic/model1d.hpp"
#include "nelastic/rng.hpp"
#include "nelastic/sim1d.hpp"
#include "nelastic/stats.hpp"
#include "nelastic/walk.hpp"

namespace nelastic {

/// Bounded noise variable with a continuous density on (lo, hi).
class NoiseLaw {
public:
    enum class Shape { Uniform, Bump };

    static NoiseLaw uniform(double lo, double hi);
    /// Density proportional to (1 - x^2)^2 after mapping (lo, hi) onto (-1, 1).
    static NoiseLaw bump(double lo, double hi);

    double quantile(double u) const;
    double cdf(double x) const;
    double mean() const noexcept { return 0.5 * (lo_ + hi_); }
    double lower() const noexcept { return lo_; }
    double upper() const noexcept { return hi_; }
    Shape shape() const noexcept { return shape_; }
    NoiseLaw scaled(double factor) const;

private:
    Shape shape_ = Shape::Uniform;
    double lo_ = 0.0;
    double hi_ = 1.0;
};

std::string to_string(NoiseLaw::Shape s);

/// Random restitution perturbation: at the k-th hit of wall w the reflected
/// speed is pre * (1 - eps c_w - eps delta xi_{w,k}).
struct DynNoise {
    std::vector<NoiseLaw> laws;  // one per wall
    double delta = 0.1;

    double alpha() const;
    double beta() const;
    void validate(std::size_t walls) const;
    /// Noise sequence of one replica; xi_{w,k} is drawn from substream w + 1 at
    /// index k, so the value does not depend on the order of hits elsewhere.
    WallNoise bind(const StreamKey& key, std::uint32_t replica) const;
    DynNoise scaled(double factor) const;
};

/// Radially symmetric perturbation of the initial point in the (q, p) plane.
struct InitNoise {
    enum class Profile { Bump, Cone, Flat };

    double delta = 0.05;
    Profile profile = Profile::Bump;

    /// Unnormalised radial profile g(r), r = |x| / delta in [0, 1].
    double profile_at(double r) const;
    /// Normalised density of the offset.
    double density(double dq, double dp) const;
    /// Offset drawn by rejection from the disc.
    PhasePoint sample(RandomStream& rng) const;
    /// Density of the p-component of the offset.
    double p_marginal(double dp) const;
};

std::string to_string(InitNoise::Profile p);

struct EnsembleOptions {
    std::size_t replicas = 1000;
    std::uint64_t seed = 1;
    std::string experiment = "ensemble";
    unsigned threads = 0;
    SimOptions sim;
    bool keep_paths = false;
};

struct ReplicaOutcome {
    std::optional<std::size_t> well;
    double t_end = 0.0;
    std::uint64_t collisions = 0;
    PhasePoint start;
    std::string error;
};

struct WellStat {
    std::size_t well = 0;
    std::uint64_t count = 0;
    double freq = 0.0;
    Interval ci;
};

struct EnsembleResult {
    std::size_t wells = 0;
    std::vector<ReplicaOutcome> outcomes;
    std::vector<std::uint64_t> counts;
    std::uint64_t trapped = 0;
    std::uint64_t failures = 0;
    std::vector<GraphPath> paths;

    /// Frequency among replicas that reached a well.
    double freq(std::size_t well) const;
    Interval wilson(std::size_t well, double z = 3.0) const;
    std::vector<WellStat> summary(double z = 3.0) const;
};

EnsembleResult simulate_with_init_noise(const FlatModelSpec& spec, PhasePoint x0, const InitNoise& noise, double eps,
                                        const EnsembleOptions& opt);
EnsembleResult simulate_with_dyn_noise(const FlatModelSpec& spec, PhasePoint x0, const DynNoise& noise, double eps,
                                       const EnsembleOptions& opt);
/// Both perturbations at once (either may be absent).
EnsembleResult simulate_ensemble(const FlatModelSpec& spec, PhasePoint x0, const InitNoise* init, const DynNoise* dyn,
                                 double eps, const EnsembleOptions& opt);

/// Speed after one reflection from `wall`, and its inverse.
double one_hit(const FlatModelSpec& spec, std::size_t wall, double speed, double eps);
double one_hit_inverse(const FlatModelSpec& spec, std::size_t wall, double speed_after, double eps);

/// Well reached from a two-well start with momentum p (deterministic, eps > 0),
/// by iterating the one-hit maps.
std::size_t two_well_outcome(const FlatModelSpec& spec, double p, double eps);

struct Strip {
    double lo = 0.0;  // speed interval (lo, hi] clipped to the window
    double hi = 0.0;
    double full_width = 0.0;  // width before clipping
    std::size_t well = 0;
    std::uint64_t collisions = 0;  // index of the trapping collision
};

enum class StripWeight { Lebesgue, Disc };

struct StripRatio {
    double ratio = 0.0;       // measure into well 0 / measure into well 1
    double measure[2] = {0.0, 0.0};
    std::vector<Strip> strips;
    double min_width = 0.0;   // over strips fully inside the window
    double max_width = 0.0;
};

/// Decomposes the speed window [|p| - half_width, |p| + half_width] of a
/// two-well model into strips trapped at the same collision, using the exact
/// boundaries where the speed after m hits equals the separating height.
StripRatio strip_ratio(const FlatModelSpec& spec, PhasePoint x, double eps, double half_width,
                       StripWeight weight = StripWeight::Lebesgue);

/// The two-well collision sequence seen as an alternating walk in -log(speed)
/// units: step U = -(1/eps) ln(1 - eps c - eps delta xi), scale n = floor(1/eps)
/// and rate ln(p0 / p(O)). Odd steps belong to the wall hit first.
struct LogWalkBridge {
    AlternatingWalk walk;
    std::size_t odd_well = 0;
    std::size_t even_well = 1;
};

LogWalkBridge log_walk_bridge(const FlatModelSpec& spec, double p0, const DynNoise& noise, double eps);

/// Three-well model where wells 2, 3 split at speed `low` and jointly split
/// from well 1 at speed `high`. The left exterior wall has coefficient
/// c_left, all other walls c.
struct ThreeWellGeometry {
    std::vector<double> walls{-1.0, 0.0, 0.5, 1.5};
    double high = 2.0;
    double low = 1.0;
    double c_left = 0.1;
    double c = 1.0;

    FlatModelSpec spec() const;
    /// Number of hits between the two heights, ln(high/low) / -ln(1 - eps c).
    double hit_count(double eps) const;
    /// eps for which hit_count is exactly N.
    double admissible_eps(long N) const;
};

struct Fig6Row {
    double eps = 0.0;
    double hit_count = 0.0;
    bool admissible = false;
    std::string warning;
    EnsembleResult init;
    std::optional<EnsembleResult> dyn;
    /// Frequency of the middle well among all trapped replicas, and its share
    /// among replicas that ended in one of the two lower wells.
    double middle_freq = 0.0;
    double middle_share = 0.0;
    double dyn_middle_freq = 0.0;
};

std::vector<Fig6Row> fig6_counterexample(const ThreeWellGeometry& geo, const std::vector<double>& eps_list,
                                         PhasePoint x0, const InitNoise& init, const DynNoise* dyn,
                                         const EnsembleOptions& opt, double admissible_tol = 1e-6);

}  // namespace nelastic
