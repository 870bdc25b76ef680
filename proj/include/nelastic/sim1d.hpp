#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nelastic/model1d.hpp"

namespace nelastic {

struct CollisionRecord {
    double t = 0.0;  // physical time
    std::size_t wall = 0;
    double pre_speed = 0.0;
    double post_speed = 0.0;
    double energy_after = 0.0;
    EdgeId edge = kNone;  // graph edge right after the collision
};

struct PathPoint {
    double t = 0.0;
    double H = 0.0;
    EdgeId K = kNone;
};

/// Piecewise-linear trajectory on the graph. H is interpolated linearly
/// between breakpoints; on (t_i, t_{i+1}] the edge is that of breakpoint i+1.
struct GraphPath {
    std::vector<PathPoint> points;

    bool empty() const noexcept { return points.empty(); }
    double t_begin() const { return points.front().t; }
    double t_end() const { return points.back().t; }
    /// Clamped to the first/last breakpoint outside [t_begin, t_end].
    GraphPoint at(double t) const;
    /// Times at which K changes (the later breakpoint's time).
    std::vector<double> edge_change_times() const;
};

/// Extra restitution term for hit number `hit` (0-based, counted per wall) of
/// wall `wall`. The reflected speed is pre * (1 - eps c(pre) - eps * extra).
using WallNoise = std::function<double(std::size_t wall, std::uint64_t hit)>;

struct SimOptions {
    double horizon = kInf;       // rescaled time
    double stop_energy = 0.0;    // stop once H < stop_energy
    bool stop_at_well = true;    // stop on entering a leaf edge
    std::uint64_t collision_limit = 0;  // stop after this many collisions; 0 = no limit
    std::uint64_t max_collisions = 100'000'000;  // error beyond this
    bool record_log = true;
    bool record_path = true;
    double step = 1e-3;          // integrator step for the potential model
};

enum class StopReason { Horizon, StopEnergy, Well, CollisionLimit };

struct SimResult {
    std::vector<CollisionRecord> log;
    GraphPath path;          // rescaled time
    std::optional<std::size_t> well;
    PhasePoint final_state;
    EdgeId final_edge = kNone;
    double t_end = 0.0;      // rescaled
    std::uint64_t collisions = 0;
    StopReason reason = StopReason::Horizon;
};

/// Time rescaling factor: eps, or 1 in the elastic case.
inline double time_scale(double eps) noexcept { return eps > 0.0 ? eps : 1.0; }

SimResult simulate_flat(const FlatModelSpec& spec, const ReebGraph& graph, PhasePoint x0, double eps,
                        const SimOptions& opt = {}, const WallNoise& noise = {});
SimResult simulate_flat(const FlatModelSpec& spec, PhasePoint x0, double eps, const SimOptions& opt = {},
                        const WallNoise& noise = {});

/// Walls are numbered 0 (a1) and 1 (a2); wells 0 (left of a0) and 1.
SimResult simulate_potential(const PotentialSpec& spec, PhasePoint x0, double eps, const SimOptions& opt = {},
                             const WallNoise& noise = {});

/// One step of the fourth-order Yoshida composition for q'' = -F'(q).
PhasePoint yoshida_step(const std::function<double(double)>& dF, PhasePoint x, double h);

/// Continuous interpolation of the jump energy path through (0, H0) and the
/// post-collision energies, in rescaled time. If t_end is later than the last
/// collision the path is extended flat to t_end.
GraphPath piecewise_linear_energy(const std::vector<CollisionRecord>& log, GraphPoint start, double eps,
                                  double t_end = -1.0);

/// sup over t of |step energy - interpolated energy| over the run; the step
/// path holds the post-collision energy until the next collision.
double step_interpolation_gap(const std::vector<CollisionRecord>& log, GraphPoint start, double eps);

std::string to_string(StopReason r);

}  // namespace nelastic
