#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nelastic/model1d.hpp"
#include "nelastic/rng.hpp"
#include "nelastic/sim1d.hpp"

namespace nelastic {

/// Energy flow dH/dt = rhs(H) < 0 on one graph edge.
struct EdgeFlow {
    EdgeId edge = kNone;
    double h_lo = 0.0;
    double h_hi = kInf;
    std::function<double(double)> rhs;
    /// Closed forms: dH/dt = -k H^{3/2} (flat model, constant coefficients)
    /// or dH/dt = -k sqrt(H) (billiard).
    std::optional<double> rate_three_halves;
    std::optional<double> rate_half;
};

/// Branch probabilities at an interior vertex.
struct VertexKernel {
    VertexId vertex = kNone;
    EdgeId left = kNone;
    EdgeId right = kNone;
    double p_left = 0.5;
    double p_right() const noexcept { return 1.0 - p_left; }
};

struct LimitModel {
    ReebGraph graph;
    std::vector<EdgeFlow> flows;       // indexed by edge
    std::vector<VertexKernel> kernels; // indexed by vertex
};

/// Flat model flows. `shift[w]` is added to wall w's coefficient (the mean
/// restitution perturbation delta E xi); empty means no shift.
LimitModel flat_limit(const FlatModelSpec& spec, const std::vector<double>& shift = {});
/// General potential: edge flows use the wall losses 2 c_i (H - F(a_i)) per
/// hit, divided by the edge period.
LimitModel potential_limit(const PotentialSpec& spec, const PeriodOptions& opt = {});
/// Two-well billiard: the upper edge decays with sqrt(2H) cm_total / (2 pi A),
/// well i with sqrt(2H) cm_i / (2 pi A_i); branch weights cm_1 : cm_2.
LimitModel billiard_limit(double vertex_energy, double area, double cm_total, double area1, double cm1,
                          double area2, double cm2);

/// H(t) along the edge flow from H0; throws std::domain_error past the exit.
double edge_solution(const EdgeFlow& flow, double H0, double t);
/// Time to go from H0 down to H_target along the flow.
double hitting_time(const EdgeFlow& flow, double H0, double H_target);

struct LimitPath {
    GraphPath path;
    std::vector<double> vertex_times;
    std::optional<std::size_t> well;  // set once a leaf edge is entered
};

struct LimitSampleOptions {
    double horizon = 10.0;
    std::size_t points_per_edge = 1024;
};

/// One realisation of the limit process from Y0; branch choices use
/// substream 0 of (key, replica).
LimitPath sample_limit_path(const LimitModel& model, GraphPoint y0, const StreamKey& key, std::uint32_t replica,
                            const LimitSampleOptions& opt = {});

/// Terminal-leaf probabilities implied by the kernels (product along the path
/// from the root), indexed by well.
std::vector<double> leaf_distribution(const LimitModel& model);

/// Geodesic distance on the graph: |H1 - H2| on one edge, otherwise the
/// shortest route through vertices.
class GraphMetric {
public:
    explicit GraphMetric(const ReebGraph& graph);
    double distance(GraphPoint a, GraphPoint b) const;

private:
    ReebGraph graph_;
    std::vector<std::vector<double>> vertex_dist_;
};

struct PathDistanceOptions {
    /// Breakpoints within window/2 of a vertex passage of either path are
    /// skipped.
    double exclusion_window = 0.0;
};

/// sup over the common time range of rho(a(t), b(t)), evaluated on the union
/// of breakpoints.
double path_distance(const GraphPath& a, const GraphPath& b, const GraphMetric& metric,
                     const PathDistanceOptions& opt = {});

}  // namespace nelastic
