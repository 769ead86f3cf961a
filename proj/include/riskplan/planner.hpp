// Planners: the RRT-SOS baseline (risk-verified tree growth with line-biased
// sampling, then PRM + Dijkstra refinement) and the bidirectional neural
// planner with lazy states contraction, hybrid replanning, and the standby
// fallback that preserves completeness.
#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "riskplan/verifier.hpp"

namespace riskplan {

struct SearchTree {
    std::vector<Point> vertices;
    std::vector<int> parent;  // -1 for the root

    explicit SearchTree(const Point& root) : vertices{root}, parent{-1} {}

    int add(const Point& p, int par) {
        vertices.push_back(p);
        parent.push_back(par);
        return static_cast<int>(vertices.size()) - 1;
    }

    const Point& top() const { return vertices.back(); }

    // Waypoints from the root to vertex idx, root first.
    std::vector<Point> root_path(int idx) const;
};

// Index of the vertex closest to x; ties break toward the lowest index.
int nearest(const SearchTree& tree, const Point& x);

// Moves from `from` toward `toward` by at most `step`.
Point steer(const Point& from, const Point& toward, double step);

struct Path {
    std::vector<Point> waypoints;
    double total_length = 0.0;

    static Path from_waypoints(std::vector<Point> pts);
};

enum class PlanStatus { Solved, SolvedByFallback, Infeasible, Timeout };

std::string to_string(PlanStatus s);

struct PlannerConfig {
    int max_iterations = 400;      // bidirectional iteration budget (N)
    int max_replan_rounds = 8;     // neural replanning rounds (N_j)
    double step = 0.0;             // steer step; 0 resolves to 0.1 * diagonal
    double target_radius = 0.0;    // target region radius; 0 -> 0.05 * diagonal
    int prm_nodes = 200;           // extra samples for the PRM refinement
    double prm_radius = 0.0;       // PRM connection radius; 0 -> 0.25 * diagonal
    double line_bias_prob = 0.5;   // RRT-SOS segment-biased sampling probability
    double line_bias_sigma = 0.0;  // spread around the segment; 0 -> 0.1 * diagonal
    double time_budget_s = 30.0;
    std::uint64_t seed = 0;

    PlannerConfig resolved(const Bounds& b) const;
};

struct PlanReport {
    std::optional<Path> path;
    PlanStatus status = PlanStatus::Infeasible;
    int iterations = 0;
    long ra_calls = 0;
    double wall_time_s = 0.0;
};

// Greedy forward shortcutting: keeps the farthest waypoint reachable through
// a verified edge. Endpoints are preserved and the output is a subsequence of
// the input.
Path lsc(const Path& path, const RiskConstraintSet& cs);

PlanReport rrt_sos_plan(const Environment& env, double delta, const Point& start,
                        const Point& goal, const PlannerConfig& cfg, Rng& rng);

// Proposes the next state given the expanding tree's top vertex and the
// opposite tree's top; planning-time implementations are stochastic.
class SampleSource {
public:
    virtual ~SampleSource() = default;
    virtual Point propose(const Point& current, const Point& toward_goal, Rng& rng) = 0;
};

// Bidirectional planning driven by an arbitrary sample source, with lazy
// states contraction, hybrid replanning, and the RRT-SOS standby fallback.
// The neural entry point wraps this with the trained sampler.
PlanReport nr_rrt_plan_with_sampler(const Environment& env, double delta, const Point& start,
                                    const Point& goal, SampleSource& sampler,
                                    const PlannerConfig& cfg, Rng& rng);

// Replaces every consecutive pair of `coarse` that fails edge verification
// with a bidirectional sub-path from `sampler` when one can be found; pairs
// that still fail stay adjacent in the output.
Path replan(const Path& coarse, SampleSource& sampler, const Environment& env, double delta,
            const PlannerConfig& cfg, Rng& rng);

}  // namespace riskplan
