// The risk assessor: certifies that vertices and straight-line edges stay in
// the Safe zone, and the Monte Carlo edge oracle used to validate every risk
// claim independently.
#pragma once

#include <optional>
#include <utility>

#include "riskplan/risk_map.hpp"

namespace riskplan {

struct ConstraintMargin {
    std::string obstacle;
    int k = 1;  // 1 = cleared ratio constraint, 2 = mean constraint
    double min_endpoint_value = 0.0;
};

struct EdgeCertificate {
    bool verdict = false;
    std::vector<ConstraintMargin> margins;
    std::optional<std::pair<std::string, int>> rejected_constraint;
};

// TRUE iff the point classifies Safe; out-of-bounds points are unsafe, not an
// error.
bool verify_point(const RiskConstraintSet& cs, const Point& pt);

// Restricts every constraint to the segment [u, v] and requires
// nonneg_on_unit_interval on each; both endpoints must verify as points.
EdgeCertificate verify_edge(const RiskConstraintSet& cs, const Point& u, const Point& v,
                            double eps = kEdgeEps);

bool verify_path(const RiskConstraintSet& cs, const std::vector<Point>& waypoints);

// Fraction of n_param joint parameter draws under which any of n_pts evenly
// spaced points of [u, v] lies inside a realized obstacle.
double mc_edge_risk(const Environment& env, const Point& u, const Point& v, int n_param,
                    int n_pts, Rng& rng);

}  // namespace riskplan
