// Deterministic risk-contour constraints per obstacle at a risk level delta,
// three-zone classification of workspace points, rasterization to the map
// image encoding, and the Monte Carlo point-risk oracle.
#pragma once

#include <optional>

#include "riskplan/environment.hpp"
#include "riskplan/image.hpp"

namespace riskplan {

enum class Zone { Safe, Risk, Dangerous };

// Constraints for one obstacle. The ratio inequality
//   (E[P^2] - E[P]^2) / E[P^2] <= delta,  E[P] <= 0
// is cleared of its denominator into
//   g1 = E[P]^2 - (1 - delta) E[P^2] >= 0,  g2 = -E[P] >= 0.
// mean_sq and second_moment are kept separately so g1 values can be combined
// as eval(E[P]^2) - (1-delta) * eval(E[P^2]); that combination is monotone in
// delta pointwise, which the zone-nesting guarantees rely on.
struct ObstacleConstraints {
    std::string name;
    PlanePoly mean;           // E[P]
    PlanePoly mean_sq;        // E[P]^2
    PlanePoly second_moment;  // E[P^2]

    PlanePoly g1(double delta) const { return mean_sq - ((1.0 - delta) * second_moment); }
    PlanePoly g2() const { return -1.0 * mean; }

    double eval_g1(const Point& pt, double delta) const {
        return poly_eval(mean_sq, pt) - (1.0 - delta) * poly_eval(second_moment, pt);
    }
    double eval_g2(const Point& pt) const { return -poly_eval(mean, pt); }
};

struct RiskConstraintSet {
    Bounds bounds;
    double delta = 0.0;
    std::vector<ObstacleConstraints> obstacles;
};

RiskConstraintSet build_constraints(const Environment& env, double delta);

// Dangerous if any obstacle has g2 < 0, else Risk if any has g1 < 0, else
// Safe. Throws std::domain_error for points outside the bounds.
Zone classify_point(const RiskConstraintSet& cs, const Point& pt);

// Pixel-center sampling; row 0 maps to ymax.
MapImage rasterize(const RiskConstraintSet& cs, int width, int height);

// Fraction of n joint parameter draws under which pt lies inside any realized
// obstacle.
double mc_point_risk(const Environment& env, const Point& pt, int n, Rng& rng);

// Zone map with the path polyline drawn on top in kPathColor.
struct Path;  // planner.hpp
MapImage render_overlay(const Environment& env, double delta,
                        const std::vector<Point>& waypoints, int width, int height);

}  // namespace riskplan
