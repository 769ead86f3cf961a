// Parametric obstacle and environment constructors for the desk-scale
// environment family: the canonical single-obstacle workspaces plus randomly
// placed cluttered scenes (circles, ellipses, calabash-shaped Cassini ovals).
#pragma once

#include "riskplan/environment.hpp"

namespace riskplan {

// w^2 - x^2 - y^2 >= 0 with w ~ U(0.3, 0.4), bounds [-1,1]^2.
Environment circle_env();

// w^2 - x^2/2 - y^2 >= 0 with w ~ N(0,1), bounds [-2,2]^2.
Environment ellipse_env();

// Degree-5 heart-shaped obstacle with w ~ Beta(9, 0.5), bounds [-2,2]^2.
Environment heart_env();

// An annular obstacle around radius 1 that seals the origin off from the rest
// of the workspace; used for provably unsolvable queries. Bounds [-2,2]^2.
Environment ring_env();

// Applies x -> (cos r (x-cx) + sin r (y-cy)) / s, y -> (-sin r (x-cx) +
// cos r (y-cy)) / s to the obstacle polynomial: places a unit-scale shape at
// (cx, cy) with rotation r and scale s.
TriPoly place_shape(const TriPoly& unit_shape, double cx, double cy, double rot, double scale);

// Seven uncertain obstacles (three circles, two ellipses, two calabash) at
// seeded random placements in [-5,5]^2.
Environment cluttered_env(std::uint64_t seed);

}  // namespace riskplan
