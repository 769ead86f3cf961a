#include "riskplan/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace riskplan {

bool verify_point(const RiskConstraintSet& cs, const Point& pt) {
    if (!cs.bounds.contains(pt)) return false;
    return classify_point(cs, pt) == Zone::Safe;
}

EdgeCertificate verify_edge(const RiskConstraintSet& cs, const Point& u, const Point& v,
                            double eps) {
    EdgeCertificate cert;
    // Endpoints must classify Safe outright; the restrictions tolerate -eps at
    // the endpoints, so this gate keeps "verdict implies safe endpoints" exact.
    cert.verdict = verify_point(cs, u) && verify_point(cs, v);
    if (!cs.bounds.contains(u) || !cs.bounds.contains(v)) return cert;
    for (const auto& oc : cs.obstacles) {
        // g1 restriction assembled from the separately restricted pieces;
        // restriction is linear in the coefficients so this equals
        // restrict(g1).
        const LinePoly g1 = restrict_to_line(oc.mean_sq, u, v) -
                            ((1.0 - cs.delta) * restrict_to_line(oc.second_moment, u, v));
        const LinePoly g2 = -1.0 * restrict_to_line(oc.mean, u, v);
        const LinePoly* gs[2] = {&g1, &g2};
        for (int k = 1; k <= 2; ++k) {
            const LinePoly& g = *gs[k - 1];
            cert.margins.push_back({oc.name, k, std::min(g(0.0), g(1.0))});
            if (!nonneg_on_unit_interval(g, eps)) {
                cert.verdict = false;
                if (!cert.rejected_constraint) cert.rejected_constraint = {oc.name, k};
            }
        }
    }
    return cert;
}

bool verify_path(const RiskConstraintSet& cs, const std::vector<Point>& waypoints) {
    if (waypoints.empty()) return false;
    if (waypoints.size() == 1) return verify_point(cs, waypoints[0]);
    for (size_t i = 0; i + 1 < waypoints.size(); ++i)
        if (!verify_edge(cs, waypoints[i], waypoints[i + 1]).verdict) return false;
    return true;
}

double mc_edge_risk(const Environment& env, const Point& u, const Point& v, int n_param,
                    int n_pts, Rng& rng) {
    if (n_param < 1 || n_pts < 1)
        throw std::invalid_argument("mc_edge_risk: draw and point counts must be >= 1");
    if (env.obstacles.empty()) return 0.0;

    // For every sample point of the edge, collapse each obstacle polynomial to
    // a univariate in its parameter. One draw then costs one Horner per point.
    std::vector<std::vector<LinePoly>> collapsed(env.obstacles.size());
    for (size_t k = 0; k < env.obstacles.size(); ++k) {
        collapsed[k].reserve(n_pts);
        for (int i = 0; i < n_pts; ++i) {
            const double t = (n_pts == 1) ? 0.0 : static_cast<double>(i) / (n_pts - 1);
            const double x = u.x + t * (v.x - u.x);
            const double y = u.y + t * (v.y - u.y);
            collapsed[k].push_back(collapse_to_param(env.obstacles[k].poly, x, y));
        }
    }

    long hits = 0;
    std::vector<double> draws(env.obstacles.size());
    for (int trial = 0; trial < n_param; ++trial) {
        for (size_t k = 0; k < env.obstacles.size(); ++k)
            draws[k] = env.obstacles[k].dist.sample(rng);
        bool hit = false;
        for (size_t k = 0; k < env.obstacles.size() && !hit; ++k)
            for (int i = 0; i < n_pts; ++i)
                if (collapsed[k][i](draws[k]) >= 0.0) {
                    hit = true;
                    break;
                }
        if (hit) ++hits;
    }
    return static_cast<double>(hits) / n_param;
}

}  // namespace riskplan
