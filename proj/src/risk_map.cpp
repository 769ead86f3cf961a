#include "riskplan/risk_map.hpp"

#include <cmath>
#include <stdexcept>

#include "riskplan/threads.hpp"

namespace riskplan {

RiskConstraintSet build_constraints(const Environment& env, double delta) {
    if (!(delta >= 0.0 && delta <= 1.0))
        throw std::invalid_argument("risk level must lie in [0, 1]");
    env.validate();
    RiskConstraintSet cs;
    cs.bounds = env.bounds;
    cs.delta = delta;
    cs.obstacles.reserve(env.obstacles.size());
    for (const auto& ob : env.obstacles) {
        ObstacleConstraints oc;
        oc.name = ob.name;
        oc.mean = expect_poly(ob.poly, ob.dist);
        oc.mean_sq = oc.mean * oc.mean;
        oc.second_moment = expect_square(ob.poly, ob.dist);
        cs.obstacles.push_back(std::move(oc));
    }
    return cs;
}

Zone classify_point(const RiskConstraintSet& cs, const Point& pt) {
    if (!cs.bounds.contains(pt))
        throw std::domain_error("classify_point: point outside environment bounds");
    bool risk = false;
    for (const auto& oc : cs.obstacles) {
        if (oc.eval_g2(pt) < 0.0) return Zone::Dangerous;
        if (oc.eval_g1(pt, cs.delta) < 0.0) risk = true;
    }
    return risk ? Zone::Risk : Zone::Safe;
}

MapImage rasterize(const RiskConstraintSet& cs, int width, int height) {
    if (width < 8 || height < 8)
        throw std::invalid_argument("rasterize: image must be at least 8x8");
    MapImage img;
    img.width = width;
    img.height = height;
    img.pixels.assign(static_cast<size_t>(width) * height * 3, 0);
    const double dx = cs.bounds.width() / width;
    const double dy = cs.bounds.height() / height;
    parallel_for(static_cast<size_t>(height), [&](size_t r) {
        const double y = cs.bounds.ymax - (static_cast<double>(r) + 0.5) * dy;
        for (int c = 0; c < width; ++c) {
            const double x = cs.bounds.xmin + (c + 0.5) * dx;
            Rgb color;
            switch (classify_point(cs, {x, y})) {
                case Zone::Safe: color = kSafeColor; break;
                case Zone::Risk: color = kRiskColor; break;
                case Zone::Dangerous: color = kDangerColor; break;
            }
            img.set(static_cast<int>(r), c, color);
        }
    });
    return img;
}

double mc_point_risk(const Environment& env, const Point& pt, int n, Rng& rng) {
    if (n < 1) throw std::invalid_argument("mc_point_risk: n must be >= 1");
    if (env.obstacles.empty()) return 0.0;
    // Collapse each obstacle polynomial at the fixed point to a univariate in
    // the parameter; each draw is then a Horner evaluation.
    std::vector<LinePoly> collapsed;
    collapsed.reserve(env.obstacles.size());
    for (const auto& ob : env.obstacles) collapsed.push_back(collapse_to_param(ob.poly, pt.x, pt.y));
    long hits = 0;
    for (int i = 0; i < n; ++i) {
        for (size_t k = 0; k < env.obstacles.size(); ++k) {
            const double w = env.obstacles[k].dist.sample(rng);
            if (collapsed[k](w) >= 0.0) {
                ++hits;
                // Remaining obstacles must still consume their draws so the
                // stream stays aligned across hit/miss outcomes.
                for (size_t j = k + 1; j < env.obstacles.size(); ++j)
                    env.obstacles[j].dist.sample(rng);
                break;
            }
        }
    }
    return static_cast<double>(hits) / n;
}

namespace {

void draw_segment(MapImage& img, const Bounds& b, const Point& u, const Point& v) {
    const double dx = b.width() / img.width;
    const double dy = b.height() / img.height;
    const int steps = 2 * std::max(img.width, img.height);
    for (int i = 0; i <= steps; ++i) {
        const double t = static_cast<double>(i) / steps;
        const double x = u.x + t * (v.x - u.x);
        const double y = u.y + t * (v.y - u.y);
        int c = static_cast<int>((x - b.xmin) / dx);
        int r = static_cast<int>((b.ymax - y) / dy);
        if (c < 0 || c >= img.width || r < 0 || r >= img.height) continue;
        img.set(r, c, kPathColor);
    }
}

}  // namespace

MapImage render_overlay(const Environment& env, double delta,
                        const std::vector<Point>& waypoints, int width, int height) {
    MapImage img = rasterize(build_constraints(env, delta), width, height);
    for (size_t i = 0; i + 1 < waypoints.size(); ++i)
        draw_segment(img, env.bounds, waypoints[i], waypoints[i + 1]);
    if (waypoints.size() == 1) draw_segment(img, env.bounds, waypoints[0], waypoints[0]);
    return img;
}

}  // namespace riskplan
