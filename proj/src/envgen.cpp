#include "riskplan/envgen.hpp"

#include <cmath>

namespace riskplan {

Environment circle_env() {
    Environment env;
    env.bounds = {-1.0, 1.0, -1.0, 1.0};
    env.obstacles.push_back({make_tri({{0, 0, 2, 1.0}, {2, 0, 0, -1.0}, {0, 2, 0, -1.0}}),
                             ParamDistribution::uniform(0.3, 0.4), "circle"});
    return env;
}

Environment ellipse_env() {
    Environment env;
    env.bounds = {-2.0, 2.0, -2.0, 2.0};
    env.obstacles.push_back({make_tri({{0, 0, 2, 1.0}, {2, 0, 0, -0.5}, {0, 2, 0, -1.0}}),
                             ParamDistribution::gaussian(0.0, 1.0), "ellipse"});
    return env;
}

Environment heart_env() {
    Environment env;
    env.bounds = {-2.0, 2.0, -2.0, 2.0};
    env.obstacles.push_back({make_tri({{5, 0, 0, -0.35},
                                       {4, 1, 0, -1.0},
                                       {4, 0, 0, -0.5},
                                       {3, 2, 0, 0.2},
                                       {3, 1, 0, -0.5},
                                       {3, 0, 0, 0.31},
                                       {2, 3, 0, -0.5},
                                       {2, 2, 0, 0.2},
                                       {2, 1, 0, 1.7},
                                       {2, 0, 0, 0.26},
                                       {1, 4, 0, 0.7},
                                       {1, 3, 0, -0.1},
                                       {1, 2, 0, -1.5},
                                       {1, 1, 0, -0.1},
                                       {1, 0, 0, 0.1},
                                       {0, 5, 0, 0.02},
                                       {0, 4, 0, -0.1},
                                       {0, 3, 0, -0.04},
                                       {0, 2, 0, -0.1},
                                       {0, 1, 0, 0.28},
                                       {0, 0, 0, 0.89},
                                       {0, 0, 1, -0.7}}),
                             ParamDistribution::beta(9.0, 0.5), "heart"});
    return env;
}

Environment ring_env() {
    Environment env;
    env.bounds = {-2.0, 2.0, -2.0, 2.0};
    // w^2 - (x^2 + y^2 - 1)^2: realized obstacle is the annulus
    // |x^2 + y^2 - 1| <= w.
    env.obstacles.push_back({make_tri({{0, 0, 2, 1.0},
                                       {4, 0, 0, -1.0},
                                       {0, 4, 0, -1.0},
                                       {2, 2, 0, -2.0},
                                       {2, 0, 0, 2.0},
                                       {0, 2, 0, 2.0},
                                       {0, 0, 0, -1.0}}),
                             ParamDistribution::uniform(0.3, 0.4), "ring"});
    return env;
}

TriPoly place_shape(const TriPoly& unit_shape, double cx, double cy, double rot, double scale) {
    const double c = std::cos(rot), s = std::sin(rot);
    // local coordinates as affine plane polynomials of world (x, y)
    const TriPoly lx = make_tri({{1, 0, 0, c / scale},
                                 {0, 1, 0, s / scale},
                                 {0, 0, 0, -(c * cx + s * cy) / scale}});
    const TriPoly ly = make_tri({{1, 0, 0, -s / scale},
                                 {0, 1, 0, c / scale},
                                 {0, 0, 0, (s * cx - c * cy) / scale}});
    const int dx = unit_shape.max_exponent(0), dy = unit_shape.max_exponent(1);
    std::vector<TriPoly> px(dx + 1), py(dy + 1);
    px[0] = TriPoly::constant(1.0);
    for (int i = 1; i <= dx; ++i) px[i] = px[i - 1] * lx;
    py[0] = TriPoly::constant(1.0);
    for (int j = 1; j <= dy; ++j) py[j] = py[j - 1] * ly;

    TriPoly out;
    for (const auto& t : unit_shape.terms()) {
        Monomial<3> wm;
        wm.e = {0, 0, t.m.e[2]};
        out = out + (t.c * (px[t.m.e[0]] * py[t.m.e[1]] * TriPoly::monomial(wm, 1.0)));
    }
    return out;
}

Environment cluttered_env(std::uint64_t seed) {
    Environment env;
    env.bounds = {-5.0, 5.0, -5.0, 5.0};
    Rng rng = make_rng(derive_seed(seed, 0xC1C1));

    const TriPoly circle = make_tri({{0, 0, 2, 1.0}, {2, 0, 0, -1.0}, {0, 2, 0, -1.0}});
    const TriPoly ellipse = make_tri({{0, 0, 2, 1.0}, {2, 0, 0, -0.5}, {0, 2, 0, -1.0}});
    // Cassini oval (t = 0.55 focus offset): w^4 - ((x-t)^2+y^2)((x+t)^2+y^2);
    // nonconvex (peanut/calabash) for realized w^4 slightly above t^4.
    const double f = 0.55;
    const TriPoly shifted1 = make_tri({{2, 0, 0, 1.0}, {1, 0, 0, -2.0 * f}, {0, 0, 0, f * f}, {0, 2, 0, 1.0}});
    const TriPoly shifted2 = make_tri({{2, 0, 0, 1.0}, {1, 0, 0, 2.0 * f}, {0, 0, 0, f * f}, {0, 2, 0, 1.0}});
    Monomial<3> w4m;
    w4m.e = {0, 0, 4};
    const TriPoly calabash = TriPoly::monomial(w4m, 1.0) - (shifted1 * shifted2);

    struct Spec {
        const TriPoly* shape;
        const char* base;
        double scale_lo, scale_hi;
        int dist_kind;  // 0 uniform, 1 gaussian (scaled), 2 beta
    };
    const Spec specs[] = {
        {&circle, "circle", 0.9, 1.3, 0},   {&circle, "circle", 0.9, 1.3, 0},
        {&circle, "circle", 0.9, 1.3, 2},   {&ellipse, "ellipse", 0.8, 1.2, 1},
        {&ellipse, "ellipse", 0.8, 1.2, 1}, {&calabash, "calabash", 1.1, 1.5, 0},
        {&calabash, "calabash", 1.1, 1.5, 0},
    };

    int idx = 0;
    for (const Spec& sp : specs) {
        const double cx = uniform_double(rng, -3.4, 3.4);
        const double cy = uniform_double(rng, -3.4, 3.4);
        const double rot = uniform_double(rng, 0.0, 3.14159265358979);
        const double scale = uniform_double(rng, sp.scale_lo, sp.scale_hi);
        ParamDistribution dist = ParamDistribution::uniform(0.55, 0.75);
        if (sp.dist_kind == 1) dist = ParamDistribution::gaussian(0.0, 0.5);
        if (sp.dist_kind == 2) dist = ParamDistribution::beta(9.0, 0.5);
        env.obstacles.push_back({place_shape(*sp.shape, cx, cy, rot, scale), dist,
                                 std::string(sp.base) + "_" + std::to_string(idx)});
        ++idx;
    }
    return env;
}

}  // namespace riskplan
