// Probability laws of obstacle parameters and the moment substitution that
// turns a probabilistic obstacle polynomial P(x, y, w) into the deterministic
// plane polynomials E[P] and E[P^2].
#pragma once

#include <string>
#include <variant>

#include "riskplan/poly.hpp"
#include "riskplan/rng.hpp"

namespace riskplan {

struct UniformDist {
    double a = 0.0;
    double b = 1.0;
};

struct GaussianDist {
    double mu = 0.0;
    double var = 1.0;
};

struct BetaDist {
    double alpha = 1.0;
    double beta = 1.0;
};

class ParamDistribution {
public:
    ParamDistribution() : law_(GaussianDist{}) {}

    static ParamDistribution uniform(double a, double b);
    static ParamDistribution gaussian(double mu, double var);
    static ParamDistribution beta(double alpha, double beta);

    // E[w^n] in closed form.
    double raw_moment(int n) const;

    double sample(Rng& rng) const;

    // Support bounds used for sanity checks (Gaussian returns +-inf).
    double support_min() const;
    double support_max() const;

    const std::variant<UniformDist, GaussianDist, BetaDist>& law() const { return law_; }
    std::string describe() const;

private:
    explicit ParamDistribution(std::variant<UniformDist, GaussianDist, BetaDist> law)
        : law_(std::move(law)) {}

    std::variant<UniformDist, GaussianDist, BetaDist> law_;
};

// An obstacle {P(x, w) >= 0} with a scalar uncertain parameter w.
struct UncertainObstacle {
    TriPoly poly;
    ParamDistribution dist;
    std::string name;
};

// Substitutes raw moments for powers of w termwise: c x^i y^j w^k maps to
// c E[w^k] x^i y^j.
PlanePoly expect_poly(const TriPoly& p, const ParamDistribution& d);

// E[P^2] via expect_poly(p * p).
PlanePoly expect_square(const TriPoly& p, const ParamDistribution& d);

inline double sample_param(const ParamDistribution& d, Rng& rng) { return d.sample(rng); }
inline double raw_moment(const ParamDistribution& d, int n) { return d.raw_moment(n); }

}  // namespace riskplan
