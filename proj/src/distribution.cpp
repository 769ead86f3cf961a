#include "riskplan/distribution.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace riskplan {

ParamDistribution ParamDistribution::uniform(double a, double b) {
    if (!(a < b)) throw std::invalid_argument("uniform distribution requires a < b");
    return ParamDistribution(UniformDist{a, b});
}

ParamDistribution ParamDistribution::gaussian(double mu, double var) {
    if (!(var > 0.0)) throw std::invalid_argument("gaussian distribution requires var > 0");
    return ParamDistribution(GaussianDist{mu, var});
}

ParamDistribution ParamDistribution::beta(double alpha, double beta) {
    if (!(alpha > 0.0) || !(beta > 0.0))
        throw std::invalid_argument("beta distribution requires alpha > 0 and beta > 0");
    return ParamDistribution(BetaDist{alpha, beta});
}

namespace {

double uniform_moment(const UniformDist& d, int n) {
    // (b^{n+1} - a^{n+1}) / ((n+1)(b-a))
    double pa = 1.0, pb = 1.0;
    for (int i = 0; i <= n; ++i) {
        pa *= d.a;
        pb *= d.b;
    }
    return (pb - pa) / ((n + 1) * (d.b - d.a));
}

double gaussian_moment(const GaussianDist& d, int n) {
    // Central moments: E[(X-mu)^k] = var^{k/2} (k-1)!! for even k, 0 for odd,
    // then a binomial shift for the mean.
    std::vector<double> central(n + 1, 0.0);
    central[0] = 1.0;
    for (int k = 2; k <= n; k += 2) central[k] = central[k - 2] * d.var * (k - 1);
    if (d.mu == 0.0) return central[n];
    double acc = 0.0;
    double binom = 1.0;  // C(n, k)
    double mu_pow = std::pow(d.mu, n);
    for (int k = 0; k <= n; ++k) {
        acc += binom * mu_pow * central[k];
        binom = binom * (n - k) / (k + 1);
        mu_pow = (d.mu != 0.0) ? mu_pow / d.mu : 0.0;
    }
    return acc;
}

double beta_moment(const BetaDist& d, int n) {
    double acc = 1.0;
    for (int k = 0; k < n; ++k) acc *= (d.alpha + k) / (d.alpha + d.beta + k);
    return acc;
}

}  // namespace

double ParamDistribution::raw_moment(int n) const {
    if (n < 0) throw std::invalid_argument("raw_moment requires n >= 0");
    if (n == 0) return 1.0;
    return std::visit(
        [n](const auto& d) -> double {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, UniformDist>) return uniform_moment(d, n);
            if constexpr (std::is_same_v<T, GaussianDist>) return gaussian_moment(d, n);
            if constexpr (std::is_same_v<T, BetaDist>) return beta_moment(d, n);
        },
        law_);
}

double ParamDistribution::sample(Rng& rng) const {
    return std::visit(
        [&rng](const auto& d) -> double {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, UniformDist>) {
                return std::uniform_real_distribution<double>(d.a, d.b)(rng);
            }
            if constexpr (std::is_same_v<T, GaussianDist>) {
                return std::normal_distribution<double>(d.mu, std::sqrt(d.var))(rng);
            }
            if constexpr (std::is_same_v<T, BetaDist>) {
                // two-Gamma construction: X = G_a / (G_a + G_b)
                std::gamma_distribution<double> ga(d.alpha, 1.0), gb(d.beta, 1.0);
                const double x = ga(rng);
                const double y = gb(rng);
                return x / (x + y);
            }
        },
        law_);
}

double ParamDistribution::support_min() const {
    return std::visit(
        [](const auto& d) -> double {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, UniformDist>) return d.a;
            if constexpr (std::is_same_v<T, GaussianDist>)
                return -std::numeric_limits<double>::infinity();
            if constexpr (std::is_same_v<T, BetaDist>) return 0.0;
        },
        law_);
}

double ParamDistribution::support_max() const {
    return std::visit(
        [](const auto& d) -> double {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, UniformDist>) return d.b;
            if constexpr (std::is_same_v<T, GaussianDist>)
                return std::numeric_limits<double>::infinity();
            if constexpr (std::is_same_v<T, BetaDist>) return 1.0;
        },
        law_);
}

std::string ParamDistribution::describe() const {
    std::ostringstream os;
    std::visit(
        [&os](const auto& d) {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, UniformDist>) os << "uniform(" << d.a << ", " << d.b << ")";
            if constexpr (std::is_same_v<T, GaussianDist>) os << "gaussian(" << d.mu << ", " << d.var << ")";
            if constexpr (std::is_same_v<T, BetaDist>) os << "beta(" << d.alpha << ", " << d.beta << ")";
        },
        law_);
    return os.str();
}

PlanePoly expect_poly(const TriPoly& p, const ParamDistribution& d) {
    std::vector<PlanePoly::Term> out;
    out.reserve(p.terms().size());
    for (const auto& t : p.terms()) {
        Monomial<2> m;
        m.e = {t.m.e[0], t.m.e[1]};
        out.push_back({m, t.c * d.raw_moment(t.m.e[2])});
    }
    return PlanePoly(std::move(out));
}

PlanePoly expect_square(const TriPoly& p, const ParamDistribution& d) {
    return expect_poly(p * p, d);
}

}  // namespace riskplan
