#include "riskplan/poly.hpp"

#include <gmpxx.h>

#include <algorithm>
#include <cmath>

namespace riskplan {

namespace {

// Relative tolerance for treating an endpoint value as a root to deflate.
constexpr double kDeflateTol = 1e-10;

std::vector<double> trimmed(std::vector<double> c) {
    double scale = 0.0;
    for (double v : c) scale = std::max(scale, std::abs(v));
    if (scale == 0.0) return {};
    while (!c.empty() && std::abs(c.back()) <= kDeadCoeff * scale) c.pop_back();
    return c;
}

std::vector<double> derivative_coeffs(const std::vector<double>& c) {
    std::vector<double> d;
    for (size_t i = 1; i < c.size(); ++i) d.push_back(c[i] * static_cast<double>(i));
    return d;
}

// --- exact Sturm machinery -------------------------------------------------
//
// Doubles are dyadic rationals, so the input polynomial converts losslessly
// to integer coefficients times a positive power of two. The remainder chain
// is then computed in exact integer arithmetic with positive pseudo-division
// multipliers, which keeps every sign in the chain exact: root counting has
// no tuning thresholds at all. The chain stops at gcd(p, p'), so the sign
// variation difference counts distinct roots without an explicit square-free
// division.

using ZPoly = std::vector<mpz_class>;

int zdeg(const ZPoly& p) { return static_cast<int>(p.size()) - 1; }

void ztrim(ZPoly& p) {
    while (!p.empty() && p.back() == 0) p.pop_back();
}

// Divides out the gcd of the coefficients (keeps bit growth linear).
void remove_content(ZPoly& p) {
    if (p.empty()) return;
    mpz_class g = 0;
    for (const auto& c : p) mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), c.get_mpz_t());
    if (g > 1)
        for (auto& c : p) mpz_divexact(c.get_mpz_t(), c.get_mpz_t(), g.get_mpz_t());
}

// Exact conversion: scales all coefficients by a common power of two.
ZPoly to_integer_poly(const std::vector<double>& c) {
    long max_den_exp = 0;
    for (double v : c) {
        const mpq_class q(v);
        const long bits = mpz_sizeinbase(q.get_den().get_mpz_t(), 2) - 1;
        max_den_exp = std::max(max_den_exp, bits);
    }
    ZPoly out(c.size());
    mpz_class scale = 1;
    scale <<= max_den_exp;
    for (size_t i = 0; i < c.size(); ++i) {
        const mpq_class q(c[i]);
        mpz_class num = q.get_num();
        mpz_class den = q.get_den();
        out[i] = num * (scale / den);
    }
    ztrim(out);
    return out;
}

// Pseudo-remainder scaled by a positive factor, so sign(R) == sign(rem(A, B)).
ZPoly positive_prem(ZPoly a, const ZPoly& b) {
    const mpz_class& lead = b.back();
    int lead_muls = 0;
    while (zdeg(a) >= zdeg(b)) {
        const int shift = zdeg(a) - zdeg(b);
        const mpz_class top = a.back();
        for (auto& c : a) c *= lead;
        ++lead_muls;
        for (int i = 0; i <= zdeg(b); ++i) a[i + shift] -= top * b[i];
        ztrim(a);
        if (a.empty()) break;
    }
    if (lead < 0 && (lead_muls % 2) != 0)
        for (auto& c : a) c = -c;
    return a;
}

int zsign_at(const ZPoly& p, const mpq_class& x) {
    // sign of sum c_i num^i den^(d-i)
    const mpz_class& num = x.get_num();
    const mpz_class& den = x.get_den();
    mpz_class acc = 0, num_pow = 1;
    std::vector<mpz_class> den_pow(p.size());
    if (!p.empty()) {
        den_pow[p.size() - 1] = 1;
        for (size_t i = p.size() - 1; i-- > 0;) den_pow[i] = den_pow[i + 1] * den;
    }
    for (size_t i = 0; i < p.size(); ++i) {
        acc += p[i] * num_pow * den_pow[i];
        num_pow *= num;
    }
    return sgn(acc);
}

int sign_variations(const std::vector<ZPoly>& chain, const mpq_class& x) {
    int variations = 0;
    int prev = 0;
    for (const auto& p : chain) {
        const int s = zsign_at(p, x);
        if (s == 0) continue;
        if (prev != 0 && s != prev) ++variations;
        prev = s;
    }
    return variations;
}

// Synthetic division by (t - root); the (tiny) remainder is discarded.
std::vector<double> deflate_root(const std::vector<double>& c, double root) {
    const int d = static_cast<int>(c.size()) - 1;
    if (d < 1) return {};
    std::vector<double> q(d, 0.0);
    double carry = c[d];
    for (int i = d - 1; i >= 0; --i) {
        q[i] = carry;
        carry = c[i] + root * carry;
    }
    return trimmed(std::move(q));
}

}  // namespace

TriPoly make_tri(std::initializer_list<std::array<double, 4>> terms) {
    std::vector<TriPoly::Term> out;
    for (const auto& t : terms) {
        Monomial<3> m;
        m.e = {static_cast<int>(t[0]), static_cast<int>(t[1]), static_cast<int>(t[2])};
        out.push_back({m, t[3]});
    }
    return TriPoly(std::move(out));
}

PlanePoly make_plane(std::initializer_list<std::array<double, 3>> terms) {
    std::vector<PlanePoly::Term> out;
    for (const auto& t : terms) {
        Monomial<2> m;
        m.e = {static_cast<int>(t[0]), static_cast<int>(t[1])};
        out.push_back({m, t[2]});
    }
    return PlanePoly(std::move(out));
}

double poly_eval(const PlanePoly& p, const Point& pt) {
    const int dx = p.max_exponent(0);
    const int dy = p.max_exponent(1);
    std::vector<double> px(dx + 1, 1.0), py(dy + 1, 1.0);
    for (int i = 1; i <= dx; ++i) px[i] = px[i - 1] * pt.x;
    for (int i = 1; i <= dy; ++i) py[i] = py[i - 1] * pt.y;
    double acc = 0.0;
    for (const auto& t : p.terms()) acc += t.c * px[t.m.e[0]] * py[t.m.e[1]];
    return acc;
}

double poly_eval(const TriPoly& p, double x, double y, double w) {
    const int dx = p.max_exponent(0), dy = p.max_exponent(1), dw = p.max_exponent(2);
    std::vector<double> px(dx + 1, 1.0), py(dy + 1, 1.0), pw(dw + 1, 1.0);
    for (int i = 1; i <= dx; ++i) px[i] = px[i - 1] * x;
    for (int i = 1; i <= dy; ++i) py[i] = py[i - 1] * y;
    for (int i = 1; i <= dw; ++i) pw[i] = pw[i - 1] * w;
    double acc = 0.0;
    for (const auto& t : p.terms()) acc += t.c * px[t.m.e[0]] * py[t.m.e[1]] * pw[t.m.e[2]];
    return acc;
}

LinePoly::LinePoly(std::vector<double> coeffs) : coeffs_(trimmed(std::move(coeffs))) {}

double LinePoly::operator()(double t) const {
    double v = 0.0;
    for (size_t i = coeffs_.size(); i-- > 0;) v = v * t + coeffs_[i];
    return v;
}

LinePoly LinePoly::derivative() const { return LinePoly(derivative_coeffs(coeffs_)); }

double LinePoly::max_abs_coeff() const {
    double m = 0.0;
    for (double v : coeffs_) m = std::max(m, std::abs(v));
    return m;
}

LinePoly operator+(const LinePoly& a, const LinePoly& b) {
    std::vector<double> c(std::max(a.coeffs_.size(), b.coeffs_.size()), 0.0);
    for (size_t i = 0; i < a.coeffs_.size(); ++i) c[i] += a.coeffs_[i];
    for (size_t i = 0; i < b.coeffs_.size(); ++i) c[i] += b.coeffs_[i];
    return LinePoly(std::move(c));
}

LinePoly operator-(const LinePoly& a, const LinePoly& b) {
    std::vector<double> c(std::max(a.coeffs_.size(), b.coeffs_.size()), 0.0);
    for (size_t i = 0; i < a.coeffs_.size(); ++i) c[i] += a.coeffs_[i];
    for (size_t i = 0; i < b.coeffs_.size(); ++i) c[i] -= b.coeffs_[i];
    return LinePoly(std::move(c));
}

LinePoly operator*(double s, const LinePoly& p) {
    std::vector<double> c = p.coeffs_;
    for (double& v : c) v *= s;
    return LinePoly(std::move(c));
}

LinePoly restrict_to_line(const PlanePoly& p, const Point& u, const Point& v) {
    const double dx = v.x - u.x, dy = v.y - u.y;
    const int mx = p.max_exponent(0), my = p.max_exponent(1);

    // powers of (u.x + dx t) and (u.y + dy t) by repeated convolution
    std::vector<std::vector<double>> powx(mx + 1), powy(my + 1);
    powx[0] = {1.0};
    for (int i = 1; i <= mx; ++i) {
        const auto& prev = powx[i - 1];
        std::vector<double> next(prev.size() + 1, 0.0);
        for (size_t k = 0; k < prev.size(); ++k) {
            next[k] += prev[k] * u.x;
            next[k + 1] += prev[k] * dx;
        }
        powx[i] = std::move(next);
    }
    powy[0] = {1.0};
    for (int j = 1; j <= my; ++j) {
        const auto& prev = powy[j - 1];
        std::vector<double> next(prev.size() + 1, 0.0);
        for (size_t k = 0; k < prev.size(); ++k) {
            next[k] += prev[k] * u.y;
            next[k + 1] += prev[k] * dy;
        }
        powy[j] = std::move(next);
    }

    std::vector<double> acc(p.total_degree() + 1, 0.0);
    for (const auto& t : p.terms()) {
        const auto& a = powx[t.m.e[0]];
        const auto& b = powy[t.m.e[1]];
        for (size_t i = 0; i < a.size(); ++i)
            for (size_t j = 0; j < b.size(); ++j)
                acc[i + j] += t.c * a[i] * b[j];
    }
    return LinePoly(std::move(acc));
}

LinePoly collapse_to_param(const TriPoly& p, double x, double y) {
    const int dx = p.max_exponent(0), dy = p.max_exponent(1), dw = p.max_exponent(2);
    std::vector<double> px(dx + 1, 1.0), py(dy + 1, 1.0);
    for (int i = 1; i <= dx; ++i) px[i] = px[i - 1] * x;
    for (int i = 1; i <= dy; ++i) py[i] = py[i - 1] * y;
    std::vector<double> c(dw + 1, 0.0);
    for (const auto& t : p.terms()) c[t.m.e[2]] += t.c * px[t.m.e[0]] * py[t.m.e[1]];
    return LinePoly(std::move(c));
}

int sturm_count_roots(const LinePoly& p, double a, double b) {
    if (p.is_zero()) throw std::invalid_argument("degenerate polynomial");
    if (!(a < b)) throw std::invalid_argument("sturm_count_roots: requires a < b");
    if (p.degree() < 1) return 0;

    std::vector<ZPoly> chain;
    chain.push_back(to_integer_poly(p.coeffs()));
    {
        ZPoly d(chain[0].size() - 1);
        for (size_t i = 1; i < chain[0].size(); ++i) d[i - 1] = chain[0][i] * static_cast<long>(i);
        ztrim(d);
        chain.push_back(std::move(d));
    }
    while (zdeg(chain.back()) >= 1) {
        ZPoly r = positive_prem(chain[chain.size() - 2], chain.back());
        if (r.empty()) break;
        for (auto& c : r) c = -c;
        remove_content(r);
        chain.push_back(std::move(r));
    }

    return sign_variations(chain, mpq_class(a)) - sign_variations(chain, mpq_class(b));
}

bool nonneg_on_unit_interval(const LinePoly& p, double eps) {
    if (p.is_zero()) return true;
    if (p(0.0) < -eps || p(1.0) < -eps || p(0.5) < -eps) return false;
    if (p.degree() == 0) return true;

    // Deflate roots sitting at t = 0 or t = 1 before the interior count; the
    // endpoint values already passed the -eps gate, so a touch there is
    // acceptable (the constraints allow equality).
    std::vector<double> s = p.coeffs();
    {
        double m = 0.0;
        for (double v : s) m = std::max(m, std::abs(v));
        if (m > 0.0)
            for (double& v : s) v /= m;
    }
    const int max_rounds = p.degree();
    for (int round = 0; round < max_rounds && static_cast<int>(s.size()) - 1 >= 1; ++round) {
        double scale = 0.0;
        for (double v : s) scale = std::max(scale, std::abs(v));
        if (std::abs(s[0]) <= kDeflateTol * scale) {
            s.erase(s.begin());  // divide by t
            s = trimmed(std::move(s));
            continue;
        }
        double v1 = 0.0;
        for (double c : s) v1 += c;
        if (std::abs(v1) <= kDeflateTol * scale) {
            s = deflate_root(s, 1.0);
            continue;
        }
        break;
    }

    if (static_cast<int>(s.size()) - 1 < 1) return true;
    return sturm_count_roots(LinePoly(s), 0.0, 1.0) == 0;
}

}  // namespace riskplan
