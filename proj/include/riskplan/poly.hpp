// Sparse multivariate polynomials over (x, y, w) / (x, y), dense univariate
// polynomials in an edge parameter t, and the real-root machinery (Sturm
// sequences) used to certify nonnegativity of constraint restrictions on
// straight-line segments.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace riskplan {

// Coefficients with |c| <= kDeadCoeff * max|c| are dropped on canonicalization.
inline constexpr double kDeadCoeff = 1e-12;

// Default slack for edge-restriction nonnegativity checks; absorbs the
// round-off of composing a polynomial with a line parameterization.
inline constexpr double kEdgeEps = 1e-9;

template <int N>
struct Monomial {
    std::array<int, N> e{};

    friend bool operator==(const Monomial&, const Monomial&) = default;
    friend auto operator<=>(const Monomial&, const Monomial&) = default;
};

// Sparse polynomial in N variables, kept canonical: terms sorted by monomial,
// no duplicate monomials, no dead coefficients. Immutable in practice; all
// operations return new values.
template <int N>
class MonomialPoly {
public:
    struct Term {
        Monomial<N> m;
        double c = 0.0;
    };

    MonomialPoly() = default;

    explicit MonomialPoly(std::vector<Term> terms) : terms_(std::move(terms)) {
        canonicalize();
    }

    static MonomialPoly constant(double c) {
        return MonomialPoly({Term{Monomial<N>{}, c}});
    }

    static MonomialPoly monomial(const Monomial<N>& m, double c) {
        return MonomialPoly({Term{m, c}});
    }

    const std::vector<Term>& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }

    double max_abs_coeff() const {
        double m = 0.0;
        for (const Term& t : terms_) m = std::max(m, std::abs(t.c));
        return m;
    }

    int total_degree() const {
        int d = 0;
        for (const Term& t : terms_) {
            int td = 0;
            for (int k = 0; k < N; ++k) td += t.m.e[k];
            d = std::max(d, td);
        }
        return d;
    }

    int max_exponent(int var) const {
        int d = 0;
        for (const Term& t : terms_) d = std::max(d, t.m.e[var]);
        return d;
    }

    // Coefficient of a monomial (0 if absent).
    double coeff(const Monomial<N>& m) const {
        for (const Term& t : terms_)
            if (t.m == m) return t.c;
        return 0.0;
    }

    friend MonomialPoly operator+(const MonomialPoly& a, const MonomialPoly& b) {
        std::vector<Term> out = a.terms_;
        out.insert(out.end(), b.terms_.begin(), b.terms_.end());
        return MonomialPoly(std::move(out));
    }

    friend MonomialPoly operator-(const MonomialPoly& a, const MonomialPoly& b) {
        std::vector<Term> out = a.terms_;
        out.reserve(out.size() + b.terms_.size());
        for (const Term& t : b.terms_) out.push_back(Term{t.m, -t.c});
        return MonomialPoly(std::move(out));
    }

    friend MonomialPoly operator*(const MonomialPoly& a, const MonomialPoly& b) {
        std::vector<Term> out;
        out.reserve(a.terms_.size() * b.terms_.size());
        for (const Term& ta : a.terms_) {
            for (const Term& tb : b.terms_) {
                Monomial<N> m;
                for (int k = 0; k < N; ++k) m.e[k] = ta.m.e[k] + tb.m.e[k];
                out.push_back(Term{m, ta.c * tb.c});
            }
        }
        return MonomialPoly(std::move(out));
    }

    friend MonomialPoly operator*(double s, const MonomialPoly& p) {
        std::vector<Term> out = p.terms_;
        for (Term& t : out) t.c *= s;
        return MonomialPoly(std::move(out));
    }

    friend bool operator==(const MonomialPoly& a, const MonomialPoly& b) {
        if (a.terms_.size() != b.terms_.size()) return false;
        for (size_t i = 0; i < a.terms_.size(); ++i)
            if (a.terms_[i].m != b.terms_[i].m || a.terms_[i].c != b.terms_[i].c)
                return false;
        return true;
    }

private:
    std::vector<Term> terms_;

    void canonicalize() {
        std::sort(terms_.begin(), terms_.end(),
                  [](const Term& a, const Term& b) { return a.m < b.m; });
        std::vector<Term> merged;
        merged.reserve(terms_.size());
        for (const Term& t : terms_) {
            if (!merged.empty() && merged.back().m == t.m)
                merged.back().c += t.c;
            else
                merged.push_back(t);
        }
        double scale = 0.0;
        for (const Term& t : merged) scale = std::max(scale, std::abs(t.c));
        std::vector<Term> kept;
        kept.reserve(merged.size());
        for (const Term& t : merged)
            if (std::abs(t.c) > kDeadCoeff * scale) kept.push_back(t);
        terms_ = std::move(kept);
    }
};

using TriPoly = MonomialPoly<3>;    // variables: x, y, w
using PlanePoly = MonomialPoly<2>;  // variables: x, y

struct Point {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point&, const Point&) = default;
};

inline double distance(const Point& a, const Point& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

// Convenience builders used throughout tests and environment construction.
TriPoly make_tri(std::initializer_list<std::array<double, 4>> terms);   // {ex, ey, ew, c}
PlanePoly make_plane(std::initializer_list<std::array<double, 3>> terms);  // {ex, ey, c}

double poly_eval(const PlanePoly& p, const Point& pt);
double poly_eval(const TriPoly& p, double x, double y, double w);

// Dense univariate polynomial in t, coefficients ascending. Leading
// coefficient is nonzero unless the polynomial is identically zero.
class LinePoly {
public:
    LinePoly() = default;
    explicit LinePoly(std::vector<double> coeffs);

    static LinePoly constant(double c) { return LinePoly({c}); }

    const std::vector<double>& coeffs() const { return coeffs_; }
    bool is_zero() const { return coeffs_.empty(); }
    int degree() const { return static_cast<int>(coeffs_.size()) - 1; }

    double operator()(double t) const;
    LinePoly derivative() const;

    double max_abs_coeff() const;

    friend LinePoly operator+(const LinePoly& a, const LinePoly& b);
    friend LinePoly operator-(const LinePoly& a, const LinePoly& b);
    friend LinePoly operator*(double s, const LinePoly& p);

private:
    std::vector<double> coeffs_;
};

// Restriction of p to the segment x(t) = u + t (v - u), t in [0, 1].
LinePoly restrict_to_line(const PlanePoly& p, const Point& u, const Point& v);

// Collapse a TriPoly at a fixed (x, y) into a univariate polynomial in w.
// Used by the Monte Carlo oracles: P(pt, w) becomes a cheap Horner evaluation
// per parameter draw.
LinePoly collapse_to_param(const TriPoly& p, double x, double y);

// Number of distinct real roots of the square-free part of p in (a, b],
// counted via Sturm sign variations. Throws std::invalid_argument for an
// identically zero polynomial or a >= b.
int sturm_count_roots(const LinePoly& p, double a, double b);

// Certifies p(t) >= -eps on [0, 1]: endpoint and midpoint values must clear
// -eps and the square-free part must have no roots strictly inside (0, 1)
// after deflating roots that sit at the endpoints. Any interior root --
// including an even-multiplicity touch -- rejects.
bool nonneg_on_unit_interval(const LinePoly& p, double eps = kEdgeEps);

}  // namespace riskplan
