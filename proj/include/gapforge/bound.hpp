#ifndef GAPFORGE_BOUND_HPP
#define GAPFORGE_BOUND_HPP

// Closed interval [lo, hi] of doubles with outward rounding.
//
// The four basic operations round each endpoint in the safe direction using
// error-free transformations (TwoSum, FMA residuals), so no global rounding
// mode is touched. Elementary functions go through MPFR at 53 bits, which
// rounds correctly in the requested direction.

#include "arith.hpp"

#include <mpfr.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

namespace gapforge {

namespace rnd {

inline double down(double v) { return std::nextafter(v, -std::numeric_limits<double>::infinity()); }
inline double up(double v) { return std::nextafter(v, std::numeric_limits<double>::infinity()); }

// a + b rounded toward -inf / +inf
inline double add_down(double a, double b)
{
    const double s = a + b;
    if (!std::isfinite(s))
        return s;
    const double bb = s - a;
    const double err = (a - (s - bb)) + (b - bb);
    return err < 0 ? down(s) : s;
}

inline double add_up(double a, double b)
{
    const double s = a + b;
    if (!std::isfinite(s))
        return s;
    const double bb = s - a;
    const double err = (a - (s - bb)) + (b - bb);
    return err > 0 ? up(s) : s;
}

inline constexpr double tiny = 1e-290; // below this FMA residuals may be inexact

inline double mul_down(double a, double b)
{
    const double p = a * b;
    if (!std::isfinite(p))
        return p;
    if (a == 0 || b == 0)
        return 0.0;
    if (std::fabs(p) < tiny)
        return down(p);
    const double err = std::fma(a, b, -p);
    return err < 0 ? down(p) : p;
}

inline double mul_up(double a, double b)
{
    const double p = a * b;
    if (!std::isfinite(p))
        return p;
    if (a == 0 || b == 0)
        return 0.0;
    if (std::fabs(p) < tiny)
        return up(p);
    const double err = std::fma(a, b, -p);
    return err > 0 ? up(p) : p;
}

// a / b, b != 0
inline double div_down(double a, double b)
{
    const double q = a / b;
    if (!std::isfinite(q))
        return q;
    if (a == 0)
        return 0.0;
    if (std::fabs(q) < tiny)
        return down(q);
    // a - q*b has the sign of (exact - q) * sign(b)
    const double r = std::fma(-q, b, a);
    const bool q_too_big = (b > 0) ? (r < 0) : (r > 0);
    return q_too_big ? down(q) : q;
}

inline double div_up(double a, double b)
{
    const double q = a / b;
    if (!std::isfinite(q))
        return q;
    if (a == 0)
        return 0.0;
    if (std::fabs(q) < tiny)
        return up(q);
    const double r = std::fma(-q, b, a);
    const bool q_too_small = (b > 0) ? (r > 0) : (r < 0);
    return q_too_small ? up(q) : q;
}

inline double sqrt_down(double a)
{
    const double s = std::sqrt(a);
    const double r = std::fma(-s, s, a);
    return r < 0 ? down(s) : s;
}

inline double sqrt_up(double a)
{
    const double s = std::sqrt(a);
    const double r = std::fma(-s, s, a);
    return r > 0 ? up(s) : s;
}

// Unary MPFR function evaluated at a double, rounded in direction `dir`.
template <class F>
double mpfr_eval(F f, double x, mpfr_rnd_t dir)
{
    mpfr_t a, r;
    mpfr_init2(a, 53);
    mpfr_init2(r, 53);
    mpfr_set_d(a, x, MPFR_RNDN); // exact
    f(r, a, dir);
    const double out = mpfr_get_d(r, dir);
    mpfr_clear(a);
    mpfr_clear(r);
    return out;
}

} // namespace rnd

struct Bound {
    double lo = 0;
    double hi = 0;

    constexpr Bound() = default;
    // Only for values that are exact doubles (small integers, dyadic
    // fractions); decimal constants must go through of_decimal.
    constexpr Bound(double v) : lo(v), hi(v) {} // NOLINT(google-explicit-constructor)
    constexpr Bound(double l, double h) : lo(l), hi(h) {}

    // Tightest enclosure of an exact integer.
    static Bound of(const Natural& n)
    {
        mpfr_t t;
        mpfr_init2(t, 53);
        mpfr_set_z(t, n.get_mpz_t(), MPFR_RNDD);
        const double l = mpfr_get_d(t, MPFR_RNDD);
        mpfr_set_z(t, n.get_mpz_t(), MPFR_RNDU);
        const double h = mpfr_get_d(t, MPFR_RNDU);
        mpfr_clear(t);
        return {l, h};
    }

    // Enclosure of a decimal literal such as "1.97e-3".
    static Bound of_decimal(const std::string& s)
    {
        mpfr_t t;
        mpfr_init2(t, 53);
        if (mpfr_set_str(t, s.c_str(), 10, MPFR_RNDD) != 0) {
            mpfr_clear(t);
            throw domain_error("bad real literal: " + s);
        }
        const double l = mpfr_get_d(t, MPFR_RNDD);
        mpfr_set_str(t, s.c_str(), 10, MPFR_RNDU);
        const double h = mpfr_get_d(t, MPFR_RNDU);
        mpfr_clear(t);
        return {l, h};
    }

    double mid() const { return lo + (hi - lo) / 2; }
    double width() const { return hi - lo; }
    bool contains(double v) const { return lo <= v && v <= hi; }
    bool finite() const { return std::isfinite(lo) && std::isfinite(hi); }
    bool valid() const { return lo <= hi; }
};

inline Bound operator+(Bound a, Bound b) { return {rnd::add_down(a.lo, b.lo), rnd::add_up(a.hi, b.hi)}; }
inline Bound operator-(Bound a) { return {-a.hi, -a.lo}; }
inline Bound operator-(Bound a, Bound b) { return a + (-b); }

inline Bound operator*(Bound a, Bound b)
{
    const double l = std::min({rnd::mul_down(a.lo, b.lo), rnd::mul_down(a.lo, b.hi), rnd::mul_down(a.hi, b.lo),
                               rnd::mul_down(a.hi, b.hi)});
    const double h = std::max({rnd::mul_up(a.lo, b.lo), rnd::mul_up(a.lo, b.hi), rnd::mul_up(a.hi, b.lo),
                               rnd::mul_up(a.hi, b.hi)});
    return {l, h};
}

inline Bound operator/(Bound a, Bound b)
{
    if (b.lo <= 0 && b.hi >= 0)
        throw domain_error("Bound division by an interval containing zero");
    const double l = std::min({rnd::div_down(a.lo, b.lo), rnd::div_down(a.lo, b.hi), rnd::div_down(a.hi, b.lo),
                               rnd::div_down(a.hi, b.hi)});
    const double h = std::max({rnd::div_up(a.lo, b.lo), rnd::div_up(a.lo, b.hi), rnd::div_up(a.hi, b.lo),
                               rnd::div_up(a.hi, b.hi)});
    return {l, h};
}

inline Bound& operator+=(Bound& a, Bound b) { return a = a + b; }
inline Bound& operator-=(Bound& a, Bound b) { return a = a - b; }
inline Bound& operator*=(Bound& a, Bound b) { return a = a * b; }
inline Bound& operator/=(Bound& a, Bound b) { return a = a / b; }

inline Bound hull(Bound a, Bound b) { return {std::min(a.lo, b.lo), std::max(a.hi, b.hi)}; }

inline Bound sqrt(Bound a)
{
    if (a.lo < 0)
        throw domain_error("sqrt of negative Bound");
    return {rnd::sqrt_down(a.lo), rnd::sqrt_up(a.hi)};
}

inline Bound log(Bound a)
{
    if (a.lo <= 0)
        throw domain_error("log of non-positive Bound");
    return {rnd::mpfr_eval(mpfr_log, a.lo, MPFR_RNDD), rnd::mpfr_eval(mpfr_log, a.hi, MPFR_RNDU)};
}

// log(1 + a), a > -1
inline Bound log1p(Bound a)
{
    if (a.lo <= -1)
        throw domain_error("log1p argument <= -1");
    return {rnd::mpfr_eval(mpfr_log1p, a.lo, MPFR_RNDD), rnd::mpfr_eval(mpfr_log1p, a.hi, MPFR_RNDU)};
}

inline Bound exp(Bound a)
{
    return {rnd::mpfr_eval(mpfr_exp, a.lo, MPFR_RNDD), rnd::mpfr_eval(mpfr_exp, a.hi, MPFR_RNDU)};
}

// x^y for x > 0
inline Bound pow(Bound x, Bound y) { return exp(y * log(x)); }

inline Bound square(Bound a)
{
    if (a.lo >= 0)
        return a * a;
    if (a.hi <= 0)
        return (-a) * (-a);
    const double m = std::max(-a.lo, a.hi);
    return {0.0, rnd::mul_up(m, m)};
}

inline Bound min(Bound a, Bound b) { return {std::min(a.lo, b.lo), std::min(a.hi, b.hi)}; }
inline Bound max(Bound a, Bound b) { return {std::max(a.lo, b.lo), std::max(a.hi, b.hi)}; }

// Certainly-true comparisons: a < b holds for every pair of enclosed values.
inline bool certainly_lt(Bound a, Bound b) { return a.hi < b.lo; }
inline bool certainly_le(Bound a, Bound b) { return a.hi <= b.lo; }

namespace consts {

// e^gamma to 30 significant digits; the enclosure absorbs the truncation.
inline constexpr const char* exp_euler_gamma_digits = "1.78107241799019798523650410311";

inline Bound exp_gamma()
{
    static const Bound v = [] {
        const Bound c = Bound::of_decimal(exp_euler_gamma_digits);
        const Bound slack = Bound::of_decimal("1e-29");
        return Bound{(c - slack).lo, (c + slack).hi};
    }();
    return v;
}

inline Bound exp_neg_gamma()
{
    static const Bound v = Bound(1.0) / exp_gamma();
    return v;
}

inline Bound e()
{
    static const Bound v = exp(Bound(1.0));
    return v;
}

inline Bound pi()
{
    static const Bound v = [] {
        mpfr_t t;
        mpfr_init2(t, 53);
        mpfr_const_pi(t, MPFR_RNDD);
        const double l = mpfr_get_d(t, MPFR_RNDD);
        mpfr_const_pi(t, MPFR_RNDU);
        const double h = mpfr_get_d(t, MPFR_RNDU);
        mpfr_clear(t);
        return Bound{l, h};
    }();
    return v;
}

} // namespace consts

inline std::ostream& operator<<(std::ostream& os, const Bound& b)
{
    char buf[80];
    std::snprintf(buf, sizeof(buf), "[%.17g, %.17g]", b.lo, b.hi);
    return os << buf;
}

} // namespace gapforge

#endif
