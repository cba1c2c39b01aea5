#ifndef GAPFORGE_THEOREM_HPP
#define GAPFORGE_THEOREM_HPP

// Outward-rounded replay of the lower bound
//
//   r_2(A) >= (lambda/k) S(A,P,z) - (1/k) sum_{z<=q<y} (1 - log q/log y) S(A_q,P,z)
//             - (lambda c / k) |A|^(1-delta)
//
// for A = (N, N + 3 N^(2/3)) and every N >= n_min. Each term is reduced to a
// coefficient of N^(2/3)/log X, X = max A, evaluated with X enclosed in
// [N, N + 3 N^(2/3)] at N = n_min. Every normalised term is monotone in N in
// the favourable direction (checked on a grid), so the value at n_min covers
// the whole range.

#include "arith.hpp"
#include "bound.hpp"
#include "sieve_functions.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace gapforge {

using Rational = mpq_class;

// Exact value of a decimal literal: [-]digits[.digits][(e|E)[+-]digits].
inline Rational parse_decimal_rational(const std::string& text)
{
    std::string s;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c)))
            s.push_back(c);
    std::size_t i = 0;
    bool neg = false;
    if (i < s.size() && (s[i] == '-' || s[i] == '+'))
        neg = s[i++] == '-';
    std::string digits;
    long frac_digits = 0;
    bool seen_dot = false, any = false;
    for (; i < s.size(); ++i) {
        const char c = s[i];
        if (c >= '0' && c <= '9') {
            digits.push_back(c);
            any = true;
            if (seen_dot)
                ++frac_digits;
        } else if (c == '.' && !seen_dot) {
            seen_dot = true;
        } else {
            break;
        }
    }
    if (!any)
        throw domain_error("bad decimal literal: " + text);
    long exp10 = 0;
    if (i < s.size()) {
        if (s[i] != 'e' && s[i] != 'E')
            throw domain_error("bad decimal literal: " + text);
        ++i;
        const std::string e = s.substr(i);
        if (e.empty() || e.find_first_not_of("+-0123456789") != std::string::npos)
            throw domain_error("bad decimal literal: " + text);
        exp10 = std::stol(e);
    }
    exp10 -= frac_digits;
    Rational v(Natural(digits, 10));
    if (exp10 > 0)
        v *= Rational(ipow(10, static_cast<unsigned long>(exp10)));
    else if (exp10 < 0)
        v /= Rational(ipow(10, static_cast<unsigned long>(-exp10)));
    v.canonicalize();
    return neg ? Rational(-v) : v;
}

// Integer-valued decimal (accepts "1e40", "250000"); throws if not integral.
inline Natural parse_decimal_integer(const std::string& text)
{
    const Rational q = parse_decimal_rational(text);
    if (q.get_den() != 1)
        throw domain_error("not an integer: " + text);
    return q.get_num();
}

// Rational enclosure as a Bound.
inline Bound to_bound(const Rational& q)
{
    mpfr_t t;
    mpfr_init2(t, 53);
    mpfr_set_q(t, q.get_mpq_t(), MPFR_RNDD);
    const double lo = mpfr_get_d(t, MPFR_RNDD);
    mpfr_set_q(t, q.get_mpq_t(), MPFR_RNDU);
    const double hi = mpfr_get_d(t, MPFR_RNDU);
    mpfr_clear(t);
    return {lo, hi};
}

struct Decimal {
    std::string text;
    Rational exact;

    Decimal() : text("0"), exact(0) {}
    Decimal(const char* s) : text(s), exact(parse_decimal_rational(s)) {} // NOLINT(google-explicit-constructor)
    Decimal(const std::string& s) : text(s), exact(parse_decimal_rational(s)) {} // NOLINT

    Bound bound() const { return to_bound(exact); }
};

struct SieveParams {
    int k = 2;
    Decimal k1 = "5";
    Decimal k2 = "1.85";
    Decimal lambda = "1.15";
    Decimal alpha_level = "0.03";
    Decimal eps_main = "2.8e-4";
    Decimal eps_prop = "1.97e-3";
    std::optional<Decimal> c1_main;
    std::optional<Decimal> c1_prop;
    Decimal c2_main = "110";
    Natural q_modulus = 2;
    Natural n_min = parse_decimal_integer("1e40");
    Decimal c_q0 = "0.03";
    Decimal delta_q0 = "0.18";
    // z from which the eps_main / eps_prop Mertens windows are known to hold
    Natural eps_main_z_min = 100000;
    Natural eps_prop_z_min = 3024;
};

/// Checks the parameter invariants; throws domain_error naming the first
/// violated one.
inline void validate(const SieveParams& p)
{
    const Rational k(p.k);
    if (p.k < 1)
        throw domain_error("k must be >= 1");
    if (!(k + 1 > p.k2.exact))
        throw domain_error("need k + 1 > k2");
    if (p.k2.exact < 1)
        throw domain_error("need k2 >= 1");
    if (p.k1.exact < p.k2.exact)
        throw domain_error("need k1 >= k2");
    if (p.k1.exact > 6)
        throw domain_error("need k1 <= 6");
    if (p.lambda.exact != k + 1 - p.k2.exact)
        throw domain_error("lambda must equal k + 1 - k2 exactly");
    const Rational alpha_cap = Rational(2, 3) - 1 / p.k2.exact;
    if (!(p.alpha_level.exact > 0) || !(p.alpha_level.exact < alpha_cap))
        throw domain_error("need 0 < alpha_level < 2/3 - 1/k2");
    if (!(p.eps_main.exact > 0) || !(p.eps_prop.exact > 0))
        throw domain_error("epsilons must be positive");
    if (!p.c1_main || !p.c1_prop)
        throw domain_error("c1_main and c1_prop are mandatory configuration");
    if (p.c1_main->exact < 0 || p.c1_prop->exact < 0 || p.c2_main.exact < 0)
        throw domain_error("sieve constants must be >= 0");
    if (p.q_modulus < 1)
        throw domain_error("q_modulus must be >= 1");
    if (!(p.c_q0.exact > 0) || !(p.delta_q0.exact > 0) || !(p.delta_q0.exact < 1))
        throw domain_error("need c > 0 and 0 < delta < 1");
    if (p.n_min < 2)
        throw domain_error("n_min must be >= 2");
}

/// Reads `key = value` lines ('#' starts a comment) over the shipped defaults.
inline SieveParams parse_params(std::istream& in)
{
    SieveParams p;
    p.c1_main.reset();
    p.c1_prop.reset();
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw domain_error("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        try {
            if (key == "k")
                p.k = static_cast<int>(parse_decimal_integer(val).get_si());
            else if (key == "k1")
                p.k1 = val;
            else if (key == "k2")
                p.k2 = val;
            else if (key == "lambda")
                p.lambda = val;
            else if (key == "alpha_level")
                p.alpha_level = val;
            else if (key == "eps_main")
                p.eps_main = val;
            else if (key == "eps_prop")
                p.eps_prop = val;
            else if (key == "c1_main")
                p.c1_main = Decimal(val);
            else if (key == "c1_prop")
                p.c1_prop = Decimal(val);
            else if (key == "c2_main")
                p.c2_main = val;
            else if (key == "q_modulus")
                p.q_modulus = parse_decimal_integer(val);
            else if (key == "n_min")
                p.n_min = parse_decimal_integer(val);
            else if (key == "c_q0")
                p.c_q0 = val;
            else if (key == "delta_q0")
                p.delta_q0 = val;
            else if (key == "eps_main_z_min")
                p.eps_main_z_min = parse_decimal_integer(val);
            else if (key == "eps_prop_z_min")
                p.eps_prop_z_min = parse_decimal_integer(val);
            else
                throw domain_error("unknown key '" + key + "'");
        } catch (const domain_error& e) {
            throw domain_error("config line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return p;
}

inline SieveParams parse_params_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw resource_error("cannot open config " + path);
    return parse_params(in);
}

// ---------------------------------------------------------------------------

struct ChainStep {
    std::string name;
    Bound value;
    std::string relation; // "<=", ">=", ">"
    Bound claim;
    bool certified = false;
};

inline ChainStep check_le(std::string name, Bound value, Bound claim)
{
    return {std::move(name), value, "<=", claim, value.finite() && value.hi <= claim.lo};
}

inline ChainStep check_ge(std::string name, Bound value, Bound claim)
{
    return {std::move(name), value, ">=", claim, value.finite() && value.lo >= claim.hi};
}

inline ChainStep check_gt(std::string name, Bound value, Bound claim)
{
    return {std::move(name), value, ">", claim, value.finite() && value.lo > claim.hi};
}

namespace detail {

// Quantities shared by every term, at N = n (X enclosed in [N, N + 3 N^(2/3)]).
struct Scale {
    Bound n;
    Bound n23;   // N^(2/3)
    Bound x;     // X
    Bound log_x; // log X
    Bound a_lo;  // 3 N^(2/3) - 2 <= |A|
    Bound a_hi;  // |A| <= 3 N^(2/3)
};

inline Bound two_thirds() { return Bound(2.0) / Bound(3.0); }

inline Scale scale_at(const Natural& n_int)
{
    Scale s;
    s.n = Bound::of(n_int);
    // N^(2/3) through the exact integer cube root keeps the enclosure tight
    const Natural c_lo = iroot_floor(ipow(n_int, 2), 3);
    const Natural c_hi = iroot_ceil(ipow(n_int, 2), 3);
    s.n23 = Bound(Bound::of(c_lo).lo, Bound::of(c_hi).hi);
    s.x = Bound(s.n.lo, (s.n + Bound(3.0) * s.n23).hi);
    s.log_x = log(s.x);
    s.a_lo = Bound(3.0) * s.n23 - Bound(2.0);
    s.a_hi = Bound(3.0) * s.n23;
    return s;
}

} // namespace detail

struct Q0Report {
    std::vector<ChainStep> steps;
    bool certified = false;
    std::string failed_step;
};

/// Replays sum_{z<=q<y} |A_{q^2}| <= c |A|^(1-delta) for all N >= n_min with
/// z = X^(1/5), y = X^(1/1.85).
inline Q0Report verify_q0(const SieveParams& p)
{
    if (p.k1.exact != 5 || p.k2.exact != parse_decimal_rational("1.85"))
        throw domain_error("verify_q0: requires k1 = 5 and k2 = 1.85");
    const auto sc = detail::scale_at(p.n_min);
    Q0Report rep;
    auto add = [&](ChainStep st) {
        if (!st.certified && rep.failed_step.empty())
            rep.failed_step = st.name;
        rep.steps.push_back(std::move(st));
    };

    const Bound k2 = p.k2.bound();
    // z >= N^(1/5) >= floor(n_min^(1/5)), exactly
    const Bound z_min = Bound::of(iroot_floor(p.n_min, 5));
    add(check_ge("z >= N^(1/5) >= 1e8", z_min, Bound(1e8)));

    // 2.22 |A| / (z log z) <= 2.22 3^(3/10) |A|^(7/10) / log(1e8)
    const Bound c_z = Bound::of_decimal("2.22") * pow(Bound(3.0), Bound::of_decimal("0.3")) / log(Bound(1e8));
    add(check_le("2.22 * 3^(3/10) / log(1e8) <= 0.17", c_z, Bound::of_decimal("0.17")));

    const Bound y_min = pow(sc.n, Bound(1.0) / k2);
    add(check_ge("y >= N^(1/1.85) >= 4.18e21", y_min, Bound::of_decimal("4.18e21")));

    // (N + 3 N^(2/3))^(1/1.85) = N^(1/1.85) (1 + 3 N^(-1/3))^(1/1.85), decreasing in N
    const Bound n13 = pow(sc.n, Bound(1.0) / Bound(3.0));
    const Bound growth = pow(Bound(1.0) + Bound(3.0) / n13, Bound(1.0) / k2);
    add(check_le("(1 + 3 N^(-1/3))^(1/1.85) <= 1.01", growth, Bound::of_decimal("1.01")));

    // 1.01 N^(1/1.85) <= (3 N^(2/3) - 2)^0.82; the exponent gap makes this easier as N grows
    const Bound exp82 = Bound::of_decimal("0.82");
    add(check_le("1.01 N^(1/1.85) <= |A|^0.82", Bound::of_decimal("1.01") * y_min, pow(sc.a_lo, exp82)));

    const Bound log_y = log(y_min);
    const Bound rosser_factor = Bound(1.0) + Bound(3.0) / (Bound(2.0) * log_y);
    add(check_le("1 + 3/(2 log y) <= 1.04", rosser_factor, Bound::of_decimal("1.04")));
    add(check_le("1.04 / log y <= 0.021", Bound::of_decimal("1.04") / log_y, Bound::of_decimal("0.021")));

    // 0.17 |A|^0.7 + 0.021 |A|^0.82 <= c |A|^(1-delta); both exponent
    // differences must be <= 0 so the worst case is the smallest |A|.
    const Rational one_minus_delta = 1 - p.delta_q0.exact;
    const Bound e1 = to_bound(Rational(7, 10) - one_minus_delta);
    const Bound e2 = to_bound(Rational(82, 100) - one_minus_delta);
    if (e1.hi > 0 || e2.hi > 0) {
        add(ChainStep{"exponents 0.7, 0.82 <= 1 - delta", hull(e1, e2), "<=", Bound(0.0), false});
    } else {
        const Bound combined = Bound::of_decimal("0.17") * pow(sc.a_lo, e1) +
                               Bound::of_decimal("0.021") * pow(sc.a_lo, e2);
        add(check_le("0.17 |A|^0.7 + 0.021 |A|^0.82 <= c |A|^(1-delta)", combined, p.c_q0.bound()));
    }
    rep.certified = rep.failed_step.empty();
    return rep;
}

struct SLowerReport {
    double s = 0;
    Bound c_s;          // f(s) - eps C2 e^2 h(s)
    Bound s_coefficient; // S(A,P,z) > s_coefficient * N^(2/3)/log X
    Bound term;          // (lambda / k) * s_coefficient
    ChainStep ramare;    // sum_{d <= 2D} mu^2(d) <= 1.22 D
    ChainStep z_gate;    // z >= eps_main window start
};

inline Bound c_of_s(const SieveParams& p, Bound s)
{
    return lower_f(s) - p.eps_main.bound() * p.c2_main.bound() * square(consts::e()) * h(s);
}

inline SLowerReport lower_bound_S_at(const SieveParams& p, double s, const Natural& n)
{
    if (!(s >= 2 && s <= 3))
        throw domain_error("lower_bound_S: s must lie in [2, 3]");
    const auto sc = detail::scale_at(n);
    const Bound k1 = p.k1.bound();
    SLowerReport rep;
    rep.s = s;
    rep.c_s = c_of_s(p, Bound(s));

    const Bound log_z = sc.log_x / k1;
    rep.z_gate = check_ge("z = X^(1/k1) >= eps_main window start", exp(log_z), Bound::of(p.eps_main_z_min));

    // D = z^s >= z^2; sum_{d < 2D} mu^2(d) <= (6/pi^2) 2D + 0.5 sqrt(2D) <= 1.22 D
    const Bound d_min = exp(Bound(s) * Bound(log_z.lo));
    const Bound ramare_ratio =
        d_min.lo >= 10 ? squarefree_count_upper(Bound(2.0) * d_min) / d_min : Bound(0.0, INFINITY);
    rep.ramare = check_le("(6/pi^2 * 2D + 0.5 sqrt(2D)) / D <= 1.22", ramare_ratio, Bound::of_decimal("1.22"));

    const Bound rosser_low = Bound(1.0) - Bound(1.0) / (Bound(2.0) * square(log_z));
    const Bound main = consts::exp_neg_gamma() * k1 * (Bound(3.0) - Bound(2.0) / sc.n23) * rosser_low * rep.c_s;
    // 1.22 X^(s/k1) normalised: 1.22 X^(s/k1) log X / N^(2/3)
    const Bound rem = Bound::of_decimal("1.22") * exp(Bound(s) * log_z) * sc.log_x / sc.n23;
    rep.s_coefficient = main - rem;
    rep.term = p.lambda.bound() / Bound(static_cast<double>(p.k)) * rep.s_coefficient;
    return rep;
}

inline SLowerReport lower_bound_S(const SieveParams& p, double s) { return lower_bound_S_at(p, s, p.n_min); }

struct SOptimum {
    double s_star = 0;
    SLowerReport report;
};

// Grid maximum of the S-term over s in [2, 3]; ties go to the smaller s.
inline SOptimum optimize_s(const SieveParams& p, int grid, const Natural& n)
{
    if (grid < 2)
        throw domain_error("optimize_s: grid needs at least 2 points");
    SOptimum best;
    bool have = false;
    for (int i = 0; i < grid; ++i) {
        const double s = (i == grid - 1) ? 3.0 : 2.0 + static_cast<double>(i) / (grid - 1);
        SLowerReport r = lower_bound_S_at(p, s, n);
        if (!have || r.term.lo > best.report.term.lo) {
            best = {s, r};
            have = true;
        }
    }
    return best;
}

inline SOptimum optimize_s(const SieveParams& p, int grid) { return optimize_s(p, grid, p.n_min); }

// Closed form bounding sum_{z<=q<y} (1 - log q/log y)/q for z = X^(1/k1), y = X^(1/k2).
inline Bound weighted_recip_closed_form(Bound k1, Bound k2, Bound log_x)
{
    const Bound ratio = k2 / k1;
    return log(k1 / k2) - Bound(1.0) + ratio +
           Bound(5.0) * k1 * k1 * k1 / (log_x * log_x * log_x) * (Bound(1.0) - ratio);
}

struct PropTerms {
    Bound k_alpha;
    Bound d_y;
    Bound d_tilde;
    Bound prefactor;       // k1 e^-gamma (1 + 1/(2 log^2 D~))
    Bound prefactor_alt;   // k1 e^-gamma (1 + 1/log^2 D_y), the rounded display form
    Bound m1;              // coefficients of N^(2/3)/log X
    Bound m2;
    Bound e_term;
    Bound weighted_recip;  // closed form at X
    std::vector<ChainStep> gates;
};

inline PropTerms eval_prop_terms(const SieveParams& p, const Natural& n, const Decimal& c1)
{
    const auto sc = detail::scale_at(n);
    const Bound k1 = p.k1.bound();
    const Bound k2 = p.k2.bound();
    const Bound al = p.alpha_level.bound();
    const Bound eps = p.eps_prop.bound();
    const Bound c1b = c1.bound();
    const Bound e2 = square(consts::e());
    const Bound one(1.0);

    PropTerms t;
    if (p.k1.exact > 6)
        throw domain_error("eval_prop_terms: gate k1 <= 6 failed");
    const Rational alpha_cap = Rational(2, 3) - 1 / p.k2.exact;
    if (!(p.alpha_level.exact > 0 && p.alpha_level.exact < alpha_cap))
        throw domain_error("eval_prop_terms: gate 0 < alpha < 2/3 - 1/k2 failed");

    const Bound log_z = sc.log_x / k1;
    const Bound log_y = sc.log_x / k2;
    if (!(exp(log_z).lo > 1000))
        throw domain_error("eval_prop_terms: gate z > 1000 failed");
    if (!(log_y.lo > log_z.hi))
        throw domain_error("eval_prop_terms: gate y > z failed");

    t.k_alpha = k1 * (detail::two_thirds() - one / k2 - al);
    const Bound log_dy = (detail::two_thirds() - al - one / k2) * sc.log_x;
    t.d_y = exp(log_dy);
    if (!(t.d_y.lo > 6999))
        throw domain_error("eval_prop_terms: gate D_y > 6999 failed");
    const Bound log_dt = min(log_dy, log_z);
    t.d_tilde = exp(log_dt);
    if (!(t.d_tilde.lo >= Bound::of(p.eps_prop_z_min).hi))
        throw domain_error("eval_prop_terms: gate D~ >= eps_prop window start failed");
    t.gates.push_back(check_gt("z > 1000", exp(log_z), Bound(1000.0)));
    t.gates.push_back(check_gt("D_y > 6999", t.d_y, Bound(6999.0)));

    t.prefactor = k1 * consts::exp_neg_gamma() * (one + one / (Bound(2.0) * square(log_dt)));
    t.prefactor_alt = k1 * consts::exp_neg_gamma() * (one + one / square(log_dy));

    const Bound h_ka = h(t.k_alpha);
    const Bound sieve_err = eps * c1b * e2 * h_ka;
    const Bound log3 = sc.log_x * sc.log_x * sc.log_x;
    const Bound ratio = k2 / k1;
    t.weighted_recip = weighted_recip_closed_form(k1, k2, sc.log_x);

    const Bound a3 = Bound(2.0) + Bound(3.0) * al; // 2 + 3 alpha
    const Bound inner = (Bound(3.0) * log(k1 / k2) +
                         (k2 * a3 - Bound(3.0)) * log((a3 - Bound(3.0) / k2) / (a3 - Bound(3.0) / k1))) /
                        (Bound(9.0) * a3);
    const Bound tail = Bound(5.0) * k1 * k1 * k1 * k1 / (t.k_alpha * log3) * (one - ratio);
    t.m1 = Bound(3.0) * (Bound(2.0) * consts::exp_gamma() / k1 * (inner + tail) + sieve_err * t.weighted_recip);

    // M2 = y/log X (1 - k2/k1)(2e^g/k_alpha + eps C1 e^2 h(k_alpha)); normalised by N^(2/3)/log X
    const Bound y = exp(log_y);
    t.m2 = y / sc.n23 * (one - ratio) * (Bound(2.0) * consts::exp_gamma() / t.k_alpha + sieve_err);

    // E = Q X^(2/3 - alpha) * closed form; normalised
    const Bound x_pow = exp((detail::two_thirds() - al) * sc.log_x);
    t.e_term = Bound::of(p.q_modulus) * x_pow * sc.log_x / sc.n23 * t.weighted_recip;
    return t;
}

inline PropTerms eval_prop_terms(const SieveParams& p, const Natural& n)
{
    if (!p.c1_prop)
        throw domain_error("c1_prop is mandatory configuration");
    return eval_prop_terms(p, n, *p.c1_prop);
}

// (1/k)(prefactor (M1 + M2) + E)
inline Bound sum_term(const SieveParams& p, const PropTerms& t)
{
    return (t.prefactor * (t.m1 + t.m2) + t.e_term) / Bound(static_cast<double>(p.k));
}

// (lambda c / k) |A|^(1-delta), normalised, with |A| <= 3 N^(2/3)
inline Bound remainder_term(const SieveParams& p, const Natural& n)
{
    const auto sc = detail::scale_at(n);
    const Bound a_pow = pow(sc.a_hi, Bound(1.0) - p.delta_q0.bound());
    return p.lambda.bound() * p.c_q0.bound() / Bound(static_cast<double>(p.k)) * a_pow * sc.log_x / sc.n23;
}

struct C1Caps {
    double for_m1 = 0;  // largest c1_prop (to 1e-9) with M1 <= 0.78
    double for_sum = 0; // largest c1_prop with the sum term <= 3.236
};

inline C1Caps c1_caps(const SieveParams& p)
{
    auto search = [&](auto ok) {
        double lo = 0, hi = 1e6;
        if (!ok(lo))
            return 0.0;
        for (int it = 0; it < 200 && hi - lo > 1e-9; ++it) {
            const double mid = lo + (hi - lo) / 2;
            (ok(mid) ? lo : hi) = mid;
        }
        return lo;
    };
    auto as_dec = [](double v) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return Decimal(std::string(buf));
    };
    C1Caps caps;
    caps.for_m1 = search([&](double c) {
        return eval_prop_terms(p, p.n_min, as_dec(c)).m1.hi <= Bound::of_decimal("0.78").lo;
    });
    caps.for_sum = search([&](double c) {
        return sum_term(p, eval_prop_terms(p, p.n_min, as_dec(c))).hi <= Bound::of_decimal("3.236").lo;
    });
    return caps;
}

struct TheoremCertificate {
    SieveParams params;
    Q0Report q0;
    double s_star = 0;
    Bound c_at_s;
    Bound term_S_lower;
    Bound term_finalrem;
    PropTerms prop;
    Bound m1, m2, e_half;
    Bound term_sum_upper;
    Bound final_coefficient;
    std::vector<ChainStep> checks;
    bool monotone_in_n = false;
    std::optional<C1Caps> caps;
    bool certified = false;
    std::string failed_term;
};

inline constexpr int default_s_grid = 1001;

/// Assembles the whole chain. Never throws on a failing bound: the verdict
/// names the first term that could not be evaluated or certified.
inline TheoremCertificate certify_theorem(const SieveParams& params, int s_grid = default_s_grid,
                                          bool with_caps = true)
{
    TheoremCertificate c;
    c.params = params;
    auto fail = [&](const std::string& term) {
        if (c.failed_term.empty())
            c.failed_term = term;
    };
    try {
        validate(params);
    } catch (const domain_error& e) {
        fail(std::string("params: ") + e.what());
        return c;
    }

    try {
        c.q0 = verify_q0(params);
        if (!c.q0.certified)
            fail("q0: " + c.q0.failed_step);
    } catch (const domain_error& e) {
        fail(std::string("q0: ") + e.what());
    }

    const Bound k(static_cast<double>(params.k));
    try {
        const auto opt = optimize_s(params, s_grid);
        c.s_star = opt.s_star;
        c.c_at_s = opt.report.c_s;
        c.term_S_lower = opt.report.term;
        c.checks.push_back(opt.report.z_gate);
        c.checks.push_back(opt.report.ramare);
        if (!opt.report.z_gate.certified)
            fail("S-term: " + opt.report.z_gate.name);
        if (!opt.report.ramare.certified)
            fail("S-term: " + opt.report.ramare.name);
    } catch (const domain_error& e) {
        fail(std::string("S-term: ") + e.what());
    }

    try {
        c.prop = eval_prop_terms(params, params.n_min);
        c.m1 = c.prop.m1;
        c.m2 = c.prop.m2;
        c.e_half = c.prop.e_term / k;
        c.term_sum_upper = sum_term(params, c.prop);
        for (const auto& g : c.prop.gates)
            c.checks.push_back(g);
    } catch (const domain_error& e) {
        fail(std::string("sum-term: ") + e.what());
    }

    try {
        c.term_finalrem = remainder_term(params, params.n_min);
    } catch (const domain_error& e) {
        fail(std::string("remainder: ") + e.what());
    }

    if (!c.failed_term.empty())
        return c;

    c.final_coefficient = c.term_S_lower - c.term_sum_upper - c.term_finalrem;

    c.checks.push_back(check_gt("C(s*) > 0.8", c.c_at_s, Bound::of_decimal("0.8")));
    c.checks.push_back(check_gt("(lambda/k) S-coefficient > 3.77", c.term_S_lower, Bound::of_decimal("3.77")));
    c.checks.push_back(check_le("prefactor/k <= 1.43", c.prop.prefactor / k, Bound::of_decimal("1.43")));
    c.checks.push_back(check_le("prefactor (1 + 1/log^2 D_y)/k <= 1.43", c.prop.prefactor_alt / k,
                                Bound::of_decimal("1.43")));
    c.checks.push_back(check_le("M1 <= 0.78", c.m1, Bound::of_decimal("0.78")));
    c.checks.push_back(check_le("M2 <= 4e-5", c.m2, Bound::of_decimal("4e-5")));
    c.checks.push_back(check_le("E/k <= 2.12", c.e_half, Bound::of_decimal("2.12")));
    c.checks.push_back(check_le("sum coefficient <= 3.236", c.term_sum_upper, Bound::of_decimal("3.236")));
    c.checks.push_back(check_le("remainder coefficient <= 1e-4", c.term_finalrem, Bound::of_decimal("1e-4")));
    c.checks.push_back(check_ge("final coefficient >= 0.53", c.final_coefficient, Bound::of_decimal("0.53")));

    // The value at n_min must bound every larger N: the S-term may only grow,
    // the sum and remainder terms may only shrink.
    try {
        c.monotone_in_n = true;
        Bound prev_s = c.term_S_lower, prev_sum = c.term_sum_upper, prev_rem = c.term_finalrem;
        Natural n = params.n_min;
        for (int i = 0; i < 24; ++i) {
            n *= 1000;
            const Bound s_t = lower_bound_S_at(params, c.s_star, n).term;
            const Bound sum_t = sum_term(params, eval_prop_terms(params, n));
            const Bound rem_t = remainder_term(params, n);
            if (s_t.lo < prev_s.lo || sum_t.hi > prev_sum.hi || rem_t.hi > prev_rem.hi)
                c.monotone_in_n = false;
            prev_s = s_t;
            prev_sum = sum_t;
            prev_rem = rem_t;
        }
    } catch (const domain_error&) {
        c.monotone_in_n = false;
    }
    if (!c.monotone_in_n)
        fail("monotonicity in N");

    if (with_caps)
        c.caps = c1_caps(params);

    if (!c.final_coefficient.finite() || !(c.final_coefficient.lo > 0))
        fail("final coefficient not positive");
    c.certified = c.failed_term.empty();
    return c;
}

// ---------------------------------------------------------------------------
// Desk-scale oracle for the statement itself.

inline constexpr std::uint64_t omega_oracle_cap = 1'000'000'000'000ULL;

/// |{a in (N, N + 3 N^(2/3)) : Omega(a) <= 2}|, by sieving the interval.
inline std::uint64_t omega_count_interval(std::uint64_t n, const PrimeTable& table)
{
    if (n < 1)
        throw domain_error("omega_count_interval: N must be >= 1");
    if (n > omega_oracle_cap)
        throw resource_error("omega_count_interval: N above 1e12 oracle cap");
    // a - N < 3 N^(2/3)  <=>  (a - N)^3 < 27 N^2
    const Natural nn = from_u64(n);
    const std::uint64_t len = to_u64(iroot_ceil(27 * nn * nn, 3)) - 1;
    const std::uint64_t first = n + 1;
    const std::uint64_t last = n + len;
    if (len == 0)
        return 0;
    std::uint64_t root = to_u64(isqrt(from_u64(last)));
    if (table.limit() < root)
        throw resource_error("omega_count_interval: prime table below sqrt of interval end");

    std::uint64_t count = 0;
    constexpr std::uint64_t segment = 1 << 20;
    std::vector<std::uint64_t> part(static_cast<std::size_t>(std::min(segment, len)));
    std::vector<std::uint8_t> omega(part.size());
    for (std::uint64_t lo = first; lo <= last; lo += segment) {
        const std::uint64_t hi = std::min(last, lo + segment - 1);
        const std::size_t w = static_cast<std::size_t>(hi - lo + 1);
        std::fill(part.begin(), part.begin() + static_cast<std::ptrdiff_t>(w), 1);
        std::fill(omega.begin(), omega.begin() + static_cast<std::ptrdiff_t>(w), 0);
        for (std::uint32_t p : table) {
            if (p > root)
                break;
            // every prime power p^e <= hi contributes one to Omega of its multiples
            for (std::uint64_t pe = p; pe <= hi; pe *= p) {
                std::uint64_t start = (lo + pe - 1) / pe * pe;
                for (std::uint64_t v = start; v <= hi; v += pe) {
                    const std::size_t i = static_cast<std::size_t>(v - lo);
                    part[i] *= p;
                    if (omega[i] < 3)
                        ++omega[i];
                }
                if (pe > hi / p)
                    break;
            }
        }
        for (std::size_t i = 0; i < w; ++i) {
            // the unfactored part is 1 or a single prime > sqrt(last)
            const unsigned total = omega[i] + (part[i] != lo + i ? 1u : 0u);
            if (total <= 2)
                ++count;
        }
    }
    return count;
}

// ---------------------------------------------------------------------------

inline nlohmann::json bound_json(const Bound& b)
{
    char lo[40], hi[40];
    std::snprintf(lo, sizeof(lo), "%.17g", b.lo);
    std::snprintf(hi, sizeof(hi), "%.17g", b.hi);
    return {{"lo", lo}, {"hi", hi}};
}

inline nlohmann::json to_json(const ChainStep& s)
{
    return {{"name", s.name},
            {"value", bound_json(s.value)},
            {"relation", s.relation},
            {"claim", bound_json(s.claim)},
            {"certified", s.certified}};
}

inline nlohmann::json to_json(const SieveParams& p)
{
    nlohmann::json j = {{"k", p.k},
                        {"k1", p.k1.text},
                        {"k2", p.k2.text},
                        {"lambda", p.lambda.text},
                        {"alpha_level", p.alpha_level.text},
                        {"eps_main", p.eps_main.text},
                        {"eps_prop", p.eps_prop.text},
                        {"c2_main", p.c2_main.text},
                        {"q_modulus", to_decimal(p.q_modulus)},
                        {"n_min", to_decimal(p.n_min)},
                        {"c_q0", p.c_q0.text},
                        {"delta_q0", p.delta_q0.text}};
    j["c1_main"] = p.c1_main ? nlohmann::json(p.c1_main->text) : nlohmann::json(nullptr);
    j["c1_prop"] = p.c1_prop ? nlohmann::json(p.c1_prop->text) : nlohmann::json(nullptr);
    return j;
}

inline nlohmann::json to_json(const TheoremCertificate& c)
{
    nlohmann::json q0_steps = nlohmann::json::array();
    for (const auto& s : c.q0.steps)
        q0_steps.push_back(to_json(s));
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& s : c.checks)
        checks.push_back(to_json(s));
    nlohmann::json j = {
        {"params", to_json(c.params)},
        {"q0", {{"certified", c.q0.certified}, {"steps", q0_steps}}},
        {"s_star", c.s_star},
        {"C_at_s", bound_json(c.c_at_s)},
        {"term_S_lower", bound_json(c.term_S_lower)},
        {"k_alpha", bound_json(c.prop.k_alpha)},
        {"D_y", bound_json(c.prop.d_y)},
        {"D_tilde", bound_json(c.prop.d_tilde)},
        {"prefactor_over_k", bound_json(c.prop.prefactor / Bound(static_cast<double>(c.params.k)))},
        {"prefactor_over_k_display_form", bound_json(c.prop.prefactor_alt / Bound(static_cast<double>(c.params.k)))},
        {"m1", bound_json(c.m1)},
        {"m2", bound_json(c.m2)},
        {"e_half", bound_json(c.e_half)},
        {"weighted_recip_closed_form", bound_json(c.prop.weighted_recip)},
        {"term_sum_upper", bound_json(c.term_sum_upper)},
        {"term_finalrem", bound_json(c.term_finalrem)},
        {"final_coefficient", bound_json(c.final_coefficient)},
        {"monotone_in_n", c.monotone_in_n},
        {"checks", checks},
        {"verdict", c.certified ? "certified" : "failed"},
    };
    if (!c.certified)
        j["failed_term"] = c.failed_term;
    if (c.caps)
        j["c1_prop_caps"] = {{"m1_le_0.78", c.caps->for_m1}, {"sum_le_3.236", c.caps->for_sum}};
    return j;
}

// Shipped defaults; c1 values are placeholders to be replaced by the
// explicit linear sieve table entries for the chosen epsilons.
inline constexpr const char* defaults_config = R"(# almost-prime certificate parameters
k = 2
k1 = 5
k2 = 1.85
lambda = 1.15
alpha_level = 0.03
eps_main = 2.8e-4
eps_prop = 1.97e-3
c2_main = 110
c1_main = 110
c1_prop = 110
q_modulus = 2
n_min = 1e40
c_q0 = 0.03
delta_q0 = 0.18
)";

inline SieveParams default_params()
{
    std::istringstream in(defaults_config);
    return parse_params(in);
}

} // namespace gapforge

#endif
