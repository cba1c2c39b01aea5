#ifndef GAPFORGE_SIEVE_FUNCTIONS_HPP
#define GAPFORGE_SIEVE_FUNCTIONS_HPP

// Outward-rounded evaluation of the linear sieve functions F, f, h, the
// Rosser bounds for prod(1 - 1/p), Mertens-product windows and the explicit
// prime-sum inequalities used by the almost-prime certificate.

#include "arith.hpp"
#include "bound.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace gapforge {

// F(s) = 2 e^gamma / s on 0 < s <= 3.
inline Bound upper_F(Bound s)
{
    if (!(s.lo > 0) || s.hi > 3)
        throw domain_error("upper_F: s must lie in (0, 3]");
    return Bound(2.0) * consts::exp_gamma() / s;
}

// f(s) = 2 e^gamma log(s - 1) / s on 2 <= s <= 4.
inline Bound lower_f(Bound s)
{
    if (s.lo < 2 || s.hi > 4)
        throw domain_error("lower_f: s must lie in [2, 4]");
    const Bound sm1 = s - Bound(1.0);
    const Bound l = (sm1.lo == 1 && sm1.hi == 1) ? Bound(0.0) : log(sm1);
    return Bound(2.0) * consts::exp_gamma() * l / s;
}

namespace detail {

inline Bound h_point(double s)
{
    const Bound e_m2 = exp(Bound(-2.0));
    if (s == 0)
        return {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    if (s <= 1)
        return e_m2 / Bound(s);
    if (s <= 2)
        return e_m2;
    if (s <= 3)
        return exp(-Bound(s));
    return Bound(3.0) * exp(-Bound(s)) / Bound(s);
}

} // namespace detail

/// Weight function of the explicit sieve error term:
///   s^-1 e^-2 on [0,1], e^-2 on [1,2], e^-s on [2,3], 3 s^-1 e^-s on [3,inf).
/// Non-increasing, so an interval argument maps to [h(hi), h(lo)].
inline Bound h(Bound s)
{
    if (s.lo < 0)
        throw domain_error("h: s must be >= 0");
    const Bound at_hi = detail::h_point(s.hi);
    const Bound at_lo = detail::h_point(s.lo);
    return {at_hi.lo, at_lo.hi};
}

struct RosserBounds {
    Bound upper;                // prod_{p<z}(1-1/p) <= upper
    std::optional<Bound> lower; // prod_{p<z}(1-1/p) >= lower, z >= 285
};

inline RosserBounds rosser_V_bounds(Bound z)
{
    if (z.lo < 2)
        throw domain_error("rosser_V_bounds: z must be >= 2");
    const Bound lz = log(z);
    const Bound corr = Bound(1.0) / (Bound(2.0) * square(lz));
    const Bound base = consts::exp_neg_gamma() / lz;
    RosserBounds out{base * (Bound(1.0) + corr), std::nullopt};
    if (z.lo >= 285)
        out.lower = base * (Bound(1.0) - corr);
    return out;
}

// prod over primes u <= p < z, p not excluded, of (1 - 1/p)^-1.
inline Bound mertens_product(std::uint64_t u, std::uint64_t z, const std::vector<std::uint64_t>& exclude,
                             const PrimeTable& table)
{
    if (u < 2 || u > z)
        throw domain_error("mertens_product: need 2 <= u <= z");
    if (z > 2 && table.limit() < z - 1)
        throw resource_error("mertens_product: z beyond prime table");
    Bound prod(1.0);
    for (std::size_t i = table.lower_index(u); i < table.size() && table[i] < z; ++i) {
        const std::uint64_t p = table[i];
        if (std::find(exclude.begin(), exclude.end(), p) != exclude.end())
            continue;
        prod *= Bound(static_cast<double>(p)) / Bound(static_cast<double>(p - 1));
    }
    return prod;
}

// sum_{p >= a} 1/p^2 <= 2.22 / (a log a)
inline Bound tail_recip_square_bound(Bound a)
{
    if (!(a.lo > 1))
        throw domain_error("tail_recip_square_bound: a must be > 1");
    return Bound::of_decimal("2.22") / (a * log(a));
}

// pi(x) < x / log x (1 + 3 / (2 log x))
inline Bound pi_upper(Bound x)
{
    if (!(x.lo > 1))
        throw domain_error("pi_upper: x must be > 1");
    const Bound lx = log(x);
    return x / lx * (Bound(1.0) + Bound(3.0) / (Bound(2.0) * lx));
}

// sum_{d <= x} mu^2(d) <= 6 x / pi^2 + 0.5 sqrt(x), x >= 10
inline Bound squarefree_count_upper(Bound x)
{
    if (x.lo < 10)
        throw domain_error("squarefree_count_upper: x must be >= 10");
    return Bound(6.0) * x / square(consts::pi()) + Bound(0.5) * sqrt(x);
}

// sum_{a <= p < b} 1/p < log log b - log log a + 5 / (log a)^3, b > a > 1000
inline Bound recip_prime_interval_upper(Bound a, Bound b)
{
    if (!(a.lo > 1000) || !(b.lo > a.hi))
        throw domain_error("recip_prime_interval_upper: need b > a > 1000");
    const Bound la = log(a);
    return log(log(b)) - log(la) + Bound(5.0) / (la * la * la);
}

// ---------------------------------------------------------------------------
// Mertens-product windows

enum class EpsStatus { pending, verified, refuted };

inline const char* eps_status_name(EpsStatus s)
{
    switch (s) {
    case EpsStatus::pending:
        return "pending";
    case EpsStatus::verified:
        return "verified";
    case EpsStatus::refuted:
        return "refuted";
    }
    return "pending";
}

struct EpsWitness {
    std::uint64_t u = 0;
    std::uint64_t z = 0;
    bool z_limit = false; // violation only in the limit z -> z+ (z prime)
};

/// Claim: prod_{u <= p < z, p not | q_excluded} (1 - 1/p)^-1 < (1 + eps) log z / log u
/// for all real u_min <= u < z and z_lo <= z <= z_hi.
struct EpsWindow {
    std::uint64_t z_lo = 0;
    std::uint64_t z_hi = 0;
    std::uint64_t u_min = 3;
    std::string epsilon = "0"; // decimal literal
    std::uint64_t q_excluded = 2;
    EpsStatus status = EpsStatus::pending;
    std::optional<EpsWitness> witness;
    std::uint64_t pairs_checked = 0;
};

namespace detail {

struct MpfrNum {
    mpfr_t v;
    explicit MpfrNum(mpfr_prec_t prec) { mpfr_init2(v, prec); }
    MpfrNum(const MpfrNum&) = delete;
    MpfrNum& operator=(const MpfrNum&) = delete;
    ~MpfrNum() { mpfr_clear(v); }
};

inline constexpr mpfr_prec_t hp_bits = 256;

// Sign of (1+eps) log z / log u - prod_{u<=p<z'} (1-1/p)^-1 at 256 bits,
// where the product runs over primes in [table index i0, i1) not excluded.
// +1: inequality holds strictly, -1: violated (>=), 0: undecided.
inline int eps_pair_sign_hp(std::size_t i0, std::size_t i1, double z, double u, const std::string& eps,
                            std::uint64_t q, const PrimeTable& table)
{
    MpfrNum lhs_lo(hp_bits), lhs_hi(hp_bits), t(hp_bits), rhs_lo(hp_bits), rhs_hi(hp_bits), a(hp_bits),
        b(hp_bits);
    mpfr_set_ui(lhs_lo.v, 1, MPFR_RNDN);
    mpfr_set_ui(lhs_hi.v, 1, MPFR_RNDN);
    for (std::size_t i = i0; i < i1; ++i) {
        const std::uint64_t p = table[i];
        if (q % p == 0)
            continue;
        mpfr_set_ui(t.v, static_cast<unsigned long>(p), MPFR_RNDN);
        mpfr_div_ui(t.v, t.v, static_cast<unsigned long>(p - 1), MPFR_RNDD);
        mpfr_mul(lhs_lo.v, lhs_lo.v, t.v, MPFR_RNDD);
        mpfr_set_ui(t.v, static_cast<unsigned long>(p), MPFR_RNDN);
        mpfr_div_ui(t.v, t.v, static_cast<unsigned long>(p - 1), MPFR_RNDU);
        mpfr_mul(lhs_hi.v, lhs_hi.v, t.v, MPFR_RNDU);
    }
    // rhs = (1 + eps) log z / log u
    auto rhs = [&](mpfr_t out, mpfr_rnd_t dir, mpfr_rnd_t anti) {
        mpfr_set_str(a.v, eps.c_str(), 10, dir);
        mpfr_add_ui(a.v, a.v, 1, dir);
        mpfr_set_d(b.v, z, MPFR_RNDN);
        mpfr_log(b.v, b.v, dir);
        mpfr_mul(a.v, a.v, b.v, dir);
        mpfr_set_d(b.v, u, MPFR_RNDN);
        mpfr_log(b.v, b.v, anti);
        mpfr_div(out, a.v, b.v, dir);
    };
    rhs(rhs_lo.v, MPFR_RNDD, MPFR_RNDU);
    rhs(rhs_hi.v, MPFR_RNDU, MPFR_RNDD);
    if (mpfr_less_p(lhs_hi.v, rhs_lo.v))
        return 1;
    if (mpfr_greaterequal_p(lhs_lo.v, rhs_hi.v))
        return -1;
    return 0;
}

} // namespace detail

/// Decides an EpsWindow by checking finitely many critical pairs.
///
/// For fixed prime content the left side is constant while the right side
/// decreases in u and increases in z. So on each piece the worst u is the
/// largest one with that content, u = p_i prime, and the worst z is the
/// smallest one, either z_lo itself or z -> p_j+ for a prime p_j in the
/// window (content then includes p_j). Checking (p_i, z) for every such pair
/// with u_min <= p_i < z covers all real (u, z). Pairs that double precision
/// cannot separate are re-decided at 256 bits.
inline EpsWindow verify_eps_window(EpsWindow w, const PrimeTable& table, unsigned threads = 1)
{
    if (w.u_min < 3 || w.z_lo < w.u_min || w.z_hi < w.z_lo)
        throw domain_error("verify_eps_window: need z_hi >= z_lo >= u_min >= 3");
    if (table.limit() < w.z_hi)
        throw resource_error("verify_eps_window: prime table below z_hi");
    if (w.q_excluded == 0)
        throw domain_error("verify_eps_window: q_excluded must be >= 1");

    const Bound eps = Bound::of_decimal(w.epsilon);
    if (eps.lo < 0)
        throw domain_error("verify_eps_window: epsilon must be >= 0");
    const Bound log1eps = log1p(eps);

    // prefix[i] = sum_{k < i} log(p_k / (p_k - 1)) over non-excluded primes
    const std::size_t n_all = table.lower_index(w.z_hi + 1);
    std::vector<Bound> prefix(n_all + 1, Bound(0.0));
    for (std::size_t i = 0; i < n_all; ++i) {
        const std::uint64_t p = table[i];
        Bound term(0.0);
        if (w.q_excluded % p != 0)
            term = log1p(Bound(1.0) / Bound(static_cast<double>(p - 1)));
        prefix[i + 1] = prefix[i] + term;
    }
    const std::size_t first_u = table.lower_index(w.u_min);
    std::vector<Bound> loglog_u(n_all);
    for (std::size_t i = first_u; i < n_all; ++i)
        loglog_u[i] = log(log(Bound(static_cast<double>(table[i]))));

    struct ZPoint {
        double z;
        std::size_t end; // content = primes with index < end
        std::uint64_t z_int;
        bool limit;
    };
    std::vector<ZPoint> zs;
    zs.push_back({static_cast<double>(w.z_lo), table.lower_index(w.z_lo), w.z_lo, false});
    for (std::size_t j = table.lower_index(w.z_lo); j < n_all && table[j] <= w.z_hi; ++j)
        zs.push_back({static_cast<double>(table[j]), j + 1, table[j], true});

    struct Failure {
        std::size_t zi;
        std::size_t ui;
    };
    std::vector<std::optional<Failure>> first_fail(threads == 0 ? 1 : threads);
    std::vector<std::uint64_t> checked(first_fail.size(), 0);

    auto work = [&](unsigned tid) {
        const unsigned nt = static_cast<unsigned>(first_fail.size());
        for (std::size_t zi = tid; zi < zs.size(); zi += nt) {
            const ZPoint& zp = zs[zi];
            const Bound llz = log(log(Bound(zp.z)));
            const Bound rhs_base = log1eps + llz;
            for (std::size_t ui = first_u; ui < zp.end; ++ui) {
                if (!zp.limit && static_cast<double>(table[ui]) >= zp.z)
                    break;
                ++checked[tid];
                const Bound lhs = prefix[zp.end] - prefix[ui];
                const Bound rhs = rhs_base - loglog_u[ui];
                if (lhs.hi < rhs.lo)
                    continue;
                const int sign = detail::eps_pair_sign_hp(ui, zp.end, zp.z, static_cast<double>(table[ui]),
                                                          w.epsilon, w.q_excluded, table);
                if (sign > 0)
                    continue;
                if (!first_fail[tid] || zi < first_fail[tid]->zi)
                    first_fail[tid] = Failure{zi, ui};
                break;
            }
            if (first_fail[tid])
                return; // later z indices of this thread cannot beat this one
        }
    };

    if (first_fail.size() == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < first_fail.size(); ++t)
            pool.emplace_back(work, t);
        for (auto& th : pool)
            th.join();
    }

    w.pairs_checked = 0;
    for (auto c : checked)
        w.pairs_checked += c;

    std::optional<Failure> fail;
    for (const auto& f : first_fail)
        if (f && (!fail || f->zi < fail->zi || (f->zi == fail->zi && f->ui < fail->ui)))
            fail = f;

    if (!fail) {
        w.status = EpsStatus::verified;
        w.witness.reset();
        return w;
    }

    // Undecided pairs count as failure to verify; report a concrete witness
    // where one exists.
    const ZPoint& zp = zs[fail->zi];
    const std::uint64_t u = table[fail->ui];
    EpsWitness wit{u, zp.z_int, zp.limit};
    if (zp.limit && zp.z_int + 1 <= w.z_hi) {
        // z = p_j + 1 has the same prime content (p_j + 1 is even, > 2)
        if (detail::eps_pair_sign_hp(fail->ui, zp.end, static_cast<double>(zp.z_int + 1), static_cast<double>(u),
                                     w.epsilon, w.q_excluded, table) < 0)
            wit = EpsWitness{u, zp.z_int + 1, false};
    }
    const bool decided = detail::eps_pair_sign_hp(fail->ui, zp.end, zp.z, static_cast<double>(u), w.epsilon,
                                                  w.q_excluded, table) < 0;
    w.status = decided ? EpsStatus::refuted : EpsStatus::pending;
    w.witness = wit;
    return w;
}

inline nlohmann::json to_json(const EpsWindow& w)
{
    nlohmann::json j = {{"z_lo", w.z_lo},
                        {"z_hi", w.z_hi},
                        {"u_min", w.u_min},
                        {"epsilon", w.epsilon},
                        {"q_excluded", w.q_excluded},
                        {"status", eps_status_name(w.status)},
                        {"pairs_checked", w.pairs_checked}};
    if (w.witness)
        j["witness"] = {{"u", w.witness->u}, {"z", w.witness->z}, {"z_limit_from_above", w.witness->z_limit}};
    else
        j["witness"] = nullptr;
    return j;
}

} // namespace gapforge

#endif
