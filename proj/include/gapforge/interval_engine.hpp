#ifndef GAPFORGE_INTERVAL_ENGINE_HPP
#define GAPFORGE_INTERVAL_ENGINE_HPP

// Batched search for a certified prime in every interval (k^a, (k+1)^a).
//
// A batch covers t consecutive intervals starting at n_start. One prime r
// just above (n_start + t)^(a/3) serves as the BLS helper for every
// candidate in the batch, and candidates are restricted to the progression
// 1 (mod m r), with m a product of small primes, after sieving out values
// with a prime factor <= B. Each interval then tests its own survivors in
// ascending order and falls back to the progression 1 (mod r) and finally to
// a plain scan if the progression runs dry.

#include "arith.hpp"
#include "bls.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gapforge {

struct planning_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Stage { ap_candidate, r_only, full_scan, failed };

inline const char* stage_name(Stage s)
{
    switch (s) {
    case Stage::ap_candidate:
        return "ap-candidate";
    case Stage::r_only:
        return "r-only";
    case Stage::full_scan:
        return "full-scan";
    case Stage::failed:
        return "failed";
    }
    return "failed";
}

inline Stage stage_from_name(const std::string& s)
{
    if (s == "ap-candidate")
        return Stage::ap_candidate;
    if (s == "r-only")
        return Stage::r_only;
    if (s == "full-scan")
        return Stage::full_scan;
    if (s == "failed")
        return Stage::failed;
    throw domain_error("unknown stage: " + s);
}

struct BatchPlan {
    Natural n_start;
    std::uint64_t t = 1;
    unsigned alpha = 3;
    Natural r;
    Natural m;
    std::vector<std::uint32_t> m_primes;
    std::uint64_t sieve_bound = 0;
    std::uint64_t candidate_budget = 0;
    bool relaxed = false; // density invariant waived (tiny n); stages still escalate

    Natural modulus() const { return m * r; }
};

struct VerifiedInterval {
    Natural n;
    Natural prime; // 0 when failed
    std::optional<PrimeCertificate> certificate;
    Stage stage = Stage::failed;
    std::uint64_t tests_used = 0;
};

inline constexpr std::uint64_t default_sieve_bound = 10'000;
inline constexpr unsigned default_prime_count_hint = 10;
inline constexpr std::uint64_t full_scan_trial_limit = 1'000'000;
inline constexpr int screen_rounds = 25;

namespace detail {

inline std::uint64_t budget_for(const Natural& top, unsigned alpha)
{
    const double v = alpha * std::log(top.get_d());
    return static_cast<std::uint64_t>(std::ceil(v));
}

inline std::vector<std::uint32_t> first_primes_skipping(unsigned j, const Natural& r)
{
    std::vector<std::uint32_t> out;
    std::uint32_t p = 2;
    while (out.size() < j) {
        if (r != p)
            out.push_back(p);
        p = static_cast<std::uint32_t>(next_prime_above(Natural(p)).get_ui());
    }
    return out;
}

inline Natural product(const std::vector<std::uint32_t>& ps)
{
    Natural m = 1;
    for (auto p : ps)
        m *= p;
    return m;
}

// Inverse of a modulo p (p prime, a != 0 mod p).
inline std::uint64_t inv_mod(std::uint64_t a, std::uint64_t p)
{
    std::int64_t t = 0, new_t = 1;
    std::int64_t r = static_cast<std::int64_t>(p), new_r = static_cast<std::int64_t>(a % p);
    while (new_r != 0) {
        const std::int64_t q = r / new_r;
        std::int64_t tmp = t - q * new_t;
        t = new_t;
        new_t = tmp;
        tmp = r - q * new_r;
        r = new_r;
        new_r = tmp;
    }
    if (t < 0)
        t += static_cast<std::int64_t>(p);
    return static_cast<std::uint64_t>(t);
}

} // namespace detail

inline BatchPlan plan_batch(const Natural& n_start, std::uint64_t t, unsigned alpha,
                            unsigned prime_count_hint = default_prime_count_hint,
                            std::uint64_t sieve_bound = default_sieve_bound)
{
    if (alpha < 2)
        throw planning_error("exponent must be an integer >= 2 (alpha > 3/2)");
    if (n_start < 2)
        throw planning_error("n_start must be >= 2");
    if (t < 1)
        throw planning_error("t must be >= 1");

    BatchPlan plan;
    plan.n_start = n_start;
    plan.t = t;
    plan.alpha = alpha;

    const Natural top = n_start + t;
    plan.r = next_prime_above(iroot_ceil(ipow(top, alpha), 3));
    plan.candidate_budget = detail::budget_for(top, alpha);

    // alpha n^(alpha-1) >= s m r, exactly
    const Natural supply = alpha * ipow(n_start, alpha - 1);
    auto primes = detail::first_primes_skipping(prime_count_hint, plan.r);
    for (;;) {
        const Natural m = detail::product(primes);
        if (supply >= Natural(plan.candidate_budget) * m * plan.r) {
            plan.m = m;
            plan.m_primes = primes;
            break;
        }
        if (primes.empty())
            throw planning_error("too few candidates: alpha n^(alpha-1)/r < s even with m = 1");
        primes.pop_back();
    }

    // B never reaches sqrt(n_start^alpha), so no candidate can equal a sieving prime.
    const Natural low_root = isqrt(ipow(n_start, alpha));
    std::uint64_t b = std::min<std::uint64_t>(sieve_bound, fits_u64(low_root) ? to_u64(low_root) : sieve_bound);
    if (!plan.m_primes.empty())
        b = std::max<std::uint64_t>(b, plan.m_primes.back());
    plan.sieve_bound = std::max<std::uint64_t>(b, 2);
    return plan;
}

// Degenerate single-interval plan (m = 1) for n where the density invariant
// cannot hold; the escalation stages carry correctness.
inline BatchPlan relaxed_plan(const Natural& n, unsigned alpha, std::uint64_t sieve_bound = default_sieve_bound)
{
    BatchPlan plan;
    plan.n_start = n;
    plan.t = 1;
    plan.alpha = alpha;
    plan.r = next_prime_above(iroot_ceil(ipow(n + 1, alpha), 3));
    plan.m = 1;
    plan.candidate_budget = detail::budget_for(n + 1, alpha);
    const Natural low_root = isqrt(ipow(n, alpha));
    plan.sieve_bound =
        std::max<std::uint64_t>(2, std::min<std::uint64_t>(sieve_bound, fits_u64(low_root) ? to_u64(low_root) : 2));
    plan.relaxed = true;
    return plan;
}

/// Values v = 1 (mod modulus) with lo < v < hi that have no prime factor
/// <= bound. Primes dividing `modulus` never divide such v and are skipped.
/// `table` must reach `bound`.
inline std::vector<Natural> sieve_progression(const Natural& lo, const Natural& hi, const Natural& modulus,
                                              std::uint64_t bound, const PrimeTable& table)
{
    if (table.limit() < bound)
        throw resource_error("sieve_progression: prime table below sieve bound");
    std::vector<Natural> out;
    if (hi < 2)
        return out;
    const Natural k0 = (lo - 1) / modulus + 1; // lo >= 1
    const Natural k_last = (hi - 2) / modulus;
    if (k_last < k0)
        return out;
    const Natural count_n = k_last - k0 + 1;
    if (!fits_u64(count_n))
        throw resource_error("sieve_progression: progression too long");
    const std::uint64_t count = to_u64(count_n);
    const Natural v0 = 1 + k0 * modulus;

    struct Striker {
        std::uint64_t p;
        std::uint64_t next; // next index to strike
    };
    std::vector<Striker> strikers;
    for (std::uint32_t p : table) {
        if (p > bound)
            break;
        const std::uint64_t mm = mpz_fdiv_ui(modulus.get_mpz_t(), p);
        if (mm == 0)
            continue;
        const std::uint64_t v0p = mpz_fdiv_ui(v0.get_mpz_t(), p);
        // v0 + i mm = 0 (mod p)
        const std::uint64_t first = (p - v0p) % p * detail::inv_mod(mm, p) % p;
        strikers.push_back({p, first});
    }

    constexpr std::uint64_t segment = 1 << 18;
    std::vector<char> alive(static_cast<std::size_t>(std::min(segment, count)));
    for (std::uint64_t base = 0; base < count; base += segment) {
        const std::uint64_t len = std::min(segment, count - base);
        std::fill(alive.begin(), alive.begin() + static_cast<std::ptrdiff_t>(len), 1);
        const std::uint64_t end = base + len;
        for (auto& s : strikers) {
            std::uint64_t i = s.next;
            for (; i < end; i += s.p)
                alive[i - base] = 0;
            s.next = i;
        }
        for (std::uint64_t i = 0; i < len; ++i)
            if (alive[i])
                out.push_back(v0 + Natural(from_u64(base + i)) * modulus);
    }
    return out;
}

inline std::vector<Natural> sieve_candidates(const BatchPlan& plan, const PrimeTable& table)
{
    const Natural lo = ipow(plan.n_start, plan.alpha);
    const Natural hi = ipow(plan.n_start + plan.t, plan.alpha);
    return sieve_progression(lo, hi, plan.modulus(), plan.sieve_bound, table);
}

namespace detail {

// Prime divisors of v - 1 usable as a BLS helper: trial division up to
// `limit`, plus the cofactor when it is provably prime.
inline std::optional<Natural> largest_helper_prime(const Natural& v, const PrimeTable& table, std::uint64_t limit)
{
    Natural rest = v - 1;
    std::optional<Natural> best;
    for (std::uint32_t p : table) {
        if (p > limit)
            break;
        if (Natural(p) * p > rest)
            break;
        if (mpz_divisible_ui_p(rest.get_mpz_t(), p)) {
            best = Natural(p);
            do
                mpz_divexact_ui(rest.get_mpz_t(), rest.get_mpz_t(), p);
            while (mpz_divisible_ui_p(rest.get_mpz_t(), p));
        }
    }
    if (rest > 1 && (rest < Natural(limit) * limit || is_prime_deterministic(rest)))
        best = rest; // larger than every factor found so far
    return best;
}

inline std::optional<PrimeCertificate> try_certify(const Natural& v, const Natural& r, std::uint64_t& tests)
{
    ++tests;
    if (!is_probable_prime(v, screen_rounds))
        return std::nullopt;
    auto outcome = bls_certify(v, r);
    if (auto* c = std::get_if<Certified>(&outcome))
        return std::move(c->cert);
    return std::nullopt;
}

} // namespace detail

/// Finds and certifies a prime in (k^alpha, (k+1)^alpha).
/// `survivors` is the ascending stage-1 pool of the batch; `table` must reach
/// max(plan.sieve_bound, 10^6) for the fallback stages.
inline VerifiedInterval find_prime_in_subinterval(const Natural& k, const BatchPlan& plan,
                                                  const std::vector<Natural>& survivors, const PrimeTable& table,
                                                  bool skip_progressions = false)
{
    if (k < plan.n_start || k >= plan.n_start + plan.t)
        throw domain_error("find_prime_in_subinterval: k outside batch");
    VerifiedInterval out;
    out.n = k;
    const Natural lo = ipow(k, plan.alpha);
    const Natural hi = ipow(k + 1, plan.alpha);
    const Natural mr = plan.modulus();

    if (!skip_progressions) {
        auto it = std::upper_bound(survivors.begin(), survivors.end(), lo);
        for (; it != survivors.end() && *it < hi; ++it) {
            if (auto cert = detail::try_certify(*it, plan.r, out.tests_used)) {
                out.prime = *it;
                out.certificate = std::move(cert);
                out.stage = Stage::ap_candidate;
                return out;
            }
        }

        // Stage 2: 1 (mod r) alone; members of 1 (mod m r) were already handled.
        for (const Natural& v : sieve_progression(lo, hi, plan.r, plan.sieve_bound, table)) {
            if (mpz_divisible_p(Natural(v - 1).get_mpz_t(), mr.get_mpz_t()) &&
                std::binary_search(survivors.begin(), survivors.end(), v))
                continue;
            if (auto cert = detail::try_certify(v, plan.r, out.tests_used)) {
                out.prime = v;
                out.certificate = std::move(cert);
                out.stage = Stage::r_only;
                return out;
            }
        }
    }

    // Stage 3: every odd integer, helper prime from v - 1.
    Natural v = lo + 1;
    if (mpz_even_p(v.get_mpz_t()))
        v += 1;
    for (; v < hi; v += 2) {
        bool small_factor = false;
        for (std::uint32_t p : table) {
            if (p > 97)
                break;
            if (v != p && mpz_divisible_ui_p(v.get_mpz_t(), p)) {
                small_factor = true;
                break;
            }
        }
        if (small_factor)
            continue;
        ++out.tests_used;
        if (!is_probable_prime(v, screen_rounds))
            continue;
        const auto helper = detail::largest_helper_prime(v, table, full_scan_trial_limit);
        if (!helper || ipow(*helper, 3) <= v)
            continue;
        auto outcome = bls_certify(v, *helper);
        if (auto* c = std::get_if<Certified>(&outcome)) {
            out.prime = v;
            out.certificate = std::move(c->cert);
            out.stage = Stage::full_scan;
            return out;
        }
    }
    out.prime = 0;
    out.stage = Stage::failed;
    return out;
}

struct EngineConfig {
    unsigned alpha = 3;
    std::uint64_t t = 0; // 0 = automatic
    unsigned prime_count_hint = default_prime_count_hint;
    std::uint64_t sieve_bound = default_sieve_bound;
};

inline constexpr std::uint64_t auto_t_cap = 2048;
inline constexpr std::uint64_t small_n_floor = 10;

// Batch length starting at n: roughly n/64 so r stays within ~2% of
// n^(alpha/3), capped to keep one batch's progression near 2^20 entries.
inline std::uint64_t batch_length(const Natural& n, const EngineConfig& cfg)
{
    if (cfg.t > 0)
        return cfg.t;
    const Natural q = n / 64;
    const std::uint64_t t = fits_u64(q) ? to_u64(q) : auto_t_cap;
    return std::clamp<std::uint64_t>(t, 1, auto_t_cap);
}

/// Table of primes shared by all batches: reaches the sieve bound and the
/// full-scan trial division limit.
inline PrimeTable engine_table(const EngineConfig& cfg)
{
    return primes_up_to(std::max<std::uint64_t>(cfg.sieve_bound, full_scan_trial_limit));
}

// Verifies intervals n_start .. n_start + t - 1.
inline std::vector<VerifiedInterval> verify_batch(const Natural& n_start, std::uint64_t t, const EngineConfig& cfg,
                                                  const PrimeTable& table)
{
    std::vector<VerifiedInterval> out;
    out.reserve(static_cast<std::size_t>(t));
    Natural k = n_start;
    Natural end = n_start + t;

    while (k < end && k < small_n_floor) {
        BatchPlan p = relaxed_plan(k, cfg.alpha, cfg.sieve_bound);
        out.push_back(find_prime_in_subinterval(k, p, {}, table, true));
        k += 1;
    }
    if (k >= end)
        return out;

    const std::uint64_t rest = to_u64(Natural(end - k));
    std::optional<BatchPlan> plan;
    std::uint64_t tt = rest;
    while (!plan) {
        try {
            plan = plan_batch(k, tt, cfg.alpha, cfg.prime_count_hint, cfg.sieve_bound);
        } catch (const planning_error&) {
            if (tt == 1)
                break;
            tt = std::max<std::uint64_t>(1, tt / 2);
        }
    }
    if (!plan) {
        // nothing plans even for one interval: relaxed plans one at a time
        for (; k < end; k += 1) {
            BatchPlan p = relaxed_plan(k, cfg.alpha, cfg.sieve_bound);
            const auto pool = sieve_candidates(p, table);
            out.push_back(find_prime_in_subinterval(k, p, pool, table));
        }
        return out;
    }
    const auto pool = sieve_candidates(*plan, table);
    for (std::uint64_t i = 0; i < plan->t; ++i, k += 1)
        out.push_back(find_prime_in_subinterval(k, *plan, pool, table));
    if (k < end) {
        auto tail = verify_batch(k, to_u64(Natural(end - k)), cfg, table);
        for (auto& v : tail)
            out.push_back(std::move(v));
    }
    return out;
}

} // namespace gapforge

#endif
