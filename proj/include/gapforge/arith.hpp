#ifndef GAPFORGE_ARITH_HPP
#define GAPFORGE_ARITH_HPP

// Exact integer arithmetic, strong-pseudoprime screening and prime tables.
//
// Natural is GMP's mpz_class. Everything here is a pure function of its
// arguments; PrimeTable is immutable once built and may be shared freely
// between threads.

#include <gmpxx.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace gapforge {

using Natural = mpz_class;

struct domain_error : std::domain_error {
    using std::domain_error::domain_error;
};

struct resource_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr std::uint64_t default_seed = 0x9e3779b97f4a7c15ULL;

inline bool fits_u64(const Natural& n) { return mpz_sizeinbase(n.get_mpz_t(), 2) <= 64 && n >= 0; }

inline std::uint64_t to_u64(const Natural& n)
{
    std::uint64_t out = 0;
    mpz_export(&out, nullptr, -1, sizeof(out), 0, 0, n.get_mpz_t());
    return out;
}

inline Natural from_u64(std::uint64_t v)
{
    Natural out;
    mpz_import(out.get_mpz_t(), 1, -1, sizeof(v), 0, 0, &v);
    return out;
}

inline std::string to_decimal(const Natural& n) { return n.get_str(10); }

// Strict decimal parse: optional leading '-', digits only.
inline Natural from_decimal(const std::string& s)
{
    if (s.empty())
        throw domain_error("empty integer literal");
    std::size_t i = (s[0] == '-') ? 1 : 0;
    if (i == s.size())
        throw domain_error("bad integer literal: " + s);
    for (std::size_t k = i; k < s.size(); ++k)
        if (s[k] < '0' || s[k] > '9')
            throw domain_error("bad integer literal: " + s);
    return Natural(s, 10);
}

namespace detail {

inline std::uint64_t mulmod64(std::uint64_t a, std::uint64_t b, std::uint64_t m)
{
    return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % m);
}

inline std::uint64_t powmod64(std::uint64_t b, std::uint64_t e, std::uint64_t m)
{
    std::uint64_t r = 1 % m;
    b %= m;
    while (e) {
        if (e & 1)
            r = mulmod64(r, b, m);
        b = mulmod64(b, b, m);
        e >>= 1;
    }
    return r;
}

// One strong-pseudoprime round for odd n > 3, n - 1 = d * 2^s.
inline bool sprp64(std::uint64_t n, std::uint64_t a, std::uint64_t d, unsigned s)
{
    a %= n;
    if (a == 0)
        return true;
    std::uint64_t x = powmod64(a, d, n);
    if (x == 1 || x == n - 1)
        return true;
    for (unsigned i = 1; i < s; ++i) {
        x = mulmod64(x, x, n);
        if (x == n - 1)
            return true;
        if (x == 1)
            return false;
    }
    return false;
}

inline bool sprp(const Natural& n, const Natural& a_in, const Natural& d, unsigned long s)
{
    const Natural nm1 = n - 1;
    Natural a = a_in % n;
    if (a == 0)
        return true;
    Natural x;
    mpz_powm(x.get_mpz_t(), a.get_mpz_t(), d.get_mpz_t(), n.get_mpz_t());
    if (x == 1 || x == nm1)
        return true;
    for (unsigned long i = 1; i < s; ++i) {
        x = x * x % n;
        if (x == nm1)
            return true;
        if (x == 1)
            return false;
    }
    return false;
}

inline constexpr std::array<unsigned, 13> mr_bases{2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41};

// Smallest strong pseudoprime to all of the first k prime bases (k = 1..13).
inline const std::array<Natural, 13>& mr_thresholds()
{
    static const std::array<Natural, 13> t{
        Natural("2047"),
        Natural("1373653"),
        Natural("25326001"),
        Natural("3215031751"),
        Natural("2152302898747"),
        Natural("3474749660383"),
        Natural("341550071728321"),
        Natural("341550071728321"),
        Natural("3825123056546413051"),
        Natural("3825123056546413051"),
        Natural("3825123056546413051"),
        Natural("318665857834031151167461"),
        Natural("3317044064679887385961981"),
    };
    return t;
}

} // namespace detail

// base^exp mod modulus.
inline Natural pow_mod(const Natural& base, const Natural& exp, const Natural& modulus)
{
    if (modulus < 2)
        throw domain_error("pow_mod: modulus must be >= 2");
    if (exp < 0)
        throw domain_error("pow_mod: negative exponent");
    Natural b = base % modulus;
    if (b < 0)
        b += modulus;
    Natural r;
    mpz_powm(r.get_mpz_t(), b.get_mpz_t(), exp.get_mpz_t(), modulus.get_mpz_t());
    return r;
}

/// Miller-Rabin screen with `rounds` bases.
///
/// Below 3317044064679887385961981 the bases are the first min(rounds, 13)
/// primes, which is a proof of primality once n is below the matching
/// published threshold (13 bases cover the whole range). Above it, base 2 is
/// followed by rounds - 1 bases drawn from a generator seeded by (seed, n), so
/// the answer is reproducible. A false return is always a proof of
/// compositeness.
inline bool is_probable_prime(const Natural& n, int rounds, std::uint64_t seed = default_seed)
{
    if (rounds < 1)
        throw domain_error("is_probable_prime: rounds must be >= 1");
    if (n < 2)
        return false;
    // below 43^2 trial division by the bases is exact
    if (n < 43 * 43) {
        for (unsigned p : detail::mr_bases) {
            if (n == p)
                return true;
            if (mpz_divisible_ui_p(n.get_mpz_t(), p))
                return false;
        }
        return true;
    }
    if (mpz_even_p(n.get_mpz_t()))
        return false;

    const int fixed = std::min(rounds, 13);
    if (fits_u64(n)) {
        const std::uint64_t v = to_u64(n);
        std::uint64_t d = v - 1;
        unsigned s = 0;
        while ((d & 1) == 0) {
            d >>= 1;
            ++s;
        }
        for (int i = 0; i < fixed; ++i)
            if (!detail::sprp64(v, detail::mr_bases[i], d, s))
                return false;
        return true;
    }

    Natural d = n - 1;
    const unsigned long s = mpz_scan1(d.get_mpz_t(), 0);
    mpz_fdiv_q_2exp(d.get_mpz_t(), d.get_mpz_t(), s);

    if (n < detail::mr_thresholds()[12]) {
        for (int i = 0; i < fixed; ++i)
            if (!detail::sprp(n, detail::mr_bases[i], d, s))
                return false;
        return true;
    }

    if (!detail::sprp(n, 2, d, s))
        return false;
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(mpz_fdiv_ui(n.get_mpz_t(), 4294967291UL)),
                      static_cast<std::uint32_t>(mpz_sizeinbase(n.get_mpz_t(), 2))};
    gmp_randclass rng(gmp_randinit_default);
    std::mt19937_64 gen(seq);
    rng.seed(gen());
    const Natural span = n - 3; // bases in [2, n - 2]
    for (int i = 1; i < rounds; ++i) {
        Natural a = rng.get_z_range(span) + 2;
        if (!detail::sprp(n, a, d, s))
            return false;
    }
    return true;
}

// Deterministic answer for n < 3317044064679887385961981.
inline bool is_prime_deterministic(const Natural& n) { return is_probable_prime(n, 13); }

inline Natural isqrt(const Natural& n)
{
    if (n < 0)
        throw domain_error("isqrt of negative value");
    Natural r;
    mpz_sqrt(r.get_mpz_t(), n.get_mpz_t());
    // r^2 <= n < (r+1)^2 exactly
    if (r * r > n || (r + 1) * (r + 1) <= n)
        throw std::logic_error("isqrt verification failed");
    return r;
}

inline std::optional<Natural> is_perfect_square(const Natural& n)
{
    if (n < 0)
        return std::nullopt;
    Natural r = isqrt(n);
    if (r * r == n)
        return r;
    return std::nullopt;
}

// floor(n^(1/k)) and the smallest c with c^k >= n.
inline Natural iroot_floor(const Natural& n, unsigned long k)
{
    Natural r;
    mpz_root(r.get_mpz_t(), n.get_mpz_t(), k);
    return r;
}

inline Natural iroot_ceil(const Natural& n, unsigned long k)
{
    Natural r = iroot_floor(n, k);
    Natural p;
    mpz_pow_ui(p.get_mpz_t(), r.get_mpz_t(), k);
    if (p < n)
        r += 1;
    return r;
}

inline Natural ipow(const Natural& b, unsigned long e)
{
    Natural r;
    mpz_pow_ui(r.get_mpz_t(), b.get_mpz_t(), e);
    return r;
}

// Smallest prime strictly greater than x.
inline Natural next_prime_above(const Natural& x, std::uint64_t seed = default_seed)
{
    if (x < 2)
        return 2;
    Natural c = x + 1;
    if (c == 3)
        return 3;
    if (mpz_even_p(c.get_mpz_t()))
        c += 1;
    while (!is_probable_prime(c, 25, seed))
        c += 2;
    return c;
}

class PrimeTable {
public:
    PrimeTable() = default;
    PrimeTable(std::uint64_t limit, std::vector<std::uint32_t> primes)
        : limit_(limit), primes_(std::move(primes))
    {
    }

    std::uint64_t limit() const { return limit_; }
    const std::vector<std::uint32_t>& primes() const { return primes_; }
    std::size_t size() const { return primes_.size(); }
    std::uint32_t operator[](std::size_t i) const { return primes_[i]; }
    auto begin() const { return primes_.begin(); }
    auto end() const { return primes_.end(); }

    // pi(x) for x <= limit
    std::size_t count_upto(std::uint64_t x) const
    {
        if (x > limit_)
            throw resource_error("PrimeTable: query beyond table limit");
        return static_cast<std::size_t>(std::upper_bound(primes_.begin(), primes_.end(), x) - primes_.begin());
    }

    // index of the first prime >= x
    std::size_t lower_index(std::uint64_t x) const
    {
        return static_cast<std::size_t>(std::lower_bound(primes_.begin(), primes_.end(), x) - primes_.begin());
    }

    bool contains(std::uint64_t x) const { return std::binary_search(primes_.begin(), primes_.end(), x); }

private:
    std::uint64_t limit_ = 0;
    std::vector<std::uint32_t> primes_;
};

inline constexpr std::uint64_t prime_table_cap = 4'000'000'000ULL;

// Segmented odds-only sieve of Eratosthenes.
inline PrimeTable primes_up_to(std::uint64_t limit)
{
    if (limit < 2)
        throw domain_error("primes_up_to: limit must be >= 2");
    if (limit > prime_table_cap)
        throw resource_error("primes_up_to: limit above cap of 4e9");

    std::vector<std::uint32_t> out;
    if (limit >= 100)
        out.reserve(static_cast<std::size_t>(1.1 * limit / std::log(static_cast<double>(limit))) + 16);
    out.push_back(2);

    std::uint64_t root = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(limit)));
    while (root * root > limit)
        --root;
    while ((root + 1) * (root + 1) <= limit)
        ++root;

    std::vector<char> small(root + 1, 1);
    std::vector<std::uint64_t> base;
    for (std::uint64_t i = 3; i <= root; i += 2) {
        if (!small[i])
            continue;
        base.push_back(i);
        for (std::uint64_t j = i * i; j <= root; j += 2 * i)
            small[j] = 0;
    }

    // segment holds odd numbers low, low+2, ..., one byte each
    constexpr std::uint64_t seg_odds = 1 << 18;
    std::vector<char> seg(seg_odds);
    std::vector<std::uint64_t> next(base.size());
    for (std::size_t k = 0; k < base.size(); ++k)
        next[k] = base[k] * base[k];

    for (std::uint64_t low = 3; low <= limit; low += 2 * seg_odds) {
        const std::uint64_t high = std::min(limit, low + 2 * seg_odds - 1);
        std::fill(seg.begin(), seg.end(), 1);
        for (std::size_t k = 0; k < base.size(); ++k) {
            const std::uint64_t p = base[k];
            if (p * p > high)
                break;
            std::uint64_t j = next[k];
            for (; j <= high; j += 2 * p)
                seg[(j - low) >> 1] = 0;
            next[k] = j;
        }
        for (std::uint64_t v = low; v <= high; v += 2)
            if (seg[(v - low) >> 1])
                out.push_back(static_cast<std::uint32_t>(v));
    }
    return PrimeTable(limit, std::move(out));
}

} // namespace gapforge

#endif
