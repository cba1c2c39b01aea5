#include "gapforge/arith.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <random>

using namespace gapforge;

namespace {

bool trial_prime(std::uint64_t n)
{
    if (n < 2)
        return false;
    for (std::uint64_t d = 2; d * d <= n; ++d)
        if (n % d == 0)
            return false;
    return true;
}

std::vector<bool> eratosthenes(std::size_t limit)
{
    std::vector<bool> is(limit + 1, true);
    is[0] = false;
    if (limit >= 1)
        is[1] = false;
    for (std::size_t i = 2; i * i <= limit; ++i)
        if (is[i])
            for (std::size_t j = i * i; j <= limit; j += i)
                is[j] = false;
    return is;
}

} // namespace

TEST_CASE("pow_mod examples")
{
    CHECK(pow_mod(3, 4, 5) == 1);
    CHECK(pow_mod(2, 22, 23) == 1);
    std::uint64_t ladder = 1;
    for (int i = 0; i < 1540; ++i)
        ladder = ladder * 2 % 1541;
    CHECK(pow_mod(2, 1540, 1541) == ladder);
    CHECK(pow_mod(2, 1540, 1541) != 1);
    CHECK_THROWS_AS(pow_mod(2, 3, 1), domain_error);
    CHECK_THROWS_AS(pow_mod(2, 3, 0), domain_error);
}

TEST_CASE("pow_mod agrees with repeated multiplication")
{
    for (unsigned m = 2; m <= 1000; m += 7)
        for (unsigned a = 0; a <= 1000; a += 13)
            for (unsigned e = 0; e <= 1000; e += 17) {
                std::uint64_t r = 1 % m;
                for (unsigned i = 0; i < e; ++i)
                    r = r * a % m;
                REQUIRE(pow_mod(a, e, m) == r);
            }
}

TEST_CASE("is_probable_prime examples")
{
    CHECK_FALSE(is_probable_prime(0, 20));
    CHECK_FALSE(is_probable_prime(1, 20));
    CHECK(is_probable_prime(97, 20));
    CHECK(2047 == 23 * 89);
    CHECK(is_probable_prime(2047, 1));
    CHECK_FALSE(is_probable_prime(2047, 2));
    CHECK_FALSE(is_probable_prime(2047, 20));
    CHECK_THROWS_AS(is_probable_prime(7, 0), domain_error);
}

TEST_CASE("is_probable_prime agrees with a sieve below 1e6")
{
    const auto is = eratosthenes(1'000'000);
    for (std::uint64_t n = 0; n <= 1'000'000; ++n)
        REQUIRE(is_probable_prime(from_u64(n), 20) == is[n]);
}

TEST_CASE("strong pseudoprimes to many bases are rejected")
{
    // 3825123056546413051 is a strong pseudoprime to bases 2..23
    CHECK_FALSE(is_prime_deterministic(Natural("3825123056546413051")));
    // 318665857834031151167461 = 399165290221 * 798330580441 fools bases 2..37
    CHECK_FALSE(is_prime_deterministic(Natural("318665857834031151167461")));
    CHECK(is_prime_deterministic(Natural("18446744073709551557")));
    // Mersenne prime 2^127 - 1 lies above every deterministic threshold
    CHECK(is_probable_prime(ipow(2, 127) - 1, 25));
    CHECK_FALSE(is_probable_prime(ipow(2, 127) + 1, 25));
}

TEST_CASE("is_perfect_square")
{
    CHECK(is_perfect_square(0) == Natural(0));
    CHECK(is_perfect_square(4) == Natural(2));
    CHECK_FALSE(is_perfect_square(2047));
    CHECK_FALSE(is_perfect_square(-4));
    for (std::uint64_t n = 0; n <= 1'000'000; ++n) {
        std::uint64_t r = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(n)));
        while (r * r > n)
            --r;
        while ((r + 1) * (r + 1) <= n)
            ++r;
        const auto got = is_perfect_square(from_u64(n));
        REQUIRE(got.has_value() == (r * r == n));
        if (got)
            REQUIRE(*got == from_u64(r));
    }
    gmp_randclass rng(gmp_randinit_default);
    rng.seed(12345);
    for (int i = 0; i < 1000; ++i) {
        const Natural v = rng.get_z_bits(128);
        const Natural r = isqrt(v);
        REQUIRE(r * r <= v);
        REQUIRE((r + 1) * (r + 1) > v);
        REQUIRE(is_perfect_square(v).has_value() == (r * r == v));
        REQUIRE(is_perfect_square(v * v) == v);
    }
}

TEST_CASE("integer roots")
{
    CHECK(iroot_floor(26, 3) == 2);
    CHECK(iroot_floor(27, 3) == 3);
    CHECK(iroot_ceil(27, 3) == 3);
    CHECK(iroot_ceil(28, 3) == 4);
    const Natural big = ipow(10, 40);
    CHECK(iroot_floor(big, 5) == ipow(10, 8));
    CHECK(iroot_ceil(big + 1, 5) == ipow(10, 8) + 1);
}

TEST_CASE("next_prime_above")
{
    CHECK(next_prime_above(0) == 2);
    CHECK(next_prime_above(1) == 2);
    CHECK(next_prime_above(2) == 3);
    CHECK(next_prime_above(10) == 11);
    CHECK(next_prime_above(11) == 13);
    CHECK(next_prime_above(110) == 113);
    std::mt19937_64 rng(7);
    for (int i = 0; i < 300; ++i) {
        const std::uint64_t x = rng() % 10'000'000;
        const std::uint64_t p = to_u64(next_prime_above(from_u64(x)));
        REQUIRE(p > x);
        REQUIRE(trial_prime(p));
        for (std::uint64_t v = x + 1; v < p; ++v)
            REQUIRE_FALSE(trial_prime(v));
    }
}

TEST_CASE("primes_up_to")
{
    CHECK(primes_up_to(10).primes() == std::vector<std::uint32_t>{2, 3, 5, 7});
    CHECK(primes_up_to(100).size() == 25);
    CHECK(primes_up_to(2).primes() == std::vector<std::uint32_t>{2});
    CHECK(primes_up_to(3).size() == 2);
    CHECK_THROWS_AS(primes_up_to(1), domain_error);
    CHECK_THROWS_AS(primes_up_to(prime_table_cap + 1), resource_error);

    const std::size_t lim = 3'000'000;
    const auto is = eratosthenes(lim);
    const PrimeTable t = primes_up_to(lim);
    std::vector<std::uint32_t> expect;
    for (std::size_t i = 0; i <= lim; ++i)
        if (is[i])
            expect.push_back(static_cast<std::uint32_t>(i));
    CHECK(t.primes() == expect);
    CHECK(t.count_upto(1'000'000) == 78498);
    CHECK(t.contains(2999999) == is[2999999]);
}

TEST_CASE("primes_up_to reaches 1e8")
{
    const PrimeTable t = primes_up_to(100'000'000);
    CHECK(t.size() == 5761455);
    CHECK(t.primes().back() == 99999989u);
}

TEST_CASE("decimal conversion")
{
    CHECK(from_decimal("12345678901234567890123") == Natural("12345678901234567890123"));
    CHECK(to_decimal(Natural("-17")) == "-17");
    CHECK_THROWS_AS(from_decimal(""), domain_error);
    CHECK_THROWS_AS(from_decimal("12a"), domain_error);
    CHECK_THROWS_AS(from_decimal("+5"), domain_error);
}
