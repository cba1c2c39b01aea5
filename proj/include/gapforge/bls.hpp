#ifndef GAPFORGE_BLS_HPP
#define GAPFORGE_BLS_HPP

// Cube-root Brillhart-Lehmer-Selfridge certificates.
//
// Given odd n and a prime r with r | n - 1 and r^3 > n, a base a with
//   a^(n-1) = 1 (mod n)  and  gcd(a^((n-1)/r) - 1, n) = 1
// forces every prime factor of n to be 1 (mod r). Because r^3 > n there are
// at most two of them, n = (x r + 1)(y r + 1) with 1 <= x <= y. Writing
// Q = (n - 1)/r = x y r + (x + y) and using x y < r, x + y <= r, the pair
// (x + y, x y) is (c1 + j r, c2 - j) for j in {0, 1}, where c1 = Q mod r and
// c2 = Q div r. Each branch is a quadratic; any root pair is confirmed by
// multiplying the factors back out, so a certificate is only issued once
// both branches are shown not to factor n.

#include "arith.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace gapforge {

struct BranchCheck {
    int j = 0;
    Natural s;  // candidate x + y
    Natural p2; // candidate x * y (may be -1 when c2 = 0, j = 1)
    bool square = false;

    friend bool operator==(const BranchCheck&, const BranchCheck&) = default;
};

struct PrimeCertificate {
    Natural n;
    Natural r;
    Natural witness;
    Natural quotient;
    std::vector<BranchCheck> branches;

    friend bool operator==(const PrimeCertificate&, const PrimeCertificate&) = default;
};

struct Certified {
    PrimeCertificate cert;
};

struct CompositeWithFactors {
    Natural f1;
    Natural f2;
};

struct Unproven {
    std::string reason;
};

using CertifyOutcome = std::variant<Certified, CompositeWithFactors, Unproven>;

struct BranchAnalysis {
    std::vector<BranchCheck> branches;
    std::optional<std::pair<Natural, Natural>> factors; // f1 <= f2, f1 * f2 = n
};

inline constexpr int default_witness_limit = 64;

// Runs both quadratic branches for n with helper r (no witness needed).
inline BranchAnalysis solve_branches(const Natural& n, const Natural& r)
{
    BranchAnalysis out;
    const Natural q = (n - 1) / r;
    Natural c1, c2;
    mpz_fdiv_qr(c2.get_mpz_t(), c1.get_mpz_t(), q.get_mpz_t(), r.get_mpz_t());
    for (int j = 0; j <= 1; ++j) {
        BranchCheck b;
        b.j = j;
        b.s = c1 + j * r;
        b.p2 = c2 - j;
        const Natural disc = b.s * b.s - 4 * b.p2;
        const auto root = is_perfect_square(disc);
        b.square = root.has_value();
        if (root && !out.factors) {
            const Natural twice_x = b.s - *root;
            const Natural twice_y = b.s + *root;
            if (mpz_even_p(twice_x.get_mpz_t()) && twice_x >= 2) {
                const Natural x = twice_x / 2;
                const Natural y = twice_y / 2;
                const Natural f1 = x * r + 1;
                const Natural f2 = y * r + 1;
                if (f1 * f2 == n)
                    out.factors = std::make_pair(f1, f2);
            }
        }
        out.branches.push_back(std::move(b));
    }
    return out;
}

namespace detail {

inline void check_bls_preconditions(const Natural& n, const Natural& r)
{
    if (n < 3 || mpz_even_p(n.get_mpz_t()))
        throw domain_error("bls_certify: n must be odd and >= 3");
    if (!is_prime_deterministic(r))
        throw domain_error("bls_certify: r is not prime");
    if (!mpz_divisible_p(Natural(n - 1).get_mpz_t(), r.get_mpz_t()))
        throw domain_error("bls_certify: r does not divide n - 1");
    if (ipow(r, 3) <= n)
        throw domain_error("bls_certify: r^3 <= n");
}

// Both witness congruences for base a.
inline bool witness_holds(const Natural& n, const Natural& r, const Natural& a)
{
    if (a < 2 || a >= n)
        return false;
    const Natural partial = pow_mod(a, (n - 1) / r, n);
    if (pow_mod(partial, r, n) != 1)
        return false;
    Natural g;
    const Natural t = partial - 1;
    mpz_gcd(g.get_mpz_t(), t.get_mpz_t(), n.get_mpz_t());
    return g == 1;
}

} // namespace detail

inline CertifyOutcome bls_certify(const Natural& n, const Natural& r, int witness_limit = default_witness_limit)
{
    detail::check_bls_preconditions(n, r);

    std::optional<Natural> witness;
    for (long a = 2; a <= witness_limit && Natural(a) < n; ++a) {
        if (detail::witness_holds(n, r, Natural(a))) {
            witness = Natural(a);
            break;
        }
    }
    if (!witness)
        return Unproven{"no witness a <= " + std::to_string(witness_limit)};

    BranchAnalysis br = solve_branches(n, r);
    if (br.factors)
        return CompositeWithFactors{br.factors->first, br.factors->second};

    PrimeCertificate cert;
    cert.n = n;
    cert.r = r;
    cert.witness = *witness;
    cert.quotient = (n - 1) / r;
    cert.branches = std::move(br.branches);
    return Certified{std::move(cert)};
}

// Recomputes every certificate invariant from scratch; never throws.
inline bool verify_certificate(const PrimeCertificate& c) noexcept
{
    try {
        if (c.n < 3 || mpz_even_p(c.n.get_mpz_t()))
            return false;
        if (c.r < 2 || !is_prime_deterministic(c.r))
            return false;
        if (!mpz_divisible_p(Natural(c.n - 1).get_mpz_t(), c.r.get_mpz_t()))
            return false;
        if (ipow(c.r, 3) <= c.n)
            return false;
        if (c.quotient * c.r + 1 != c.n)
            return false;
        if (!detail::witness_holds(c.n, c.r, c.witness))
            return false;
        const BranchAnalysis br = solve_branches(c.n, c.r);
        if (br.factors)
            return false;
        return br.branches == c.branches;
    } catch (...) {
        return false;
    }
}

inline nlohmann::json to_json(const PrimeCertificate& c)
{
    nlohmann::json branches = nlohmann::json::array();
    for (const auto& b : c.branches)
        branches.push_back({{"j", b.j}, {"s", to_decimal(b.s)}, {"p2", to_decimal(b.p2)}, {"square", b.square}});
    return {{"n", to_decimal(c.n)},
            {"r", to_decimal(c.r)},
            {"witness", to_decimal(c.witness)},
            {"quotient", to_decimal(c.quotient)},
            {"branches", std::move(branches)}};
}

// Throws domain_error on any structural problem.
inline PrimeCertificate certificate_from_json(const nlohmann::json& j)
{
    try {
        PrimeCertificate c;
        c.n = from_decimal(j.at("n").get<std::string>());
        c.r = from_decimal(j.at("r").get<std::string>());
        c.witness = from_decimal(j.at("witness").get<std::string>());
        c.quotient = from_decimal(j.at("quotient").get<std::string>());
        for (const auto& b : j.at("branches")) {
            BranchCheck bc;
            bc.j = b.at("j").get<int>();
            bc.s = from_decimal(b.at("s").get<std::string>());
            bc.p2 = from_decimal(b.at("p2").get<std::string>());
            bc.square = b.at("square").get<bool>();
            c.branches.push_back(std::move(bc));
        }
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw domain_error(std::string("malformed certificate: ") + e.what());
    }
}

} // namespace gapforge

#endif
