#pragma once

/*
 * Elementary multiplicative number theory shared by every other module:
 * factorization, unitary divisors, quadratic symbols, the order of
 * PSL2(Z/nZ), square-root counting modulo prime powers, and the
 * logarithmic integral li(x) = int_2^x dt/log t.
 *
 * Exact quantities use boost::multiprecision (cpp_int / cpp_rational);
 * floating point only appears where an integral or an infinite product
 * over primes is inherently involved.
 */

#include <cstdint>
#include <stdexcept>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace cnsum {

using Int = boost::multiprecision::cpp_int;
using Rat = boost::multiprecision::cpp_rational;

struct PrimePower {
    uint64_t p;
    uint32_t e;
    friend bool operator==(const PrimePower&, const PrimePower&) = default;
};

// Pairs (p, e) sorted by increasing p, exponents >= 1; the empty vector is n = 1.
using Factorization = std::vector<PrimePower>;

namespace arith {

// Trial division; intended for inputs up to ~10^12. Rejects n = 0.
Factorization factorize(uint64_t n);
uint64_t unfactorize(const Factorization& f);

int moebius(uint64_t m);
int omega(uint64_t m);

// Largest divisor of n coprime to m ("n_m" notation).
uint64_t coprime_part(uint64_t n, uint64_t m);

// m || n : m | n and gcd(m, n/m) = 1.
bool is_unitary_divisor(uint64_t m, uint64_t n);

bool is_prime(uint64_t n);

// (a/p) for odd prime p; rejects p = 2 and composite p.
int legendre_symbol(int64_t a, uint64_t p);

// Kronecker symbol (a/n), n >= 1.
int kronecker_symbol(long long a, unsigned long long n);

// #Z_{p^r}^(2) = #(units mod squares) = #{x : x^2 = 1 mod p^r}:
// 1 for p^r = 2, 2 for p^r = 4 or odd p, 4 for p = 2, r >= 3.
int sq_class_count(uint64_t p, uint32_t r);

// v(n) = #PSL2(Z_n) = prod_{p^r || n} p^{3r-2}(p^2-1) / #Z_{p^r}^(2); v(1) = 1.
Int psl2_order(uint64_t n);
Int psl2_order_pp(uint64_t p, uint32_t r);

// #{x in Z_{p^m} : x^2 = a (mod p^m)}.
uint64_t sqrt_count_pp(uint64_t p, uint32_t m, uint64_t a);

// li(x) = int_2^x dt/log t, adaptive Simpson, abs error <= 1e-10
// (relative 1e-13 for large arguments). Rejects x < 2.
double log_integral(double x);

// Shared sieves.
std::vector<uint32_t> primes_below(uint32_t bound);

// Smallest-prime-factor sieve; spf[i] = least prime factor of i (spf[1] = 1).
class SpfSieve {
  public:
    explicit SpfSieve(uint32_t bound);
    uint32_t bound() const { return static_cast<uint32_t>(spf_.size()) - 1; }
    Factorization factorize(uint64_t n) const;  // requires n <= bound
    uint32_t spf(uint32_t n) const { return spf_[n]; }

  private:
    std::vector<uint32_t> spf_;
};

uint64_t mulmod(uint64_t a, uint64_t b, uint64_t m);
uint64_t powmod(uint64_t a, uint64_t e, uint64_t m);
uint64_t gcd3(uint64_t a, uint64_t b, uint64_t c);

// floor(sqrt(n)) and exact square test for 64-bit n.
uint64_t isqrt64(uint64_t n);
bool is_square64(uint64_t n, uint64_t* root = nullptr);

inline uint64_t ipow(uint64_t b, uint32_t e) {
    uint64_t r = 1;
    while (e--) r *= b;
    return r;
}

}  // namespace arith
}  // namespace cnsum
