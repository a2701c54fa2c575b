#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "cnsum/arith.hpp"

using namespace cnsum;
using namespace cnsum::arith;

TEST_CASE("factorize basics") {
    CHECK(factorize(1).empty());
    CHECK(factorize(12) == Factorization{{2, 2}, {3, 1}});
    CHECK(factorize(7500) == Factorization{{2, 2}, {3, 1}, {5, 4}});
    CHECK_THROWS_AS(factorize(0), std::invalid_argument);
    // product of prime powers reconstructs the input; parts are prime
    std::mt19937_64 rng(5);
    for (int i = 0; i < 200; ++i) {
        uint64_t n = rng() % 1000000000 + 1;
        auto f = factorize(n);
        CHECK(unfactorize(f) == n);
        for (auto& [p, e] : f) CHECK(is_prime(p));
        for (size_t j = 1; j < f.size(); ++j) CHECK(f[j - 1].p < f[j].p);
    }
}

TEST_CASE("moebius and omega") {
    CHECK(moebius(1) == 1);
    CHECK(moebius(6) == 1);
    CHECK(moebius(12) == 0);
    CHECK(omega(1) == 0);
    CHECK(omega(8) == 1);
    CHECK(omega(30) == 3);
    // sum_{d | n} mu(d) = [n = 1]
    for (uint64_t n = 1; n <= 10000; ++n) {
        int s = 0;
        for (uint64_t d = 1; d * d <= n; ++d) {
            if (n % d) continue;
            s += moebius(d);
            if (d != n / d) s += moebius(n / d);
        }
        CHECK(s == (n == 1 ? 1 : 0));
    }
}

TEST_CASE("coprime part and unitary divisors") {
    CHECK(coprime_part(12, 2) == 3);
    CHECK(coprime_part(12, 35) == 12);
    CHECK(coprime_part(360, 6) == 5);
    CHECK(is_unitary_divisor(4, 12));
    CHECK(!is_unitary_divisor(2, 12));
    for (uint64_t n : {1ull, 7ull, 360ull, 99999ull}) CHECK(is_unitary_divisor(1, n));
    std::mt19937_64 rng(6);
    for (int i = 0; i < 500; ++i) {
        uint64_t n = rng() % 100000 + 1, m = rng() % 1000 + 1;
        uint64_t c = coprime_part(n, m);
        CHECK(n % c == 0);
        CHECK(std::gcd(c, m) == 1);
        // maximality: no prime of n/c is coprime to m
        for (auto& [p, e] : factorize(n / c)) CHECK(std::gcd(p, m) > 1);
    }
}

TEST_CASE("legendre symbol") {
    CHECK(legendre_symbol(1, 5) == 1);
    CHECK(legendre_symbol(2, 5) == -1);
    CHECK(legendre_symbol(10, 5) == 0);
    CHECK_THROWS_AS(legendre_symbol(3, 2), std::invalid_argument);
    CHECK_THROWS_AS(legendre_symbol(3, 9), std::invalid_argument);
    // against an independent square table, all odd p <= 97
    for (uint64_t p = 3; p <= 97; p += 2) {
        if (!is_prime(p)) continue;
        std::vector<char> sq(p, 0);
        for (uint64_t s = 1; s < p; ++s) sq[s * s % p] = 1;
        for (int64_t a = -200; a <= 200; ++a) {
            int64_t r = ((a % (int64_t)p) + p) % (int64_t)p;
            int expect = r == 0 ? 0 : (sq[r] ? 1 : -1);
            CHECK(legendre_symbol(a, p) == expect);
        }
    }
}

TEST_CASE("kronecker symbol vs legendre") {
    for (uint64_t p = 3; p <= 97; p += 2) {
        if (!is_prime(p)) continue;
        for (long long a = -50; a <= 50; ++a)
            CHECK(kronecker_symbol(a, p) == legendre_symbol(a, p));
    }
    // (D/2) by the mod-8 rule
    CHECK(kronecker_symbol(17, 2) == 1);
    CHECK(kronecker_symbol(21, 2) == -1);
    CHECK(kronecker_symbol(12, 2) == 0);
}

TEST_CASE("square class count table") {
    CHECK(sq_class_count(2, 1) == 1);
    CHECK(sq_class_count(3, 5) == 2);
    CHECK(sq_class_count(2, 2) == 2);
    CHECK(sq_class_count(2, 3) == 4);
    CHECK(sq_class_count(7, 1) == 2);
}

TEST_CASE("psl2 order formula") {
    CHECK(psl2_order(1) == 1);
    CHECK(psl2_order(2) == 6);
    CHECK(psl2_order(3) == 12);
    CHECK(psl2_order(6) == 72);
    CHECK(psl2_order(8) == 96);
    // multiplicativity over coprime arguments
    std::mt19937_64 rng(7);
    for (int i = 0; i < 100; ++i) {
        uint64_t a = rng() % 200 + 1, b = rng() % 200 + 1;
        if (std::gcd(a, b) != 1) continue;
        CHECK(psl2_order(a * b) == psl2_order(a) * psl2_order(b));
    }
}

TEST_CASE("square root counts mod prime powers") {
    for (uint64_t p : {2ull, 3ull, 5ull, 7ull}) {
        for (uint32_t m = 1; ipow(p, m) <= 4096; ++m) {
            uint64_t pm = ipow(p, m);
            for (uint64_t a = 0; a < pm; ++a) {
                uint64_t brute = 0;
                for (uint64_t x = 0; x < pm; ++x)
                    if (x * x % pm == a) ++brute;
                CHECK(sqrt_count_pp(p, m, a) == brute);
            }
        }
    }
}

namespace {
// independent quadrature oracle: fixed-panel composite Simpson in long
// double on the substituted integrand e^s/s over [log 2, log x]
double li_oracle(double x) {
    const long double a = logl(2.0L), b = logl(static_cast<long double>(x));
    const int n = 1 << 21;  // panels (even)
    const long double h = (b - a) / n;
    auto f = [](long double s) { return expl(s) / s; };
    long double acc = f(a) + f(b);
    for (int i = 1; i < n; ++i) acc += f(a + h * i) * (i % 2 ? 4.0L : 2.0L);
    return static_cast<double>(acc * h / 3.0L);
}
}  // namespace

TEST_CASE("log integral") {
    CHECK(log_integral(2.0) == 0.0);
    CHECK_THROWS_AS(log_integral(1.5), std::invalid_argument);
    for (double x : {3.0, 10.0, 100.0, 12345.0}) {
        CHECK(std::abs(log_integral(x) - li_oracle(x)) < 1e-10);
    }
    CHECK(log_integral(1e6) > log_integral(1e5));
    // wide-range relative sanity against the oracle
    CHECK(std::abs(log_integral(1e10) / li_oracle(1e10) - 1.0) < 1e-9);
}

TEST_CASE("isqrt and square detection") {
    for (uint64_t n = 0; n < 3000; ++n) {
        uint64_t r = isqrt64(n);
        CHECK(r * r <= n);
        CHECK((r + 1) * (r + 1) > n);
    }
    CHECK(is_square64(0));
    CHECK(is_square64(1));
    CHECK(is_square64(999966000289ull));  // 999983^2
    CHECK(!is_square64(999966000290ull));
}
