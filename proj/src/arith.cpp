#include "cnsum/arith.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace cnsum {
namespace arith {

Factorization factorize(uint64_t n) {
    if (n == 0) throw std::invalid_argument("factorize: n must be positive");
    Factorization f;
    auto strip = [&](uint64_t p) {
        uint32_t e = 0;
        while (n % p == 0) { n /= p; ++e; }
        if (e) f.push_back({p, e});
    };
    strip(2);
    strip(3);
    strip(5);
    for (uint64_t d = 7; d * d <= n;) {
        // 6k+-1 wheel starting at 7: 7,11,13,17,19,23,25(no-op),29,...
        strip(d); d += 4;
        if (d * d > n) break;
        strip(d); d += 2;
    }
    if (n > 1) f.push_back({n, 1});
    std::sort(f.begin(), f.end(), [](auto& a, auto& b) { return a.p < b.p; });
    return f;
}

uint64_t unfactorize(const Factorization& f) {
    uint64_t n = 1;
    for (auto& [p, e] : f) n *= ipow(p, e);
    return n;
}

int moebius(uint64_t m) {
    auto f = factorize(m);
    for (auto& [p, e] : f)
        if (e > 1) return 0;
    return f.size() % 2 == 0 ? 1 : -1;
}

int omega(uint64_t m) { return static_cast<int>(factorize(m).size()); }

uint64_t coprime_part(uint64_t n, uint64_t m) {
    for (uint64_t g = std::gcd(n, m); g > 1; g = std::gcd(n, m))
        while (n % g == 0) n /= g;
    return n;
}

bool is_unitary_divisor(uint64_t m, uint64_t n) {
    return n % m == 0 && std::gcd(m, n / m) == 1;
}

uint64_t mulmod(uint64_t a, uint64_t b, uint64_t m) {
    return static_cast<uint64_t>((static_cast<unsigned __int128>(a) * b) % m);
}

uint64_t powmod(uint64_t a, uint64_t e, uint64_t m) {
    uint64_t r = 1 % m;
    a %= m;
    while (e) {
        if (e & 1) r = mulmod(r, a, m);
        a = mulmod(a, a, m);
        e >>= 1;
    }
    return r;
}

bool is_prime(uint64_t n) {
    if (n < 2) return false;
    for (uint64_t p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
        if (n % p == 0) return n == p;
    }
    // Deterministic Miller-Rabin for 64-bit with the standard witness set.
    uint64_t d = n - 1;
    int s = 0;
    while ((d & 1) == 0) { d >>= 1; ++s; }
    for (uint64_t a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
        uint64_t x = powmod(a, d, n);
        if (x == 1 || x == n - 1) continue;
        bool composite = true;
        for (int i = 1; i < s; ++i) {
            x = mulmod(x, x, n);
            if (x == n - 1) { composite = false; break; }
        }
        if (composite) return false;
    }
    return true;
}

int legendre_symbol(int64_t a, uint64_t p) {
    if (p == 2 || !is_prime(p))
        throw std::invalid_argument("legendre_symbol: p must be an odd prime");
    int64_t r = a % static_cast<int64_t>(p);
    if (r < 0) r += p;
    if (r == 0) return 0;
    uint64_t v = powmod(static_cast<uint64_t>(r), (p - 1) / 2, p);
    return v == 1 ? 1 : -1;
}

int kronecker_symbol(long long a, unsigned long long n) {
    // (a/2) = 0 if a even, 1 if a = +-1 mod 8, -1 if a = +-3 mod 8.
    if (n == 0) return (a == 1 || a == -1) ? 1 : 0;
    int result = 1;
    while ((n & 1) == 0) {
        n >>= 1;
        if ((a & 1) == 0) return 0;
        int am8 = static_cast<int>(((a % 8) + 8) % 8);
        if (am8 == 3 || am8 == 5) result = -result;
    }
    long long aa = a % static_cast<long long>(n);
    if (aa < 0) aa += n;
    uint64_t u = static_cast<uint64_t>(aa), v = n;
    // Jacobi symbol (u/v) for odd v via binary reciprocity.
    while (u != 0) {
        while ((u & 1) == 0) {
            u >>= 1;
            if ((v & 7) == 3 || (v & 7) == 5) result = -result;
        }
        std::swap(u, v);
        if ((u & 3) == 3 && (v & 3) == 3) result = -result;
        u %= v;
    }
    return v == 1 ? result : 0;
}

int sq_class_count(uint64_t p, uint32_t r) {
    if (p != 2) return 2;
    if (r == 1) return 1;
    if (r == 2) return 2;
    return 4;
}

Int psl2_order_pp(uint64_t p, uint32_t r) {
    Int v = 1;
    for (uint32_t i = 0; i + 2 < 3 * r; ++i) v *= p;  // p^{3r-2}
    v *= Int(p) * p - 1;
    v /= sq_class_count(p, r);
    return v;
}

Int psl2_order(uint64_t n) {
    Int v = 1;
    for (auto& [p, e] : factorize(n)) v *= psl2_order_pp(p, e);
    return v;
}

uint64_t sqrt_count_pp(uint64_t p, uint32_t m, uint64_t a) {
    uint64_t pm = ipow(p, m);
    a %= pm;
    if (a == 0) return ipow(p, m / 2);
    uint32_t v = 0;
    while (a % p == 0) { a /= p; ++v; }
    if (v & 1) return 0;
    uint32_t m1 = m - v;  // a0 is a unit mod p^m1
    uint64_t half = ipow(p, v / 2);
    if (p != 2) {
        uint64_t pm1 = ipow(p, m1);
        // unit square mod p^m1 iff square mod p
        uint64_t r = powmod(a % pm1, (p - 1) / 2, p);
        return r == 1 ? 2 * half : 0;
    }
    if (m1 == 1) return half;
    if (m1 == 2) return a % 4 == 1 ? 2 * half : 0;
    return a % 8 == 1 ? 4 * half : 0;
}

double log_integral(double x) {
    if (x < 2.0) throw std::invalid_argument("log_integral: x must be >= 2");
    if (x == 2.0) return 0.0;
    // Substitute t = e^s: li(x) = int_{log 2}^{log x} e^s / s ds.
    auto g = [](double s) { return std::exp(s) / s; };
    struct Simpson {
        double (*f)(double);
        static double rec(const std::function<double(double)>& f, double a, double b, double fa,
                          double fm, double fb, double whole, double eps, int depth) {
            double m = 0.5 * (a + b);
            double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
            double flm = f(lm), frm = f(rm);
            double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            double delta = left + right - whole;
            if (depth <= 0 || std::abs(delta) <= 15.0 * eps)
                return left + right + delta / 15.0;
            return rec(f, a, m, fa, flm, fm, left, eps * 0.5, depth - 1) +
                   rec(f, m, b, fm, frm, fb, right, eps * 0.5, depth - 1);
        }
    };
    double a = std::log(2.0), b = std::log(x);
    std::function<double(double)> f = g;
    double fa = g(a), fb = g(b), m = 0.5 * (a + b), fm = g(m);
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    double eps = std::max(1e-12, std::abs(whole) * 1e-14);
    return Simpson::rec(f, a, b, fa, fm, fb, whole, eps, 60);
}

std::vector<uint32_t> primes_below(uint32_t bound) {
    std::vector<bool> comp(bound, false);
    std::vector<uint32_t> primes;
    for (uint32_t i = 2; i < bound; ++i) {
        if (!comp[i]) {
            primes.push_back(i);
            for (uint64_t j = static_cast<uint64_t>(i) * i; j < bound; j += i) comp[j] = true;
        }
    }
    return primes;
}

SpfSieve::SpfSieve(uint32_t bound) : spf_(bound + 1, 0) {
    if (bound >= 1) spf_[1] = 1;
    for (uint32_t i = 2; i <= bound; ++i) {
        if (spf_[i] == 0) {
            for (uint64_t j = i; j <= bound; j += i)
                if (spf_[j] == 0) spf_[j] = i;
        }
    }
}

Factorization SpfSieve::factorize(uint64_t n) const {
    if (n == 0 || n > bound()) throw std::invalid_argument("SpfSieve::factorize: out of range");
    Factorization f;
    auto m = static_cast<uint32_t>(n);
    while (m > 1) {
        uint32_t p = spf_[m];
        uint32_t e = 0;
        while (m % p == 0) { m /= p; ++e; }
        f.push_back({p, e});
    }
    return f;
}

uint64_t gcd3(uint64_t a, uint64_t b, uint64_t c) { return std::gcd(a, std::gcd(b, c)); }

uint64_t isqrt64(uint64_t n) {
    if (n == 0) return 0;
    uint64_t r = static_cast<uint64_t>(std::sqrt(static_cast<double>(n)));
    while (r > 0 && r * r > n) --r;
    while ((r + 1) * (r + 1) <= n) ++r;
    return r;
}

bool is_square64(uint64_t n, uint64_t* root) {
    uint64_t r = isqrt64(n);
    if (root) *root = r;
    return r * r == n;
}

}  // namespace arith
}  // namespace cnsum
