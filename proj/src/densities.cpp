#include "cnsum/densities.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <stdexcept>

namespace cnsum {
namespace dens {

using arith::ipow;
using arith::legendre_symbol;
using arith::psl2_order;
using arith::psl2_order_pp;
using arith::sqrt_count_pp;

double to_double(const Rat& r) { return r.convert_to<double>(); }

namespace {

void check(bool cond, const char* msg) {
    if (!cond) throw std::logic_error(msg);
}

uint64_t pow_u64_checked(uint64_t p, uint32_t e) {
    uint64_t r = 1;
    for (uint32_t i = 0; i < e; ++i) {
        if (r > (uint64_t(1) << 62) / p) throw std::invalid_argument("prime power too large");
        r *= p;
    }
    return r;
}

// ---- p = 2 machinery -------------------------------------------------
//
// Matrices mod 2^{r+k+2} with u-valuation k biject with
//   (A,B,C) mod 2^{r+2}, not all even, x,y in Z_{2^{r+k+2}}
// subject to the determinant condition; completing the square turns the
// (x,y)-count into a square-root count mod 2^{r+k+2} (k >= 1) or
// mod 2^{r+4} over a doubled range (k = 0).  The (A,B,C) sum only
// depends on Delta = B^2-4AC mod 2^{r+4}, so one histogram per r serves
// every k and delta.

std::map<uint32_t, std::vector<uint64_t>> g_hist2;
std::mutex g_hist2_mutex;

const std::vector<uint64_t>& two_adic_histogram(uint32_t r) {
    if (r < 1 || r > 6) throw std::invalid_argument("2-adic local densities support r in [1,6]");
    std::lock_guard<std::mutex> lock(g_hist2_mutex);
    auto it = g_hist2.find(r);
    if (it != g_hist2.end()) return it->second;
    uint32_t side = 1u << (r + 2);
    uint32_t mask = (1u << (r + 4)) - 1;
    std::vector<uint64_t> hist(uint64_t(mask) + 1, 0);
    for (uint32_t A = 0; A < side; ++A)
        for (uint32_t B = 0; B < side; ++B) {
            uint64_t B2 = uint64_t(B) * B;
            for (uint32_t C = 0; C < side; ++C) {
                if (((A | B | C) & 1u) == 0) continue;
                uint64_t key = (B2 - uint64_t(4) * A * C) & mask;  // wraps mod 2^64, masked
                ++hist[key];
            }
        }
    return g_hist2.emplace(r, std::move(hist)).first->second;
}

// SL2-level slot count at modulus 2^{r+k+2}; PSL count is this / 4.
uint64_t sl_count2(uint32_t r, uint32_t k, uint64_t delta) {
    const auto& hist = two_adic_histogram(r);
    uint64_t res_mod = uint64_t(1) << (r + 2);
    uint64_t buckets = uint64_t(1) << (r + 4);
    delta &= res_mod - 1;
    if (k >= 3) {
        // sqrt count is 4 for every triple once 4^{k-1}Delta = 0 mod 8
        uint64_t s = 0;
        for (uint64_t w = delta; w < buckets; w += res_mod) s += hist[w];
        return 4 * s;
    }
    uint64_t m_exp = r + k + 2;
    uint64_t m_mod = uint64_t(1) << m_exp;
    uint64_t twice = 0;  // 2 * SL count, to keep the k = 0 halving integral
    for (uint64_t w = delta; w < buckets; w += res_mod) {
        if (!hist[w]) continue;
        uint64_t cnt;
        if (k == 0) {
            // #y = SqrtCount_{2^{r+4}}(4 + Delta) / 2
            uint64_t a = (4 + w) & (buckets - 1);
            cnt = sqrt_count_pp(2, r + 4, a);  // even whenever nonzero here
            twice += hist[w] * cnt;
        } else {
            uint64_t a = (1 + (w << (2 * (k - 1)))) & (m_mod - 1);
            cnt = sqrt_count_pp(2, static_cast<uint32_t>(m_exp), a);
            twice += 2 * hist[w] * cnt;
        }
    }
    check(twice % 2 == 0, "2-adic slot count: odd half-sum");
    return twice / 2;
}

uint64_t psl_count2(uint32_t r, uint32_t k, uint64_t delta) {
    uint64_t sl = sl_count2(r, k, delta);
    check(sl % 4 == 0, "2-adic slot count not divisible by the center order");
    return sl / 4;
}

}  // namespace

uint64_t count_T(uint64_t p, uint32_t r, uint32_t k, uint64_t delta) {
    if (p == 2) {
        uint64_t m = pow_u64_checked(2, r + k + 2);
        uint64_t p2k = 1;
        for (uint32_t i = 0; i < 2 * k; ++i) p2k = p2k * 2 % m;
        uint64_t a = (4 + (unsigned __int128)(delta % m) * p2k) % m;
        uint64_t cnt = sqrt_count_pp(2, r + k + 2, a);
        check(cnt % 2 == 0, "count_T: odd square-root count at p = 2");
        return cnt / 2;
    }
    uint64_t m = pow_u64_checked(p, r + k);
    uint64_t p2k = 1;
    for (uint32_t i = 0; i < 2 * k; ++i) p2k = p2k * p % m;
    uint64_t a = (4 + (unsigned __int128)(delta % m) * p2k) % m;
    return sqrt_count_pp(p, r + k, a);
}

uint64_t count_A(uint64_t p, uint32_t r, uint64_t delta) {
    if (p == 2) {
        delta &= (uint64_t(1) << (r + 2)) - 1;
        if (delta % 8 == 1) return 3 * (uint64_t(1) << (2 * r + 1));
        if (delta % 8 == 5) return uint64_t(1) << (2 * r + 1);
        if (delta % 4 == 0) return 3 * (uint64_t(1) << (2 * r));
        return 0;
    }
    uint64_t pr = pow_u64_checked(p, r);
    delta %= pr;
    uint64_t p2r2 = pow_u64_checked(p, 2 * r - 2);
    if (delta % p == 0) return p2r2 * (p * p - 1);
    int s = legendre_symbol(static_cast<int64_t>(delta % p), p);
    return p2r2 * p * (s == 1 ? p + 1 : p - 1);
}

Rat gamma_hat_count(uint64_t p, uint32_t r, uint32_t k, uint64_t delta) {
    if (p == 2) return Rat(Int(psl_count2(r, k, delta)));
    Rat g = Rat(Int(count_T(p, r, k, delta)) * Int(count_A(p, r, delta)), 2);
    check(denominator(g) == 1, "gamma_hat_count: T*A/#Z^(2) is not an integer");
    return g;
}

Rat eta_local_u(uint64_t p, uint32_t r, uint32_t k, uint64_t delta) {
    if (p == 2) return Rat(Int(psl_count2(r, k, delta)), psl2_order_pp(2, r + k + 2));
    return gamma_hat_count(p, r, k, delta) / Rat(psl2_order_pp(p, r + k));
}

Rat eta_local_series(uint64_t p, uint32_t r, uint64_t delta) {
    if (p == 2) {
        Rat total = 0;
        for (uint32_t k = 0; k <= 2; ++k)
            total += Rat(Int(psl_count2(r, k, delta)), psl2_order_pp(2, r + k + 2));
        // k >= 3: PSL slot count is constant (= the (A,B,C) class size);
        // sum_{s >= r+5} 1/v(2^s) = 1/(21*2^{3r+8})
        uint64_t s_delta = sl_count2(r, 3, delta) / 4;
        total += Rat(Int(s_delta), Int(21) * (Int(1) << (3 * r + 8)));
        return total;
    }
    // k = 0 explicitly; for k >= 1 the T-count is the constant 2, so the
    // tail is A * sum_{s >= r+1} 1/v(p^s) = A * 2 p^{5-3(r+1)}/((p^2-1)(p^3-1)).
    Int P(p);
    Rat total = gamma_hat_count(p, r, 0, delta) / Rat(psl2_order_pp(p, r));
    Int p3r3 = 1;
    for (uint32_t i = 0; i < 3 * r + 3; ++i) p3r3 *= P;
    Rat tail(Int(count_A(p, r, delta)) * 2 * P * P * P * P * P,
             p3r3 * (P * P - 1) * (P * P * P - 1));
    return total + tail;
}

ResidueClassification classify_residue(uint64_t p, uint32_t r, uint64_t delta) {
    if (p == 2) {
        uint64_t mod = uint64_t(1) << (r + 2);
        delta &= mod - 1;
        if (delta % 4 == 2 || delta % 8 == 3 || delta % 8 == 7)
            return {ResidueClass::zero_measure, 0};
        if (delta % 8 == 5) return {ResidueClass::unit_square_shift, 0};
        if (delta % 8 == 1) return {ResidueClass::otherwise, 0};
        if (delta == 0) return {ResidueClass::divisible, 0};
        uint64_t e = (delta + 4) & (mod - 1);
        if (e == 0) return {ResidueClass::minus_four, 0};
        uint32_t v = 0;
        uint64_t e0 = e;
        while (e0 % 2 == 0) { e0 /= 2; ++v; }
        if (v % 2 == 0) {
            uint32_t avail = r + 2 - v;  // unit known mod 2^avail
            bool square = avail >= 3 ? (e0 % 8 == 1) : avail == 2 ? (e0 % 4 == 1) : true;
            if (square) {
                if (v >= r) return {ResidueClass::minus_four, v / 2};
                return {ResidueClass::unit_square_shift, v / 2};
            }
        }
        return {ResidueClass::divisible, 0};  // 4 | delta, no square shift
    }
    uint64_t pr = pow_u64_checked(p, r);
    delta %= pr;
    if (delta % p == 0) return {ResidueClass::divisible, 0};
    uint64_t e = (delta + 4) % pr;
    if (e == 0) return {ResidueClass::minus_four, 0};
    uint32_t v = 0;
    while (e % p == 0) { e /= p; ++v; }
    if (v % 2 == 0 && legendre_symbol(static_cast<int64_t>(e % p), p) == 1)
        return {ResidueClass::unit_square_shift, v / 2};
    return {ResidueClass::otherwise, 0};
}

namespace {

// eta(D(2) = 0 mod 2^m): exact lift decomposition of the zero residue.
Rat eta_two_zero_residue(uint32_t m) {
    if (m <= 2) throw std::invalid_argument("eta_two_zero_residue: m >= 3");
    if (m == 3) return Rat(11, 28);
    if (m == 4) return Rat(9, 28);
    return Rat(Int(256), Int(7) * (Int(1) << (m + 2)));
}

}  // namespace

Rat eta_local_closed(uint64_t p, uint32_t r, uint64_t delta) {
    if (p == 2) {
        uint64_t mod = uint64_t(1) << (r + 2);
        delta &= mod - 1;
        Rat denom(Int(7) * (Int(1) << (r + 4)));
        if (delta % 4 == 2 || delta % 8 == 3 || delta % 8 == 7) return 0;
        if (delta % 8 == 1) return 1 / denom;
        if (delta % 8 == 5) return 75 / denom;
        if (delta == 0) return eta_two_zero_residue(r + 2);
        uint64_t e = (delta + 4) & (mod - 1);
        uint64_t numer;
        if (e == 0) {
            numer = 4 + 7 * (uint64_t(1) << (r / 2 + 3));
        } else {
            uint32_t v = 0;
            uint64_t e0 = e;
            while (e0 % 2 == 0) { e0 /= 2; ++v; }
            uint32_t avail = r + 2 - v;
            bool square = (v % 2 == 0) &&
                          (avail >= 3 ? (e0 % 8 == 1) : avail == 2 ? (e0 % 4 == 1) : true);
            if (square) {
                uint32_t l = v / 2;
                if (v >= r) numer = 4 + 7 * (uint64_t(1) << (r / 2 + 3));
                else if (l == 1) numer = 256;  // the 32 | delta class
                else numer = 4 + 7 * (uint64_t(1) << (l + 4));
            } else {
                // no square shift: route by v2(delta)
                uint32_t vd = 0;
                uint64_t d0 = delta;
                while (d0 % 2 == 0) { d0 /= 2; ++vd; }
                if (vd == 2) numer = 4;
                else if (vd == 3 || vd == 4) numer = 32;
                else numer = 256;  // 32 | delta (only via square class, kept for totality)
            }
        }
        return Rat(numer) / denom;
    }

    Int P(p);
    uint64_t pr = pow_u64_checked(p, r);
    delta %= pr;
    Int prm1 = 1;
    for (uint32_t i = 0; i + 1 < r; ++i) prm1 *= P;
    Rat denom(prm1 * (P * P - 1) * (P * P * P - 1));
    if (delta % p == 0) return Rat(2 * P * P * (P * P - 1)) / denom;
    Int s(legendre_symbol(static_cast<int64_t>(delta % p), p));
    uint64_t e = (delta + 4) % pr;
    if (e == 0) {
        Int prh = 1;
        for (uint32_t i = 0; i < r / 2; ++i) prh *= P;
        return Rat((2 + prh * (P * P * P - 1)) * (P + s)) / denom;
    }
    uint32_t v = 0;
    while (e % p == 0) { e /= p; ++v; }
    if (v % 2 == 0 && legendre_symbol(static_cast<int64_t>(e % p), p) == 1) {
        Int pl = 1;
        for (uint32_t i = 0; i < v / 2; ++i) pl *= P;
        return Rat(2 * (1 + pl * (P * P * P - 1)) * (P + s)) / denom;
    }
    return Rat(2 * (P + s)) / denom;
}

Rat eta_two_residue_set(const std::vector<uint64_t>& residues, uint32_t s) {
    if (s < 1) throw std::invalid_argument("eta_two_residue_set: s >= 1");
    uint32_t lvl = std::max<uint32_t>(s, 3);
    uint32_t r = lvl - 2;
    uint64_t big = uint64_t(1) << lvl;
    uint64_t small = uint64_t(1) << s;
    std::set<uint64_t> lifted;
    for (uint64_t d : residues)
        for (uint64_t x = d % small; x < big; x += small) lifted.insert(x);
    Rat total = 0;
    for (uint64_t x : lifted) total += eta_local_closed(2, r, x);
    return total;
}

Rat eta_local_not_p2(uint64_t p, uint32_t r, uint64_t delta) {
    if (p == 2) throw std::invalid_argument("eta_local_not_p2: p must be odd");
    uint32_t r2 = std::max<uint32_t>(r, 2);
    uint64_t pr = pow_u64_checked(p, r);
    uint64_t pr2 = pow_u64_checked(p, r2);
    delta %= pr;
    Rat total = eta_local_closed(p, r, delta);
    for (uint64_t x = delta; x < pr2; x += pr)
        if (x % (p * p) == 0) total -= eta_local_closed(p, r2, x);
    return total;
}

Rat eta_divides(uint64_t n) {
    Rat total = 1;
    for (auto& [p, e] : arith::factorize(n)) {
        if (p == 2) {
            if (e >= 3) total *= eta_local_closed(2, e - 2, 0);
            else total *= eta_two_residue_set({0}, e);
        } else {
            total *= eta_local_closed(p, e, 0);
        }
    }
    return total;
}

// ---- global layer ----------------------------------------------------

namespace {

const std::vector<uint32_t>& prime_table(uint32_t at_least) {
    static std::vector<uint32_t> primes;
    static uint32_t bound = 0;
    static std::mutex mutex;
    std::lock_guard<std::mutex> lock(mutex);
    if (bound < at_least + 1) {
        bound = std::max(at_least + 1, 1u << 17);
        primes = arith::primes_below(bound);
    }
    return primes;
}

double v_of_prime(uint64_t p) {
    return p == 2 ? 6.0 : static_cast<double>(p) * (static_cast<double>(p) * p - 1) / 2.0;
}

}  // namespace

TruncatedReal xi(uint64_t n, uint32_t prime_cutoff) {
    if (prime_cutoff < 100) throw std::invalid_argument("xi: prime cutoff too small");
    const auto& primes = prime_table(prime_cutoff);
    double prod = 1.0;
    for (uint32_t p : primes) {
        if (p > prime_cutoff) break;
        if (n % p == 0) continue;
        prod *= 1.0 - 1.0 / v_of_prime(p);
    }
    // tail: sum_{p > P} 2/(p(p^2-1)) <= 2/P^2
    double rel = 2.0 / (static_cast<double>(prime_cutoff) * prime_cutoff);
    return {prod, std::abs(prod) * rel * 1.5, prime_cutoff};
}

Rat beta_exact(uint64_t m) {
    Rat total = 1;
    for (auto& [p, e] : arith::factorize(m)) {
        Rat vl(1, psl2_order_pp(p, e));
        Rat vl1(1, psl2_order_pp(p, e + 1));
        Rat v1(1, psl2_order_pp(p, 1));
        total *= (vl - vl1) / (1 - v1);
    }
    return total;
}

namespace {

double beta_pp_approx(uint64_t p, uint32_t e) {
    if (p == 2) {
        if (e == 1) return 3.0 / 20.0;
        if (e == 2) return 3.0 / 80.0;
        return 7.0 / (5.0 * std::pow(2.0, 3.0 * e - 2));
    }
    double pd = static_cast<double>(p);
    double p3 = pd * pd * pd;
    return 2.0 * std::pow(pd, -3.0 * e) * (p3 - 1.0) / (p3 - pd - 2.0);
}

double beta_approx(const Factorization& f) {
    double b = 1.0;
    for (auto& [p, e] : f) b *= beta_pp_approx(p, e);
    return b;
}

const arith::SpfSieve& beta_sieve(uint64_t at_least) {
    // old sieves stay alive so previously returned references remain valid
    static std::vector<std::unique_ptr<arith::SpfSieve>> sieves;
    static std::mutex mutex;
    std::lock_guard<std::mutex> lock(mutex);
    if (sieves.empty() || sieves.back()->bound() < at_least)
        sieves.push_back(std::make_unique<arith::SpfSieve>(
            static_cast<uint32_t>(std::max<uint64_t>(at_least, 1u << 21))));
    return *sieves.back();
}

}  // namespace

TruncatedReal W_direct(uint64_t alpha, uint64_t n, uint64_t m_cutoff) {
    if (n == 0 || std::gcd(alpha % n, n) != 1)
        throw std::invalid_argument("W_direct: alpha must be a unit mod n");
    const auto& sieve = beta_sieve(2 * m_cutoff);
    TruncatedReal x = xi(n, 100000);
    double head = 0, block = 0;
    uint64_t start = alpha % n;
    if (start == 0) start = n;  // n = 1
    for (uint64_t m = start; m <= 2 * m_cutoff; m += n) {
        double b = beta_approx(sieve.factorize(m));
        if (m <= m_cutoff) head += b;
        else block += b;
    }
    // dyadic block masses decay by >= 4x, so the tail past 2M is < block/3
    double err = x.value * 2.0 * block + x.error_bound * head;
    return {x.value * head, err, static_cast<int64_t>(m_cutoff)};
}

namespace {

std::map<uint64_t, std::vector<DirichletCharacter>> g_char_cache;
std::mutex g_char_mutex;

std::vector<DirichletCharacter> build_characters(uint64_t n) {
    std::vector<DirichletCharacter> chars;
    if (n == 1) {
        DirichletCharacter c;
        c.modulus = 1;
        c.values = {std::complex<double>(1.0, 0.0)};
        c.principal = true;
        chars.push_back(std::move(c));
        return chars;
    }
    // cyclic decomposition of (Z/n)^*: per prime power component, a
    // generator and its order; dlog tables per component
    struct Component {
        uint64_t q;                     // prime power
        uint64_t order;
        std::vector<uint32_t> dlog;     // residue mod q -> exponent
    };
    std::vector<Component> comps;
    for (auto& [p, e] : arith::factorize(n)) {
        uint64_t q = ipow(p, e);
        if (p == 2) {
            if (e == 1) continue;
            if (e == 2) {
                Component c{q, 2, std::vector<uint32_t>(q, 0)};
                c.dlog[3] = 1;
                c.dlog[1] = 0;
                comps.push_back(std::move(c));
                continue;
            }
            // (Z/2^e)^* = <-1> x <5>
            Component sign{q, 2, std::vector<uint32_t>(q, 0)};
            Component five{q, q / 4, std::vector<uint32_t>(q, 0)};
            uint64_t pw = 1;
            for (uint64_t j = 0; j < q / 4; ++j) {
                sign.dlog[pw] = 0;
                five.dlog[pw] = static_cast<uint32_t>(j);
                sign.dlog[q - pw] = 1;
                five.dlog[q - pw] = static_cast<uint32_t>(j);
                pw = pw * 5 % q;
            }
            comps.push_back(std::move(sign));
            comps.push_back(std::move(five));
            continue;
        }
        // odd prime power: find a primitive root
        uint64_t phi = q / p * (p - 1);
        auto ord_factors = arith::factorize(phi);
        uint64_t g = 0;
        for (uint64_t cand = 2; cand < q; ++cand) {
            if (cand % p == 0) continue;
            bool ok = true;
            for (auto& [f, fe] : ord_factors)
                if (arith::powmod(cand, phi / f, q) == 1) { ok = false; break; }
            if (ok) { g = cand; break; }
        }
        check(g != 0, "characters: no primitive root found");
        Component c{q, phi, std::vector<uint32_t>(q, 0)};
        uint64_t pw = 1;
        for (uint64_t j = 0; j < phi; ++j) {
            c.dlog[pw] = static_cast<uint32_t>(j);
            pw = pw * g % q;
        }
        comps.push_back(std::move(c));
    }
    // enumerate all exponent tuples
    uint64_t count = 1;
    for (auto& c : comps) count *= c.order;
    std::vector<uint64_t> tuple(comps.size(), 0);
    const double two_pi = 2.0 * std::acos(-1.0);
    for (uint64_t idx = 0; idx < count; ++idx) {
        DirichletCharacter ch;
        ch.modulus = n;
        ch.values.assign(n, std::complex<double>(0.0, 0.0));
        ch.principal = std::all_of(tuple.begin(), tuple.end(), [](uint64_t t) { return t == 0; });
        for (uint64_t x = 0; x < n; ++x) {
            if (std::gcd(x, n) != 1) continue;
            double angle = 0;
            for (size_t i = 0; i < comps.size(); ++i) {
                uint64_t xl = comps[i].dlog[x % comps[i].q];
                angle += two_pi * static_cast<double>(tuple[i] * xl % comps[i].order) /
                         static_cast<double>(comps[i].order);
            }
            ch.values[x] = std::polar(1.0, angle);
        }
        chars.push_back(std::move(ch));
        for (size_t i = 0; i < comps.size(); ++i) {
            if (++tuple[i] < comps[i].order) break;
            tuple[i] = 0;
        }
    }
    // orthogonality spot check: sum_x chi(x) = 0 for non-principal chi
    for (auto& ch : chars) {
        if (ch.principal) continue;
        std::complex<double> s = 0;
        for (uint64_t x = 0; x < n; ++x) s += ch.values[x];
        check(std::abs(s) < 1e-7 * static_cast<double>(n), "characters: column sum not zero");
    }
    return chars;
}

const std::vector<DirichletCharacter>& characters_cached(uint64_t n) {
    std::lock_guard<std::mutex> lock(g_char_mutex);
    auto it = g_char_cache.find(n);
    if (it == g_char_cache.end()) it = g_char_cache.emplace(n, build_characters(n)).first;
    return it->second;
}

// Euler products per character, memoized per (n, P).
struct EulerProducts {
    std::vector<std::complex<double>> value;
    std::vector<double> abs_value;
};

std::map<std::pair<uint64_t, uint32_t>, EulerProducts> g_euler_cache;
std::mutex g_euler_mutex;

const EulerProducts& euler_products(uint64_t n, uint32_t P) {
    std::lock_guard<std::mutex> lock(g_euler_mutex);
    auto key = std::make_pair(n, P);
    auto it = g_euler_cache.find(key);
    if (it != g_euler_cache.end()) return it->second;
    const auto& chars = characters_cached(n);
    const auto& primes = prime_table(P);
    EulerProducts ep;
    for (auto& ch : chars) {
        std::complex<double> prod = 1.0;
        if (n % 2 != 0) {
            std::complex<double> c2 = ch.values[2 % n];
            prod *= 1.0 + (c2 - 1.0) * (32.0 + 4.0 * c2 + c2 * c2) / (24.0 * (8.0 - c2));
        }
        for (uint32_t p : primes) {
            if (p > P) break;
            if (p == 2 || n % p == 0) continue;
            std::complex<double> cp = ch.values[p % n];
            double pd = p;
            prod *= 1.0 + 2.0 * pd * pd * (cp - 1.0) / ((pd * pd - 1.0) * (pd * pd * pd - cp));
        }
        ep.value.push_back(prod);
        ep.abs_value.push_back(std::abs(prod));
    }
    return g_euler_cache.emplace(key, std::move(ep)).first->second;
}

}  // namespace

std::vector<DirichletCharacter> characters(uint64_t n) { return characters_cached(n); }

TruncatedReal W_euler(uint64_t alpha, uint64_t n, uint32_t prime_cutoff) {
    if (n == 0 || std::gcd(alpha % n, n) != 1)
        throw std::invalid_argument("W_euler: alpha must be a unit mod n");
    const auto& chars = characters_cached(n);
    const auto& ep = euler_products(n, prime_cutoff);
    std::complex<double> sum = 0;
    double abs_sum = 0;
    for (size_t i = 0; i < chars.size(); ++i) {
        sum += std::conj(chars[i].values[alpha % n]) * ep.value[i];
        abs_sum += ep.abs_value[i];
    }
    double phi = static_cast<double>(chars.size());
    std::complex<double> w = sum / phi;
    if (std::abs(w.imag()) > 1e-9)
        throw std::logic_error("W_euler: non-negligible imaginary part (character table bug)");
    double P = prime_cutoff;
    double err = (abs_sum / phi) * (6.0 / (P * P)) + 1e-9;
    return {w.real(), err, prime_cutoff};
}

namespace {

std::vector<uint64_t> units_mod(uint64_t n) {
    std::vector<uint64_t> u;
    if (n == 1) return {1};
    for (uint64_t a = 1; a < n; ++a)
        if (std::gcd(a, n) == 1) u.push_back(a);
    return u;
}

TruncatedReal W_route(uint64_t alpha, uint64_t n, const EtaParams& params) {
    return params.use_euler ? W_euler(alpha, n, params.prime_cutoff)
                            : W_direct(alpha, n, params.term_cutoff);
}

// local factor of Theorem 1 at residue w mod n (n's local conditions)
Rat theorem1_local(uint64_t n, uint64_t w, const Factorization& nf) {
    Rat prod = 1;
    for (auto& [p, e] : nf) {
        if (p == 2) prod *= eta_two_residue_set({w % ipow(2, e)}, e);
        else prod *= eta_local_closed(p, e, w % ipow(p, e));
    }
    return prod;
}

}  // namespace

EtaValue eta_progression(uint64_t n, uint64_t delta, const EtaParams& params) {
    if (n == 0) throw std::invalid_argument("eta_progression: n >= 1");
    EtaValue out;
    if (n == 1) {
        out.exact = true;
        out.rational = 1;
        out.real = {1.0, 0.0, 0};
        return out;
    }
    auto nf = arith::factorize(n);
    delta %= n;
    // group units by delta * alpha^2 mod n; local factors depend only on that
    std::map<uint64_t, std::vector<uint64_t>> groups;
    for (uint64_t a : units_mod(n)) groups[(delta * a % n) * a % n].push_back(a);
    if (groups.size() == 1) {
        // alpha-independent: sum of W is exactly 1
        out.exact = true;
        out.rational = theorem1_local(n, groups.begin()->first, nf);
        out.real = {to_double(out.rational), 0.0, 0};
        return out;
    }
    double value = 0, err = 0;
    for (auto& [w, alphas] : groups) {
        Rat local = theorem1_local(n, w, nf);
        double l = to_double(local);
        for (uint64_t a : alphas) {
            TruncatedReal wv = W_route(a, n, params);
            value += wv.value * l;
            err += wv.error_bound * std::abs(l);
        }
    }
    out.exact = false;
    out.real = {value, err, static_cast<int64_t>(params.use_euler ? params.prime_cutoff : params.term_cutoff)};
    return out;
}

TruncatedReal omega_prefactor(uint64_t n, uint32_t prime_cutoff) {
    const auto& primes = prime_table(prime_cutoff);
    double prod = 1.0;
    for (uint32_t p : primes) {
        if (p > prime_cutoff) break;
        if (p == 2 || n % p == 0) continue;
        double pd = p;
        prod *= 1.0 - 2.0 * pd / (pd * pd * pd - 1.0);
    }
    double rel = 2.1 / (static_cast<double>(prime_cutoff) - 1.0) / std::log(prime_cutoff);
    return {prod, std::abs(prod) * rel * 3.0, prime_cutoff};
}

EtaValue eta_fundamental(uint64_t n, uint64_t delta, const EtaParams& params) {
    if (n == 0) throw std::invalid_argument("eta_fundamental: n >= 1");
    delta %= n;
    auto nf = arith::factorize(n);
    uint32_t e = 0;
    std::vector<std::pair<uint64_t, uint32_t>> odd_parts;
    for (auto& [p, ex] : nf) {
        if (p == 2) e = ex;
        else odd_parts.push_back({p, ex});
    }
    // n' = lcm(16, 4n, prod p^2)
    uint64_t nprime = std::lcm<uint64_t>(16, 4 * n);
    for (auto& [p, ex] : odd_parts) nprime = std::lcm(nprime, p * p);
    if (nprime > 6000) throw std::length_error("eta_fundamental: lifted modulus over the cap");

    // sigma depends on delta * alpha^2 mod K
    uint64_t K = std::lcm<uint64_t>(16, uint64_t(1) << (e + 2));
    for (auto& [p, ex] : odd_parts) K = std::lcm(K, ipow(p, ex));

    auto sigma = [&](uint64_t w) -> Rat {
        // first term: D(2) = 1 mod 4 and = w mod 2^e
        Rat t2a;
        if (e <= 1) t2a = Rat(19, 56);
        else if (w % 4 != 1) t2a = 0;
        else t2a = eta_two_residue_set({w % ipow(2, e)}, e);
        Rat term1 = t2a;
        if (term1 != 0)
            for (auto& [p, ex] : odd_parts) term1 *= eta_local_not_p2(p, ex, w % ipow(p, ex));
        // second term: D(2) = 8,12 mod 16 and = 4w mod 2^{e+2}
        uint32_t s2 = std::max<uint32_t>(4, e + 2);
        uint64_t m2 = uint64_t(1) << (e + 2);
        std::vector<uint64_t> set2;
        for (uint64_t x = 0; x < (uint64_t(1) << s2); ++x)
            if ((x % 16 == 8 || x % 16 == 12) && x % m2 == (4 * w) % m2) set2.push_back(x);
        Rat t2b = set2.empty() ? Rat(0) : eta_two_residue_set(set2, s2);
        Rat term2 = t2b;
        if (term2 != 0)
            for (auto& [p, ex] : odd_parts) term2 *= eta_local_not_p2(p, ex, (4 * w) % ipow(p, ex));
        return term1 + term2;
    };

    std::map<uint64_t, std::vector<uint64_t>> groups;
    for (uint64_t a : units_mod(nprime)) {
        unsigned __int128 w = (unsigned __int128)(delta % K) * a % K * a % K;
        groups[static_cast<uint64_t>(w)].push_back(a);
    }

    TruncatedReal pre = omega_prefactor(n, params.prime_cutoff);
    double inner = 0, inner_err = 0;
    for (auto& [w, alphas] : groups) {
        Rat s = sigma(w);
        double sd = to_double(s);
        if (sd == 0.0) continue;
        for (uint64_t a : alphas) {
            TruncatedReal wv = W_route(a, nprime, params);
            inner += wv.value * sd;
            inner_err += wv.error_bound * std::abs(sd);
        }
    }
    EtaValue out;
    out.exact = false;
    double value = pre.value * inner;
    double err = pre.error_bound * std::abs(inner) + std::abs(pre.value) * inner_err;
    out.real = {value, err, params.prime_cutoff};
    return out;
}

}  // namespace dens
}  // namespace cnsum
