#include "cnsum/quadform.hpp"

#include <array>
#include <cassert>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

namespace cnsum {
namespace qf {

using boost::multiprecision::abs;
using boost::multiprecision::gcd;
using boost::multiprecision::sqrt;

void validate_discriminant(const Int& D) {
    if (D <= 0) throw std::invalid_argument("discriminant must be positive");
    Int m = D % 4;
    if (m != 0 && m != 1) throw std::invalid_argument("discriminant must be 0 or 1 mod 4");
    Int r = sqrt(D);
    if (r * r == D) throw std::invalid_argument("discriminant must not be a square");
}

bool is_valid_discriminant(const Int& D) {
    if (D <= 0) return false;
    Int m = D % 4;
    if (m != 0 && m != 1) return false;
    Int r = sqrt(D);
    return r * r != D;
}

QuadForm::QuadForm(Int a_, Int b_, Int c_) : a(std::move(a_)), b(std::move(b_)), c(std::move(c_)) {
    if (gcd(gcd(a, b), c) != 1) throw std::invalid_argument("form must be primitive");
    validate_discriminant(b * b - 4 * a * c);
}

Int discriminant(const QuadForm& q) { return q.b * q.b - 4 * q.a * q.c; }

GammaMatrix::GammaMatrix(Int m11, Int m12, Int m21, Int m22)
    : g11(std::move(m11)), g12(std::move(m12)), g21(std::move(m21)), g22(std::move(m22)) {
    if (g11 * g22 - g12 * g21 != 1) throw std::invalid_argument("matrix must have determinant 1");
    Int tr = g11 + g22;
    if (abs(tr) <= 2) throw std::invalid_argument("matrix must be hyperbolic (|trace| > 2)");
    const Int& lead = (g11 != 0) ? g11 : g21;
    if (lead < 0) { g11 = -g11; g12 = -g12; g21 = -g21; g22 = -g22; }
}

GammaMatrix GammaMatrix::operator*(const GammaMatrix& o) const {
    return GammaMatrix(g11 * o.g11 + g12 * o.g21, g11 * o.g12 + g12 * o.g22,
                       g21 * o.g11 + g22 * o.g21, g21 * o.g12 + g22 * o.g22);
}

bool is_reduced(const Int& a, const Int& b, const Int& c, const Int& D) {
    if (b <= 0 || b * b >= D) return false;
    Int t = 2 * abs(a);
    // sqrt(D) - b < 2|a|  <=>  D < (2|a| + b)^2
    if (D >= (t + b) * (t + b)) return false;
    // 2|a| < sqrt(D) + b  <=>  2|a| - b < sqrt(D)
    Int s = t - b;
    if (s > 0 && s * s >= D) return false;
    (void)c;
    return true;
}

void rho_step(Int& a, Int& b, Int& c, const Int& D, const Int& sqrtD) {
    Int ca = abs(c);
    Int two = 2 * ca;
    // r = -b mod 2|c|, placed in (U - 2|c|, U] with U = sqrt(D) (or |c| when |c| > sqrt(D))
    Int r = (-b) % two;
    if (r < 0) r += two;
    Int upper = (ca <= sqrtD) ? sqrtD : ca;
    r += two * ((upper - r) / two);
    Int a2 = c;
    Int c2 = (r * r - D) / (4 * c);
    a = a2;
    b = r;
    c = c2;
}

std::vector<std::array<Int, 3>> reduced_forms(uint64_t D, const arith::SpfSieve* sieve) {
    validate_discriminant(Int(D));
    std::vector<std::array<Int, 3>> out;
    uint64_t s = arith::isqrt64(D);
    uint64_t b0 = (D % 2 == 0) ? 2 : 1;
    for (uint64_t b = b0; b <= s; b += 2) {
        if (b * b >= D) break;
        uint64_t M = (D - b * b) / 4;
        Factorization f = (sieve && M <= sieve->bound()) ? sieve->factorize(M)
                                                         : arith::factorize(M);
        // all divisors d of M with sqrt(D)-b < 2d < sqrt(D)+b
        std::vector<uint64_t> divs{1};
        for (auto& [p, e] : f) {
            size_t sz = divs.size();
            uint64_t pk = 1;
            for (uint32_t i = 0; i < e; ++i) {
                pk *= p;
                for (size_t j = 0; j < sz; ++j) divs.push_back(divs[j] * pk);
            }
        }
        for (uint64_t d : divs) {
            if (2 * d > b) {
                unsigned __int128 q = (unsigned __int128)(2 * d - b) * (2 * d - b);
                if (q >= D) continue;  // 2d >= sqrt(D)+b
            }
            unsigned __int128 q2 = (unsigned __int128)(2 * d + b) * (2 * d + b);
            if (q2 <= D) continue;  // 2d <= sqrt(D)-b
            uint64_t cc = M / d;
            if (arith::gcd3(d, b, cc) != 1) continue;
            out.push_back({Int(d), Int(b), Int(-(Int(cc)))});
            out.push_back({Int(-(Int(d))), Int(b), Int(cc)});
        }
    }
    return out;
}

namespace {
struct FormKey {
    int64_t a, b;
    bool operator==(const FormKey&) const = default;
};
struct FormKeyHash {
    size_t operator()(const FormKey& k) const {
        uint64_t h = static_cast<uint64_t>(k.a) * 0x9e3779b97f4a7c15ull;
        h ^= static_cast<uint64_t>(k.b) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        return static_cast<size_t>(h);
    }
};
}  // namespace

static uint64_t count_cycles(uint64_t D, const arith::SpfSieve* sieve) {
    auto forms = reduced_forms(D, sieve);
    std::unordered_set<FormKey, FormKeyHash> seen;
    seen.reserve(forms.size() * 2);
    Int bigD(D), sD = sqrt(bigD);
    uint64_t cycles = 0;
    for (auto& f : forms) {
        FormKey k{static_cast<int64_t>(f[0]), static_cast<int64_t>(f[1])};
        if (seen.count(k)) continue;
        ++cycles;
        Int a = f[0], b = f[1], c = f[2];
        // walk the cycle, marking every form on it
        do {
            seen.insert({static_cast<int64_t>(a), static_cast<int64_t>(b)});
            rho_step(a, b, c, bigD, sD);
        } while (!(a == f[0] && b == f[1]));
    }
    return cycles;
}

uint64_t class_number(uint64_t D, const arith::SpfSieve& sieve) { return count_cycles(D, &sieve); }

uint64_t class_number(uint64_t D) { return count_cycles(D, nullptr); }

namespace {
// log of a positive cpp_int via top bits + exponent
double log_int(const Int& n) {
    assert(n > 0);
    size_t bits = msb(n);  // boost: index of highest set bit
    if (bits < 62) return std::log(static_cast<double>(n.convert_to<uint64_t>()));
    Int top = n >> (bits - 52);
    return std::log(top.convert_to<double>()) + static_cast<double>(bits - 52) * std::log(2.0);
}
}  // namespace

PellFundamental fundamental_pell(const Int& D) {
    validate_discriminant(D);
    Int sD = sqrt(D);
    // principal reduced form (1, b0, (b0^2-D)/4) with b0 = max b <= sqrt(D), b = D mod 2
    Int b0 = sD;
    if ((b0 - D) % 2 != 0) b0 -= 1;
    Int a = 1, b = b0, c = (b0 * b0 - D) / 4;
    assert(is_reduced(a, b, c, D));

    // One full rho cycle; accumulate the automorph G = g_{l-1} ... g_0 with
    // g_i = [[0,-1],[1,m_i]], m_i = -(b_i + b_{i+1}) / (2 c_i), so that
    // Q((x,y) G) = Q(x,y).
    Int G11 = 1, G12 = 0, G21 = 0, G22 = 1;
    Int a0 = a, bq = b;
    do {
        Int pb = b, pc = c;
        rho_step(a, b, c, D, sD);
        Int m = -(pb + b) / (2 * pc);
        // left-multiply by [[0,-1],[1,m]]
        Int n11 = -G21, n12 = -G22;
        Int n21 = G11 + m * G21, n22 = G12 + m * G22;
        G11 = n11; G12 = n12; G21 = n21; G22 = n22;
    } while (!(a == a0 && b == bq));

    Int t = G11 + G22;
    if (t < 0) { t = -t; G11 = -G11; G12 = -G12; G21 = -G21; G22 = -G22; }
    Int u = gcd(gcd(abs(G21), abs(G11 - G22)), abs(G12));
    if (t * t - D * u * u != 4) throw std::logic_error("fundamental_pell: cycle automorph failed");

    PellFundamental out;
    out.D = D;
    out.t = t;
    out.u = u;
    if (t <= Int(uint64_t(1) << 52)) {
        double tt = t.convert_to<double>();
        out.log_eps = std::log((tt + std::sqrt(tt * tt - 4.0)) / 2.0);
    } else {
        out.log_eps = log_int(t);  // eps = t - O(1/t); correction below double precision
    }
    return out;
}

std::pair<Int, Int> pell_power(const Int& D, const Int& t1, const Int& u1, unsigned j) {
    Int t = 2, u = 0;  // identity: eps^0 corresponds to (2, 0)
    for (unsigned i = 0; i < j; ++i) {
        Int nt = (t * t1 + D * u * u1) / 2;
        Int nu = (t * u1 + t1 * u) / 2;
        t = nt;
        u = nu;
    }
    return {t, u};
}

GammaMatrix gamma_from_form(const QuadForm& q, const Int& t, const Int& u) {
    Int D = discriminant(q);
    if (t <= 0 || u <= 0 || t * t - D * u * u != 4)
        throw std::invalid_argument("gamma_from_form: (t,u) must solve t^2 - D u^2 = 4");
    if ((t + q.b * u) % 2 != 0)
        throw std::invalid_argument("gamma_from_form: t + b u must be even");
    return GammaMatrix((t + q.b * u) / 2, -q.c * u, q.a * u, (t - q.b * u) / 2);
}

GammaInvariants invariants_of(const GammaMatrix& g) {
    Int m11 = g.g11, m12 = g.g12, m21 = g.g21, m22 = g.g22;
    if (m11 + m22 < 0) { m11 = -m11; m12 = -m12; m21 = -m21; m22 = -m22; }
    Int t = m11 + m22;
    if (t <= 2) throw std::invalid_argument("invariants_of: matrix must be hyperbolic");
    Int u = gcd(gcd(abs(m21), abs(m11 - m22)), abs(m12));
    Int a = m21 / u, b = (m11 - m22) / u, c = -m12 / u;
    Int D = (t * t - 4) / (u * u);
    if (D != b * b - 4 * a * c) throw std::logic_error("invariants_of: discriminant mismatch");
    return GammaInvariants{t, u, QuadForm(a, b, c), D};
}

bool in_congruence_subgroup(const GammaMatrix& g, uint64_t n) {
    if (n == 0) throw std::invalid_argument("n must be positive");
    Int N(n);
    auto zmod = [&](const Int& x) { Int r = x % N; if (r < 0) r += N; return r; };
    bool by_congruence = zmod(g.g12) == 0 && zmod(g.g21) == 0 && zmod(g.g11 - g.g22) == 0 &&
                         zmod(g.g11 * g.g11 - 1) == 0;
    bool by_u = invariants_of(g).u % N == 0;
    if (by_congruence != by_u) throw std::logic_error("Gamma-hat membership criteria disagree");
    return by_u;
}

}  // namespace qf
}  // namespace cnsum
