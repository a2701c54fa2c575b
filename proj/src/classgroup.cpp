#include "cnsum/classgroup.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include "cnsum/arith.hpp"

namespace cnsum {
namespace cg {

namespace {

using i128 = __int128;

int64_t xgcd64(int64_t a, int64_t b, int64_t& x, int64_t& y) {
    int64_t old_r = a, r = b, old_s = 1, s = 0, old_t = 0, t = 1;
    while (r != 0) {
        int64_t q = old_r / r;
        int64_t tmp = old_r - q * r; old_r = r; r = tmp;
        tmp = old_s - q * s; old_s = s; s = tmp;
        tmp = old_t - q * t; old_t = t; t = tmp;
    }
    if (old_r < 0) { old_r = -old_r; old_s = -old_s; old_t = -old_t; }
    x = old_s; y = old_t;
    return old_r;
}

bool is_reduced64(int64_t a, int64_t b, uint64_t D) {
    if (b <= 0) return false;
    unsigned __int128 b2 = (unsigned __int128)b * b;
    if (b2 >= D) return false;
    i128 t = 2 * (i128)(a < 0 ? -a : a);
    if ((unsigned __int128)((t + b) * (t + b)) <= D) return false;
    i128 s = t - b;
    if (s > 0 && (unsigned __int128)(s * s) >= D) return false;
    return true;
}

}  // namespace

Form64 ClassGroup::reduce_step(Form64 f) const {
    i128 ca = f.c < 0 ? -(i128)f.c : (i128)f.c;
    i128 two = 2 * ca;
    i128 r = (-(i128)f.b) % two;
    if (r < 0) r += two;
    i128 upper = (ca <= sD_) ? (i128)sD_ : ca;
    r += two * ((upper - r) / two);
    i128 c2 = ((r * r - (i128)D_) / (4 * (i128)f.c));
    return Form64{f.c, static_cast<int64_t>(r), static_cast<int64_t>(c2)};
}

ClassGroup::ClassGroup(uint64_t D) : D_(D) {
    sD_ = static_cast<int64_t>(arith::isqrt64(D));
    if (static_cast<uint64_t>(sD_) * sD_ == D || (D % 4 != 0 && D % 4 != 1) || D < 5)
        throw std::invalid_argument("ClassGroup: invalid discriminant");
    int64_t b0 = sD_;
    if (((b0 ^ static_cast<int64_t>(D)) & 1) != 0) --b0;
    principal_ = Form64{1, b0, static_cast<int64_t>(((i128)b0 * b0 - (i128)D_) / 4)};
    for (Form64 f = principal_;;) {
        principal_keys_.push_back(key(f));
        f = reduce_step(f);
        // one rho step keeps reduced forms reduced; stop on wraparound
        if (f == principal_) break;
        if (principal_keys_.size() > (1u << 22))
            throw std::logic_error("ClassGroup: principal cycle too long");
    }
    std::sort(principal_keys_.begin(), principal_keys_.end());
    cycle_cap_ = principal_keys_.size() * 128 + 256;
}

Form64 ClassGroup::reduce(Form64 f) const {
    while (!is_reduced64(f.a, f.b, D_)) f = reduce_step(f);
    return f;
}

std::vector<Form64> ClassGroup::cycle(const Form64& start) const {
    std::vector<Form64> out;
    Form64 f = start;
    do {
        out.push_back(f);
        f = reduce_step(f);
        if (out.size() > cycle_cap_) throw std::logic_error("ClassGroup: runaway cycle");
    } while (!(f == start));
    return out;
}

bool ClassGroup::is_principal(const Form64& f0) const {
    Form64 f = is_reduced64(f0.a, f0.b, D_) ? f0 : reduce(f0);
    Form64 start = f;
    size_t steps = 0;
    do {
        if (std::binary_search(principal_keys_.begin(), principal_keys_.end(), key(f))) return true;
        f = reduce_step(f);
        if (++steps > cycle_cap_) throw std::logic_error("ClassGroup: runaway cycle");
    } while (!(f == start));
    return false;
}

Form64 ClassGroup::compose(const Form64& f1, const Form64& f2) const {
    // Dirichlet composition through concordance: replace f2 by an equivalent
    // form whose leading coefficient is coprime to a1, then glue the middle
    // coefficients by CRT.  Correct for any pair of primitive forms.
    int64_t a1 = f1.a, b1 = f1.b;
    int64_t a2 = f2.a, b2 = f2.b, c2 = f2.c;
    if (std::gcd(a1 < 0 ? -a1 : a1, a2 < 0 ? -a2 : a2) != 1) {
        // f2(x,1) is coprime to a1 for some small x: mod each prime p | a1
        // the quadratic vanishes at most twice and never identically
        bool found = false;
        for (int64_t x0 = 0; x0 <= 4096; ++x0) {
            i128 val = ((i128)a2 * x0 + b2) * x0 + c2;
            if (val == 0) continue;
            i128 g = val < 0 ? -val : val;
            i128 aa = a1 < 0 ? -(i128)a1 : (i128)a1;
            while (aa != 0) { i128 t = g % aa; g = aa; aa = t; }
            if (g != 1) continue;
            // complete the row (x0, 1) to det 1: [[x0, 1], [x0-1, 1]]
            int64_t u = x0 - 1, v = 1;
            i128 nb = 2 * (i128)a2 * x0 * u + (i128)b2 * ((i128)x0 * v + u) + 2 * (i128)c2 * v;
            i128 nc = ((i128)a2 * u + b2) * u + c2;  // f2(u, 1)
            a2 = static_cast<int64_t>(val);
            b2 = static_cast<int64_t>(nb);
            c2 = static_cast<int64_t>(nc);
            found = true;
            break;
        }
        if (!found) throw std::logic_error("compose: no concordant representative found");
    }
    // B = b1 mod 2a1, B = b2 mod 2a2, with gcd(a1, a2) = 1
    i128 m1 = 2 * (i128)(a1 < 0 ? -a1 : a1);
    i128 m2 = 2 * (i128)(a2 < 0 ? -a2 : a2);
    int64_t inv_x, inv_y;
    int64_t ma2 = a2 < 0 ? -a2 : a2;
    int64_t r1 = static_cast<int64_t>(((a1 % ma2) + ma2) % ma2);
    if (ma2 > 1 && xgcd64(r1, ma2, inv_x, inv_y) != 1)
        throw std::logic_error("compose: leading coefficients not coprime");
    i128 diff = ((i128)b2 - b1) / 2;  // b1 = b2 = D (mod 2)
    i128 t = ma2 > 1 ? ((diff % ma2) * ((inv_x % ma2 + ma2) % ma2)) % ma2 : 0;
    if (t < 0) t += ma2;
    i128 B = (i128)b1 + 2 * (i128)a1 * t;
    i128 a3 = (i128)a1 * a2;
    i128 mod = 2 * (a3 < 0 ? -a3 : a3);
    B %= mod;
    if (B < 0) B += mod;
    if ((B * B - (i128)D_) % (4 * a3) != 0)
        throw std::logic_error("compose: middle coefficient congruence failed");
    i128 c3 = (B * B - (i128)D_) / (4 * a3);
    (void)m1;
    (void)m2;
    Form64 f{static_cast<int64_t>(a3), static_cast<int64_t>(B), static_cast<int64_t>(c3)};
    return reduce(f);
}

Form64 ClassGroup::pow(Form64 g, uint64_t e) const {
    Form64 result = reduce(principal_);
    while (e) {
        if (e & 1) result = compose(result, g);
        g = compose(g, g);
        e >>= 1;
    }
    return result;
}

std::optional<Form64> ClassGroup::prime_form(uint64_t q) const {
    if (arith::kronecker_symbol(static_cast<long long>(D_), q) != 1) return std::nullopt;
    for (uint64_t b = 0; b < 2 * q; ++b) {
        i128 num = (i128)b * b - (i128)D_;
        i128 m = 4 * (i128)q;
        if (((num % m) + m) % m == 0)
            return reduce(Form64{static_cast<int64_t>(q), static_cast<int64_t>(b),
                                 static_cast<int64_t>(num / m)});
    }
    return std::nullopt;
}

namespace {

// all hits n in [lo, hi] with g^n principal, via baby-step giant-step
std::vector<uint64_t> bsgs_hits(const ClassGroup& G, const Form64& g, uint64_t lo, uint64_t hi) {
    uint64_t W = hi - lo + 1;
    uint64_t B = static_cast<uint64_t>(std::ceil(std::sqrt(static_cast<double>(W)))) + 1;
    std::unordered_map<uint64_t, uint32_t> table;
    table.reserve(B * 24);
    Form64 cur = G.reduce(G.principal());
    for (uint64_t i = 0; i < B; ++i) {
        for (const Form64& f : G.cycle(cur)) table.emplace(ClassGroup::key(f), static_cast<uint32_t>(i));
        cur = G.compose(cur, g);
    }
    Form64 gB = G.pow(g, B);
    Form64 e = G.pow(g, lo);
    std::vector<uint64_t> hits;
    uint64_t steps = W / B + 2;
    for (uint64_t k = 0; k <= steps; ++k) {
        auto it = table.find(ClassGroup::key(e));
        if (it != table.end()) {
            // the table kept the smallest matching baby index; every hit is
            // still a multiple of ord(g), which is all the caller needs
            uint64_t n = lo + k * B;
            if (n >= it->second) {
                n -= it->second;
                if (n >= lo && n <= hi) hits.push_back(n);
            }
        }
        e = G.compose(e, gB);
    }
    std::sort(hits.begin(), hits.end());
    hits.erase(std::unique(hits.begin(), hits.end()), hits.end());
    return hits;
}

uint64_t order_from_multiple(const ClassGroup& G, const Form64& g, uint64_t n0) {
    uint64_t ord = n0;
    for (auto& [p, e] : arith::factorize(n0)) {
        for (uint32_t i = 0; i < e; ++i) {
            if (ord % p == 0 && G.is_principal(G.pow(g, ord / p))) ord /= p;
            else break;
        }
    }
    return ord;
}

uint64_t multiples_in(uint64_t L, uint64_t lo, uint64_t hi) {
    return hi / L - (lo - 1) / L;
}

}  // namespace

uint64_t class_number_in_window(const ClassGroup& G, uint64_t lo, uint64_t hi) {
    if (lo < 1) lo = 1;
    if (hi < lo) return 0;
    uint64_t L = 1;  // lcm of element orders found so far (divides h)
    uint64_t ord1 = 0;
    Form64 gen1{};
    int generators = 0;
    for (uint64_t q = 2; q < 2000 && generators < 8; ++q) {
        if (!arith::is_prime(q)) continue;
        auto pf = G.prime_form(q);
        if (!pf) continue;
        ++generators;
        auto hits = bsgs_hits(G, *pf, lo, hi);
        // h itself is always a hit for every generator, so an empty hit set
        // means the window misses h
        if (hits.empty()) return 0;
        uint64_t multiple = hits[0];
        for (uint64_t h : hits) multiple = std::gcd(multiple, h);
        uint64_t ord = order_from_multiple(G, *pf, multiple);
        if (generators == 1) { ord1 = ord; gen1 = *pf; }
        L = std::lcm(L, ord);
        if (multiples_in(L, lo, hi) == 1) return (lo + L - 1) / L * L;
    }
    if (L == 1 || multiples_in(L, lo, hi) == 0) return 0;
    // ambiguous: try a two-generator subgroup order when <g1> is small
    if (ord1 && ord1 <= 65536) {
        std::unordered_map<uint64_t, char> in_g1;
        Form64 cur = G.reduce(G.principal());
        for (uint64_t i = 0; i < ord1; ++i) {
            for (const Form64& f : G.cycle(cur)) in_g1.emplace(ClassGroup::key(f), 1);
            cur = G.compose(cur, gen1);
        }
        for (uint64_t q = 2; q < 2000; ++q) {
            if (!arith::is_prime(q)) continue;
            auto pf = G.prime_form(q);
            if (!pf) continue;
            Form64 e = *pf;
            uint64_t sub = 0;
            for (uint64_t j = 1; j <= hi / ord1 + 1; ++j) {
                if (in_g1.count(ClassGroup::key(e))) { sub = ord1 * j; break; }
                e = G.compose(e, *pf);
            }
            if (sub) {
                L = std::lcm(L, sub);
                if (multiples_in(L, lo, hi) == 1) return (lo + L - 1) / L * L;
            }
        }
    }
    return 0;
}

}  // namespace cg
}  // namespace cnsum
