#include "cnsum/group_oracle.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <stdexcept>
#include <unordered_map>

#include "cnsum/quadform.hpp"

namespace cnsum {
namespace oracle {

namespace {

uint64_t pack(uint32_t a, uint32_t b, uint32_t c, uint32_t d) {
    return (uint64_t(a) << 48) | (uint64_t(b) << 32) | (uint64_t(c) << 16) | uint64_t(d);
}

// Iterate all of SL2(Z_n) row by row: rows (a,b) with gcd(a,b,n) = 1,
// second rows (c0 + t a, d0 + t b).
template <typename F>
void for_each_sl2(uint32_t n, F&& fn) {
    for (uint32_t a = 0; a < n; ++a) {
        for (uint32_t b = 0; b < n; ++b) {
            if (std::gcd(std::gcd(a, b), n) != 1) continue;
            // x a + y b = g with gcd(g, n) = 1
            int64_t x, y;
            int64_t g = std::gcd<int64_t>(a, b);
            {
                // extended gcd
                int64_t r0 = a, r1 = b, x0 = 1, x1 = 0, y0 = 0, y1 = 1;
                while (r1 != 0) {
                    int64_t q = r0 / r1;
                    std::tie(r0, r1) = std::make_tuple(r1, r0 - q * r1);
                    std::tie(x0, x1) = std::make_tuple(x1, x0 - q * x1);
                    std::tie(y0, y1) = std::make_tuple(y1, y0 - q * y1);
                }
                g = r0; x = x0; y = y0;
                if (a == 0 && b == 0) { g = 0; }
            }
            if (g == 0) continue;  // only n = 1 edge
            // g invertible mod n since gcd(a,b,n)=1 and gcd includes g's part
            uint64_t ginv = 0;
            {
                int64_t r0 = static_cast<int64_t>(n), r1 = g % static_cast<int64_t>(n), s0 = 0, s1 = 1;
                if (r1 < 0) r1 += n;
                if (r1 == 0) continue;  // g = 0 mod n cannot happen when gcd(a,b,n)=1 unless n=1
                while (r1 != 0) {
                    int64_t q = r0 / r1;
                    std::tie(r0, r1) = std::make_tuple(r1, r0 - q * r1);
                    std::tie(s0, s1) = std::make_tuple(s1, s0 - q * s1);
                }
                if (r0 != 1) continue;  // gcd(g, n) != 1: row not unimodular mod n
                ginv = static_cast<uint64_t>(((s0 % static_cast<int64_t>(n)) + n) % n);
            }
            auto mod = [&](int64_t v) {
                int64_t r = v % static_cast<int64_t>(n);
                if (r < 0) r += n;
                return static_cast<uint32_t>(r);
            };
            uint32_t d0 = mod(static_cast<int64_t>((x % static_cast<int64_t>(n) + n) % n * ginv));
            uint32_t c0 = mod(-static_cast<int64_t>((y % static_cast<int64_t>(n) + n) % n * ginv));
            for (uint32_t t = 0; t < n; ++t) {
                uint32_t c = static_cast<uint32_t>((c0 + uint64_t(t) * a) % n);
                uint32_t d = static_cast<uint32_t>((d0 + uint64_t(t) * b) % n);
                fn(a, b, c, d);
            }
        }
    }
}

bool is_canonical(uint32_t a, uint32_t b, uint32_t c, uint32_t d, uint32_t n,
                  const std::vector<uint32_t>& roots) {
    uint64_t key = pack(a, b, c, d);
    for (uint32_t al : roots) {
        if (al == 1) continue;
        uint64_t k2 = pack(static_cast<uint32_t>(uint64_t(al) * a % n), static_cast<uint32_t>(uint64_t(al) * b % n),
                           static_cast<uint32_t>(uint64_t(al) * c % n), static_cast<uint32_t>(uint64_t(al) * d % n));
        if (k2 < key) return false;
    }
    return true;
}

uint32_t val_at(uint64_t p, uint32_t m_exp, uint64_t modulus, uint32_t x) {
    // p-adic valuation of residue x mod modulus = p^{m_exp}; m_exp if x = 0
    if (x == 0) return m_exp;
    uint32_t v = 0;
    while (x % p == 0) { x = static_cast<uint32_t>(x / p); ++v; }
    return v;
}

}  // namespace

std::vector<uint32_t> unit_square_roots(uint32_t n) {
    if (n == 1) return {1};
    std::vector<uint32_t> roots;
    for (uint32_t a = 1; a < n; ++a)
        if ((uint64_t(a) * a) % n == 1) roots.push_back(a);
    return roots;
}

std::vector<FiniteMatrix> enumerate_psl2(uint32_t n, uint32_t cap) {
    if (n == 0 || n > cap) throw std::invalid_argument("enumerate_psl2: modulus over cap");
    std::vector<FiniteMatrix> out;
    if (n == 1) {
        out.push_back({0, 0, 0, 0, 1});
        return out;
    }
    auto roots = unit_square_roots(n);
    for_each_sl2(n, [&](uint32_t a, uint32_t b, uint32_t c, uint32_t d) {
        if (is_canonical(a, b, c, d, n, roots)) out.push_back({a, b, c, d, n});
    });
    return out;
}

std::optional<LocalData> local_data(const FiniteMatrix& g, uint64_t p, uint32_t r, uint32_t k) {
    uint32_t n = g.n;
    uint32_t m_exp = 0;
    {
        uint64_t m = 1;
        while (m < n) { m *= p; ++m_exp; }
        if (m != n) throw std::invalid_argument("local_data: modulus is not the expected prime power");
    }
    // required level: p^{r+k} (odd p) or 2^{r+k+2} (p = 2)
    uint32_t need = (p == 2) ? r + k + 2 : r + k;
    if (m_exp != need) throw std::invalid_argument("local_data: matrix modulus mismatch");

    uint32_t diff = static_cast<uint32_t>((uint64_t(g.a) + n - g.d) % n);
    uint32_t negb = static_cast<uint32_t>((uint64_t(n) - g.b) % n);
    uint32_t v = std::min({val_at(p, m_exp, n, g.c), val_at(p, m_exp, n, diff), val_at(p, m_exp, n, g.b)});
    if (v != k) return std::nullopt;
    uint64_t pk = 1;
    for (uint32_t i = 0; i < k; ++i) pk *= p;
    uint64_t res_mod = 1;  // p^r, or 2^{r+2}
    for (uint32_t i = 0; i < ((p == 2) ? r + 2 : r); ++i) res_mod *= p;
    uint64_t A = (g.c / pk) % res_mod;
    uint64_t B = (diff / pk) % res_mod;
    uint64_t C = (negb / pk) % res_mod;
    uint64_t delta = ((B * B % res_mod) + 4 * res_mod - (4 * ((A * C) % res_mod)) % res_mod) % res_mod;
    uint64_t T = (uint64_t(g.a) + g.d) % n;
    // trace congruence (tsquare): T^2 = 4 + delta p^{2k} mod p^{r+k} (2^{r+k+2} for p=2)
    uint64_t cong_mod = n;
    uint64_t p2k = pk * pk % cong_mod;
    uint64_t lhs = T * T % cong_mod;
    uint64_t rhs = (4 + delta % cong_mod * p2k) % cong_mod;
    if (lhs != rhs) throw std::logic_error("local_data: trace congruence failed");
    return LocalData{k, static_cast<uint32_t>(T), static_cast<uint32_t>(A), static_cast<uint32_t>(B),
                     static_cast<uint32_t>(C), delta};
}

namespace {

// One enumeration of PSL2(Z_{p^{m}}) tallied by (valuation, delta mod p^r
// (2^{r+2} for p=2)); slots with val beyond what r allows are degenerate.
struct SlotTally {
    std::vector<std::vector<uint64_t>> by_k_delta;  // [k][delta], k = 0..k_limit
    uint64_t degenerate = 0;
    uint64_t total = 0;
};

std::map<std::tuple<uint64_t, uint32_t, uint32_t>, SlotTally> g_slot_cache;
std::mutex g_slot_mutex;

SlotTally compute_slots(uint64_t p, uint32_t m_exp, uint32_t r) {
    uint64_t n64 = 1;
    for (uint32_t i = 0; i < m_exp; ++i) n64 *= p;
    if (n64 > 4096) throw std::invalid_argument("group oracle: level too large");
    uint32_t n = static_cast<uint32_t>(n64);
    uint64_t res_mod = 1;  // p^r (2^{r+2} for p = 2)
    for (uint32_t i = 0; i < ((p == 2) ? r + 2 : r); ++i) res_mod *= p;
    uint32_t k_limit = (p == 2) ? m_exp - r - 2 : m_exp - r;  // delta extractable iff val <= k_limit

    SlotTally tally;
    tally.by_k_delta.assign(k_limit + 1, std::vector<uint64_t>(res_mod, 0));
    auto roots = unit_square_roots(n);
    for_each_sl2(n, [&](uint32_t a, uint32_t b, uint32_t c, uint32_t d) {
        if (!is_canonical(a, b, c, d, n, roots)) return;
        ++tally.total;
        uint32_t diff = static_cast<uint32_t>((uint64_t(a) + n - d) % n);
        uint32_t v = std::min({val_at(p, m_exp, n, c), val_at(p, m_exp, n, diff), val_at(p, m_exp, n, b)});
        if (v > k_limit) {
            ++tally.degenerate;
            return;
        }
        uint64_t pk = 1;
        for (uint32_t i = 0; i < v; ++i) pk *= p;
        uint64_t A = (c / pk) % res_mod;
        uint64_t B = (diff / pk) % res_mod;
        uint64_t C = ((uint64_t(n) - b) % n / pk) % res_mod;
        uint64_t delta = ((B * B % res_mod) + 4 * res_mod - (4 * ((A * C) % res_mod)) % res_mod) % res_mod;
        ++tally.by_k_delta[v][delta];
    });
    return tally;
}

const SlotTally& slots(uint64_t p, uint32_t m_exp, uint32_t r) {
    std::lock_guard<std::mutex> lock(g_slot_mutex);
    auto key = std::make_tuple(p, m_exp, r);
    auto it = g_slot_cache.find(key);
    if (it == g_slot_cache.end()) it = g_slot_cache.emplace(key, compute_slots(p, m_exp, r)).first;
    return it->second;
}

}  // namespace

uint64_t gamma_hat_count_oracle(uint64_t p, uint32_t r, uint32_t k, uint64_t delta) {
    uint32_t m_exp = (p == 2) ? r + k + 2 : r + k;
    const SlotTally& t = slots(p, m_exp, r);
    return t.by_k_delta[k][delta % t.by_k_delta[k].size()];
}

uint64_t count_T_oracle(uint64_t p, uint32_t r, uint32_t k, uint64_t delta) {
    if (p == 2) {
        uint64_t range = uint64_t(1) << (r + k + 1);
        uint64_t mod = range * 2;  // 2^{r+k+2}
        uint64_t target = (4 + ((delta % mod) << (2 * k))) % mod;
        uint64_t cnt = 0;
        for (uint64_t T = 0; T < range; ++T)
            if (T * T % mod == target) ++cnt;
        return cnt;
    }
    uint64_t mod = 1;
    for (uint32_t i = 0; i < r + k; ++i) mod *= p;
    uint64_t p2k = 1;
    for (uint32_t i = 0; i < 2 * k; ++i) p2k = p2k * p % mod;
    uint64_t target = (4 + delta % mod * p2k) % mod;
    uint64_t cnt = 0;
    for (uint64_t T = 0; T < mod; ++T)
        if (T * T % mod == target) ++cnt;
    return cnt;
}

uint64_t count_A_oracle(uint64_t p, uint32_t r, uint64_t delta) {
    if (p == 2) {
        uint64_t range = uint64_t(1) << (r + 1);
        uint64_t mod = uint64_t(1) << (r + 2);
        delta %= mod;
        uint64_t cnt = 0;
        for (uint64_t A = 0; A < range; ++A)
            for (uint64_t B = 0; B < range; ++B)
                for (uint64_t C = 0; C < range; ++C) {
                    if (((A | B | C) & 1) == 0) continue;
                    if ((B * B + 4 * mod - 4 * A * C % mod) % mod == delta) ++cnt;
                }
        return cnt;
    }
    uint64_t mod = 1;
    for (uint32_t i = 0; i < r; ++i) mod *= p;
    delta %= mod;
    uint64_t cnt = 0;
    for (uint64_t A = 0; A < mod; ++A)
        for (uint64_t B = 0; B < mod; ++B)
            for (uint64_t C = 0; C < mod; ++C) {
                if (A % p == 0 && B % p == 0 && C % p == 0) continue;
                if ((B * B % mod + 4 * mod - 4 * (A * C % mod) % mod) % mod == delta) ++cnt;
            }
    return cnt;
}

bool slot_partition_check(uint64_t p, uint32_t r, uint32_t k_max) {
    // at level p^{r+k_max} (odd p) / 2^{r+k_max+2} (p=2): every element is
    // either in exactly one (k, delta) slot or degenerate, totalling v(level)
    uint32_t m_exp = (p == 2) ? r + k_max + 2 : r + k_max;
    const SlotTally& t = slots(p, m_exp, r);
    uint64_t sum = t.degenerate;
    for (auto& row : t.by_k_delta)
        for (uint64_t c : row) sum += c;
    uint64_t lvl = 1;
    for (uint32_t i = 0; i < m_exp; ++i) lvl *= p;
    return sum == t.total && Int(sum) == arith::psl2_order(lvl);
}

namespace {

struct ClassSizes {
    // canonical-key -> class size, plus per-element class id
    std::unordered_map<uint64_t, uint32_t> class_of;
    std::vector<uint64_t> class_size;
};

FiniteMatrix canon(uint32_t a, uint32_t b, uint32_t c, uint32_t d, uint32_t n,
                   const std::vector<uint32_t>& roots) {
    uint64_t best = pack(a, b, c, d);
    FiniteMatrix bm{a, b, c, d, n};
    for (uint32_t al : roots) {
        if (al == 1) continue;
        FiniteMatrix m{static_cast<uint32_t>(uint64_t(al) * a % n), static_cast<uint32_t>(uint64_t(al) * b % n),
                       static_cast<uint32_t>(uint64_t(al) * c % n), static_cast<uint32_t>(uint64_t(al) * d % n), n};
        uint64_t k = pack(m.a, m.b, m.c, m.d);
        if (k < best) { best = k; bm = m; }
    }
    return bm;
}

FiniteMatrix mul(const FiniteMatrix& x, const FiniteMatrix& y, const std::vector<uint32_t>& roots) {
    uint32_t n = x.n;
    auto m = [&](uint64_t v) { return static_cast<uint32_t>(v % n); };
    return canon(m(uint64_t(x.a) * y.a + uint64_t(x.b) * y.c), m(uint64_t(x.a) * y.b + uint64_t(x.b) * y.d),
                 m(uint64_t(x.c) * y.a + uint64_t(x.d) * y.c), m(uint64_t(x.c) * y.b + uint64_t(x.d) * y.d), n,
                 roots);
}

ClassSizes conjugacy_classes(uint32_t n) {
    auto roots = unit_square_roots(n);
    auto elems = enumerate_psl2(n, 4096);
    ClassSizes cs;
    cs.class_of.reserve(elems.size() * 2);
    // generators S = [[0,-1],[1,0]], T = [[1,1],[0,1]] and inverses
    FiniteMatrix S = canon(0, n - 1, 1, 0, n, roots);
    FiniteMatrix T = canon(1, 1, 0, 1, n, roots);
    FiniteMatrix Si = canon(0, 1, n - 1, 0, n, roots);
    FiniteMatrix Ti = canon(1, n - 1, 0, 1, n, roots);
    std::vector<std::pair<FiniteMatrix, FiniteMatrix>> gens = {{S, Si}, {T, Ti}};
    for (auto& e : elems) {
        uint64_t key = pack(e.a, e.b, e.c, e.d);
        if (cs.class_of.count(key)) continue;
        uint32_t id = static_cast<uint32_t>(cs.class_size.size());
        std::vector<FiniteMatrix> stack{e};
        cs.class_of[key] = id;
        uint64_t size = 0;
        while (!stack.empty()) {
            FiniteMatrix g = stack.back();
            stack.pop_back();
            ++size;
            for (auto& [h, hi] : gens) {
                FiniteMatrix conj = mul(mul(hi, g, roots), h, roots);
                uint64_t ck = pack(conj.a, conj.b, conj.c, conj.d);
                if (!cs.class_of.count(ck)) {
                    cs.class_of[ck] = id;
                    stack.push_back(conj);
                }
            }
        }
        cs.class_size.push_back(size);
    }
    return cs;
}

}  // namespace

bool crt_class_check(uint32_t n1, uint32_t n2) {
    if (std::gcd(n1, n2) != 1) throw std::invalid_argument("crt_class_check: moduli must be coprime");
    uint32_t n = n1 * n2;
    auto cs = conjugacy_classes(n);
    auto cs1 = conjugacy_classes(n1);
    auto cs2 = conjugacy_classes(n2);
    auto roots1 = unit_square_roots(n1);
    auto roots2 = unit_square_roots(n2);
    auto elems = enumerate_psl2(n, 4096);
    for (auto& e : elems) {
        uint64_t size = cs.class_size[cs.class_of.at(pack(e.a, e.b, e.c, e.d))];
        FiniteMatrix p1 = canon(e.a % n1, e.b % n1, e.c % n1, e.d % n1, n1, roots1);
        FiniteMatrix p2 = canon(e.a % n2, e.b % n2, e.c % n2, e.d % n2, n2, roots2);
        uint64_t s1 = n1 == 1 ? 1 : cs1.class_size[cs1.class_of.at(pack(p1.a, p1.b, p1.c, p1.d))];
        uint64_t s2 = n2 == 1 ? 1 : cs2.class_size[cs2.class_of.at(pack(p2.a, p2.b, p2.c, p2.d))];
        if (size != s1 * s2) return false;
    }
    return true;
}

bool cong_lemma_check(int sample_size, uint32_t n_max, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> len_dist(4, 18);
    std::uniform_int_distribution<int> exp_dist(1, 3);
    std::uniform_int_distribution<int> which(0, 1);
    int done = 0;
    while (done < sample_size) {
        // positive word in T = [[1,1],[0,1]] and U = [[1,0],[1,1]]
        int64_t m11 = 1, m12 = 0, m21 = 0, m22 = 1;
        int len = len_dist(rng);
        bool overflow = false;
        for (int i = 0; i < len && !overflow; ++i) {
            int e = exp_dist(rng);
            if (which(rng)) {
                // right-multiply by T^e: columns (c1, c2) -> (c1, e*c1 + c2)
                m12 += e * m11;
                m22 += e * m21;
            } else {
                m11 += e * m12;
                m21 += e * m22;
            }
            if (std::abs(m11) > (int64_t(1) << 55) || std::abs(m12) > (int64_t(1) << 55) ||
                std::abs(m21) > (int64_t(1) << 55) || std::abs(m22) > (int64_t(1) << 55))
                overflow = true;
        }
        if (overflow) continue;
        if (std::abs(m11 + m22) <= 2) continue;
        qf::GammaMatrix g{Int(m11), Int(m12), Int(m21), Int(m22)};
        for (uint32_t n = 1; n <= n_max; ++n) {
            // throws if the two membership criteria ever disagree
            (void)qf::in_congruence_subgroup(g, n);
        }
        ++done;
    }
    return true;
}

}  // namespace oracle
}  // namespace cnsum
