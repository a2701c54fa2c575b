#pragma once

/*
 * Brute-force ground truth over finite groups.  PSL2(Z_n) here means
 * SL2(Z_n)/{alpha*I : alpha^2 = 1 mod n}, which is the image of SL2(Z)
 * and has order v(n) = prod p^{3r-2}(p^2-1)/#Z_{p^r}^(2).
 *
 * An element gamma in the congruence slot k carries local data
 * (T, A, B, C) via
 *
 *   gamma = [ (T+B p^k)/2   -C p^k ]   mod p^{r+k}   (p odd)
 *           [    A p^k    (T-B p^k)/2 ]
 *
 * with delta = D(p) = B^2 - 4AC mod p^r.  For p = 2 the residue delta
 * lives mod 2^{r+2} and the matrices are taken mod 2^{r+k+2} (the
 * strengthened 2-adic congruence); only at that level is delta a
 * well-defined function of the matrix.
 */

#include <cstdint>
#include <optional>
#include <vector>

#include "cnsum/arith.hpp"

namespace cnsum {
namespace oracle {

struct FiniteMatrix {
    // entries mod n; canonical representative: lexicographically smallest
    // among {alpha*gamma : alpha^2 = 1 mod n}
    uint32_t a, b, c, d;
    uint32_t n;
    friend bool operator==(const FiniteMatrix&, const FiniteMatrix&) = default;
};

struct LocalData {
    uint32_t k;        // valuation of gcd(g21, g11-g22, g12) at p
    uint32_t T;        // trace residue
    uint32_t A, B, C;  // unit-scaled residues
    uint64_t delta;    // B^2 - 4AC mod p^r (mod 2^{r+2} for p = 2)
};

inline constexpr uint32_t kDefaultCap = 130;

// All v(n) canonical elements; rejects n > cap.
std::vector<FiniteMatrix> enumerate_psl2(uint32_t n, uint32_t cap = kDefaultCap);

// alpha with alpha^2 = 1 mod n.
std::vector<uint32_t> unit_square_roots(uint32_t n);

// Local data at valuation k for a matrix mod p^{r+k} (mod 2^{r+k+2} for
// p = 2); nullopt if the matrix's u-valuation differs from k.  Asserts
// the trace congruence T^2 = 4 + delta p^{2k}.
std::optional<LocalData> local_data(const FiniteMatrix& g, uint64_t p, uint32_t r, uint32_t k);

// #{gamma in PSL2(Z_{p^{r+k}}) : val = k, D(p) = delta mod p^r}
// (for p = 2 the group is PSL2(Z_{2^{r+k+2}}) and delta is mod 2^{r+2}).
uint64_t gamma_hat_count_oracle(uint64_t p, uint32_t r, uint32_t k, uint64_t delta);

// #{T in Z_{p^{r+k}} : T^2 = 4 + delta p^{2k} mod p^{r+k}}; for p = 2,
// T ranges over Z_{2^{r+k+1}} with the congruence mod 2^{r+k+2}.
uint64_t count_T_oracle(uint64_t p, uint32_t r, uint32_t k, uint64_t delta);

// #{(A,B,C) in Z_{p^r}^3 : p notdiv gcd(A,B,C), B^2-4AC = delta mod p^r};
// for p = 2 the triple ranges over Z_{2^{r+1}}^3 with the congruence
// mod 2^{r+2} (8x the nominal table normalization).
uint64_t count_A_oracle(uint64_t p, uint32_t r, uint64_t delta);

// Partition check at one enumeration level: sum of all (k, delta) slot
// counts plus degenerate elements equals v(level).
bool slot_partition_check(uint64_t p, uint32_t r, uint32_t k_max);

// Every conjugacy class of PSL2(Z_{n1 n2}) has size #[g]_{n1} * #[g]_{n2}.
bool crt_class_check(uint32_t n1, uint32_t n2);

// For pseudo-random hyperbolic words in the modular group generators and
// each n <= n_max, membership in Gamma-hat(n) by definition equals n | u.
bool cong_lemma_check(int sample_size, uint32_t n_max = 12, uint64_t seed = 12345);

}  // namespace oracle
}  // namespace cnsum
