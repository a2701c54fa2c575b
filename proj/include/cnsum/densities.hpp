#pragma once

/*
 * Exact local densities and the global density coefficients for class
 * number sums in arithmetic progressions.
 *
 * Local layer (exact rationals): for a prime p, r >= 1, and a residue
 * delta (mod p^r, or mod 2^{r+2} when p = 2),
 *
 *   eta(D(p) = delta mod p^r, p^k || u) = #Gamma-hat(delta; p^r, k) / v(p^{r+k})
 *
 * summed over k >= 0 gives eta(D(p) = delta mod p^r); the tail is an
 * exact geometric series.  A closed form (one case split per residue
 * class) accelerates the same value and is checked against the series.
 *
 * Global layer: eta(D = delta mod n) = sum_alpha W(alpha;n) prod_p
 * eta(D(p) = delta alpha^2 mod p^r), with W evaluated two independent
 * ways (direct beta-series and character Euler products), and the
 * fundamental-discriminant variant with its squarefree prefactor.
 */

#include <complex>
#include <cstdint>
#include <vector>

#include "cnsum/arith.hpp"

namespace cnsum {
namespace dens {

struct LocalKey {
    uint64_t p;
    uint32_t r;
    uint32_t k;      // u-valuation; only meaningful for the u-conditioned densities
    uint64_t delta;  // mod p^r (mod 2^{r+2} when p = 2)
};

// A real value together with a rigorous-by-construction truncation bound.
struct TruncatedReal {
    double value = 0;
    double error_bound = 0;
    int64_t truncation = 0;  // the cutoff (primes P or series terms M) that produced it
};

enum class ResidueClass { unit_square_shift, minus_four, divisible, otherwise, zero_measure };

struct ResidueClassification {
    ResidueClass tag;
    uint32_t l = 0;  // shift exponent, for unit_square_shift
    friend bool operator==(const ResidueClassification&, const ResidueClassification&) = default;
};

// --- Proposition-level counts (closed forms) ---
uint64_t count_T(uint64_t p, uint32_t r, uint32_t k, uint64_t delta);
uint64_t count_A(uint64_t p, uint32_t r, uint64_t delta);
// #Gamma-hat(delta; p^r, k); equals T*A/#Z^(2) for odd p, and the
// square-root-count histogram formula for p = 2.  Always an integer.
Rat gamma_hat_count(uint64_t p, uint32_t r, uint32_t k, uint64_t delta);

// --- local densities (exact rationals) ---
Rat eta_local_u(uint64_t p, uint32_t r, uint32_t k, uint64_t delta);
Rat eta_local_series(uint64_t p, uint32_t r, uint64_t delta);
Rat eta_local_closed(uint64_t p, uint32_t r, uint64_t delta);
ResidueClassification classify_residue(uint64_t p, uint32_t r, uint64_t delta);

// eta of a union of 2-adic residue classes mod 2^s (s >= 1), lifted to
// level max(2^s, 8).
Rat eta_two_residue_set(const std::vector<uint64_t>& residues, uint32_t s);

// eta(D(p) = delta mod p^r, p^2 notdiv D), odd p.
Rat eta_local_not_p2(uint64_t p, uint32_t r, uint64_t delta);

// eta(n | D) = prod_{p^r || n} eta(p^r | D(p)).
Rat eta_divides(uint64_t n);

// --- global layer ---
struct EtaParams {
    uint32_t prime_cutoff = 100000;  // P for Euler products
    uint64_t term_cutoff = 1000000;  // M for the direct beta series
    bool use_euler = true;           // W route used inside eta_progression / eta_fundamental
};

TruncatedReal xi(uint64_t n, uint32_t prime_cutoff);
Rat beta_exact(uint64_t m);

struct DirichletCharacter {
    uint64_t modulus;
    // chi(a) for a in [0, modulus); zero off the unit group
    std::vector<std::complex<double>> values;
    std::complex<double> operator()(uint64_t a) const { return values[a % modulus]; }
    bool principal = false;
};
std::vector<DirichletCharacter> characters(uint64_t n);

TruncatedReal W_direct(uint64_t alpha, uint64_t n, uint64_t m_cutoff);
TruncatedReal W_euler(uint64_t alpha, uint64_t n, uint32_t prime_cutoff);

struct EtaValue {
    bool exact = false;
    Rat rational;        // meaningful when exact
    TruncatedReal real;  // always populated
};

EtaValue eta_progression(uint64_t n, uint64_t delta, const EtaParams& params = {});
EtaValue eta_fundamental(uint64_t n, uint64_t delta, const EtaParams& params = {});

// prod_{p notdiv 2n} (1 - 2p/(p^3-1)); the Omega prefactor of Theorem 2.
TruncatedReal omega_prefactor(uint64_t n, uint32_t prime_cutoff);

double to_double(const Rat& r);

}  // namespace dens
}  // namespace cnsum
