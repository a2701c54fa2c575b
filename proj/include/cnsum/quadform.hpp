#pragma once

/*
 * Indefinite binary quadratic forms [a,b,c] = ax^2 + bxy + cy^2 with
 * gcd(a,b,c) = 1 and discriminant D = b^2 - 4ac > 0, not a square, and
 * the correspondence with hyperbolic elements of SL2(Z):
 *
 *   gamma(Q,(t,u)) = [ (t+bu)/2  -cu ]      t_g = trace, u_g = gcd(g21, g11-g22, -g12),
 *                    [  au   (t-bu)/2 ],    a = g21/u, b = (g11-g22)/u, c = -g12/u.
 *
 * h(D) counts cycles of reduced forms (narrow class number); a form is
 * reduced iff 0 < b < sqrt(D) and sqrt(D) - b < 2|a| < sqrt(D) + b.
 * One full rho-cycle of the principal form yields the fundamental
 * automorph, i.e. the minimal (t,u) with t^2 - D u^2 = 4.
 */

#include <optional>

#include "cnsum/arith.hpp"

namespace cnsum {
namespace qf {

struct QuadForm {
    Int a, b, c;

    QuadForm(Int a_, Int b_, Int c_);  // validates primitivity and D > 0 nonsquare
    friend bool operator==(const QuadForm&, const QuadForm&) = default;
};

struct GammaMatrix {
    // det = 1, |trace| > 2; stored with canonical PSL2 sign: the first
    // nonzero entry among (g11, g21) is positive.
    Int g11, g12, g21, g22;

    GammaMatrix(Int m11, Int m12, Int m21, Int m22);
    Int trace() const { return g11 + g22; }
    GammaMatrix operator*(const GammaMatrix& o) const;
    friend bool operator==(const GammaMatrix&, const GammaMatrix&) = default;
};

struct PellFundamental {
    Int D;
    Int t, u;        // minimal positive solution of t^2 - D u^2 = 4
    double log_eps;  // log((t + u sqrt(D))/2), relative error <= 1e-12
};

Int discriminant(const QuadForm& q);

// D > 0, D = 0,1 mod 4, not a square; throws otherwise.
void validate_discriminant(const Int& D);
bool is_valid_discriminant(const Int& D);

uint64_t class_number(uint64_t D);
uint64_t class_number(uint64_t D, const arith::SpfSieve& sieve);

PellFundamental fundamental_pell(const Int& D);

// j-th solution via the composition law (eps_j = eps^j).
std::pair<Int, Int> pell_power(const Int& D, const Int& t1, const Int& u1, unsigned j);

GammaMatrix gamma_from_form(const QuadForm& q, const Int& t, const Int& u);

struct GammaInvariants {
    Int t, u;
    QuadForm q;
    Int D;
};
// Uses the positive-trace representative of {+-gamma}.
GammaInvariants invariants_of(const GammaMatrix& g);

// gamma in Gamma-hat(n), evaluated BOTH as the congruence definition
// (gamma = alpha*I mod n, alpha^2 = 1) and as n | u_gamma; asserts they agree.
bool in_congruence_subgroup(const GammaMatrix& g, uint64_t n);

// Reduction machinery (exposed for tests and the census engine).
bool is_reduced(const Int& a, const Int& b, const Int& c, const Int& D);
void rho_step(Int& a, Int& b, Int& c, const Int& D, const Int& sqrtD);
std::vector<std::array<Int, 3>> reduced_forms(uint64_t D, const arith::SpfSieve* sieve = nullptr);

}  // namespace qf
}  // namespace cnsum
