#pragma once

/*
 * Form class group machinery for a fixed indefinite discriminant D:
 * Dirichlet composition on primitive forms, rho-reduction, principal-cycle
 * identity testing, and a baby-step/giant-step search for the group order
 * inside a window known to contain h(D).
 *
 * Class equality is decided by cycle membership: two reduced forms are
 * equivalent iff they lie on the same rho-cycle, and every cycle has
 * total log-length 2 log eps, so cycles are short exactly when the
 * fundamental unit is small -- which is the census regime.
 */

#include <cstdint>
#include <optional>
#include <vector>

namespace cnsum {
namespace cg {

struct Form64 {
    int64_t a, b, c;
    friend bool operator==(const Form64&, const Form64&) = default;
};

class ClassGroup {
  public:
    explicit ClassGroup(uint64_t D);

    uint64_t discriminant() const { return D_; }
    const Form64& principal() const { return principal_; }

    Form64 reduce(Form64 f) const;
    Form64 compose(const Form64& f, const Form64& g) const;
    Form64 pow(Form64 g, uint64_t e) const;

    // all reduced forms on f's cycle (f must be reduced)
    std::vector<Form64> cycle(const Form64& f) const;
    bool is_principal(const Form64& f) const;

    // reduced form of norm q, for primes q with (D/q) = 1
    std::optional<Form64> prime_form(uint64_t q) const;

    static uint64_t key(const Form64& f) {
        return ((static_cast<uint64_t>(f.a + (int64_t(1) << 27))) << 28) |
               static_cast<uint64_t>(f.b);
    }

  private:
    Form64 reduce_step(Form64 f) const;  // one rho step

    uint64_t D_;
    int64_t sD_;
    Form64 principal_;
    std::vector<uint64_t> principal_keys_;  // sorted keys of the principal cycle
    size_t cycle_cap_;
};

// Exact |Cl(D)| assuming h(D) lies in [lo, hi]; 0 when the window cannot
// pin the order uniquely (caller escalates).
uint64_t class_number_in_window(const ClassGroup& G, uint64_t lo, uint64_t hi);

}  // namespace cg
}  // namespace cnsum
