#pragma once

/*
 * Empirical side: enumerate every discriminant with eps(D) < x together
 * with its narrow class number, and evaluate the partial sums
 * pi(x;C) = sum h(D) over conditions C.
 *
 * Enumeration scans traces t (eps(D) < x iff t1 < x + 1/x), factors
 * t^2-4 = (t-2)(t+2) through a least-prime-factor sieve, and emits
 * D = (t^2-4)/u^2 for every square divisor u^2; the first (minimal-t)
 * occurrence of a D is its fundamental solution.  Class numbers use the
 * exact cycle count for small D and a baby-step/giant-step group-order
 * search for large D, windowed by the truncated Euler product for
 * sqrt(D) L(1,chi_D) / log eps (see README for the heuristic status of
 * the window).
 */

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cnsum/arith.hpp"

namespace cnsum {
namespace census {

struct CensusRecord {
    uint64_t D;
    uint64_t h;
    uint64_t t1, u1;
    double log_eps;
};

struct Condition {
    uint64_t modulus = 1;
    std::vector<uint64_t> residues;  // on D, or on d when squarefree_d
    bool squarefree_d = false;
    std::optional<uint64_t> u_divisor;

    static Condition all() { return {}; }
    static Condition progression(uint64_t n, std::vector<uint64_t> res) {
        Condition c;
        c.modulus = n;
        c.residues = std::move(res);
        return c;
    }
    static Condition u_multiple(uint64_t m) {
        Condition c;
        c.u_divisor = m;
        return c;
    }
};

struct CensusSummary {
    double x;
    double pi;
    double li_x2;
    double empirical_eta;
};

struct CensusOptions {
    double max_x = 1e7;            // resource cap
    unsigned threads = 0;          // 0 = hardware concurrency
    uint32_t euler_cutoff = 16384; // Q for the sieved L-window
    uint64_t exact_h_below = 4000000;
    std::string checkpoint_path;   // when set, partial CSV every checkpoint_every records
    uint64_t checkpoint_every = 1000000;
    std::function<void(uint64_t done, uint64_t total)> progress;
};

class Census {
  public:
    static Census run(double x, const CensusOptions& opts = {});
    static Census load_csv(const std::string& path);
    void save_csv(const std::string& path) const;

    double cutoff() const { return x_; }
    void set_cutoff(double x) { x_ = x; }
    const std::vector<CensusRecord>& records() const { return records_; }

    uint64_t pi_sum(const Condition& cond) const;
    CensusSummary empirical_eta(const Condition& cond) const;
    double sarnak_sum() const;

    // fundamental-discriminant kernel of a record, via the stored (t1, u1)
    std::pair<uint64_t, bool> d_of_record(const CensusRecord& rec) const;

    uint64_t bsgs_fallbacks() const { return fallbacks_; }

  private:
    double x_ = 0;
    std::vector<CensusRecord> records_;  // sorted by D
    mutable std::shared_ptr<arith::SpfSieve> sieve_;  // >= max t1 + 2
    uint64_t fallbacks_ = 0;

    const arith::SpfSieve& need_sieve() const;
};

// d per the kernel rule: d = D when the squarefree factor of D is 1 mod 4,
// else D/4; the flag reports whether d is squarefree.
std::pair<uint64_t, bool> d_of(uint64_t D);
std::pair<uint64_t, bool> d_of(const Factorization& f);

// sum_{0 < D < x, D in the discriminant set} h(D) log eps(D); exact
// per-D Pell solves with big integers.  Rejects x > cap.
double siegel_sum(double x, double cap = 100001.0);

}  // namespace census
}  // namespace cnsum
