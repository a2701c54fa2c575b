#include "cnsum/census.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "cnsum/classgroup.hpp"
#include "cnsum/quadform.hpp"

namespace cnsum {
namespace census {

namespace {

uint64_t trace_bound(double x) {
    if (x < 3) return 2;  // empty census
    auto fits = [&](uint64_t t) {
        if (t < 3) return true;
        long double td = static_cast<long double>(t);
        return td + sqrtl(td * td - 4.0L) < 2.0L * static_cast<long double>(x);
    };
    auto t = static_cast<uint64_t>(x + 2);
    while (t >= 3 && !fits(t)) --t;
    return t;
}

struct Candidate {
    uint64_t D;
    uint64_t t, u;
};

// all u with u^2 | t^2-4, via the merged factorization of t-2 and t+2
void square_divisors(const Factorization& f, std::vector<uint64_t>& out) {
    out.assign(1, 1);
    for (auto& [p, e] : f) {
        if (e < 2) continue;
        size_t sz = out.size();
        uint64_t pk = 1;
        for (uint32_t i = 0; i < e / 2; ++i) {
            pk *= p;
            for (size_t j = 0; j < sz; ++j) out.push_back(out[j] * pk);
        }
    }
}

Factorization merge_factors(const Factorization& a, const Factorization& b) {
    Factorization out;
    size_t i = 0, j = 0;
    while (i < a.size() || j < b.size()) {
        if (j == b.size() || (i < a.size() && a[i].p < b[j].p)) out.push_back(a[i++]);
        else if (i == a.size() || b[j].p < a[i].p) out.push_back(b[j++]);
        else {
            out.push_back({a[i].p, a[i].e + b[j].e});
            ++i; ++j;
        }
    }
    return out;
}

// sieved log of the truncated Euler product for L(1, chi_{t^2-4}), odd
// primes p <= Q only (p = 2 and p | u corrections are applied per record)
std::vector<double> build_logl(uint64_t t_max, uint32_t Q) {
    std::vector<double> A(t_max + 1, 0.0);
    auto primes = arith::primes_below(Q + 1);
    std::vector<double> row;
    for (uint32_t p : primes) {
        if (p == 2) continue;
        row.assign(p, 0.0);
        std::vector<char> is_qr(p, 0);
        for (uint64_t s = 1; s < p; ++s) is_qr[s * s % p] = 1;
        double plus = -std::log(1.0 - 1.0 / p);
        double minus = -std::log(1.0 + 1.0 / p);
        for (uint64_t j = 0; j < p; ++j) {
            uint64_t s = (j * j + 4 * (uint64_t)p - 4) % p;
            row[j] = s == 0 ? 0.0 : (is_qr[s] ? plus : minus);
        }
        uint64_t j = 3 % p;
        for (uint64_t t = 3; t <= t_max; ++t) {
            A[t] += row[j];
            if (++j == p) j = 0;
        }
    }
    return A;
}

double chi2_term(uint64_t D) {
    if (D % 2 == 0) return 0.0;
    uint64_t m = D % 8;
    if (m == 1) return -std::log(0.5);
    return -std::log(1.5);
}

struct HEngine {
    const arith::SpfSieve& sieve;
    uint32_t Q;
    uint64_t exact_below;
    uint64_t fallbacks = 0;

    uint64_t exact(uint64_t D) const { return qf::class_number(D, sieve); }

    uint64_t bsgs(uint64_t D, double log_eps, double logl) {
        double lh = 0.5 * std::log(static_cast<double>(D)) + logl - std::log(log_eps);
        double zeta = 0.017;
        cg::ClassGroup G(D);
        for (int attempt = 0;; ++attempt) {
            double h_est = std::exp(lh);
            double lo_d = h_est * (1.0 - zeta) - 3.0;
            double hi_d = h_est * (1.0 + zeta) + 3.0;
            uint64_t h = cg::class_number_in_window(
                G, lo_d < 1 ? 1 : static_cast<uint64_t>(lo_d), static_cast<uint64_t>(hi_d));
            if (h) return h;
            if (attempt == 0) {
                // recompute the window with a larger prime cutoff
                lh = 0.5 * std::log(static_cast<double>(D)) + full_logl(D, 1u << 17) -
                     std::log(log_eps);
                zeta = 0.008;
            } else if (attempt <= 3) {
                zeta *= 3.0;
            } else {
                ++fallbacks;
                return static_cast<uint64_t>(std::llround(std::exp(lh)));
            }
        }
    }

    static double full_logl(uint64_t D, uint32_t Q2) {
        static std::vector<uint32_t> primes;
        if (primes.empty() || primes.back() < Q2) primes = arith::primes_below(Q2 + 1);
        double s = 0;
        for (uint32_t p : primes) {
            if (p == 2) continue;
            int chi = arith::kronecker_symbol(static_cast<long long>(D % p), p);
            if (chi) s += -std::log(1.0 - chi / static_cast<double>(p));
        }
        return s + chi2_term(D);
    }
};

}  // namespace

const arith::SpfSieve& Census::need_sieve() const {
    if (!sieve_) {
        uint64_t t_max = 3;
        for (auto& r : records_) t_max = std::max(t_max, r.t1);
        sieve_ = std::make_shared<arith::SpfSieve>(static_cast<uint32_t>(t_max + 2));
    }
    return *sieve_;
}

Census Census::run(double x, const CensusOptions& opts) {
    if (x < 3) throw std::invalid_argument("run_census: x must be >= 3");
    if (x > opts.max_x) throw std::length_error("run_census: x exceeds the configured cap");
    Census out;
    out.x_ = x;
    uint64_t t_max = trace_bound(x);
    uint64_t sieve_bound = std::max<uint64_t>(t_max + 2, 1000001);
    out.sieve_ = std::make_shared<arith::SpfSieve>(static_cast<uint32_t>(sieve_bound));
    const auto& sieve = *out.sieve_;

    // phase 1: trace scan, minimal t per D wins
    std::vector<Candidate> cands;
    cands.reserve(t_max < 8 ? 8 : t_max * 9 / 4);
    std::vector<uint64_t> divs;
    for (uint64_t t = 3; t <= t_max; ++t) {
        Factorization f = merge_factors(sieve.factorize(t - 2), sieve.factorize(t + 2));
        square_divisors(f, divs);
        uint64_t n = t * t - 4;
        for (uint64_t u : divs) {
            uint64_t D = n / (u * u);
            if (D % 4 == 2 || D % 4 == 3) continue;
            if (arith::is_square64(D)) continue;
            cands.push_back({D, t, u});
        }
    }
    std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
        return a.D != b.D ? a.D < b.D : a.t < b.t;
    });

    // phase 2: class numbers
    std::vector<double> logl = build_logl(t_max, opts.euler_cutoff);
    HEngine engine{sieve, opts.euler_cutoff, opts.exact_h_below};
    out.records_.reserve(cands.size());
    uint64_t since_checkpoint = 0;
    for (size_t i = 0; i < cands.size(); ++i) {
        if (i && cands[i].D == cands[i - 1].D) continue;  // non-fundamental (t,u), j >= 2
        const Candidate& c = cands[i];
        double t = static_cast<double>(c.t);
        double log_eps = std::log((t + std::sqrt(t * t - 4.0)) / 2.0);
        uint64_t h;
        if (c.D <= opts.exact_h_below) {
            h = engine.exact(c.D);
        } else {
            double ll = logl[c.t] + chi2_term(c.D);
            for (auto& [p, e] : sieve.factorize(c.u)) {
                if (p == 2 || p > opts.euler_cutoff) continue;
                int chi = arith::kronecker_symbol(static_cast<long long>(c.D % p), p);
                if (chi) ll += -std::log(1.0 - chi / static_cast<double>(p));
            }
            h = engine.bsgs(c.D, log_eps, ll);
        }
        out.records_.push_back({c.D, h, c.t, c.u, log_eps});
        if (opts.progress && (i & 0xffff) == 0) opts.progress(i, cands.size());
        if (!opts.checkpoint_path.empty() && ++since_checkpoint >= opts.checkpoint_every) {
            since_checkpoint = 0;
            out.save_csv(opts.checkpoint_path + ".partial");
        }
    }
    out.fallbacks_ = engine.fallbacks;
    return out;
}

void Census::save_csv(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open census output file: " + path);
    f << "D,h,t1,u1,log_eps\n";
    char buf[64];
    for (const auto& r : records_) {
        std::snprintf(buf, sizeof buf, "%.12g", r.log_eps);
        f << r.D << ',' << r.h << ',' << r.t1 << ',' << r.u1 << ',' << buf << '\n';
    }
}

Census Census::load_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open census file: " + path);
    std::string line;
    if (!std::getline(f, line) || line != "D,h,t1,u1,log_eps")
        throw std::runtime_error("census file has an unexpected header");
    Census out;
    double max_eps = 0;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        CensusRecord r;
        if (std::sscanf(line.c_str(), "%lu,%lu,%lu,%lu,%lf", &r.D, &r.h, &r.t1, &r.u1,
                        &r.log_eps) != 5)
            throw std::runtime_error("bad census row: " + line);
        max_eps = std::max(max_eps, r.log_eps);
        out.records_.push_back(r);
    }
    std::sort(out.records_.begin(), out.records_.end(),
              [](const CensusRecord& a, const CensusRecord& b) { return a.D < b.D; });
    out.x_ = std::exp(max_eps);  // lower bound; callers track the real cutoff
    return out;
}

uint64_t Census::pi_sum(const Condition& cond) const {
    std::vector<char> allowed;
    if (!cond.residues.empty()) {
        allowed.assign(cond.modulus, 0);
        for (uint64_t r : cond.residues) allowed[r % cond.modulus] = 1;
    }
    uint64_t total = 0;
    for (const auto& rec : records_) {
        if (cond.u_divisor && rec.u1 % *cond.u_divisor != 0) continue;
        uint64_t value = rec.D;
        if (cond.squarefree_d) {
            auto [d, sf] = d_of_record(rec);
            if (!sf) continue;
            value = d;
        }
        if (!allowed.empty() && !allowed[value % cond.modulus]) continue;
        total += rec.h;
    }
    return total;
}

CensusSummary Census::empirical_eta(const Condition& cond) const {
    CensusSummary s;
    s.x = x_;
    s.pi = static_cast<double>(pi_sum(cond));
    s.li_x2 = arith::log_integral(x_ * x_);
    s.empirical_eta = s.pi / s.li_x2;
    return s;
}

double Census::sarnak_sum() const {
    double total = 0;
    for (const auto& r : records_) total += static_cast<double>(r.h) * r.log_eps;
    return total;
}

std::pair<uint64_t, bool> Census::d_of_record(const CensusRecord& rec) const {
    const auto& sieve = need_sieve();
    Factorization f = merge_factors(sieve.factorize(rec.t1 - 2), sieve.factorize(rec.t1 + 2));
    if (rec.u1 > 1) {
        Factorization uf = sieve.factorize(rec.u1);
        Factorization reduced;
        size_t j = 0;
        for (auto& [p, e] : f) {
            uint32_t sub = 0;
            while (j < uf.size() && uf[j].p < p) ++j;
            if (j < uf.size() && uf[j].p == p) sub = 2 * uf[j].e;
            if (e > sub) reduced.push_back({p, e - sub});
        }
        f = std::move(reduced);
    }
    return d_of(f);
}

std::pair<uint64_t, bool> d_of(const Factorization& f) {
    uint64_t kernel = 1;
    for (auto& [p, e] : f)
        if (e % 2 == 1) kernel *= p;
    uint64_t D = arith::unfactorize(f);
    if (kernel % 4 == 1) {
        bool sf = true;
        for (auto& [p, e] : f)
            if (e > 1) sf = false;
        return {D, sf};
    }
    // kernel = 2,3 mod 4 forces 4 | D
    uint64_t d = D / 4;
    bool sf = true;
    for (auto& [p, e] : f) {
        uint32_t ee = (p == 2) ? e - 2 : e;
        if (ee > 1) sf = false;
    }
    return {d, sf};
}

std::pair<uint64_t, bool> d_of(uint64_t D) { return d_of(arith::factorize(D)); }

double siegel_sum(double x, double cap) {
    if (x < 5) return 0.0;
    if (x > cap) throw std::length_error("siegel_sum: x exceeds the configured cap");
    auto bound = static_cast<uint64_t>(std::ceil(x));
    arith::SpfSieve sieve(static_cast<uint32_t>(bound / 4 + 16));
    double total = 0;
    for (uint64_t D = 5; D < x; ++D) {
        if (D % 4 == 2 || D % 4 == 3) continue;
        if (arith::is_square64(D)) continue;
        uint64_t h = qf::class_number(D, sieve);
        auto pell = qf::fundamental_pell(Int(D));
        total += static_cast<double>(h) * pell.log_eps;
    }
    return total;
}

}  // namespace census
}  // namespace cnsum
