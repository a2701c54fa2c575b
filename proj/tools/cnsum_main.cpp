// cnsum: density coefficients for class number sums in arithmetic
// progressions, with a discriminant census and formula-vs-enumeration
// verification suites.
//
// Exit codes: 0 success, 2 bad configuration, 3 resource cap exceeded,
// 4 verification failure.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cnsum/arith.hpp"
#include "cnsum/census.hpp"
#include "cnsum/densities.hpp"
#include "cnsum/group_oracle.hpp"
#include "cnsum/quadform.hpp"

using nlohmann::json;
using namespace cnsum;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitCap = 3;
constexpr int kExitVerify = 4;

struct OutputSink {
    std::string path;
    std::string format = "csv";  // csv | json

    void emit(const json& doc, const std::vector<std::string>& columns,
              const std::vector<std::vector<std::string>>& rows) const {
        std::ostream* os = &std::cout;
        std::ofstream file;
        if (!path.empty()) {
            file.open(path);
            if (!file) throw std::runtime_error("cannot open output file: " + path);
            os = &file;
        }
        if (format == "json") {
            *os << doc.dump(2) << "\n";
            return;
        }
        for (size_t i = 0; i < columns.size(); ++i)
            *os << columns[i] << (i + 1 < columns.size() ? "," : "\n");
        for (const auto& row : rows) {
            for (size_t i = 0; i < row.size(); ++i)
                *os << row[i] << (i + 1 < row.size() ? "," : "\n");
        }
    }
};

std::string fmt12(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string rat_str(const Rat& r) {
    std::ostringstream os;
    os << numerator(r) << "/" << denominator(r);
    return os.str();
}

std::vector<uint64_t> parse_residues(const std::string& spec, uint64_t n) {
    std::vector<uint64_t> out;
    if (spec == "all") {
        for (uint64_t d = 0; d < n; ++d) out.push_back(d);
        return out;
    }
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stoull(tok) % n);
    return out;
}

std::string cache_dir() {
    if (const char* env = std::getenv("CNSUM_CACHE_DIR")) return env;
    return ".cnsum-cache";
}

census::Census obtain_census(double x, unsigned threads, bool use_cache,
                             const std::string& output) {
    std::string path;
    if (use_cache) {
        std::filesystem::create_directories(cache_dir());
        char name[64];
        std::snprintf(name, sizeof name, "census_%.0f.csv", x);
        path = cache_dir() + "/" + name;
        if (std::filesystem::exists(path)) {
            auto c = census::Census::load_csv(path);
            c.set_cutoff(x);
            return c;
        }
    }
    census::CensusOptions opts;
    opts.threads = threads;
    if (!output.empty()) opts.checkpoint_path = output;
    auto c = census::Census::run(x, opts);
    if (use_cache) c.save_csv(path);
    return c;
}

int cmd_eta(uint64_t n, const std::string& residue, bool fundamental, uint32_t P, uint64_t M,
            const OutputSink& sink) {
    dens::EtaParams params;
    params.prime_cutoff = P;
    params.term_cutoff = M;
    auto residues = parse_residues(residue, n);
    json rows_json = json::array();
    std::vector<std::vector<std::string>> rows;
    double sum = 0;
    for (uint64_t d : residues) {
        dens::EtaValue v = fundamental ? dens::eta_fundamental(n, d, params)
                                       : dens::eta_progression(n, d, params);
        sum += v.real.value;
        json row{{"residue", d},
                 {"eta", v.real.value},
                 {"error_bound", v.real.error_bound},
                 {"exact", v.exact ? json(rat_str(v.rational)) : json(nullptr)}};
        rows_json.push_back(row);
        rows.push_back({std::to_string(d), fmt12(v.real.value), fmt12(v.real.error_bound),
                        v.exact ? rat_str(v.rational) : "-"});
    }
    json doc{{"schema_version", 1},
             {"command", fundamental ? "eta-fundamental" : "eta"},
             {"modulus", n},
             {"rows", rows_json},
             {"row_sum", sum}};
    sink.emit(doc, {"residue", "eta", "error_bound", "exact"}, rows);
    if (residues.size() == n && !fundamental) {
        std::fprintf(stderr, "row sum: %.12g\n", sum);
    }
    return 0;
}

int cmd_local(uint64_t p, uint32_t r, int64_t k, uint64_t delta, const OutputSink& sink) {
    json doc{{"schema_version", 1}, {"command", "local"}, {"p", p}, {"r", r}, {"delta", delta}};
    std::vector<std::vector<std::string>> rows;
    if (k >= 0) {
        auto kk = static_cast<uint32_t>(k);
        doc["k"] = kk;
        doc["count_T"] = dens::count_T(p, r, kk, delta);
        doc["count_A"] = dens::count_A(p, r, delta);
        doc["gamma_hat"] = rat_str(dens::gamma_hat_count(p, r, kk, delta));
        doc["eta_local_u"] = rat_str(dens::eta_local_u(p, r, kk, delta));
        rows.push_back({"count_T", std::to_string(dens::count_T(p, r, kk, delta))});
        rows.push_back({"count_A", std::to_string(dens::count_A(p, r, delta))});
        rows.push_back({"gamma_hat", rat_str(dens::gamma_hat_count(p, r, kk, delta))});
        rows.push_back({"eta_local_u", rat_str(dens::eta_local_u(p, r, kk, delta))});
    } else {
        Rat series = dens::eta_local_series(p, r, delta);
        Rat closed = dens::eta_local_closed(p, r, delta);
        doc["eta_local_series"] = rat_str(series);
        doc["eta_local_closed"] = rat_str(closed);
        doc["eta_decimal"] = dens::to_double(closed);
        rows.push_back({"eta_local_series", rat_str(series)});
        rows.push_back({"eta_local_closed", rat_str(closed)});
        rows.push_back({"eta_decimal", fmt12(dens::to_double(closed))});
    }
    sink.emit(doc, {"quantity", "value"}, rows);
    return 0;
}

int cmd_census(double x, unsigned threads, bool use_cache, const std::string& output,
               const OutputSink& sink) {
    auto c = obtain_census(x, threads, use_cache, output);
    if (!output.empty()) c.save_csv(output);
    auto s = c.empirical_eta(census::Condition::all());
    json doc{{"schema_version", 1}, {"command", "census"},  {"x", x},
             {"records", c.records().size()}, {"pi", s.pi}, {"li_x2", s.li_x2},
             {"ratio", s.empirical_eta}, {"bsgs_fallbacks", c.bsgs_fallbacks()}};
    sink.emit(doc, {"quantity", "value"},
              {{"records", std::to_string(c.records().size())},
               {"pi", fmt12(s.pi)},
               {"li_x2", fmt12(s.li_x2)},
               {"ratio", fmt12(s.empirical_eta)}});
    return 0;
}

int cmd_compare(uint64_t n, double x, bool squarefree, unsigned threads, bool use_cache,
                uint32_t P, uint64_t M, const OutputSink& sink) {
    auto c = obtain_census(x, threads, use_cache, "");
    dens::EtaParams params;
    params.prime_cutoff = P;
    params.term_cutoff = M;
    double li = arith::log_integral(x * x);
    json rows_json = json::array();
    std::vector<std::vector<std::string>> rows;
    for (uint64_t d = 0; d < n; ++d) {
        dens::EtaValue v = squarefree ? dens::eta_fundamental(n, d, params)
                                      : dens::eta_progression(n, d, params);
        census::Condition cond = census::Condition::progression(n, {d});
        cond.squarefree_d = squarefree;
        double pi = static_cast<double>(c.pi_sum(cond));
        double emp = pi / li;
        double dev = v.real.value != 0 ? (emp - v.real.value) / v.real.value : emp;
        rows_json.push_back(json{{"residue", d},
                                 {"theory", v.real.value},
                                 {"empirical", emp},
                                 {"pi", pi},
                                 {"relative_deviation", dev}});
        rows.push_back({std::to_string(d), fmt12(v.real.value), fmt12(emp), fmt12(dev)});
    }
    json doc{{"schema_version", 1}, {"command", "compare"}, {"modulus", n},
             {"x", x}, {"squarefree", squarefree}, {"rows", rows_json}};
    sink.emit(doc, {"residue", "theory", "empirical", "relative_deviation"}, rows);
    return 0;
}

int cmd_oracle_verify(const std::string& inject_fault) {
    uint64_t checked_T = 0, checked_A = 0, checked_G = 0;
    auto fail = [&](const char* suite, uint64_t p, uint32_t r, uint32_t k, uint64_t delta,
                    const std::string& formula, const std::string& oracle) {
        std::fprintf(stderr,
                     "oracle-verify FAILED in %s at p=%llu r=%u k=%u delta=%llu: "
                     "formula=%s oracle=%s\n",
                     suite, static_cast<unsigned long long>(p), r, k,
                     static_cast<unsigned long long>(delta), formula.c_str(), oracle.c_str());
        return kExitVerify;
    };

    // odd p: all levels p^{r+k} <= 125; p = 2: all levels 2^{r+k+2} <= 256
    std::vector<std::tuple<uint64_t, uint32_t, uint32_t>> keys;
    for (uint64_t p : {3ull, 5ull, 7ull, 11ull, 13ull}) {
        for (uint32_t r = 1;; ++r) {
            if (arith::ipow(p, r) > 125) break;
            for (uint32_t k = 0; arith::ipow(p, r + k) <= 125; ++k) keys.push_back({p, r, k});
        }
    }
    for (uint64_t p = 17; p <= 125; ++p)
        if (arith::is_prime(p)) keys.push_back({p, 1, 0});
    for (uint32_t r = 1; r <= 6; ++r)
        for (uint32_t k = 0; (uint64_t(1) << (r + k + 2)) <= 256; ++k) keys.push_back({2, r, k});

    for (auto& [p, r, k] : keys) {
        uint64_t res_mod = p == 2 ? (uint64_t(1) << (r + 2)) : arith::ipow(p, r);
        for (uint64_t delta = 0; delta < res_mod; ++delta) {
            uint64_t tf = dens::count_T(p, r, k, delta);
            if (inject_fault == "T" && p == 3 && r == 1 && k == 0 && delta == 1) ++tf;
            uint64_t to = oracle::count_T_oracle(p, r, k, delta);
            ++checked_T;
            if (tf != to)
                return fail("count_T", p, r, k, delta, std::to_string(tf), std::to_string(to));
            if (k == 0) {
                uint64_t af = dens::count_A(p, r, delta);
                if (inject_fault == "A" && p == 3 && r == 1 && delta == 1) ++af;
                uint64_t ao = oracle::count_A_oracle(p, r, delta);
                ++checked_A;
                if (af != ao)
                    return fail("count_A", p, r, 0, delta, std::to_string(af), std::to_string(ao));
            }
            Rat gf = dens::gamma_hat_count(p, r, k, delta);
            if (inject_fault == "G" && p == 3 && r == 1 && k == 0 && delta == 1) gf += 1;
            uint64_t go = oracle::gamma_hat_count_oracle(p, r, k, delta);
            ++checked_G;
            if (gf != Rat(go))
                return fail("gamma_hat", p, r, k, delta, rat_str(gf), std::to_string(go));
        }
    }
    std::printf("count_T:   %llu keys ok\n", static_cast<unsigned long long>(checked_T));
    std::printf("count_A:   %llu keys ok\n", static_cast<unsigned long long>(checked_A));
    std::printf("gamma_hat: %llu keys ok\n", static_cast<unsigned long long>(checked_G));
    return 0;
}

int cmd_selftest() {
    // the cheap end of the invariants; the full suites live in ctest
    try {
        for (uint64_t p : {3ull, 5ull}) {
            uint64_t pr = p;
            Rat total = 0;
            for (uint64_t d = 0; d < pr; ++d) {
                Rat s = dens::eta_local_series(p, 1, d);
                Rat c = dens::eta_local_closed(p, 1, d);
                if (s != c) throw std::logic_error("dual route mismatch");
                total += c;
            }
            if (total != 1) throw std::logic_error("local partition != 1");
        }
        if (dens::eta_local_closed(5, 1, 0) != Rat(25, 62))
            throw std::logic_error("eta(D(5)=0) != 25/62");
        if (dens::eta_two_residue_set({1}, 2) != Rat(19, 56))
            throw std::logic_error("eta(D(2)=1 mod 4) != 19/56");
        double w1 = dens::W_euler(1, 5, 20000).value + dens::W_euler(4, 5, 20000).value;
        if (std::abs(w1 - 0.80233) > 5e-4) throw std::logic_error("W1 mismatch");
        if (!oracle::cong_lemma_check(200, 12, 7)) throw std::logic_error("cong lemma");
    } catch (const std::exception& e) {
        std::fprintf(stderr, "selftest FAILED: %s\n", e.what());
        return kExitVerify;
    }
    std::printf("selftest ok\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"class number sums in arithmetic progressions"};
    app.require_subcommand(1);

    uint64_t n = 1;
    std::string residue = "all";
    double x = 1000;
    uint32_t primes = 100000;
    uint64_t terms = 1000000;
    unsigned threads = 0;
    std::string output, format = "csv";
    bool use_cache = false;
    bool squarefree = false;
    uint64_t p = 5;
    uint32_t r = 1;
    int64_t k = -1;
    uint64_t delta = 0;
    std::string inject_fault;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--output", output, "write the report to this file");
        sub->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
        sub->add_option("--primes", primes, "prime cutoff P for Euler products");
        sub->add_option("--terms", terms, "term cutoff M for direct series");
        sub->add_option("--threads", threads, "worker threads (0 = hardware)");
    };

    auto* eta = app.add_subcommand("eta", "Theorem-1 densities eta(D = delta mod n)");
    eta->add_option("--modulus", n, "modulus n")->required();
    eta->add_option("--residue", residue, "residue, or 'all'");
    add_common(eta);

    auto* etaf = app.add_subcommand("eta-fundamental",
                                    "Theorem-2 densities over fundamental discriminants");
    etaf->add_option("--modulus", n, "modulus n")->required();
    etaf->add_option("--residue", residue, "residue, or 'all'");
    add_common(etaf);

    auto* local = app.add_subcommand("local", "raw local counts and densities");
    local->add_option("--p", p, "prime")->required();
    local->add_option("--r", r, "exponent r");
    local->add_option("--k", k, "u-valuation (omit for the k-summed density)");
    local->add_option("--residue", delta, "delta");
    add_common(local);

    auto* cen = app.add_subcommand("census", "enumerate discriminants with eps(D) < x");
    cen->add_option("--x", x, "cutoff")->required();
    cen->add_flag("--cache", use_cache, "cache the census CSV (CNSUM_CACHE_DIR)");
    add_common(cen);

    auto* cmp = app.add_subcommand("compare", "theoretical vs empirical densities");
    cmp->add_option("--modulus", n, "modulus n")->required();
    cmp->add_option("--x", x, "census cutoff");
    cmp->add_flag("--squarefree", squarefree, "Theorem-2 comparison over squarefree d");
    cmp->add_flag("--cache", use_cache, "cache the census CSV");
    add_common(cmp);

    auto* ver = app.add_subcommand("oracle-verify", "formula vs enumeration suites");
    ver->add_option("--inject-fault", inject_fault, "")->group("");  // test fixture hook
    add_common(ver);

    app.add_subcommand("selftest", "quick internal consistency checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? 0 : kExitConfig;
    }

    OutputSink sink{output, format};
    try {
        if (app.got_subcommand("eta")) return cmd_eta(n, residue, false, primes, terms, sink);
        if (app.got_subcommand("eta-fundamental"))
            return cmd_eta(n, residue, true, primes, terms, sink);
        if (app.got_subcommand("local")) return cmd_local(p, r, k, delta, sink);
        if (app.got_subcommand("census")) return cmd_census(x, threads, use_cache, output, sink);
        if (app.got_subcommand("compare"))
            return cmd_compare(n, x, squarefree, threads, use_cache, primes, terms, sink);
        if (app.got_subcommand("oracle-verify")) return cmd_oracle_verify(inject_fault);
        if (app.got_subcommand("selftest")) return cmd_selftest();
    } catch (const std::length_error& e) {
        std::fprintf(stderr, "resource cap: %s\n", e.what());
        return kExitCap;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return kExitConfig;
}
