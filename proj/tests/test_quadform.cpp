#include <doctest.h>

#include <map>
#include <set>

#include "cnsum/quadform.hpp"

using namespace cnsum;
using namespace cnsum::qf;

namespace {

// u-scan oracle: minimal (t,u) with t^2 - D u^2 = 4 by direct search
std::pair<Int, Int> pell_scan(uint64_t D) {
    for (uint64_t u = 1;; ++u) {
        unsigned __int128 v = (unsigned __int128)D * u * u + 4;
        auto r = static_cast<uint64_t>(sqrt(Int(v)).convert_to<uint64_t>());
        for (uint64_t rr : {r - 1, r, r + 1})
            if ((unsigned __int128)rr * rr == v) return {Int(rr), Int(u)};
    }
}

bool valid_d(uint64_t D) { return is_valid_discriminant(Int(D)); }

// independent class count: enumerate all primitive forms with |a|,|b| small
// and partition them by reduction-into-cycles
uint64_t class_count_oracle(uint64_t D) {
    Int bigD(D), sD = sqrt(bigD);
    int64_t bound = static_cast<int64_t>(arith::isqrt64(D)) + 1;
    std::set<std::pair<int64_t, int64_t>> reps;  // canonical (a,b) per class: cycle minimum
    for (int64_t a = -bound; a <= bound; ++a) {
        if (a == 0) continue;
        for (int64_t b = -bound; b <= bound; ++b) {
            Int num = Int(b) * b - bigD;
            if (num % (4 * Int(a)) != 0) continue;
            Int c = num / (4 * a);
            if (gcd(gcd(Int(a), Int(b)), c) != 1) continue;
            // reduce, then take the lexicographically least form on the cycle
            Int fa(a), fb(b), fc(c);
            while (!is_reduced(fa, fb, fc, bigD)) rho_step(fa, fb, fc, bigD, sD);
            Int best_a = fa, best_b = fb;
            Int ca = fa, cb = fb, cc = fc;
            do {
                rho_step(ca, cb, cc, bigD, sD);
                if (ca < best_a || (ca == best_a && cb < best_b)) { best_a = ca; best_b = cb; }
            } while (!(ca == fa && cb == fb));
            reps.insert({best_a.convert_to<int64_t>(), best_b.convert_to<int64_t>()});
        }
    }
    return reps.size();
}

}  // namespace

TEST_CASE("discriminant and validation") {
    CHECK(discriminant(QuadForm(1, 1, -1)) == 5);
    CHECK(discriminant(QuadForm(1, 0, -2)) == 8);
    CHECK(discriminant(QuadForm(2, 3, -1)) == discriminant(QuadForm(2, -3, -1)));
    CHECK_THROWS(QuadForm(2, 4, 2));        // imprimitive
    CHECK_THROWS(QuadForm(1, 4, 3));        // D = 4, a square
    CHECK_THROWS(QuadForm(1, 1, 1));        // D < 0
    CHECK_THROWS(validate_discriminant(Int(7)));  // 3 mod 4
}

TEST_CASE("class numbers match the enumeration oracle") {
    CHECK(class_number(5) == 1);
    CHECK(class_number(8) == 1);
    CHECK_THROWS(class_number(7));
    for (uint64_t D = 5; D < 200; ++D) {
        if (!valid_d(D)) continue;
        uint64_t h = class_number(D);
        CHECK(h >= 1);
        CHECK(h == class_count_oracle(D));
    }
}

TEST_CASE("fundamental Pell solutions") {
    auto p5 = fundamental_pell(Int(5));
    CHECK(p5.t == 3);
    CHECK(p5.u == 1);
    CHECK(p5.log_eps == doctest::Approx(std::log((3 + std::sqrt(5.0)) / 2)).epsilon(1e-12));
    auto p8 = fundamental_pell(Int(8));
    CHECK(p8.t == 6);
    CHECK(p8.u == 2);
    for (uint64_t D = 5; D < 2000; ++D) {
        if (!valid_d(D)) continue;
        auto p = fundamental_pell(Int(D));
        CHECK(p.t * p.t - Int(D) * p.u * p.u == 4);
        auto [t, u] = pell_scan(D);
        CHECK(p.t == t);
        CHECK(p.u == u);
    }
}

TEST_CASE("eps_j = eps^j via the composition law") {
    for (uint64_t D = 5; D < 500; ++D) {
        if (!valid_d(D)) continue;
        auto p = fundamental_pell(Int(D));
        auto [t2, u2] = pell_power(Int(D), p.t, p.u, 2);
        CHECK(t2 * t2 - Int(D) * u2 * u2 == 4);
        // the second solution from a direct scan: smallest u > u1
        for (Int u = p.u + 1;; ++u) {
            Int v = Int(D) * u * u + 4;
            Int r = sqrt(v);
            if (r * r == v) {
                CHECK(t2 == r);
                CHECK(u2 == u);
                break;
            }
        }
    }
}

TEST_CASE("the form <-> matrix correspondence") {
    QuadForm q(1, 1, -1);
    GammaMatrix g = gamma_from_form(q, 3, 1);
    CHECK(g == GammaMatrix(2, 1, 1, 1));
    CHECK_THROWS(gamma_from_form(q, 4, 1));  // not a Pell solution
    auto inv = invariants_of(g);
    CHECK(inv.t == 3);
    CHECK(inv.u == 1);
    CHECK(inv.q == q);
    CHECK(inv.D == 5);

    for (uint64_t D = 5; D < 500; ++D) {
        if (!valid_d(D)) continue;
        auto p = fundamental_pell(Int(D));
        for (unsigned j = 1; j <= 2; ++j) {
            auto [t, u] = pell_power(Int(D), p.t, p.u, j);
            // some primitive form of discriminant D: (1, b0, c0)
            Int b0 = D % 2;
            Int c0 = (b0 * b0 - Int(D)) / 4;
            QuadForm Q(1, b0, c0);
            if ((t + Q.b * u) % 2 != 0) continue;  // parity is automatic; guard anyway
            GammaMatrix m = gamma_from_form(Q, t, u);
            CHECK(m.trace() == t);                      // Fact 3.1, trace
            auto back = invariants_of(m);
            CHECK(back.t == t);                         // Fact 3.1(3)
            CHECK(back.u == u);
            CHECK(back.D == Int(D));                    // Fact 3.1(2)
            CHECK(back.q == Q);                         // Fact 3.1(1) round trip
        }
    }
}

TEST_CASE("Fact 3.1(4): composition of matrices over one form") {
    for (uint64_t D : {5ull, 8ull, 13ull, 40ull, 73ull, 124ull}) {
        auto p = fundamental_pell(Int(D));
        Int b0 = D % 2;
        QuadForm Q(1, b0, (b0 * b0 - Int(D)) / 4);
        auto [t2, u2] = pell_power(Int(D), p.t, p.u, 2);
        GammaMatrix g1 = gamma_from_form(Q, p.t, p.u);
        GammaMatrix g2 = gamma_from_form(Q, t2, u2);
        GammaMatrix prod = g1 * g2;
        auto inv = invariants_of(prod);
        CHECK(inv.q == Q);
        CHECK(inv.t == (p.t * t2 + Int(D) * p.u * u2) / 2);
        CHECK(inv.u == (p.t * u2 + t2 * p.u) / 2);
    }
}

TEST_CASE("Fact 3.1(5): conjugation acts on forms by the variable change") {
    // Q_{g^-1 gamma g}(x, y) = Q_gamma((x, y) . g)
    QuadForm q(1, 1, -1);
    GammaMatrix gamma = gamma_from_form(q, 3, 1);
    Int gs[][4] = {{1, 1, 0, 1}, {1, 0, 1, 1}, {2, 1, 1, 1}, {0, -1, 1, 0}, {3, 2, 1, 1}};
    for (auto& m : gs) {
        Int det = m[0] * m[3] - m[1] * m[2];
        REQUIRE(det == 1);
        // g^-1 gamma g
        Int i11 = m[3], i12 = -m[1], i21 = -m[2], i22 = m[0];
        Int a11 = i11 * gamma.g11 + i12 * gamma.g21, a12 = i11 * gamma.g12 + i12 * gamma.g22;
        Int a21 = i21 * gamma.g11 + i22 * gamma.g21, a22 = i21 * gamma.g12 + i22 * gamma.g22;
        GammaMatrix conj(a11 * m[0] + a12 * m[2], a11 * m[1] + a12 * m[3],
                         a21 * m[0] + a22 * m[2], a21 * m[1] + a22 * m[3]);
        auto inv = invariants_of(conj);
        // Q'(x,y) = Q((x,y).g) where (x,y).g = (x g11 + y g21, x g12 + y g22)
        auto Q = [&](Int x, Int y) { return q.a * x * x + q.b * x * y + q.c * y * y; };
        auto Qp = [&](Int x, Int y) {
            return inv.q.a * x * x + inv.q.b * x * y + inv.q.c * y * y;
        };
        for (Int x = -3; x <= 3; ++x)
            for (Int y = -3; y <= 3; ++y) {
                Int gx = x * m[0] + y * m[2], gy = x * m[1] + y * m[3];
                CHECK(Qp(x, y) == Q(gx, gy));
            }
    }
}

TEST_CASE("congruence subgroup membership") {
    GammaMatrix g(2, 1, 1, 1);
    CHECK(in_congruence_subgroup(g, 1));
    CHECK(!in_congruence_subgroup(g, 2));
    // gamma with 6 | u: take D = 5, j chosen so u_j is divisible by 6
    auto p = fundamental_pell(Int(5));
    Int t = p.t, u = p.u;
    for (int j = 0; j < 12 && u % 6 != 0; ++j) {
        auto [nt, nu] = pell_power(Int(5), p.t, p.u, static_cast<unsigned>(j + 2));
        t = nt;
        u = nu;
    }
    REQUIRE(u % 6 == 0);
    QuadForm q(1, 1, -1);
    GammaMatrix big = gamma_from_form(q, t, u);
    CHECK(in_congruence_subgroup(big, 3));
    CHECK(in_congruence_subgroup(big, 6));
}
