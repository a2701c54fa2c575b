#include <doctest.h>

#include "cnsum/arith.hpp"
#include "cnsum/group_oracle.hpp"

using namespace cnsum;
using namespace cnsum::oracle;

TEST_CASE("PSL2 enumeration counts match v(n)") {
    CHECK(enumerate_psl2(2).size() == 6);
    CHECK(enumerate_psl2(3).size() == 12);
    CHECK(enumerate_psl2(6).size() == 72);
    for (uint32_t n = 1; n <= 30; ++n)
        CHECK(Int(enumerate_psl2(n).size()) == arith::psl2_order(n));
    CHECK_THROWS(enumerate_psl2(1000));
}

TEST_CASE("local data extraction") {
    // identity-like elements carry no slot
    FiniteMatrix id{1, 0, 0, 1, 5};
    CHECK(!local_data(id, 5, 1, 0).has_value());
    // [[2,1],[1,1]] mod 5 at (p,r,k) = (5,1,0): D = 5 = 0 mod 5
    FiniteMatrix g{2, 1, 1, 1, 5};
    auto ld = local_data(g, 5, 1, 0);
    REQUIRE(ld.has_value());
    CHECK(ld->k == 0);
    CHECK(ld->delta == 0);
    CHECK(ld->T == 3);
    // reconstruction: A p^k, -C p^k, (T +- B p^k)/2 reproduce the entries
    uint32_t n = 5;
    CHECK(ld->A % n == g.c % n);
    CHECK((n - ld->C % n) % n == g.b % n);
    CHECK((ld->T + ld->B) % 2 == 0);
    CHECK(((ld->T + ld->B) / 2) % n == g.a % n);

    // wrong valuation slot
    CHECK(!local_data(g, 5, 1, 1).has_value());
}

TEST_CASE("oracle counts: paper table keys") {
    CHECK(count_A_oracle(3, 1, 1) == 12);
    CHECK(count_A_oracle(3, 1, 0) == 8);
    for (uint64_t d = 0; d < 3; ++d) CHECK(count_T_oracle(3, 1, 1, d) == 2);
    CHECK(count_T_oracle(3, 2, 0, 5) == 3);  // 5 = -4 mod 9
    // (2, r=1, delta = 5 mod 8): the paper's table value is 1 at its nominal
    // normalization; the well-defined Z_{2^{r+1}}^3 domain counts 8x that
    CHECK(count_A_oracle(2, 1, 5) == 8 * 1);
    CHECK(count_A_oracle(2, 1, 1) == 8 * 3);
    CHECK(gamma_hat_count_oracle(5, 1, 0, 0) == 24);
}

TEST_CASE("slot partition at one level") {
    CHECK(slot_partition_check(3, 1, 2));
    CHECK(slot_partition_check(5, 1, 1));
    CHECK(slot_partition_check(7, 2, 0));
    CHECK(slot_partition_check(2, 1, 2));
    CHECK(slot_partition_check(2, 2, 1));
}

TEST_CASE("conjugacy class sizes multiply across coprime moduli") {
    CHECK(crt_class_check(2, 3));
    CHECK(crt_class_check(3, 4));
    CHECK(crt_class_check(5, 4));
    CHECK_THROWS(crt_class_check(2, 2));
}

TEST_CASE("congruence lemma on random hyperbolic words") {
    CHECK(cong_lemma_check(300, 12, 12345));
}
