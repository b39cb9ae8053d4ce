#include "doctest.h"

#include <set>

#include "error.hpp"
#include "ip.hpp"
#include "rng.hpp"

using namespace odin;

TEST_CASE("ipv4 parsing accepts dotted quads") {
    auto a = Ipv4::parse("203.0.113.77");
    REQUIRE(a.has_value());
    CHECK(a->to_string() == "203.0.113.77");
    CHECK(a->octet(0) == 203);
    CHECK(a->last_octet() == 77);
    CHECK(Ipv4::parse("0.0.0.0").has_value());
    CHECK(Ipv4::parse("255.255.255.255").has_value());
}

TEST_CASE("ipv4 parsing rejects malformed input") {
    CHECK_FALSE(Ipv4::parse("").has_value());
    CHECK_FALSE(Ipv4::parse("1.2.3").has_value());
    CHECK_FALSE(Ipv4::parse("1.2.3.4.5").has_value());
    CHECK_FALSE(Ipv4::parse("256.0.0.1").has_value());
    CHECK_FALSE(Ipv4::parse("1.2.3.04").has_value());
    CHECK_FALSE(Ipv4::parse("a.b.c.d").has_value());
    CHECK_FALSE(Ipv4::parse("1..2.3").has_value());
    CHECK_FALSE(Ipv4::parse(" 1.2.3.4").has_value());
    CHECK_THROWS_AS(Ipv4::parse_or_throw("nope"), Error);
}

TEST_CASE("ipv4 slash24 helpers") {
    Ipv4 a = Ipv4::parse_or_throw("10.1.2.3");
    Ipv4 b = Ipv4::parse_or_throw("10.1.2.250");
    Ipv4 c = Ipv4::parse_or_throw("10.1.3.3");
    CHECK(a.same_slash24(b));
    CHECK_FALSE(a.same_slash24(c));
    CHECK(a.with_last_octet(9).to_string() == "10.1.2.9");
}

TEST_CASE("seeded rng is deterministic") {
    SeededRandom a(7), b(7), c(8);
    bool all_equal = true;
    bool any_diff = false;
    for (int i = 0; i < 64; ++i) {
        uint64_t va = a.next_u64();
        all_equal = all_equal && va == b.next_u64();
        any_diff = any_diff || va != c.next_u64();
    }
    CHECK(all_equal);
    CHECK(any_diff);
}

TEST_CASE("below stays in range and covers the range") {
    SeededRandom rng(11);
    std::set<uint32_t> seen;
    for (int i = 0; i < 4000; ++i) {
        uint32_t v = rng.below(17);
        REQUIRE(v < 17);
        seen.insert(v);
    }
    CHECK(seen.size() == 17);
    CHECK(rng.below(1) == 0);
}

TEST_CASE("unit draws live in [0,1)") {
    SeededRandom rng(3);
    for (int i = 0; i < 1000; ++i) {
        double u = rng.unit();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
    }
}

TEST_CASE("crypto rng produces distinct draws") {
    CryptoRandom rng;
    uint64_t a = rng.next_u64();
    uint64_t b = rng.next_u64();
    uint64_t c = rng.next_u64();
    CHECK((a != b || b != c));
    CHECK(rng.below(100) < 100);
}
