#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "qcs/errors.hpp"
#include "qcs/gf256.hpp"
#include "qcs/rng.hpp"

#include "gf256_ref.hpp"

using namespace qcs;

TEST_CASE("table multiply matches the shift-and-reduce oracle on all pairs") {
    size_t mismatches = 0;
    for (int a = 0; a < 256; ++a)
        for (int b = 0; b < 256; ++b)
            if (gf256::mul(static_cast<uint8_t>(a), static_cast<uint8_t>(b)) !=
                ref::mul(static_cast<uint8_t>(a), static_cast<uint8_t>(b)))
                ++mismatches;
    CHECK(mismatches == 0);
}

TEST_CASE("reduction vector and boundary products") {
    CHECK(gf256::mul(0x80, 0x02) == 0x1D);
    for (int x = 0; x < 256; ++x) {
        CHECK(gf256::mul(static_cast<uint8_t>(x), 0) == 0);
        CHECK(gf256::mul(static_cast<uint8_t>(x), 1) == x);
    }
}

TEST_CASE("every nonzero element has a verified inverse") {
    for (int a = 1; a < 256; ++a) {
        const uint8_t ia = gf256::inv(static_cast<uint8_t>(a));
        CHECK(ia == ref::inv(static_cast<uint8_t>(a)));
        CHECK(gf256::mul(static_cast<uint8_t>(a), ia) == 1);
    }
}

TEST_CASE("inv(0) and division by zero throw") {
    CHECK_THROWS_AS(gf256::inv(0), Error);
    try {
        gf256::div(5, 0);
        FAIL("div(5, 0) did not throw");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::division_by_zero);
    }
}

TEST_CASE("field laws on sampled triples") {
    SplitMix64 rng(11);
    for (int i = 0; i < 2000; ++i) {
        const uint8_t a = static_cast<uint8_t>(rng.next());
        const uint8_t b = static_cast<uint8_t>(rng.next());
        const uint8_t c = static_cast<uint8_t>(rng.next());
        CHECK(gf256::mul(a, b) == gf256::mul(b, a));
        CHECK(gf256::mul(a, gf256::mul(b, c)) == gf256::mul(gf256::mul(a, b), c));
        CHECK(gf256::mul(a, gf256::add(b, c)) ==
              gf256::add(gf256::mul(a, b), gf256::mul(a, c)));
    }
}

TEST_CASE("division inverts multiplication") {
    SplitMix64 rng(12);
    for (int i = 0; i < 1000; ++i) {
        const uint8_t a = static_cast<uint8_t>(rng.next());
        const uint8_t b = static_cast<uint8_t>(1 + rng.next_below(255));
        CHECK(gf256::div(gf256::mul(a, b), b) == a);
    }
}

TEST_CASE("mul_row agrees with mul for every factor") {
    for (int c = 0; c < 256; ++c) {
        const uint8_t* row = gf256::mul_row(static_cast<uint8_t>(c));
        for (int x = 0; x < 256; ++x)
            CHECK(row[x] == gf256::mul(static_cast<uint8_t>(c), static_cast<uint8_t>(x)));
    }
}

TEST_CASE("add_scaled and scale act elementwise") {
    SplitMix64 rng(13);
    std::vector<uint8_t> dst(97), src(97);
    for (auto& b : dst)
        b = static_cast<uint8_t>(rng.next());
    for (auto& b : src)
        b = static_cast<uint8_t>(rng.next());
    const uint8_t c = 0xA7;

    std::vector<uint8_t> expect(dst);
    for (size_t i = 0; i < expect.size(); ++i)
        expect[i] ^= ref::mul(c, src[i]);
    gf256::add_scaled(dst, src, c);
    CHECK(dst == expect);

    std::vector<uint8_t> scaled(src);
    gf256::scale(scaled, c);
    for (size_t i = 0; i < scaled.size(); ++i)
        CHECK(scaled[i] == ref::mul(c, src[i]));

    gf256::scale(scaled, 0);
    CHECK(std::all_of(scaled.begin(), scaled.end(), [](uint8_t b) { return b == 0; }));
}
