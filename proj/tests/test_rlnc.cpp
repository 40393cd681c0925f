#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numeric>
#include <vector>

#include "qcs/errors.hpp"
#include "qcs/rlnc.hpp"
#include "qcs/rng.hpp"

#include "gf256_ref.hpp"
#include "testutil.hpp"

using namespace qcs;

namespace {

std::vector<uint8_t> concat_unpadded(const std::vector<std::vector<uint8_t>>& chunks,
                                     size_t total) {
    std::vector<uint8_t> out;
    for (const auto& c : chunks)
        out.insert(out.end(), c.begin(), c.end());
    out.resize(total);
    return out;
}

std::vector<std::vector<uint8_t>> coeff_rows(const std::vector<rlnc::CodedChunk>& coded) {
    std::vector<std::vector<uint8_t>> rows;
    for (const auto& c : coded)
        rows.push_back(c.coeffs);
    return rows;
}

} // namespace

TEST_CASE("make_group zero-pads into k equal chunks") {
    SplitMix64 rng(21);
    const auto data = testutil::random_bytes(rng, 500);
    const auto g = rlnc::make_group(7, data, 3);
    CHECK(g.group_id == 7);
    CHECK(g.k == 3);
    CHECK(g.chunk_len == 167); // ceil(500/3)
    REQUIRE(g.source_chunks.size() == 3);
    for (const auto& c : g.source_chunks)
        CHECK(c.size() == 167);
    CHECK(concat_unpadded(g.source_chunks, 500) == data);
    CHECK(g.source_chunks[2][166] == 0); // padding
}

TEST_CASE("combine matches the naive matrix product, serial and parallel") {
    SplitMix64 rng(22);
    std::vector<std::vector<uint8_t>> sources;
    for (int i = 0; i < 5; ++i)
        sources.push_back(testutil::random_bytes(rng, 4096));
    std::vector<std::vector<uint8_t>> coeffs;
    for (int i = 0; i < 7; ++i)
        coeffs.push_back(testutil::random_bytes(rng, 5));

    const auto expect = ref::encode_naive(sources, coeffs);
    CHECK(rlnc::combine(sources, coeffs, false) == expect);
    CHECK(rlnc::combine(sources, coeffs, true) == expect);
}

TEST_CASE("encode rejects k_prime below k") {
    SplitMix64 rng(23);
    const auto g = rlnc::make_group(1, testutil::random_bytes(rng, 100), 5);
    try {
        rlnc::rlnc_encode(g, 4, 99);
        FAIL("k_prime < k accepted");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::bad_param);
    }
}

TEST_CASE("scalar case: k=1, k_prime=1 emits a nonzero multiple of the source") {
    SplitMix64 rng(24);
    const auto data = testutil::random_bytes(rng, 64);
    const auto g = rlnc::make_group(1, data, 1);
    const auto coded = rlnc::rlnc_encode(g, 1, 42);
    REQUIRE(coded.size() == 1);
    REQUIRE(coded[0].coeffs.size() == 1);
    CHECK(coded[0].coeffs[0] != 0);
    for (size_t i = 0; i < data.size(); ++i)
        CHECK(coded[0].data[i] == ref::mul(coded[0].coeffs[0], data[i]));
}

TEST_CASE("k=3, k_prime=3 coefficients reach full rank and decode") {
    SplitMix64 rng(25);
    const auto data = testutil::random_bytes(rng, 300);
    const auto g = rlnc::make_group(2, data, 3);
    const auto coded = rlnc::rlnc_encode(g, 3, 7);
    CHECK(ref::rank(coeff_rows(coded)) == 3);

    rlnc::DecoderState dec(3, g.chunk_len);
    for (const auto& c : coded)
        dec.add(c);
    REQUIRE(dec.rank() == 3);
    CHECK(concat_unpadded(dec.solve(), 300) == data);
}

TEST_CASE("k=5, k_prime=6: every 5-subset of the emitted rows has rank 5") {
    SplitMix64 rng(26);
    const auto g = rlnc::make_group(3, testutil::random_bytes(rng, 500), 5);
    const auto coded = rlnc::rlnc_encode(g, 6, 1234);
    REQUIRE(coded.size() == 6);
    const auto rows = coeff_rows(coded);
    for (size_t skip = 0; skip < rows.size(); ++skip) {
        std::vector<std::vector<uint8_t>> subset;
        for (size_t i = 0; i < rows.size(); ++i)
            if (i != skip)
                subset.push_back(rows[i]);
        CHECK(ref::rank(subset) == 5);
    }
}

TEST_CASE("any k-subset decodes across random parameters") {
    SplitMix64 rng(27);
    for (int round = 0; round < 40; ++round) {
        const uint8_t k = static_cast<uint8_t>(1 + rng.next_below(8));
        const size_t k_prime = k + rng.next_below(5);
        const size_t len = 1 + rng.next_below(64);
        const auto data = testutil::random_bytes(rng, len * k);
        const auto g = rlnc::make_group(static_cast<uint16_t>(round), data, k);
        const auto coded = rlnc::rlnc_encode(g, k_prime, rng.next());

        // A random k-subset must solve to the exact sources.
        std::vector<size_t> idx(coded.size());
        std::iota(idx.begin(), idx.end(), 0);
        for (size_t i = idx.size(); i > 1; --i)
            std::swap(idx[i - 1], idx[rng.next_below(i)]);

        rlnc::DecoderState dec(k, g.chunk_len);
        for (size_t i = 0; i < k; ++i) {
            const auto r = dec.add(coded[idx[i]]);
            CHECK(r.innovative);
            CHECK(r.rank_after == i + 1);
        }
        CHECK(concat_unpadded(dec.solve(), data.size()) == data);
    }
}

TEST_CASE("decoder absorbs dependent rows without rank change") {
    SplitMix64 rng(28);
    const auto g = rlnc::make_group(4, testutil::random_bytes(rng, 200), 4);
    const auto coded = rlnc::rlnc_encode(g, 5, 77);

    rlnc::DecoderState dec(4, g.chunk_len);
    auto first = dec.add(coded[0]);
    CHECK(first.innovative);
    CHECK(first.rank_after == 1);
    auto dup = dec.add(coded[0]);
    CHECK_FALSE(dup.innovative);
    CHECK(dup.rank_after == 1);

    // Rank never decreases and never exceeds k, even fed all 5 rows twice.
    size_t prev = dec.rank();
    for (int pass = 0; pass < 2; ++pass)
        for (const auto& c : coded) {
            dec.add(c);
            CHECK(dec.rank() >= prev);
            CHECK(dec.rank() <= 4);
            prev = dec.rank();
        }
    CHECK(dec.rank() == 4);
}

TEST_CASE("solve below full rank reports the missing degrees of freedom") {
    SplitMix64 rng(29);
    const auto g = rlnc::make_group(5, testutil::random_bytes(rng, 500), 5);
    const auto coded = rlnc::rlnc_encode(g, 6, 5);
    rlnc::DecoderState dec(5, g.chunk_len);
    for (int i = 0; i < 4; ++i)
        dec.add(coded[i]);
    try {
        dec.solve();
        FAIL("solved at rank 4");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::insufficient_rank);
        CHECK(e.detail_a() == 4);
        CHECK(e.detail_b() == 5);
    }
}

TEST_CASE("decoder add rejects wrong coefficient count") {
    rlnc::DecoderState dec(3, 10);
    rlnc::CodedChunk c;
    c.coeffs = {1, 2};
    c.data.assign(10, 0);
    try {
        dec.add(c);
        FAIL("wrong coeff count accepted");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::length_mismatch);
    }
}

TEST_CASE("solve matches the one-shot dense elimination oracle") {
    SplitMix64 rng(30);
    const auto g = rlnc::make_group(6, testutil::random_bytes(rng, 350), 5);
    const auto coded = rlnc::rlnc_encode(g, 5, 11);

    std::vector<std::vector<uint8_t>> cm, dm;
    for (const auto& c : coded) {
        cm.push_back(c.coeffs);
        dm.push_back(c.data);
    }
    const auto oracle = ref::solve_dense(cm, dm);
    REQUIRE_FALSE(oracle.empty());

    rlnc::DecoderState dec(5, g.chunk_len);
    for (const auto& c : coded)
        dec.add(c);
    CHECK(dec.solve() == oracle);
    CHECK(dec.solve() == g.source_chunks);
}

TEST_CASE("group encoder keeps the subset guarantee across repair emissions") {
    SplitMix64 rng(31);
    auto g = rlnc::make_group(8, testutil::random_bytes(rng, 400), 4);
    rlnc::GroupEncoder enc(g, 999);
    auto batch1 = enc.emit(5);
    auto batch2 = enc.emit(2); // repairs drawn later
    CHECK(enc.emitted() == 7);

    std::vector<std::vector<uint8_t>> rows = coeff_rows(batch1);
    for (const auto& c : batch2)
        rows.push_back(c.coeffs);

    // Every 4-subset of all 7 rows decodes; spot-check 50 random subsets.
    for (int round = 0; round < 50; ++round) {
        std::vector<size_t> idx(rows.size());
        std::iota(idx.begin(), idx.end(), 0);
        for (size_t i = idx.size(); i > 1; --i)
            std::swap(idx[i - 1], idx[rng.next_below(i)]);
        std::vector<std::vector<uint8_t>> subset;
        for (int i = 0; i < 4; ++i)
            subset.push_back(rows[idx[i]]);
        CHECK(ref::rank(subset) == 4);
    }
}

TEST_CASE("headroom shrinks as the subset constraint tightens") {
    SplitMix64 rng(32);
    auto g = rlnc::make_group(9, testutil::random_bytes(rng, 420), 6);
    rlnc::GroupEncoder enc(g, 5);
    const size_t before = enc.headroom();
    CHECK(before > 0);
    enc.emit(6);
    const size_t after_k = enc.headroom();
    CHECK(after_k <= before);
    // Drawing every remaining cheap row must succeed without throwing.
    enc.emit(after_k > 4 ? 4 : after_k);
    CHECK(enc.headroom() <= after_k);

    // k = 1 never tightens: coefficients only need to be nonzero.
    auto g1 = rlnc::make_group(10, testutil::random_bytes(rng, 50), 1);
    rlnc::GroupEncoder enc1(g1, 6);
    enc1.emit(20);
    CHECK(enc1.headroom() > 100);
}

TEST_CASE("pack_group splits coded chunks into h-sized packets") {
    SplitMix64 rng(33);
    const auto g = rlnc::make_group(11, testutil::random_bytes(rng, 500), 5);
    const auto coded = rlnc::rlnc_encode(g, 6, 3);

    rlnc::PackPolicy pol;
    pol.q_threshold = 2;
    pol.condition_param = 75;
    const auto pkts = rlnc::pack_group(11, 5, coded, 3, pol);
    REQUIRE(pkts.size() == 2);
    for (const auto& p : pkts) {
        CHECK(p.coded);
        CHECK(p.k == 5);
        CHECK(p.group_id == 11);
        CHECK(p.directive.q_function == QFunction::coded_random);
        CHECK(p.directive.q_threshold == 2);
        CHECK(p.directive.condition_param == 75);
        CHECK(p.chunk_count() == 3);
        for (size_t i = 0; i < p.chunk_count(); ++i)
            CHECK(p.descriptors[i].coeffs.size() == 5);
    }

    CHECK(rlnc::pack_group(11, 5, coded, 5).size() == 2); // ceil(6/5)
    CHECK(rlnc::pack_group(11, 5, coded, 6).size() == 1);
    std::vector<rlnc::CodedChunk> one(coded.begin(), coded.begin() + 1);
    CHECK(rlnc::pack_group(11, 5, one, 3).size() == 1);
}
