#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "qcs/rng.hpp"
#include "qcs/wire.hpp"

namespace qcs::rlnc {

// k source chunks that are encoded together, padded to a common length.
struct RlncGroup {
    uint16_t group_id = 0;
    uint8_t k = 0;
    size_t chunk_len = 0;
    std::vector<std::vector<uint8_t>> source_chunks;
};

// Splits data into k zero-padded chunks of ceil(len/k) bytes.
RlncGroup make_group(uint16_t group_id, std::span<const uint8_t> data, uint8_t k);

struct CodedChunk {
    std::vector<uint8_t> coeffs; // k field elements
    std::vector<uint8_t> data;   // chunk_len bytes
};

// out[r] = sum_j coeffs[r][j] * sources[j] over GF(256). `parallel` fans the
// output rows across OpenMP threads; the result is bitwise identical either
// way because rows are independent.
std::vector<std::vector<uint8_t>> combine(const std::vector<std::vector<uint8_t>>& sources,
                                          const std::vector<std::vector<uint8_t>>& coeffs,
                                          bool parallel = true);

// Draws random coefficient rows for a group, re-drawing any row that would
// let some k-subset of the emitted rows go rank-deficient. The guarantee:
// after emitting k' >= k rows, EVERY k of them decode the group, so k'-k
// chunk losses are always survivable. Stateful so that repair chunks emitted
// later keep the same guarantee against the earlier ones.
class GroupEncoder {
public:
    GroupEncoder(RlncGroup group, uint64_t seed);

    std::vector<CodedChunk> emit(size_t count);

    // How many more rows can still be drawn at practical cost. The subset
    // constraint tightens combinatorially: drawing row n+1 must dodge
    // C(n, k-1) subset spans, so acceptance decays like (255/256)^C(n,k-1)
    // and rejection sampling stalls once that exceeds a few hundred. Callers
    // wanting repair chunks beyond this should give the group up.
    size_t headroom() const;

    const RlncGroup& group() const { return group_; }
    size_t emitted() const { return rows_.size(); }

private:
    std::vector<uint8_t> draw_row();

    RlncGroup group_;
    std::vector<std::vector<uint8_t>> rows_;
    SplitMix64 rng_;
};

// One-shot convenience: k_prime coded chunks for the group.
std::vector<CodedChunk> rlnc_encode(const RlncGroup& group, size_t k_prime, uint64_t rng_seed);

// Header fields a sender wants stamped onto coded packets.
struct PackPolicy {
    uint16_t q_threshold = 1;
    uint8_t condition_param = 90;
    uint32_t deadline_us = 0;
    uint8_t tos = 0;
};

// Distributes coded chunks into packets of at most h chunks each
// (ceil(|coded|/h) packets), carrying the coefficient vectors in the
// descriptors.
std::vector<QualitativePacket> pack_group(uint16_t group_id, uint8_t k,
                                          const std::vector<CodedChunk>& coded, size_t h,
                                          const PackPolicy& policy = {});

// Incremental Gaussian elimination over received coded chunks. Rows are kept
// in reduced row-echelon form so rank queries and the final solve are cheap.
class DecoderState {
public:
    DecoderState(uint8_t k, size_t chunk_len);

    struct AddResult {
        size_t rank_after;
        bool innovative;
    };

    // Absorbs a chunk; dependent/duplicate chunks leave rank unchanged.
    AddResult add(const CodedChunk& chunk);

    size_t rank() const { return coeffs_.size(); }
    uint8_t k() const { return k_; }
    size_t chunk_len() const { return len_; }

    // Recovers the k source chunks; requires rank == k.
    std::vector<std::vector<uint8_t>> solve() const;

private:
    uint8_t k_;
    size_t len_;
    std::vector<std::vector<uint8_t>> coeffs_; // pivot columns strictly increasing
    std::vector<std::vector<uint8_t>> data_;
    std::vector<size_t> pivots_;
};

} // namespace qcs::rlnc
