#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "qcs/errors.hpp"

namespace qcs {

// Chunk-removal policy carried in the packet header.
enum class QFunction : uint8_t {
    priority_order = 0, // ascending sig, tail bias
    binary = 1,         // sig 0 droppable, sig 1 protected
    step = 2,           // occupancy maps to a severity level
    coded_random = 3,   // any chunk, uniformly at random
};

const char* to_string(QFunction f);

inline constexpr uint8_t kCommandWash = 1;
inline constexpr uint8_t kConditionQueueOccupancyGe = 1;

// Per-hop processing directive: when to wash, how to pick victims, and the
// floor below which the packet is dropped whole instead.
struct WashDirective {
    uint8_t command = kCommandWash;
    uint8_t condition_code = kConditionQueueOccupancyGe;
    uint8_t condition_param = 90;  // occupancy percentage threshold
    QFunction q_function = QFunction::priority_order;
    uint16_t q_threshold = 1;      // min surviving chunks
    uint32_t deadline_us = 0;      // 0 = no latency budget
    bool operator==(const WashDirective&) const = default;
};

// One payload chunk. Descriptors survive the chunk itself: a washed chunk
// keeps its length and CRC so the receiver knows exactly what was removed.
struct ChunkDescriptor {
    uint8_t sig = 0;
    bool dropped = false;
    uint16_t offset = 0;          // 0xFFFF once dropped
    uint16_t length = 0;          // original length, retained after drop
    uint16_t crc16 = 0;           // CRC of the original chunk bytes
    std::vector<uint8_t> coeffs;  // k coding coefficients, coded mode only
    bool operator==(const ChunkDescriptor&) const = default;
};

inline constexpr uint16_t kDroppedOffset = 0xFFFF;

struct QualitativePacket {
    uint8_t version = 1;
    bool washed = false;
    bool coded = false;
    uint8_t tos = 0;  // 0..7, bumped on each wash
    WashDirective directive;
    uint8_t k = 0;         // coded group size, 0 when uncoded
    uint16_t group_id = 0; // coded mode only
    std::vector<ChunkDescriptor> descriptors;
    std::vector<uint8_t> payload;  // surviving chunks, descriptor order

    // Simulator-level addressing; never serialized.
    uint32_t flow_id = 0;
    uint32_t seq = 0;

    size_t chunk_count() const { return descriptors.size(); }
    size_t surviving_count() const;
    size_t surviving_bytes() const;

    bool operator==(const QualitativePacket&) const = default;
};

namespace wire {

inline constexpr uint16_t kMagic = 0x5157; // "QW"
inline constexpr uint8_t kVersion = 1;
inline constexpr size_t kFixedHeaderBytes = 16;   // +3 in coded mode (k, group_id)
inline constexpr size_t kDescriptorBytes = 8;     // +k in coded mode
inline constexpr size_t kMinEncodedBytes = kFixedHeaderBytes + kDescriptorBytes + 1;

// CRC-16/CCITT-FALSE: poly 0x1021, init 0xFFFF, no reflection, no final xor.
uint16_t crc16(std::span<const uint8_t> bytes);

// Throws InvariantViolation when any structural invariant fails; CRC
// mismatches are reported with `crc_errc` so encode and decode can signal
// them differently.
void validate(const QualitativePacket& p, Errc crc_errc = Errc::invariant_violation);

// Wire layout, big-endian throughout:
//   0-1 magic, 2 version, 3 flags (bit0 washed, bit1 coded), 4 tos,
//   5 command, 6 condition_code, 7 condition_param, 8 q_function,
//   9-10 q_threshold, 11-14 deadline_us, 15 chunk_count,
//   [coded: 16 k, 17-18 group_id],
//   then per chunk: sig, flags (bit0 dropped), offset, length, crc16
//   [+ k coefficient bytes], then the surviving payload bytes.
// No packet-level checksum by design: chunks are individually verifiable,
// so a wash cannot invalidate the rest of the packet.
std::vector<uint8_t> encode(const QualitativePacket& p);

// Strict canonical decoder: rejects unknown flag bits, non-canonical
// offsets, and trailing bytes, so decode(bytes) succeeding implies
// encode(decode(bytes)) == bytes.
QualitativePacket decode(std::span<const uint8_t> bytes);

// Encoded size without serializing.
size_t encoded_size(const QualitativePacket& p);

// Payload bytes of surviving chunk i (empty span when dropped).
std::span<const uint8_t> chunk_bytes(const QualitativePacket& p, size_t i);

// Per-chunk CRC verification; dropped chunks report true. Lets a receiver
// keep the intact chunks of a partially corrupted packet.
std::vector<bool> survivor_crc_ok(const QualitativePacket& p);

enum class OverheadModel : uint8_t {
    four_byte_descriptors, // idealized 4 bytes of metadata per chunk
    wire_layout,           // this codec's actual header + descriptor cost
};

// Fraction of an MTU spent on chunk metadata.
double header_overhead(size_t num_chunks, size_t mtu, OverheadModel model);

} // namespace wire
} // namespace qcs
