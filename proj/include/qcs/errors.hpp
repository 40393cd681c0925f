#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace qcs {

// Error codes shared by every module. One exception type carries the code
// plus up to two integer details (chunk index, ranks, ...).
enum class Errc : uint8_t {
    invariant_violation,
    truncated,
    bad_magic,
    bad_version,
    chunk_crc_mismatch,
    division_by_zero,
    bad_param,
    length_mismatch,
    insufficient_rank,
    unknown_condition,
    bad_context,
    unknown_flow,
    bad_scenario,
    no_route,
};

const char* to_string(Errc code);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& msg, int64_t detail_a = -1, int64_t detail_b = -1)
        : std::runtime_error(std::string(to_string(code)) + ": " + msg),
          code_(code), detail_a_(detail_a), detail_b_(detail_b) {}

    Errc code() const noexcept { return code_; }

    // chunk_crc_mismatch: index of the first failing chunk.
    int64_t chunk_index() const noexcept { return detail_a_; }
    // insufficient_rank: (rank, k).
    int64_t detail_a() const noexcept { return detail_a_; }
    int64_t detail_b() const noexcept { return detail_b_; }

private:
    Errc code_;
    int64_t detail_a_;
    int64_t detail_b_;
};

inline const char* to_string(Errc code) {
    switch (code) {
    case Errc::invariant_violation: return "InvariantViolation";
    case Errc::truncated:           return "Truncated";
    case Errc::bad_magic:           return "BadMagic";
    case Errc::bad_version:         return "BadVersion";
    case Errc::chunk_crc_mismatch:  return "ChunkCrcMismatch";
    case Errc::division_by_zero:    return "DivisionByZero";
    case Errc::bad_param:           return "BadParam";
    case Errc::length_mismatch:     return "LengthMismatch";
    case Errc::insufficient_rank:   return "InsufficientRank";
    case Errc::unknown_condition:   return "UnknownCondition";
    case Errc::bad_context:         return "BadContext";
    case Errc::unknown_flow:        return "UnknownFlow";
    case Errc::bad_scenario:        return "BadScenario";
    case Errc::no_route:            return "NoRoute";
    }
    return "Error";
}

} // namespace qcs
