#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "qcs/wire.hpp"

namespace qcs::wash {

// Congestion snapshot a node hands to the wash engine.
struct WashContext {
    double queue_occupancy_pct = 0; // 0..100, egress queue fill before this arrival
    size_t bytes_needed = 0;        // payload bytes the node must free to admit
    uint64_t now_us = 0;
    uint64_t residual_path_latency_us = 0; // lower bound to destination
};

enum class DropReason : uint8_t {
    threshold_exceeded,  // washing enough would leave fewer than q_threshold chunks
    deadline_unmeetable, // even the residual lower bound misses the deadline
    nothing_removable,   // no eligible chunk under the q_function
};

const char* to_string(DropReason r);

struct WashOutcome {
    enum class Kind : uint8_t { forward_unchanged, forward_washed, drop };
    Kind kind = Kind::forward_unchanged;
    QualitativePacket packet;                            // set when forward_washed
    DropReason reason = DropReason::nothing_removable;   // set when drop
};

// True when the directive's trigger condition holds in this context.
bool condition_met(const WashDirective& d, const WashContext& ctx);

struct VictimSelection {
    std::vector<size_t> victims; // descriptor indices, removal order
    bool ok = false;
    DropReason fail_reason = DropReason::nothing_removable;
};

// Minimal prefix of the eligibility order whose byte total covers
// ctx.bytes_needed without breaching q_threshold. Never throws for
// selection failures; the caller turns fail_reason into a whole-packet drop.
VictimSelection select_victims(const QualitativePacket& p, const WashContext& ctx,
                               uint64_t rng_seed);

// Most payload bytes a wash of this packet could free in this context
// (victims are constrained to a prefix of the eligibility order).
size_t max_washable_bytes(const QualitativePacket& p, const WashContext& ctx,
                          uint64_t rng_seed);

// The full per-hop operation: trigger check, latency check, victim
// selection, descriptor/payload rewrite, tos escalation.
WashOutcome wash(const QualitativePacket& p, const WashContext& ctx, uint64_t rng_seed);

// Fraction of significance (or of coded chunks) still present.
double quality_of_packet(const QualitativePacket& p);

} // namespace qcs::wash
