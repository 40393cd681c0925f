#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "qcs/scenario.hpp"

namespace qcs::sim {

struct FlowMetrics {
    uint32_t flow_id = 0;

    // Application level.
    uint64_t bytes_offered = 0;   // messages sent x message size
    uint64_t bytes_delivered = 0; // reassembled bytes handed to the app
    uint64_t messages_sent = 0;
    uint64_t messages_delivered = 0;
    double goodput_bytes_per_s = 0;
    double mean_latency_us = 0;
    uint64_t p50_latency_us = 0;
    uint64_t p99_latency_us = 0;
    double mean_quality = 0; // mean per-arrival surviving quality

    // Wire level.
    uint64_t packets_sent = 0; // injected, including retransmits and repairs
    uint64_t packets_delivered = 0;
    uint64_t packets_washed = 0; // wash operations applied to this flow
    uint64_t packets_dropped = 0;
    uint64_t retransmissions = 0;
    uint64_t repair_chunks = 0;

    // Payload byte conservation: offered = delivered + washed + dropped +
    // inflight, exactly, counted on the wire (retransmits count again).
    uint64_t wire_payload_offered = 0;
    uint64_t wire_payload_delivered = 0;
    uint64_t wire_payload_washed = 0;
    uint64_t wire_payload_dropped = 0;
    uint64_t wire_payload_inflight = 0;

    std::vector<uint64_t> latency_samples_us; // one per app delivery, send order
};

struct RunResult {
    std::string scenario;
    uint64_t seed = 0;
    uint64_t sim_end_us = 0;
    uint64_t events_processed = 0;
    std::vector<FlowMetrics> flows; // sorted by flow_id
};

// Throws Errc::bad_scenario with a diagnostic when ids do not resolve,
// routes do not follow links, durations or capacities are nonpositive, or a
// forwarding node would need more than its single egress queue.
void validate_scenario(const ScenarioConfig& sc);

// Lower bound on the remaining latency from `node` to `dest`: cheapest path
// over the directed links counting propagation plus the serialization time
// of a minimum-size packet. Queuing is ignored, so a packet this bound
// already condemns is certainly late. Throws Errc::no_route.
uint64_t residual_latency(const ScenarioConfig& sc, const std::string& node,
                          const std::string& dest, size_t min_packet_bytes = 25);

// Deterministic discrete-event run. Same scenario and seed give the same
// metrics and, when `trace` is set, a byte-identical trace (one line per
// event: time_us, node, action, flow, seq, size, outcome, quality).
RunResult run(const ScenarioConfig& sc, uint64_t seed, std::ostream* trace = nullptr);

} // namespace qcs::sim
