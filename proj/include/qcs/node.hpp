#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qcs/wash.hpp"
#include "qcs/wire.hpp"

namespace qcs::node {

enum class NodeMode : uint8_t {
    legacy_droptail, // whole-packet drop when full, never modifies packets
    qualitative,     // wash-or-drop admission
};

struct NodeConfig {
    std::string node_id;
    size_t egress_capacity_bytes = 0;
    NodeMode mode = NodeMode::qualitative;
    uint64_t wash_seed = 0;
};

enum class DropCause : uint8_t {
    queue_full,
    threshold_exceeded,
    deadline_unmeetable,
    nothing_removable,
};

const char* to_string(DropCause c);

struct AdmitResult {
    enum class Kind : uint8_t { enqueued, enqueued_washed, dropped };
    Kind kind = Kind::enqueued;
    double quality = 1.0;                    // of the packet as enqueued
    DropCause cause = DropCause::queue_full; // set when dropped
};

// Structured record for everything the node does; the simulator turns these
// into trace lines and per-flow counters.
struct NodeEvent {
    enum class Kind : uint8_t { enqueue, wash, drop, dequeue };
    Kind kind = Kind::enqueue;
    uint64_t time_us = 0;
    uint32_t flow_id = 0;
    uint32_t seq = 0;
    size_t encoded_bytes = 0; // packet size after the action
    size_t payload_bytes = 0; // surviving payload after the action
    size_t freed_bytes = 0;   // wash only: payload bytes removed
    double quality = 1.0;
    DropCause cause = DropCause::queue_full; // drop only
    bool resident = false;                   // wash of an already-queued packet
};

// Forwarding element with one finite egress FIFO. In qualitative mode an
// arrival that does not fit triggers the wash path; in legacy mode it is
// drop-tail. The FIFO head is treated as committed to the link (the driver
// serializes it), so fairness trims never touch it.
class ForwardNode {
public:
    explicit ForwardNode(NodeConfig cfg);

    void set_event_sink(std::function<void(const NodeEvent&)> sink) { sink_ = std::move(sink); }

    AdmitResult admit(const QualitativePacket& pkt, uint64_t now_us,
                      uint64_t residual_path_latency_us);

    // FIFO head; empty queue yields nullopt.
    std::optional<QualitativePacket> dequeue(uint64_t now_us);

    const QualitativePacket* peek() const;
    size_t peek_encoded_size() const; // 0 when empty

    size_t queue_len() const { return queue_.size(); }
    size_t occupied_bytes() const { return occupied_; }
    size_t capacity_bytes() const { return cfg_.egress_capacity_bytes; }
    double occupancy_pct() const {
        return 100.0 * static_cast<double>(occupied_) /
               static_cast<double>(cfg_.egress_capacity_bytes);
    }
    const NodeConfig& config() const { return cfg_; }

    // Surviving payload bytes per queued packet with flow ids, oldest first;
    // used for end-of-run conservation accounting.
    std::vector<std::pair<uint32_t, size_t>> queued_payload() const;

private:
    struct Entry {
        QualitativePacket pkt;
        size_t size = 0; // encoded bytes, kept in sync with pkt
        uint64_t residual_us = 0;
    };

    void emit(const NodeEvent& ev) {
        if (sink_)
            sink_(ev);
    }
    void push(QualitativePacket pkt, size_t size, uint64_t residual_us, uint64_t now_us,
              double quality);
    // Trims queued packets of equal tos, newest first and intact before
    // already-washed, to free up to `shortfall` bytes; returns bytes freed.
    size_t trim_residents(const QualitativePacket& arrival, double occupancy, size_t shortfall,
                          uint64_t now_us);

    NodeConfig cfg_;
    std::deque<Entry> queue_;
    size_t occupied_ = 0;
    uint64_t wash_calls_ = 0;
    std::function<void(const NodeEvent&)> sink_;
};

} // namespace qcs::node
