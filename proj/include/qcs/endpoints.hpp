#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "qcs/rlnc.hpp"
#include "qcs/wire.hpp"

namespace qcs::endpoints {

struct CodedParams {
    uint8_t k = 0;       // source chunks per group
    uint16_t k_prime = 0; // coded chunks emitted per group, >= k
    uint16_t h = 0;      // max coded chunks per packet
};

// How an application wants its payload broken up and protected.
struct AppContext {
    std::vector<std::pair<uint16_t, uint8_t>> chunking; // (length, sig), plain mode
    QFunction q_function = QFunction::priority_order;
    uint16_t q_threshold = 1;
    std::optional<CodedParams> coded;
    uint32_t deadline_us = 0;       // per-message latency budget; 0 = none
    uint8_t wash_condition_pct = 90;
    uint8_t tos = 0;
};

// Builds the packets for one message. Plain mode: one packet laid out per
// ctx.chunking. Coded mode: one coding group of k chunks, k' coded chunks,
// ceil(k'/h) packets. deadline_us is copied verbatim; senders stamp it to an
// absolute time at transmission.
std::vector<QualitativePacket> packetize(std::span<const uint8_t> data, const AppContext& ctx,
                                         uint32_t flow_id, uint32_t seq_base,
                                         uint64_t coding_seed = 0);

struct Ack {
    uint32_t flow_id = 0;
    uint32_t seq = 0;
    uint16_t group_id = 0;
    bool coded = false;
    double quality = 1.0;      // surviving significance/chunk fraction
    uint16_t dof_received = 0; // decoder rank after this packet (coded)
    bool washed_flag = false;
};

struct RateState {
    double rate_bytes_per_s = 0;
    double min_rate = 0;
    double max_rate = 0;
    double additive_step = 0; // one MTU per RTT estimate, maintained by the sender
};

// Additive increase on clean acks; multiplicative decrease scaled by how much
// quality survived (full drop halves the rate, a mild wash barely dents it).
RateState update_rate(const RateState& s, const Ack& ack);

// Reassembles one flow. Plain mode delivers surviving chunk bytes per packet
// (deduplicated by seq); coded mode accumulates degrees of freedom per group
// and delivers the whole message on decode.
class Receiver {
public:
    struct Delivery {
        uint32_t flow_id = 0;
        uint32_t seq = 0;
        uint16_t group_id = 0;
        bool coded = false;
        uint64_t app_bytes = 0; // bytes newly delivered to the application
        double quality = 1.0;
        bool duplicate = false;
        std::vector<uint8_t> data; // decoded message (coded mode only)
    };
    using DeliverySink = std::function<void(const Delivery&)>;

    Receiver(uint32_t flow_id, size_t message_bytes, std::optional<CodedParams> coded);

    void set_delivery_sink(DeliverySink sink) { sink_ = std::move(sink); }

    Ack receive(const QualitativePacket& pkt, uint64_t now_us);

    uint64_t delivered_app_bytes() const { return delivered_app_bytes_; }

private:
    uint32_t flow_id_;
    size_t message_bytes_;
    std::optional<CodedParams> coded_;
    std::set<uint32_t> seen_seqs_;
    std::map<uint16_t, rlnc::DecoderState> groups_;
    std::set<uint16_t> delivered_groups_;
    uint64_t delivered_app_bytes_ = 0;
    DeliverySink sink_;
};

// Paces fixed-size messages, reacts to acks, retransmits whole-dropped plain
// packets, and emits repair chunks for coded groups that came up short.
class Sender {
public:
    struct Config {
        uint32_t flow_id = 0;
        AppContext app;
        size_t message_bytes = 0;
        double initial_rate = 0;
        double min_rate = 0;
        double max_rate = 0;
        bool rate_adaptive = true;
        bool retransmit = true; // plain mode only; coded repairs instead
        uint64_t seed = 0;
        uint64_t rto_min_us = 200000;
        uint64_t rto_max_us = 2000000;
        size_t mtu_bytes = 1500;
        int max_attempts = 8;       // per plain packet, first send included
        int max_repair_rounds = 16; // per coded group
    };

    explicit Sender(Config cfg);

    // Packets for the next application message; caller injects them and arms
    // a timeout per tracked seq.
    std::vector<QualitativePacket> next_message(uint64_t now_us);

    struct Actions {
        std::vector<QualitativePacket> inject; // retransmission or repair packets
        bool rate_changed = false;
    };
    Actions on_ack(const Ack& ack, uint64_t now_us);
    Actions on_timeout(uint32_t seq, uint64_t now_us);

    bool tracks(uint32_t seq) const; // still awaiting ack for seq
    uint64_t rto_us() const;
    double current_rate() const { return rate_.rate_bytes_per_s; }
    const RateState& rate_state() const { return rate_; }
    // Pacing interval for one message at the current rate.
    uint64_t send_interval_us() const;

    uint64_t messages_sent() const { return messages_sent_; }
    uint64_t retransmissions() const { return retransmissions_; }
    uint64_t repair_chunks() const { return repair_chunks_; }

    // Deterministic message payload; what the receiver should see.
    static std::vector<uint8_t> message_payload(uint64_t seed, uint64_t msg_index, size_t bytes);

private:
    struct PlainPending {
        QualitativePacket pkt;
        uint64_t first_send_us = 0;
        int attempts = 1;
    };
    struct GroupState {
        rlnc::GroupEncoder encoder;
        std::set<uint32_t> outstanding;
        uint16_t best_dof = 0;
        bool delivered = false;
        int repair_rounds = 0;
    };

    void note_rtt_sample(uint64_t sample_us);
    void apply_rate(const Ack& ack);
    std::vector<QualitativePacket> emit_repairs(GroupState& g, uint64_t now_us);
    rlnc::PackPolicy pack_policy(uint64_t now_us) const;

    Config cfg_;
    RateState rate_;
    double srtt_us_ = 0; // 0 until the first sample
    uint64_t messages_sent_ = 0;
    uint64_t retransmissions_ = 0;
    uint64_t repair_chunks_ = 0;
    uint32_t next_seq_ = 0;
    std::map<uint32_t, PlainPending> plain_pending_;
    std::map<uint16_t, GroupState> groups_;
    std::map<uint32_t, uint16_t> seq_to_group_;
    std::map<uint32_t, uint64_t> seq_send_us_; // coded seqs; RTT sampling
};

} // namespace qcs::endpoints
