#include "qcs/node.hpp"

#include "qcs/errors.hpp"
#include "qcs/rng.hpp"

namespace qcs::node {

const char* to_string(DropCause c) {
    switch (c) {
    case DropCause::queue_full:          return "queue-full";
    case DropCause::threshold_exceeded:  return "threshold-exceeded";
    case DropCause::deadline_unmeetable: return "deadline-unmeetable";
    case DropCause::nothing_removable:   return "nothing-removable";
    }
    return "?";
}

namespace {

DropCause to_cause(wash::DropReason r) {
    switch (r) {
    case wash::DropReason::threshold_exceeded:  return DropCause::threshold_exceeded;
    case wash::DropReason::deadline_unmeetable: return DropCause::deadline_unmeetable;
    case wash::DropReason::nothing_removable:   return DropCause::nothing_removable;
    }
    return DropCause::queue_full;
}

} // namespace

ForwardNode::ForwardNode(NodeConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.egress_capacity_bytes == 0)
        throw Error(Errc::bad_param, "node needs nonzero egress capacity");
}

void ForwardNode::push(QualitativePacket pkt, size_t size, uint64_t residual_us,
                       uint64_t now_us, double quality) {
    occupied_ += size;
    NodeEvent ev;
    ev.kind = NodeEvent::Kind::enqueue;
    ev.time_us = now_us;
    ev.flow_id = pkt.flow_id;
    ev.seq = pkt.seq;
    ev.encoded_bytes = size;
    ev.payload_bytes = pkt.surviving_bytes();
    ev.quality = quality;
    queue_.push_back(Entry{std::move(pkt), size, residual_us});
    emit(ev);
}

size_t ForwardNode::trim_residents(const QualitativePacket& arrival, double occupancy,
                                   size_t shortfall, uint64_t now_us) {
    // Victims pay newest-first, intact packets before already-washed ones, and
    // only at equal tos. The head is skipped: it is committed to the link.
    // Several residents may give up bytes for one arrival (congestion sharing).
    size_t total_freed = 0;
    for (int pass = 0; pass < 2 && total_freed < shortfall; ++pass) {
        const bool want_washed = pass == 1;
        for (size_t i = queue_.size(); i-- > 1 && total_freed < shortfall;) {
            Entry& e = queue_[i];
            if (e.pkt.washed != want_washed || e.pkt.tos != arrival.tos)
                continue;
            wash::WashContext rctx;
            rctx.queue_occupancy_pct = occupancy;
            rctx.now_us = now_us;
            rctx.residual_path_latency_us = e.residual_us;
            const uint64_t seed = mix_seed(cfg_.wash_seed, wash_calls_++);
            const size_t can = wash::max_washable_bytes(e.pkt, rctx, seed);
            if (can == 0)
                continue; // at its degradation floor; try the next-newest
            rctx.bytes_needed = std::min(shortfall - total_freed, can);
            auto out = wash::wash(e.pkt, rctx, seed);
            if (out.kind != wash::WashOutcome::Kind::forward_washed)
                continue; // its own condition/deadline said no; leave it queued
            const size_t new_size = wire::encoded_size(out.packet);
            const size_t freed = e.size - new_size;
            occupied_ -= freed;
            e.pkt = std::move(out.packet);
            e.size = new_size;

            NodeEvent ev;
            ev.kind = NodeEvent::Kind::wash;
            ev.time_us = now_us;
            ev.flow_id = e.pkt.flow_id;
            ev.seq = e.pkt.seq;
            ev.encoded_bytes = new_size;
            ev.payload_bytes = e.pkt.surviving_bytes();
            ev.freed_bytes = freed;
            ev.quality = wash::quality_of_packet(e.pkt);
            ev.resident = true;
            emit(ev);
            total_freed += freed;
        }
    }
    return total_freed;
}

AdmitResult ForwardNode::admit(const QualitativePacket& pkt, uint64_t now_us,
                               uint64_t residual_path_latency_us) {
    const size_t size = wire::encoded_size(pkt);
    const double occupancy = occupancy_pct();
    size_t free_bytes = cfg_.egress_capacity_bytes - occupied_;

    const auto drop = [&](DropCause cause) {
        NodeEvent ev;
        ev.kind = NodeEvent::Kind::drop;
        ev.time_us = now_us;
        ev.flow_id = pkt.flow_id;
        ev.seq = pkt.seq;
        ev.encoded_bytes = size;
        ev.payload_bytes = pkt.surviving_bytes();
        ev.quality = wash::quality_of_packet(pkt);
        ev.cause = cause;
        emit(ev);
        return AdmitResult{AdmitResult::Kind::dropped, ev.quality, cause};
    };

    if (cfg_.mode == NodeMode::legacy_droptail) {
        if (size > free_bytes)
            return drop(DropCause::queue_full);
        const double q = wash::quality_of_packet(pkt);
        push(pkt, size, residual_path_latency_us, now_us, q);
        return AdmitResult{AdmitResult::Kind::enqueued, q, {}};
    }

    wash::WashContext ctx;
    ctx.queue_occupancy_pct = occupancy;
    ctx.bytes_needed = size > free_bytes ? size - free_bytes : 0;
    ctx.now_us = now_us;
    ctx.residual_path_latency_us = residual_path_latency_us;

    // Fairness: when a wash is about to happen, queued intact packets of the
    // same priority give up bytes before the arrival does.
    if (ctx.bytes_needed > 0 && wash::condition_met(pkt.directive, ctx)) {
        const size_t freed = trim_residents(pkt, occupancy, ctx.bytes_needed, now_us);
        if (freed > 0) {
            free_bytes = cfg_.egress_capacity_bytes - occupied_;
            ctx.bytes_needed = size > free_bytes ? size - free_bytes : 0;
        }
    }

    const uint64_t seed = mix_seed(cfg_.wash_seed, wash_calls_++);
    auto out = wash::wash(pkt, ctx, seed);
    switch (out.kind) {
    case wash::WashOutcome::Kind::forward_unchanged: {
        if (size > free_bytes)
            return drop(DropCause::queue_full);
        const double q = wash::quality_of_packet(pkt);
        push(pkt, size, residual_path_latency_us, now_us, q);
        return AdmitResult{AdmitResult::Kind::enqueued, q, {}};
    }
    case wash::WashOutcome::Kind::forward_washed: {
        const size_t washed_size = wire::encoded_size(out.packet);
        const size_t washed_payload = out.packet.surviving_bytes();
        const double q = wash::quality_of_packet(out.packet);
        if (washed_size > cfg_.egress_capacity_bytes - occupied_)
            return drop(DropCause::queue_full); // cannot happen: wash freed the shortfall

        NodeEvent ev;
        ev.kind = NodeEvent::Kind::wash;
        ev.time_us = now_us;
        ev.flow_id = out.packet.flow_id;
        ev.seq = out.packet.seq;
        ev.encoded_bytes = washed_size;
        ev.payload_bytes = washed_payload;
        ev.freed_bytes = size - washed_size;
        ev.quality = q;
        emit(ev);

        push(std::move(out.packet), washed_size, residual_path_latency_us, now_us, q);
        return AdmitResult{AdmitResult::Kind::enqueued_washed, q, {}};
    }
    case wash::WashOutcome::Kind::drop:
        return drop(to_cause(out.reason));
    }
    throw Error(Errc::invariant_violation, "unreachable wash outcome");
}

std::optional<QualitativePacket> ForwardNode::dequeue(uint64_t now_us) {
    if (queue_.empty())
        return std::nullopt;
    Entry e = std::move(queue_.front());
    queue_.pop_front();
    occupied_ -= e.size;

    NodeEvent ev;
    ev.kind = NodeEvent::Kind::dequeue;
    ev.time_us = now_us;
    ev.flow_id = e.pkt.flow_id;
    ev.seq = e.pkt.seq;
    ev.encoded_bytes = e.size;
    ev.payload_bytes = e.pkt.surviving_bytes();
    ev.quality = wash::quality_of_packet(e.pkt);
    emit(ev);
    return std::move(e.pkt);
}

const QualitativePacket* ForwardNode::peek() const {
    return queue_.empty() ? nullptr : &queue_.front().pkt;
}

size_t ForwardNode::peek_encoded_size() const {
    return queue_.empty() ? 0 : queue_.front().size;
}

std::vector<std::pair<uint32_t, size_t>> ForwardNode::queued_payload() const {
    std::vector<std::pair<uint32_t, size_t>> out;
    out.reserve(queue_.size());
    for (const auto& e : queue_)
        out.emplace_back(e.pkt.flow_id, e.pkt.surviving_bytes());
    return out;
}

} // namespace qcs::node
