#include "qcs/endpoints.hpp"

#include <algorithm>
#include <cmath>

#include "qcs/errors.hpp"
#include "qcs/rng.hpp"
#include "qcs/wash.hpp"

namespace qcs::endpoints {
namespace {

// Quality with CRC-failed chunks treated as dropped.
double arrived_quality(const QualitativePacket& pkt, const std::vector<bool>& crc_ok) {
    QualitativePacket adjusted = pkt;
    for (size_t i = 0; i < adjusted.descriptors.size(); ++i)
        if (!crc_ok[i])
            adjusted.descriptors[i].dropped = true;
    return wash::quality_of_packet(adjusted);
}

} // namespace

std::vector<QualitativePacket> packetize(std::span<const uint8_t> data, const AppContext& ctx,
                                         uint32_t flow_id, uint32_t seq_base,
                                         uint64_t coding_seed) {
    if (data.empty())
        throw Error(Errc::bad_context, "no data to packetize");

    if (ctx.coded) {
        const CodedParams& cp = *ctx.coded;
        if (cp.k < 1 || cp.k_prime < cp.k || cp.h < 1)
            throw Error(Errc::bad_context, "coded params inconsistent");
        auto group = rlnc::make_group(static_cast<uint16_t>(seq_base), data, cp.k);
        auto chunks = rlnc::rlnc_encode(group, cp.k_prime, coding_seed);
        rlnc::PackPolicy policy;
        policy.q_threshold = ctx.q_threshold;
        policy.condition_param = ctx.wash_condition_pct;
        policy.deadline_us = ctx.deadline_us;
        policy.tos = ctx.tos;
        auto packets = rlnc::pack_group(group.group_id, cp.k, chunks, cp.h, policy);
        for (size_t i = 0; i < packets.size(); ++i) {
            packets[i].flow_id = flow_id;
            packets[i].seq = seq_base + static_cast<uint32_t>(i);
        }
        return packets;
    }

    if (ctx.chunking.empty())
        throw Error(Errc::bad_context, "empty chunking");
    if (ctx.chunking.size() > 64)
        throw Error(Errc::bad_context, "more than 64 chunks");
    size_t total = 0;
    for (const auto& [len, sig] : ctx.chunking) {
        if (len < 1)
            throw Error(Errc::bad_context, "zero-length chunk");
        if (ctx.q_function == QFunction::binary && sig > 1)
            throw Error(Errc::bad_context, "binary significance must be 0 or 1");
        total += len;
    }
    if (total != data.size())
        throw Error(Errc::bad_context, "chunking does not cover the data");
    if (total > 0xFFFF)
        throw Error(Errc::bad_context, "payload exceeds 16-bit offsets");

    QualitativePacket p;
    p.tos = ctx.tos;
    p.directive.q_function = ctx.q_function;
    p.directive.q_threshold = ctx.q_threshold;
    p.directive.condition_param = ctx.wash_condition_pct;
    p.directive.deadline_us = ctx.deadline_us;
    p.flow_id = flow_id;
    p.seq = seq_base;
    p.payload.assign(data.begin(), data.end());
    uint16_t offset = 0;
    for (const auto& [len, sig] : ctx.chunking) {
        ChunkDescriptor d;
        d.sig = sig;
        d.offset = offset;
        d.length = len;
        d.crc16 = wire::crc16(data.subspan(offset, len));
        p.descriptors.push_back(std::move(d));
        offset = static_cast<uint16_t>(offset + len);
    }
    wire::validate(p);
    return {std::move(p)};
}

RateState update_rate(const RateState& s, const Ack& ack) {
    RateState out = s;
    if (ack.quality >= 1.0 && !ack.washed_flag)
        out.rate_bytes_per_s = std::min(s.rate_bytes_per_s + s.additive_step, s.max_rate);
    else
        out.rate_bytes_per_s =
            std::max(s.rate_bytes_per_s * (0.5 + ack.quality / 2.0), s.min_rate);
    return out;
}

Receiver::Receiver(uint32_t flow_id, size_t message_bytes, std::optional<CodedParams> coded)
    : flow_id_(flow_id), message_bytes_(message_bytes), coded_(coded) {}

Ack Receiver::receive(const QualitativePacket& pkt, uint64_t now_us) {
    if (pkt.flow_id != flow_id_)
        throw Error(Errc::unknown_flow, "packet for flow " + std::to_string(pkt.flow_id));

    const auto crc_ok = wire::survivor_crc_ok(pkt);
    const double quality = arrived_quality(pkt, crc_ok);

    Ack ack;
    ack.flow_id = flow_id_;
    ack.seq = pkt.seq;
    ack.group_id = pkt.group_id;
    ack.coded = pkt.coded;
    ack.quality = quality;
    ack.washed_flag = pkt.washed;

    if (!pkt.coded) {
        uint64_t valid_bytes = 0;
        for (size_t i = 0; i < pkt.descriptors.size(); ++i)
            if (!pkt.descriptors[i].dropped && crc_ok[i])
                valid_bytes += pkt.descriptors[i].length;
        const bool duplicate = !seen_seqs_.insert(pkt.seq).second;

        Delivery d;
        d.flow_id = flow_id_;
        d.seq = pkt.seq;
        d.app_bytes = duplicate ? 0 : valid_bytes;
        d.quality = quality;
        d.duplicate = duplicate;
        delivered_app_bytes_ += d.app_bytes;
        if (sink_)
            sink_(d);
        return ack;
    }

    // coded mode
    const uint16_t gid = pkt.group_id;
    if (delivered_groups_.count(gid)) {
        ack.dof_received = pkt.k; // group already complete; tell the sender so
        return ack;
    }
    const size_t chunk_len = pkt.descriptors.front().length;
    auto [it, created] = groups_.try_emplace(gid, pkt.k, chunk_len);
    rlnc::DecoderState& dec = it->second;
    for (size_t i = 0; i < pkt.descriptors.size(); ++i) {
        const auto& desc = pkt.descriptors[i];
        if (desc.dropped || !crc_ok[i])
            continue;
        const auto bytes = wire::chunk_bytes(pkt, i);
        dec.add(rlnc::CodedChunk{desc.coeffs, {bytes.begin(), bytes.end()}});
    }
    ack.dof_received = static_cast<uint16_t>(dec.rank());

    if (dec.rank() == static_cast<size_t>(dec.k())) {
        auto rows = dec.solve();
        std::vector<uint8_t> message;
        message.reserve(dec.k() * dec.chunk_len());
        for (const auto& row : rows)
            message.insert(message.end(), row.begin(), row.end());
        message.resize(message_bytes_); // strip group padding

        delivered_groups_.insert(gid);
        groups_.erase(gid);
        delivered_app_bytes_ += message_bytes_;

        Delivery d;
        d.flow_id = flow_id_;
        d.seq = pkt.seq;
        d.group_id = gid;
        d.coded = true;
        d.app_bytes = message_bytes_;
        d.quality = quality;
        d.data = std::move(message);
        if (sink_)
            sink_(d);
    }
    (void)now_us;
    return ack;
}

Sender::Sender(Config cfg) : cfg_(std::move(cfg)) {
    if (cfg_.message_bytes < 1)
        throw Error(Errc::bad_param, "sender needs message_bytes >= 1");
    if (cfg_.min_rate <= 0 || cfg_.max_rate < cfg_.min_rate)
        throw Error(Errc::bad_param, "sender rate bounds malformed");
    rate_.min_rate = cfg_.min_rate;
    rate_.max_rate = cfg_.max_rate;
    rate_.rate_bytes_per_s = std::clamp(cfg_.initial_rate, cfg_.min_rate, cfg_.max_rate);
}

std::vector<uint8_t> Sender::message_payload(uint64_t seed, uint64_t msg_index, size_t bytes) {
    SplitMix64 g(mix_seed(seed, msg_index));
    std::vector<uint8_t> out(bytes);
    for (auto& b : out)
        b = static_cast<uint8_t>(g.next());
    return out;
}

rlnc::PackPolicy Sender::pack_policy(uint64_t now_us) const {
    rlnc::PackPolicy policy;
    policy.q_threshold = cfg_.app.q_threshold;
    policy.condition_param = cfg_.app.wash_condition_pct;
    policy.deadline_us =
        cfg_.app.deadline_us > 0 ? static_cast<uint32_t>(now_us) + cfg_.app.deadline_us : 0;
    policy.tos = cfg_.app.tos;
    return policy;
}

std::vector<QualitativePacket> Sender::next_message(uint64_t now_us) {
    const uint64_t msg_index = messages_sent_++;
    auto data = message_payload(cfg_.seed, msg_index, cfg_.message_bytes);

    if (cfg_.app.coded) {
        const CodedParams& cp = *cfg_.app.coded;
        if (cp.k < 1 || cp.k_prime < cp.k || cp.h < 1)
            throw Error(Errc::bad_context, "coded params inconsistent");
        const uint16_t gid = static_cast<uint16_t>(msg_index);
        auto group = rlnc::make_group(gid, data, cp.k);
        auto [it, created] = groups_.try_emplace(
            gid, GroupState{rlnc::GroupEncoder(std::move(group),
                                               mix_seed(cfg_.seed, 0xC0DE0000ULL + msg_index)),
                            {}, 0, false, 0});
        if (!created)
            throw Error(Errc::bad_context, "coding group id wrapped while still active");
        GroupState& g = it->second;
        auto chunks = g.encoder.emit(cp.k_prime);
        auto packets = rlnc::pack_group(gid, cp.k, chunks, cp.h, pack_policy(now_us));
        for (auto& p : packets) {
            p.flow_id = cfg_.flow_id;
            p.seq = next_seq_++;
            g.outstanding.insert(p.seq);
            seq_to_group_[p.seq] = gid;
            seq_send_us_[p.seq] = now_us;
        }
        return packets;
    }

    AppContext ctx = cfg_.app;
    if (ctx.deadline_us > 0)
        ctx.deadline_us = static_cast<uint32_t>(now_us) + ctx.deadline_us;
    auto packets = packetize(data, ctx, cfg_.flow_id, next_seq_);
    next_seq_ += static_cast<uint32_t>(packets.size());
    if (cfg_.retransmit)
        for (const auto& p : packets)
            plain_pending_.emplace(p.seq, PlainPending{p, now_us, 1});
    return packets;
}

void Sender::note_rtt_sample(uint64_t sample_us) {
    const double s = static_cast<double>(sample_us);
    srtt_us_ = srtt_us_ == 0 ? s : 0.875 * srtt_us_ + 0.125 * s;
}

void Sender::apply_rate(const Ack& ack) {
    if (!cfg_.rate_adaptive)
        return;
    const double srtt_s = srtt_us_ > 0 ? srtt_us_ / 1e6 : 0.1;
    rate_.additive_step = static_cast<double>(cfg_.mtu_bytes) / srtt_s;
    rate_ = update_rate(rate_, ack);
}

std::vector<QualitativePacket> Sender::emit_repairs(GroupState& g, uint64_t now_us) {
    const CodedParams& cp = *cfg_.app.coded;
    if (g.delivered || g.best_dof >= cp.k || g.repair_rounds >= cfg_.max_repair_rounds)
        return {};
    const size_t missing =
        std::min(static_cast<size_t>(cp.k - g.best_dof), g.encoder.headroom());
    if (missing == 0)
        return {}; // coefficient space exhausted; the group is lost
    ++g.repair_rounds;
    auto chunks = g.encoder.emit(missing);
    repair_chunks_ += missing;
    auto packets =
        rlnc::pack_group(g.encoder.group().group_id, cp.k, chunks, cp.h, pack_policy(now_us));
    for (auto& p : packets) {
        p.flow_id = cfg_.flow_id;
        p.seq = next_seq_++;
        g.outstanding.insert(p.seq);
        seq_to_group_[p.seq] = g.encoder.group().group_id;
        seq_send_us_[p.seq] = now_us;
    }
    return packets;
}

Sender::Actions Sender::on_ack(const Ack& ack, uint64_t now_us) {
    if (ack.flow_id != cfg_.flow_id)
        throw Error(Errc::unknown_flow, "ack for flow " + std::to_string(ack.flow_id));

    Actions actions;
    if (cfg_.app.coded) {
        auto sg = seq_to_group_.find(ack.seq);
        if (sg != seq_to_group_.end()) {
            const uint16_t gid = sg->second;
            seq_to_group_.erase(sg);
            auto sent = seq_send_us_.find(ack.seq);
            if (sent != seq_send_us_.end()) {
                note_rtt_sample(now_us - sent->second);
                seq_send_us_.erase(sent);
            }
            auto git = groups_.find(gid);
            if (git != groups_.end()) {
                GroupState& g = git->second;
                g.outstanding.erase(ack.seq);
                g.best_dof = std::max(g.best_dof, ack.dof_received);
                if (ack.dof_received >= cfg_.app.coded->k) {
                    g.delivered = true;
                    groups_.erase(git);
                } else if (g.outstanding.empty()) {
                    actions.inject = emit_repairs(g, now_us);
                }
            }
        }
    } else {
        auto it = plain_pending_.find(ack.seq);
        if (it != plain_pending_.end()) {
            if (it->second.attempts == 1)
                note_rtt_sample(now_us - it->second.first_send_us);
            plain_pending_.erase(it);
        }
    }
    apply_rate(ack);
    actions.rate_changed = cfg_.rate_adaptive;
    return actions;
}

Sender::Actions Sender::on_timeout(uint32_t seq, uint64_t now_us) {
    Actions actions;
    if (cfg_.app.coded) {
        auto sg = seq_to_group_.find(seq);
        if (sg == seq_to_group_.end())
            return actions;
        const uint16_t gid = sg->second;
        seq_to_group_.erase(sg);
        seq_send_us_.erase(seq); // lost packet, no RTT sample from it
        Ack loss;
        loss.flow_id = cfg_.flow_id;
        loss.quality = 0.0;
        apply_rate(loss);
        actions.rate_changed = cfg_.rate_adaptive;
        auto git = groups_.find(gid);
        if (git != groups_.end()) {
            GroupState& g = git->second;
            g.outstanding.erase(seq);
            if (!g.delivered && g.outstanding.empty())
                actions.inject = emit_repairs(g, now_us);
        }
        return actions;
    }

    auto it = plain_pending_.find(seq);
    if (it == plain_pending_.end())
        return actions;
    Ack loss;
    loss.flow_id = cfg_.flow_id;
    loss.quality = 0.0;
    apply_rate(loss);
    actions.rate_changed = cfg_.rate_adaptive;
    if (it->second.attempts >= cfg_.max_attempts) {
        plain_pending_.erase(it); // give up on this packet
        return actions;
    }
    ++it->second.attempts;
    ++retransmissions_;
    actions.inject.push_back(it->second.pkt);
    return actions;
}

bool Sender::tracks(uint32_t seq) const {
    return plain_pending_.count(seq) > 0 || seq_to_group_.count(seq) > 0;
}

uint64_t Sender::rto_us() const {
    const uint64_t base =
        srtt_us_ > 0 ? static_cast<uint64_t>(3.0 * srtt_us_) : cfg_.rto_min_us;
    return std::clamp(base, cfg_.rto_min_us, cfg_.rto_max_us);
}

uint64_t Sender::send_interval_us() const {
    const double rate = std::max(rate_.rate_bytes_per_s, 1.0);
    const double us = static_cast<double>(cfg_.message_bytes) * 1e6 / rate;
    return std::max<uint64_t>(1, static_cast<uint64_t>(std::ceil(us)));
}

} // namespace qcs::endpoints
