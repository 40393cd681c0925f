#include "qcs/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <ostream>
#include <set>
#include <utility>

#include "qcs/errors.hpp"
#include "qcs/rng.hpp"
#include "qcs/wire.hpp"

namespace qcs::sim {
namespace {

uint64_t serialization_us(size_t bytes, double bandwidth_bytes_per_s) {
    return static_cast<uint64_t>(
        std::ceil(static_cast<double>(bytes) * 1e6 / bandwidth_bytes_per_s));
}

struct TraceWriter {
    std::ostream* out = nullptr;

    void line(uint64_t t, const std::string& node, const char* action, uint32_t flow,
              uint32_t seq, size_t size, const char* outcome, double quality) {
        if (!out)
            return;
        char qbuf[32];
        std::snprintf(qbuf, sizeof qbuf, "%.6f", quality);
        std::string s;
        s.reserve(160);
        s += "{\"time_us\":";
        s += std::to_string(t);
        s += ",\"node\":\"";
        s += node;
        s += "\",\"action\":\"";
        s += action;
        s += "\",\"flow\":";
        s += std::to_string(flow);
        s += ",\"seq\":";
        s += std::to_string(seq);
        s += ",\"size\":";
        s += std::to_string(size);
        s += ",\"outcome\":\"";
        s += outcome;
        s += "\",\"quality\":";
        s += qbuf;
        s += "}\n";
        *out << s;
    }
};

class Engine {
public:
    Engine(const ScenarioConfig& sc, uint64_t seed, std::ostream* trace) : sc_(sc), seed_(seed) {
        trace_.out = trace;
    }

    RunResult run();

private:
    struct Event {
        uint64_t time = 0;
        uint64_t ordinal = 0;
        std::function<void()> fn;
    };
    struct EventAfter {
        bool operator()(const Event& a, const Event& b) const {
            return a.time != b.time ? a.time > b.time : a.ordinal > b.ordinal;
        }
    };

    struct NodeRt {
        const NodeSpec* spec = nullptr;
        std::unique_ptr<node::ForwardNode> fnode; // forwarding nodes only
        int out_link = -1;
    };

    struct LinkRt {
        const LinkSpec* spec = nullptr;
        size_t to_node = 0;
        node::ForwardNode* source_queue = nullptr; // set when `from` forwards
        std::deque<std::pair<QualitativePacket, size_t>> host_fifo; // host NIC
        bool busy = false;
    };

    struct FlowRt {
        const FlowSpec* spec = nullptr;
        endpoints::Sender sender;
        endpoints::Receiver receiver;
        size_t src_link = 0;
        uint64_t ack_delay_us = 0;
        std::map<std::string, size_t> route_pos;
        std::vector<uint64_t> residual_at; // per hop, lower bound to dst
        std::map<uint32_t, uint64_t> first_send_us;
        std::map<uint16_t, uint64_t> group_first_send_us;
        std::vector<double> quality_samples;
        uint64_t in_air_payload = 0;
        FlowMetrics m;
    };

    void schedule(uint64_t t, std::function<void()> fn) {
        if (t < now_)
            throw Error(Errc::invariant_violation, "event scheduled before its cause",
                        static_cast<int64_t>(t), static_cast<int64_t>(now_));
        heap_.push_back(Event{t, next_ordinal_++, std::move(fn)});
        std::push_heap(heap_.begin(), heap_.end(), EventAfter{});
    }

    FlowRt& flow_of(uint32_t flow_id) { return flows_[flow_index_.at(flow_id)]; }

    void on_node_event(const std::string& node_id, const node::NodeEvent& ev);
    void maybe_start(size_t li);
    void complete(size_t li);
    void arrive(size_t ni, QualitativePacket pkt);
    void ack_arrive(size_t fi, endpoints::Ack ack);
    void timeout(size_t fi, uint32_t seq);
    void app_send(size_t fi);
    void inject(size_t fi, std::vector<QualitativePacket> pkts);
    void finalize(RunResult& rr);

    const ScenarioConfig& sc_;
    uint64_t seed_;
    TraceWriter trace_;

    std::vector<NodeRt> nodes_;
    std::vector<LinkRt> links_;
    std::vector<FlowRt> flows_;
    std::map<std::string, size_t> node_index_;
    std::map<uint32_t, size_t> flow_index_;

    std::vector<Event> heap_;
    uint64_t next_ordinal_ = 0;
    uint64_t now_ = 0;
    uint64_t events_ = 0;
};

void Engine::on_node_event(const std::string& node_id, const node::NodeEvent& ev) {
    FlowRt& f = flow_of(ev.flow_id);
    switch (ev.kind) {
    case node::NodeEvent::Kind::enqueue:
        trace_.line(ev.time_us, node_id, "enqueue", ev.flow_id, ev.seq, ev.encoded_bytes, "ok",
                    ev.quality);
        break;
    case node::NodeEvent::Kind::wash:
        ++f.m.packets_washed;
        f.m.wire_payload_washed += ev.freed_bytes;
        trace_.line(ev.time_us, node_id, "wash", ev.flow_id, ev.seq, ev.encoded_bytes, "ok",
                    ev.quality);
        break;
    case node::NodeEvent::Kind::drop:
        ++f.m.packets_dropped;
        f.m.wire_payload_dropped += ev.payload_bytes;
        trace_.line(ev.time_us, node_id, "drop", ev.flow_id, ev.seq, ev.encoded_bytes,
                    node::to_string(ev.cause), ev.quality);
        break;
    case node::NodeEvent::Kind::dequeue:
        trace_.line(ev.time_us, node_id, "dequeue", ev.flow_id, ev.seq, ev.encoded_bytes, "ok",
                    ev.quality);
        break;
    }
}

void Engine::maybe_start(size_t li) {
    LinkRt& L = links_[li];
    if (L.busy)
        return;
    size_t bytes = 0;
    if (L.source_queue)
        bytes = L.source_queue->peek_encoded_size();
    else if (!L.host_fifo.empty())
        bytes = L.host_fifo.front().second;
    if (bytes == 0)
        return;
    L.busy = true;
    schedule(now_ + serialization_us(bytes, L.spec->bandwidth_bytes_per_s),
             [this, li] { complete(li); });
}

void Engine::complete(size_t li) {
    LinkRt& L = links_[li];
    QualitativePacket pkt;
    if (L.source_queue) {
        auto head = L.source_queue->dequeue(now_); // emits the dequeue event
        pkt = std::move(*head);
    } else {
        pkt = std::move(L.host_fifo.front().first);
        L.host_fifo.pop_front();
    }
    flow_of(pkt.flow_id).in_air_payload += pkt.payload.size();
    const size_t to = L.to_node;
    schedule(now_ + L.spec->propagation_delay_us,
             [this, to, p = std::move(pkt)]() mutable { arrive(to, std::move(p)); });
    L.busy = false;
    maybe_start(li);
}

void Engine::arrive(size_t ni, QualitativePacket pkt) {
    FlowRt& f = flow_of(pkt.flow_id);
    f.in_air_payload -= pkt.payload.size();
    NodeRt& N = nodes_[ni];

    if (N.spec->id == f.spec->dst) {
        ++f.m.packets_delivered;
        f.m.wire_payload_delivered += pkt.payload.size();
        const size_t enc = wire::encoded_size(pkt);
        const endpoints::Ack ack = f.receiver.receive(pkt, now_);
        f.quality_samples.push_back(ack.quality);
        trace_.line(now_, N.spec->id, "deliver", pkt.flow_id, pkt.seq, enc, "ok", ack.quality);
        const size_t fi = flow_index_.at(pkt.flow_id);
        schedule(now_ + f.ack_delay_us, [this, fi, ack] { ack_arrive(fi, ack); });
        return;
    }

    const size_t hop = f.route_pos.at(N.spec->id);
    const auto res = N.fnode->admit(pkt, now_, f.residual_at[hop]);
    if (res.kind != node::AdmitResult::Kind::dropped)
        maybe_start(static_cast<size_t>(N.out_link));
}

void Engine::ack_arrive(size_t fi, endpoints::Ack ack) {
    FlowRt& f = flows_[fi];
    trace_.line(now_, f.spec->src, "ack", ack.flow_id, ack.seq, 0, "ok", ack.quality);
    auto actions = f.sender.on_ack(ack, now_);
    inject(fi, std::move(actions.inject));
}

void Engine::timeout(size_t fi, uint32_t seq) {
    FlowRt& f = flows_[fi];
    if (!f.sender.tracks(seq))
        return; // acked (or given up) in the meantime
    trace_.line(now_, f.spec->src, "timeout", f.spec->flow_id, seq, 0, "rto", 0.0);
    auto actions = f.sender.on_timeout(seq, now_);
    inject(fi, std::move(actions.inject));
}

void Engine::app_send(size_t fi) {
    FlowRt& f = flows_[fi];
    const FlowSpec& s = *f.spec;
    if (now_ >= s.start_us + s.duration_us)
        return;
    auto pkts = f.sender.next_message(now_);
    ++f.m.messages_sent;
    f.m.bytes_offered += s.message_bytes;
    inject(fi, std::move(pkts));
    schedule(now_ + f.sender.send_interval_us(), [this, fi] { app_send(fi); });
}

void Engine::inject(size_t fi, std::vector<QualitativePacket> pkts) {
    FlowRt& f = flows_[fi];
    for (auto& pkt : pkts) {
        const size_t enc = wire::encoded_size(pkt);
        ++f.m.packets_sent;
        f.m.wire_payload_offered += pkt.payload.size();
        if (pkt.coded)
            f.group_first_send_us.emplace(pkt.group_id, now_);
        else
            f.first_send_us.emplace(pkt.seq, now_);
        trace_.line(now_, f.spec->src, "send", pkt.flow_id, pkt.seq, enc, "ok", 1.0);
        const uint32_t seq = pkt.seq;
        links_[f.src_link].host_fifo.emplace_back(std::move(pkt), enc);
        maybe_start(f.src_link);
        if (f.sender.tracks(seq))
            schedule(now_ + f.sender.rto_us(), [this, fi, seq] { timeout(fi, seq); });
    }
}

RunResult Engine::run() {
    validate_scenario(sc_);

    nodes_.reserve(sc_.nodes.size());
    for (size_t i = 0; i < sc_.nodes.size(); ++i) {
        const NodeSpec& ns = sc_.nodes[i];
        NodeRt rt;
        rt.spec = &ns;
        if (!ns.is_host) {
            node::NodeConfig cfg;
            cfg.node_id = ns.id;
            cfg.egress_capacity_bytes = ns.egress_capacity_bytes;
            cfg.mode = ns.mode;
            cfg.wash_seed = mix_seed(seed_, 0x40DE0000ULL + i);
            rt.fnode = std::make_unique<node::ForwardNode>(cfg);
            rt.fnode->set_event_sink(
                [this, id = ns.id](const node::NodeEvent& ev) { on_node_event(id, ev); });
        }
        node_index_[ns.id] = i;
        nodes_.push_back(std::move(rt));
    }

    std::map<std::pair<std::string, std::string>, size_t> link_index;
    links_.reserve(sc_.links.size());
    for (size_t i = 0; i < sc_.links.size(); ++i) {
        const LinkSpec& ls = sc_.links[i];
        LinkRt rt;
        rt.spec = &ls;
        rt.to_node = node_index_.at(ls.to);
        NodeRt& from = nodes_[node_index_.at(ls.from)];
        if (from.fnode) {
            rt.source_queue = from.fnode.get();
            from.out_link = static_cast<int>(i);
        }
        link_index[{ls.from, ls.to}] = i;
        links_.push_back(std::move(rt));
    }

    flows_.reserve(sc_.flows.size());
    for (size_t i = 0; i < sc_.flows.size(); ++i) {
        const FlowSpec& fs = sc_.flows[i];
        endpoints::Sender::Config cfg;
        cfg.flow_id = fs.flow_id;
        cfg.app = fs.app;
        cfg.message_bytes = fs.message_bytes;
        cfg.initial_rate = fs.initial_rate;
        cfg.min_rate = fs.min_rate > 0 ? fs.min_rate : fs.initial_rate;
        cfg.max_rate = fs.max_rate > 0 ? fs.max_rate : fs.initial_rate;
        cfg.rate_adaptive = fs.rate_adaptive;
        cfg.retransmit = fs.retransmit;
        cfg.seed = mix_seed(seed_, 0xF104AULL * 65537 + fs.flow_id);
        cfg.rto_min_us = fs.rto_min_us;
        cfg.rto_max_us = fs.rto_max_us;
        cfg.mtu_bytes = fs.mtu_bytes;

        FlowRt rt{&fs,
                  endpoints::Sender(std::move(cfg)),
                  endpoints::Receiver(fs.flow_id, fs.message_bytes, fs.app.coded),
                  0,
                  0,
                  {},
                  {},
                  {},
                  {},
                  {},
                  0,
                  {}};
        rt.m.flow_id = fs.flow_id;
        rt.src_link = link_index.at({fs.route[0], fs.route[1]});

        const size_t hops = fs.route.size();
        rt.residual_at.assign(hops, 0);
        for (size_t h = hops - 1; h-- > 0;) {
            const LinkSpec& ls = sc_.links[link_index.at({fs.route[h], fs.route[h + 1]})];
            rt.residual_at[h] =
                rt.residual_at[h + 1] + ls.propagation_delay_us +
                serialization_us(wire::kMinEncodedBytes, ls.bandwidth_bytes_per_s);
            rt.ack_delay_us += ls.propagation_delay_us;
        }
        for (size_t h = 0; h < hops; ++h)
            rt.route_pos[fs.route[h]] = h;

        flow_index_[fs.flow_id] = i;
        flows_.push_back(std::move(rt));
    }
    for (size_t i = 0; i < flows_.size(); ++i) {
        flows_[i].receiver.set_delivery_sink([this, i](const endpoints::Receiver::Delivery& d) {
            FlowRt& f = flows_[i];
            if (d.duplicate)
                return;
            ++f.m.messages_delivered;
            f.m.bytes_delivered += d.app_bytes;
            const auto sent = d.coded ? f.group_first_send_us.at(d.group_id)
                                      : f.first_send_us.at(d.seq);
            f.m.latency_samples_us.push_back(now_ - sent);
        });
    }

    for (size_t i = 0; i < flows_.size(); ++i)
        schedule(flows_[i].spec->start_us, [this, i] { app_send(i); });

    while (!heap_.empty()) {
        std::pop_heap(heap_.begin(), heap_.end(), EventAfter{});
        Event ev = std::move(heap_.back());
        heap_.pop_back();
        if (sc_.horizon_us > 0 && ev.time > sc_.horizon_us)
            break;
        now_ = ev.time;
        ev.fn();
        ++events_;
    }

    RunResult rr;
    finalize(rr);
    return rr;
}

void Engine::finalize(RunResult& rr) {
    rr.scenario = sc_.name;
    rr.seed = seed_;
    rr.sim_end_us = now_;
    rr.events_processed = events_;

    std::map<uint32_t, uint64_t> queued; // flow -> payload bytes still queued
    for (const auto& L : links_)
        for (const auto& [pkt, size] : L.host_fifo)
            queued[pkt.flow_id] += pkt.payload.size();
    for (const auto& N : nodes_)
        if (N.fnode)
            for (const auto& [flow, payload] : N.fnode->queued_payload())
                queued[flow] += payload;

    for (FlowRt& f : flows_) {
        FlowMetrics& m = f.m;
        m.retransmissions = f.sender.retransmissions();
        m.repair_chunks = f.sender.repair_chunks();
        m.wire_payload_inflight = f.in_air_payload + queued[m.flow_id];

        const uint64_t start = f.spec->start_us;
        if (now_ > start)
            m.goodput_bytes_per_s =
                static_cast<double>(m.bytes_delivered) * 1e6 / static_cast<double>(now_ - start);

        if (!m.latency_samples_us.empty()) {
            std::vector<uint64_t> sorted = m.latency_samples_us;
            std::sort(sorted.begin(), sorted.end());
            double sum = 0;
            for (uint64_t v : sorted)
                sum += static_cast<double>(v);
            m.mean_latency_us = sum / static_cast<double>(sorted.size());
            auto rank = [&sorted](double q) {
                const size_t n = sorted.size();
                size_t idx = static_cast<size_t>(std::ceil(q * static_cast<double>(n)));
                return sorted[idx == 0 ? 0 : idx - 1];
            };
            m.p50_latency_us = rank(0.50);
            m.p99_latency_us = rank(0.99);
        }
        if (!f.quality_samples.empty()) {
            double sum = 0;
            for (double v : f.quality_samples)
                sum += v;
            m.mean_quality = sum / static_cast<double>(f.quality_samples.size());
        }
        rr.flows.push_back(std::move(m));
    }
    std::sort(rr.flows.begin(), rr.flows.end(),
              [](const FlowMetrics& a, const FlowMetrics& b) { return a.flow_id < b.flow_id; });
}

} // namespace

void validate_scenario(const ScenarioConfig& sc) {
    auto fail = [](const std::string& msg) { throw Error(Errc::bad_scenario, msg); };

    if (sc.nodes.empty())
        fail("scenario has no nodes");
    std::map<std::string, const NodeSpec*> by_id;
    for (const auto& n : sc.nodes) {
        if (n.id.empty())
            fail("node with empty id");
        if (!by_id.emplace(n.id, &n).second)
            fail("duplicate node id: " + n.id);
    }

    std::set<std::pair<std::string, std::string>> seen;
    std::map<std::string, int> out_degree;
    for (const auto& l : sc.links) {
        if (!by_id.count(l.from))
            fail("link from unknown node: " + l.from);
        if (!by_id.count(l.to))
            fail("link to unknown node: " + l.to);
        if (l.from == l.to)
            fail("self link at " + l.from);
        if (!(l.bandwidth_bytes_per_s > 0))
            fail("link " + l.from + "->" + l.to + " needs positive bandwidth");
        if (!seen.emplace(l.from, l.to).second)
            fail("duplicate link " + l.from + "->" + l.to);
        ++out_degree[l.from];
    }

    if (sc.flows.empty())
        fail("scenario has no flows");
    std::set<uint32_t> flow_ids;
    for (const auto& f : sc.flows) {
        const std::string tag = "flow " + std::to_string(f.flow_id);
        if (!flow_ids.insert(f.flow_id).second)
            fail("duplicate " + tag);
        if (f.duration_us == 0)
            fail(tag + " needs a positive duration");
        if (f.message_bytes == 0)
            fail(tag + " needs a positive message size");
        if (!(f.initial_rate > 0))
            fail(tag + " needs a positive rate");
        auto src = by_id.find(f.src);
        auto dst = by_id.find(f.dst);
        if (src == by_id.end() || !src->second->is_host)
            fail(tag + " src must be a host node");
        if (dst == by_id.end() || !dst->second->is_host)
            fail(tag + " dst must be a host node");
        if (f.route.size() < 2 || f.route.front() != f.src || f.route.back() != f.dst)
            fail(tag + " route must run from src to dst");
        std::set<std::string> on_route;
        for (size_t h = 0; h < f.route.size(); ++h) {
            auto it = by_id.find(f.route[h]);
            if (it == by_id.end())
                fail(tag + " route visits unknown node " + f.route[h]);
            if (!on_route.insert(f.route[h]).second)
                fail(tag + " route revisits node " + f.route[h]);
            const bool endpoint = h == 0 || h + 1 == f.route.size();
            if (!endpoint) {
                if (it->second->is_host)
                    fail(tag + " routes through host " + f.route[h]);
                if (it->second->egress_capacity_bytes == 0)
                    fail("forward node " + f.route[h] + " needs egress capacity");
                if (out_degree[f.route[h]] != 1)
                    fail("forward node " + f.route[h] + " must have exactly one egress link");
            }
            if (h + 1 < f.route.size() && !seen.count({f.route[h], f.route[h + 1]}))
                fail(tag + " route needs link " + f.route[h] + "->" + f.route[h + 1]);
        }
    }
}

uint64_t residual_latency(const ScenarioConfig& sc, const std::string& node,
                          const std::string& dest, size_t min_packet_bytes) {
    if (node == dest)
        return 0;
    std::map<std::string, std::vector<std::pair<std::string, uint64_t>>> adj;
    for (const auto& l : sc.links)
        adj[l.from].emplace_back(
            l.to, l.propagation_delay_us +
                      serialization_us(min_packet_bytes, l.bandwidth_bytes_per_s));

    std::map<std::string, uint64_t> dist;
    std::set<std::pair<uint64_t, std::string>> frontier;
    dist[node] = 0;
    frontier.insert({0, node});
    while (!frontier.empty()) {
        auto [d, u] = *frontier.begin();
        frontier.erase(frontier.begin());
        if (u == dest)
            return d;
        for (const auto& [v, w] : adj[u]) {
            auto it = dist.find(v);
            if (it == dist.end() || d + w < it->second) {
                if (it != dist.end())
                    frontier.erase({it->second, v});
                dist[v] = d + w;
                frontier.insert({d + w, v});
            }
        }
    }
    throw Error(Errc::no_route, "no route " + node + " -> " + dest);
}

RunResult run(const ScenarioConfig& sc, uint64_t seed, std::ostream* trace) {
    Engine engine(sc, seed, trace);
    return engine.run();
}

} // namespace qcs::sim
