#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "qcs/endpoints.hpp"
#include "qcs/node.hpp"

namespace qcs::sim {

struct NodeSpec {
    std::string id;
    bool is_host = false; // endpoints send/receive; non-hosts forward
    node::NodeMode mode = node::NodeMode::qualitative;
    size_t egress_capacity_bytes = 0; // forward nodes only
};

struct LinkSpec {
    std::string from;
    std::string to;
    double bandwidth_bytes_per_s = 0;
    uint64_t propagation_delay_us = 0;
};

// One unidirectional application flow. Acks ride a reliable reverse channel
// (sum of the route's propagation delays); only data packets queue.
struct FlowSpec {
    uint32_t flow_id = 0;
    std::string src;
    std::string dst;
    std::vector<std::string> route; // src, forwarding nodes..., dst
    endpoints::AppContext app;
    size_t message_bytes = 0;
    double initial_rate = 0; // bytes/s, app offered rate
    double min_rate = 0;
    double max_rate = 0;
    bool rate_adaptive = false;
    bool retransmit = false; // plain mode; coded flows repair instead
    uint64_t start_us = 0;
    uint64_t duration_us = 0; // sending window; the run drains afterwards
    uint64_t rto_min_us = 200000;
    uint64_t rto_max_us = 2000000;
    size_t mtu_bytes = 1500;
};

struct ScenarioConfig {
    std::string name;
    std::vector<NodeSpec> nodes;
    std::vector<LinkSpec> links;
    std::vector<FlowSpec> flows;
    uint64_t seed = 0;
    uint64_t horizon_us = 0; // 0 = run until the event queue drains
};

} // namespace qcs::sim
