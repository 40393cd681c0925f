#include "qcs/cli.hpp"

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "qcs/errors.hpp"
#include "qcs/wire.hpp"

namespace qcs::cli {
namespace {

using nlohmann::json;

QFunction parse_qfunction(const std::string& s) {
    if (s == "priority")
        return QFunction::priority_order;
    if (s == "binary")
        return QFunction::binary;
    if (s == "step")
        return QFunction::step;
    if (s == "coded-random")
        return QFunction::coded_random;
    throw Error(Errc::bad_scenario, "unknown q_function: " + s);
}

node::NodeMode parse_mode(const std::string& s) {
    if (s == "qualitative")
        return node::NodeMode::qualitative;
    if (s == "legacy-droptail")
        return node::NodeMode::legacy_droptail;
    throw Error(Errc::bad_scenario, "unknown node mode: " + s);
}

// Worked example: a 500-byte message coded as k=5 chunks plus one spare,
// packed three chunks to a packet, squeezed through a queue that can hold
// one packet and a bit. The second packet loses one chunk to a wash and the
// receiver still decodes from the five survivors.
sim::ScenarioConfig fig2_coding() {
    sim::ScenarioConfig sc;
    sc.name = "fig2-coding";
    sc.seed = 1;

    sc.nodes.push_back({"s", true, node::NodeMode::qualitative, 0});
    sc.nodes.push_back({"n1", false, node::NodeMode::qualitative, 700});
    sc.nodes.push_back({"r", true, node::NodeMode::qualitative, 0});

    sc.links.push_back({"s", "n1", 100e6, 10});
    sc.links.push_back({"n1", "r", 1e6, 10});

    sim::FlowSpec f;
    f.flow_id = 1;
    f.src = "s";
    f.dst = "r";
    f.route = {"s", "n1", "r"};
    f.message_bytes = 500;
    f.initial_rate = 500; // one message, then the window closes
    f.start_us = 0;
    f.duration_us = 1000;
    f.app.coded = endpoints::CodedParams{5, 6, 3};
    f.app.q_function = QFunction::coded_random;
    f.app.q_threshold = 1;
    f.app.wash_condition_pct = 50;
    sc.flows.push_back(std::move(f));
    return sc;
}

// A 6-tile frame, one tile in the current field of view (protected), five
// speculative ones (droppable). A priming flow parks enough traffic at the
// bottleneck that every frame arrives into a nearly full queue and gets
// washed down to the protected tile: delivered bytes settle at 1/6 of
// offered.
sim::ScenarioConfig fov_tiles() {
    sim::ScenarioConfig sc;
    sc.name = "fov-tiles";
    sc.seed = 1;

    sc.nodes.push_back({"sf", true, node::NodeMode::qualitative, 0});
    sc.nodes.push_back({"sp", true, node::NodeMode::qualitative, 0});
    sc.nodes.push_back({"n1", false, node::NodeMode::qualitative, 4000});
    sc.nodes.push_back({"r", true, node::NodeMode::qualitative, 0});

    sc.links.push_back({"sf", "n1", 100e6, 10});
    sc.links.push_back({"sp", "n1", 100e6, 10});
    sc.links.push_back({"n1", "r", 13200, 100});

    sim::FlowSpec fov;
    fov.flow_id = 1;
    fov.src = "sf";
    fov.dst = "r";
    fov.route = {"sf", "n1", "r"};
    fov.message_bytes = 1200;
    fov.initial_rate = 60000;
    fov.start_us = 20500;
    fov.duration_us = 3000000;
    fov.app.q_function = QFunction::binary;
    fov.app.q_threshold = 1;
    fov.app.wash_condition_pct = 50;
    fov.app.chunking = {{200, 1}, {200, 0}, {200, 0}, {200, 0}, {200, 0}, {200, 0}};
    sc.flows.push_back(std::move(fov));

    sim::FlowSpec prime;
    prime.flow_id = 2;
    prime.src = "sp";
    prime.dst = "r";
    prime.route = {"sp", "n1", "r"};
    prime.message_bytes = 240;
    prime.initial_rate = 180000;
    prime.start_us = 0;
    prime.duration_us = 20000;
    prime.app.q_function = QFunction::binary;
    prime.app.q_threshold = 1;
    prime.app.wash_condition_pct = 50;
    prime.app.chunking = {{240, 1}};
    sc.flows.push_back(std::move(prime));
    return sc;
}

// A measured flow shares a 1 MB/s bottleneck with periodic background bursts
// that push the total offered wire load to 150%. Both runs see the identical
// burst schedule and differ in the recovery style: drop-tail with whole-packet
// retransmissions versus washing with coded redundancy.
//
// Burst arithmetic: the measured flow's coded packets cost 3049 B on the wire
// per 2000 B message, so 250 KB/s of application rate is 381 KB/s of wire
// load; each burst adds 1.09 MB/s of 2048-B packets (1.116 MB/s on the wire),
// totalling 1.497 MB/s against the 1 MB/s bottleneck while a burst is active.
// Three quarters of every burst packet is low-significance filler, so a
// washing node can shed the overload from the bursts themselves; a drop-tail
// node can only throw whole packets away.
std::pair<sim::ScenarioConfig, sim::ScenarioConfig> legacy_vs_wash() {
    sim::ScenarioConfig base;
    base.seed = 1;

    base.nodes.push_back({"s", true, node::NodeMode::qualitative, 0});
    base.nodes.push_back({"b", true, node::NodeMode::qualitative, 0});
    base.nodes.push_back({"n1", false, node::NodeMode::qualitative, 49152});
    base.nodes.push_back({"r", true, node::NodeMode::qualitative, 0});

    base.links.push_back({"s", "n1", 10e6, 10000});
    base.links.push_back({"b", "n1", 10e6, 10000});
    base.links.push_back({"n1", "r", 1e6, 30000});

    sim::FlowSpec f;
    f.flow_id = 1;
    f.src = "s";
    f.dst = "r";
    f.route = {"s", "n1", "r"};
    f.message_bytes = 2000;
    f.initial_rate = 250e3;
    f.min_rate = 50e3;
    f.max_rate = 250e3;
    f.rate_adaptive = true;
    f.start_us = 0;
    f.duration_us = 3000000;

    sim::FlowSpec burst;
    burst.src = "b";
    burst.dst = "r";
    burst.route = {"b", "n1", "r"};
    burst.message_bytes = 2000;
    burst.initial_rate = 1.09e6;
    burst.min_rate = 1.09e6;
    burst.max_rate = 1.09e6;
    burst.rate_adaptive = false;
    burst.retransmit = false;
    burst.duration_us = 400000;
    burst.app.q_function = QFunction::binary;
    burst.app.q_threshold = 1;
    burst.app.wash_condition_pct = 50;
    burst.app.chunking = {{500, 1}, {500, 0}, {500, 0}, {500, 0}};
    for (uint32_t i = 0; i < 3; ++i) {
        burst.flow_id = 2 + i;
        burst.start_us = 400000 + i * 1000000;
        base.flows.push_back(burst);
    }

    sim::ScenarioConfig legacy = base;
    legacy.name = "legacy-vs-wash/legacy";
    legacy.nodes[2].mode = node::NodeMode::legacy_droptail;
    {
        sim::FlowSpec lf = f;
        lf.retransmit = true;
        lf.app.q_function = QFunction::binary;
        lf.app.q_threshold = 1;
        lf.app.chunking = {{2000, 1}};
        legacy.flows.insert(legacy.flows.begin(), std::move(lf));
    }

    sim::ScenarioConfig wash = base;
    wash.name = "legacy-vs-wash/qualitative";
    {
        sim::FlowSpec qf = f;
        qf.retransmit = false;
        qf.app.coded = endpoints::CodedParams{2, 3, 3};
        qf.app.q_function = QFunction::coded_random;
        qf.app.q_threshold = 1;
        qf.app.wash_condition_pct = 50;
        wash.flows.insert(wash.flows.begin(), std::move(qf));
    }
    return {std::move(legacy), std::move(wash)};
}

sim::ScenarioConfig parse_scenario(const json& j, const std::string& origin) {
    sim::ScenarioConfig sc;
    sc.name = j.value("name", origin);
    sc.seed = j.value("seed", uint64_t{1});
    sc.horizon_us = j.value("horizon_us", uint64_t{0});

    for (const auto& jn : j.at("nodes")) {
        sim::NodeSpec n;
        n.id = jn.at("id").get<std::string>();
        n.is_host = jn.value("host", false);
        n.mode = parse_mode(jn.value("mode", "qualitative"));
        n.egress_capacity_bytes = jn.value("capacity_bytes", size_t{0});
        sc.nodes.push_back(std::move(n));
    }
    for (const auto& jl : j.at("links")) {
        sim::LinkSpec l;
        l.from = jl.at("from").get<std::string>();
        l.to = jl.at("to").get<std::string>();
        l.bandwidth_bytes_per_s = jl.at("bandwidth_bytes_per_s").get<double>();
        l.propagation_delay_us = jl.value("propagation_delay_us", uint64_t{0});
        sc.links.push_back(std::move(l));
    }
    for (const auto& jf : j.at("flows")) {
        sim::FlowSpec f;
        f.flow_id = jf.at("flow_id").get<uint32_t>();
        f.src = jf.at("src").get<std::string>();
        f.dst = jf.at("dst").get<std::string>();
        for (const auto& hop : jf.at("route"))
            f.route.push_back(hop.get<std::string>());
        f.message_bytes = jf.at("message_bytes").get<size_t>();
        f.initial_rate = jf.at("rate_bytes_per_s").get<double>();
        f.min_rate = jf.value("min_rate_bytes_per_s", 0.0);
        f.max_rate = jf.value("max_rate_bytes_per_s", 0.0);
        f.rate_adaptive = jf.value("rate_adaptive", false);
        f.retransmit = jf.value("retransmit", false);
        f.start_us = jf.value("start_us", uint64_t{0});
        f.duration_us = jf.at("duration_us").get<uint64_t>();
        f.rto_min_us = jf.value("rto_min_us", uint64_t{200000});
        f.rto_max_us = jf.value("rto_max_us", uint64_t{2000000});
        f.mtu_bytes = jf.value("mtu_bytes", size_t{1500});

        const json& ja = jf.at("app");
        f.app.q_function = parse_qfunction(ja.value("q_function", "priority"));
        f.app.q_threshold = ja.value("q_threshold", uint16_t{1});
        f.app.wash_condition_pct = ja.value("wash_condition_pct", uint8_t{90});
        f.app.deadline_us = ja.value("deadline_us", uint32_t{0});
        f.app.tos = ja.value("tos", uint8_t{0});
        if (ja.contains("coded")) {
            const json& jc = ja.at("coded");
            endpoints::CodedParams cp;
            cp.k = jc.at("k").get<uint8_t>();
            cp.k_prime = jc.at("k_prime").get<uint16_t>();
            cp.h = jc.at("h").get<uint16_t>();
            f.app.coded = cp;
        } else {
            for (const auto& jc : ja.at("chunks"))
                f.app.chunking.emplace_back(jc.at(0).get<uint16_t>(), jc.at(1).get<uint8_t>());
        }
        sc.flows.push_back(std::move(f));
    }
    return sc;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(Errc::bad_scenario, "cannot write " + path.string());
    out << content;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

} // namespace

std::vector<std::string> preset_names() {
    return {"fig2-coding", "fov-tiles", "legacy-vs-wash"};
}

bool is_preset(const std::string& name) {
    for (const auto& n : preset_names())
        if (n == name)
            return true;
    return false;
}

std::vector<RunSpec> load_preset(const std::string& name) {
    if (name == "fig2-coding")
        return {{"main", fig2_coding()}};
    if (name == "fov-tiles")
        return {{"main", fov_tiles()}};
    if (name == "legacy-vs-wash") {
        auto [legacy, wash] = legacy_vs_wash();
        return {{"legacy", std::move(legacy)}, {"qualitative", std::move(wash)}};
    }
    throw Error(Errc::bad_scenario, "unknown preset: " + name);
}

sim::ScenarioConfig parse_scenario_json(const std::string& text, const std::string& origin) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(Errc::bad_scenario, origin + ": " + e.what());
    }
    try {
        sim::ScenarioConfig sc = parse_scenario(j, origin);
        sim::validate_scenario(sc);
        return sc;
    } catch (const json::exception& e) {
        throw Error(Errc::bad_scenario, origin + ": " + e.what());
    }
}

sim::ScenarioConfig load_scenario_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(Errc::bad_scenario, "cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario_json(buf.str(), path);
}

std::vector<RunSpec> load_runs(const std::string& preset_or_path) {
    if (is_preset(preset_or_path))
        return load_preset(preset_or_path);
    return {{"main", load_scenario_file(preset_or_path)}};
}

std::string metrics_csv(const std::vector<std::string>& labels,
                        const std::vector<sim::RunResult>& runs) {
    std::string out = "run,flow,messages_sent,messages_delivered,bytes_offered,bytes_delivered,"
                      "goodput_bytes_per_s,mean_latency_us,p50_latency_us,p99_latency_us,"
                      "mean_quality,packets_sent,packets_delivered,packets_washed,"
                      "packets_dropped,retransmissions,repair_chunks,wire_payload_offered,"
                      "wire_payload_delivered,wire_payload_washed,wire_payload_dropped,"
                      "wire_payload_inflight\n";
    for (size_t i = 0; i < runs.size(); ++i) {
        for (const auto& m : runs[i].flows) {
            out += labels[i];
            out += ',' + std::to_string(m.flow_id);
            out += ',' + std::to_string(m.messages_sent);
            out += ',' + std::to_string(m.messages_delivered);
            out += ',' + std::to_string(m.bytes_offered);
            out += ',' + std::to_string(m.bytes_delivered);
            out += ',' + format_double(m.goodput_bytes_per_s);
            out += ',' + format_double(m.mean_latency_us);
            out += ',' + std::to_string(m.p50_latency_us);
            out += ',' + std::to_string(m.p99_latency_us);
            out += ',' + format_double(m.mean_quality);
            out += ',' + std::to_string(m.packets_sent);
            out += ',' + std::to_string(m.packets_delivered);
            out += ',' + std::to_string(m.packets_washed);
            out += ',' + std::to_string(m.packets_dropped);
            out += ',' + std::to_string(m.retransmissions);
            out += ',' + std::to_string(m.repair_chunks);
            out += ',' + std::to_string(m.wire_payload_offered);
            out += ',' + std::to_string(m.wire_payload_delivered);
            out += ',' + std::to_string(m.wire_payload_washed);
            out += ',' + std::to_string(m.wire_payload_dropped);
            out += ',' + std::to_string(m.wire_payload_inflight);
            out += '\n';
        }
    }
    return out;
}

std::string summary_text(const std::vector<std::string>& labels,
                         const std::vector<sim::RunResult>& runs) {
    std::ostringstream out;
    char buf[256];
    for (size_t i = 0; i < runs.size(); ++i) {
        const auto& r = runs[i];
        out << "run " << labels[i] << ": scenario " << r.scenario << ", seed " << r.seed
            << ", sim_end_us " << r.sim_end_us << ", events " << r.events_processed << "\n";
        for (const auto& m : r.flows) {
            const double pct = m.bytes_offered
                                   ? 100.0 * static_cast<double>(m.bytes_delivered) /
                                         static_cast<double>(m.bytes_offered)
                                   : 0.0;
            std::snprintf(buf, sizeof buf,
                          "  flow %u: offered %llu B, delivered %llu B (%.1f%%), goodput %.1f "
                          "B/s\n",
                          m.flow_id, static_cast<unsigned long long>(m.bytes_offered),
                          static_cast<unsigned long long>(m.bytes_delivered), pct,
                          m.goodput_bytes_per_s);
            out << buf;
            std::snprintf(buf, sizeof buf,
                          "    latency us mean/p50/p99: %.1f/%llu/%llu, mean quality %.3f\n",
                          m.mean_latency_us, static_cast<unsigned long long>(m.p50_latency_us),
                          static_cast<unsigned long long>(m.p99_latency_us), m.mean_quality);
            out << buf;
            std::snprintf(buf, sizeof buf,
                          "    packets sent/delivered/washed/dropped: %llu/%llu/%llu/%llu, "
                          "retransmissions %llu, repair chunks %llu\n",
                          static_cast<unsigned long long>(m.packets_sent),
                          static_cast<unsigned long long>(m.packets_delivered),
                          static_cast<unsigned long long>(m.packets_washed),
                          static_cast<unsigned long long>(m.packets_dropped),
                          static_cast<unsigned long long>(m.retransmissions),
                          static_cast<unsigned long long>(m.repair_chunks));
            out << buf;
        }
    }
    if (runs.size() == 2 && !runs[0].flows.empty() && !runs[1].flows.empty()) {
        const auto& a = runs[0].flows[0];
        const auto& b = runs[1].flows[0];
        out << "comparison (flow " << a.flow_id << "):\n";
        std::snprintf(buf, sizeof buf, "  %-24s %14s %14s\n", "metric", labels[0].c_str(),
                      labels[1].c_str());
        out << buf;
        auto row_u = [&](const char* name, uint64_t x, uint64_t y) {
            std::snprintf(buf, sizeof buf, "  %-24s %14llu %14llu\n", name,
                          static_cast<unsigned long long>(x), static_cast<unsigned long long>(y));
            out << buf;
        };
        auto row_d = [&](const char* name, double x, double y) {
            std::snprintf(buf, sizeof buf, "  %-24s %14.1f %14.1f\n", name, x, y);
            out << buf;
        };
        row_u("bytes_delivered", a.bytes_delivered, b.bytes_delivered);
        row_d("goodput_bytes_per_s", a.goodput_bytes_per_s, b.goodput_bytes_per_s);
        row_d("mean_latency_us", a.mean_latency_us, b.mean_latency_us);
        row_u("p99_latency_us", a.p99_latency_us, b.p99_latency_us);
        row_u("retransmissions", a.retransmissions, b.retransmissions);
        row_u("repair_chunks", a.repair_chunks, b.repair_chunks);
        row_u("packets_washed", a.packets_washed, b.packets_washed);
        row_u("packets_dropped", a.packets_dropped, b.packets_dropped);
    }
    return out.str();
}

ExecuteResult execute(const std::vector<RunSpec>& runs, const ExecuteOptions& opt) {
    ExecuteResult res;
    const size_t n = runs.size();
    res.labels.resize(n);
    res.runs.resize(n);
    std::vector<std::string> traces(n);
    std::vector<std::exception_ptr> errors(n);

    // Runs are independent simulator instances, safe to fan out.
#pragma omp parallel for schedule(dynamic) if (n > 1)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
        try {
            const RunSpec& rs = runs[static_cast<size_t>(i)];
            const uint64_t seed = opt.seed.value_or(rs.scenario.seed);
            res.labels[static_cast<size_t>(i)] = rs.label;
            if (opt.trace) {
                std::ostringstream os;
                res.runs[static_cast<size_t>(i)] = sim::run(rs.scenario, seed, &os);
                traces[static_cast<size_t>(i)] = os.str();
            } else {
                res.runs[static_cast<size_t>(i)] = sim::run(rs.scenario, seed, nullptr);
            }
        } catch (...) {
            errors[static_cast<size_t>(i)] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e)
            std::rethrow_exception(e);

    res.metrics_csv = metrics_csv(res.labels, res.runs);
    res.summary = summary_text(res.labels, res.runs);

    if (!opt.out_dir.empty()) {
        const std::filesystem::path dir(opt.out_dir);
        std::filesystem::create_directories(dir);
        write_file(dir / "summary.txt", res.summary);
        write_file(dir / "metrics.csv", res.metrics_csv);
        if (opt.trace)
            for (size_t i = 0; i < n; ++i)
                write_file(dir / ("trace-" + res.labels[i] + ".ndjson"), traces[i]);
    }
    return res;
}

std::string overhead_table(size_t levels, size_t mtu) {
    if (levels < 1)
        throw Error(Errc::bad_param, "need at least one chunk level");
    std::string out = "chunks  four-byte-descriptors  wire-layout\n";
    char buf[96];
    for (size_t c = 1; c <= levels; ++c) {
        const double ideal =
            100.0 * wire::header_overhead(c, mtu, wire::OverheadModel::four_byte_descriptors);
        const double actual =
            100.0 * wire::header_overhead(c, mtu, wire::OverheadModel::wire_layout);
        std::snprintf(buf, sizeof buf, "%6zu  %20.2f%%  %10.2f%%\n", c, ideal, actual);
        out += buf;
    }
    return out;
}

} // namespace qcs::cli
