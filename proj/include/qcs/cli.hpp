#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qcs/sim.hpp"

namespace qcs::cli {

// One simulator invocation. Presets that compare configurations expand to
// several runs sharing a report.
struct RunSpec {
    std::string label;
    sim::ScenarioConfig scenario;
};

std::vector<std::string> preset_names();
bool is_preset(const std::string& name);

// Throws Errc::bad_scenario for unknown names.
std::vector<RunSpec> load_preset(const std::string& name);

// JSON schema (all byte rates are bytes/second, all times microseconds):
//   {"name": str, "seed": int, "horizon_us": int,
//    "nodes": [{"id": str, "host": bool, "mode": "qualitative"|"legacy-droptail",
//               "capacity_bytes": int}],
//    "links": [{"from": str, "to": str, "bandwidth_bytes_per_s": num,
//               "propagation_delay_us": int}],
//    "flows": [{"flow_id": int, "src": str, "dst": str, "route": [str...],
//               "message_bytes": int, "rate_bytes_per_s": num,
//               "min_rate_bytes_per_s": num, "max_rate_bytes_per_s": num,
//               "rate_adaptive": bool, "retransmit": bool,
//               "start_us": int, "duration_us": int, "rto_min_us": int,
//               "rto_max_us": int, "mtu_bytes": int,
//               "app": {"q_function": "priority"|"binary"|"step"|"coded-random",
//                       "q_threshold": int, "wash_condition_pct": int,
//                       "deadline_us": int, "tos": int,
//                       "chunks": [[length, sig]...],            // plain
//                       "coded": {"k": int, "k_prime": int, "h": int}}}]}
// Parse or validation problems throw Errc::bad_scenario.
sim::ScenarioConfig parse_scenario_json(const std::string& text,
                                        const std::string& origin = "scenario");
sim::ScenarioConfig load_scenario_file(const std::string& path);

// Preset name or path to a scenario file.
std::vector<RunSpec> load_runs(const std::string& preset_or_path);

struct ExecuteOptions {
    std::optional<uint64_t> seed; // overrides every scenario's seed
    std::string out_dir;          // empty: nothing written to disk
    bool trace = false;           // write trace-<label>.ndjson per run
};

struct ExecuteResult {
    std::vector<std::string> labels;
    std::vector<sim::RunResult> runs;
    std::string summary;     // contents of summary.txt
    std::string metrics_csv; // contents of metrics.csv
};

// Runs every spec (independent runs fan out across threads), renders the
// report, and writes summary.txt / metrics.csv / traces under out_dir.
ExecuteResult execute(const std::vector<RunSpec>& runs, const ExecuteOptions& opt);

// Report pieces, exposed for tests and for the CLI.
std::string metrics_csv(const std::vector<std::string>& labels,
                        const std::vector<sim::RunResult>& runs);
std::string summary_text(const std::vector<std::string>& labels,
                         const std::vector<sim::RunResult>& runs);

// Chunk-metadata cost for 1..levels chunks at the given MTU, both the
// idealized 4-bytes-per-chunk model and this codec's real layout.
std::string overhead_table(size_t levels, size_t mtu);

} // namespace qcs::cli
