// SPDX-License-Identifier: Apache-2.0
#ifndef NETSCOPE_WORKLOAD_HPP
#define NETSCOPE_WORKLOAD_HPP

#include "netscope/topology.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace netscope {

enum class TrafficPattern : uint8_t {
    pingpong,           // strictly alternating request/reply between two nodes
    iterative_neighbor, // blocking ring exchange, one message per node per iteration
    all_to_all,         // every ordered pair per iteration, no intra-iteration deps
    incast,             // everyone sends to rank 0 each iteration
    broadcast,          // rank 0 sends to everyone each iteration
};

const char* to_string(TrafficPattern pattern);
TrafficPattern traffic_pattern_from_string(const std::string& name);

struct AppSpec {
    std::string app;
    TrafficPattern pattern = TrafficPattern::pingpong;
    uint32_t nodes = 2;
    uint32_t msg_size_flits = 1;
    Tick compute_gap_ticks = 0; // think time between iterations
    uint32_t iterations = 1;
    std::optional<double> planted_c; // known delay sensitivity, for validation
    double planted_k = 0.0;          // runtime-law intercept when planted_c is set
    bool gap_jitter = false;         // +/- jitter on compute gaps (robustness runs)
};

/// One scheduled message. `deps` index earlier messages in the same trace; the
/// message becomes ready `gap_after_deps` ticks after its last dependency
/// completes (or after app start when it has none).
struct TraceMessage {
    NodeId src = 0;
    NodeId dst = 0;
    uint32_t size_flits = 1;
    std::vector<uint64_t> deps;
    Tick gap_after_deps = 0;
};

struct Trace {
    std::string app;
    TrafficPattern pattern = TrafficPattern::pingpong;
    std::vector<TraceMessage> messages;
};

/// Expands an AppSpec into a dependency-ordered message schedule on concrete
/// nodes. Deterministic in (spec, placement, seed); the seed only feeds the
/// optional gap jitter. Throws std::invalid_argument on placement mismatch.
Trace generate_trace(const AppSpec& spec, const std::vector<NodeId>& placement, uint64_t seed);

/// Completion times observed for a trace, indexed like trace.messages.
/// ready_tick is when dependencies allowed the send; issue_tick includes any
/// throttling delay added at the source.
struct MessageTiming {
    Tick ready_tick = 0;
    Tick issue_tick = 0;
    Tick first_flit_tick = 0;
    Tick last_flit_tick = 0;
};

struct PingpongRtts {
    std::vector<double> per_exchange;
    double mean = 0.0;
};

/// RTT_i = completion(reply_i) - issue(request_i). Throws on non-pingpong
/// traces or timing vectors of the wrong length.
PingpongRtts pingpong_rtt(const Trace& trace, const std::vector<MessageTiming>& timings);

/// A blocking iterative app plus the runtime law it is constructed to follow:
/// runtime = planted_k + planted_c * (mean per-message delay). Used to plant
/// ground truth for validating the sensitivity estimator.
struct SyntheticApp {
    AppSpec spec;
    double planted_c = 0.0;
    double planted_k = 0.0;

    double runtime_for(double mean_message_delay) const
    {
        return planted_k + planted_c * mean_message_delay;
    }
};

SyntheticApp synthetic_sensitive_app(double planted_c, double planted_k, uint32_t nodes = 4,
                                     uint32_t msg_size_flits = 4, Tick compute_gap_ticks = 40,
                                     uint32_t iterations = 60);

} // namespace netscope

#endif // NETSCOPE_WORKLOAD_HPP
