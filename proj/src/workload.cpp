// SPDX-License-Identifier: Apache-2.0
#include "netscope/workload.hpp"

#include <random>
#include <stdexcept>

namespace netscope {

const char* to_string(TrafficPattern pattern)
{
    switch (pattern) {
    case TrafficPattern::pingpong: return "pingpong";
    case TrafficPattern::iterative_neighbor: return "iterative-neighbor";
    case TrafficPattern::all_to_all: return "all-to-all";
    case TrafficPattern::incast: return "incast";
    case TrafficPattern::broadcast: return "broadcast";
    }
    return "?";
}

TrafficPattern traffic_pattern_from_string(const std::string& name)
{
    if (name == "pingpong")
        return TrafficPattern::pingpong;
    if (name == "iterative-neighbor")
        return TrafficPattern::iterative_neighbor;
    if (name == "all-to-all")
        return TrafficPattern::all_to_all;
    if (name == "incast")
        return TrafficPattern::incast;
    if (name == "broadcast")
        return TrafficPattern::broadcast;
    throw std::invalid_argument("unknown traffic pattern '" + name + "'");
}

namespace {

void check_spec(const AppSpec& spec, const std::vector<NodeId>& placement)
{
    if (placement.size() != spec.nodes)
        throw std::invalid_argument("generate_trace: placement size " +
                                    std::to_string(placement.size()) + " != spec nodes " +
                                    std::to_string(spec.nodes));
    const uint32_t min_nodes = spec.pattern == TrafficPattern::incast ? 3 : 2;
    if (spec.nodes < min_nodes)
        throw std::invalid_argument("generate_trace: pattern needs at least " +
                                    std::to_string(min_nodes) + " nodes");
    if (spec.pattern == TrafficPattern::pingpong && spec.nodes != 2)
        throw std::invalid_argument("generate_trace: pingpong runs on exactly 2 nodes");
    if (spec.iterations == 0)
        throw std::invalid_argument("generate_trace: iterations must be >= 1");
    if (spec.msg_size_flits == 0)
        throw std::invalid_argument("generate_trace: message size must be >= 1 flit");
}

} // namespace

Trace generate_trace(const AppSpec& spec, const std::vector<NodeId>& placement, uint64_t seed)
{
    check_spec(spec, placement);

    Trace trace;
    trace.app = spec.app;
    trace.pattern = spec.pattern;

    std::mt19937_64 rng(seed);
    auto gap = [&](Tick base) -> Tick {
        if (!spec.gap_jitter || base == 0)
            return base;
        std::uniform_int_distribution<Tick> jitter(base / 2, base + base / 2);
        return jitter(rng);
    };
    auto push = [&](uint32_t src_rank, uint32_t dst_rank, std::vector<uint64_t> deps,
                    Tick gap_after) {
        TraceMessage m;
        m.src = placement[src_rank];
        m.dst = placement[dst_rank];
        m.size_flits = spec.msg_size_flits;
        m.deps = std::move(deps);
        m.gap_after_deps = gap_after;
        trace.messages.push_back(std::move(m));
    };

    const uint32_t n = spec.nodes;
    switch (spec.pattern) {
    case TrafficPattern::pingpong:
        for (uint32_t it = 0; it < spec.iterations; ++it) {
            const uint64_t base = uint64_t(it) * 2;
            push(0, 1, it == 0 ? std::vector<uint64_t>{} : std::vector<uint64_t>{base - 1},
                 gap(spec.compute_gap_ticks));
            push(1, 0, {base}, 0); // reply immediately follows the request
        }
        break;

    case TrafficPattern::iterative_neighbor:
        // blocking ring: the next send waits on the message received last round
        for (uint32_t it = 0; it < spec.iterations; ++it) {
            for (uint32_t r = 0; r < n; ++r) {
                std::vector<uint64_t> deps;
                if (it > 0)
                    deps.push_back(uint64_t(it - 1) * n + (r + n - 1) % n);
                push(r, (r + 1) % n, std::move(deps), gap(spec.compute_gap_ticks));
            }
        }
        break;

    // bandwidth-intensive patterns send unacknowledged bulk: no dependencies,
    // each iteration offset by the compute gap (a zero gap is a pure flood;
    // per-node send serialization in the runner paces the rest)
    case TrafficPattern::all_to_all:
        for (uint32_t it = 0; it < spec.iterations; ++it)
            for (uint32_t src = 0; src < n; ++src)
                for (uint32_t dst = 0; dst < n; ++dst) {
                    if (src == dst)
                        continue;
                    push(src, dst, {}, Tick(it) * gap(spec.compute_gap_ticks));
                }
        break;

    case TrafficPattern::incast:
        for (uint32_t it = 0; it < spec.iterations; ++it)
            for (uint32_t src = 1; src < n; ++src)
                push(src, 0, {}, Tick(it) * gap(spec.compute_gap_ticks));
        break;

    case TrafficPattern::broadcast:
        for (uint32_t it = 0; it < spec.iterations; ++it)
            for (uint32_t dst = 1; dst < n; ++dst)
                push(0, dst, {}, Tick(it) * gap(spec.compute_gap_ticks));
        break;
    }

    return trace;
}

PingpongRtts pingpong_rtt(const Trace& trace, const std::vector<MessageTiming>& timings)
{
    if (trace.pattern != TrafficPattern::pingpong)
        throw std::invalid_argument("pingpong_rtt: trace is not a pingpong schedule");
    if (timings.size() != trace.messages.size())
        throw std::invalid_argument("pingpong_rtt: timing count does not match trace");
    if (trace.messages.size() % 2 != 0)
        throw std::invalid_argument("pingpong_rtt: odd message count");

    PingpongRtts out;
    out.per_exchange.reserve(trace.messages.size() / 2);
    double total = 0.0;
    for (size_t i = 0; i + 1 < timings.size(); i += 2) {
        const double rtt =
            double(timings[i + 1].last_flit_tick) - double(timings[i].issue_tick);
        out.per_exchange.push_back(rtt);
        total += rtt;
    }
    out.mean = out.per_exchange.empty() ? 0.0 : total / double(out.per_exchange.size());
    return out;
}

SyntheticApp synthetic_sensitive_app(double planted_c, double planted_k, uint32_t nodes,
                                     uint32_t msg_size_flits, Tick compute_gap_ticks,
                                     uint32_t iterations)
{
    if (planted_c < 0.0)
        throw std::invalid_argument("synthetic_sensitive_app: planted sensitivity must be >= 0");
    SyntheticApp app;
    app.spec.app = "synthetic";
    app.spec.pattern = TrafficPattern::iterative_neighbor;
    app.spec.nodes = nodes;
    app.spec.msg_size_flits = msg_size_flits;
    app.spec.compute_gap_ticks = compute_gap_ticks;
    app.spec.iterations = iterations;
    app.spec.planted_c = planted_c;
    app.spec.planted_k = planted_k;
    app.planted_c = planted_c;
    app.planted_k = planted_k;
    return app;
}

} // namespace netscope
