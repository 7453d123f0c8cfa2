// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "netscope/workload.hpp"

#include <map>
#include <set>
#include <vector>

using namespace netscope;

namespace {

AppSpec spec_of(TrafficPattern pattern, uint32_t nodes, uint32_t iterations,
                Tick gap = 0)
{
    AppSpec s;
    s.app = "t";
    s.pattern = pattern;
    s.nodes = nodes;
    s.msg_size_flits = 4;
    s.compute_gap_ticks = gap;
    s.iterations = iterations;
    return s;
}

std::vector<NodeId> identity_placement(uint32_t n)
{
    std::vector<NodeId> p(n);
    for (uint32_t i = 0; i < n; ++i)
        p[i] = i;
    return p;
}

// topological check: every dependency index precedes its dependent
bool is_dag_in_schedule_order(const Trace& trace)
{
    for (size_t i = 0; i < trace.messages.size(); ++i)
        for (const uint64_t dep : trace.messages[i].deps)
            if (dep >= i)
                return false;
    return true;
}

} // namespace

TEST_CASE("pingpong: strictly alternating chained exchanges")
{
    const Trace trace = generate_trace(spec_of(TrafficPattern::pingpong, 2, 10000),
                                       identity_placement(2), 0);
    REQUIRE(trace.messages.size() == 20000);
    for (size_t i = 0; i < trace.messages.size(); ++i) {
        const auto& m = trace.messages[i];
        if (i % 2 == 0) {
            CHECK(m.src == 0);
            CHECK(m.dst == 1);
        } else {
            CHECK(m.src == 1);
            CHECK(m.dst == 0);
        }
        if (i == 0)
            CHECK(m.deps.empty());
        else {
            REQUIRE(m.deps.size() == 1);
            CHECK(m.deps[0] == i - 1); // each message waits on the previous one
        }
    }
}

TEST_CASE("all-to-all: N(N-1) messages per iteration, no intra-iteration deps")
{
    const Trace trace = generate_trace(spec_of(TrafficPattern::all_to_all, 4, 1),
                                       identity_placement(4), 0);
    CHECK(trace.messages.size() == 12);
    for (const auto& m : trace.messages)
        CHECK(m.deps.empty());

    // bulk senders never block on receives: later iterations are only offset
    // by the compute gap
    const Trace two = generate_trace(spec_of(TrafficPattern::all_to_all, 4, 2, 50),
                                     identity_placement(4), 0);
    CHECK(two.messages.size() == 24);
    for (size_t i = 0; i < 24; ++i) {
        CHECK(two.messages[i].deps.empty());
        CHECK(two.messages[i].gap_after_deps == (i < 12 ? 0 : 50));
    }
}

TEST_CASE("iterative neighbor: next iteration waits on last round's receive")
{
    const Trace trace = generate_trace(spec_of(TrafficPattern::iterative_neighbor, 4, 2),
                                       identity_placement(4), 0);
    REQUIRE(trace.messages.size() == 8);
    for (size_t i = 4; i < 8; ++i) {
        const auto& m = trace.messages[i];
        REQUIRE(m.deps.size() == 1);
        const auto& dep = trace.messages[m.deps[0]];
        CHECK(m.deps[0] < 4);
        CHECK(dep.dst == m.src); // the message this rank received last round
    }
    CHECK(is_dag_in_schedule_order(trace));
}

TEST_CASE("every pattern yields an acyclic dependency graph")
{
    for (const TrafficPattern p :
         {TrafficPattern::pingpong, TrafficPattern::iterative_neighbor,
          TrafficPattern::all_to_all, TrafficPattern::incast, TrafficPattern::broadcast}) {
        const uint32_t nodes = p == TrafficPattern::pingpong ? 2 : 5;
        const Trace trace = generate_trace(spec_of(p, nodes, 4), identity_placement(nodes), 1);
        CAPTURE(to_string(p));
        CHECK(is_dag_in_schedule_order(trace));
    }
}

TEST_CASE("schedules are deterministic in (spec, placement, seed)")
{
    AppSpec s = spec_of(TrafficPattern::iterative_neighbor, 4, 6, 50);
    s.gap_jitter = true;
    const Trace a = generate_trace(s, identity_placement(4), 9);
    const Trace b = generate_trace(s, identity_placement(4), 9);
    REQUIRE(a.messages.size() == b.messages.size());
    for (size_t i = 0; i < a.messages.size(); ++i) {
        CHECK(a.messages[i].gap_after_deps == b.messages[i].gap_after_deps);
        CHECK(a.messages[i].src == b.messages[i].src);
        CHECK(a.messages[i].deps == b.messages[i].deps);
    }
}

TEST_CASE("incast concentrates its flits on one destination")
{
    const Trace trace = generate_trace(spec_of(TrafficPattern::incast, 5, 3),
                                       identity_placement(5), 0);
    uint64_t total = 0;
    std::map<NodeId, uint64_t> per_dst;
    for (const auto& m : trace.messages) {
        total += m.size_flits;
        per_dst[m.dst] += m.size_flits;
    }
    REQUIRE(total > 0);
    // everything lands on rank 0's ejection link, well above the (N-1)/N bound
    CHECK(per_dst[0] == total);
    CHECK(double(per_dst[0]) / double(total) >= 4.0 / 5.0);
}

TEST_CASE("placement size must match the spec")
{
    CHECK_THROWS_AS(generate_trace(spec_of(TrafficPattern::all_to_all, 4, 1),
                                   identity_placement(3), 0),
                    std::invalid_argument);
    CHECK_THROWS_AS(generate_trace(spec_of(TrafficPattern::incast, 2, 1),
                                   identity_placement(2), 0),
                    std::invalid_argument);
}

TEST_CASE("pingpong RTTs subtract request issue from reply completion")
{
    const Trace trace = generate_trace(spec_of(TrafficPattern::pingpong, 2, 2),
                                       identity_placement(2), 0);
    std::vector<MessageTiming> timings(4);
    timings[0] = {0, 0, 3, 5};    // request 1
    timings[1] = {5, 5, 8, 10};   // reply 1
    timings[2] = {10, 12, 15, 17}; // request 2 (throttled by 2)
    timings[3] = {17, 17, 20, 22}; // reply 2

    const PingpongRtts rtts = pingpong_rtt(trace, timings);
    REQUIRE(rtts.per_exchange.size() == 2);
    CHECK(rtts.per_exchange[0] == doctest::Approx(10.0));
    CHECK(rtts.per_exchange[1] == doctest::Approx(10.0));
    CHECK(rtts.mean == doctest::Approx(10.0));

    const Trace wrong = generate_trace(spec_of(TrafficPattern::incast, 3, 1),
                                       identity_placement(3), 0);
    CHECK_THROWS_AS(pingpong_rtt(wrong, timings), std::invalid_argument);
}

TEST_CASE("synthetic sensitive app carries its runtime law")
{
    const SyntheticApp app = synthetic_sensitive_app(1.3, 500.0);
    CHECK(app.spec.pattern == TrafficPattern::iterative_neighbor);
    REQUIRE(app.spec.planted_c.has_value());
    CHECK(*app.spec.planted_c == 1.3);
    CHECK(app.runtime_for(10.0) == doctest::Approx(500.0 + 13.0));

    const SyntheticApp flat = synthetic_sensitive_app(0.0, 500.0);
    CHECK(flat.runtime_for(5.0) == flat.runtime_for(50.0)); // congestion-independent

    CHECK_THROWS_AS(synthetic_sensitive_app(-1.0, 0.0), std::invalid_argument);
}

TEST_CASE("pattern names round-trip")
{
    for (const TrafficPattern p :
         {TrafficPattern::pingpong, TrafficPattern::iterative_neighbor,
          TrafficPattern::all_to_all, TrafficPattern::incast, TrafficPattern::broadcast})
        CHECK(traffic_pattern_from_string(to_string(p)) == p);
    CHECK_THROWS_AS(traffic_pattern_from_string("zigzag"), std::invalid_argument);
}
