// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "netscope/netsim.hpp"
#include "netscope/topology.hpp"

#include <random>
#include <sstream>

using namespace netscope;

namespace {

SimConfig quick_config(Tick interval = 100, Tick horizon = 100000)
{
    SimConfig cfg;
    cfg.measurement_interval_ticks = interval;
    cfg.max_ticks = horizon;
    return cfg;
}

uint64_t send(Simulator& sim, const std::string& app, NodeId src, NodeId dst, uint32_t size,
              Tick issue)
{
    const PathSet paths = enumerate_paths(sim.topology(), src, dst);
    return sim.inject_message(make_message(app, src, dst, size, issue), paths);
}

std::string snapshot_bytes(std::vector<CounterSnapshot> snaps)
{
    std::stringstream buf;
    write_snapshots(buf, snaps);
    return buf.str();
}

} // namespace

TEST_CASE("message invariants are enforced at construction")
{
    CHECK_THROWS_AS(make_message("a", 0, 1, 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(make_message("a", 1, 1, 4, 0), std::invalid_argument);
}

TEST_CASE("single message on an idle network: D equals the link count of its path")
{
    // hop-sum oracle: every link adds one tick of transfer
    const Topology topo = build_dragonfly(1, 4, 2);
    Simulator sim(topo, quick_config());

    SUBCASE("same switch: 2 links")
    {
        send(sim, "a", 0, 1, 1, 0);
        sim.run_until(50);
        const auto records = sim.drain_delivery_records();
        REQUIRE(records.size() == 1);
        CHECK(records[0].path.size() == 2);
        CHECK(records[0].first_flit_tick - records[0].issue_tick == 2);
    }
    SUBCASE("cross switch: 3 links")
    {
        send(sim, "a", 0, 7, 1, 5);
        sim.run_until(50);
        const auto records = sim.drain_delivery_records();
        REQUIRE(records.size() == 1);
        CHECK(records[0].path.size() == 3);
        CHECK(records[0].first_flit_tick - records[0].issue_tick == 3);
    }
}

TEST_CASE("two messages on disjoint paths match their isolated latencies")
{
    const Topology topo = build_dragonfly(1, 4, 2);

    Simulator isolated(topo, quick_config());
    send(isolated, "a", 0, 2, 8, 0);
    isolated.run_until(100);
    const auto solo = isolated.drain_delivery_records();
    REQUIRE(solo.size() == 1);

    Simulator shared(topo, quick_config());
    send(shared, "a", 0, 2, 8, 0);
    send(shared, "b", 5, 7, 8, 0); // switches 2->3: disjoint from 0->1
    shared.run_until(100);
    const auto both = shared.drain_delivery_records();
    REQUIRE(both.size() == 2);
    for (const auto& r : both) {
        CHECK(r.first_flit_tick - r.issue_tick == solo[0].first_flit_tick - solo[0].issue_tick);
        CHECK(r.last_flit_tick - r.issue_tick == solo[0].last_flit_tick - solo[0].issue_tick);
    }
}

TEST_CASE("saturated link accrues stalls that match a hand two-queue simulation")
{
    // node0 feeds node1 through one switch; the injection link runs at twice
    // the ejection bandwidth, so the ejection buffer backs it up.
    Topology topo = build_dragonfly(1, 1, 2);
    const LinkId inj = topo.injection_link(0);
    const LinkId ej = topo.ejection_link(1);
    for (Link& l : topo.links) {
        l.buffer_capacity_flits = 4;
        l.bandwidth_flits_per_tick = 1;
    }
    topo.links[inj].bandwidth_flits_per_tick = 2;
    topo.links[topo.injection_link(1)].bandwidth_flits_per_tick = 2;

    const Tick horizon = 20;
    Simulator sim(topo, quick_config(horizon));
    send(sim, "a", 0, 1, 200, 0);
    sim.run_until(horizon);

    // independent oracle over the same two queues
    uint32_t inj_q = 0, ej_q = 0, remaining = 200;
    uint64_t stalls = 0, delivered = 0;
    for (Tick t = 0; t < horizon; ++t) {
        const uint32_t ej_budget = 4 - ej_q;
        const uint32_t inj_budget = 4 - inj_q;
        const uint32_t want = std::min<uint32_t>(2, inj_q);
        const uint32_t inj_moves = std::min(want, ej_budget);
        if (inj_q > 0 && inj_moves < want)
            ++stalls;
        const uint32_t ej_moves = std::min<uint32_t>(1, ej_q);
        delivered += ej_moves;
        ej_q = ej_q - ej_moves + inj_moves;
        const uint32_t admit = std::min({uint32_t(2), inj_budget, remaining});
        remaining -= admit;
        inj_q = inj_q - inj_moves + admit;
    }
    REQUIRE(stalls > 0);

    const auto snaps = sim.drain_snapshots();
    REQUIRE(snaps.size() == 1);
    const auto* inj_counters = snaps[0].find_link(inj);
    const auto* ej_counters = snaps[0].find_link(ej);
    REQUIRE(inj_counters);
    REQUIRE(ej_counters);
    CHECK(inj_counters->stall_ticks == stalls);
    CHECK(ej_counters->flits_forwarded == delivered);
    CHECK(percent_time_stalled(inj_counters->stall_ticks, horizon) > 0.0);
    CHECK(sim.flits_conserved());
}

TEST_CASE("idle network accrues no stalls")
{
    const Topology topo = build_dragonfly(1, 2, 1);
    Simulator sim(topo, quick_config(50, 1000));
    sim.run_until(200);
    for (const auto& snap : sim.drain_snapshots())
        for (const auto& lc : snap.per_link)
            CHECK(lc.stall_ticks == 0);
}

TEST_CASE("flit conservation holds during and after a run")
{
    const Topology topo = build_dragonfly(1, 4, 2);
    Simulator sim(topo, quick_config());
    std::mt19937_64 rng(3);
    for (int i = 0; i < 40; ++i) {
        const NodeId src = NodeId(rng() % topo.node_count());
        NodeId dst = NodeId(rng() % topo.node_count());
        if (src == dst)
            dst = (dst + 1) % topo.node_count();
        send(sim, "a", src, dst, 1 + uint32_t(rng() % 32), rng() % 20);
    }
    for (Tick t = 1; t <= 300; t += 7) {
        sim.run_until(t);
        CHECK(sim.flits_conserved());
    }
    sim.run_until(2000);
    const FlitAccounting acc = sim.flit_accounting();
    CHECK(acc.injected == acc.delivered); // everything drained by now
    CHECK(acc.in_link_queues == 0);
    CHECK(acc.source_queued == 0);
}

TEST_CASE("run_until boundaries and snapshot cadence")
{
    const Topology topo = build_dragonfly(1, 2, 1);
    Simulator sim(topo, quick_config(100, 1000));

    sim.run_until(0);
    CHECK(sim.now() == 0);
    CHECK(sim.drain_snapshots().empty());

    sim.run_until(100); // exactly one interval
    CHECK(sim.drain_snapshots().size() == 1);

    sim.run_until(350);
    CHECK(sim.drain_snapshots().size() == 2); // boundaries at 200, 300

    CHECK_THROWS_AS(sim.run_until(5000), std::invalid_argument);
}

TEST_CASE("identical seed and schedule give bit-identical snapshot streams")
{
    const Topology topo = build_dragonfly(1, 4, 2);
    auto run = [&]() {
        Simulator sim(topo, quick_config(50, 10000));
        std::mt19937_64 rng(17);
        for (int i = 0; i < 60; ++i) {
            const NodeId src = NodeId(rng() % topo.node_count());
            NodeId dst = NodeId(rng() % topo.node_count());
            if (src == dst)
                dst = (dst + 1) % topo.node_count();
            send(sim, "x", src, dst, 1 + uint32_t(rng() % 16), rng() % 200);
        }
        sim.run_until(1000);
        return snapshot_bytes(sim.drain_snapshots());
    };
    CHECK(run() == run());
}

TEST_CASE("drain returns completion-ordered records and clears them")
{
    const Topology topo = build_dragonfly(1, 2, 1);
    Simulator sim(topo, quick_config());
    CHECK(sim.drain_delivery_records().empty());

    // one pingpong exchange by hand: the reply is injected after the request lands
    send(sim, "pp", 0, 1, 4, 0);
    sim.run_until(40);
    auto first = sim.drain_delivery_records();
    REQUIRE(first.size() == 1);
    send(sim, "pp", 1, 0, 4, sim.now());
    sim.run_until(80);
    auto second = sim.drain_delivery_records();
    REQUIRE(second.size() == 1);
    CHECK(first[0].src == 0);
    CHECK(first[0].dst == 1);
    CHECK(second[0].src == 1);
    CHECK(second[0].dst == 0);
    CHECK(second[0].issue_tick >= first[0].last_flit_tick);
    CHECK(sim.drain_delivery_records().empty());

    // first-flit timestamps agree with the hop-sum oracle on the idle reverse path
    CHECK(second[0].first_flit_tick - second[0].issue_tick == second[0].path.size());
}

TEST_CASE("inject_message validates endpoints against the path set")
{
    const Topology topo = build_dragonfly(1, 2, 1);
    Simulator sim(topo, quick_config());
    const PathSet wrong = enumerate_paths(topo, 0, 1);
    CHECK_THROWS_AS(sim.inject_message(make_message("a", 1, 0, 1, 0), wrong),
                    std::invalid_argument);
    sim.run_until(10);
    CHECK_THROWS_AS(sim.inject_message(make_message("a", 0, 1, 1, 5), enumerate_paths(topo, 0, 1)),
                    std::invalid_argument); // issue tick in the past
}

TEST_CASE("adding a congestor never lowers a victim's mean one-way latency")
{
    const Topology topo = build_dragonfly(1, 4, 2);
    for (uint64_t seed = 0; seed < 10; ++seed) {
        auto victim_mean = [&](bool with_congestor) {
            Simulator sim(topo, quick_config(100, 100000));
            std::mt19937_64 rng(seed);
            // victim: widely spaced singles, no self-contention
            for (int i = 0; i < 20; ++i)
                send(sim, "victim", 0, 7, 4, Tick(i) * 100);
            if (with_congestor) {
                for (int i = 0; i < 400; ++i) {
                    const NodeId src = 1 + NodeId(rng() % 6);
                    send(sim, "noise", src, 7, 24, rng() % 2000);
                }
            }
            sim.run_until(8000);
            double total = 0;
            int count = 0;
            for (const auto& r : sim.drain_delivery_records())
                if (r.app == "victim") {
                    total += double(r.first_flit_tick - r.issue_tick);
                    ++count;
                }
            REQUIRE(count == 20);
            return total / count;
        };
        const double alone = victim_mean(false);
        const double crowded = victim_mean(true);
        CAPTURE(seed);
        CHECK(crowded >= alone);
    }
}

TEST_CASE("delivery records serialize as json lines with the exact field names")
{
    const Topology topo = build_dragonfly(1, 2, 1);
    Simulator sim(topo, quick_config());
    send(sim, "app1", 0, 1, 2, 0);
    sim.run_until(30);
    std::stringstream buf;
    write_delivery_records(buf, sim.drain_delivery_records());
    const std::string line = buf.str();
    for (const char* field : {"\"message_id\"", "\"app_id\"", "\"src\"", "\"dst\"",
                              "\"issue_tick\"", "\"first_flit_tick\"", "\"last_flit_tick\"",
                              "\"path\""})
        CHECK(line.find(field) != std::string::npos);
}
