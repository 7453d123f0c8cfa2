// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "netscope/errors.hpp"
#include "netscope/telemetry.hpp"

#include <random>
#include <sstream>

using namespace netscope;

namespace {

CounterSnapshot sample_snapshot()
{
    CounterSnapshot snap;
    snap.interval_index = 3;
    snap.interval_ticks = 1000;
    snap.per_link = {{0, 75, 12345}, {1, 0, 0}, {2, 1000, 7}};
    snap.per_nic = {{0, 0.075}, {1, 0.0}};
    return snap;
}

} // namespace

TEST_CASE("percent time stalled matches the defining ratio")
{
    CHECK(percent_time_stalled(75, 1000) == doctest::Approx(7.5)); // the "high" level
    CHECK(percent_time_stalled(0, 1000) == 0.0);
    CHECK(percent_time_stalled(1000, 1000) == 100.0);
    CHECK(percent_time_stalled(25, 10000) == doctest::Approx(0.25)); // the "low" level
}

TEST_CASE("percent time stalled rejects out-of-range counters")
{
    CHECK_THROWS_AS(percent_time_stalled(1001, 1000), std::invalid_argument);
    CHECK_THROWS_AS(percent_time_stalled(1, 0), std::invalid_argument);
}

TEST_CASE("percent time stalled is monotone and scale invariant")
{
    std::mt19937_64 rng(11);
    for (int i = 0; i < 200; ++i) {
        const Tick tm = 1 + rng() % 10000;
        const Tick ts = rng() % (tm + 1);
        const double p = percent_time_stalled(ts, tm);
        if (ts + 1 <= tm)
            CHECK(percent_time_stalled(ts + 1, tm) > p);
        CHECK(percent_time_stalled(7 * ts, 7 * tm) == doctest::Approx(p));
    }
}

TEST_CASE("nic2hsn signal reads the injection stall fraction")
{
    const CounterSnapshot snap = sample_snapshot();
    CHECK(nic2hsn_signal(snap, 0) == doctest::Approx(0.075));
    CHECK(nic2hsn_signal(snap, 1) == 0.0);
    CHECK_THROWS_AS(nic2hsn_signal(snap, 9), NotFoundError);
}

TEST_CASE("nic2hsn boundary values")
{
    CounterSnapshot snap;
    snap.interval_ticks = 100;
    snap.per_nic = {{0, 1.0}, {1, 0.5}};
    CHECK(nic2hsn_signal(snap, 0) == 1.0); // fully blocked the whole interval
    // half-blocked link agrees with the raw ratio
    CHECK(nic2hsn_signal(snap, 1) == doctest::Approx(50.0 / 100.0));
}

TEST_CASE("empty snapshot list round-trips through a header-only file")
{
    std::stringstream buf;
    write_snapshots(buf, {});
    CHECK(buf.str() == "interval,kind,entity_id,ts_ticks,tm_ticks,flits\n");
    const auto back = read_snapshots(buf);
    CHECK(back.empty());
}

TEST_CASE("snapshot round-trip is field exact")
{
    const std::vector<CounterSnapshot> snaps = {sample_snapshot()};
    std::stringstream buf;
    write_snapshots(buf, snaps);
    const auto back = read_snapshots(buf);
    REQUIRE(back.size() == 1);
    CHECK(back[0] == snaps[0]);
}

TEST_CASE("hand-written fixture parses to the written numbers")
{
    const std::string fixture = "interval,kind,entity_id,ts_ticks,tm_ticks,flits\n"
                                "0,link,4,250,1000,999\n"
                                "0,nic,2,0.25,1000,0\n"
                                "1,link,4,0,1000,0\n";
    std::stringstream buf(fixture);
    const auto snaps = read_snapshots(buf);
    REQUIRE(snaps.size() == 2);
    CHECK(snaps[0].interval_index == 0);
    CHECK(snaps[0].interval_ticks == 1000);
    REQUIRE(snaps[0].per_link.size() == 1);
    CHECK(snaps[0].per_link[0].link == 4);
    CHECK(snaps[0].per_link[0].stall_ticks == 250);
    CHECK(snaps[0].per_link[0].flits_forwarded == 999);
    REQUIRE(snaps[0].per_nic.size() == 1);
    CHECK(snaps[0].per_nic[0].node == 2);
    CHECK(snaps[0].per_nic[0].nic2hsn_stall_fraction == 0.25);
    CHECK(snaps[1].interval_index == 1);
    CHECK(snaps[1].per_link[0].stall_ticks == 0);
}

TEST_CASE("malformed rows report their line number")
{
    const std::string bad = "interval,kind,entity_id,ts_ticks,tm_ticks,flits\n"
                            "0,link,1,5,100,2\n"
                            "0,zebra,1,5,100,2\n";
    std::stringstream buf(bad);
    try {
        read_snapshots(buf);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
}

TEST_CASE("missing header is a parse error")
{
    std::stringstream buf("0,link,1,5,100,2\n");
    CHECK_THROWS_AS(read_snapshots(buf), ParseError);
}

TEST_CASE("randomized snapshots survive a serialize/parse round trip")
{
    std::mt19937_64 rng(99);
    std::vector<CounterSnapshot> snaps;
    for (int i = 0; i < 1000; ++i) {
        CounterSnapshot s;
        s.interval_index = uint64_t(i);
        s.interval_ticks = 1 + rng() % 5000;
        const int links = 1 + int(rng() % 5);
        for (int l = 0; l < links; ++l) {
            CounterSnapshot::LinkCounters lc;
            lc.link = LinkId(l);
            lc.stall_ticks = rng() % (s.interval_ticks + 1);
            lc.flits_forwarded = rng() % 1000000;
            s.per_link.push_back(lc);
        }
        CounterSnapshot::NicCounters nc;
        nc.node = 0;
        nc.nic2hsn_stall_fraction = double(rng() % 10001) / 10000.0;
        s.per_nic.push_back(nc);
        snaps.push_back(std::move(s));
    }
    std::stringstream buf;
    write_snapshots(buf, snaps);
    const auto back = read_snapshots(buf);
    REQUIRE(back.size() == snaps.size());
    for (size_t i = 0; i < snaps.size(); ++i)
        CHECK(back[i] == snaps[i]);
}
