// SPDX-License-Identifier: Apache-2.0
#ifndef NETSCOPE_NETSIM_HPP
#define NETSCOPE_NETSIM_HPP

#include "netscope/telemetry.hpp"
#include "netscope/topology.hpp"

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <queue>
#include <string>
#include <vector>

namespace netscope {

struct SimConfig {
    uint64_t seed = 1;
    double tick_duration_us = 1.0;       // simulated microseconds per tick
    Tick measurement_interval_ticks = 100; // T_m
    Tick max_ticks = 1'000'000;
    Tick credit_return_ticks = 1; // delay until a drained buffer slot is visible upstream
};

struct Message {
    std::string app;
    NodeId src = 0;
    NodeId dst = 0;
    uint32_t size_flits = 0;
    Tick issue_tick = 0;
};

/// Validates the Message invariants (size >= 1, src != dst). Throws
/// std::invalid_argument so malformed messages never reach the simulator.
Message make_message(std::string app, NodeId src, NodeId dst, uint32_t size_flits,
                     Tick issue_tick);

struct DeliveryRecord {
    uint64_t message_id = 0;
    std::string app;
    NodeId src = 0;
    NodeId dst = 0;
    Tick issue_tick = 0;
    Tick first_flit_tick = 0; // one-way latency D = first_flit_tick - issue_tick
    Tick last_flit_tick = 0;
    std::vector<LinkId> path;
};

struct FlitAccounting {
    uint64_t injected = 0;      // flits of all injected messages
    uint64_t delivered = 0;     // flits that crossed an ejection link
    uint64_t in_link_queues = 0; // recomputed by scanning link buffers
    uint64_t source_queued = 0;  // recomputed by scanning NIC send queues
};

/// Deterministic time-stepped simulation of a lossless credit-based network.
/// Links forward whole flits; a link accrues one stall tick whenever queued
/// data could not advance for lack of downstream credits during the tick.
/// Single-threaded; distinct instances share nothing.
class Simulator {
public:
    Simulator(const Topology& topo, const SimConfig& cfg);

    /// Queues a message at its source NIC. The path is fixed at injection:
    /// least queued first switch-bound hop, ties by lowest link-id sequence.
    /// Returns the assigned message id.
    uint64_t inject_message(const Message& msg, const PathSet& paths);

    void step();
    void run_until(Tick tick);
    Tick now() const { return now_; }
    const SimConfig& config() const { return cfg_; }
    const Topology& topology() const { return topo_; }

    /// Completed deliveries ordered by (completion tick, message id); clears them.
    std::vector<DeliveryRecord> drain_delivery_records();
    /// Snapshots emitted at measurement-interval boundaries so far; clears them.
    std::vector<CounterSnapshot> drain_snapshots();

    FlitAccounting flit_accounting() const;
    /// Lossless-transport check: injected == delivered + in flight.
    bool flits_conserved() const;

private:
    struct FlitRef {
        uint32_t msg;  // index into messages_
        uint16_t pos;  // index into the message's path
    };
    struct MsgState {
        Message meta;
        uint64_t id = 0;
        std::vector<LinkId> path;
        uint32_t admitted = 0;  // flits moved from the send queue into the NIC
        uint32_t delivered = 0;
        Tick first_flit_tick = 0;
        Tick last_flit_tick = 0;
    };
    struct LinkState {
        std::deque<FlitRef> queue;
        std::vector<FlitRef> staged; // arrivals applied at end of tick
        Tick stall_ticks = 0;        // within the current interval
        uint64_t flits_forwarded = 0;
        std::deque<uint32_t> recent_drains; // for credit_return_ticks > 1
    };
    struct NodeState {
        // (issue_tick, msg index): admission order for not-yet-started messages
        std::priority_queue<std::pair<Tick, uint32_t>, std::vector<std::pair<Tick, uint32_t>>,
                            std::greater<>>
            pending;
        std::deque<uint32_t> active; // messages currently feeding the NIC
    };

    uint32_t visible_occupancy(const LinkState& ls) const;
    void deliver_flit(uint32_t msg_index);
    void emit_snapshot();

    const Topology& topo_;
    SimConfig cfg_;
    Tick now_ = 0;
    uint64_t next_id_ = 0;
    std::vector<MsgState> messages_;
    std::vector<LinkState> links_;
    std::vector<NodeState> nodes_;
    std::vector<uint32_t> budget_;  // scratch, per link per tick
    std::vector<uint64_t> completed_; // msg indexes with undrained records
    std::vector<CounterSnapshot> snapshots_;
    uint64_t injected_flits_ = 0;
    uint64_t delivered_flits_ = 0;
};

/// JSON-lines delivery log; fields: message_id, app_id, src, dst, issue_tick,
/// first_flit_tick, last_flit_tick, path.
void write_delivery_records(std::ostream& out, const std::vector<DeliveryRecord>& records);

} // namespace netscope

#endif // NETSCOPE_NETSIM_HPP
