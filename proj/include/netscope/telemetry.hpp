// SPDX-License-Identifier: Apache-2.0
#ifndef NETSCOPE_TELEMETRY_HPP
#define NETSCOPE_TELEMETRY_HPP

#include "netscope/topology.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace netscope {

/// Per-interval network counters: stall ticks and forwarded flits for every
/// link, plus the normalized injection-stall fraction per node NIC.
struct CounterSnapshot {
    struct LinkCounters {
        LinkId link = 0;
        Tick stall_ticks = 0;      // T_s within the interval
        uint64_t flits_forwarded = 0;
        bool operator==(const LinkCounters&) const = default;
    };
    struct NicCounters {
        NodeId node = 0;
        double nic2hsn_stall_fraction = 0.0; // in [0,1]
        bool operator==(const NicCounters&) const = default;
    };

    uint64_t interval_index = 0;
    Tick interval_ticks = 0; // T_m
    std::vector<LinkCounters> per_link; // ascending link id
    std::vector<NicCounters> per_nic;   // ascending node id

    const LinkCounters* find_link(LinkId id) const;
    const NicCounters* find_nic(NodeId id) const;

    bool operator==(const CounterSnapshot&) const = default;
};

/// P_Ts = 100 * T_s / T_m. Throws std::invalid_argument outside 0 <= T_s <= T_m,
/// T_m > 0.
double percent_time_stalled(Tick stall_ticks, Tick interval_ticks);

/// Stall fraction of `node`'s NIC-injection link over the snapshot interval.
/// Throws NotFoundError for a node missing from the snapshot.
double nic2hsn_signal(const CounterSnapshot& snapshot, NodeId node);

// Counter exchange format, bit-exact:
//   interval,kind,entity_id,ts_ticks,tm_ticks,flits
// kind=link rows carry integer stall ticks; kind=nic rows carry the stall
// fraction (shortest round-trip decimal) in the ts_ticks column and 0 flits.
void write_snapshots(std::ostream& out, const std::vector<CounterSnapshot>& snapshots);
void write_snapshots(const std::string& path, const std::vector<CounterSnapshot>& snapshots);
std::vector<CounterSnapshot> read_snapshots(std::istream& in);
std::vector<CounterSnapshot> read_snapshots(const std::string& path);

/// Shortest decimal form of `value` that parses back to the same double.
std::string format_double(double value);

} // namespace netscope

#endif // NETSCOPE_TELEMETRY_HPP
