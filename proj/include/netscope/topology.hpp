// SPDX-License-Identifier: Apache-2.0
#ifndef NETSCOPE_TOPOLOGY_HPP
#define NETSCOPE_TOPOLOGY_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace netscope {

using NodeId = uint32_t;
using SwitchId = uint32_t;
using LinkId = uint32_t;
using Tick = uint64_t;

enum class LinkKind : uint8_t { nic_injection, nic_ejection, intra_group, global };

const char* to_string(LinkKind kind);

/// One hop of the interconnect. NIC links are directed (injection: node->switch,
/// ejection: switch->node); switch-to-switch links are a single undirected wire
/// per pair, so (a,b) is stored with a < b for intra_group/global kinds.
struct Link {
    LinkId id = 0;
    LinkKind kind = LinkKind::intra_group;
    uint32_t a = 0; // node id for NIC kinds, switch id otherwise
    uint32_t b = 0;
    uint32_t bandwidth_flits_per_tick = 1;
    uint32_t buffer_capacity_flits = 1;
};

struct LinkParams {
    uint32_t bandwidth_flits_per_tick = 4;
    uint32_t buffer_capacity_flits = 64;
};

/// Dragonfly of `groups` fully connected electrical groups. Switch ids are
/// dense (group g, local s) -> g*switches_per_group + s; node ids are dense
/// per switch. Immutable after construction.
struct Topology {
    uint32_t groups = 0;
    uint32_t switches_per_group = 0;
    uint32_t nodes_per_switch = 0;
    std::vector<Link> links;                 // indexed by LinkId
    std::vector<SwitchId> node_to_switch;    // indexed by NodeId

    uint32_t switch_count() const { return groups * switches_per_group; }
    uint32_t node_count() const { return switch_count() * nodes_per_switch; }
    uint32_t group_of(SwitchId s) const { return s / switches_per_group; }

    LinkId injection_link(NodeId n) const;
    LinkId ejection_link(NodeId n) const;
    /// Undirected switch-switch link joining s1 and s2 (intra-group or global).
    std::optional<LinkId> switch_link(SwitchId s1, SwitchId s2) const;
    /// Switches adjacent to `s`, with the joining link, in ascending link-id order.
    std::vector<std::pair<SwitchId, LinkId>> switch_neighbors(SwitchId s) const;
};

/// Enumerated routes between one node pair. `paths` is the path set: each
/// entry is an ordered link-id list from the src injection link to the dst
/// ejection link, minimal paths first, then canonically by link-id sequence.
struct PathSet {
    NodeId src = 0;
    NodeId dst = 0;
    std::vector<std::vector<LinkId>> paths;
};

struct RoutingPolicy {
    enum class Kind { minimal_only, minimal_plus_nonminimal };
    Kind kind = Kind::minimal_only;
    uint32_t nonminimal_limit = 3; // extra one-misroute paths kept per pair
};

/// Builds the Dragonfly wiring: per node one injection and one ejection link,
/// a complete graph of intra-group links inside each group, and exactly one
/// global link per group pair. Throws std::invalid_argument on zero or
/// overflowing counts.
Topology build_dragonfly(uint32_t groups, uint32_t switches_per_group,
                         uint32_t nodes_per_switch, const LinkParams& params = {});

/// Expected link count for the construction above; kept as a plain formula so
/// callers can sanity-check a built topology.
uint64_t dragonfly_link_count(uint32_t groups, uint32_t switches_per_group,
                              uint32_t nodes_per_switch);

/// Enumerates routing-constrained paths for src != dst. Minimal paths have the
/// minimum switch-hop count; the nonminimal policy adds at most `limit` paths
/// with exactly one extra hop. Never returns an empty set on a valid topology.
PathSet enumerate_paths(const Topology& topo, NodeId src, NodeId dst,
                        const RoutingPolicy& policy = {});

/// Checks every topology invariant; returns the first violation as a message,
/// or nullopt when the topology is well formed.
std::optional<std::string> validate(const Topology& topo);

} // namespace netscope

#endif // NETSCOPE_TOPOLOGY_HPP
