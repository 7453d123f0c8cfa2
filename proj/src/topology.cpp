// SPDX-License-Identifier: Apache-2.0
#include "netscope/topology.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

namespace netscope {

const char* to_string(LinkKind kind)
{
    switch (kind) {
    case LinkKind::nic_injection: return "nic-injection";
    case LinkKind::nic_ejection: return "nic-ejection";
    case LinkKind::intra_group: return "intra-group";
    case LinkKind::global: return "global";
    }
    return "?";
}

LinkId Topology::injection_link(NodeId n) const
{
    return n; // injection links are laid out first, one per node
}

LinkId Topology::ejection_link(NodeId n) const
{
    return node_count() + n;
}

std::optional<LinkId> Topology::switch_link(SwitchId s1, SwitchId s2) const
{
    for (const Link& l : links)
        if ((l.kind == LinkKind::intra_group || l.kind == LinkKind::global) &&
            ((l.a == s1 && l.b == s2) || (l.a == s2 && l.b == s1)))
            return l.id;
    return std::nullopt;
}

std::vector<std::pair<SwitchId, LinkId>> Topology::switch_neighbors(SwitchId s) const
{
    std::vector<std::pair<SwitchId, LinkId>> out;
    for (const Link& l : links) {
        if (l.kind != LinkKind::intra_group && l.kind != LinkKind::global)
            continue;
        if (l.a == s)
            out.emplace_back(l.b, l.id);
        else if (l.b == s)
            out.emplace_back(l.a, l.id);
    }
    std::sort(out.begin(), out.end(),
              [](const auto& x, const auto& y) { return x.second < y.second; });
    return out;
}

uint64_t dragonfly_link_count(uint32_t groups, uint32_t switches_per_group,
                              uint32_t nodes_per_switch)
{
    const uint64_t n = uint64_t(groups) * switches_per_group * nodes_per_switch;
    const uint64_t intra = uint64_t(groups) * switches_per_group * (switches_per_group - 1) / 2;
    const uint64_t global = uint64_t(groups) * (groups - 1) / 2;
    return 2 * n + intra + global;
}

Topology build_dragonfly(uint32_t groups, uint32_t switches_per_group,
                         uint32_t nodes_per_switch, const LinkParams& params)
{
    if (groups == 0 || switches_per_group == 0 || nodes_per_switch == 0)
        throw std::invalid_argument("build_dragonfly: all counts must be >= 1");
    if (params.bandwidth_flits_per_tick == 0 || params.buffer_capacity_flits == 0)
        throw std::invalid_argument("build_dragonfly: link bandwidth and buffer must be > 0");
    const uint64_t total_links = dragonfly_link_count(groups, switches_per_group, nodes_per_switch);
    if (total_links > std::numeric_limits<LinkId>::max() / 2)
        throw std::invalid_argument("build_dragonfly: topology too large for link id space");

    Topology topo;
    topo.groups = groups;
    topo.switches_per_group = switches_per_group;
    topo.nodes_per_switch = nodes_per_switch;
    topo.links.reserve(total_links);

    const uint32_t n_nodes = topo.node_count();
    topo.node_to_switch.resize(n_nodes);
    for (NodeId node = 0; node < n_nodes; ++node)
        topo.node_to_switch[node] = node / nodes_per_switch;

    auto add = [&](LinkKind kind, uint32_t a, uint32_t b) {
        Link l;
        l.id = LinkId(topo.links.size());
        l.kind = kind;
        l.a = a;
        l.b = b;
        l.bandwidth_flits_per_tick = params.bandwidth_flits_per_tick;
        l.buffer_capacity_flits = params.buffer_capacity_flits;
        topo.links.push_back(l);
    };

    for (NodeId node = 0; node < n_nodes; ++node)
        add(LinkKind::nic_injection, node, topo.node_to_switch[node]);
    for (NodeId node = 0; node < n_nodes; ++node)
        add(LinkKind::nic_ejection, topo.node_to_switch[node], node);

    for (uint32_t g = 0; g < groups; ++g)
        for (uint32_t i = 0; i < switches_per_group; ++i)
            for (uint32_t j = i + 1; j < switches_per_group; ++j)
                add(LinkKind::intra_group, g * switches_per_group + i,
                    g * switches_per_group + j);

    // one global link per group pair; gateway switch spread by peer index
    for (uint32_t ga = 0; ga < groups; ++ga)
        for (uint32_t gb = ga + 1; gb < groups; ++gb)
            add(LinkKind::global, ga * switches_per_group + gb % switches_per_group,
                gb * switches_per_group + ga % switches_per_group);

    return topo;
}

namespace {

struct SwitchGraph {
    // per switch: (neighbor, joining link), ascending link id
    std::vector<std::vector<std::pair<SwitchId, LinkId>>> adj;

    explicit SwitchGraph(const Topology& topo) : adj(topo.switch_count())
    {
        for (const Link& l : topo.links) {
            if (l.kind != LinkKind::intra_group && l.kind != LinkKind::global)
                continue;
            adj[l.a].emplace_back(l.b, l.id);
            adj[l.b].emplace_back(l.a, l.id);
        }
        for (auto& neighbors : adj)
            std::sort(neighbors.begin(), neighbors.end(),
                      [](const auto& x, const auto& y) { return x.second < y.second; });
    }

    std::optional<LinkId> link_between(SwitchId s1, SwitchId s2) const
    {
        for (const auto& [nb, link] : adj[s1])
            if (nb == s2)
                return link;
        return std::nullopt;
    }
};

// All shortest switch sequences, lexicographically by switch id, capped so
// degenerate parameter corners stay bounded.
constexpr size_t kMaxEnumeratedPaths = 16;

std::vector<uint32_t> bfs_dist(const SwitchGraph& graph, SwitchId from)
{
    std::vector<uint32_t> dist(graph.adj.size(), std::numeric_limits<uint32_t>::max());
    std::deque<SwitchId> frontier{from};
    dist[from] = 0;
    while (!frontier.empty()) {
        const SwitchId s = frontier.front();
        frontier.pop_front();
        for (const auto& [nb, link] : graph.adj[s]) {
            (void)link;
            if (dist[nb] == std::numeric_limits<uint32_t>::max()) {
                dist[nb] = dist[s] + 1;
                frontier.push_back(nb);
            }
        }
    }
    return dist;
}

void collect_shortest(const SwitchGraph& graph, const std::vector<uint32_t>& dist_to_dst,
                      SwitchId at, SwitchId dst, std::vector<SwitchId>& prefix,
                      std::vector<std::vector<SwitchId>>& out)
{
    if (out.size() >= kMaxEnumeratedPaths)
        return;
    prefix.push_back(at);
    if (at == dst) {
        out.push_back(prefix);
    } else {
        auto neighbors = graph.adj[at];
        std::sort(neighbors.begin(), neighbors.end());
        for (const auto& [nb, link] : neighbors) {
            (void)link;
            if (dist_to_dst[nb] + 1 == dist_to_dst[at])
                collect_shortest(graph, dist_to_dst, nb, dst, prefix, out);
        }
    }
    prefix.pop_back();
}

std::vector<LinkId> seq_to_links(const Topology& topo, const SwitchGraph& graph, NodeId src,
                                 NodeId dst, const std::vector<SwitchId>& seq)
{
    std::vector<LinkId> path;
    path.push_back(topo.injection_link(src));
    for (size_t i = 0; i + 1 < seq.size(); ++i) {
        auto link = graph.link_between(seq[i], seq[i + 1]);
        if (!link)
            throw std::logic_error("enumerate_paths: missing switch link on shortest path");
        path.push_back(*link);
    }
    path.push_back(topo.ejection_link(dst));
    return path;
}

bool links_distinct(const std::vector<LinkId>& path)
{
    std::set<LinkId> seen(path.begin(), path.end());
    return seen.size() == path.size();
}

} // namespace

PathSet enumerate_paths(const Topology& topo, NodeId src, NodeId dst,
                        const RoutingPolicy& policy)
{
    if (src == dst)
        throw std::invalid_argument("enumerate_paths: src == dst");
    if (src >= topo.node_count() || dst >= topo.node_count())
        throw std::invalid_argument("enumerate_paths: node id out of range");

    const SwitchGraph graph(topo);
    const SwitchId s_src = topo.node_to_switch[src];
    const SwitchId s_dst = topo.node_to_switch[dst];

    PathSet set;
    set.src = src;
    set.dst = dst;

    const auto dist_to_dst = bfs_dist(graph, s_dst);
    if (dist_to_dst[s_src] == std::numeric_limits<uint32_t>::max())
        throw std::logic_error("enumerate_paths: disconnected pair in a Dragonfly");

    std::vector<std::vector<SwitchId>> minimal_seqs;
    std::vector<SwitchId> prefix;
    collect_shortest(graph, dist_to_dst, s_src, s_dst, prefix, minimal_seqs);

    for (const auto& seq : minimal_seqs)
        set.paths.push_back(seq_to_links(topo, graph, src, dst, seq));
    std::sort(set.paths.begin(), set.paths.end());
    const size_t minimal_len = set.paths.front().size();

    if (policy.kind == RoutingPolicy::Kind::minimal_plus_nonminimal && policy.nonminimal_limit > 0) {
        // Valiant-style single misroute: step to a sideways neighbor W with
        // dist(W,dst) == dist(src,dst), then continue on a shortest route.
        std::vector<std::vector<LinkId>> extra;
        for (const auto& [w, first_link] : graph.adj[s_src]) {
            if (dist_to_dst[w] != dist_to_dst[s_src])
                continue;
            std::vector<std::vector<SwitchId>> tails;
            std::vector<SwitchId> tail_prefix;
            collect_shortest(graph, dist_to_dst, w, s_dst, tail_prefix, tails);
            for (const auto& tail : tails) {
                std::vector<LinkId> path;
                path.push_back(topo.injection_link(src));
                path.push_back(first_link);
                for (size_t i = 0; i + 1 < tail.size(); ++i) {
                    auto link = graph.link_between(tail[i], tail[i + 1]);
                    if (!link)
                        throw std::logic_error("enumerate_paths: missing link on misroute tail");
                    path.push_back(*link);
                }
                path.push_back(topo.ejection_link(dst));
                if (path.size() == minimal_len + 1 && links_distinct(path)) {
                    extra.push_back(std::move(path));
                    break; // one canonical tail per misroute neighbor
                }
            }
        }
        std::sort(extra.begin(), extra.end());
        extra.erase(std::unique(extra.begin(), extra.end()), extra.end());
        if (extra.size() > policy.nonminimal_limit)
            extra.resize(policy.nonminimal_limit);
        for (auto& p : extra)
            set.paths.push_back(std::move(p));
    }

    return set;
}

std::optional<std::string> validate(const Topology& topo)
{
    const uint32_t n_nodes = topo.node_count();
    const uint32_t n_switches = topo.switch_count();

    if (topo.node_to_switch.size() != n_nodes)
        return "node_to_switch size does not match node count";

    for (const Link& l : topo.links) {
        if (l.bandwidth_flits_per_tick == 0)
            return "link " + std::to_string(l.id) + " has zero bandwidth";
        if (l.buffer_capacity_flits == 0)
            return "link " + std::to_string(l.id) + " has zero buffer capacity";
        const bool a_is_node = l.kind == LinkKind::nic_injection;
        const bool b_is_node = l.kind == LinkKind::nic_ejection;
        const uint32_t a_limit = a_is_node ? n_nodes : n_switches;
        const uint32_t b_limit = b_is_node ? n_nodes : n_switches;
        if (l.a >= a_limit || l.b >= b_limit)
            return "link " + std::to_string(l.id) + " references a missing endpoint";
    }

    // every node: exactly one injection and one ejection link, to its own switch
    std::vector<uint32_t> inj_count(n_nodes, 0), ej_count(n_nodes, 0);
    for (const Link& l : topo.links) {
        if (l.kind == LinkKind::nic_injection) {
            ++inj_count[l.a];
            if (topo.node_to_switch[l.a] != l.b)
                return "node " + std::to_string(l.a) + " injects into a switch it is not mapped to";
        } else if (l.kind == LinkKind::nic_ejection) {
            ++ej_count[l.b];
            if (topo.node_to_switch[l.b] != l.a)
                return "node " + std::to_string(l.b) + " ejects from a switch it is not mapped to";
        }
    }
    for (NodeId node = 0; node < n_nodes; ++node) {
        if (topo.node_to_switch[node] >= n_switches)
            return "node " + std::to_string(node) + " is mapped to a missing switch";
        if (inj_count[node] != 1)
            return "node " + std::to_string(node) + " has " + std::to_string(inj_count[node]) +
                   " injection links (want 1)";
        if (ej_count[node] != 1)
            return "node " + std::to_string(node) + " has " + std::to_string(ej_count[node]) +
                   " ejection links (want 1)";
    }

    // intra-group completeness: exactly one link per switch pair within a group
    std::map<std::pair<SwitchId, SwitchId>, uint32_t> sw_pairs;
    for (const Link& l : topo.links)
        if (l.kind == LinkKind::intra_group)
            ++sw_pairs[{std::min(l.a, l.b), std::max(l.a, l.b)}];
    for (uint32_t g = 0; g < topo.groups; ++g) {
        for (uint32_t i = 0; i < topo.switches_per_group; ++i) {
            for (uint32_t j = i + 1; j < topo.switches_per_group; ++j) {
                const SwitchId si = g * topo.switches_per_group + i;
                const SwitchId sj = g * topo.switches_per_group + j;
                const auto it = sw_pairs.find({si, sj});
                const uint32_t count = it == sw_pairs.end() ? 0 : it->second;
                if (count != 1)
                    return "switch pair (" + std::to_string(si) + "," + std::to_string(sj) +
                           ") joined by " + std::to_string(count) + " intra-group links (want 1)";
            }
        }
    }
    for (const auto& [pair, count] : sw_pairs) {
        (void)count;
        if (topo.group_of(pair.first) != topo.group_of(pair.second))
            return "intra-group link crosses groups (" + std::to_string(pair.first) + "," +
                   std::to_string(pair.second) + ")";
    }

    // global connectivity: at least one link per group pair
    std::set<std::pair<uint32_t, uint32_t>> group_pairs;
    for (const Link& l : topo.links)
        if (l.kind == LinkKind::global) {
            if (topo.group_of(l.a) == topo.group_of(l.b))
                return "global link " + std::to_string(l.id) + " stays within one group";
            group_pairs.insert({std::min(topo.group_of(l.a), topo.group_of(l.b)),
                                std::max(topo.group_of(l.a), topo.group_of(l.b))});
        }
    for (uint32_t ga = 0; ga < topo.groups; ++ga)
        for (uint32_t gb = ga + 1; gb < topo.groups; ++gb)
            if (!group_pairs.count({ga, gb}))
                return "group pair (" + std::to_string(ga) + "," + std::to_string(gb) +
                       ") has no global link";

    return std::nullopt;
}

} // namespace netscope
