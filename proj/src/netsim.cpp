// SPDX-License-Identifier: Apache-2.0
#include "netscope/netsim.hpp"

#include <algorithm>
#include <cassert>
#include <limits>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

namespace netscope {

Message make_message(std::string app, NodeId src, NodeId dst, uint32_t size_flits,
                     Tick issue_tick)
{
    if (size_flits == 0)
        throw std::invalid_argument("make_message: size must be >= 1 flit");
    if (src == dst)
        throw std::invalid_argument("make_message: src == dst");
    Message m;
    m.app = std::move(app);
    m.src = src;
    m.dst = dst;
    m.size_flits = size_flits;
    m.issue_tick = issue_tick;
    return m;
}

Simulator::Simulator(const Topology& topo, const SimConfig& cfg) : topo_(topo), cfg_(cfg)
{
    if (cfg_.measurement_interval_ticks == 0)
        throw std::invalid_argument("SimConfig: measurement interval must be >= 1 tick");
    if (cfg_.max_ticks == 0)
        throw std::invalid_argument("SimConfig: max_ticks must be >= 1");
    if (cfg_.credit_return_ticks == 0)
        throw std::invalid_argument("SimConfig: credit return latency must be >= 1 tick");
    links_.resize(topo_.links.size());
    nodes_.resize(topo_.node_count());
    budget_.resize(topo_.links.size());
}

uint64_t Simulator::inject_message(const Message& msg, const PathSet& paths)
{
    if (msg.size_flits == 0)
        throw std::invalid_argument("inject_message: size must be >= 1 flit");
    if (msg.issue_tick < now_)
        throw std::invalid_argument("inject_message: issue tick is in the past");
    if (paths.src != msg.src || paths.dst != msg.dst)
        throw std::invalid_argument("inject_message: path set endpoints do not match message");
    if (paths.paths.empty())
        throw std::invalid_argument("inject_message: empty path set");
    if (msg.src >= topo_.node_count() || msg.dst >= topo_.node_count())
        throw std::invalid_argument("inject_message: node id out of range");

    // adaptive choice: shortest local queue on the first switch-bound hop,
    // ties broken by the canonical (lowest link-id sequence) path
    const std::vector<LinkId>* best = nullptr;
    size_t best_queue = std::numeric_limits<size_t>::max();
    for (const auto& path : paths.paths) {
        if (path.size() < 2)
            throw std::invalid_argument("inject_message: path shorter than NIC pair");
        const size_t q = links_[path[1]].queue.size();
        if (q < best_queue) {
            best_queue = q;
            best = &path;
        }
    }

    MsgState state;
    state.meta = msg;
    state.id = next_id_++;
    state.path = *best;
    messages_.push_back(std::move(state));
    const uint32_t index = uint32_t(messages_.size() - 1);
    nodes_[msg.src].pending.emplace(msg.issue_tick, index);
    injected_flits_ += msg.size_flits;
    return messages_[index].id;
}

uint32_t Simulator::visible_occupancy(const LinkState& ls) const
{
    // drains younger than the credit return latency still occupy a credit
    uint32_t pending_credits = 0;
    for (const uint32_t d : ls.recent_drains)
        pending_credits += d;
    return uint32_t(ls.queue.size()) + pending_credits;
}

void Simulator::deliver_flit(uint32_t msg_index)
{
    MsgState& m = messages_[msg_index];
    if (m.delivered == 0)
        m.first_flit_tick = now_;
    ++m.delivered;
    ++delivered_flits_;
    if (m.delivered == m.meta.size_flits) {
        m.last_flit_tick = now_;
        completed_.push_back(msg_index);
    }
}

void Simulator::step()
{
    if (now_ >= cfg_.max_ticks)
        throw std::logic_error("step: simulation horizon reached");

    // downstream admission budget this tick, from start-of-tick occupancy
    for (size_t l = 0; l < links_.size(); ++l) {
        const uint32_t occ = visible_occupancy(links_[l]);
        const uint32_t cap = topo_.links[l].buffer_capacity_flits;
        budget_[l] = occ >= cap ? 0 : cap - occ;
    }

    std::vector<uint32_t> drained(links_.size(), 0);

    // forwarding; the service order rotates every tick so contending links
    // share downstream credits round-robin instead of by link id
    for (size_t k = 0; k < links_.size(); ++k) {
        const size_t l = (k + now_) % links_.size();
        LinkState& ls = links_[l];
        const uint32_t bw = topo_.links[l].bandwidth_flits_per_tick;
        uint32_t moved = 0;
        bool credit_blocked = false;
        while (moved < bw && !ls.queue.empty()) {
            const FlitRef f = ls.queue.front();
            const MsgState& m = messages_[f.msg];
            if (f.pos + 1u == m.path.size()) {
                ls.queue.pop_front();
                deliver_flit(f.msg);
                ++moved;
            } else {
                const LinkId next = m.path[f.pos + 1];
                if (budget_[next] == 0) {
                    credit_blocked = true;
                    break;
                }
                --budget_[next];
                ls.queue.pop_front();
                links_[next].staged.push_back({f.msg, uint16_t(f.pos + 1)});
                ++moved;
            }
        }
        drained[l] = moved;
        ls.flits_forwarded += moved;
        if (credit_blocked)
            ++ls.stall_ticks;
    }

    // admission: NIC send queues feed injection links, rotating like above
    for (size_t k = 0; k < nodes_.size(); ++k) {
        const NodeId n = NodeId((k + now_) % nodes_.size());
        NodeState& ns = nodes_[n];
        while (!ns.pending.empty() && ns.pending.top().first <= now_) {
            ns.active.push_back(ns.pending.top().second);
            ns.pending.pop();
        }
        const LinkId inj = topo_.injection_link(n);
        const uint32_t bw = topo_.links[inj].bandwidth_flits_per_tick;
        uint32_t admitted = 0;
        while (admitted < bw && budget_[inj] > 0 && !ns.active.empty()) {
            MsgState& m = messages_[ns.active.front()];
            links_[inj].staged.push_back({ns.active.front(), 0});
            --budget_[inj];
            ++admitted;
            ++m.admitted;
            if (m.admitted == m.meta.size_flits)
                ns.active.pop_front();
        }
    }

    // arrivals become visible next tick
    for (LinkState& ls : links_) {
        for (const FlitRef& f : ls.staged)
            ls.queue.push_back(f);
        ls.staged.clear();
    }
    if (cfg_.credit_return_ticks > 1) {
        for (size_t l = 0; l < links_.size(); ++l) {
            LinkState& ls = links_[l];
            ls.recent_drains.push_back(drained[l]);
            while (ls.recent_drains.size() >= cfg_.credit_return_ticks)
                ls.recent_drains.pop_front();
        }
    }

    ++now_;
    if (now_ % cfg_.measurement_interval_ticks == 0)
        emit_snapshot();
}

void Simulator::emit_snapshot()
{
    CounterSnapshot snap;
    snap.interval_index = now_ / cfg_.measurement_interval_ticks - 1;
    snap.interval_ticks = cfg_.measurement_interval_ticks;
    snap.per_link.reserve(links_.size());
    for (size_t l = 0; l < links_.size(); ++l) {
        CounterSnapshot::LinkCounters lc;
        lc.link = LinkId(l);
        lc.stall_ticks = links_[l].stall_ticks;
        lc.flits_forwarded = links_[l].flits_forwarded;
        snap.per_link.push_back(lc);
        links_[l].stall_ticks = 0;
        links_[l].flits_forwarded = 0;
    }
    snap.per_nic.reserve(nodes_.size());
    for (NodeId n = 0; n < nodes_.size(); ++n) {
        CounterSnapshot::NicCounters nc;
        nc.node = n;
        const auto& lc = snap.per_link[topo_.injection_link(n)];
        nc.nic2hsn_stall_fraction = double(lc.stall_ticks) / double(cfg_.measurement_interval_ticks);
        snap.per_nic.push_back(nc);
    }
    snapshots_.push_back(std::move(snap));
}

void Simulator::run_until(Tick tick)
{
    if (tick > cfg_.max_ticks)
        throw std::invalid_argument("run_until: beyond the simulation horizon");
    while (now_ < tick)
        step();
}

std::vector<DeliveryRecord> Simulator::drain_delivery_records()
{
    std::sort(completed_.begin(), completed_.end(), [&](uint64_t x, uint64_t y) {
        const MsgState& a = messages_[x];
        const MsgState& b = messages_[y];
        if (a.last_flit_tick != b.last_flit_tick)
            return a.last_flit_tick < b.last_flit_tick;
        return a.id < b.id;
    });
    std::vector<DeliveryRecord> out;
    out.reserve(completed_.size());
    for (const uint64_t index : completed_) {
        const MsgState& m = messages_[index];
        DeliveryRecord r;
        r.message_id = m.id;
        r.app = m.meta.app;
        r.src = m.meta.src;
        r.dst = m.meta.dst;
        r.issue_tick = m.meta.issue_tick;
        r.first_flit_tick = m.first_flit_tick;
        r.last_flit_tick = m.last_flit_tick;
        r.path = m.path;
        out.push_back(std::move(r));
    }
    completed_.clear();
    return out;
}

std::vector<CounterSnapshot> Simulator::drain_snapshots()
{
    std::vector<CounterSnapshot> out;
    out.swap(snapshots_);
    return out;
}

FlitAccounting Simulator::flit_accounting() const
{
    FlitAccounting acc;
    acc.injected = injected_flits_;
    acc.delivered = delivered_flits_;
    for (const LinkState& ls : links_)
        acc.in_link_queues += ls.queue.size() + ls.staged.size();
    for (const MsgState& m : messages_)
        acc.source_queued += m.meta.size_flits - m.admitted;
    return acc;
}

bool Simulator::flits_conserved() const
{
    const FlitAccounting acc = flit_accounting();
    return acc.injected == acc.delivered + acc.in_link_queues + acc.source_queued;
}

void write_delivery_records(std::ostream& out, const std::vector<DeliveryRecord>& records)
{
    for (const DeliveryRecord& r : records) {
        nlohmann::ordered_json j;
        j["message_id"] = r.message_id;
        j["app_id"] = r.app;
        j["src"] = r.src;
        j["dst"] = r.dst;
        j["issue_tick"] = r.issue_tick;
        j["first_flit_tick"] = r.first_flit_tick;
        j["last_flit_tick"] = r.last_flit_tick;
        j["path"] = r.path;
        out << j.dump() << '\n';
    }
}

} // namespace netscope
