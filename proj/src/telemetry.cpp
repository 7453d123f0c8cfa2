// SPDX-License-Identifier: Apache-2.0
#include "netscope/telemetry.hpp"

#include "netscope/errors.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace netscope {

const CounterSnapshot::LinkCounters* CounterSnapshot::find_link(LinkId id) const
{
    const auto it = std::lower_bound(per_link.begin(), per_link.end(), id,
                                     [](const LinkCounters& c, LinkId v) { return c.link < v; });
    if (it == per_link.end() || it->link != id)
        return nullptr;
    return &*it;
}

const CounterSnapshot::NicCounters* CounterSnapshot::find_nic(NodeId id) const
{
    const auto it = std::lower_bound(per_nic.begin(), per_nic.end(), id,
                                     [](const NicCounters& c, NodeId v) { return c.node < v; });
    if (it == per_nic.end() || it->node != id)
        return nullptr;
    return &*it;
}

double percent_time_stalled(Tick stall_ticks, Tick interval_ticks)
{
    if (interval_ticks == 0)
        throw std::invalid_argument("percent_time_stalled: measurement interval is zero");
    if (stall_ticks > interval_ticks)
        throw std::invalid_argument("percent_time_stalled: stall ticks exceed the interval");
    return 100.0 * double(stall_ticks) / double(interval_ticks);
}

double nic2hsn_signal(const CounterSnapshot& snapshot, NodeId node)
{
    const auto* nic = snapshot.find_nic(node);
    if (!nic)
        throw NotFoundError("nic2hsn_signal: node " + std::to_string(node) +
                            " not present in snapshot");
    return nic->nic2hsn_stall_fraction;
}

std::string format_double(double value)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

namespace {

constexpr const char* kHeader = "interval,kind,entity_id,ts_ticks,tm_ticks,flits";

uint64_t parse_u64(const std::string& field, size_t line, const char* what)
{
    uint64_t v = 0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc() || res.ptr != field.data() + field.size())
        throw ParseError(std::string("bad ") + what + " '" + field + "'", line);
    return v;
}

double parse_f64(const std::string& field, size_t line, const char* what)
{
    double v = 0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc() || res.ptr != field.data() + field.size())
        throw ParseError(std::string("bad ") + what + " '" + field + "'", line);
    return v;
}

std::vector<std::string> split_fields(const std::string& row)
{
    std::vector<std::string> fields;
    std::string cur;
    for (const char c : row) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

} // namespace

void write_snapshots(std::ostream& out, const std::vector<CounterSnapshot>& snapshots)
{
    out << kHeader << '\n';
    for (const CounterSnapshot& snap : snapshots) {
        for (const auto& lc : snap.per_link)
            out << snap.interval_index << ",link," << lc.link << ',' << lc.stall_ticks << ','
                << snap.interval_ticks << ',' << lc.flits_forwarded << '\n';
        for (const auto& nc : snap.per_nic)
            out << snap.interval_index << ",nic," << nc.node << ','
                << format_double(nc.nic2hsn_stall_fraction) << ',' << snap.interval_ticks
                << ",0\n";
    }
}

void write_snapshots(const std::string& path, const std::vector<CounterSnapshot>& snapshots)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("write_snapshots: cannot open " + path);
    write_snapshots(out, snapshots);
}

std::vector<CounterSnapshot> read_snapshots(std::istream& in)
{
    std::string row;
    size_t line = 1;
    if (!std::getline(in, row) || row != kHeader)
        throw ParseError("missing snapshot header '" + std::string(kHeader) + "'", line);

    std::vector<CounterSnapshot> snapshots;
    while (std::getline(in, row)) {
        ++line;
        if (row.empty())
            continue;
        const auto fields = split_fields(row);
        if (fields.size() != 6)
            throw ParseError("expected 6 fields, got " + std::to_string(fields.size()), line);

        const uint64_t interval = parse_u64(fields[0], line, "interval");
        const uint64_t tm = parse_u64(fields[4], line, "tm_ticks");
        if (snapshots.empty() || snapshots.back().interval_index != interval) {
            CounterSnapshot snap;
            snap.interval_index = interval;
            snap.interval_ticks = tm;
            snapshots.push_back(std::move(snap));
        }
        CounterSnapshot& snap = snapshots.back();
        if (snap.interval_ticks != tm)
            throw ParseError("tm_ticks changed within interval " + std::to_string(interval), line);

        if (fields[1] == "link") {
            CounterSnapshot::LinkCounters lc;
            lc.link = LinkId(parse_u64(fields[2], line, "entity_id"));
            lc.stall_ticks = parse_u64(fields[3], line, "ts_ticks");
            lc.flits_forwarded = parse_u64(fields[5], line, "flits");
            if (lc.stall_ticks > tm)
                throw ParseError("stall ticks exceed interval", line);
            snap.per_link.push_back(lc);
        } else if (fields[1] == "nic") {
            CounterSnapshot::NicCounters nc;
            nc.node = NodeId(parse_u64(fields[2], line, "entity_id"));
            nc.nic2hsn_stall_fraction = parse_f64(fields[3], line, "stall fraction");
            if (nc.nic2hsn_stall_fraction < 0.0 || nc.nic2hsn_stall_fraction > 1.0)
                throw ParseError("nic stall fraction outside [0,1]", line);
            snap.per_nic.push_back(nc);
        } else {
            throw ParseError("unknown kind '" + fields[1] + "'", line);
        }
    }
    return snapshots;
}

std::vector<CounterSnapshot> read_snapshots(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("read_snapshots: cannot open " + path);
    return read_snapshots(in);
}

} // namespace netscope
