// SPDX-License-Identifier: Apache-2.0
#include "netscope/harness.hpp"

#include "netscope/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <queue>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace netscope {

const char* to_string(CongestionSchedule schedule)
{
    switch (schedule) {
    case CongestionSchedule::none: return "none";
    case CongestionSchedule::two_extreme: return "two-extreme";
    case CongestionSchedule::random_levels: return "random";
    }
    return "?";
}

CongestionSchedule congestion_schedule_from_string(const std::string& name)
{
    if (name == "none")
        return CongestionSchedule::none;
    if (name == "two-extreme")
        return CongestionSchedule::two_extreme;
    if (name == "random")
        return CongestionSchedule::random_levels;
    throw std::invalid_argument("unknown congestion schedule '" + name + "'");
}

const AppSection* ExperimentConfig::find_app(const std::string& name) const
{
    for (const AppSection& a : apps)
        if (a.spec.app == name)
            return &a;
    return nullptr;
}

// ---------------------------------------------------------------------------
// defaults, parsing, printing

ExperimentConfig default_config()
{
    // the stock two-app workload: a delay-sensitive iterative app against an
    // all-to-all congestor sized to saturate the group's wires
    ExperimentConfig cfg;

    AppSection victim;
    victim.spec.app = "victim";
    victim.spec.pattern = TrafficPattern::iterative_neighbor;
    victim.spec.nodes = 4;
    victim.spec.msg_size_flits = 24;
    victim.spec.compute_gap_ticks = 60;
    victim.spec.iterations = 120;
    victim.spec.planted_c = 6.0;
    victim.spec.planted_k = 30.0;
    victim.policy = RatePolicy::netscope;
    victim.sensitivity = 6.0;
    cfg.apps.push_back(victim);

    AppSection congestor;
    congestor.spec.app = "congestor";
    congestor.spec.pattern = TrafficPattern::all_to_all;
    congestor.spec.nodes = 28;
    congestor.spec.msg_size_flits = 4;
    congestor.spec.compute_gap_ticks = 24;
    congestor.spec.iterations = 420;
    congestor.policy = RatePolicy::netscope;
    congestor.sensitivity = 0.1;
    cfg.apps.push_back(congestor);

    return cfg;
}

namespace {

struct ConfigLine {
    std::string key;
    std::string value;
    size_t line = 0;
};

std::string trim(const std::string& s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos)
        return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

uint64_t to_u64(const ConfigLine& kv)
{
    uint64_t v = 0;
    const auto res = std::from_chars(kv.value.data(), kv.value.data() + kv.value.size(), v);
    if (res.ec != std::errc() || res.ptr != kv.value.data() + kv.value.size())
        throw ParseError("bad integer for '" + kv.key + "': '" + kv.value + "'", kv.line);
    return v;
}

double to_f64(const ConfigLine& kv)
{
    double v = 0;
    const auto res = std::from_chars(kv.value.data(), kv.value.data() + kv.value.size(), v);
    if (res.ec != std::errc() || res.ptr != kv.value.data() + kv.value.size())
        throw ParseError("bad number for '" + kv.key + "': '" + kv.value + "'", kv.line);
    return v;
}

bool to_bool(const ConfigLine& kv)
{
    if (kv.value == "true")
        return true;
    if (kv.value == "false")
        return false;
    throw ParseError("bad boolean for '" + kv.key + "': '" + kv.value + "'", kv.line);
}

std::vector<std::string> split_list(const std::string& value)
{
    std::vector<std::string> out;
    std::string cur;
    for (const char c : value) {
        if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!trim(cur).empty() || !out.empty())
        out.push_back(trim(cur));
    return out;
}

void apply_app_key(AppSection& app, const ConfigLine& kv)
{
    if (kv.key == "pattern") {
        app.spec.pattern = traffic_pattern_from_string(kv.value);
    } else if (kv.key == "nodes") {
        app.spec.nodes = uint32_t(to_u64(kv));
    } else if (kv.key == "msg_size_flits") {
        app.spec.msg_size_flits = uint32_t(to_u64(kv));
    } else if (kv.key == "compute_gap_ticks") {
        app.spec.compute_gap_ticks = to_u64(kv);
    } else if (kv.key == "iterations") {
        app.spec.iterations = uint32_t(to_u64(kv));
    } else if (kv.key == "planted_c") {
        app.spec.planted_c = to_f64(kv);
    } else if (kv.key == "planted_k") {
        app.spec.planted_k = to_f64(kv);
    } else if (kv.key == "gap_jitter") {
        app.spec.gap_jitter = to_bool(kv);
    } else if (kv.key == "policy") {
        app.policy = rate_policy_from_string(kv.value);
    } else if (kv.key == "sensitivity") {
        app.sensitivity = to_f64(kv);
    } else if (kv.key == "rate_fraction") {
        app.rate_fraction = to_f64(kv);
    } else if (kv.key == "placement") {
        if (kv.value == "random") {
            app.placement.kind = PlacementSpec::Kind::random;
        } else if (kv.value.rfind("fixed:", 0) == 0) {
            app.placement.kind = PlacementSpec::Kind::fixed;
            app.placement.fixed_nodes.clear();
            for (const std::string& field : split_list(kv.value.substr(6))) {
                ConfigLine sub{kv.key, field, kv.line};
                app.placement.fixed_nodes.push_back(NodeId(to_u64(sub)));
            }
        } else {
            throw ParseError("placement must be 'random' or 'fixed:<ids>'", kv.line);
        }
    } else {
        throw ParseError("unknown app key '" + kv.key + "'", kv.line);
    }
}

} // namespace

ExperimentConfig parse_config(std::istream& in)
{
    ExperimentConfig cfg = default_config();
    cfg.apps.clear(); // app sections come only from the document

    std::string section;
    std::string app_name;
    std::string row;
    size_t line = 0;

    while (std::getline(in, row)) {
        ++line;
        const std::string text = trim(row.substr(0, row.find('#')));
        if (text.empty())
            continue;

        if (text.front() == '[') {
            if (text.back() != ']')
                throw ParseError("unterminated section header", line);
            const std::string inner = trim(text.substr(1, text.size() - 2));
            if (inner.rfind("app ", 0) == 0) {
                section = "app";
                app_name = trim(inner.substr(4));
                if (app_name.empty())
                    throw ParseError("app section needs a name", line);
                AppSection app;
                app.spec.app = app_name;
                cfg.apps.push_back(app);
            } else {
                section = inner;
                static const std::set<std::string> known = {
                    "topology", "sim", "routing", "controller", "training", "compare", "output"};
                if (!known.count(section))
                    throw ParseError("unknown section '" + section + "'", line);
            }
            continue;
        }

        const auto eq = text.find('=');
        if (eq == std::string::npos)
            throw ParseError("expected 'key = value'", line);
        const ConfigLine kv{trim(text.substr(0, eq)), trim(text.substr(eq + 1)), line};
        if (section.empty())
            throw ParseError("key '" + kv.key + "' outside any section", line);

        if (section == "topology") {
            if (kv.key == "groups")
                cfg.topology.groups = uint32_t(to_u64(kv));
            else if (kv.key == "switches_per_group")
                cfg.topology.switches_per_group = uint32_t(to_u64(kv));
            else if (kv.key == "nodes_per_switch")
                cfg.topology.nodes_per_switch = uint32_t(to_u64(kv));
            else if (kv.key == "link_bandwidth")
                cfg.topology.link_bandwidth = uint32_t(to_u64(kv));
            else if (kv.key == "nic_bandwidth")
                cfg.topology.nic_bandwidth = uint32_t(to_u64(kv));
            else if (kv.key == "link_buffer")
                cfg.topology.link_buffer = uint32_t(to_u64(kv));
            else
                throw ParseError("unknown topology key '" + kv.key + "'", line);
        } else if (section == "sim") {
            if (kv.key == "seed")
                cfg.sim.seed = to_u64(kv);
            else if (kv.key == "tick_duration_us")
                cfg.sim.tick_duration_us = to_f64(kv);
            else if (kv.key == "measurement_interval")
                cfg.sim.measurement_interval = to_u64(kv);
            else if (kv.key == "max_ticks")
                cfg.sim.max_ticks = to_u64(kv);
            else if (kv.key == "credit_return")
                cfg.sim.credit_return = to_u64(kv);
            else
                throw ParseError("unknown sim key '" + kv.key + "'", line);
        } else if (section == "routing") {
            if (kv.key == "policy") {
                if (kv.value == "minimal")
                    cfg.routing.policy.kind = RoutingPolicy::Kind::minimal_only;
                else if (kv.value == "nonminimal")
                    cfg.routing.policy.kind = RoutingPolicy::Kind::minimal_plus_nonminimal;
                else
                    throw ParseError("routing policy must be minimal|nonminimal", line);
            } else if (kv.key == "nonminimal_limit") {
                cfg.routing.policy.nonminimal_limit = uint32_t(to_u64(kv));
            } else {
                throw ParseError("unknown routing key '" + kv.key + "'", line);
            }
        } else if (section == "controller") {
            if (kv.key == "g_ewma")
                cfg.controller.ewma_gain = to_f64(kv);
            else if (kv.key == "line_rate")
                cfg.controller.line_rate = to_f64(kv);
            else if (kv.key == "min_rate_fraction")
                cfg.controller.min_rate_fraction = to_f64(kv);
            else if (kv.key == "resolution")
                cfg.controller.resolution = to_f64(kv);
            else
                throw ParseError("unknown controller key '" + kv.key + "'", line);
        } else if (section == "training") {
            if (kv.key == "pingpong_runs")
                cfg.training.pingpong_runs = uint32_t(to_u64(kv));
            else if (kv.key == "pingpong_exchanges")
                cfg.training.pingpong_exchanges = uint32_t(to_u64(kv));
            else if (kv.key == "pingpong_msg_size")
                cfg.training.pingpong_msg_size = uint32_t(to_u64(kv));
            else if (kv.key == "sensitivity_runs")
                cfg.training.sensitivity_runs = uint32_t(to_u64(kv));
            else if (kv.key == "congestion")
                cfg.training.congestion = congestion_schedule_from_string(kv.value);
            else if (kv.key == "congestion_levels")
                cfg.training.congestion_levels = uint32_t(to_u64(kv));
            else if (kv.key == "holdout_fraction")
                cfg.training.holdout_fraction = to_f64(kv);
            else if (kv.key == "congestor_pattern")
                cfg.training.congestor_pattern = traffic_pattern_from_string(kv.value);
            else if (kv.key == "congestor_nodes")
                cfg.training.congestor_nodes = uint32_t(to_u64(kv));
            else if (kv.key == "congestor_msg_size")
                cfg.training.congestor_msg_size = uint32_t(to_u64(kv));
            else if (kv.key == "congestor_gap_ticks")
                cfg.training.congestor_gap_ticks = to_u64(kv);
            else if (kv.key == "congestor_iterations")
                cfg.training.congestor_iterations = uint32_t(to_u64(kv));
            else
                throw ParseError("unknown training key '" + kv.key + "'", line);
        } else if (section == "compare") {
            if (kv.key == "policies") {
                cfg.compare.policies.clear();
                for (const std::string& name : split_list(kv.value))
                    cfg.compare.policies.push_back(rate_policy_from_string(name));
            } else if (kv.key == "allow_many_apps") {
                cfg.compare.allow_many_apps = to_bool(kv);
            } else {
                throw ParseError("unknown compare key '" + kv.key + "'", line);
            }
        } else if (section == "output") {
            if (kv.key == "dir")
                cfg.output.dir = kv.value;
            else
                throw ParseError("unknown output key '" + kv.key + "'", line);
        } else if (section == "app") {
            apply_app_key(cfg.apps.back(), kv);
        }
    }
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file " + path);
    return parse_config(in);
}

void print_config(std::ostream& out, const ExperimentConfig& c)
{
    out << "[topology]\n";
    out << "groups = " << c.topology.groups << '\n';
    out << "switches_per_group = " << c.topology.switches_per_group << '\n';
    out << "nodes_per_switch = " << c.topology.nodes_per_switch << '\n';
    out << "link_bandwidth = " << c.topology.link_bandwidth << '\n';
    out << "nic_bandwidth = " << c.topology.nic_bandwidth << '\n';
    out << "link_buffer = " << c.topology.link_buffer << '\n';
    out << '\n';
    out << "[sim]\n";
    out << "seed = " << c.sim.seed << '\n';
    out << "tick_duration_us = " << format_double(c.sim.tick_duration_us) << '\n';
    out << "measurement_interval = " << c.sim.measurement_interval << '\n';
    out << "max_ticks = " << c.sim.max_ticks << '\n';
    out << "credit_return = " << c.sim.credit_return << '\n';
    out << '\n';
    out << "[routing]\n";
    out << "policy = "
        << (c.routing.policy.kind == RoutingPolicy::Kind::minimal_only ? "minimal" : "nonminimal")
        << '\n';
    out << "nonminimal_limit = " << c.routing.policy.nonminimal_limit << '\n';
    out << '\n';
    out << "[controller]\n";
    out << "g_ewma = " << format_double(c.controller.ewma_gain) << '\n';
    out << "line_rate = " << format_double(c.controller.line_rate) << '\n';
    out << "min_rate_fraction = " << format_double(c.controller.min_rate_fraction) << '\n';
    out << "resolution = " << format_double(c.controller.resolution) << '\n';
    out << '\n';
    for (const AppSection& app : c.apps) {
        out << "[app " << app.spec.app << "]\n";
        out << "pattern = " << to_string(app.spec.pattern) << '\n';
        out << "nodes = " << app.spec.nodes << '\n';
        out << "msg_size_flits = " << app.spec.msg_size_flits << '\n';
        out << "compute_gap_ticks = " << app.spec.compute_gap_ticks << '\n';
        out << "iterations = " << app.spec.iterations << '\n';
        if (app.spec.planted_c) {
            out << "planted_c = " << format_double(*app.spec.planted_c) << '\n';
            out << "planted_k = " << format_double(app.spec.planted_k) << '\n';
        }
        out << "gap_jitter = " << (app.spec.gap_jitter ? "true" : "false") << '\n';
        if (app.placement.kind == PlacementSpec::Kind::random) {
            out << "placement = random\n";
        } else {
            out << "placement = fixed:";
            for (size_t i = 0; i < app.placement.fixed_nodes.size(); ++i)
                out << (i ? "," : "") << app.placement.fixed_nodes[i];
            out << '\n';
        }
        out << "policy = " << to_string(app.policy) << '\n';
        out << "sensitivity = " << format_double(app.sensitivity) << '\n';
        out << "rate_fraction = " << format_double(app.rate_fraction) << '\n';
        out << '\n';
    }
    out << "[training]\n";
    out << "pingpong_runs = " << c.training.pingpong_runs << '\n';
    out << "pingpong_exchanges = " << c.training.pingpong_exchanges << '\n';
    out << "pingpong_msg_size = " << c.training.pingpong_msg_size << '\n';
    out << "sensitivity_runs = " << c.training.sensitivity_runs << '\n';
    out << "congestion = " << to_string(c.training.congestion) << '\n';
    out << "congestion_levels = " << c.training.congestion_levels << '\n';
    out << "holdout_fraction = " << format_double(c.training.holdout_fraction) << '\n';
    out << "congestor_pattern = " << to_string(c.training.congestor_pattern) << '\n';
    out << "congestor_nodes = " << c.training.congestor_nodes << '\n';
    out << "congestor_msg_size = " << c.training.congestor_msg_size << '\n';
    out << "congestor_gap_ticks = " << c.training.congestor_gap_ticks << '\n';
    out << "congestor_iterations = " << c.training.congestor_iterations << '\n';
    out << '\n';
    out << "[compare]\n";
    out << "policies = ";
    for (size_t i = 0; i < c.compare.policies.size(); ++i)
        out << (i ? "," : "") << to_string(c.compare.policies[i]);
    out << '\n';
    out << "allow_many_apps = " << (c.compare.allow_many_apps ? "true" : "false") << '\n';
    out << '\n';
    out << "[output]\n";
    out << "dir = " << c.output.dir << '\n';
}

void validate_config(const ExperimentConfig& c)
{
    if (c.topology.groups == 0 || c.topology.switches_per_group == 0 ||
        c.topology.nodes_per_switch == 0)
        throw ConfigError("topology counts must be >= 1");
    if (c.topology.link_bandwidth == 0 || c.topology.nic_bandwidth == 0 ||
        c.topology.link_buffer == 0)
        throw ConfigError("link bandwidth and buffer must be > 0");
    if (c.sim.measurement_interval == 0 || c.sim.max_ticks == 0)
        throw ConfigError("sim intervals must be >= 1");
    if (c.controller.ewma_gain <= 0.0 || c.controller.ewma_gain >= 1.0)
        throw ConfigError("g_ewma must be in (0,1)");
    if (c.controller.line_rate <= 0.0)
        throw ConfigError("line_rate must be positive");
    if (c.controller.min_rate_fraction <= 0.0 || c.controller.min_rate_fraction > 1.0)
        throw ConfigError("min_rate_fraction must be in (0,1]");
    if (c.controller.resolution <= 0.0)
        throw ConfigError("resolution must be positive");
    if (c.training.holdout_fraction <= 0.0 || c.training.holdout_fraction >= 1.0)
        throw ConfigError("holdout_fraction must be in (0,1)");
    if (c.training.congestion == CongestionSchedule::random_levels &&
        c.training.congestion_levels < 2)
        throw ConfigError("random congestion needs at least 2 levels");
    if (c.compare.policies.empty())
        throw ConfigError("compare needs at least one policy");

    const uint64_t capacity =
        uint64_t(c.topology.groups) * c.topology.switches_per_group * c.topology.nodes_per_switch;

    std::set<std::string> names;
    uint64_t placed = 0;
    for (const AppSection& app : c.apps) {
        if (app.spec.app.empty())
            throw ConfigError("app id must not be empty");
        if (!names.insert(app.spec.app).second)
            throw ConfigError("duplicate app id '" + app.spec.app + "'");
        const uint32_t min_nodes = app.spec.pattern == TrafficPattern::incast ? 3 : 2;
        if (app.spec.nodes < min_nodes)
            throw ConfigError("app '" + app.spec.app + "' needs at least " +
                              std::to_string(min_nodes) + " nodes");
        if (app.spec.iterations == 0 || app.spec.msg_size_flits == 0)
            throw ConfigError("app '" + app.spec.app + "' has zero iterations or message size");
        if (app.sensitivity < 0.0)
            throw ConfigError("app '" + app.spec.app + "' has negative sensitivity");
        if (app.rate_fraction <= 0.0 || app.rate_fraction > 1.0)
            throw ConfigError("app '" + app.spec.app + "' rate_fraction must be in (0,1]");
        if (app.placement.kind == PlacementSpec::Kind::fixed) {
            if (app.placement.fixed_nodes.size() != app.spec.nodes)
                throw ConfigError("app '" + app.spec.app + "' fixed placement size mismatch");
            std::set<NodeId> unique(app.placement.fixed_nodes.begin(),
                                    app.placement.fixed_nodes.end());
            if (unique.size() != app.placement.fixed_nodes.size())
                throw ConfigError("app '" + app.spec.app + "' placement has duplicates");
            for (const NodeId n : app.placement.fixed_nodes)
                if (n >= capacity)
                    throw ConfigError("app '" + app.spec.app + "' places node " +
                                      std::to_string(n) + " outside the topology");
        }
        placed += app.spec.nodes;
    }
    if (placed > capacity)
        throw ConfigError("placements need " + std::to_string(placed) + " nodes but topology has " +
                          std::to_string(capacity));
    if (c.apps.size() > 2 && !c.compare.allow_many_apps)
        throw ConfigError("more than two concurrent apps; set allow_many_apps = true");
}

Topology build_topology(const ExperimentConfig& config)
{
    LinkParams params;
    params.bandwidth_flits_per_tick = config.topology.link_bandwidth;
    params.buffer_capacity_flits = config.topology.link_buffer;
    Topology topo = build_dragonfly(config.topology.groups, config.topology.switches_per_group,
                                    config.topology.nodes_per_switch, params);
    // NIC links run at their own rate; buffers track the bandwidth so queueing
    // shows up as credit stalls rather than silent occupancy
    const uint32_t ratio =
        std::max(1u, config.topology.link_buffer / std::max(1u, config.topology.link_bandwidth));
    for (Link& l : topo.links)
        if (l.kind == LinkKind::nic_injection || l.kind == LinkKind::nic_ejection) {
            l.bandwidth_flits_per_tick = config.topology.nic_bandwidth;
            l.buffer_capacity_flits = ratio * config.topology.nic_bandwidth;
        }
    return topo;
}

// ---------------------------------------------------------------------------
// schedule runner

namespace {

uint64_t mix_seed(uint64_t seed, uint64_t salt)
{
    uint64_t z = seed + 0x9E3779B97F4A7C15ull * (salt + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

struct PathCache {
    const Topology& topo;
    const RoutingPolicy& policy;
    std::map<std::pair<NodeId, NodeId>, PathSet> cache;

    const PathSet& get(NodeId src, NodeId dst)
    {
        const auto key = std::make_pair(src, dst);
        auto it = cache.find(key);
        if (it == cache.end())
            it = cache.emplace(key, enumerate_paths(topo, src, dst, policy)).first;
        return it->second;
    }
};

struct NodeController {
    RateControllerState state;
    DelayPlan plan;
    std::mt19937_64 rng;
    Tick last_send = 0; // sends from one node are serialized, delays chain
};

} // namespace

RunOutcome run_apps(const Topology& topo, const SimConfig& sim_config,
                    const RoutingPolicy& routing, const ControllerSection& controller,
                    const std::vector<AppRun>& apps, uint64_t run_seed)
{
    Simulator sim(topo, sim_config);
    PathCache paths{topo, routing, {}};

    RunOutcome outcome;
    outcome.apps.resize(apps.size());

    struct MsgState {
        uint32_t deps_remaining = 0;
        bool done = false;
    };
    struct NodeSendQueue {
        std::deque<std::pair<uint64_t, Tick>> fifo; // (msg index, ready tick)
        bool head_scheduled = false;
    };
    std::vector<std::vector<MsgState>> msg_state(apps.size());
    std::vector<std::vector<std::vector<uint64_t>>> dependents(apps.size());
    std::vector<std::map<NodeId, NodeController>> controllers(apps.size());
    std::vector<std::map<NodeId, NodeSendQueue>> send_queues(apps.size());
    std::vector<double> perceived_sum(apps.size(), 0.0);
    uint64_t remaining = 0;

    // (issue tick, app, msg): pending injections in deterministic order
    using HeapItem = std::tuple<Tick, size_t, uint64_t>;
    std::priority_queue<HeapItem, std::vector<HeapItem>, std::greater<>> due;
    std::unordered_map<uint64_t, std::pair<size_t, uint64_t>> by_sim_id;

    for (size_t ai = 0; ai < apps.size(); ++ai) {
        const AppRun& app = apps[ai];
        AppOutcome& result = outcome.apps[ai];
        result.app = app.spec.app;
        result.trace = generate_trace(app.spec, app.placement, mix_seed(run_seed, ai));
        result.timings.resize(result.trace.messages.size());
        msg_state[ai].resize(result.trace.messages.size());
        dependents[ai].resize(result.trace.messages.size());
        for (uint64_t mi = 0; mi < result.trace.messages.size(); ++mi) {
            const TraceMessage& m = result.trace.messages[mi];
            msg_state[ai][mi].deps_remaining = uint32_t(m.deps.size());
            for (const uint64_t dep : m.deps)
                dependents[ai][dep].push_back(mi);
        }
        remaining += result.trace.messages.size();

        for (const NodeId node : app.placement) {
            NodeController nc;
            nc.state = make_rate_controller(app.policy, controller.line_rate,
                                            topo.links[topo.injection_link(node)]
                                                .bandwidth_flits_per_tick,
                                            app.sensitivity, controller.ewma_gain,
                                            controller.min_rate_fraction);
            nc.state.rate = app.rate_fraction * controller.line_rate;
            nc.plan = make_delay_plan(
                injection_delay(nc.state.line_rate, nc.state.rate, nc.state.nic_bandwidth),
                controller.resolution);
            nc.rng.seed(mix_seed(run_seed, (ai << 32) ^ node));
            controllers[ai].emplace(node, std::move(nc));
        }
    }

    // one send in flight per (app, node): the delay between consecutive sends
    // is drawn when a message reaches the head of its node's send chain, so a
    // rate change takes effect on the very next send
    auto schedule_head = [&](size_t ai, NodeId node) {
        NodeSendQueue& q = send_queues[ai][node];
        if (q.head_scheduled || q.fifo.empty())
            return;
        const auto [mi, ready] = q.fifo.front();
        NodeController& nc = controllers[ai].at(node);
        const double delay = draw(nc.plan, nc.rng);
        const Tick start = std::max({ready, nc.last_send, sim.now()});
        due.emplace(start + Tick(std::llround(delay)), ai, mi);
        q.head_scheduled = true;
    };

    auto enqueue_send = [&](size_t ai, uint64_t mi, Tick dep_done) {
        const TraceMessage& m = outcome.apps[ai].trace.messages[mi];
        const Tick ready = dep_done + m.gap_after_deps;
        outcome.apps[ai].timings[mi].ready_tick = ready;
        send_queues[ai][m.src].fifo.emplace_back(mi, ready);
        schedule_head(ai, m.src);
    };

    for (size_t ai = 0; ai < apps.size(); ++ai)
        for (uint64_t mi = 0; mi < outcome.apps[ai].trace.messages.size(); ++mi)
            if (msg_state[ai][mi].deps_remaining == 0)
                enqueue_send(ai, mi, 0);

    auto process_snapshot = [&](const CounterSnapshot& snap) {
        for (size_t ai = 0; ai < apps.size(); ++ai) {
            for (auto& [node, nc] : controllers[ai]) {
                update_alpha(nc.state, nic2hsn_signal(snap, node));
                update_rate(nc.state);
                nc.plan = make_delay_plan(
                    injection_delay(nc.state.line_rate, nc.state.rate, nc.state.nic_bandwidth),
                    controller.resolution);
                outcome.controller_log.push_back({snap.interval_index, apps[ai].spec.app, node,
                                                  nc.state.alpha, nc.state.rate,
                                                  apps[ai].policy});
            }
        }
        outcome.snapshots.push_back(snap);
    };

    while (remaining > 0) {
        if (sim.now() >= sim_config.max_ticks)
            throw std::runtime_error("run_apps: horizon " + std::to_string(sim_config.max_ticks) +
                                     " reached with " + std::to_string(remaining) +
                                     " undelivered messages; raise max_ticks");

        while (!due.empty() && std::get<0>(due.top()) <= sim.now()) {
            const auto [issue, ai, mi] = due.top();
            due.pop();
            const TraceMessage& m = outcome.apps[ai].trace.messages[mi];
            const Tick when = std::max(issue, sim.now());
            const uint64_t id = sim.inject_message(
                make_message(apps[ai].spec.app, m.src, m.dst, m.size_flits, when),
                paths.get(m.src, m.dst));
            outcome.apps[ai].timings[mi].issue_tick = when;
            by_sim_id.emplace(id, std::make_pair(ai, mi));
            NodeController& nc = controllers[ai].at(m.src);
            nc.last_send = when;
            NodeSendQueue& q = send_queues[ai][m.src];
            q.fifo.pop_front();
            q.head_scheduled = false;
            schedule_head(ai, m.src);
        }

        sim.step();

        for (const DeliveryRecord& rec : sim.drain_delivery_records()) {
            const auto [ai, mi] = by_sim_id.at(rec.message_id);
            MessageTiming& t = outcome.apps[ai].timings[mi];
            t.first_flit_tick = rec.first_flit_tick;
            t.last_flit_tick = rec.last_flit_tick;
            msg_state[ai][mi].done = true;
            outcome.apps[ai].makespan = std::max(outcome.apps[ai].makespan, rec.last_flit_tick);
            perceived_sum[ai] += double(rec.last_flit_tick) - double(t.ready_tick);
            --remaining;
            for (const uint64_t dep : dependents[ai][mi])
                if (--msg_state[ai][dep].deps_remaining == 0)
                    enqueue_send(ai, dep, rec.last_flit_tick);
        }

        for (const CounterSnapshot& snap : sim.drain_snapshots())
            process_snapshot(snap);
    }

    // close the final measurement interval so temporal aggregation covers the
    // whole lifespan
    const Tick tm = sim_config.measurement_interval_ticks;
    const Tick boundary = ((sim.now() + tm - 1) / tm) * tm;
    if (boundary > sim.now() && boundary <= sim_config.max_ticks)
        sim.run_until(boundary);
    for (const CounterSnapshot& snap : sim.drain_snapshots())
        process_snapshot(snap);

    if (!sim.flits_conserved())
        throw std::logic_error("run_apps: flit conservation violated");

    for (size_t ai = 0; ai < apps.size(); ++ai) {
        AppOutcome& result = outcome.apps[ai];
        const size_t n = result.trace.messages.size();
        result.mean_perceived_delay = n ? perceived_sum[ai] / double(n) : 0.0;
        if (apps[ai].spec.planted_c)
            result.measured_runtime =
                apps[ai].spec.planted_k + *apps[ai].spec.planted_c * result.mean_perceived_delay;
        else
            result.measured_runtime = double(result.makespan);
    }
    return outcome;
}

void write_controller_log(std::ostream& out, const std::vector<ControllerLogEntry>& log)
{
    for (const ControllerLogEntry& e : log) {
        nlohmann::ordered_json j;
        j["window"] = e.window;
        j["app_id"] = e.app;
        j["node_id"] = e.node;
        j["alpha"] = e.alpha;
        j["rate"] = e.rate;
        j["policy"] = to_string(e.policy);
        out << j.dump() << '\n';
    }
}

// ---------------------------------------------------------------------------
// training protocols

namespace {

double congestion_level(CongestionSchedule schedule, uint32_t levels, uint32_t run,
                        std::mt19937_64& rng)
{
    switch (schedule) {
    case CongestionSchedule::none:
        return 0.0;
    case CongestionSchedule::two_extreme:
        return run % 2 == 0 ? 0.0 : 1.0;
    case CongestionSchedule::random_levels: {
        std::uniform_int_distribution<uint32_t> pick(0, levels - 1);
        return double(pick(rng)) / double(levels - 1);
    }
    }
    return 0.0;
}

std::vector<NodeId> random_nodes(std::vector<NodeId> pool, size_t count, std::mt19937_64& rng)
{
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(count);
    return pool;
}

std::optional<AppRun> training_congestor(const ExperimentConfig& config,
                                         const std::vector<NodeId>& busy, double level,
                                         std::mt19937_64& rng,
                                         std::optional<SwitchId> near_switch = std::nullopt)
{
    if (level <= 0.0)
        return std::nullopt;
    const uint64_t capacity = uint64_t(config.topology.groups) *
                              config.topology.switches_per_group * config.topology.nodes_per_switch;
    std::vector<NodeId> pool;
    for (NodeId n = 0; n < capacity; ++n)
        if (std::find(busy.begin(), busy.end(), n) == busy.end())
            pool.push_back(n);
    const uint32_t min_nodes =
        config.training.congestor_pattern == TrafficPattern::incast ? 3 : 2;
    const size_t nodes = std::min<size_t>(config.training.congestor_nodes, pool.size());
    if (nodes < min_nodes)
        return std::nullopt;

    AppRun congestor;
    congestor.spec.app = "trainer-congestor";
    congestor.spec.pattern = config.training.congestor_pattern;
    congestor.spec.nodes = uint32_t(nodes);
    congestor.spec.msg_size_flits = config.training.congestor_msg_size;
    congestor.spec.compute_gap_ticks = config.training.congestor_gap_ticks;
    congestor.spec.iterations = config.training.congestor_iterations;
    congestor.placement = random_nodes(pool, nodes, rng);
    // adverse-scenario placement: pull a node from the requested switch to the
    // front so an incast sink (rank 0) lands next to the app under test
    if (near_switch) {
        const uint32_t per_switch = config.topology.nodes_per_switch;
        for (size_t i = 0; i < congestor.placement.size(); ++i) {
            if (congestor.placement[i] / per_switch == *near_switch) {
                std::swap(congestor.placement[0], congestor.placement[i]);
                break;
            }
        }
    }
    congestor.policy = RatePolicy::static_rate;
    congestor.rate_fraction = level;
    return congestor;
}

} // namespace

LatencyTrainingResult train_latency_models(const ExperimentConfig& config)
{
    validate_config(config);
    const Topology topo = build_topology(config);
    SimConfig sim_config;
    sim_config.seed = config.sim.seed;
    sim_config.tick_duration_us = config.sim.tick_duration_us;
    sim_config.measurement_interval_ticks = config.sim.measurement_interval;
    sim_config.max_ticks = config.sim.max_ticks;
    sim_config.credit_return_ticks = config.sim.credit_return;

    if (config.training.pingpong_runs == 0)
        throw FitError("train_latency_models: zero pingpong runs configured");

    // group node pairs by path-set shape so every shape class gets samples
    std::map<std::string, std::vector<std::pair<NodeId, NodeId>>> classes;
    for (NodeId a = 0; a < topo.node_count(); ++a)
        for (NodeId b = a + 1; b < topo.node_count(); ++b) {
            const PathShape shape = PathShape::of(enumerate_paths(topo, a, b, config.routing.policy));
            classes[shape.to_string()].push_back({a, b});
        }
    std::vector<std::string> class_keys;
    for (const auto& [key, pairs] : classes) {
        (void)pairs;
        class_keys.push_back(key);
    }

    struct ShapeSamples {
        PathShape shape;
        std::vector<Eigen::VectorXd> rows;
        std::vector<double> labels;
        uint64_t saturation_events = 0;
    };
    std::map<std::string, ShapeSamples> samples;

    std::mt19937_64 rng(mix_seed(config.sim.seed, 0x70696e67));
    const Tick tm = config.sim.measurement_interval;

    for (uint32_t run = 0; run < config.training.pingpong_runs; ++run) {
        const std::string& cls = class_keys[run % class_keys.size()];
        const auto& pairs = classes.at(cls);
        const auto [a, b] = pairs[rng() % pairs.size()];

        AppRun pingpong;
        pingpong.spec.app = "pingpong";
        pingpong.spec.pattern = TrafficPattern::pingpong;
        pingpong.spec.nodes = 2;
        pingpong.spec.msg_size_flits = config.training.pingpong_msg_size;
        pingpong.spec.compute_gap_ticks = 0;
        pingpong.spec.iterations = config.training.pingpong_exchanges;
        pingpong.placement = {a, b};
        pingpong.policy = RatePolicy::static_rate;

        const double level =
            congestion_level(config.training.congestion, config.training.congestion_levels,
                             run, rng);
        std::vector<AppRun> runs{pingpong};
        if (auto congestor = training_congestor(config, pingpong.placement, level, rng))
            runs.push_back(std::move(*congestor));

        const RunOutcome outcome = run_apps(topo, sim_config, config.routing.policy,
                                            config.controller, runs, mix_seed(config.sim.seed, run));

        const PathSet forward = enumerate_paths(topo, a, b, config.routing.policy);
        const PathSet reverse = enumerate_paths(topo, b, a, config.routing.policy);
        const PathShape shape = PathShape::of(forward);
        auto& bucket = samples[shape.to_string()];
        bucket.shape = shape;

        // one label per measurement interval: the mean RTT of the exchanges
        // whose request was issued in that interval
        const AppOutcome& pp = outcome.apps[0];
        std::map<uint64_t, std::pair<double, uint64_t>> rtt_by_interval;
        for (size_t mi = 0; mi + 1 < pp.timings.size(); mi += 2) {
            const MessageTiming& request = pp.timings[mi];
            const MessageTiming& reply = pp.timings[mi + 1];
            const uint64_t interval = request.issue_tick / tm;
            auto& acc = rtt_by_interval[interval];
            acc.first += double(reply.last_flit_tick) - double(request.issue_tick);
            acc.second += 1;
        }
        for (const CounterSnapshot& snap : outcome.snapshots) {
            const auto it = rtt_by_interval.find(snap.interval_index);
            if (it == rtt_by_interval.end() || it->second.second == 0)
                continue;
            bucket.rows.push_back(
                rtt_features(forward, reverse, snap, &bucket.saturation_events));
            bucket.labels.push_back(it->second.first / double(it->second.second));
        }
    }

    LatencyTrainingResult result;
    result.runs = config.training.pingpong_runs;
    std::vector<double> holdout_pred, holdout_label;
    for (auto& [key, bucket] : samples) {
        (void)key;
        const size_t n = bucket.rows.size();
        if (n == 0)
            continue;
        const size_t width = size_t(bucket.rows.front().size());
        // interleaved split keeps train and holdout on the same congestion mix
        const size_t stride = std::max<size_t>(2, size_t(1.0 / config.training.holdout_fraction));
        std::vector<size_t> train_idx, holdout_idx;
        for (size_t i = 0; i < n; ++i)
            (i % stride == stride - 1 ? holdout_idx : train_idx).push_back(i);
        if (holdout_idx.empty() || train_idx.size() < width)
            throw FitError("train_latency_models: shape " + bucket.shape.to_string() + " has " +
                           std::to_string(n) + " samples for " + std::to_string(width) +
                           " coefficients; add pingpong runs");
        const size_t train_n = train_idx.size();

        Eigen::MatrixXd rows(train_n, width);
        Eigen::VectorXd labels(train_n);
        for (size_t i = 0; i < train_n; ++i) {
            rows.row(i) = bucket.rows[train_idx[i]];
            labels[i] = bucket.labels[train_idx[i]];
        }

        // path classes that share no fabric links (same-switch pairs) never
        // see congestion: their queuing-delay features are constant and the
        // honest model is the plain mean round-trip time
        const bool features_constant =
            (rows.rowwise() - rows.row(0)).cwiseAbs().maxCoeff() < 1e-12;
        LatencyModel model;
        if (features_constant) {
            model.shape = bucket.shape;
            model.coefficients = Eigen::VectorXd::Zero(width);
            model.coefficients[width - 1] = labels.mean() / 2.0; // one-way share
            model.feature_cap = rows.maxCoeff() / 2.0;
            model.training.residual_norm = (labels.array() - labels.mean()).matrix().norm();
            model.training.pearson_r = 0.0;
            model.training.n_samples = train_n;
            model.training.rank = 1;
        } else {
            model = fit_latency_model(rows, labels, bucket.shape);
        }
        model.training.saturation_events = bucket.saturation_events;
        for (const size_t i : holdout_idx) {
            holdout_pred.push_back(predict_rtt(model, bucket.rows[i]));
            holdout_label.push_back(bucket.labels[i]);
        }
        result.models.models.push_back(std::move(model));
        result.train_samples += train_n;
    }
    if (result.models.models.empty())
        throw FitError("train_latency_models: no usable training samples");
    result.holdout_samples = holdout_pred.size();
    if (holdout_pred.size() >= 2)
        result.holdout_pearson_r = pearson_correlation(holdout_pred, holdout_label);
    return result;
}

namespace {

double infer_expected_delivery(const Topology& topo, const ExperimentConfig& config,
                               const LatencyModelSet& models, const AppSection& app,
                               const std::vector<NodeId>& placement, const RunOutcome& outcome,
                               const AppOutcome& app_outcome)
{
    MessageParams params;
    params.size_flits = double(app.spec.msg_size_flits);
    params.nic_bandwidth = double(config.topology.nic_bandwidth);

    std::vector<double> spatial_series;
    for (const CounterSnapshot& snap : outcome.snapshots)
        spatial_series.push_back(spatial_aggregate(models, topo, placement, snap, params,
                                                   config.routing.policy));
    const Tick tm = config.sim.measurement_interval;
    const uint64_t lifespan =
        std::min<uint64_t>(spatial_series.size(), (app_outcome.makespan + tm - 1) / tm);
    return temporal_aggregate(spatial_series, std::max<uint64_t>(1, lifespan));
}

} // namespace

SensitivityResult fit_sensitivity(const ExperimentConfig& config, const AppSection& app,
                                  const LatencyModelSet& models)
{
    validate_config(config);
    if (config.training.sensitivity_runs == 0)
        throw FitError("fit_sensitivity: zero training runs configured");
    const Topology topo = build_topology(config);
    SimConfig sim_config;
    sim_config.seed = config.sim.seed;
    sim_config.tick_duration_us = config.sim.tick_duration_us;
    sim_config.measurement_interval_ticks = config.sim.measurement_interval;
    sim_config.max_ticks = config.sim.max_ticks;
    sim_config.credit_return_ticks = config.sim.credit_return;

    std::mt19937_64 rng(mix_seed(config.sim.seed, 0x73656e73));
    std::vector<NodeId> all_nodes(topo.node_count());
    for (NodeId n = 0; n < topo.node_count(); ++n)
        all_nodes[n] = n;

    SensitivityResult result;
    for (uint32_t run = 0; run < config.training.sensitivity_runs; ++run) {
        AppRun subject;
        subject.spec = app.spec;
        subject.policy = RatePolicy::static_rate; // training measures the natural response
        subject.placement = app.placement.kind == PlacementSpec::Kind::fixed
                                ? app.placement.fixed_nodes
                                : random_nodes(all_nodes, app.spec.nodes, rng);

        const double level =
            congestion_level(config.training.congestion, config.training.congestion_levels,
                             run, rng);
        std::vector<AppRun> runs{subject};
        // synthetic congestion aims at the app: an incast sink lands on one of
        // the subject's switches so the adverse scenario actually reaches it
        const uint32_t per_switch = config.topology.nodes_per_switch;
        const SwitchId target =
            subject.placement[rng() % subject.placement.size()] / per_switch;
        if (auto congestor = training_congestor(config, subject.placement, level, rng, target))
            runs.push_back(std::move(*congestor));

        const RunOutcome outcome =
            run_apps(topo, sim_config, config.routing.policy, config.controller, runs,
                     mix_seed(config.sim.seed, 0x100 + run));

        RunObservation obs;
        obs.app = app.spec.app;
        obs.placement = subject.placement;
        obs.expected_delivery = infer_expected_delivery(topo, config, models, app,
                                                        subject.placement, outcome,
                                                        outcome.apps[0]);
        obs.runtime = outcome.apps[0].measured_runtime;
        result.observations.push_back(std::move(obs));

        if (result.observations.size() >= 2) {
            try {
                result.convergence.push_back(
                    fit_delay_sensitivity(result.observations).sensitivity);
            } catch (const FitError&) {
                result.convergence.push_back(std::numeric_limits<double>::quiet_NaN());
            }
        }
    }

    result.model = fit_delay_sensitivity(result.observations);
    return result;
}

// ---------------------------------------------------------------------------
// experiments

Percentiles percentiles_of(std::vector<double> values)
{
    Percentiles p;
    if (values.empty())
        return p;
    std::sort(values.begin(), values.end());
    auto at = [&](double q) {
        const size_t rank = size_t(std::ceil(q * double(values.size())));
        return values[std::min(values.size() - 1, rank == 0 ? 0 : rank - 1)];
    };
    p.p50 = at(0.50);
    p.p90 = at(0.90);
    p.p99 = at(0.99);
    return p;
}

namespace {

std::vector<std::vector<NodeId>> assign_placements(const ExperimentConfig& config,
                                                   const Topology& topo)
{
    std::vector<std::vector<NodeId>> placements(config.apps.size());
    std::set<NodeId> taken;
    for (size_t i = 0; i < config.apps.size(); ++i) {
        const AppSection& app = config.apps[i];
        if (app.placement.kind == PlacementSpec::Kind::fixed) {
            for (const NodeId n : app.placement.fixed_nodes)
                if (!taken.insert(n).second)
                    throw ConfigError("fixed placements overlap on node " + std::to_string(n));
            placements[i] = app.placement.fixed_nodes;
        }
    }
    std::vector<NodeId> pool;
    for (NodeId n = 0; n < topo.node_count(); ++n)
        if (!taken.count(n))
            pool.push_back(n);
    std::mt19937_64 rng(mix_seed(config.sim.seed, 0x706c6163));
    std::shuffle(pool.begin(), pool.end(), rng);
    size_t cursor = 0;
    for (size_t i = 0; i < config.apps.size(); ++i) {
        if (config.apps[i].placement.kind == PlacementSpec::Kind::fixed)
            continue;
        const uint32_t need = config.apps[i].spec.nodes;
        if (cursor + need > pool.size())
            throw ConfigError("not enough free nodes for app '" + config.apps[i].spec.app + "'");
        placements[i].assign(pool.begin() + cursor, pool.begin() + cursor + need);
        std::sort(placements[i].begin(), placements[i].end());
        cursor += need;
    }
    return placements;
}

struct IntervalStats {
    std::vector<double> latency;
    std::vector<double> traffic;
};

IntervalStats interval_stats(const Topology& topo, const ExperimentConfig& config,
                             const RunOutcome& outcome)
{
    const Tick tm = config.sim.measurement_interval;
    std::map<uint64_t, std::pair<double, uint64_t>> latency_acc;
    for (const AppOutcome& app : outcome.apps) {
        for (const MessageTiming& t : app.timings) {
            const uint64_t interval = t.first_flit_tick / tm;
            auto& acc = latency_acc[interval];
            acc.first += double(t.first_flit_tick) - double(t.issue_tick);
            acc.second += 1;
        }
    }
    IntervalStats stats;
    for (const auto& [interval, acc] : latency_acc) {
        (void)interval;
        stats.latency.push_back(acc.first / double(acc.second));
    }
    const double interval_seconds = double(tm) * config.sim.tick_duration_us / 1e6;
    for (const CounterSnapshot& snap : outcome.snapshots) {
        uint64_t injected = 0;
        for (const auto& lc : snap.per_link)
            if (topo.links[lc.link].kind == LinkKind::nic_injection)
                injected += lc.flits_forwarded;
        stats.traffic.push_back(double(injected) / interval_seconds);
    }
    return stats;
}

} // namespace

ExperimentReport run_experiment(const ExperimentConfig& config)
{
    validate_config(config);
    for (const RatePolicy p : config.compare.policies)
        (void)p; // validated by parse; unknown names never reach here

    const Topology topo = build_topology(config);
    SimConfig sim_config;
    sim_config.seed = config.sim.seed;
    sim_config.tick_duration_us = config.sim.tick_duration_us;
    sim_config.measurement_interval_ticks = config.sim.measurement_interval;
    sim_config.max_ticks = config.sim.max_ticks;
    sim_config.credit_return_ticks = config.sim.credit_return;

    const auto placements = assign_placements(config, topo);

    ExperimentReport report;
    report.seed = config.sim.seed;
    report.tick_duration_us = config.sim.tick_duration_us;
    report.apps.resize(config.apps.size());

    // isolated baselines: each app alone, full static rate
    for (size_t i = 0; i < config.apps.size(); ++i) {
        AppRun solo;
        solo.spec = config.apps[i].spec;
        solo.placement = placements[i];
        solo.policy = RatePolicy::static_rate;
        solo.rate_fraction = 1.0;
        const RunOutcome outcome = run_apps(topo, sim_config, config.routing.policy,
                                            config.controller, {solo},
                                            mix_seed(config.sim.seed, 0x62617365 + i));
        ReportApp& ra = report.apps[i];
        ra.app = config.apps[i].spec.app;
        ra.nodes = config.apps[i].spec.nodes;
        ra.placement = placements[i];
        ra.baseline_runtime = outcome.apps[0].measured_runtime;
    }

    // mixed workload once per policy
    for (const RatePolicy policy : config.compare.policies) {
        std::vector<AppRun> runs;
        for (size_t i = 0; i < config.apps.size(); ++i) {
            AppRun r;
            r.spec = config.apps[i].spec;
            r.placement = placements[i];
            r.policy = policy;
            r.sensitivity = config.apps[i].sensitivity;
            r.rate_fraction = policy == RatePolicy::static_rate ? 1.0
                                                                : config.apps[i].rate_fraction;
            runs.push_back(std::move(r));
        }
        const RunOutcome outcome = run_apps(topo, sim_config, config.routing.policy,
                                            config.controller, runs,
                                            mix_seed(config.sim.seed, 0x6d697800 + uint64_t(policy)));

        const std::string policy_name = to_string(policy);
        report.policies.push_back(policy_name);

        PolicyNetworkStats net;
        const IntervalStats stats = interval_stats(topo, config, outcome);
        net.interval_latency = stats.latency;
        net.interval_traffic = stats.traffic;
        net.latency = percentiles_of(stats.latency);
        net.traffic = percentiles_of(stats.traffic);

        for (size_t i = 0; i < config.apps.size(); ++i) {
            PolicyAppResult res;
            res.runtime = outcome.apps[i].measured_runtime;
            res.pct_increase = report.apps[i].baseline_runtime > 0.0
                                   ? 100.0 * (res.runtime - report.apps[i].baseline_runtime) /
                                         report.apps[i].baseline_runtime
                                   : 0.0;
            report.apps[i].per_policy[policy_name] = res;
            net.node_seconds += double(config.apps[i].spec.nodes) * res.runtime *
                                config.sim.tick_duration_us / 1e6;
        }
        report.network[policy_name] = net;
        for (const ControllerLogEntry& e : outcome.controller_log)
            report.controller_log.push_back(e);
    }
    return report;
}

// ---------------------------------------------------------------------------
// report serialization and rendering

namespace {

nlohmann::ordered_json percentiles_json(const Percentiles& p)
{
    nlohmann::ordered_json j;
    j["p50"] = p.p50;
    j["p90"] = p.p90;
    j["p99"] = p.p99;
    return j;
}

Percentiles percentiles_from_json(const nlohmann::json& j)
{
    Percentiles p;
    p.p50 = j.at("p50").get<double>();
    p.p90 = j.at("p90").get<double>();
    p.p99 = j.at("p99").get<double>();
    return p;
}

} // namespace

void write_report(std::ostream& out, const ExperimentReport& report)
{
    nlohmann::ordered_json j;
    j["seed"] = report.seed;
    j["tick_duration_us"] = report.tick_duration_us;
    j["policies"] = report.policies;
    j["apps"] = nlohmann::ordered_json::array();
    for (const ReportApp& app : report.apps) {
        nlohmann::ordered_json a;
        a["app"] = app.app;
        a["nodes"] = app.nodes;
        a["placement"] = app.placement;
        a["baseline_runtime"] = app.baseline_runtime;
        a["policies"] = nlohmann::ordered_json::object();
        for (const auto& [name, res] : app.per_policy) {
            nlohmann::ordered_json r;
            r["runtime"] = res.runtime;
            r["pct_increase"] = res.pct_increase;
            a["policies"][name] = r;
        }
        j["apps"].push_back(a);
    }
    j["network"] = nlohmann::ordered_json::object();
    for (const auto& [name, net] : report.network) {
        nlohmann::ordered_json n;
        n["node_seconds"] = net.node_seconds;
        n["latency_percentiles"] = percentiles_json(net.latency);
        n["traffic_percentiles"] = percentiles_json(net.traffic);
        n["interval_latency"] = net.interval_latency;
        n["interval_traffic"] = net.interval_traffic;
        j["network"][name] = n;
    }
    j["controller_log"] = nlohmann::ordered_json::array();
    for (const ControllerLogEntry& e : report.controller_log) {
        nlohmann::ordered_json c;
        c["window"] = e.window;
        c["app_id"] = e.app;
        c["node_id"] = e.node;
        c["alpha"] = e.alpha;
        c["rate"] = e.rate;
        c["policy"] = to_string(e.policy);
        j["controller_log"].push_back(c);
    }
    out << j.dump(2) << '\n';
}

ExperimentReport read_report(std::istream& in)
{
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("bad report json: ") + e.what());
    }
    ExperimentReport report;
    try {
        report.seed = j.at("seed").get<uint64_t>();
        report.tick_duration_us = j.at("tick_duration_us").get<double>();
        report.policies = j.at("policies").get<std::vector<std::string>>();
        for (const auto& a : j.at("apps")) {
            ReportApp app;
            app.app = a.at("app").get<std::string>();
            app.nodes = a.at("nodes").get<uint32_t>();
            app.placement = a.at("placement").get<std::vector<NodeId>>();
            app.baseline_runtime = a.at("baseline_runtime").get<double>();
            for (const auto& [name, r] : a.at("policies").items()) {
                PolicyAppResult res;
                res.runtime = r.at("runtime").get<double>();
                res.pct_increase = r.at("pct_increase").get<double>();
                app.per_policy[name] = res;
            }
            report.apps.push_back(std::move(app));
        }
        for (const auto& [name, n] : j.at("network").items()) {
            PolicyNetworkStats net;
            net.node_seconds = n.at("node_seconds").get<double>();
            net.latency = percentiles_from_json(n.at("latency_percentiles"));
            net.traffic = percentiles_from_json(n.at("traffic_percentiles"));
            net.interval_latency = n.at("interval_latency").get<std::vector<double>>();
            net.interval_traffic = n.at("interval_traffic").get<std::vector<double>>();
            report.network[name] = std::move(net);
        }
        for (const auto& c : j.at("controller_log")) {
            ControllerLogEntry e;
            e.window = c.at("window").get<uint64_t>();
            e.app = c.at("app_id").get<std::string>();
            e.node = c.at("node_id").get<NodeId>();
            e.alpha = c.at("alpha").get<double>();
            e.rate = c.at("rate").get<double>();
            e.policy = rate_policy_from_string(c.at("policy").get<std::string>());
            report.controller_log.push_back(e);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("report schema mismatch: ") + e.what());
    }
    return report;
}

ExperimentReport read_report_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open report " + path);
    return read_report(in);
}

void render_reports(std::ostream& out, const std::vector<ExperimentReport>& reports,
                    ReportFormat format)
{
    if (format == ReportFormat::csv) {
        out << "seed,app,policy,baseline_runtime,runtime,pct_increase,node_seconds,"
               "lat_p50,lat_p90,lat_p99,traffic_p50,traffic_p90,traffic_p99\n";
        for (const ExperimentReport& rep : reports) {
            for (const ReportApp& app : rep.apps) {
                for (const std::string& policy : rep.policies) {
                    const auto res = app.per_policy.at(policy);
                    const auto& net = rep.network.at(policy);
                    out << rep.seed << ',' << app.app << ',' << policy << ','
                        << format_double(app.baseline_runtime) << ','
                        << format_double(res.runtime) << ',' << format_double(res.pct_increase)
                        << ',' << format_double(net.node_seconds) << ','
                        << format_double(net.latency.p50) << ',' << format_double(net.latency.p90)
                        << ',' << format_double(net.latency.p99) << ','
                        << format_double(net.traffic.p50) << ',' << format_double(net.traffic.p90)
                        << ',' << format_double(net.traffic.p99) << '\n';
                }
            }
        }
        return;
    }

    for (const ExperimentReport& rep : reports) {
        out << "experiment seed " << rep.seed << "\n";
        out << "  app            policy     baseline      runtime   increase%\n";
        char buf[160];
        for (const ReportApp& app : rep.apps) {
            for (const std::string& policy : rep.policies) {
                const auto res = app.per_policy.at(policy);
                std::snprintf(buf, sizeof(buf), "  %-14s %-9s %12.1f %12.1f %10.2f\n",
                              app.app.c_str(), policy.c_str(), app.baseline_runtime, res.runtime,
                              res.pct_increase);
                out << buf;
            }
        }
        out << "  policy     node_seconds     lat_p50     lat_p90     lat_p99  traffic_p50\n";
        for (const std::string& policy : rep.policies) {
            const auto& net = rep.network.at(policy);
            std::snprintf(buf, sizeof(buf), "  %-9s %13.6f %11.2f %11.2f %11.2f %12.0f\n",
                          policy.c_str(), net.node_seconds, net.latency.p50, net.latency.p90,
                          net.latency.p99, net.traffic.p50);
            out << buf;
        }
        out << '\n';
    }
}

} // namespace netscope
