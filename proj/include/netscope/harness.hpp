// SPDX-License-Identifier: Apache-2.0
#ifndef NETSCOPE_HARNESS_HPP
#define NETSCOPE_HARNESS_HPP

#include "netscope/inference.hpp"
#include "netscope/mitigation.hpp"
#include "netscope/netsim.hpp"
#include "netscope/telemetry.hpp"
#include "netscope/topology.hpp"
#include "netscope/workload.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace netscope {

// ---------------------------------------------------------------------------
// experiment configuration (single structured text document)

struct TopologySection {
    uint32_t groups = 1;
    uint32_t switches_per_group = 8;
    uint32_t nodes_per_switch = 4;
    uint32_t link_bandwidth = 1; // fabric wires, flits/tick
    uint32_t nic_bandwidth = 4;  // injection/ejection links, flits/tick
    uint32_t link_buffer = 2;    // flits (per-hop credits; ~2x wire bandwidth)
};

struct SimSection {
    uint64_t seed = 1;
    double tick_duration_us = 1.0;
    Tick measurement_interval = 100;
    Tick max_ticks = 20'000'000;
    Tick credit_return = 1;
};

struct RoutingSection {
    RoutingPolicy policy; // minimal by default
};

struct ControllerSection {
    double ewma_gain = 1.0 / 16;
    double line_rate = 64.0;         // R_line, flits/tick
    double min_rate_fraction = 0.01; // R_min = fraction * R_line
    double resolution = 1.0;         // realizable delay quantum, ticks
};

struct PlacementSpec {
    enum class Kind { random, fixed };
    Kind kind = Kind::random;
    std::vector<NodeId> fixed_nodes;
};

struct AppSection {
    AppSpec spec;
    PlacementSpec placement;
    RatePolicy policy = RatePolicy::static_rate;
    double sensitivity = 0.0;   // c_a handed to the controller (netscope)
    double rate_fraction = 1.0; // initial (static: permanent) rate / line rate
};

enum class CongestionSchedule : uint8_t { none, two_extreme, random_levels };

const char* to_string(CongestionSchedule schedule);
CongestionSchedule congestion_schedule_from_string(const std::string& name);

struct TrainingSection {
    uint32_t pingpong_runs = 32;
    uint32_t pingpong_exchanges = 250;
    uint32_t pingpong_msg_size = 4;
    uint32_t sensitivity_runs = 30;
    CongestionSchedule congestion = CongestionSchedule::random_levels;
    uint32_t congestion_levels = 5; // distinct intensity steps including zero
    double holdout_fraction = 0.25;
    // background congestor used while training
    TrafficPattern congestor_pattern = TrafficPattern::incast;
    uint32_t congestor_nodes = 8;
    uint32_t congestor_msg_size = 16;
    Tick congestor_gap_ticks = 24;
    uint32_t congestor_iterations = 300;
};

struct CompareSection {
    std::vector<RatePolicy> policies = {RatePolicy::static_rate, RatePolicy::dcqcn,
                                        RatePolicy::netscope};
    bool allow_many_apps = false; // default caps mixed workloads at two apps
};

struct OutputSection {
    std::string dir = "out";
};

struct ExperimentConfig {
    TopologySection topology;
    SimSection sim;
    RoutingSection routing;
    ControllerSection controller;
    std::vector<AppSection> apps;
    TrainingSection training;
    CompareSection compare;
    OutputSection output;

    const AppSection* find_app(const std::string& name) const;
};

ExperimentConfig default_config();
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig parse_config_file(const std::string& path);
void print_config(std::ostream& out, const ExperimentConfig& config);
/// Full validation (unique app ids, capacity, parameter ranges). Throws
/// ConfigError before any simulation starts.
void validate_config(const ExperimentConfig& config);

Topology build_topology(const ExperimentConfig& config);

// ---------------------------------------------------------------------------
// schedule runner: executes app instances under per-(app,node) controllers

struct AppRun {
    AppSpec spec;
    std::vector<NodeId> placement;
    RatePolicy policy = RatePolicy::static_rate;
    double sensitivity = 0.0;
    double rate_fraction = 1.0;
};

struct AppOutcome {
    std::string app;
    Trace trace;
    std::vector<MessageTiming> timings;
    Tick makespan = 0;                 // completion tick of the last message
    double mean_perceived_delay = 0.0; // mean(last flit - dependency-ready)
    double measured_runtime = 0.0;     // runtime law when planted, else makespan
};

struct ControllerLogEntry {
    uint64_t window = 0;
    std::string app;
    NodeId node = 0;
    double alpha = 0.0;
    double rate = 0.0;
    RatePolicy policy = RatePolicy::static_rate;
};

struct RunOutcome {
    std::vector<AppOutcome> apps;
    std::vector<CounterSnapshot> snapshots;
    std::vector<ControllerLogEntry> controller_log;
};

/// Runs every app to completion (or throws if the horizon is hit first).
/// Deterministic in (topology, configs, run_seed).
RunOutcome run_apps(const Topology& topo, const SimConfig& sim_config,
                    const RoutingPolicy& routing, const ControllerSection& controller,
                    const std::vector<AppRun>& apps, uint64_t run_seed);

void write_controller_log(std::ostream& out, const std::vector<ControllerLogEntry>& log);

// ---------------------------------------------------------------------------
// training

struct LatencyTrainingResult {
    LatencyModelSet models;
    double holdout_pearson_r = 0.0;
    uint64_t train_samples = 0;
    uint64_t holdout_samples = 0;
    uint64_t runs = 0;
};

/// Pingpong protocol: repeated two-node round-trip runs under scheduled
/// congestion levels; per-interval (features, mean RTT) samples grouped by
/// path shape and fit per shape. Pairs are drawn so every shape class in the
/// topology gets covered.
LatencyTrainingResult train_latency_models(const ExperimentConfig& config);

struct SensitivityResult {
    DelaySensitivityModel model;
    std::vector<RunObservation> observations;
    std::vector<double> convergence; // fitted c after each run (from run 2 on)
};

/// Varied-congestion runs of one app; runtime observed, expected delivery
/// inferred from counters through the latency models, then fit.
SensitivityResult fit_sensitivity(const ExperimentConfig& config, const AppSection& app,
                                  const LatencyModelSet& models);

// ---------------------------------------------------------------------------
// experiments and reports

struct Percentiles {
    double p50 = 0.0;
    double p90 = 0.0;
    double p99 = 0.0;
};

Percentiles percentiles_of(std::vector<double> values);

struct PolicyAppResult {
    double runtime = 0.0;
    double pct_increase = 0.0;
};

struct PolicyNetworkStats {
    std::vector<double> interval_latency;    // mean one-way latency per interval
    std::vector<double> interval_traffic;    // injected flits/sec per interval
    Percentiles latency;
    Percentiles traffic;
    double node_seconds = 0.0;
};

struct ReportApp {
    std::string app;
    uint32_t nodes = 0;
    std::vector<NodeId> placement;
    double baseline_runtime = 0.0;
    std::map<std::string, PolicyAppResult> per_policy;
};

struct ExperimentReport {
    uint64_t seed = 0;
    double tick_duration_us = 1.0;
    std::vector<std::string> policies;
    std::vector<ReportApp> apps;
    std::map<std::string, PolicyNetworkStats> network;
    std::vector<ControllerLogEntry> controller_log;
};

/// Isolated baselines first (each app alone at full static rate), then the
/// mixed workload once per configured policy.
ExperimentReport run_experiment(const ExperimentConfig& config);

void write_report(std::ostream& out, const ExperimentReport& report);
ExperimentReport read_report(std::istream& in);
ExperimentReport read_report_file(const std::string& path);

enum class ReportFormat { text, csv };
void render_reports(std::ostream& out, const std::vector<ExperimentReport>& reports,
                    ReportFormat format);

} // namespace netscope

#endif // NETSCOPE_HARNESS_HPP
