// SPDX-License-Identifier: Apache-2.0
#ifndef NETSCOPE_INFERENCE_HPP
#define NETSCOPE_INFERENCE_HPP

#include "netscope/telemetry.hpp"
#include "netscope/topology.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace netscope {

/// Queuing delays diverge as a link approaches 100% time stalled; features are
/// capped here and the cap is reported through training stats.
constexpr double kPercentStalledCap = 99.9;

/// Geometric stall model for one link: stall probability p, expected waiting
/// time E[T] = 1/(1-p) ticks.
struct QueueModel {
    double stall_probability = 0.0;
    double expected_wait = 1.0;
};

/// Maximum-likelihood stall probability from interval counters: p = T_s / T_m,
/// capped below 1 so the waiting-time model stays finite.
double mle_stall_prob(Tick stall_ticks, Tick interval_ticks);

/// Expected queuing delay Q_l = 100 / (100 - P_Ts) ticks. Throws
/// SaturationError at P_Ts >= 100; callers cap at kPercentStalledCap.
double queuing_delay(double percent_time_stalled);

QueueModel queue_model_from_counters(Tick stall_ticks, Tick interval_ticks);

/// Stable flattening of a path set: one slot per (path index, hop index).
struct PathShape {
    std::vector<uint32_t> path_lengths; // |S_i| in canonical path order

    uint32_t hop_slots() const;
    /// hop slots + one bias per path + a global bias
    uint32_t feature_size() const { return hop_slots() + uint32_t(path_lengths.size()) + 1; }
    std::string to_string() const;
    static PathShape of(const PathSet& paths);
    static PathShape parse(const std::string& text);
    bool operator==(const PathShape&) const = default;
};

/// Per-hop queuing delays of every path, flattened in (path, hop) order,
/// followed by a constant 1 per path and a trailing constant 1. Throws
/// NotFoundError naming the first link absent from the snapshot.
/// `saturation_events`, when given, counts hops capped at kPercentStalledCap.
Eigen::VectorXd latency_features(const PathSet& paths, const CounterSnapshot& snapshot,
                                 uint64_t* saturation_events = nullptr);

/// Round-trip feature row: the element-wise sum of the forward and reverse
/// one-way features, so one shared coefficient set prices both directions and
/// the fitted model splits cleanly into per-direction estimates.
Eigen::VectorXd rtt_features(const PathSet& forward, const PathSet& reverse,
                             const CounterSnapshot& snapshot,
                             uint64_t* saturation_events = nullptr);

struct TrainingStats {
    double residual_norm = 0.0;
    double pearson_r = 0.0;
    uint64_t n_samples = 0;
    uint64_t rank = 0;
    uint64_t saturation_events = 0;
};

/// Linear map from queuing-delay features to latency, one per path-set shape.
/// Coefficients live in the one-way feature layout; round trips are priced as
/// the sum of both directions. Queuing delays beyond feature_cap (the largest
/// value seen in training) are clamped before prediction: the linear fit has
/// no support out there.
struct LatencyModel {
    PathShape shape;             // one-way shape the model applies to
    Eigen::VectorXd coefficients;
    double feature_cap = 1.0e12;
    TrainingStats training;

    uint32_t rtt_feature_size() const { return shape.feature_size(); }
};

/// Least squares over round-trip rows via a rank-revealing orthogonal
/// factorization (minimum-norm solution; degenerate directions get zero).
/// Throws FitError when rows < coefficients or the features are degenerate.
LatencyModel fit_latency_model(const Eigen::MatrixXd& rows, const Eigen::VectorXd& rtt_labels,
                               const PathShape& shape);

/// Predicted round-trip time for a concatenated feature row.
double predict_rtt(const LatencyModel& model, const Eigen::VectorXd& rtt_row);

/// One-way latency estimate D for a path set under the snapshot: forward-half
/// coefficients applied to the one-way features plus the shared intercept,
/// clamped at zero. Throws std::invalid_argument on shape mismatch.
double estimate_latency(const LatencyModel& model, const PathSet& paths,
                        const CounterSnapshot& snapshot);

/// Trained per-shape latency models; lookup by a pair's path-set shape.
struct LatencyModelSet {
    std::vector<LatencyModel> models;

    const LatencyModel& for_shape(const PathShape& shape) const; // NotFoundError if absent
    bool has_shape(const PathShape& shape) const;
};

/// Total message delivery time M = o_src + D + size/bandwidth + o_dst.
double message_delivery_time(double latency, double size_flits, double nic_bandwidth,
                             double overhead_src = 0.0, double overhead_dst = 0.0);

struct MessageParams {
    double size_flits = 1.0;
    double nic_bandwidth = 1.0;
    double overhead_src = 0.0;
    double overhead_dst = 0.0;
};

struct SpatialOptions {
    uint64_t pair_cap = 4096; // exhaustive up to here, seeded sampling beyond
    uint64_t sample_seed = 0;
};

/// Expected delivery time over the placement's unordered node pairs (Eq. form:
/// mean over pairs), exhaustive up to pair_cap. Throws on duplicate nodes.
double spatial_aggregate(const LatencyModelSet& models, const Topology& topo,
                         const std::vector<NodeId>& placement, const CounterSnapshot& snapshot,
                         const MessageParams& params, const RoutingPolicy& policy = {},
                         const SpatialOptions& options = {});

/// Arithmetic mean of the spatial series over the application's lifespan.
double temporal_aggregate(const std::vector<double>& spatial_series, uint64_t lifespan_intervals);

struct RunObservation {
    std::string app;
    std::vector<NodeId> placement;
    double expected_delivery = 0.0; // M_a, ticks
    double runtime = 0.0;           // T_a, ticks
};

/// Linear model T_a = c_a * M_a + k_a for one application.
struct DelaySensitivityModel {
    std::string app;
    double sensitivity = 0.0;     // c_a, clamped at 0, relative to reference_slope
    double intercept = 0.0;       // k_a
    double raw_slope = 0.0;       // unclamped, unnormalized fitted slope
    double reference_slope = 1.0; // pingpong slope used for normalization
    double fit_correlation = 0.0; // Pearson r of (M_a, T_a)
    uint64_t n_runs = 0;
};

/// Least-squares slope/intercept over run observations. Throws FitError with
/// fewer than two runs or when every M_a is equal (no congestion variation).
DelaySensitivityModel fit_delay_sensitivity(const std::vector<RunObservation>& runs);

/// Rescales the sensitivity so the reference application (pingpong) sits at 1.
DelaySensitivityModel normalized(const DelaySensitivityModel& model, double reference_slope);

/// Product-moment correlation; throws FitError for n < 2 or zero variance.
double pearson_correlation(const std::vector<double>& xs, const std::vector<double>& ys);

// Versioned key:value model files; a file may hold several model blocks.
void write_latency_models(std::ostream& out, const LatencyModelSet& models);
LatencyModelSet read_latency_models(std::istream& in);
void write_sensitivity_model(std::ostream& out, const DelaySensitivityModel& model);
DelaySensitivityModel read_sensitivity_model(std::istream& in);

// JSON-lines run observations.
void write_observations(std::ostream& out, const std::vector<RunObservation>& runs);
std::vector<RunObservation> read_observations(std::istream& in);

} // namespace netscope

#endif // NETSCOPE_INFERENCE_HPP
