// SPDX-License-Identifier: Apache-2.0
#include "netscope/inference.hpp"

#include "netscope/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace netscope {

double mle_stall_prob(Tick stall_ticks, Tick interval_ticks)
{
    if (interval_ticks == 0)
        throw std::invalid_argument("mle_stall_prob: measurement interval is zero");
    if (stall_ticks > interval_ticks)
        throw std::invalid_argument("mle_stall_prob: stall ticks exceed the interval");
    const double p = double(stall_ticks) / double(interval_ticks);
    return std::min(p, kPercentStalledCap / 100.0);
}

double queuing_delay(double percent_time_stalled)
{
    if (percent_time_stalled < 0.0)
        throw std::invalid_argument("queuing_delay: negative percent time stalled");
    if (percent_time_stalled >= 100.0)
        throw SaturationError("queuing_delay: link saturated (P_Ts >= 100)");
    return 100.0 / (100.0 - percent_time_stalled);
}

QueueModel queue_model_from_counters(Tick stall_ticks, Tick interval_ticks)
{
    QueueModel q;
    q.stall_probability = mle_stall_prob(stall_ticks, interval_ticks);
    q.expected_wait = 1.0 / (1.0 - q.stall_probability);
    return q;
}

uint32_t PathShape::hop_slots() const
{
    uint32_t total = 0;
    for (const uint32_t len : path_lengths)
        total += len;
    return total;
}

std::string PathShape::to_string() const
{
    std::string out;
    for (size_t i = 0; i < path_lengths.size(); ++i) {
        if (i)
            out += ',';
        out += std::to_string(path_lengths[i]);
    }
    return out;
}

PathShape PathShape::of(const PathSet& paths)
{
    PathShape shape;
    shape.path_lengths.reserve(paths.paths.size());
    for (const auto& p : paths.paths)
        shape.path_lengths.push_back(uint32_t(p.size()));
    return shape;
}

PathShape PathShape::parse(const std::string& text)
{
    PathShape shape;
    std::stringstream ss(text);
    std::string field;
    while (std::getline(ss, field, ',')) {
        uint32_t v = 0;
        const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
        if (res.ec != std::errc() || res.ptr != field.data() + field.size())
            throw ParseError("bad path shape '" + text + "'");
        shape.path_lengths.push_back(v);
    }
    if (shape.path_lengths.empty())
        throw ParseError("empty path shape");
    return shape;
}

namespace {

double hop_delay(const CounterSnapshot& snapshot, LinkId link, uint64_t* saturation_events)
{
    const auto* counters = snapshot.find_link(link);
    if (!counters)
        throw NotFoundError("latency_features: link " + std::to_string(link) +
                            " missing from snapshot");
    double pct = percent_time_stalled(counters->stall_ticks, snapshot.interval_ticks);
    if (pct > kPercentStalledCap) {
        pct = kPercentStalledCap;
        if (saturation_events)
            ++*saturation_events;
    }
    return queuing_delay(pct);
}

// fills hop slots then per-path bias slots; returns the count written
Eigen::Index fill_direction(Eigen::VectorXd& out, Eigen::Index offset, const PathSet& paths,
                            const CounterSnapshot& snapshot, uint64_t* saturation_events)
{
    Eigen::Index at = offset;
    for (const auto& path : paths.paths)
        for (const LinkId link : path)
            out[at++] = hop_delay(snapshot, link, saturation_events);
    for (size_t i = 0; i < paths.paths.size(); ++i)
        out[at++] = 1.0;
    return at - offset;
}

double guarded_pearson(const Eigen::VectorXd& xs, const Eigen::VectorXd& ys)
{
    if (xs.size() < 2)
        return 0.0;
    const Eigen::VectorXd xc = xs.array() - xs.mean();
    const Eigen::VectorXd yc = ys.array() - ys.mean();
    const double denom = std::sqrt(xc.squaredNorm() * yc.squaredNorm());
    if (denom <= 0.0)
        return 0.0;
    return xc.dot(yc) / denom;
}

} // namespace

Eigen::VectorXd latency_features(const PathSet& paths, const CounterSnapshot& snapshot,
                                 uint64_t* saturation_events)
{
    const PathShape shape = PathShape::of(paths);
    Eigen::VectorXd out(shape.feature_size());
    const Eigen::Index written = fill_direction(out, 0, paths, snapshot, saturation_events);
    out[written] = 1.0; // global bias
    return out;
}

Eigen::VectorXd rtt_features(const PathSet& forward, const PathSet& reverse,
                             const CounterSnapshot& snapshot, uint64_t* saturation_events)
{
    const PathShape fwd = PathShape::of(forward);
    const PathShape rev = PathShape::of(reverse);
    if (!(fwd == rev))
        throw std::invalid_argument("rtt_features: forward and reverse path shapes differ (" +
                                    fwd.to_string() + " vs " + rev.to_string() + ")");
    return latency_features(forward, snapshot, saturation_events) +
           latency_features(reverse, snapshot, saturation_events);
}

LatencyModel fit_latency_model(const Eigen::MatrixXd& rows, const Eigen::VectorXd& rtt_labels,
                               const PathShape& shape)
{
    LatencyModel model;
    model.shape = shape;
    if (rows.rows() != rtt_labels.size())
        throw std::invalid_argument("fit_latency_model: rows and labels disagree");
    if (rows.cols() != Eigen::Index(model.rtt_feature_size()))
        throw std::invalid_argument("fit_latency_model: feature width does not match shape");
    if (rows.rows() < rows.cols())
        throw FitError("fit_latency_model: " + std::to_string(rows.rows()) +
                       " samples for " + std::to_string(rows.cols()) +
                       " coefficients; collect more training runs");

    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
    cod.setThreshold(1e-7); // near-dependent feature columns get zero weight
    cod.compute(rows);
    if (cod.rank() <= 1)
        throw FitError("fit_latency_model: features are degenerate (constant queuing delays); "
                       "train under more varied congestion");

    model.coefficients = cod.solve(rtt_labels);
    model.feature_cap = rows.maxCoeff() / 2.0; // rows sum two directions
    const Eigen::VectorXd predictions = rows * model.coefficients;
    model.training.residual_norm = (predictions - rtt_labels).norm();
    model.training.pearson_r = guarded_pearson(predictions, rtt_labels);
    model.training.n_samples = uint64_t(rows.rows());
    model.training.rank = uint64_t(cod.rank());
    return model;
}

double predict_rtt(const LatencyModel& model, const Eigen::VectorXd& rtt_row)
{
    if (rtt_row.size() != model.coefficients.size())
        throw std::invalid_argument("predict_rtt: feature width does not match model");
    return model.coefficients.dot(rtt_row.cwiseMin(2.0 * model.feature_cap));
}

double estimate_latency(const LatencyModel& model, const PathSet& paths,
                        const CounterSnapshot& snapshot)
{
    const PathShape shape = PathShape::of(paths);
    if (!(shape == model.shape))
        throw std::invalid_argument("estimate_latency: path-set shape " + shape.to_string() +
                                    " does not match model shape " + model.shape.to_string());

    const Eigen::VectorXd features =
        latency_features(paths, snapshot).cwiseMin(model.feature_cap);
    return std::max(0.0, model.coefficients.dot(features));
}

const LatencyModel& LatencyModelSet::for_shape(const PathShape& shape) const
{
    for (const LatencyModel& m : models)
        if (m.shape == shape)
            return m;
    throw NotFoundError("no latency model for path shape " + shape.to_string() +
                        "; retrain with pairs covering this shape");
}

bool LatencyModelSet::has_shape(const PathShape& shape) const
{
    for (const LatencyModel& m : models)
        if (m.shape == shape)
            return true;
    return false;
}

double message_delivery_time(double latency, double size_flits, double nic_bandwidth,
                             double overhead_src, double overhead_dst)
{
    if (nic_bandwidth <= 0.0)
        throw std::invalid_argument("message_delivery_time: NIC bandwidth must be positive");
    if (latency < 0.0 || size_flits < 0.0)
        throw std::invalid_argument("message_delivery_time: negative latency or size");
    return overhead_src + latency + size_flits / nic_bandwidth + overhead_dst;
}

double spatial_aggregate(const LatencyModelSet& models, const Topology& topo,
                         const std::vector<NodeId>& placement, const CounterSnapshot& snapshot,
                         const MessageParams& params, const RoutingPolicy& policy,
                         const SpatialOptions& options)
{
    if (placement.size() < 2)
        throw std::invalid_argument("spatial_aggregate: placement needs at least two nodes");
    std::set<NodeId> unique(placement.begin(), placement.end());
    if (unique.size() != placement.size())
        throw std::invalid_argument("spatial_aggregate: placement contains duplicate nodes");

    std::vector<std::pair<NodeId, NodeId>> pairs;
    for (size_t i = 0; i < placement.size(); ++i)
        for (size_t j = i + 1; j < placement.size(); ++j)
            pairs.emplace_back(placement[i], placement[j]);

    if (pairs.size() > options.pair_cap) {
        std::vector<std::pair<NodeId, NodeId>> sampled;
        sampled.reserve(options.pair_cap);
        std::mt19937_64 rng(options.sample_seed);
        std::sample(pairs.begin(), pairs.end(), std::back_inserter(sampled), options.pair_cap,
                    rng);
        pairs.swap(sampled);
    }

    double total = 0.0;
    for (const auto& [a, b] : pairs) {
        const PathSet paths = enumerate_paths(topo, a, b, policy);
        const LatencyModel& model = models.for_shape(PathShape::of(paths));
        const double latency = estimate_latency(model, paths, snapshot);
        total += message_delivery_time(latency, params.size_flits, params.nic_bandwidth,
                                       params.overhead_src, params.overhead_dst);
    }
    return total / double(pairs.size());
}

double temporal_aggregate(const std::vector<double>& spatial_series, uint64_t lifespan_intervals)
{
    if (spatial_series.empty())
        throw std::invalid_argument("temporal_aggregate: empty series");
    if (lifespan_intervals == 0 || lifespan_intervals > spatial_series.size())
        throw std::invalid_argument("temporal_aggregate: lifespan does not match the series");
    double total = 0.0;
    for (uint64_t i = 0; i < lifespan_intervals; ++i)
        total += spatial_series[i];
    return total / double(lifespan_intervals);
}

DelaySensitivityModel fit_delay_sensitivity(const std::vector<RunObservation>& runs)
{
    if (runs.size() < 2)
        throw FitError("fit_delay_sensitivity: need at least two runs");
    for (const RunObservation& r : runs) {
        if (r.runtime <= 0.0)
            throw std::invalid_argument("fit_delay_sensitivity: runtime must be positive");
        if (r.expected_delivery <= 0.0)
            throw std::invalid_argument("fit_delay_sensitivity: delivery time must be positive");
    }

    Eigen::VectorXd m(runs.size()), t(runs.size());
    for (size_t i = 0; i < runs.size(); ++i) {
        m[i] = runs[i].expected_delivery;
        t[i] = runs[i].runtime;
    }
    const Eigen::VectorXd mc = m.array() - m.mean();
    const double m_var = mc.squaredNorm();
    if (m_var <= 0.0)
        throw FitError("fit_delay_sensitivity: all runs saw the same expected delivery time; "
                       "vary the congestion level across runs");

    DelaySensitivityModel model;
    model.app = runs.front().app;
    model.raw_slope = mc.dot(Eigen::VectorXd(t.array() - t.mean())) / m_var;
    model.sensitivity = std::max(0.0, model.raw_slope);
    model.intercept = t.mean() - model.raw_slope * m.mean();
    model.fit_correlation = guarded_pearson(m, t);
    model.n_runs = runs.size();
    return model;
}

DelaySensitivityModel normalized(const DelaySensitivityModel& model, double reference_slope)
{
    if (reference_slope <= 0.0)
        throw std::invalid_argument("normalized: reference slope must be positive");
    DelaySensitivityModel out = model;
    out.reference_slope = reference_slope;
    out.sensitivity = std::max(0.0, model.raw_slope / reference_slope);
    return out;
}

double pearson_correlation(const std::vector<double>& xs, const std::vector<double>& ys)
{
    if (xs.size() != ys.size())
        throw std::invalid_argument("pearson_correlation: length mismatch");
    if (xs.size() < 2)
        throw FitError("pearson_correlation: need at least two points");
    Eigen::Map<const Eigen::VectorXd> x(xs.data(), Eigen::Index(xs.size()));
    Eigen::Map<const Eigen::VectorXd> y(ys.data(), Eigen::Index(ys.size()));
    const Eigen::VectorXd xc = x.array() - x.mean();
    const Eigen::VectorXd yc = y.array() - y.mean();
    const double denom = std::sqrt(xc.squaredNorm() * yc.squaredNorm());
    if (denom <= 0.0)
        throw FitError("pearson_correlation: zero variance, correlation undefined");
    return xc.dot(yc) / denom;
}

// ---------------------------------------------------------------------------
// serialization

namespace {

constexpr int kFormatVersion = 1;

std::string expect_kv(std::istream& in, const std::string& key, size_t& line)
{
    std::string row;
    if (!std::getline(in, row))
        throw ParseError("unexpected end of model file, wanted '" + key + "'", line);
    ++line;
    const std::string prefix = key + ": ";
    if (row.rfind(prefix, 0) != 0)
        throw ParseError("expected '" + key + ": ...', got '" + row + "'", line);
    return row.substr(prefix.size());
}

double parse_double_field(const std::string& text, size_t line)
{
    double v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw ParseError("bad number '" + text + "'", line);
    return v;
}

uint64_t parse_u64_field(const std::string& text, size_t line)
{
    uint64_t v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw ParseError("bad integer '" + text + "'", line);
    return v;
}

} // namespace

void write_latency_models(std::ostream& out, const LatencyModelSet& models)
{
    for (size_t i = 0; i < models.models.size(); ++i) {
        const LatencyModel& m = models.models[i];
        if (i)
            out << '\n';
        out << "model_kind: latency\n";
        out << "format_version: " << kFormatVersion << '\n';
        out << "shape: " << m.shape.to_string() << '\n';
        out << "coefficients: " << m.coefficients.size() << '\n';
        for (Eigen::Index c = 0; c < m.coefficients.size(); ++c)
            out << format_double(m.coefficients[c]) << '\n';
        out << "feature_cap: " << format_double(m.feature_cap) << '\n';
        out << "residual_norm: " << format_double(m.training.residual_norm) << '\n';
        out << "pearson_r: " << format_double(m.training.pearson_r) << '\n';
        out << "n_samples: " << m.training.n_samples << '\n';
        out << "rank: " << m.training.rank << '\n';
        out << "saturation_events: " << m.training.saturation_events << '\n';
    }
}

LatencyModelSet read_latency_models(std::istream& in)
{
    LatencyModelSet set;
    size_t line = 0;
    std::string row;
    while (true) {
        // skip blank separators; stop at EOF
        std::istream::pos_type at = in.tellg();
        if (!std::getline(in, row))
            break;
        ++line;
        if (row.empty())
            continue;
        in.seekg(at);
        --line;

        const std::string kind = expect_kv(in, "model_kind", line);
        if (kind != "latency")
            throw ParseError("expected latency model, got '" + kind + "'", line);
        const uint64_t version = parse_u64_field(expect_kv(in, "format_version", line), line);
        if (version != kFormatVersion)
            throw ParseError("unsupported model format version " + std::to_string(version), line);

        LatencyModel m;
        m.shape = PathShape::parse(expect_kv(in, "shape", line));
        const uint64_t count = parse_u64_field(expect_kv(in, "coefficients", line), line);
        if (count != m.rtt_feature_size())
            throw ParseError("coefficient count does not match shape", line);
        m.coefficients.resize(Eigen::Index(count));
        for (uint64_t c = 0; c < count; ++c) {
            if (!std::getline(in, row))
                throw ParseError("model file truncated in coefficient list", line);
            ++line;
            m.coefficients[Eigen::Index(c)] = parse_double_field(row, line);
        }
        m.feature_cap = parse_double_field(expect_kv(in, "feature_cap", line), line);
        m.training.residual_norm = parse_double_field(expect_kv(in, "residual_norm", line), line);
        m.training.pearson_r = parse_double_field(expect_kv(in, "pearson_r", line), line);
        m.training.n_samples = parse_u64_field(expect_kv(in, "n_samples", line), line);
        m.training.rank = parse_u64_field(expect_kv(in, "rank", line), line);
        m.training.saturation_events =
            parse_u64_field(expect_kv(in, "saturation_events", line), line);
        set.models.push_back(std::move(m));
    }
    return set;
}

void write_sensitivity_model(std::ostream& out, const DelaySensitivityModel& model)
{
    out << "model_kind: sensitivity\n";
    out << "format_version: " << kFormatVersion << '\n';
    out << "app: " << model.app << '\n';
    out << "sensitivity: " << format_double(model.sensitivity) << '\n';
    out << "intercept: " << format_double(model.intercept) << '\n';
    out << "raw_slope: " << format_double(model.raw_slope) << '\n';
    out << "reference_slope: " << format_double(model.reference_slope) << '\n';
    out << "fit_correlation: " << format_double(model.fit_correlation) << '\n';
    out << "n_runs: " << model.n_runs << '\n';
}

DelaySensitivityModel read_sensitivity_model(std::istream& in)
{
    size_t line = 0;
    const std::string kind = expect_kv(in, "model_kind", line);
    if (kind != "sensitivity")
        throw ParseError("expected sensitivity model, got '" + kind + "'", line);
    const uint64_t version = parse_u64_field(expect_kv(in, "format_version", line), line);
    if (version != kFormatVersion)
        throw ParseError("unsupported model format version " + std::to_string(version), line);

    DelaySensitivityModel m;
    m.app = expect_kv(in, "app", line);
    m.sensitivity = parse_double_field(expect_kv(in, "sensitivity", line), line);
    m.intercept = parse_double_field(expect_kv(in, "intercept", line), line);
    m.raw_slope = parse_double_field(expect_kv(in, "raw_slope", line), line);
    m.reference_slope = parse_double_field(expect_kv(in, "reference_slope", line), line);
    m.fit_correlation = parse_double_field(expect_kv(in, "fit_correlation", line), line);
    m.n_runs = parse_u64_field(expect_kv(in, "n_runs", line), line);
    return m;
}

void write_observations(std::ostream& out, const std::vector<RunObservation>& runs)
{
    for (const RunObservation& r : runs) {
        nlohmann::ordered_json j;
        j["app"] = r.app;
        j["placement"] = r.placement;
        j["m_a"] = r.expected_delivery;
        j["t_a"] = r.runtime;
        out << j.dump() << '\n';
    }
}

std::vector<RunObservation> read_observations(std::istream& in)
{
    std::vector<RunObservation> runs;
    std::string row;
    size_t line = 0;
    while (std::getline(in, row)) {
        ++line;
        if (row.empty())
            continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(row);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(std::string("bad observation json: ") + e.what(), line);
        }
        RunObservation r;
        r.app = j.at("app").get<std::string>();
        r.placement = j.at("placement").get<std::vector<NodeId>>();
        r.expected_delivery = j.at("m_a").get<double>();
        r.runtime = j.at("t_a").get<double>();
        runs.push_back(std::move(r));
    }
    return runs;
}

} // namespace netscope
