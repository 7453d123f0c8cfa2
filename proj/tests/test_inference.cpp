// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "netscope/errors.hpp"
#include "netscope/inference.hpp"
#include "netscope/topology.hpp"

#include <cmath>
#include <random>
#include <sstream>

using namespace netscope;

namespace {

double log_likelihood(double p, Tick ts, Tick tm)
{
    double ll = 0.0;
    if (ts > 0)
        ll += double(ts) * std::log(p);
    if (tm - ts > 0)
        ll += double(tm - ts) * std::log1p(-p);
    return ll;
}

CounterSnapshot uniform_snapshot(const Topology& topo, Tick tm, Tick stall_ticks)
{
    CounterSnapshot snap;
    snap.interval_ticks = tm;
    for (const Link& l : topo.links)
        snap.per_link.push_back({l.id, stall_ticks, 0});
    for (NodeId n = 0; n < topo.node_count(); ++n)
        snap.per_nic.push_back({n, 0.0});
    return snap;
}

} // namespace

TEST_CASE("mle stall probability is the stall fraction")
{
    CHECK(mle_stall_prob(25, 10000) == doctest::Approx(0.0025)); // the paper's low level
    CHECK(mle_stall_prob(0, 500) == 0.0);
    CHECK(mle_stall_prob(500, 500) == doctest::Approx(0.999)); // capped below 1
    CHECK_THROWS_AS(mle_stall_prob(501, 500), std::invalid_argument);
    CHECK_THROWS_AS(mle_stall_prob(1, 0), std::invalid_argument);
}

TEST_CASE("mle estimate tracks a simulated Bernoulli stall process")
{
    std::mt19937_64 rng(1234);
    std::bernoulli_distribution stalled(0.3);
    const Tick tm = 100000;
    Tick ts = 0;
    for (Tick t = 0; t < tm; ++t)
        if (stalled(rng))
            ++ts;
    CHECK(mle_stall_prob(ts, tm) == doctest::Approx(0.3).epsilon(0.04)); // within +/-0.01
    CHECK(std::abs(mle_stall_prob(ts, tm) - 0.3) < 0.01);
}

TEST_CASE("mle maximizes the log-likelihood against a grid search")
{
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const Tick tm = 1 + rng() % 5000;
        const Tick ts = rng() % (tm + 1);
        const double p_hat = mle_stall_prob(ts, tm);
        double best = -1e300;
        for (int i = 0; i <= 1000; ++i) {
            // grid spans the model's feasible stall probabilities (cap below 1)
            const double p = 0.999 * double(i) / 1000.0;
            best = std::max(best, log_likelihood(p, ts, tm));
        }
        CHECK(log_likelihood(p_hat, ts, tm) >= best - 1e-9);
    }
}

TEST_CASE("queuing delay is the geometric expected wait")
{
    CHECK(queuing_delay(0.0) == 1.0);
    CHECK(queuing_delay(50.0) == doctest::Approx(2.0));
    CHECK_THROWS_AS(queuing_delay(100.0), SaturationError);
    CHECK_THROWS_AS(queuing_delay(-1.0), std::invalid_argument);

    // strictly increasing
    double prev = 0.0;
    for (double p = 0.0; p < 99.9; p += 0.7) {
        const double q = queuing_delay(p);
        CHECK(q > prev);
        prev = q;
    }
}

TEST_CASE("simulated geometric waits match the closed-form expectation")
{
    std::mt19937_64 rng(77);
    std::bernoulli_distribution stalled(0.5);
    double total = 0.0;
    const int samples = 100000;
    for (int i = 0; i < samples; ++i) {
        int wait = 1;
        while (stalled(rng))
            ++wait;
        total += wait;
    }
    const double mean = total / samples;
    CHECK(std::abs(mean - queuing_delay(50.0)) < 0.05);
}

TEST_CASE("latency features flatten per (path, hop) with bias slots")
{
    const Topology topo = build_dragonfly(1, 4, 1);
    RoutingPolicy policy;
    policy.kind = RoutingPolicy::Kind::minimal_plus_nonminimal;
    policy.nonminimal_limit = 2;
    const PathSet paths = enumerate_paths(topo, 0, 3, policy);
    const PathShape shape = PathShape::of(paths);

    uint32_t hop_slots = 0;
    for (const auto& p : paths.paths)
        hop_slots += uint32_t(p.size());
    CHECK(shape.feature_size() == hop_slots + paths.paths.size() + 1);

    SUBCASE("idle network: every feature is 1")
    {
        const CounterSnapshot idle = uniform_snapshot(topo, 100, 0);
        const Eigen::VectorXd f = latency_features(paths, idle);
        REQUIRE(f.size() == shape.feature_size());
        for (Eigen::Index i = 0; i < f.size(); ++i)
            CHECK(f[i] == 1.0);
    }

    SUBCASE("one half-stalled link doubles exactly its own slots")
    {
        CounterSnapshot snap = uniform_snapshot(topo, 100, 0);
        const LinkId hot = paths.paths.front()[1];
        for (auto& lc : snap.per_link)
            if (lc.link == hot)
                lc.stall_ticks = 50;
        const Eigen::VectorXd f = latency_features(paths, snap);
        Eigen::Index at = 0;
        for (const auto& path : paths.paths)
            for (const LinkId id : path)
                CHECK(f[at++] == (id == hot ? 2.0 : 1.0));
    }

    SUBCASE("missing link counters are reported by name")
    {
        CounterSnapshot snap = uniform_snapshot(topo, 100, 0);
        snap.per_link.erase(snap.per_link.begin()); // drop link 0 = injection of node 0
        CHECK_THROWS_WITH_AS(latency_features(paths, snap),
                             doctest::Contains("link 0"), NotFoundError);
    }
}

TEST_CASE("noiseless synthetic labels are recovered exactly")
{
    PathShape shape;
    shape.path_lengths = {3, 4};
    const uint32_t width = shape.feature_size(); // one-way layout, shared weights
    const uint32_t hops = shape.hop_slots();

    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> q(1.0, 5.0);
    std::uniform_real_distribution<double> coef(-2.0, 2.0);

    Eigen::VectorXd planted(width);
    for (uint32_t i = 0; i < width; ++i)
        planted[i] = coef(rng);

    // each row sums a forward and a reverse one-way feature vector
    const int n = 200;
    Eigen::MatrixXd rows(n, width);
    for (int r = 0; r < n; ++r) {
        for (uint32_t h = 0; h < hops; ++h)
            rows(r, h) = q(rng) + q(rng);
        for (uint32_t b = hops; b < width; ++b)
            rows(r, b) = 2.0;
    }
    const Eigen::VectorXd labels = rows * planted;

    const LatencyModel model = fit_latency_model(rows, labels, shape);

    // hop coefficients are identifiable; the constant slots only pin their sum
    for (uint32_t i = 0; i < hops; ++i)
        CHECK(model.coefficients[i] == doctest::Approx(planted[i]).epsilon(1e-9));
    double planted_bias = 0.0, fitted_bias = 0.0;
    for (uint32_t i = hops; i < width; ++i) {
        planted_bias += planted[i];
        fitted_bias += model.coefficients[i];
    }
    CHECK(fitted_bias == doctest::Approx(planted_bias).epsilon(1e-9));

    // predictions reproduce the labels
    const Eigen::VectorXd pred = rows * model.coefficients;
    for (int r = 0; r < n; ++r)
        CHECK(pred[r] == doctest::Approx(labels[r]).epsilon(1e-9));
    CHECK(model.training.pearson_r > 0.999);
}

TEST_CASE("all-idle training data is rejected as degenerate")
{
    PathShape shape;
    shape.path_lengths = {3};
    const uint32_t width = shape.feature_size();
    Eigen::MatrixXd rows = Eigen::MatrixXd::Constant(width + 4, width, 2.0);
    Eigen::VectorXd labels = Eigen::VectorXd::Constant(width + 4, 8.0);
    CHECK_THROWS_AS(fit_latency_model(rows, labels, shape), FitError);
}

TEST_CASE("too few samples is a fit error")
{
    PathShape shape;
    shape.path_lengths = {3};
    const uint32_t width = shape.feature_size();
    Eigen::MatrixXd rows = Eigen::MatrixXd::Random(width - 1, width);
    Eigen::VectorXd labels = Eigen::VectorXd::Random(width - 1);
    CHECK_THROWS_AS(fit_latency_model(rows, labels, shape), FitError);
}

TEST_CASE("estimate_latency is linear with the stored intercept")
{
    const Topology topo = build_dragonfly(1, 3, 1);
    const PathSet paths = enumerate_paths(topo, 0, 1);
    const PathShape shape = PathShape::of(paths);

    LatencyModel model;
    model.shape = shape;
    model.coefficients = Eigen::VectorXd::Zero(model.rtt_feature_size());

    SUBCASE("zero coefficients except the intercept give D = intercept")
    {
        model.coefficients[model.coefficients.size() - 1] = 6.5;
        const CounterSnapshot idle = uniform_snapshot(topo, 100, 0);
        CHECK(estimate_latency(model, paths, idle) == doctest::Approx(6.5));
        CounterSnapshot busy = uniform_snapshot(topo, 100, 60);
        CHECK(estimate_latency(model, paths, busy) == doctest::Approx(6.5));
    }

    SUBCASE("moving one hop's delay moves D by coefficient times delta")
    {
        model.coefficients[1] = 3.0; // second hop of the single path
        const CounterSnapshot idle = uniform_snapshot(topo, 100, 0);
        const double base = estimate_latency(model, paths, idle);
        CounterSnapshot busy = uniform_snapshot(topo, 100, 0);
        const LinkId hop = paths.paths.front()[1];
        for (auto& lc : busy.per_link)
            if (lc.link == hop)
                lc.stall_ticks = 50; // Q goes 1 -> 2
        const double moved = estimate_latency(model, paths, busy);
        CHECK(moved - base == doctest::Approx(3.0 * (2.0 - 1.0)));
    }

    SUBCASE("shape mismatch is rejected")
    {
        const PathSet other = enumerate_paths(topo, 0, 2, {});
        CHECK(PathShape::of(other) == shape); // same class here, so force a bad shape
        LatencyModel narrow;
        narrow.shape.path_lengths = {2};
        narrow.coefficients = Eigen::VectorXd::Zero(narrow.rtt_feature_size());
        CHECK_THROWS_AS(estimate_latency(narrow, paths, uniform_snapshot(topo, 100, 0)),
                        std::invalid_argument);
    }
}

TEST_CASE("message delivery time composes its four parts")
{
    CHECK(message_delivery_time(12.0, 0.0, 10.0) == doctest::Approx(12.0));
    CHECK(message_delivery_time(0.0, 100.0, 10.0, 3.0, 4.0) == doctest::Approx(17.0));
    CHECK_THROWS_AS(message_delivery_time(1.0, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("spatial aggregation over placements")
{
    const Topology topo = build_dragonfly(1, 8, 1);
    const RoutingPolicy policy; // minimal only: every cross-switch pair shares one shape
    const PathSet probe = enumerate_paths(topo, 0, 1, policy);

    LatencyModel model;
    model.shape = PathShape::of(probe);
    model.coefficients = Eigen::VectorXd::Zero(model.rtt_feature_size());
    model.coefficients[0] = 1.0;
    model.coefficients[1] = 2.0;
    model.coefficients[2] = 1.0;
    LatencyModelSet models;
    models.models.push_back(model);

    MessageParams params;
    params.size_flits = 40.0;
    params.nic_bandwidth = 4.0;

    SUBCASE("two-node placement equals the single pair value")
    {
        const CounterSnapshot idle = uniform_snapshot(topo, 100, 0);
        const double pair = message_delivery_time(estimate_latency(model, probe, idle),
                                                  params.size_flits, params.nic_bandwidth);
        CHECK(spatial_aggregate(models, topo, {0, 1}, idle, params, policy) ==
              doctest::Approx(pair));
    }

    SUBCASE("homogeneous congestion makes every pair equal")
    {
        const CounterSnapshot busy = uniform_snapshot(topo, 100, 40);
        const double pair = message_delivery_time(estimate_latency(model, probe, busy),
                                                  params.size_flits, params.nic_bandwidth);
        CHECK(spatial_aggregate(models, topo, {0, 2, 4, 6}, busy, params, policy) ==
              doctest::Approx(pair));
    }

    SUBCASE("heterogeneous congestion matches the exhaustive pair mean")
    {
        CounterSnapshot snap = uniform_snapshot(topo, 100, 0);
        std::mt19937_64 rng(6);
        for (auto& lc : snap.per_link)
            lc.stall_ticks = rng() % 90;
        const std::vector<NodeId> placement = {0, 1, 2, 3, 4, 5};

        double oracle = 0.0;
        int pairs = 0;
        for (size_t i = 0; i < placement.size(); ++i)
            for (size_t j = i + 1; j < placement.size(); ++j) {
                const PathSet ps = enumerate_paths(topo, placement[i], placement[j], policy);
                oracle += message_delivery_time(estimate_latency(model, ps, snap),
                                                params.size_flits, params.nic_bandwidth);
                ++pairs;
            }
        CHECK(pairs == 15);
        oracle /= pairs;
        CHECK(spatial_aggregate(models, topo, placement, snap, params, policy) ==
              doctest::Approx(oracle).epsilon(1e-12));
    }

    SUBCASE("duplicate placement nodes are rejected")
    {
        const CounterSnapshot idle = uniform_snapshot(topo, 100, 0);
        CHECK_THROWS_AS(spatial_aggregate(models, topo, {0, 0, 1}, idle, params, policy),
                        std::invalid_argument);
    }
}

TEST_CASE("temporal aggregation is the lifespan mean")
{
    CHECK(temporal_aggregate({5.0, 5.0, 5.0}, 3) == doctest::Approx(5.0));
    CHECK(temporal_aggregate({1.0, 3.0}, 2) == doctest::Approx(2.0));
    CHECK_THROWS_AS(temporal_aggregate({}, 1), std::invalid_argument);
    CHECK_THROWS_AS(temporal_aggregate({1.0}, 2), std::invalid_argument);

    std::mt19937_64 rng(8);
    std::vector<double> series;
    long double oracle = 0.0L;
    for (int i = 0; i < 100; ++i) {
        series.push_back(double(rng() % 1000) / 7.0);
        oracle += series.back();
    }
    oracle /= 100.0L;
    CHECK(temporal_aggregate(series, 100) == doctest::Approx(double(oracle)).epsilon(1e-12));
}

TEST_CASE("delay sensitivity fits recover planted lines")
{
    SUBCASE("exact line recovers the slope to machine precision")
    {
        std::vector<RunObservation> runs;
        for (int i = 0; i < 8; ++i) {
            RunObservation r;
            r.app = "milc-like";
            r.expected_delivery = 10.0 + i * 2.5;
            r.runtime = 6.67 * r.expected_delivery + 40.0;
            runs.push_back(r);
        }
        const auto model = fit_delay_sensitivity(runs);
        CHECK(model.sensitivity == doctest::Approx(6.67).epsilon(1e-12));
        CHECK(model.intercept == doctest::Approx(40.0).epsilon(1e-9));
        CHECK(model.fit_correlation == doctest::Approx(1.0));
        CHECK(model.n_runs == 8);
    }

    SUBCASE("normalization makes the reference application sit at 1")
    {
        std::vector<RunObservation> runs;
        for (int i = 0; i < 5; ++i) {
            RunObservation r;
            r.app = "pingpong";
            r.expected_delivery = 5.0 + i;
            r.runtime = 2000.0 * r.expected_delivery + 1.0;
            runs.push_back(r);
        }
        const auto raw = fit_delay_sensitivity(runs);
        const auto self = normalized(raw, raw.raw_slope);
        CHECK(self.sensitivity == doctest::Approx(1.0));
    }

    SUBCASE("planted noisy slope recovered within 10% over 30 runs")
    {
        std::mt19937_64 rng(31);
        std::normal_distribution<double> noise(0.0, 0.05);
        std::uniform_real_distribution<double> m(8.0, 30.0);
        std::vector<RunObservation> runs;
        for (int i = 0; i < 30; ++i) {
            RunObservation r;
            r.app = "bia-like";
            r.expected_delivery = m(rng);
            r.runtime = 0.18 * r.expected_delivery + 5.0 + noise(rng);
            runs.push_back(r);
        }
        const auto model = fit_delay_sensitivity(runs);
        CHECK(std::abs(model.sensitivity - 0.18) / 0.18 < 0.10);
    }

    SUBCASE("degenerate inputs raise fit errors")
    {
        std::vector<RunObservation> runs(4);
        for (auto& r : runs) {
            r.app = "x";
            r.expected_delivery = 9.0;
            r.runtime = 100.0;
        }
        CHECK_THROWS_AS(fit_delay_sensitivity(runs), FitError); // no congestion variation
        CHECK_THROWS_AS(fit_delay_sensitivity({runs[0]}), FitError);
    }

    SUBCASE("affine equivariance in the runtimes")
    {
        std::vector<RunObservation> runs;
        std::mt19937_64 rng(12);
        for (int i = 0; i < 12; ++i) {
            RunObservation r;
            r.app = "x";
            r.expected_delivery = 4.0 + double(rng() % 100) / 5.0;
            r.runtime = 3.0 * r.expected_delivery + 7.0 + double(rng() % 10) / 10.0;
            runs.push_back(r);
        }
        const auto base = fit_delay_sensitivity(runs);

        auto scaled = runs;
        for (auto& r : scaled)
            r.runtime *= 2.5;
        const auto fit_scaled = fit_delay_sensitivity(scaled);
        CHECK(fit_scaled.raw_slope == doctest::Approx(2.5 * base.raw_slope));
        CHECK(fit_scaled.intercept == doctest::Approx(2.5 * base.intercept));

        auto shifted = runs;
        for (auto& r : shifted)
            r.runtime += 11.0;
        const auto fit_shifted = fit_delay_sensitivity(shifted);
        CHECK(fit_shifted.raw_slope == doctest::Approx(base.raw_slope));
        CHECK(fit_shifted.intercept == doctest::Approx(base.intercept + 11.0));
    }
}

TEST_CASE("pearson correlation")
{
    SUBCASE("perfect positive and negative lines")
    {
        const std::vector<double> xs = {1, 2, 3, 4, 5};
        std::vector<double> ys;
        for (const double x : xs)
            ys.push_back(2 * x + 1);
        CHECK(pearson_correlation(xs, ys) == doctest::Approx(1.0));
        for (auto& y : ys)
            y = -y;
        CHECK(pearson_correlation(xs, ys) == doctest::Approx(-1.0));
    }

    SUBCASE("ten-point fixture matches an independent computation")
    {
        const std::vector<double> xs = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
        const std::vector<double> ys = {2.1, 3.9, 6.2, 8.1, 9.8, 12.2, 13.7, 16.3, 18.0, 19.9};
        long double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
        const int n = 10;
        for (int i = 0; i < n; ++i) {
            sx += xs[i];
            sy += ys[i];
            sxx += xs[i] * xs[i];
            syy += ys[i] * ys[i];
            sxy += xs[i] * ys[i];
        }
        const long double num = n * sxy - sx * sy;
        const long double den = std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
        CHECK(pearson_correlation(xs, ys) == doctest::Approx(double(num / den)).epsilon(1e-12));
    }

    SUBCASE("zero variance is an undefined-correlation error")
    {
        CHECK_THROWS_AS(pearson_correlation({1, 1, 1}, {1, 2, 3}), FitError);
        CHECK_THROWS_AS(pearson_correlation({1}, {2}), FitError);
    }
}

TEST_CASE("model files round-trip")
{
    SUBCASE("latency model set")
    {
        LatencyModel a;
        a.shape.path_lengths = {3, 4};
        a.coefficients = Eigen::VectorXd::LinSpaced(a.rtt_feature_size(), -1.25, 2.5);
        a.training.residual_norm = 0.125;
        a.training.pearson_r = 0.75;
        a.training.n_samples = 320;
        a.training.rank = 9;
        LatencyModel b;
        b.shape.path_lengths = {2};
        b.coefficients = Eigen::VectorXd::Constant(b.rtt_feature_size(), 0.5);
        LatencyModelSet set;
        set.models = {a, b};

        std::stringstream buf;
        write_latency_models(buf, set);
        const LatencyModelSet back = read_latency_models(buf);
        REQUIRE(back.models.size() == 2);
        CHECK(back.models[0].shape == a.shape);
        CHECK(back.models[0].coefficients == a.coefficients);
        CHECK(back.models[0].training.pearson_r == a.training.pearson_r);
        CHECK(back.models[1].coefficients == b.coefficients);
        CHECK(back.has_shape(a.shape));
        CHECK_THROWS_AS(back.for_shape(PathShape::parse("9")), NotFoundError);
    }

    SUBCASE("sensitivity model")
    {
        DelaySensitivityModel m;
        m.app = "victim";
        m.sensitivity = 6.25;
        m.intercept = 512.5;
        m.raw_slope = 6.25;
        m.reference_slope = 1.0;
        m.fit_correlation = 0.875;
        m.n_runs = 30;
        std::stringstream buf;
        write_sensitivity_model(buf, m);
        const auto back = read_sensitivity_model(buf);
        CHECK(back.app == m.app);
        CHECK(back.sensitivity == m.sensitivity);
        CHECK(back.intercept == m.intercept);
        CHECK(back.fit_correlation == m.fit_correlation);
        CHECK(back.n_runs == m.n_runs);
    }

    SUBCASE("observations json lines")
    {
        std::vector<RunObservation> runs;
        RunObservation r;
        r.app = "a";
        r.placement = {3, 5, 9};
        r.expected_delivery = 12.5;
        r.runtime = 90.25;
        runs.push_back(r);
        std::stringstream buf;
        write_observations(buf, runs);
        const auto back = read_observations(buf);
        REQUIRE(back.size() == 1);
        CHECK(back[0].app == "a");
        CHECK(back[0].placement == std::vector<NodeId>{3, 5, 9});
        CHECK(back[0].expected_delivery == 12.5);
        CHECK(back[0].runtime == 90.25);
    }
}
