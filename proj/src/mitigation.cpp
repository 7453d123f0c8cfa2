// SPDX-License-Identifier: Apache-2.0
#include "netscope/mitigation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace netscope {

namespace {
// below this, alpha is treated as fully drained; a pure EWMA never reaches 0
constexpr double kAlphaFloor = 1e-6;
} // namespace

const char* to_string(RatePolicy policy)
{
    switch (policy) {
    case RatePolicy::static_rate: return "static";
    case RatePolicy::dcqcn: return "dcqcn";
    case RatePolicy::netscope: return "netscope";
    }
    return "?";
}

RatePolicy rate_policy_from_string(const std::string& name)
{
    if (name == "static")
        return RatePolicy::static_rate;
    if (name == "dcqcn")
        return RatePolicy::dcqcn;
    if (name == "netscope")
        return RatePolicy::netscope;
    throw std::invalid_argument("unknown rate policy '" + name + "'");
}

RateControllerState make_rate_controller(RatePolicy policy, double line_rate,
                                         double nic_bandwidth, double sensitivity,
                                         double ewma_gain, double min_rate_fraction)
{
    if (line_rate <= 0.0 || nic_bandwidth <= 0.0)
        throw std::invalid_argument("make_rate_controller: rates must be positive");
    if (ewma_gain <= 0.0 || ewma_gain >= 1.0)
        throw std::invalid_argument("make_rate_controller: g must be in (0,1)");
    if (sensitivity < 0.0)
        throw std::invalid_argument("make_rate_controller: sensitivity must be >= 0");
    if (min_rate_fraction <= 0.0 || min_rate_fraction > 1.0)
        throw std::invalid_argument("make_rate_controller: min rate fraction in (0,1]");
    RateControllerState s;
    s.policy = policy;
    s.rate = line_rate;
    s.line_rate = line_rate;
    s.min_rate = min_rate_fraction * line_rate;
    s.nic_bandwidth = nic_bandwidth;
    s.sensitivity = sensitivity;
    s.ewma_gain = ewma_gain;
    return s;
}

double update_alpha(RateControllerState& state, double nic2hsn_signal)
{
    if (nic2hsn_signal < 0.0 || nic2hsn_signal > 1.0)
        throw std::invalid_argument("update_alpha: signal outside [0,1]");
    state.alpha = (1.0 - state.ewma_gain) * state.alpha + state.ewma_gain * nic2hsn_signal;
    if (state.alpha < kAlphaFloor)
        state.alpha = 0.0;
    return state.alpha;
}

double update_rate(RateControllerState& state)
{
    if (state.policy == RatePolicy::static_rate)
        return state.rate;
    const double c_eff = state.policy == RatePolicy::netscope ? state.sensitivity : 0.0;
    if (state.alpha > 0.0)
        state.rate = std::max(state.min_rate, state.rate * (1.0 - state.alpha / (2.0 + c_eff)));
    else
        state.rate = std::min(state.line_rate, state.rate + 1.0);
    return state.rate;
}

double injection_delay(double line_rate, double requested_rate, double nic_bandwidth)
{
    if (nic_bandwidth <= 0.0)
        throw std::invalid_argument("injection_delay: NIC bandwidth must be positive");
    if (requested_rate < 0.0 || requested_rate > line_rate)
        throw std::invalid_argument("injection_delay: requested rate outside [0, line rate]");
    return (line_rate - requested_rate) / nic_bandwidth;
}

DelayPlan make_delay_plan(double delta_t, double resolution)
{
    if (resolution <= 0.0)
        throw std::invalid_argument("make_delay_plan: resolution must be positive");
    if (delta_t < 0.0)
        throw std::invalid_argument("make_delay_plan: delay must be >= 0");
    DelayPlan plan;
    plan.delta_t = delta_t;
    plan.resolution = resolution;
    plan.fixed = std::floor(delta_t / resolution) * resolution;
    plan.bernoulli_p = (delta_t - plan.fixed) / resolution;
    return plan;
}

double draw(const DelayPlan& plan, std::mt19937_64& rng)
{
    double delay = plan.fixed;
    if (plan.bernoulli_p > 0.0) {
        std::bernoulli_distribution coin(plan.bernoulli_p);
        if (coin(rng))
            delay += plan.resolution;
    }
    return delay;
}

} // namespace netscope
