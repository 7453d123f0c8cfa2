// SPDX-License-Identifier: Apache-2.0
#ifndef NETSCOPE_MITIGATION_HPP
#define NETSCOPE_MITIGATION_HPP

#include <cstdint>
#include <random>
#include <string>

namespace netscope {

enum class RatePolicy : uint8_t {
    static_rate, // fixed rate, never adapts
    dcqcn,       // AIMD with the stock decrease step (sensitivity ignored)
    netscope,    // AIMD with the sensitivity-weakened decrease step
};

const char* to_string(RatePolicy policy);
RatePolicy rate_policy_from_string(const std::string& name);

/// Per (application, node) source rate controller. One measurement window per
/// update; externally synchronized with its node's simulation loop.
struct RateControllerState {
    RatePolicy policy = RatePolicy::static_rate;
    double alpha = 0.0;       // EWMA of the congestion signal, in [0,1]
    double ewma_gain = 1.0 / 16; // g, in (0,1)
    double rate = 0.0;        // R_a, flits/tick
    double line_rate = 0.0;   // R_line
    double min_rate = 0.0;    // floor; additive recovery restarts from here
    double nic_bandwidth = 0.0; // B_nic, flits/tick
    double sensitivity = 0.0; // c_a (netscope only)
};

RateControllerState make_rate_controller(RatePolicy policy, double line_rate,
                                         double nic_bandwidth, double sensitivity = 0.0,
                                         double ewma_gain = 1.0 / 16,
                                         double min_rate_fraction = 0.01);

/// alpha' = (1-g)*alpha + g*signal, clamped to zero below 1e-6 so the
/// additive branch can engage once congestion clears. Returns the new alpha.
double update_alpha(RateControllerState& state, double nic2hsn_signal);

/// One AIMD window: multiplicative decrease R*(1 - alpha/(2+c)) while alpha>0,
/// else additive increase R+1; bounded to [min_rate, line_rate]. The static
/// policy never moves. Returns the new rate.
double update_rate(RateControllerState& state);

/// Delay between consecutive messages that lowers injection from the line
/// rate to `requested_rate`: (R_line - R_req) / B_nic ticks.
double injection_delay(double line_rate, double requested_rate, double nic_bandwidth);

/// Realizes a fractional delay at a coarser realizable resolution: a fixed
/// part plus a Bernoulli remainder, so E[draw] equals the requested delay.
struct DelayPlan {
    double delta_t = 0.0;    // requested expected delay, ticks
    double resolution = 1.0; // minimum realizable delay, ticks
    double fixed = 0.0;      // deterministic part, multiple of resolution
    double bernoulli_p = 0.0; // probability of one extra `resolution` delay
};

DelayPlan make_delay_plan(double delta_t, double resolution);
double draw(const DelayPlan& plan, std::mt19937_64& rng);

} // namespace netscope

#endif // NETSCOPE_MITIGATION_HPP
