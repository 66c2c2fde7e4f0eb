#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <utility>

#include "aoi_sim/rng.hpp"

namespace aoisim {

enum class TrafficState { LowTraffic, HighTraffic };

struct ChannelConfig {
    double mean_delay_low_ms = 60.0;   // E[Y] in the low-traffic state
    double mean_delay_high_ms = 240.0; // E[Y] in the high-traffic state
    double lambda_switch = 0.0005;     // transitions/ms, low -> high
    double mu_switch = 0.001;          // transitions/ms, high -> low
    bool burstiness_enabled = false;
    // Alternative parameterization: stationary P{low} = 1 - exp(-eta^2).
    std::optional<double> eta;
    // Poisson background rates (lambda_H, lambda_L); carried in the config
    // but not used to drive delivery (cameras generate deterministically).
    std::optional<std::pair<double, double>> background_rates;

    void validate() const {
        if (mean_delay_low_ms <= 0.0)
            throw std::invalid_argument("channel: mean_delay_low must be > 0");
        if (burstiness_enabled) {
            if (mean_delay_high_ms <= 0.0)
                throw std::invalid_argument("channel: mean_delay_high must be > 0");
            if (lambda_switch < 0.0 || mu_switch < 0.0)
                throw std::invalid_argument("channel: switch rates must be >= 0");
        }
        if (eta && *eta <= 0.0)
            throw std::invalid_argument("channel: eta must be > 0");
    }
};

struct ChannelState {
    TrafficState traffic_state = TrafficState::LowTraffic;
    long last_switch_slot = 0;
};

using Matrix2 = std::array<std::array<double, 2>, 2>;

/// Q = [[-lambda, lambda], [mu, -mu]]; rows sum to zero.
inline Matrix2 generator_matrix(const ChannelConfig& cfg) {
    cfg.validate();
    return {{{-cfg.lambda_switch, cfg.lambda_switch},
             {cfg.mu_switch, -cfg.mu_switch}}};
}

/// Closed-form P(t) = exp(Q t) for the two-state chain.
inline Matrix2 transition_matrix(const ChannelConfig& cfg, double t_ms) {
    cfg.validate();
    if (t_ms < 0.0)
        throw std::invalid_argument("transition_matrix: t must be >= 0");
    const double l = cfg.lambda_switch;
    const double m = cfg.mu_switch;
    const double rate = l + m;
    if (rate == 0.0) return {{{1.0, 0.0}, {0.0, 1.0}}};
    const double e = std::exp(-t_ms * rate);
    return {{{(m + l * e) / rate, (l - l * e) / rate},
             {(m - m * e) / rate, (l + m * e) / rate}}};
}

/// Stationary (p_low, p_high) = (mu, lambda) / (lambda + mu). If eta is set,
/// enforces p_low = 1 - exp(-eta^2) to 1e-9.
inline std::pair<double, double> stationary_distribution(const ChannelConfig& cfg) {
    cfg.validate();
    const double rate = cfg.lambda_switch + cfg.mu_switch;
    if (rate == 0.0)
        throw std::invalid_argument("stationary_distribution: lambda + mu must be > 0");
    const double p_low = cfg.mu_switch / rate;
    if (cfg.eta) {
        const double expected = 1.0 - std::exp(-(*cfg.eta) * (*cfg.eta));
        if (std::abs(p_low - expected) > 1e-9)
            throw std::invalid_argument(
                "stationary_distribution: eta inconsistent with (lambda, mu)");
    }
    return {p_low, 1.0 - p_low};
}

/// One exact CTMC step over slot_len_ms, sampling from the state's row of
/// the transition matrix.
inline ChannelState step_traffic_state(const ChannelState& state, const ChannelConfig& cfg,
                                       double slot_len_ms, Rng& rng, long slot = 0) {
    const Matrix2 p = transition_matrix(cfg, slot_len_ms);
    const int row = state.traffic_state == TrafficState::LowTraffic ? 0 : 1;
    const double u = rng.uniform01();
    const TrafficState next = u < p[row][0] ? TrafficState::LowTraffic
                                            : TrafficState::HighTraffic;
    ChannelState out = state;
    if (next != state.traffic_state) out.last_switch_slot = slot;
    out.traffic_state = next;
    return out;
}

/// Exponential delay with the state-dependent mean, quantized to whole slots
/// by ceiling, minimum 1 slot.
inline long sample_transmission_delay(const ChannelState& state, const ChannelConfig& cfg,
                                      double slot_len_ms, Rng& rng) {
    const double mean = (cfg.burstiness_enabled &&
                         state.traffic_state == TrafficState::HighTraffic)
                            ? cfg.mean_delay_high_ms
                            : cfg.mean_delay_low_ms;
    const double delay_ms = rng.exponential(mean);
    const long slots = static_cast<long>(std::ceil(delay_ms / slot_len_ms));
    return slots < 1 ? 1 : slots;
}

}  // namespace aoisim
