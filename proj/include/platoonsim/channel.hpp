// SPDX-License-Identifier: Apache-2.0
//
// platoonsim: 5G eV2X vehicle-platoon communication simulator

#pragma once

#include "platoonsim/radio.hpp"
#include "platoonsim/rng.hpp"
#include "platoonsim/types.hpp"

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace platoonsim {

inline constexpr double kSpeedOfLight = 3e8;

/// PL = 32.4 + 20 log10(d[m]) + 20 log10(fc[GHz]).
inline double path_loss_db(double distance_m, double carrier_ghz)
{
    if (!(distance_m > 0.0))
        throw std::invalid_argument("path_loss_db: distance must be positive");
    if (!(carrier_ghz > 0.0))
        throw std::invalid_argument("path_loss_db: carrier frequency must be positive");
    return 32.4 + 20.0 * std::log10(distance_m) + 20.0 * std::log10(carrier_ghz);
}

inline double doppler_hz(double speed_mps, double carrier_ghz)
{
    return std::abs(speed_mps) * carrier_ghz * 1e9 / kSpeedOfLight;
}

/// Rayleigh fading as a randomised sum of sinusoids (Zheng-Xiao variant of
/// Jakes' model):
///   h(t) = sqrt(2/M) sum_n e^{j psi_n} cos(2 pi fd t cos(alpha_n) + phi),
///   alpha_n = (2 pi n - pi + theta) / (4 M).
/// E|h|^2 = 1 and the autocorrelation of h follows J0(2 pi fd tau).
class JakesProcess {
public:
    JakesProcess() = default;

    JakesProcess(std::uint64_t seed, NodeId tx, NodeId rx, double doppler_hz, int oscillators)
        : doppler_hz_(doppler_hz)
    {
        if (oscillators < 1)
            throw std::invalid_argument("JakesProcess: need at least one oscillator");
        RandomStream rng(seed, StreamPurpose::FadingParams, tx, rx);
        const double pi = std::numbers::pi;
        const double theta = rng.uniform(-pi, pi);
        phase_ = rng.uniform(-pi, pi);
        const int m = oscillators;
        osc_.reserve(m);
        for (int n = 1; n <= m; ++n) {
            const double psi = rng.uniform(-pi, pi);
            const double alpha = (2.0 * pi * n - pi + theta) / (4.0 * m);
            osc_.push_back({2.0 * pi * doppler_hz * std::cos(alpha), std::cos(psi), std::sin(psi)});
        }
        scale_ = std::sqrt(2.0 / m);
    }

    std::complex<double> complex_gain(double t_seconds) const
    {
        double re = 0.0;
        double im = 0.0;
        for (const auto& o : osc_) {
            const double c = std::cos(o.omega * t_seconds + phase_);
            re += o.cos_psi * c;
            im += o.sin_psi * c;
        }
        return {scale_ * re, scale_ * im};
    }

    /// Multiplicative power gain |h(t)|^2.
    double gain(double t_seconds) const { return std::norm(complex_gain(t_seconds)); }

    double doppler() const { return doppler_hz_; }
    int oscillators() const { return static_cast<int>(osc_.size()); }

private:
    struct Oscillator {
        double omega;
        double cos_psi;
        double sin_psi;
    };
    std::vector<Oscillator> osc_;
    double phase_ = 0.0;
    double scale_ = 1.0;
    double doppler_hz_ = 0.0;
};

/// Transmit/receive ends of a link budget.
struct LinkBudget {
    double tx_power_dbm = 23.0;
    double tx_gain_dbi = 5.0;
    double rx_gain_dbi = 5.0;
    double noise_figure_db = 13.0;
};

struct LinkState {
    NodeId tx = 0;
    NodeId rx = 0;
    double distance_m = 1.0;
    double shadowing_db = 0.0; // static for the run
    bool fading_enabled = true;
    JakesProcess fading;
    double last_sinr_db = 0.0;
};

/// SINR in dB from path loss, shadowing and noise only: the large-scale
/// channel state a gNB learns from long-term measurements.
inline double large_scale_sinr_db(const LinkState& link, const LinkBudget& budget, const RadioParams& radio)
{
    return budget.tx_power_dbm + budget.tx_gain_dbi + budget.rx_gain_dbi
        - path_loss_db(link.distance_m, radio.carrier_ghz) - link.shadowing_db
        - radio.noise_floor_per_rb_dbm(budget.noise_figure_db);
}

/// Per-RB SINR in dB at time t. Interference (dBm, -inf for none) adds to the
/// noise floor in the linear domain.
inline double link_sinr_db(const LinkState& link, const LinkBudget& budget, const RadioParams& radio,
                           double t_seconds, double interference_dbm = -std::numeric_limits<double>::infinity())
{
    double rx_dbm = budget.tx_power_dbm + budget.tx_gain_dbi + budget.rx_gain_dbi
        - path_loss_db(link.distance_m, radio.carrier_ghz) - link.shadowing_db;
    if (link.fading_enabled)
        rx_dbm += 10.0 * std::log10(link.fading.gain(t_seconds));
    const double noise_dbm = radio.noise_floor_per_rb_dbm(budget.noise_figure_db);
    if (std::isinf(interference_dbm) && interference_dbm < 0)
        return rx_dbm - noise_dbm;
    const double n_plus_i_mw = std::pow(10.0, noise_dbm / 10.0) + std::pow(10.0, interference_dbm / 10.0);
    return rx_dbm - 10.0 * std::log10(n_plus_i_mw);
}

/// RBs needed to carry `payload_bits` at the given MCS.
inline int rbs_needed(std::uint64_t payload_bits, const McsEntry& mcs, int re_per_rb = 168)
{
    if (payload_bits == 0)
        return 0;
    const double per_rb = re_per_rb * mcs.efficiency;
    return static_cast<int>(std::ceil(static_cast<double>(payload_bits) / per_rb));
}

/// Logistic BLER anchored at 10% on the MCS threshold:
///   p(s) = 1 / (1 + 9 exp((s - threshold) / slope)).
inline double rb_error_probability(double sinr_db, const McsEntry& mcs)
{
    if (std::isinf(sinr_db))
        return sinr_db > 0 ? 0.0 : 1.0;
    const double x = (sinr_db - mcs.sinr_threshold_db) / mcs.bler_slope_db;
    return 1.0 / (1.0 + 9.0 * std::exp(x));
}

/// A CAM decodes only if every granted RB passes its own Bernoulli trial.
inline bool decode_cam(int granted_rbs, int demand_rbs, std::span<const double> rb_sinr_db, const McsEntry& mcs,
                       RandomStream& rng)
{
    if (granted_rbs < demand_rbs)
        throw std::logic_error("decode_cam: grant smaller than the RB demand");
    if (static_cast<int>(rb_sinr_db.size()) != granted_rbs)
        throw std::invalid_argument("decode_cam: one SINR per granted RB required");
    bool ok = true;
    // Every RB consumes one draw so the stream position does not depend on outcomes.
    for (double s : rb_sinr_db)
        if (rng.uniform() < rb_error_probability(s, mcs))
            ok = false;
    return ok;
}

} // namespace platoonsim
