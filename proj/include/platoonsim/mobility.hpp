// SPDX-License-Identifier: Apache-2.0
//
// platoonsim: 5G eV2X vehicle-platoon communication simulator

#pragma once

#include "platoonsim/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace platoonsim {

/// Predecessor-leader following CACC gains. `c1` weights the leader.
struct PlfGains {
    double c1 = 0.5;
    double xi = 1.0;
    double omega_n = 0.2;
    double desired_gap_m = 11.0; // reference-point spacing to the predecessor
    bool operator==(const PlfGains&) const = default;
};

/// Constant-acceleration step. Acceleration is clamped to +-max_accel first;
/// speed never goes negative.
inline VehicleState step_kinematics(VehicleState s, double dt, double max_accel)
{
    if (!(dt > 0.0))
        throw std::invalid_argument("step_kinematics: dt must be positive");
    s.acceleration = std::clamp(s.acceleration, -max_accel, max_accel);
    s.position += s.speed * dt + 0.5 * s.acceleration * dt * dt;
    s.speed = std::max(0.0, s.speed + s.acceleration * dt);
    return s;
}

struct ControlOutput {
    double acceleration = 0.0;
    bool stale = false; // a CAM was older than twice the control period
};

namespace detail {
// CAM state advanced to `now` assuming the sender kept its acceleration.
struct Extrapolated {
    double position;
    double speed;
};
inline Extrapolated extrapolate(const CamMessage& cam, SimTime now)
{
    const double age = to_seconds(now - cam.generated);
    return {cam.position + cam.speed * age + 0.5 * cam.acceleration * age * age,
            cam.speed + cam.acceleration * age};
}
} // namespace detail

/// PLF-CACC law (Rajamani form, as used by Plexe):
///   u = (1-C1) a_pred + C1 a_lead + a3 (v - v_pred) + a4 (v - v_lead) - wn^2 e
/// with e = desired gap - actual gap (positive when too close),
///   a3 = -(2 xi - C1 (xi + sqrt(xi^2-1))) wn,  a4 = -C1 (xi + sqrt(xi^2-1)) wn.
inline ControlOutput plf_control_input(const VehicleState& self, const CamMessage& leader_cam,
                                       const CamMessage& pred_cam, const PlfGains& gains, SimTime now,
                                       SimTime control_period)
{
    const SimTime stale_after = 2 * control_period;
    if (now - leader_cam.generated > stale_after || now - pred_cam.generated > stale_after)
        return {self.acceleration, true};

    const auto lead = detail::extrapolate(leader_cam, now);
    const auto pred = detail::extrapolate(pred_cam, now);

    const double root = gains.xi + std::sqrt(std::max(0.0, gains.xi * gains.xi - 1.0));
    const double a_pred = 1.0 - gains.c1;
    const double a_lead = gains.c1;
    const double k_rel_speed = -(2.0 * gains.xi - gains.c1 * root) * gains.omega_n;
    const double k_lead_speed = -gains.c1 * root * gains.omega_n;
    const double k_gap = -gains.omega_n * gains.omega_n;

    const double gap_error = gains.desired_gap_m - (pred.position - self.position);
    const double u = a_pred * pred_cam.acceleration + a_lead * leader_cam.acceleration
        + k_rel_speed * (self.speed - pred.speed) + k_lead_speed * (self.speed - lead.speed)
        + k_gap * gap_error;
    return {u, false};
}

/// Reference-point distance between two members of the same platoon.
inline double link_distance(std::uint32_t index_a, std::uint32_t index_b, double gap_m)
{
    const auto hops = index_a > index_b ? index_a - index_b : index_b - index_a;
    return static_cast<double>(hops) * gap_m;
}

inline double link_distance(const VehicleState& a, const VehicleState& b, double gap_m)
{
    if (a.platoon != b.platoon)
        throw std::invalid_argument("link_distance: vehicles belong to different platoons");
    return link_distance(a.index, b.index, gap_m);
}

} // namespace platoonsim
