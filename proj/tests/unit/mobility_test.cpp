// SPDX-License-Identifier: Apache-2.0
//
// platoonsim: 5G eV2X vehicle-platoon communication simulator

#include "platoonsim/engine.hpp"
#include "platoonsim/mobility.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace platoonsim;

namespace {

CamMessage cam_from(const VehicleState& v, SimTime at)
{
    CamMessage c;
    c.source = v.id;
    c.generated = at;
    c.position = v.position;
    c.speed = v.speed;
    c.acceleration = v.acceleration;
    return c;
}

VehicleState vehicle(double x, double v, double a = 0.0)
{
    VehicleState s;
    s.position = x;
    s.speed = v;
    s.acceleration = a;
    return s;
}

} // namespace

TEST(StepKinematics, UniformMotion)
{
    const auto s = step_kinematics(vehicle(0, 10), 0.1, 2.5);
    EXPECT_NEAR(s.position, 1.0, 1e-12);
    EXPECT_DOUBLE_EQ(s.speed, 10.0);
}

TEST(StepKinematics, AccelerationIsClamped)
{
    auto s = step_kinematics(vehicle(0, 10, 5.0), 1.0, 2.5);
    EXPECT_DOUBLE_EQ(s.acceleration, 2.5);
    EXPECT_DOUBLE_EQ(s.speed, 12.5);
    EXPECT_DOUBLE_EQ(s.position, 11.25);
    s = step_kinematics(vehicle(0, 10, -7.0), 0.1, 2.5);
    EXPECT_DOUBLE_EQ(s.acceleration, -2.5);
}

TEST(StepKinematics, SpeedNeverNegative)
{
    const auto s = step_kinematics(vehicle(0, 1, -2.5), 1.0, 2.5);
    EXPECT_EQ(s.speed, 0.0);
}

TEST(StepKinematics, RejectsNonPositiveStep)
{
    EXPECT_THROW(step_kinematics(vehicle(0, 1), 0.0, 2.5), std::invalid_argument);
    EXPECT_THROW(step_kinematics(vehicle(0, 1), -0.1, 2.5), std::invalid_argument);
}

TEST(PlfControl, EquilibriumGivesZero)
{
    const PlfGains g;
    const SimTime now = from_seconds(1.0);
    const auto self = vehicle(0, 10);
    const auto pred = vehicle(11, 10);
    const auto lead = vehicle(22, 10);
    const auto u = plf_control_input(self, cam_from(lead, now), cam_from(pred, now), g, now, from_seconds(0.1));
    EXPECT_FALSE(u.stale);
    EXPECT_EQ(u.acceleration, 0.0);
}

TEST(PlfControl, BlendsReferenceAccelerations)
{
    const PlfGains g; // C1 = 0.5
    const SimTime now = from_seconds(1.0);
    const auto self = vehicle(0, 10);
    const auto u = plf_control_input(self, cam_from(vehicle(22, 10, 1.0), now), cam_from(vehicle(11, 10, 1.0), now),
                                     g, now, from_seconds(0.1));
    EXPECT_NEAR(u.acceleration, 1.0, 1e-12);
}

TEST(PlfControl, LeaderWeightIsC1)
{
    PlfGains g;
    g.c1 = 0.8;
    const SimTime now = from_seconds(1.0);
    const auto self = vehicle(0, 10);
    const auto u = plf_control_input(self, cam_from(vehicle(22, 10, 1.0), now), cam_from(vehicle(11, 10, 0.0), now),
                                     g, now, from_seconds(0.1));
    EXPECT_NEAR(u.acceleration, 0.8, 1e-12);
}

TEST(PlfControl, TooCloseBrakes)
{
    const PlfGains g;
    const SimTime now = from_seconds(1.0);
    const auto u = plf_control_input(vehicle(0, 10), cam_from(vehicle(21, 10), now), cam_from(vehicle(10, 10), now), g,
                                     now, from_seconds(0.1));
    EXPECT_LT(u.acceleration, 0.0);
    EXPECT_NEAR(u.acceleration, -g.omega_n * g.omega_n * 1.0, 1e-12);
}

TEST(PlfControl, ExtrapolatesCamsToNow)
{
    const PlfGains g;
    const SimTime gen = from_seconds(1.0);
    const SimTime now = from_seconds(1.05);
    // Both CAMs 50 ms old, everyone at 10 m/s: extrapolation keeps the gap at 11 m.
    const auto u = plf_control_input(vehicle(0.5, 10), cam_from(vehicle(22, 10), gen), cam_from(vehicle(11, 10), gen),
                                     g, now, from_seconds(0.1));
    EXPECT_NEAR(u.acceleration, 0.0, 1e-12);
}

TEST(PlfControl, StaleCamHoldsAcceleration)
{
    const PlfGains g;
    const SimTime now = from_seconds(1.0);
    const auto self = vehicle(0, 10, 0.3);
    const auto u = plf_control_input(self, cam_from(vehicle(22, 10), now - from_seconds(0.21)),
                                     cam_from(vehicle(11, 10), now), g, now, from_seconds(0.1));
    EXPECT_TRUE(u.stale);
    EXPECT_EQ(u.acceleration, 0.3);
    const auto fresh = plf_control_input(self, cam_from(vehicle(22, 10), now - from_seconds(0.2)),
                                         cam_from(vehicle(11, 10), now), g, now, from_seconds(0.1));
    EXPECT_FALSE(fresh.stale);
}

TEST(PlfControl, ContinuousInInputs)
{
    const PlfGains g;
    const SimTime now = from_seconds(1.0);
    const auto base = plf_control_input(vehicle(0.3, 9.7, 0.1), cam_from(vehicle(22.1, 10.2, 0.4), now),
                                        cam_from(vehicle(11.2, 10.1, -0.2), now), g, now, from_seconds(0.1));
    const double eps = 1e-9;
    const double perturbed[][7] = {
        {0.3 + eps, 9.7, 22.1, 10.2, 0.4, 11.2, 10.1},  {0.3, 9.7 + eps, 22.1, 10.2, 0.4, 11.2, 10.1},
        {0.3, 9.7, 22.1 + eps, 10.2, 0.4, 11.2, 10.1},  {0.3, 9.7, 22.1, 10.2 + eps, 0.4, 11.2, 10.1},
        {0.3, 9.7, 22.1, 10.2, 0.4 + eps, 11.2, 10.1},  {0.3, 9.7, 22.1, 10.2, 0.4, 11.2 + eps, 10.1},
        {0.3, 9.7, 22.1, 10.2, 0.4, 11.2, 10.1 + eps},
    };
    for (const auto& p : perturbed) {
        const auto u = plf_control_input(vehicle(p[0], p[1], 0.1), cam_from(vehicle(p[2], p[3], p[4]), now),
                                         cam_from(vehicle(p[5], p[6], -0.2), now), g, now, from_seconds(0.1));
        EXPECT_LT(std::abs(u.acceleration - base.acceleration), 1e-6);
    }
}

TEST(LinkDistance, Examples)
{
    EXPECT_DOUBLE_EQ(link_distance(0, 4, 11.0), 44.0);
    EXPECT_DOUBLE_EQ(link_distance(3, 3, 11.0), 0.0);
    EXPECT_DOUBLE_EQ(link_distance(2, 7, 11.0), 55.0);
    EXPECT_DOUBLE_EQ(link_distance(7, 2, 11.0), 55.0);
}

TEST(LinkDistance, CrossPlatoonIsAnError)
{
    VehicleState a, b;
    a.platoon = 0;
    b.platoon = 1;
    EXPECT_THROW(link_distance(a, b, 11.0), std::invalid_argument);
}

TEST(Mobility, ConstantSpeedKeepsGaps)
{
    ScenarioConfig c;
    c.sim_duration_s = 60.0;
    c.num_platoons = 2;
    const auto r = run_simulation_detailed(c, 3);
    const World w = build_world(c);
    for (const auto& p : w.platoons)
        for (std::size_t i = 1; i < p.vehicles.size(); ++i)
            EXPECT_NEAR(r.stats.final_positions[p.vehicles[i - 1]] - r.stats.final_positions[p.vehicles[i]], 11.0, 1e-9);
    EXPECT_NEAR(r.stats.final_positions[0], 44.0 + 600.0, 1e-9);
}

TEST(Mobility, PlfEquilibriumIsPreserved)
{
    ScenarioConfig c;
    c.mobility_mode = MobilityMode::Plf;
    c.sim_duration_s = 20.0;
    c.fading = false;
    c.shadowing = false;
    const auto r = run_simulation_detailed(c, 3);
    for (std::size_t i = 1; i < r.stats.final_positions.size(); ++i)
        EXPECT_NEAR(r.stats.final_positions[i - 1] - r.stats.final_positions[i], 11.0, 1e-6);
    EXPECT_NEAR(r.stats.final_positions[0], 44.0 + 200.0, 1e-6);
}
