// SPDX-License-Identifier: Apache-2.0
//
// platoonsim: 5G eV2X vehicle-platoon communication simulator

#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace platoonsim {

/// Simulation clock. Integer nanoseconds keep event ordering exact.
using SimTime = std::chrono::nanoseconds;

inline SimTime from_seconds(double s)
{
    return SimTime{static_cast<std::int64_t>(std::llround(s * 1e9))};
}
inline SimTime from_millis(double ms)
{
    return SimTime{static_cast<std::int64_t>(std::llround(ms * 1e6))};
}
inline double to_seconds(SimTime t) { return static_cast<double>(t.count()) * 1e-9; }
inline double to_millis(SimTime t) { return static_cast<double>(t.count()) * 1e-6; }

/// Vehicles are nodes 0..M*N-1 (platoon-major); the gNB follows them.
using NodeId = std::uint32_t;

enum class IftKind { CarToServer, MultiHop, OneHop };
enum class SchedulerKind { MaxCI, PF, DRR };
enum class MobilityMode { ConstantSpeed, Plf };
enum class VehicleRole { Leader, Member, Tail };

inline std::string_view to_string(IftKind k)
{
    switch (k) {
    case IftKind::CarToServer: return "car_to_server";
    case IftKind::MultiHop: return "multi_hop";
    case IftKind::OneHop: return "one_hop";
    }
    throw std::invalid_argument("unknown IFT kind");
}

inline std::string_view to_string(SchedulerKind k)
{
    switch (k) {
    case SchedulerKind::MaxCI: return "maxci";
    case SchedulerKind::PF: return "pf";
    case SchedulerKind::DRR: return "drr";
    }
    throw std::invalid_argument("unknown scheduler kind");
}

inline std::string_view to_string(MobilityMode m)
{
    return m == MobilityMode::ConstantSpeed ? "constant" : "plf";
}

/// Kinematic snapshot plus platoon identity of one vehicle.
struct VehicleState {
    NodeId id = 0;
    std::uint32_t platoon = 0;
    std::uint32_t index = 0; // position in platoon, 0 = leader
    std::uint32_t lane = 0;
    VehicleRole role = VehicleRole::Member;
    double position = 0.0;     // m, 1-D along the highway, vehicle reference point
    double speed = 0.0;        // m/s
    double acceleration = 0.0; // m/s^2
    bool operator==(const VehicleState&) const = default;
};

/// One cooperative awareness message.
struct CamMessage {
    std::uint64_t seq = 0;
    SimTime generated{0};
    NodeId source = 0;
    std::uint32_t platoon = 0;
    std::uint32_t lane = 0;
    std::uint32_t app_bytes = 110;
    std::uint32_t air_bytes = 130; // app + lower-layer overhead
    // kinematic payload at generation time
    double position = 0.0;
    double speed = 0.0;
    double acceleration = 0.0;

    std::uint32_t air_bits() const { return air_bytes * 8u; }
};

} // namespace platoonsim
