// SPDX-License-Identifier: Apache-2.0
//
// platoonsim: 5G eV2X vehicle-platoon communication simulator

#pragma once

#include "platoonsim/config.hpp"
#include "platoonsim/types.hpp"

#include <optional>
#include <stdexcept>
#include <vector>

namespace platoonsim {

enum class LegKind { V2V, UL, DL, Relay };

/// One scheduled transmission of a CAM. `proc_delay` elapses between the
/// completion of `depends_on` (or CAM generation) and the leg becoming ready.
struct TransmissionLeg {
    LegKind kind = LegKind::V2V;
    NodeId tx = 0;
    std::vector<NodeId> rx;
    std::optional<std::size_t> depends_on;
    SimTime proc_delay{0};
};

struct RoutingDelays {
    SimTime relay_proc = from_millis(0.5);
    SimTime core_proc = from_millis(1.0);
};

/// Outcome of one CAM at one receiver.
struct DeliveryRecord {
    std::uint64_t cam_seq = 0;
    NodeId source = 0;
    NodeId receiver = 0;
    std::optional<SimTime> delivered_at; // empty: lost
    int hops = 0;
};

/// Platoon-id subscription: same platoon, not the sender itself.
inline bool subscriber_filter(const CamMessage& cam, const VehicleState& candidate)
{
    return candidate.platoon == cam.platoon && candidate.id != cam.source;
}

/// Expands a CAM into its transmission legs for the given topology.
///
/// CarToServer: one UL leg to the gNB, then one DL leg per platoon mate.
/// MultiHop: a relay chain towards the tail and, for non-leaders, one towards
/// the leader; every leg has a single receiver.
/// OneHop: a single broadcast leg to all platoon mates.
inline std::vector<TransmissionLeg> plan_legs(const CamMessage& cam, IftKind kind, const World& world,
                                              const RoutingDelays& delays = {})
{
    const VehicleState& src = world.vehicles.at(cam.source);
    const PlatoonSpec& platoon = world.platoons.at(src.platoon);
    std::vector<NodeId> mates;
    for (NodeId v : platoon.vehicles)
        if (subscriber_filter(cam, world.vehicles[v]))
            mates.push_back(v);

    std::vector<TransmissionLeg> legs;
    switch (kind) {
    case IftKind::OneHop:
        legs.push_back({LegKind::V2V, src.id, mates, std::nullopt, SimTime{0}});
        break;
    case IftKind::CarToServer: {
        legs.push_back({LegKind::UL, src.id, {world.gnb_node()}, std::nullopt, SimTime{0}});
        for (NodeId r : mates)
            legs.push_back({LegKind::DL, world.gnb_node(), {r}, 0, delays.core_proc});
        break;
    }
    case IftKind::MultiHop: {
        const auto n = static_cast<std::uint32_t>(platoon.vehicles.size());
        auto chain = [&](int step) {
            std::optional<std::size_t> prev;
            for (int i = static_cast<int>(src.index); i + step >= 0 && i + step < static_cast<int>(n); i += step) {
                const NodeId tx = platoon.vehicles[i];
                const NodeId rx = platoon.vehicles[i + step];
                if (!prev)
                    legs.push_back({LegKind::V2V, tx, {rx}, std::nullopt, SimTime{0}});
                else
                    legs.push_back({LegKind::Relay, tx, {rx}, prev, delays.relay_proc});
                prev = legs.size() - 1;
            }
        };
        chain(+1);
        chain(-1);
        break;
    }
    default:
        throw std::invalid_argument("plan_legs: unknown IFT kind");
    }
    return legs;
}

/// First slot boundary at or after t.
inline SimTime next_slot_boundary(SimTime t, SimTime slot)
{
    const auto k = (t.count() + slot.count() - 1) / slot.count();
    return SimTime{k * slot.count()};
}

struct LegTiming {
    SimTime start{0};            // dependency completion, or CAM generation for root legs
    SimTime grant_slot_start{0}; // start of the slot carrying the grant
    int slots_used = 1;
    SimTime slot{125'000};
};

/// Time from `start` to the end of the leg's transmission: processing, wait
/// for the grant (slot alignment and queuing) and the slots on air. Empty when
/// the receiver failed to decode.
inline std::optional<SimTime> leg_delay(const TransmissionLeg& leg, const LegTiming& timing, bool decoded)
{
    if (timing.grant_slot_start < timing.start + leg.proc_delay)
        throw std::logic_error("leg_delay: grant precedes the leg's ready time");
    if (!decoded)
        return std::nullopt;
    return (timing.grant_slot_start - timing.start) + timing.slots_used * timing.slot;
}

} // namespace platoonsim
