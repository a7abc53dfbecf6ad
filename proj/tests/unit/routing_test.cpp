// SPDX-License-Identifier: Apache-2.0
//
// platoonsim: 5G eV2X vehicle-platoon communication simulator

#include "platoonsim/ift_routing.hpp"

#include <gtest/gtest.h>

#include <map>
#include <set>

using namespace platoonsim;

namespace {

World world_of(int m, int n)
{
    ScenarioConfig c;
    c.num_platoons = m;
    c.platoon_length = n;
    return build_world(c);
}

CamMessage cam_of(const World& w, NodeId src)
{
    CamMessage c;
    c.source = src;
    c.platoon = w.vehicles[src].platoon;
    c.lane = w.vehicles[src].lane;
    return c;
}

// Hop count per receiver: depth of the leg that reaches it.
std::map<NodeId, int> hops_of(const std::vector<TransmissionLeg>& legs)
{
    std::vector<int> depth(legs.size(), 1);
    std::map<NodeId, int> hops;
    for (std::size_t i = 0; i < legs.size(); ++i) {
        if (legs[i].depends_on)
            depth[i] = depth[*legs[i].depends_on] + 1;
        for (NodeId r : legs[i].rx)
            hops[r] = depth[i];
    }
    return hops;
}

} // namespace

TEST(PlanLegs, OneHopFromLeader)
{
    const World w = world_of(1, 5);
    const auto legs = plan_legs(cam_of(w, 0), IftKind::OneHop, w);
    ASSERT_EQ(legs.size(), 1u);
    EXPECT_EQ(legs[0].kind, LegKind::V2V);
    EXPECT_EQ(legs[0].rx.size(), 4u);
    EXPECT_EQ(legs[0].proc_delay, SimTime{0});
}

TEST(PlanLegs, MultiHopFromLeaderIsAChainToTheTail)
{
    const World w = world_of(1, 5);
    const auto legs = plan_legs(cam_of(w, 0), IftKind::MultiHop, w);
    ASSERT_EQ(legs.size(), 4u);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(legs[i].tx, static_cast<NodeId>(i));
        ASSERT_EQ(legs[i].rx.size(), 1u);
        EXPECT_EQ(legs[i].rx[0], static_cast<NodeId>(i + 1));
        if (i == 0) {
            EXPECT_FALSE(legs[i].depends_on);
            EXPECT_EQ(legs[i].kind, LegKind::V2V);
        } else {
            EXPECT_EQ(legs[i].depends_on, i - 1);
            EXPECT_EQ(legs[i].kind, LegKind::Relay);
            EXPECT_EQ(legs[i].proc_delay, from_millis(0.5));
        }
    }
}

TEST(PlanLegs, CarToServerIsUplinkThenDownlinks)
{
    const World w = world_of(1, 5);
    const auto legs = plan_legs(cam_of(w, 0), IftKind::CarToServer, w);
    ASSERT_EQ(legs.size(), 5u);
    EXPECT_EQ(legs[0].kind, LegKind::UL);
    EXPECT_EQ(legs[0].rx, std::vector<NodeId>{w.gnb_node()});
    for (std::size_t i = 1; i < 5; ++i) {
        EXPECT_EQ(legs[i].kind, LegKind::DL);
        EXPECT_EQ(legs[i].tx, w.gnb_node());
        EXPECT_EQ(legs[i].depends_on, 0u);
        EXPECT_EQ(legs[i].proc_delay, from_millis(1.0));
    }
}

TEST(PlanLegs, MidPlatoonMultiHopRelaysBothWays)
{
    const World w = world_of(1, 6);
    const auto legs = plan_legs(cam_of(w, 2), IftKind::MultiHop, w);
    const auto hops = hops_of(legs);
    EXPECT_EQ(hops.at(3), 1);
    EXPECT_EQ(hops.at(5), 3);
    EXPECT_EQ(hops.at(1), 1);
    EXPECT_EQ(hops.at(0), 2);
    EXPECT_EQ(hops.size(), 5u);
}

TEST(PlanLegs, EveryMateReceivedExactlyOnceWithExpectedHops)
{
    for (int m = 1; m <= 3; ++m) {
        for (int n = 2; n <= 10; ++n) {
            const World w = world_of(m, n);
            for (const auto& v : w.vehicles) {
                for (auto kind : {IftKind::OneHop, IftKind::MultiHop, IftKind::CarToServer}) {
                    const auto legs = plan_legs(cam_of(w, v.id), kind, w);
                    std::multiset<NodeId> receivers;
                    for (std::size_t i = 0; i < legs.size(); ++i) {
                        if (legs[i].depends_on) {
                            ASSERT_LT(*legs[i].depends_on, i); // acyclic: only earlier legs
                        }
                        for (NodeId r : legs[i].rx)
                            if (r != w.gnb_node())
                                receivers.insert(r);
                    }
                    std::multiset<NodeId> expected;
                    for (NodeId r : w.platoons[v.platoon].vehicles)
                        if (r != v.id)
                            expected.insert(r);
                    ASSERT_EQ(receivers, expected);

                    const auto hops = hops_of(legs);
                    for (NodeId r : expected) {
                        const int dist = std::abs(static_cast<int>(w.vehicles[r].index) - static_cast<int>(v.index));
                        const int want = kind == IftKind::OneHop ? 1 : kind == IftKind::MultiHop ? dist : 2;
                        ASSERT_EQ(hops.at(r), want);
                    }
                }
            }
        }
    }
}

TEST(PlanLegs, MultiHopChainsAreSimple)
{
    const World w = world_of(1, 8);
    const auto legs = plan_legs(cam_of(w, 3), IftKind::MultiHop, w);
    std::map<std::size_t, int> children;
    for (const auto& l : legs) {
        ASSERT_EQ(l.rx.size(), 1u);
        if (l.depends_on) {
            ++children[*l.depends_on];
            EXPECT_EQ(legs[*l.depends_on].rx[0], l.tx);
        }
    }
    for (const auto& [leg, count] : children)
        EXPECT_EQ(count, 1);
}

TEST(SubscriberFilter, PlatoonIdentity)
{
    const World w = world_of(2, 5);
    const CamMessage cam = cam_of(w, 0);
    EXPECT_TRUE(subscriber_filter(cam, w.vehicles[1]));
    EXPECT_FALSE(subscriber_filter(cam, w.vehicles[5]));
    EXPECT_FALSE(subscriber_filter(cam, w.vehicles[0]));
}

TEST(LegDelay, SlotArithmetic)
{
    TransmissionLeg leg;
    LegTiming t;
    t.start = SimTime{100'000};
    t.grant_slot_start = next_slot_boundary(t.start, t.slot);
    EXPECT_EQ(t.grant_slot_start, SimTime{125'000});
    const auto d = leg_delay(leg, t, true);
    ASSERT_TRUE(d);
    EXPECT_LE(*d, from_millis(0.25));
    EXPECT_FALSE(leg_delay(leg, t, false));
    EXPECT_EQ(RadioParams{}.slot_duration(), from_millis(0.125));
}

TEST(LegDelay, IncludesProcessingAndQueueing)
{
    TransmissionLeg relay;
    relay.proc_delay = from_millis(0.5);
    LegTiming t;
    t.start = from_millis(2.0);
    t.grant_slot_start = from_millis(2.75); // one slot of queueing after the relay delay
    EXPECT_EQ(*leg_delay(relay, t, true), from_millis(0.875));
    t.grant_slot_start = from_millis(2.25);
    EXPECT_THROW(leg_delay(relay, t, true), std::logic_error);
}

TEST(LegDelay, ChainTotalIsTheSumOfLegs)
{
    SimTime t = SimTime{0};
    SimTime total{0};
    TransmissionLeg first;
    TransmissionLeg relay;
    relay.proc_delay = from_millis(0.5);
    for (int i = 0; i < 4; ++i) {
        const TransmissionLeg& leg = i == 0 ? first : relay;
        LegTiming timing;
        timing.start = t;
        timing.grant_slot_start = next_slot_boundary(t + leg.proc_delay, timing.slot);
        const SimTime d = *leg_delay(leg, timing, true);
        total += d;
        t += d;
    }
    EXPECT_EQ(total, t);
    EXPECT_EQ(total, from_millis(0.125 + 3 * 0.625));
}

TEST(NextSlotBoundary, AlignsUp)
{
    const SimTime s{125'000};
    EXPECT_EQ(next_slot_boundary(SimTime{0}, s), SimTime{0});
    EXPECT_EQ(next_slot_boundary(SimTime{1}, s), s);
    EXPECT_EQ(next_slot_boundary(s, s), s);
    EXPECT_EQ(next_slot_boundary(s + SimTime{1}, s), 2 * s);
}
