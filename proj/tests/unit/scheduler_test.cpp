// SPDX-License-Identifier: Apache-2.0
//
// platoonsim: 5G eV2X vehicle-platoon communication simulator

#include "platoonsim/scheduler.hpp"

#include "../support/oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

using namespace platoonsim;

namespace {

FlowRequest flow(FlowId id, std::vector<double> rates, double avg = 1.0)
{
    FlowRequest f;
    f.id = id;
    f.rate_per_rb = std::move(rates);
    f.pf_average = avg;
    return f;
}

FlowRequest backlog(FlowId id, int packets, std::uint32_t rbs, std::uint32_t bits, int grid, double rate = 1.0)
{
    FlowRequest f;
    f.id = id;
    f.packet_bits.assign(packets, bits);
    f.packet_rbs.assign(packets, rbs);
    f.rate_per_rb.assign(grid, rate);
    return f;
}

SchedulerParams unlimited()
{
    SchedulerParams p;
    p.max_grants_per_slot = 0;
    return p;
}

} // namespace

TEST(RatePerRb, Examples)
{
    EXPECT_EQ(rate_per_rb(-std::numeric_limits<double>::infinity()), 0.0);
    EXPECT_DOUBLE_EQ(rate_per_rb(0.0), 1.0);
    EXPECT_GT(rate_per_rb(10.0), rate_per_rb(5.0));
    EXPECT_NEAR(rate_per_rb(10.0), std::log2(11.0), 1e-12);
}

TEST(MaxCiSelect, Examples)
{
    std::vector<FlowRequest> f = {flow(0, {2.1}), flow(1, {3.5}), flow(2, {1.0})};
    EXPECT_EQ(max_ci_select(std::span<const FlowRequest>(f), 0), 1u);
    std::vector<FlowRequest> tie = {flow(0, {2.0}), flow(1, {2.0})};
    EXPECT_EQ(max_ci_select(std::span<const FlowRequest>(tie), 0), 0u);
    for (auto& x : f)
        x.rate_per_rb[0] *= 10;
    EXPECT_EQ(max_ci_select(std::span<const FlowRequest>(f), 0), 1u);
    EXPECT_THROW(max_ci_select(std::span<const FlowRequest>(), 0), std::invalid_argument);
}

TEST(MaxCiSelect, TieGoesToLowestIdRegardlessOfOrder)
{
    std::vector<FlowRequest> f = {flow(7, {2.0}), flow(3, {2.0}), flow(5, {1.0})};
    EXPECT_EQ(max_ci_select(std::span<const FlowRequest>(f), 0), 3u);
}

TEST(PfSelect, Examples)
{
    const PfParams p;
    std::vector<FlowRequest> f = {flow(0, {4.0}, 4.0), flow(1, {2.0}, 1.0)};
    EXPECT_EQ(pf_select(std::span<const FlowRequest>(f), 0, p), 1u);

    std::vector<FlowRequest> same_t = {flow(0, {1.0}, 3.0), flow(1, {5.0}, 3.0), flow(2, {2.0}, 3.0)};
    EXPECT_EQ(pf_select(std::span<const FlowRequest>(same_t), 0, p), 1u);

    std::vector<FlowRequest> bad = {flow(0, {1.0}, 0.0), flow(1, {1.0}, 1.0)};
    EXPECT_THROW(pf_select(std::span<const FlowRequest>(bad), 0, p), std::invalid_argument);
}

TEST(PfSelect, BetaZeroReducesToMaxCi)
{
    RandomStream rng(5, StreamPurpose::Test, 0x51, 0);
    PfParams p;
    p.beta = 0.0;
    for (int i = 0; i < 2000; ++i) {
        int grid = 0;
        auto flows = oracle::random_instance(rng, grid);
        for (int rb = 0; rb < grid; ++rb)
            ASSERT_EQ(pf_select(std::span<const FlowRequest>(flows), rb, p),
                      max_ci_select(std::span<const FlowRequest>(flows), rb));
    }
}

TEST(PfAverage, Examples)
{
    EXPECT_DOUBLE_EQ(pf_update_average(100, 200, 10), 110);
    EXPECT_DOUBLE_EQ(pf_update_average(42, 42, 10), 42);
    EXPECT_DOUBLE_EQ(pf_update_average(42, 7, 1), 7);
    EXPECT_THROW(pf_update_average(1, 1, 0), std::invalid_argument);
}

TEST(PfAverage, DecayMatchesRepeatedZeroUpdates)
{
    double t = 3.7;
    for (int k = 0; k < 57; ++k)
        t = pf_update_average(t, 0.0, 100);
    EXPECT_NEAR(pf_decay_average(3.7, 57, 100), t, 1e-12);
    EXPECT_EQ(pf_decay_average(3.7, 0, 100), 3.7);
}

TEST(Drr, DeficitBookkeeping)
{
    DrrCursor cursor;
    // D = 50, quantum 300, one 300-bit packet queued behind another.
    std::vector<FlowRequest> q = {backlog(0, 2, 1, 300, 10)};
    q[0].drr_deficit = 50;
    q[0].drr_quantum = 300;
    auto m = drr_allocate(q, 10, cursor);
    ASSERT_EQ(m.grants.size(), 1u);
    EXPECT_EQ(m.grants[0].bits, 300u);
    EXPECT_DOUBLE_EQ(q[0].drr_deficit, 50.0);
}

TEST(Drr, EmptiedQueueResetsDeficit)
{
    DrrCursor cursor;
    std::vector<FlowRequest> q = {backlog(0, 1, 1, 300, 10)};
    q[0].drr_deficit = 50;
    q[0].drr_quantum = 300;
    drr_allocate(q, 10, cursor);
    EXPECT_EQ(q[0].drr_deficit, 0.0);
}

TEST(Drr, OversizedPacketCarriesDeficit)
{
    DrrCursor cursor;
    std::vector<FlowRequest> q = {backlog(0, 1, 1, 400, 10)};
    q[0].drr_deficit = 50;
    q[0].drr_quantum = 300;
    auto m = drr_allocate(q, 10, cursor);
    EXPECT_TRUE(m.grants.empty());
    EXPECT_DOUBLE_EQ(q[0].drr_deficit, 350.0);
}

TEST(Drr, CursorPersistsAcrossTtis)
{
    // Grid fits one packet per TTI: service rotates 0, 1, 2, 0, ...
    std::vector<FlowRequest> q = {backlog(0, 9, 4, 100, 4), backlog(1, 9, 4, 100, 4), backlog(2, 9, 4, 100, 4)};
    for (auto& f : q)
        f.drr_quantum = 100;
    DrrCursor cursor;
    std::vector<FlowId> order;
    for (int t = 0; t < 6; ++t) {
        auto m = drr_allocate(q, 4, cursor, 0, t);
        ASSERT_EQ(m.grants.size(), 1u);
        order.push_back(m.grants[0].flow);
        auto& f = q[m.grants[0].flow];
        f.packet_bits.erase(f.packet_bits.begin());
        f.packet_rbs.erase(f.packet_rbs.begin());
    }
    EXPECT_EQ(order, (std::vector<FlowId>{0, 1, 2, 0, 1, 2}));
}

TEST(AllocateTti, SingleFlowOnEmptyGrid)
{
    std::vector<FlowRequest> q = {backlog(0, 1, 5, 1040, 132)};
    DrrCursor cursor;
    for (auto kind : {SchedulerKind::MaxCI, SchedulerKind::PF, SchedulerKind::DRR}) {
        auto copy = q;
        copy[0].drr_quantum = 1040;
        const auto m = allocate_tti(copy, kind, 132, SchedulerParams{}, cursor);
        EXPECT_EQ(m.used_rbs(), 5);
        EXPECT_EQ(132 - m.used_rbs(), 127);
    }
}

TEST(AllocateTti, OverDemandQueuesTheRemainder)
{
    // 30 flows x 5 RBs = 150 RBs requested, 132 available: 26 flows fit (130 RBs).
    std::vector<FlowRequest> q;
    for (FlowId k = 0; k < 30; ++k)
        q.push_back(backlog(k, 1, 5, 1040, 132, 1.0 + k * 0.01));
    DrrCursor cursor;
    const auto m = allocate_tti(q, SchedulerKind::MaxCI, 132, unlimited(), cursor);
    EXPECT_EQ(m.used_rbs(), 130);
    EXPECT_EQ(m.grants.size(), 26u);
    // Unit-sized packets fill the grid exactly.
    std::vector<FlowRequest> unit;
    for (FlowId k = 0; k < 30; ++k)
        unit.push_back(backlog(k, 5, 1, 208, 132));
    const auto full = allocate_tti(unit, SchedulerKind::MaxCI, 132, unlimited(), cursor);
    EXPECT_EQ(full.used_rbs(), 132);
    std::uint64_t granted = 0;
    for (const auto& g : full.grants)
        granted += g.bits;
    EXPECT_EQ(granted, 132u * 208u);
}

TEST(AllocateTti, NoPendingFlows)
{
    std::vector<FlowRequest> none;
    DrrCursor cursor;
    for (auto kind : {SchedulerKind::MaxCI, SchedulerKind::PF, SchedulerKind::DRR}) {
        const auto m = allocate_tti(none, kind, 132, SchedulerParams{}, cursor);
        EXPECT_TRUE(m.grants.empty());
        EXPECT_EQ(m.used_rbs(), 0);
    }
}

TEST(AllocateTti, GrantCapLimitsFlowsPerSlot)
{
    std::vector<FlowRequest> q;
    for (FlowId k = 0; k < 10; ++k)
        q.push_back(backlog(k, 1, 5, 1040, 132));
    DrrCursor cursor;
    SchedulerParams p;
    p.max_grants_per_slot = 4;
    EXPECT_EQ(allocate_tti(q, SchedulerKind::MaxCI, 132, p, cursor).grants.size(), 4u);
}

TEST(AllocateTti, PfUpdatesAveragesOfAllPendingFlows)
{
    std::vector<FlowRequest> q = {backlog(0, 1, 5, 1040, 8, 2.0), backlog(1, 1, 5, 1040, 8, 1.0)};
    q[0].pf_average = 1.0;
    q[1].pf_average = 1.0;
    DrrCursor cursor;
    SchedulerParams p;
    p.pf.window = 10;
    const auto m = allocate_tti(q, SchedulerKind::PF, 8, p, cursor);
    ASSERT_EQ(m.grants.size(), 1u);
    EXPECT_EQ(m.grants[0].flow, 0u);
    EXPECT_DOUBLE_EQ(q[0].pf_average, 0.9 * 1.0 + 0.1 * 10.0); // 5 RBs at rate 2
    EXPECT_DOUBLE_EQ(q[1].pf_average, 0.9);
}

TEST(SchedulerOracles, RandomInstancesMatchReferences)
{
    const auto c = oracle::run_equivalence(3000, 77);
    EXPECT_EQ(c.maxci_mismatches, 0);
    EXPECT_EQ(c.pf_allocation_mismatches, 0);
    EXPECT_EQ(c.pf_select_mismatches, 0);
    EXPECT_EQ(c.drr_mismatches, 0);
}

TEST(SchedulerInvariants, NoDoubleBookingAndConservation)
{
    RandomStream rng(8, StreamPurpose::Test, 0xC0, 0);
    for (auto kind : {SchedulerKind::MaxCI, SchedulerKind::PF, SchedulerKind::DRR}) {
        int grid = 0;
        auto flows = oracle::random_instance(rng, grid);
        for (auto& f : flows)
            f.drr_quantum = 700;
        std::uint64_t requested = 0;
        for (const auto& f : flows)
            requested += f.pending_bits();
        std::uint64_t granted_total = 0;
        DrrCursor cursor;
        for (int t = 0; t < 200; ++t) {
            // New arrivals on a random flow.
            auto& target = flows[rng.next_u32() % flows.size()];
            target.packet_bits.push_back(100 + rng.next_u32() % 900);
            target.packet_rbs.push_back(1 + rng.next_u32() % 4);
            requested += target.packet_bits.back();

            const auto m = allocate_tti(flows, kind, grid, unlimited(), cursor, t);
            std::vector<int> count(grid, 0);
            int rbs = 0;
            for (const auto& g : m.grants) {
                for (int n = g.first_rb; n < g.first_rb + g.num_rbs; ++n) {
                    ASSERT_LT(n, grid);
                    ++count[n];
                    ASSERT_EQ(m.rb_owner[n], g.flow);
                }
                rbs += g.num_rbs;
                granted_total += g.bits;
                auto& f = *std::find_if(flows.begin(), flows.end(), [&](auto& x) { return x.id == g.flow; });
                ASSERT_LE(g.bits, f.pending_bits());
                f.packet_bits.erase(f.packet_bits.begin(), f.packet_bits.begin() + g.num_packets);
                f.packet_rbs.erase(f.packet_rbs.begin(), f.packet_rbs.begin() + g.num_packets);
            }
            for (int n = 0; n < grid; ++n)
                ASSERT_LE(count[n], 1);
            ASSERT_LE(rbs, grid);
            ASSERT_EQ(rbs, m.used_rbs());
            std::uint64_t queued = 0;
            for (const auto& f : flows)
                queued += f.pending_bits();
            ASSERT_EQ(granted_total + queued, requested);
        }
    }
}

TEST(SchedulerInvariants, MaxCiInvariantUnderMonotoneTransforms)
{
    RandomStream rng(9, StreamPurpose::Test, 0xA0, 0);
    for (int i = 0; i < 2000; ++i) {
        int grid = 0;
        auto flows = oracle::random_instance(rng, grid);
        auto transformed = flows;
        for (auto& f : transformed)
            for (auto& r : f.rate_per_rb)
                r = std::exp(3.0 * r) + r * r * r;
        DrrCursor c1, c2;
        auto a = flows;
        ASSERT_EQ(oracle::from_map(allocate_tti(a, SchedulerKind::MaxCI, grid, unlimited(), c1)),
                  oracle::from_map(allocate_tti(transformed, SchedulerKind::MaxCI, grid, unlimited(), c2)));
    }
}

TEST(SchedulerInvariants, DrrFairness)
{
    const double quantum = 1040;
    const std::uint32_t max_packet = 1500;
    for (int n : {2, 3, 5, 8}) {
        const double spread = oracle::drr_fairness_spread(n, 1000, quantum, max_packet, 100 + n);
        EXPECT_LE(spread, quantum + max_packet) << n << " flows";
    }
}
