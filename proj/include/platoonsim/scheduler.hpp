// SPDX-License-Identifier: Apache-2.0
//
// platoonsim: 5G eV2X vehicle-platoon communication simulator

#pragma once

#include "platoonsim/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace platoonsim {

using FlowId = std::uint32_t;

struct PfParams {
    double alpha = 1.0;
    double beta = 1.0;
    int window = 100; // t_c, in TTIs
    bool operator==(const PfParams&) const = default;
};

struct SchedulerParams {
    PfParams pf;
    double drr_quantum_bits = 0.0; // 0: one CAM's air bits
    int max_grants_per_slot = 4;   // flows granted per TTI; 0 = unlimited
    bool operator==(const SchedulerParams&) const = default;
};

inline constexpr double kPfInitialAverage = 1e-6;

/// One schedulable flow with its head-of-line backlog.
///
/// Packets are atomic: `packet_rbs[i]` RBs carry `packet_bits[i]` bits and are
/// granted together or not at all.
struct FlowRequest {
    FlowId id = 0;
    std::vector<std::uint32_t> packet_bits;
    std::vector<std::uint32_t> packet_rbs;
    std::vector<double> rate_per_rb; // R_{k,n}, bits/s/Hz, one per RB of the grid
    double pf_average = kPfInitialAverage;
    double drr_deficit = 0.0;
    double drr_quantum = 0.0;

    std::uint64_t pending_bits() const
    {
        return std::accumulate(packet_bits.begin(), packet_bits.end(), std::uint64_t{0});
    }
};

struct FlowGrant {
    FlowId flow = 0;
    int first_rb = 0;
    int num_rbs = 0;
    int num_packets = 0; // head-of-line packets covered
    std::uint64_t bits = 0;
    double served_rate = 0.0; // sum of R_{k,n} over the granted RBs
};

/// Per-TTI assignment of resource blocks to flows.
struct AllocationMap {
    std::int64_t tti = 0;
    std::vector<std::optional<FlowId>> rb_owner;
    std::vector<FlowGrant> grants;

    int used_rbs() const
    {
        return static_cast<int>(std::count_if(rb_owner.begin(), rb_owner.end(), [](const auto& o) { return o.has_value(); }));
    }
    const FlowGrant* grant_for(FlowId f) const
    {
        for (const auto& g : grants)
            if (g.flow == f)
                return &g;
        return nullptr;
    }
};

/// Shannon rate of one RB: log2(1 + SINR).
inline double rate_per_rb(double sinr_db)
{
    if (std::isinf(sinr_db) && sinr_db < 0)
        return 0.0;
    return std::log2(1.0 + std::pow(10.0, sinr_db / 10.0));
}

namespace detail {
template <class Score>
FlowId argmax_flow(std::span<const FlowRequest* const> candidates, Score&& score)
{
    if (candidates.empty())
        throw std::invalid_argument("scheduler: empty candidate list");
    const FlowRequest* best = candidates.front();
    double best_score = score(*best);
    for (const FlowRequest* c : candidates.subspan(1)) {
        const double s = score(*c);
        if (s > best_score || (s == best_score && c->id < best->id)) {
            best = c;
            best_score = s;
        }
    }
    return best->id;
}

inline std::vector<const FlowRequest*> pointers(std::span<const FlowRequest> flows)
{
    std::vector<const FlowRequest*> out;
    out.reserve(flows.size());
    for (const auto& f : flows)
        out.push_back(&f);
    return out;
}
} // namespace detail

/// argmax_k R_{k,rb}; ties go to the lowest flow id.
inline FlowId max_ci_select(std::span<const FlowRequest* const> candidates, int rb)
{
    return detail::argmax_flow(candidates, [rb](const FlowRequest& f) { return f.rate_per_rb.at(rb); });
}
inline FlowId max_ci_select(std::span<const FlowRequest> candidates, int rb)
{
    return max_ci_select(detail::pointers(candidates), rb);
}

/// argmax_k R_{k,rb}^alpha / T_k^beta; ties go to the lowest flow id.
inline FlowId pf_select(std::span<const FlowRequest* const> candidates, int rb, const PfParams& p)
{
    for (const FlowRequest* c : candidates)
        if (!(c->pf_average > 0.0))
            throw std::invalid_argument("pf_select: moving-average throughput must be positive");
    return detail::argmax_flow(candidates, [&](const FlowRequest& f) {
        return std::pow(f.rate_per_rb.at(rb), p.alpha) / std::pow(f.pf_average, p.beta);
    });
}
inline FlowId pf_select(std::span<const FlowRequest> candidates, int rb, const PfParams& p)
{
    return pf_select(detail::pointers(candidates), rb, p);
}

/// Exponential moving average over a window of t_c TTIs.
inline double pf_update_average(double average, double served_rate, int window)
{
    if (window < 1)
        throw std::invalid_argument("pf_update_average: window must be >= 1");
    const double w = 1.0 / window;
    return (1.0 - w) * average + w * served_rate;
}

/// Closed form of `idle_ttis` consecutive updates with zero service.
inline double pf_decay_average(double average, std::int64_t idle_ttis, int window)
{
    if (idle_ttis <= 0)
        return average;
    return average * std::pow(1.0 - 1.0 / window, static_cast<double>(idle_ttis));
}

/// Cyclic position of the deficit round robin; persists across TTIs.
struct DrrCursor {
    FlowId next = 0;
    bool resume = false; // the visit of `next` was cut short by the grid and keeps its quantum
};

namespace detail {
inline AllocationMap empty_map(std::int64_t tti, int grid)
{
    AllocationMap m;
    m.tti = tti;
    m.rb_owner.assign(static_cast<std::size_t>(std::max(grid, 0)), std::nullopt);
    return m;
}

// Grants whole head-of-line packets of `f` starting at `rb` while they fit.
inline FlowGrant grant_packets(const FlowRequest& f, int rb, int grid, AllocationMap& map)
{
    FlowGrant g{f.id, rb, 0, 0, 0, 0.0};
    for (std::size_t p = 0; p < f.packet_rbs.size(); ++p) {
        const int need = static_cast<int>(f.packet_rbs[p]);
        if (rb + g.num_rbs + need > grid)
            break;
        g.num_rbs += need;
        g.num_packets += 1;
        g.bits += f.packet_bits[p];
    }
    for (int n = g.first_rb; n < g.first_rb + g.num_rbs; ++n) {
        map.rb_owner[n] = f.id;
        g.served_rate += f.rate_per_rb.empty() ? 0.0 : f.rate_per_rb[n];
    }
    return g;
}
} // namespace detail

/// Deficit round robin over the backlogged flows, visited in cyclic id order
/// from the cursor, each at most once per TTI. A visit adds the quantum to the
/// carried deficit, sends head-of-line packets while they fit both the budget
/// and the grid, and keeps the remainder as deficit (reset to 0 once the queue
/// empties). A flow whose affordable packet does not fit the remaining grid ends
/// the TTI; its visit resumes first in the next one without a new quantum.
inline AllocationMap drr_allocate(std::span<FlowRequest> queues, int grid, DrrCursor& cursor,
                                  int max_grants = 0, std::int64_t tti = 0)
{
    AllocationMap map = detail::empty_map(tti, grid);
    std::vector<FlowRequest*> order;
    for (auto& q : queues)
        if (!q.packet_bits.empty())
            order.push_back(&q);
    if (order.empty())
        return map;
    std::sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->id < b->id; });
    auto start = std::find_if(order.begin(), order.end(), [&](auto* f) { return f->id >= cursor.next; });
    std::rotate(order.begin(), start, order.end());
    const bool resuming = cursor.resume && order.front()->id == cursor.next;
    cursor.resume = false;

    int rb = 0;
    for (std::size_t i = 0; i < order.size(); ++i) {
        FlowRequest& f = *order[i];
        if (max_grants > 0 && static_cast<int>(map.grants.size()) >= max_grants) {
            cursor.next = f.id;
            return map;
        }
        double available = f.drr_deficit + (i == 0 && resuming ? 0.0 : f.drr_quantum);
        FlowGrant g{f.id, rb, 0, 0, 0, 0.0};
        bool grid_blocked = false;
        std::size_t p = 0;
        for (; p < f.packet_bits.size(); ++p) {
            if (f.packet_bits[p] > available)
                break;
            const int need = static_cast<int>(f.packet_rbs[p]);
            if (rb + g.num_rbs + need > grid) {
                grid_blocked = true;
                break;
            }
            available -= f.packet_bits[p];
            g.num_rbs += need;
            g.num_packets += 1;
            g.bits += f.packet_bits[p];
        }
        f.drr_deficit = (p == f.packet_bits.size()) ? 0.0 : available;
        if (g.num_packets > 0) {
            for (int n = g.first_rb; n < g.first_rb + g.num_rbs; ++n) {
                map.rb_owner[n] = f.id;
                g.served_rate += f.rate_per_rb.empty() ? 0.0 : f.rate_per_rb[n];
            }
            rb += g.num_rbs;
            map.grants.push_back(g);
        }
        if (grid_blocked) {
            cursor.next = f.id;
            cursor.resume = true;
            return map;
        }
        cursor.next = (i + 1 < order.size()) ? order[i + 1]->id : order.front()->id;
    }
    return map;
}

/// One scheduling decision over the grid.
///
/// MaxC/I and PF walk the RBs in order: the selected flow takes consecutive RBs
/// for as many whole head-of-line packets as fit and then leaves candidacy; a
/// flow whose first packet does not fit is dropped for this TTI without
/// consuming the RB. Unserved packets stay queued. Afterwards PF averages of the
/// given flows are updated with the rate they were served.
inline AllocationMap allocate_tti(std::span<FlowRequest> pending, SchedulerKind kind, int grid,
                                  const SchedulerParams& params, DrrCursor& cursor, std::int64_t tti = 0)
{
    if (kind == SchedulerKind::DRR)
        return drr_allocate(pending, grid, cursor, params.max_grants_per_slot, tti);

    AllocationMap map = detail::empty_map(tti, grid);
    std::vector<const FlowRequest*> candidates;
    for (const auto& f : pending)
        if (!f.packet_bits.empty())
            candidates.push_back(&f);

    int rb = 0;
    while (rb < grid && !candidates.empty()) {
        if (params.max_grants_per_slot > 0 && static_cast<int>(map.grants.size()) >= params.max_grants_per_slot)
            break;
        const FlowId pick = kind == SchedulerKind::MaxCI ? max_ci_select(candidates, rb)
                                                         : pf_select(candidates, rb, params.pf);
        auto it = std::find_if(candidates.begin(), candidates.end(), [&](auto* c) { return c->id == pick; });
        const FlowGrant g = detail::grant_packets(**it, rb, grid, map);
        candidates.erase(it);
        if (g.num_packets == 0)
            continue;
        rb += g.num_rbs;
        map.grants.push_back(g);
    }

    if (kind == SchedulerKind::PF) {
        for (auto& f : pending) {
            const FlowGrant* g = map.grant_for(f.id);
            f.pf_average = pf_update_average(f.pf_average, g ? g->served_rate : 0.0, params.pf.window);
        }
    }
    return map;
}

} // namespace platoonsim
