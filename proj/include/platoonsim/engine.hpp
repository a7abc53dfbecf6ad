// SPDX-License-Identifier: Apache-2.0
//
// platoonsim: 5G eV2X vehicle-platoon communication simulator

#pragma once

#include "platoonsim/channel.hpp"
#include "platoonsim/config.hpp"
#include "platoonsim/ift_routing.hpp"
#include "platoonsim/metrics.hpp"
#include "platoonsim/mobility.hpp"
#include "platoonsim/rng.hpp"
#include "platoonsim/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace platoonsim {

class SimulationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class EventKind : std::uint8_t { LegCompletion = 0, CamGeneration = 1, ControlUpdate = 2, SlotBoundary = 3 };

/// Events at equal timestamps run in kind order (completions first, slot
/// boundaries last) and then in insertion order.
struct SimEvent {
    SimTime time{0};
    EventKind kind = EventKind::SlotBoundary;
    std::uint64_t seq = 0;
    std::uint64_t payload = 0;

    friend bool operator>(const SimEvent& a, const SimEvent& b)
    {
        if (a.time != b.time)
            return a.time > b.time;
        if (a.kind != b.kind)
            return a.kind > b.kind;
        return a.seq > b.seq;
    }
};

/// Short key identifying the scenario of a report, used to refuse
/// aggregation across different scenarios.
inline std::string scenario_key(const ScenarioConfig& cfg)
{
    ScenarioConfig c = cfg;
    c.seed = 0;
    c.replications = 0;
    return emit_config(c);
}

struct RunStats {
    std::uint64_t events = 0;
    std::uint64_t ttis = 0;
    std::uint64_t grants = 0;
    int max_rbs_in_tti = 0;
    std::vector<std::uint64_t> cams_generated; // per vehicle
    std::uint64_t stale_control_updates = 0;
    std::vector<double> final_positions; // per vehicle, m
    SimTime end_time{0};
};

struct RunResult {
    MetricsReport report;
    RunStats stats;
};

/// One deterministic run of a scenario.
class Simulation {
public:
    Simulation(const ScenarioConfig& cfg, std::uint64_t seed) : cfg_(cfg), seed_(seed)
    {
        std::vector<ConfigError> errors;
        std::vector<std::string> warnings;
        validate_config(cfg_, errors, warnings);
        if (!errors.empty())
            throw std::invalid_argument("invalid scenario: " + errors.front().to_string());
        world_ = build_world(cfg_);
        slot_ = cfg_.radio.slot_duration();
        mcs_ = cfg_.mcs.at(cfg_.fixed_cqi);
        cam_bytes_ = static_cast<std::uint32_t>(cfg_.cam_app_bytes + cfg_.lower_layer_overhead_bytes);
        cam_bits_ = cam_bytes_ * 8u;
        cam_rbs_ = static_cast<std::uint32_t>(rbs_needed(cam_bits_, mcs_, cfg_.re_per_rb));
        if (cam_rbs_ > static_cast<std::uint32_t>(cfg_.radio.num_rbs))
            throw std::invalid_argument("a CAM needs " + std::to_string(cam_rbs_) + " RBs but the grid has "
                                        + std::to_string(cfg_.radio.num_rbs));
        delays_ = {from_millis(cfg_.relay_proc_ms), from_millis(cfg_.core_proc_ms)};
        grant_delay_ = from_millis(cfg_.ue_grant_delay_ms);
        cam_period_ = from_seconds(cfg_.cam_period_s);
        control_period_ = from_seconds(cfg_.control_period_s);
        duration_ = from_seconds(cfg_.sim_duration_s);
        quantum_ = cfg_.scheduler.drr_quantum_bits > 0 ? cfg_.scheduler.drr_quantum_bits : double(cam_bits_);
        build_plans();
        build_flows();
        links_.resize(world_.num_nodes() * world_.num_nodes());
        states_ = world_.vehicles;
        state_time_.assign(states_.size(), SimTime{0});
        latest_cam_.assign(states_.size(), std::vector<std::optional<CamMessage>>(states_.size()));
        next_seq_.assign(states_.size(), 0);
        stats_.cams_generated.assign(states_.size(), 0);
    }

    RunResult run()
    {
        MetricsCollector metrics(from_seconds(cfg_.warmup_s), duration_, cam_bytes_);
        for (const auto& p : world_.platoons)
            for (NodeId s : p.vehicles)
                for (NodeId r : p.vehicles)
                    if (s != r)
                        metrics.add_pair(s, r, p.id, world_.vehicles[s].index, world_.vehicles[r].index);
        metrics_ = &metrics;

        push(SimTime{0}, EventKind::CamGeneration, 0);
        if (cfg_.mobility_mode == MobilityMode::Plf)
            push(control_period_, EventKind::ControlUpdate, 0);

        while (!queue_.empty()) {
            const SimEvent ev = queue_.top();
            queue_.pop();
            if (ev.time < now_)
                throw std::logic_error("event scheduled in the past");
            now_ = ev.time;
            if (++stats_.events > cfg_.max_events) {
                std::ostringstream os;
                os << "event queue overflow: more than " << cfg_.max_events << " events by t = " << to_seconds(now_)
                   << " s (" << queue_.size() << " pending)";
                throw SimulationError(os.str());
            }
            switch (ev.kind) {
            case EventKind::CamGeneration: on_cam_generation(); break;
            case EventKind::SlotBoundary: on_slot(); break;
            case EventKind::ControlUpdate: on_control(); break;
            case EventKind::LegCompletion: on_completion(ev.payload); break;
            }
        }

        stats_.end_time = now_;
        for (std::size_t v = 0; v < states_.size(); ++v)
            stats_.final_positions.push_back(position_at(static_cast<NodeId>(v), duration_));
        RunResult out;
        out.report = summarize(metrics.finish(), to_seconds(duration_) - cfg_.warmup_s, cam_bytes_,
                               static_cast<std::uint32_t>(cfg_.platoon_length), scenario_key(cfg_));
        out.stats = std::move(stats_);
        metrics_ = nullptr;
        return out;
    }

    const World& world() const { return world_; }
    std::uint32_t cam_rbs() const { return cam_rbs_; }

private:
    struct PlannedLeg {
        TransmissionLeg leg;
        FlowId flow = 0;
        std::vector<std::size_t> children;
        int hops = 1;
    };
    struct Plan {
        std::vector<PlannedLeg> legs;
    };
    struct QueuedPacket {
        SimTime ready{0};
        std::uint64_t order = 0;
        std::uint32_t cam = 0;
        std::uint32_t leg = 0;
    };
    struct Flow {
        FlowId id = 0;
        NodeId tx = 0;
        std::vector<NodeId> rx; // receivers the rate is computed against
        std::vector<QueuedPacket> queue;
        double pf_average = kPfInitialAverage;
        std::int64_t pf_updated_tti = -1;
        double deficit = 0.0;
    };
    struct Link {
        bool ready = false;
        LinkState state;
        LinkBudget budget;
        std::optional<RandomStream> decode;
    };
    struct Completion {
        std::uint32_t cam = 0;
        std::uint32_t leg = 0;
        std::vector<bool> decoded; // per receiver of the leg
    };

    void build_plans()
    {
        plans_.resize(world_.vehicles.size());
        const auto n = static_cast<FlowId>(world_.vehicles.size());
        for (const auto& v : world_.vehicles) {
            CamMessage probe;
            probe.source = v.id;
            probe.platoon = v.platoon;
            probe.lane = v.lane;
            auto legs = plan_legs(probe, cfg_.ift_kind, world_, delays_);
            Plan& plan = plans_[v.id];
            for (std::size_t i = 0; i < legs.size(); ++i) {
                PlannedLeg pl;
                pl.leg = legs[i];
                switch (cfg_.ift_kind) {
                case IftKind::OneHop: pl.flow = v.id; break;
                case IftKind::MultiHop: {
                    const auto& tx = world_.vehicles[pl.leg.tx];
                    const auto& rx = world_.vehicles[pl.leg.rx.front()];
                    pl.flow = 2 * pl.leg.tx + (rx.index > tx.index ? 0u : 1u);
                    break;
                }
                case IftKind::CarToServer:
                    pl.flow = pl.leg.kind == LegKind::UL ? pl.leg.tx : n + pl.leg.rx.front();
                    break;
                }
                if (pl.leg.depends_on) {
                    plan.legs[*pl.leg.depends_on].children.push_back(i);
                    pl.hops = plan.legs[*pl.leg.depends_on].hops + 1;
                }
                plan.legs.push_back(std::move(pl));
            }
        }
    }

    void build_flows()
    {
        std::set<FlowId> ids;
        for (const auto& plan : plans_)
            for (const auto& pl : plan.legs)
                ids.insert(pl.flow);
        flow_index_.assign(ids.empty() ? 0 : *ids.rbegin() + 1, -1);
        for (FlowId id : ids) {
            flow_index_[id] = static_cast<int>(flows_.size());
            Flow f;
            f.id = id;
            flows_.push_back(std::move(f));
        }
        for (const auto& plan : plans_)
            for (const auto& pl : plan.legs) {
                Flow& f = flows_[flow_index_[pl.flow]];
                f.tx = pl.leg.tx;
                for (NodeId r : pl.leg.rx)
                    if (std::find(f.rx.begin(), f.rx.end(), r) == f.rx.end())
                        f.rx.push_back(r);
            }
    }

    void push(SimTime t, EventKind kind, std::uint64_t payload)
    {
        if (t < now_)
            throw std::logic_error("event scheduled in the past");
        queue_.push({t, kind, event_seq_++, payload});
    }

    bool is_ue(NodeId n) const { return n != world_.gnb_node(); }

    // Longitudinal position; constant-speed mode is analytic, PLF mode
    // extrapolates from the last control update.
    double position_at(NodeId v, SimTime t) const
    {
        const VehicleState& s = states_[v];
        if (cfg_.mobility_mode == MobilityMode::ConstantSpeed)
            return world_.vehicles[v].position + cfg_.speed_mps * to_seconds(t);
        const double dt = to_seconds(t - state_time_[v]);
        const double a = std::clamp(s.acceleration, -cfg_.max_accel_mps2, cfg_.max_accel_mps2);
        if (a < 0 && s.speed + a * dt < 0) {
            const double stop = s.speed / -a;
            return s.position + s.speed * stop + 0.5 * a * stop * stop;
        }
        return s.position + s.speed * dt + 0.5 * a * dt * dt;
    }

    VehicleState state_at(NodeId v, SimTime t) const
    {
        VehicleState s = states_[v];
        if (cfg_.mobility_mode == MobilityMode::ConstantSpeed) {
            s.position = position_at(v, t);
            return s;
        }
        const SimTime dt = t - state_time_[v];
        if (dt > SimTime{0})
            s = step_kinematics(s, to_seconds(dt), cfg_.max_accel_mps2);
        return s;
    }

    double node_distance(NodeId a, NodeId b, SimTime t) const
    {
        const NodeId gnb = world_.gnb_node();
        if (a != gnb && b != gnb)
            return std::abs(position_at(a, t) - position_at(b, t));
        const NodeId v = a == gnb ? b : a;
        const double dx = position_at(v, t) - cfg_.gnb.x_m;
        const double dy = cfg_.gnb.lateral_m;
        const double dz = cfg_.gnb.height_m - cfg_.radio.antenna_height_m;
        return std::sqrt(dx * dx + dy * dy + dz * dz);
    }

    Link& link(NodeId tx, NodeId rx)
    {
        Link& l = links_[tx * world_.num_nodes() + rx];
        if (l.ready)
            return l;
        l.ready = true;
        l.state.tx = tx;
        l.state.rx = rx;
        l.state.fading_enabled = cfg_.fading;
        if (cfg_.shadowing) {
            RandomStream sh(seed_, StreamPurpose::Shadowing, tx, rx);
            l.state.shadowing_db = cfg_.radio.shadow_sigma_db * sh.normal();
        }
        if (cfg_.fading)
            l.state.fading = JakesProcess(seed_, tx, rx, doppler_hz(cfg_.speed_mps, cfg_.radio.carrier_ghz),
                                          cfg_.jakes_oscillators);
        const NodeId gnb = world_.gnb_node();
        if (tx == gnb)
            l.budget = {cfg_.gnb.tx_power_dbm, cfg_.gnb.antenna_gain_dbi, cfg_.radio.antenna_gain_dbi,
                        cfg_.radio.noise_figure_db};
        else if (rx == gnb)
            l.budget = {cfg_.radio.tx_power_dbm, cfg_.radio.antenna_gain_dbi, cfg_.gnb.antenna_gain_dbi,
                        cfg_.gnb.noise_figure_db};
        else
            l.budget = {cfg_.radio.tx_power_dbm, cfg_.radio.antenna_gain_dbi, cfg_.radio.antenna_gain_dbi,
                        cfg_.radio.noise_figure_db};
        l.decode.emplace(seed_, StreamPurpose::Decode, tx, rx);
        return l;
    }

    double sinr_at(NodeId tx, NodeId rx, SimTime t)
    {
        Link& l = link(tx, rx);
        l.state.distance_m = node_distance(tx, rx, t);
        l.state.last_sinr_db = link_sinr_db(l.state, l.budget, cfg_.radio, to_seconds(t));
        return l.state.last_sinr_db;
    }

    void enqueue(std::uint32_t cam, std::uint32_t leg_idx, SimTime start)
    {
        const PlannedLeg& pl = plans_[cams_[cam].source].legs[leg_idx];
        SimTime ready = start + pl.leg.proc_delay;
        if (is_ue(pl.leg.tx))
            ready += grant_delay_;
        Flow& f = flows_[flow_index_[pl.flow]];
        const QueuedPacket pkt{ready, packet_order_++, cam, leg_idx};
        auto pos = std::upper_bound(f.queue.begin(), f.queue.end(), pkt, [](const QueuedPacket& a, const QueuedPacket& b) {
            return a.ready != b.ready ? a.ready < b.ready : a.order < b.order;
        });
        f.queue.insert(pos, pkt);
        ensure_slot(ready);
    }

    void ensure_slot(SimTime ready)
    {
        SimTime b = next_slot_boundary(ready, slot_);
        if (last_slot_ && b <= *last_slot_)
            b = *last_slot_ + slot_;
        if (scheduled_slots_.insert(b).second)
            push(b, EventKind::SlotBoundary, 0);
    }

    void on_cam_generation()
    {
        for (const auto& v : world_.vehicles) {
            const VehicleState s = state_at(v.id, now_);
            CamMessage cam;
            cam.seq = next_seq_[v.id]++;
            cam.generated = now_;
            cam.source = v.id;
            cam.platoon = v.platoon;
            cam.lane = v.lane;
            cam.app_bytes = static_cast<std::uint32_t>(cfg_.cam_app_bytes);
            cam.air_bytes = cam_bytes_;
            cam.position = s.position;
            cam.speed = s.speed;
            cam.acceleration = s.acceleration;
            ++stats_.cams_generated[v.id];
            const auto idx = static_cast<std::uint32_t>(cams_.size());
            cams_.push_back(cam);
            const Plan& plan = plans_[v.id];
            for (std::size_t i = 0; i < plan.legs.size(); ++i)
                if (!plan.legs[i].leg.depends_on)
                    enqueue(idx, static_cast<std::uint32_t>(i), now_);
        }
        const SimTime next = now_ + cam_period_;
        if (next < duration_)
            push(next, EventKind::CamGeneration, 0);
    }

    void on_slot()
    {
        scheduled_slots_.erase(now_);
        last_slot_ = now_;
        const std::int64_t tti = now_.count() / slot_.count();
        const int grid = cfg_.radio.num_rbs;

        std::vector<FlowRequest> requests;
        std::vector<int> request_flow;
        for (std::size_t fi = 0; fi < flows_.size(); ++fi) {
            Flow& f = flows_[fi];
            if (f.queue.empty() || f.queue.front().ready > now_)
                continue;
            FlowRequest r;
            r.id = f.id;
            for (const auto& p : f.queue) {
                if (p.ready > now_)
                    break;
                r.packet_bits.push_back(cam_bits_);
                r.packet_rbs.push_back(cam_rbs_);
            }
            // The decode SINR of every receiver is sampled now; the scheduler
            // ranks flows by the large-scale SINR unless fast-fading CSI is on.
            double worst = std::numeric_limits<double>::infinity();
            for (NodeId rx : f.rx) {
                const double instantaneous = sinr_at(f.tx, rx, now_);
                const Link& l = link(f.tx, rx);
                worst = std::min(worst, cfg_.scheduler_fast_fading_csi
                                            ? instantaneous
                                            : large_scale_sinr_db(l.state, l.budget, cfg_.radio));
            }
            r.rate_per_rb.assign(static_cast<std::size_t>(grid), rate_per_rb(worst));
            if (cfg_.scheduler_kind == SchedulerKind::PF) {
                f.pf_average = std::max(kPfInitialAverage,
                                        pf_decay_average(f.pf_average, tti - f.pf_updated_tti - 1,
                                                         cfg_.scheduler.pf.window));
                r.pf_average = f.pf_average;
            }
            r.drr_deficit = f.deficit;
            r.drr_quantum = quantum_;
            requests.push_back(std::move(r));
            request_flow.push_back(static_cast<int>(fi));
        }
        if (requests.empty())
            return;

        const AllocationMap map = allocate_tti(requests, cfg_.scheduler_kind, grid, cfg_.scheduler, drr_cursor_, tti);
        check_allocation(map, grid);
        ++stats_.ttis;
        stats_.max_rbs_in_tti = std::max(stats_.max_rbs_in_tti, map.used_rbs());

        for (std::size_t k = 0; k < requests.size(); ++k) {
            Flow& f = flows_[request_flow[k]];
            f.deficit = requests[k].drr_deficit;
            if (cfg_.scheduler_kind == SchedulerKind::PF) {
                f.pf_average = std::max(kPfInitialAverage, requests[k].pf_average);
                f.pf_updated_tti = tti;
            }
            const FlowGrant* g = map.grant_for(f.id);
            if (!g)
                continue;
            ++stats_.grants;
            for (int p = 0; p < g->num_packets; ++p)
                transmit(f, f.queue[p], *g);
            f.queue.erase(f.queue.begin(), f.queue.begin() + g->num_packets);
        }

        for (const auto& f : flows_)
            if (!f.queue.empty())
                ensure_slot(std::max(f.queue.front().ready, now_ + slot_));
    }

    void check_allocation(const AllocationMap& map, int grid) const
    {
        if (static_cast<int>(map.rb_owner.size()) != grid)
            throw std::logic_error("allocation map does not cover the grid");
        int granted = 0;
        for (const auto& g : map.grants) {
            for (int n = g.first_rb; n < g.first_rb + g.num_rbs; ++n)
                if (n < 0 || n >= grid || map.rb_owner[n] != g.flow)
                    throw std::logic_error("allocation map double-books a resource block");
            granted += g.num_rbs;
        }
        if (granted != map.used_rbs() || granted > grid)
            throw std::logic_error("allocation exceeds the resource grid");
    }

    void transmit(const Flow& f, const QueuedPacket& pkt, const FlowGrant&)
    {
        const CamMessage& cam = cams_[pkt.cam];
        const PlannedLeg& pl = plans_[cam.source].legs[pkt.leg];
        Completion c{pkt.cam, pkt.leg, {}};
        for (NodeId rx : pl.leg.rx) {
            const double s = link(f.tx, rx).state.last_sinr_db;
            std::vector<double> per_rb(cam_rbs_, s);
            c.decoded.push_back(decode_cam(static_cast<int>(cam_rbs_), static_cast<int>(cam_rbs_), per_rb, mcs_,
                                           *link(f.tx, rx).decode));
        }
        std::size_t id;
        if (free_completions_.empty()) {
            id = completions_.size();
            completions_.push_back(std::move(c));
        } else {
            id = free_completions_.back();
            free_completions_.pop_back();
            completions_[id] = std::move(c);
        }
        push(now_ + slot_, EventKind::LegCompletion, id);
    }

    void on_completion(std::uint64_t id)
    {
        const Completion c = std::move(completions_[id]);
        free_completions_.push_back(id);
        const CamMessage& cam = cams_[c.cam];
        const Plan& plan = plans_[cam.source];
        const PlannedLeg& pl = plan.legs[c.leg];
        for (std::size_t k = 0; k < pl.leg.rx.size(); ++k) {
            const NodeId rx = pl.leg.rx[k];
            if (is_ue(rx))
                deliver(cam, rx, c.decoded[k] ? std::optional<SimTime>(now_) : std::nullopt, pl.hops);
            for (std::size_t child : pl.children) {
                if (plan.legs[child].leg.tx != rx)
                    continue;
                if (c.decoded[k])
                    enqueue(c.cam, static_cast<std::uint32_t>(child), now_);
                else
                    lose_subtree(cam, plan, child);
            }
        }
    }

    void lose_subtree(const CamMessage& cam, const Plan& plan, std::size_t leg)
    {
        const PlannedLeg& pl = plan.legs[leg];
        for (NodeId rx : pl.leg.rx)
            if (is_ue(rx))
                deliver(cam, rx, std::nullopt, pl.hops);
        for (std::size_t child : pl.children)
            lose_subtree(cam, plan, child);
    }

    void deliver(const CamMessage& cam, NodeId rx, std::optional<SimTime> at, int hops)
    {
        metrics_->record_delivery({cam.seq, cam.source, rx, at, hops}, cam);
        if (at) {
            auto& slot = latest_cam_[rx][cam.source];
            if (!slot || slot->generated < cam.generated)
                slot = cam;
        }
    }

    void on_control()
    {
        for (const auto& v : world_.vehicles) {
            VehicleState s = state_at(v.id, now_);
            state_time_[v.id] = now_;
            if (v.index == 0) {
                s.acceleration = 0.0;
            } else {
                const NodeId leader = world_.platoons[v.platoon].vehicles.front();
                const NodeId pred = world_.platoons[v.platoon].vehicles[v.index - 1];
                const auto& lc = latest_cam_[v.id][leader];
                const auto& pc = latest_cam_[v.id][pred];
                if (lc && pc) {
                    const ControlOutput u = plf_control_input(s, *lc, *pc, cfg_.plf, now_, control_period_);
                    if (u.stale)
                        ++stats_.stale_control_updates;
                    s.acceleration = std::clamp(u.acceleration, -cfg_.max_accel_mps2, cfg_.max_accel_mps2);
                } else {
                    ++stats_.stale_control_updates;
                }
            }
            states_[v.id] = s;
        }
        const SimTime next = now_ + control_period_;
        if (next < duration_)
            push(next, EventKind::ControlUpdate, 0);
    }

    ScenarioConfig cfg_;
    std::uint64_t seed_;
    World world_;
    SimTime slot_{125'000};
    McsEntry mcs_;
    std::uint32_t cam_bytes_ = 130;
    std::uint32_t cam_bits_ = 1040;
    std::uint32_t cam_rbs_ = 1;
    RoutingDelays delays_;
    SimTime grant_delay_{0};
    SimTime cam_period_{0};
    SimTime control_period_{0};
    SimTime duration_{0};
    double quantum_ = 0.0;

    std::vector<Plan> plans_;
    std::vector<Flow> flows_;
    std::vector<int> flow_index_;
    DrrCursor drr_cursor_;
    std::vector<Link> links_;
    std::vector<VehicleState> states_;
    std::vector<SimTime> state_time_;
    std::vector<std::vector<std::optional<CamMessage>>> latest_cam_; // [receiver][source]
    std::vector<std::uint64_t> next_seq_;
    std::vector<CamMessage> cams_;
    std::vector<Completion> completions_;
    std::vector<std::size_t> free_completions_;

    std::priority_queue<SimEvent, std::vector<SimEvent>, std::greater<>> queue_;
    std::uint64_t event_seq_ = 0;
    std::uint64_t packet_order_ = 0;
    std::set<SimTime> scheduled_slots_;
    std::optional<SimTime> last_slot_;
    SimTime now_{0};
    RunStats stats_;
    MetricsCollector* metrics_ = nullptr;
};

inline RunResult run_simulation_detailed(const ScenarioConfig& cfg, std::uint64_t seed)
{
    return Simulation(cfg, seed).run();
}

/// Deterministic in (cfg, seed).
inline MetricsReport run_simulation(const ScenarioConfig& cfg, std::uint64_t seed)
{
    return Simulation(cfg, seed).run().report;
}

} // namespace platoonsim
