// SPDX-License-Identifier: Apache-2.0
//
// platoonsim: 5G eV2X vehicle-platoon communication simulator

#pragma once

#include "platoonsim/ift_routing.hpp"
#include "platoonsim/types.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace platoonsim {

/// Raw counters of one (source, receiver) pair over the measurement window.
struct PairStats {
    NodeId source = 0;
    NodeId receiver = 0;
    std::uint32_t platoon = 0;
    std::uint32_t source_index = 0;
    std::uint32_t receiver_index = 0;

    std::uint64_t transmitted = 0;
    std::uint64_t delivered = 0;
    double delay_sum_ms = 0.0;
    double aoi_area_ms_s = 0.0; // integral of age (ms) over time (s)
    double aoi_time_s = 0.0;    // observed time after the first delivery
    double gap_sum_ms = 0.0;    // sum of gen_i - recv_{i-1}
    std::uint64_t gap_count = 0;
    bool operator==(const PairStats&) const = default;
};

/// The four QoS metrics plus the auxiliary AoI gap. Empty means undefined.
struct LinkMetrics {
    std::optional<double> delay_ms;
    std::optional<double> aoi_ms;
    std::optional<double> aoi_gap_ms;
    std::optional<double> throughput_kbps; // 1 kB = 1000 B
    std::optional<double> reception_prob;
    std::uint64_t transmitted = 0;
    std::uint64_t delivered = 0;
    bool operator==(const LinkMetrics&) const = default;
};

/// Pools a group of pairs: counters are summed (delay, reception, AoI gap);
/// throughput and AoI are averaged over the pairs where they are defined.
inline LinkMetrics pool_pairs(std::span<const PairStats> pairs, std::uint32_t air_bytes, double window_s)
{
    if (!(window_s > 0.0))
        throw std::invalid_argument("pool_pairs: measurement window must be positive");
    LinkMetrics m;
    double delay = 0.0;
    double gap = 0.0;
    std::uint64_t gaps = 0;
    double aoi = 0.0;
    int aoi_pairs = 0;
    double tput = 0.0;
    int tput_pairs = 0;
    for (const auto& p : pairs) {
        m.transmitted += p.transmitted;
        m.delivered += p.delivered;
        delay += p.delay_sum_ms;
        gap += p.gap_sum_ms;
        gaps += p.gap_count;
        if (p.aoi_time_s > 0.0) {
            aoi += p.aoi_area_ms_s / p.aoi_time_s;
            ++aoi_pairs;
        }
        if (p.transmitted > 0) {
            tput += static_cast<double>(p.delivered * air_bytes) / window_s / 1000.0;
            ++tput_pairs;
        }
    }
    if (m.delivered > 0)
        m.delay_ms = delay / static_cast<double>(m.delivered);
    if (m.transmitted > 0)
        m.reception_prob = static_cast<double>(m.delivered) / static_cast<double>(m.transmitted);
    if (gaps > 0)
        m.aoi_gap_ms = gap / static_cast<double>(gaps);
    if (aoi_pairs > 0)
        m.aoi_ms = aoi / aoi_pairs;
    if (tput_pairs > 0)
        m.throughput_kbps = tput / tput_pairs;
    return m;
}

/// Result of one run. `headline` pools the leader-to-tail pair of every
/// platoon; `per_link[h-1]` pools leader-to-member pairs at hop distance h.
struct MetricsReport {
    std::string scenario;
    double window_s = 0.0;
    std::uint32_t air_bytes = 130;
    std::vector<PairStats> pairs;
    LinkMetrics headline;
    std::vector<LinkMetrics> per_link;
    bool operator==(const MetricsReport&) const = default;
};

/// Per-run accumulator fed by the engine in event order.
///
/// A CAM counts towards transmitted/delivered/delay when it was generated
/// inside [window_start, window_end). The age process is tracked for the
/// whole run and its area is integrated only over the window.
class MetricsCollector {
public:
    MetricsCollector(SimTime window_start, SimTime window_end, std::uint32_t air_bytes)
        : w0_(window_start), w1_(window_end), air_bytes_(air_bytes)
    {
        if (window_end <= window_start)
            throw std::invalid_argument("MetricsCollector: empty measurement window");
    }

    void add_pair(NodeId source, NodeId receiver, std::uint32_t platoon, std::uint32_t source_index,
                  std::uint32_t receiver_index)
    {
        const auto key = std::pair{source, receiver};
        if (index_.count(key))
            throw std::invalid_argument("MetricsCollector: duplicate pair");
        index_[key] = state_.size();
        State s;
        s.stats = {source, receiver, platoon, source_index, receiver_index};
        state_.push_back(std::move(s));
    }

    void record_delivery(const DeliveryRecord& rec, const CamMessage& cam)
    {
        if (rec.source != cam.source || rec.cam_seq != cam.seq)
            throw std::invalid_argument("record_delivery: record does not match the CAM");
        auto it = index_.find({rec.source, rec.receiver});
        if (it == index_.end())
            throw std::invalid_argument("record_delivery: unknown (source, receiver) pair");
        State& s = state_[it->second];
        if (rec.delivered_at && *rec.delivered_at < cam.generated)
            throw std::logic_error("record_delivery: reception precedes generation");

        if (s.seen.size() <= cam.seq)
            s.seen.resize(cam.seq + 1, false);
        if (s.seen[cam.seq])
            return;
        s.seen[cam.seq] = true;

        const bool in_window = cam.generated >= w0_ && cam.generated < w1_;
        if (in_window)
            ++s.stats.transmitted;
        if (!rec.delivered_at)
            return;

        const SimTime rx = *rec.delivered_at;
        if (rx < s.last_rx)
            throw std::logic_error("record_delivery: deliveries must arrive in time order");
        if (in_window) {
            ++s.stats.delivered;
            s.stats.delay_sum_ms += to_millis(rx - cam.generated);
            if (s.has_update) {
                s.stats.gap_sum_ms += to_millis(cam.generated - s.last_rx);
                ++s.stats.gap_count;
            }
        }
        advance_age(s, rx);
        if (!s.has_update || cam.generated > s.latest_gen)
            s.latest_gen = cam.generated;
        s.has_update = true;
        s.last_rx = rx;
    }

    /// Closes the age integrals at the window end and returns the counters.
    std::vector<PairStats> finish()
    {
        std::vector<PairStats> out;
        out.reserve(state_.size());
        for (auto& s : state_) {
            advance_age(s, w1_);
            out.push_back(s.stats);
        }
        return out;
    }

    SimTime window_start() const { return w0_; }
    SimTime window_end() const { return w1_; }
    std::uint32_t air_bytes() const { return air_bytes_; }

private:
    struct State {
        PairStats stats;
        std::vector<bool> seen;
        bool has_update = false;
        SimTime latest_gen{0};
        SimTime last_rx{0};
        SimTime integrated_to{0};
    };

    // Integrates age(t) = t - latest_gen over [integrated_to, until] clipped to the window.
    void advance_age(State& s, SimTime until)
    {
        if (!s.has_update) {
            s.integrated_to = until;
            return;
        }
        const SimTime a = std::max(s.integrated_to, w0_);
        const SimTime b = std::min(until, w1_);
        if (b > a) {
            const double age_a = to_millis(a - s.latest_gen);
            const double age_b = to_millis(b - s.latest_gen);
            const double dt = to_seconds(b - a);
            s.stats.aoi_area_ms_s += 0.5 * (age_a + age_b) * dt;
            s.stats.aoi_time_s += dt;
        }
        s.integrated_to = std::max(s.integrated_to, until);
    }

    SimTime w0_;
    SimTime w1_;
    std::uint32_t air_bytes_;
    std::map<std::pair<NodeId, NodeId>, std::size_t> index_;
    std::vector<State> state_;
};

/// Builds the report: headline = leader to tail of each platoon, per-link
/// rows = leader to the member h hops behind, h = 1..N-1.
inline MetricsReport summarize(std::vector<PairStats> pairs, double window_s, std::uint32_t air_bytes,
                               std::uint32_t platoon_length, std::string scenario = {})
{
    MetricsReport r;
    r.scenario = std::move(scenario);
    r.window_s = window_s;
    r.air_bytes = air_bytes;
    r.pairs = std::move(pairs);
    auto select = [&](auto pred) {
        std::vector<PairStats> group;
        for (const auto& p : r.pairs)
            if (pred(p))
                group.push_back(p);
        return pool_pairs(group, air_bytes, window_s);
    };
    r.headline = select([&](const PairStats& p) {
        return p.source_index == 0 && p.receiver_index + 1 == platoon_length;
    });
    for (std::uint32_t h = 1; h < platoon_length; ++h)
        r.per_link.push_back(select([&](const PairStats& p) { return p.source_index == 0 && p.receiver_index == h; }));
    return r;
}

/// Sample statistics of one metric across replications. Replications where
/// the metric is undefined are skipped; fewer than two defined values leave
/// std and ci95 undefined.
struct MetricStat {
    std::optional<double> mean;
    std::optional<double> std;
    std::optional<double> ci95; // half-width
    int n = 0;
    bool operator==(const MetricStat&) const = default;
};

struct MetricSummary {
    MetricStat delay_ms;
    MetricStat aoi_ms;
    MetricStat aoi_gap_ms;
    MetricStat throughput_kbps;
    MetricStat reception_prob;
    bool operator==(const MetricSummary&) const = default;
};

struct AggregateReport {
    std::string scenario;
    int replications = 0;
    MetricSummary headline;
    std::vector<MetricSummary> per_link;
    bool operator==(const AggregateReport&) const = default;
};

inline MetricStat sample_statistics(std::span<const double> values)
{
    MetricStat s;
    s.n = static_cast<int>(values.size());
    if (values.empty())
        return s;
    double sum = 0.0;
    for (double v : values)
        sum += v;
    const double mean = sum / s.n;
    s.mean = mean;
    if (s.n < 2)
        return s;
    double ss = 0.0;
    for (double v : values)
        ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / (s.n - 1));
    s.std = sd;
    const boost::math::students_t dist(s.n - 1);
    s.ci95 = boost::math::quantile(boost::math::complement(dist, 0.025)) * sd / std::sqrt(static_cast<double>(s.n));
    return s;
}

namespace detail {
inline MetricStat stat_of(std::span<const LinkMetrics* const> runs, std::optional<double> LinkMetrics::*field)
{
    std::vector<double> v;
    for (const LinkMetrics* m : runs)
        if ((m->*field).has_value())
            v.push_back(*(m->*field));
    return sample_statistics(v);
}

inline MetricSummary summary_of(std::span<const LinkMetrics* const> runs)
{
    return {stat_of(runs, &LinkMetrics::delay_ms), stat_of(runs, &LinkMetrics::aoi_ms),
            stat_of(runs, &LinkMetrics::aoi_gap_ms), stat_of(runs, &LinkMetrics::throughput_kbps),
            stat_of(runs, &LinkMetrics::reception_prob)};
}
} // namespace detail

/// Mean, sample standard deviation and Student-t 95% half-width per metric.
inline AggregateReport aggregate_replications(std::span<const MetricsReport> reports)
{
    if (reports.size() < 2)
        throw std::invalid_argument("aggregate_replications: insufficient replications");
    const auto& first = reports.front();
    for (const auto& r : reports)
        if (r.scenario != first.scenario || r.per_link.size() != first.per_link.size())
            throw std::invalid_argument("aggregate_replications: reports describe different scenarios");

    AggregateReport out;
    out.scenario = first.scenario;
    out.replications = static_cast<int>(reports.size());
    std::vector<const LinkMetrics*> runs;
    for (const auto& r : reports)
        runs.push_back(&r.headline);
    out.headline = detail::summary_of(runs);
    for (std::size_t h = 0; h < first.per_link.size(); ++h) {
        runs.clear();
        for (const auto& r : reports)
            runs.push_back(&r.per_link[h]);
        out.per_link.push_back(detail::summary_of(runs));
    }
    return out;
}

} // namespace platoonsim
