// SPDX-License-Identifier: Apache-2.0
//
// platoonsim: 5G eV2X vehicle-platoon communication simulator

#pragma once

#include "platoonsim/config.hpp"
#include "platoonsim/engine.hpp"
#include "platoonsim/metrics.hpp"
#include "platoonsim/rng.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace platoonsim {

struct SweepAxis {
    std::string key;
    std::vector<std::string> values;
    bool operator==(const SweepAxis&) const = default;
};

/// Base scenario, cartesian sweep axes (last axis varies fastest) and run cap.
struct CampaignSpec {
    ScenarioConfig base;
    std::vector<SweepAxis> axes;
    int replications = 20;
    std::uint64_t max_runs = 100'000;
    std::string output_path;
};

struct CampaignParseResult {
    std::optional<CampaignSpec> spec;
    std::vector<ConfigError> errors;
    std::vector<std::string> warnings;
    bool ok() const { return spec.has_value() && errors.empty(); }
};

/// Sweep file: the scenario format plus `sweep.<key> = v1, v2, ...` axes and
/// `campaign.max_runs`. Axis values are checked against the base scenario.
inline CampaignParseResult parse_campaign(std::string_view text, ScenarioConfig base = {})
{
    CampaignParseResult res;
    std::string scenario_text;
    CampaignSpec spec;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        const std::string body = detail::trim(std::string_view(line).substr(0, line.find('#')));
        const auto eq = body.find('=');
        const std::string key = eq == std::string::npos ? std::string{} : detail::trim(std::string_view(body).substr(0, eq));
        const std::string value = eq == std::string::npos ? std::string{} : detail::trim(std::string_view(body).substr(eq + 1));
        if (key.rfind("sweep.", 0) == 0) {
            SweepAxis axis{key.substr(6), {}};
            std::istringstream vs(value);
            std::string item;
            while (std::getline(vs, item, ','))
                if (auto t = detail::trim(item); !t.empty())
                    axis.values.push_back(t);
            if (axis.values.empty())
                res.errors.push_back({key, "sweep axis has no values"});
            else if (std::any_of(spec.axes.begin(), spec.axes.end(), [&](const auto& a) { return a.key == axis.key; }))
                res.errors.push_back({key, "duplicate sweep axis"});
            else
                spec.axes.push_back(std::move(axis));
        } else if (key == "campaign.max_runs") {
            auto n = detail::parse_number<std::uint64_t>(value);
            if (!n || *n == 0)
                res.errors.push_back({key, "expected a positive integer"});
            else
                spec.max_runs = *n;
        } else {
            scenario_text += line;
            scenario_text += '\n';
        }
    }

    ParseResult base_res = parse_config(scenario_text, std::move(base));
    res.errors.insert(res.errors.end(), base_res.errors.begin(), base_res.errors.end());
    res.warnings = base_res.warnings;
    if (!base_res.config)
        return res;
    spec.base = *base_res.config;
    spec.replications = spec.base.replications;

    std::uint64_t points = 1;
    for (const auto& axis : spec.axes) {
        points *= axis.values.size();
        for (const auto& v : axis.values) {
            ScenarioConfig probe = spec.base;
            if (auto err = apply_setting(probe, axis.key, v))
                res.errors.push_back({"sweep." + axis.key, err->message});
        }
    }
    if (points * static_cast<std::uint64_t>(std::max(spec.replications, 1)) > spec.max_runs)
        res.errors.push_back({"campaign.max_runs", "sweep needs " + std::to_string(points * spec.replications)
                                                       + " runs, above the cap of " + std::to_string(spec.max_runs)});
    if (res.errors.empty())
        res.spec = std::move(spec);
    return res;
}

inline CampaignParseResult load_campaign_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        CampaignParseResult r;
        r.errors.push_back({"<file>", "cannot open " + path});
        return r;
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_campaign(ss.str());
}

struct SweepPoint {
    std::size_t index = 0;
    std::vector<std::pair<std::string, std::string>> assignment; // axis key -> value
    ScenarioConfig config;
    std::optional<std::string> error; // configuration problem of this point
};

/// Cartesian product of the axes in row-major order (last axis fastest).
inline std::vector<SweepPoint> expand_points(const CampaignSpec& spec)
{
    std::vector<SweepPoint> points;
    std::vector<std::size_t> idx(spec.axes.size(), 0);
    for (;;) {
        SweepPoint p;
        p.index = points.size();
        p.config = spec.base;
        p.config.replications = spec.replications;
        for (std::size_t a = 0; a < spec.axes.size(); ++a) {
            const auto& axis = spec.axes[a];
            p.assignment.emplace_back(axis.key, axis.values[idx[a]]);
            if (auto err = apply_setting(p.config, axis.key, axis.values[idx[a]]); err && !p.error)
                p.error = err->to_string();
        }
        if (!p.error) {
            std::vector<ConfigError> errors;
            std::vector<std::string> warnings;
            validate_config(p.config, errors, warnings);
            if (!errors.empty())
                p.error = errors.front().to_string();
        }
        points.push_back(std::move(p));

        std::size_t a = spec.axes.size();
        while (a > 0) {
            --a;
            if (++idx[a] < spec.axes[a].values.size())
                break;
            idx[a] = 0;
            if (a == 0)
                return points;
        }
        if (spec.axes.empty())
            return points;
    }
}

struct CampaignRow {
    SweepPoint point;
    AggregateReport aggregate;
    std::vector<MetricsReport> runs;
    std::string error;
};

struct CampaignTable {
    std::vector<std::string> axis_keys;
    std::vector<CampaignRow> rows;
};

namespace detail {
inline MetricStat single_stat(const std::optional<double>& v)
{
    MetricStat s;
    if (v) {
        s.mean = *v;
        s.n = 1;
    }
    return s;
}
inline MetricSummary single_summary(const LinkMetrics& m)
{
    return {single_stat(m.delay_ms), single_stat(m.aoi_ms), single_stat(m.aoi_gap_ms),
            single_stat(m.throughput_kbps), single_stat(m.reception_prob)};
}
} // namespace detail

/// Summary of a point: Student-t aggregation for two or more replications,
/// the plain values (no spread) for a single one.
inline AggregateReport summarize_point(const std::vector<MetricsReport>& runs)
{
    if (runs.size() >= 2)
        return aggregate_replications(runs);
    if (runs.empty())
        throw std::invalid_argument("summarize_point: no runs");
    AggregateReport a;
    a.scenario = runs.front().scenario;
    a.replications = 1;
    a.headline = detail::single_summary(runs.front().headline);
    for (const auto& l : runs.front().per_link)
        a.per_link.push_back(detail::single_summary(l));
    return a;
}

using RunFunction = std::function<MetricsReport(const ScenarioConfig&, std::uint64_t)>;

/// Executes every (point, replication) pair on `jobs` worker threads. Seeds
/// are derive_run_seed(base seed, point, replication) so results do not
/// depend on the thread count or on other points. A failing run marks its
/// row and the campaign continues.
inline CampaignTable run_campaign(const CampaignSpec& spec, int jobs = 1, const RunFunction& runner = run_simulation,
                                  const std::function<void(std::size_t, std::size_t)>& progress = {})
{
    if (spec.replications < 1)
        throw std::invalid_argument("run_campaign: replications must be >= 1");
    CampaignTable table;
    for (const auto& a : spec.axes)
        table.axis_keys.push_back(a.key);
    auto points = expand_points(spec);
    const std::size_t reps = static_cast<std::size_t>(spec.replications);
    if (points.size() * reps > spec.max_runs)
        throw std::invalid_argument("run_campaign: sweep exceeds campaign.max_runs");

    std::vector<std::optional<MetricsReport>> results(points.size() * reps);
    std::vector<std::string> errors(points.size() * reps);
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> done{0};
    std::mutex progress_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t task = next.fetch_add(1);
            if (task >= results.size())
                return;
            const SweepPoint& p = points[task / reps];
            if (!p.error) {
                const auto seed = derive_run_seed(spec.base.seed, static_cast<std::uint32_t>(p.index),
                                                  static_cast<std::uint32_t>(task % reps));
                try {
                    results[task] = runner(p.config, seed);
                } catch (const std::exception& e) {
                    errors[task] = e.what();
                }
            }
            const std::size_t n = ++done;
            if (progress) {
                std::lock_guard lock(progress_mutex);
                progress(n, results.size());
            }
        }
    };
    const int threads = std::max(1, jobs);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t)
            pool.emplace_back(worker);
        for (auto& t : pool)
            t.join();
    }

    for (auto& p : points) {
        CampaignRow row;
        row.point = std::move(p);
        if (row.point.error) {
            row.error = *row.point.error;
        } else {
            for (std::size_t r = 0; r < reps; ++r) {
                const std::size_t task = row.point.index * reps + r;
                if (!errors[task].empty() && row.error.empty())
                    row.error = "replication " + std::to_string(r) + ": " + errors[task];
                if (results[task])
                    row.runs.push_back(std::move(*results[task]));
            }
            if (row.error.empty())
                row.aggregate = summarize_point(row.runs);
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

/// Six significant digits, C locale, "NA" when undefined.
inline std::string format_metric(const std::optional<double>& v)
{
    if (!v)
        return "NA";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, *v, std::chars_format::general, 6);
    return std::string(buf, res.ptr);
}

inline std::string csv_escape(const std::string& s)
{
    if (s.find_first_of(",\"\n\r") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += '"';
        out += c == '\n' || c == '\r' ? ' ' : c;
    }
    return out + "\"";
}

inline const std::vector<std::string>& scenario_columns()
{
    static const std::vector<std::string> cols = {"scenario.num_platoons", "scenario.platoon_length", "ift.kind",
                                                  "scheduler.kind", "channel.cqi"};
    return cols;
}

namespace detail {
inline std::string column_name(const std::string& key)
{
    static const std::vector<std::pair<std::string, std::string>> short_names = {
        {"scenario.num_platoons", "num_platoons"}, {"scenario.platoon_length", "platoon_length"},
        {"ift.kind", "ift"},                       {"scheduler.kind", "scheduler"},
        {"channel.cqi", "cqi"}};
    for (const auto& [k, n] : short_names)
        if (k == key)
            return n;
    return key;
}

inline void metric_cells(std::ostream& os, const MetricSummary& m)
{
    const MetricStat* stats[] = {&m.delay_ms, &m.aoi_ms, &m.throughput_kbps, &m.reception_prob, &m.aoi_gap_ms};
    for (const MetricStat* s : stats)
        os << ',' << format_metric(s->mean) << ',' << format_metric(s->ci95);
}
} // namespace detail

/// Header plus one row per sweep point (per link and point in per-link mode).
inline void emit_csv(const CampaignTable& table, std::ostream& os, bool per_link = false)
{
    if (table.rows.empty())
        throw std::invalid_argument("emit_csv: empty table");
    std::vector<std::string> keys = scenario_columns();
    for (const auto& k : table.axis_keys)
        if (std::find(keys.begin(), keys.end(), k) == keys.end())
            keys.push_back(k);

    for (const auto& k : keys)
        os << csv_escape(detail::column_name(k)) << ',';
    if (per_link)
        os << "link,";
    os << "replications,delay_ms_mean,delay_ms_ci95,aoi_ms_mean,aoi_ms_ci95,throughput_kbps_mean,"
          "throughput_kbps_ci95,reception_prob_mean,reception_prob_ci95,aoi_gap_ms_mean,aoi_gap_ms_ci95,error\n";

    for (const auto& row : table.rows) {
        std::string prefix;
        for (const auto& k : keys) {
            std::string v;
            for (const auto& [ak, av] : row.point.assignment)
                if (ak == k)
                    v = av;
            if (v.empty())
                v = config_value(row.point.config, k).value_or("");
            prefix += csv_escape(v) + ',';
        }
        auto line = [&](const std::string& link, const MetricSummary* m) {
            os << prefix;
            if (per_link)
                os << link << ',';
            os << row.runs.size();
            detail::metric_cells(os, m ? *m : MetricSummary{});
            os << ',' << csv_escape(row.error) << '\n';
        };
        if (!per_link) {
            line({}, row.error.empty() ? &row.aggregate.headline : nullptr);
        } else {
            const int links = row.point.config.platoon_length - 1;
            for (int h = 1; h <= links; ++h) {
                const bool ok = row.error.empty() && h <= static_cast<int>(row.aggregate.per_link.size());
                line(std::to_string(h), ok ? &row.aggregate.per_link[h - 1] : nullptr);
            }
        }
    }
}

inline void write_csv(const CampaignTable& table, const std::string& path, bool per_link = false)
{
    std::ostringstream os;
    emit_csv(table, os, per_link);
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path);
    out << os.str();
    if (!out)
        throw std::runtime_error("write failed: " + path);
}

} // namespace platoonsim
