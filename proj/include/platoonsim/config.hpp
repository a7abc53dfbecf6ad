// SPDX-License-Identifier: Apache-2.0
//
// platoonsim: 5G eV2X vehicle-platoon communication simulator

#pragma once

#include "platoonsim/mobility.hpp"
#include "platoonsim/radio.hpp"
#include "platoonsim/scheduler.hpp"
#include "platoonsim/types.hpp"

#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace platoonsim {

struct ScenarioConfig {
    // platoon layout
    int num_platoons = 1;
    int platoon_length = 5;
    double vehicle_length_m = 5.0;
    double gap_m = 11.0; // reference-point spacing between consecutive vehicles
    double speed_mps = 10.0;
    double max_accel_mps2 = 2.5;
    // periods and message sizes
    double control_period_s = 0.1;
    double cam_period_s = 0.03;
    int cam_app_bytes = 110;
    int lower_layer_overhead_bytes = 20;
    // topology and MAC timing
    IftKind ift_kind = IftKind::OneHop;
    double relay_proc_ms = 0.5;
    double core_proc_ms = 1.0;
    double ue_grant_delay_ms = 1.5;
    SchedulerKind scheduler_kind = SchedulerKind::MaxCI;
    SchedulerParams scheduler;
    bool scheduler_fast_fading_csi = false; // rates from the instantaneous SINR instead of the large-scale one
    // link model
    int fixed_cqi = 7;
    int re_per_rb = 168;
    bool fading = true;
    bool shadowing = true;
    int jakes_oscillators = 16;
    McsTable mcs = McsTable::standard();
    RadioParams radio;
    GnbParams gnb;
    // mobility
    MobilityMode mobility_mode = MobilityMode::ConstantSpeed;
    PlfGains plf;
    // run
    double sim_duration_s = 60.0;
    double warmup_s = 1.0;
    int replications = 20;
    std::uint64_t seed = 1;
    std::uint64_t max_events = 100'000'000;

    int cam_air_bytes() const { return cam_app_bytes + lower_layer_overhead_bytes; }
    bool operator==(const ScenarioConfig&) const = default;
};

struct ConfigError {
    std::string key;
    std::string message;
    std::string to_string() const { return key.empty() ? message : key + ": " + message; }
};

struct ParseResult {
    std::optional<ScenarioConfig> config;
    std::vector<ConfigError> errors;
    std::vector<std::string> warnings;
    bool ok() const { return config.has_value(); }
};

namespace detail {

inline std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::string format_double(double v)
{
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

template <class T>
std::optional<T> parse_number(std::string_view s)
{
    T v{};
    auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || end != s.data() + s.size())
        return std::nullopt;
    return v;
}

struct KeySpec {
    std::string name;
    std::function<std::optional<std::string>(ScenarioConfig&, std::string_view)> set;
    std::function<std::string(const ScenarioConfig&)> get;
};

template <class T>
KeySpec number_key(std::string name, T ScenarioConfig::*member)
{
    return {std::move(name),
            [member](ScenarioConfig& c, std::string_view v) -> std::optional<std::string> {
                auto n = parse_number<T>(v);
                if (!n)
                    return "expected a number, got '" + std::string(v) + "'";
                c.*member = *n;
                return std::nullopt;
            },
            [member](const ScenarioConfig& c) {
                if constexpr (std::is_floating_point_v<T>)
                    return format_double(c.*member);
                else
                    return std::to_string(c.*member);
            }};
}

// Number nested one level inside the config (radio.*, gnb.*, ...).
template <class Outer, class T>
KeySpec nested_key(std::string name, Outer ScenarioConfig::*outer, T Outer::*member)
{
    return {std::move(name),
            [outer, member](ScenarioConfig& c, std::string_view v) -> std::optional<std::string> {
                auto n = parse_number<T>(v);
                if (!n)
                    return "expected a number, got '" + std::string(v) + "'";
                (c.*outer).*member = *n;
                return std::nullopt;
            },
            [outer, member](const ScenarioConfig& c) {
                if constexpr (std::is_floating_point_v<T>)
                    return format_double((c.*outer).*member);
                else
                    return std::to_string((c.*outer).*member);
            }};
}

inline KeySpec bool_key(std::string name, bool ScenarioConfig::*member)
{
    return {std::move(name),
            [member](ScenarioConfig& c, std::string_view v) -> std::optional<std::string> {
                if (v == "true" || v == "on" || v == "1")
                    c.*member = true;
                else if (v == "false" || v == "off" || v == "0")
                    c.*member = false;
                else
                    return "expected true or false, got '" + std::string(v) + "'";
                return std::nullopt;
            },
            [member](const ScenarioConfig& c) { return std::string(c.*member ? "true" : "false"); }};
}

template <class E>
KeySpec enum_key(std::string name, E ScenarioConfig::*member, std::vector<E> values)
{
    return {std::move(name),
            [member, values](ScenarioConfig& c, std::string_view v) -> std::optional<std::string> {
                std::string choices;
                for (E e : values) {
                    if (to_string(e) == v) {
                        c.*member = e;
                        return std::nullopt;
                    }
                    choices += (choices.empty() ? "" : ", ") + std::string(to_string(e));
                }
                return "unknown value '" + std::string(v) + "' (expected one of: " + choices + ")";
            },
            [member](const ScenarioConfig& c) { return std::string(to_string(c.*member)); }};
}

inline const std::vector<KeySpec>& key_table()
{
    using C = ScenarioConfig;
    static const std::vector<KeySpec> table = {
        number_key("scenario.num_platoons", &C::num_platoons),
        number_key("scenario.platoon_length", &C::platoon_length),
        number_key("scenario.vehicle_length_m", &C::vehicle_length_m),
        number_key("scenario.gap_m", &C::gap_m),
        number_key("scenario.speed_mps", &C::speed_mps),
        number_key("scenario.max_accel_mps2", &C::max_accel_mps2),
        number_key("control.period_s", &C::control_period_s),
        number_key("cam.period_s", &C::cam_period_s),
        number_key("cam.app_bytes", &C::cam_app_bytes),
        number_key("cam.overhead_bytes", &C::lower_layer_overhead_bytes),
        enum_key("ift.kind", &C::ift_kind, {IftKind::CarToServer, IftKind::MultiHop, IftKind::OneHop}),
        number_key("ift.relay_proc_ms", &C::relay_proc_ms),
        number_key("ift.core_proc_ms", &C::core_proc_ms),
        number_key("mac.ue_grant_delay_ms", &C::ue_grant_delay_ms),
        enum_key("scheduler.kind", &C::scheduler_kind, {SchedulerKind::MaxCI, SchedulerKind::PF, SchedulerKind::DRR}),
        {"scheduler.pf.alpha",
         [](C& c, std::string_view v) -> std::optional<std::string> {
             auto n = parse_number<double>(v);
             if (!n)
                 return "expected a number";
             c.scheduler.pf.alpha = *n;
             return std::nullopt;
         },
         [](const C& c) { return format_double(c.scheduler.pf.alpha); }},
        {"scheduler.pf.beta",
         [](C& c, std::string_view v) -> std::optional<std::string> {
             auto n = parse_number<double>(v);
             if (!n)
                 return "expected a number";
             c.scheduler.pf.beta = *n;
             return std::nullopt;
         },
         [](const C& c) { return format_double(c.scheduler.pf.beta); }},
        {"scheduler.pf.window",
         [](C& c, std::string_view v) -> std::optional<std::string> {
             auto n = parse_number<int>(v);
             if (!n)
                 return "expected an integer";
             c.scheduler.pf.window = *n;
             return std::nullopt;
         },
         [](const C& c) { return std::to_string(c.scheduler.pf.window); }},
        nested_key("scheduler.drr.quantum_bits", &C::scheduler, &SchedulerParams::drr_quantum_bits),
        nested_key("scheduler.max_grants_per_slot", &C::scheduler, &SchedulerParams::max_grants_per_slot),
        bool_key("scheduler.fast_fading_csi", &C::scheduler_fast_fading_csi),
        number_key("channel.cqi", &C::fixed_cqi),
        number_key("channel.re_per_rb", &C::re_per_rb),
        bool_key("channel.fading", &C::fading),
        bool_key("channel.shadowing", &C::shadowing),
        number_key("channel.jakes_oscillators", &C::jakes_oscillators),
        nested_key("radio.carrier_ghz", &C::radio, &RadioParams::carrier_ghz),
        nested_key("radio.tx_power_dbm", &C::radio, &RadioParams::tx_power_dbm),
        nested_key("radio.antenna_gain_dbi", &C::radio, &RadioParams::antenna_gain_dbi),
        nested_key("radio.antenna_height_m", &C::radio, &RadioParams::antenna_height_m),
        nested_key("radio.noise_figure_db", &C::radio, &RadioParams::noise_figure_db),
        nested_key("radio.numerology", &C::radio, &RadioParams::numerology),
        nested_key("radio.num_rbs", &C::radio, &RadioParams::num_rbs),
        nested_key("radio.bandwidth_mhz", &C::radio, &RadioParams::bandwidth_mhz),
        nested_key("radio.shadow_sigma_db", &C::radio, &RadioParams::shadow_sigma_db),
        nested_key("gnb.tx_power_dbm", &C::gnb, &GnbParams::tx_power_dbm),
        nested_key("gnb.antenna_gain_dbi", &C::gnb, &GnbParams::antenna_gain_dbi),
        nested_key("gnb.noise_figure_db", &C::gnb, &GnbParams::noise_figure_db),
        nested_key("gnb.height_m", &C::gnb, &GnbParams::height_m),
        nested_key("gnb.x_m", &C::gnb, &GnbParams::x_m),
        nested_key("gnb.lateral_m", &C::gnb, &GnbParams::lateral_m),
        enum_key("mobility.mode", &C::mobility_mode, {MobilityMode::ConstantSpeed, MobilityMode::Plf}),
        nested_key("mobility.plf.c1", &C::plf, &PlfGains::c1),
        nested_key("mobility.plf.xi", &C::plf, &PlfGains::xi),
        nested_key("mobility.plf.omega_n", &C::plf, &PlfGains::omega_n),
        nested_key("mobility.plf.desired_gap_m", &C::plf, &PlfGains::desired_gap_m),
        number_key("sim.duration_s", &C::sim_duration_s),
        number_key("sim.warmup_s", &C::warmup_s),
        number_key("sim.replications", &C::replications),
        number_key("sim.seed", &C::seed),
        number_key("sim.max_events", &C::max_events),
    };
    return table;
}

// mcs.<cqi>.<field>
inline std::optional<std::string> set_mcs_key(ScenarioConfig& c, std::string_view key, std::string_view v,
                                              bool& recognised)
{
    recognised = false;
    if (key.substr(0, 4) != "mcs.")
        return std::nullopt;
    const auto rest = key.substr(4);
    const auto dot = rest.find('.');
    if (dot == std::string_view::npos)
        return std::nullopt;
    const auto cqi = parse_number<int>(rest.substr(0, dot));
    const auto field = rest.substr(dot + 1);
    if (!cqi || *cqi < 1 || *cqi > 15)
        return std::nullopt;
    static const std::set<std::string_view> fields = {"efficiency", "threshold_db", "slope_db", "modulation_order",
                                                      "code_rate"};
    if (!fields.count(field))
        return std::nullopt;
    recognised = true;
    auto n = parse_number<double>(v);
    if (!n)
        return "expected a number, got '" + std::string(v) + "'";
    McsEntry& e = c.mcs[*cqi];
    if (field == "efficiency")
        e.efficiency = *n;
    else if (field == "threshold_db")
        e.sinr_threshold_db = *n;
    else if (field == "slope_db")
        e.bler_slope_db = *n;
    else if (field == "modulation_order")
        e.modulation_order = static_cast<int>(*n);
    else
        e.code_rate = *n;
    return std::nullopt;
}

} // namespace detail

/// Applies one `key = value` setting. Returns an error message on failure.
inline std::optional<ConfigError> apply_setting(ScenarioConfig& cfg, std::string_view key, std::string_view value)
{
    for (const auto& spec : detail::key_table()) {
        if (spec.name == key) {
            if (auto err = spec.set(cfg, value))
                return ConfigError{std::string(key), *err};
            return std::nullopt;
        }
    }
    if (key == "channel.mcs_table") {
        try {
            cfg.mcs = McsTable::load(std::string(value));
        } catch (const std::exception& e) {
            return ConfigError{std::string(key), e.what()};
        }
        return std::nullopt;
    }
    bool recognised = false;
    if (auto err = detail::set_mcs_key(cfg, key, value, recognised))
        return ConfigError{std::string(key), *err};
    if (recognised)
        return std::nullopt;
    return ConfigError{std::string(key), "unknown key"};
}

/// Checks every invariant. Errors make the config unusable; warnings do not.
inline void validate_config(const ScenarioConfig& c, std::vector<ConfigError>& errors,
                            std::vector<std::string>& warnings)
{
    auto err = [&](std::string key, std::string msg) { errors.push_back({std::move(key), std::move(msg)}); };

    if (c.num_platoons > 3)
        err("scenario.num_platoons", "num_platoons exceeds 3");
    else if (c.num_platoons < 1)
        err("scenario.num_platoons", "num_platoons must be at least 1");
    if (c.platoon_length < 2)
        err("scenario.platoon_length", "platoon_length must be at least 2");
    else if (c.platoon_length < 3 || c.platoon_length > 10)
        warnings.push_back("scenario.platoon_length: " + std::to_string(c.platoon_length)
                           + " is outside the studied range 3..10");
    if (!(c.vehicle_length_m > 0.0))
        err("scenario.vehicle_length_m", "must be positive");
    if (!(c.gap_m > 0.0))
        err("scenario.gap_m", "must be positive");
    if (!(c.speed_mps >= 0.0))
        err("scenario.speed_mps", "must be non-negative");
    if (!(c.max_accel_mps2 > 0.0))
        err("scenario.max_accel_mps2", "must be positive");
    if (!(c.control_period_s > 0.0))
        err("control.period_s", "must be positive");
    if (!(c.cam_period_s > 0.0))
        err("cam.period_s", "must be positive");
    else if (!(c.cam_period_s < c.control_period_s))
        err("cam.period_s", "cam period must be shorter than the control period");
    if (c.cam_app_bytes < 1)
        err("cam.app_bytes", "must be at least 1");
    if (c.lower_layer_overhead_bytes < 0)
        err("cam.overhead_bytes", "must be non-negative");
    if (!(c.relay_proc_ms >= 0.0))
        err("ift.relay_proc_ms", "must be non-negative");
    if (!(c.core_proc_ms >= 0.0))
        err("ift.core_proc_ms", "must be non-negative");
    if (!(c.ue_grant_delay_ms >= 0.0))
        err("mac.ue_grant_delay_ms", "must be non-negative");
    if (c.scheduler.pf.window < 1)
        err("scheduler.pf.window", "must be at least 1");
    if (!(c.scheduler.pf.alpha >= 0.0))
        err("scheduler.pf.alpha", "must be non-negative");
    if (!(c.scheduler.pf.beta >= 0.0))
        err("scheduler.pf.beta", "must be non-negative");
    if (!(c.scheduler.drr_quantum_bits >= 0.0))
        err("scheduler.drr.quantum_bits", "must be non-negative");
    if (c.scheduler.max_grants_per_slot < 0)
        err("scheduler.max_grants_per_slot", "must be non-negative");

    static const std::set<int> supported_cqi = {3, 5, 7, 9, 11};
    if (!supported_cqi.count(c.fixed_cqi))
        err("channel.cqi", "unsupported CQI value " + std::to_string(c.fixed_cqi) + " (expected 3, 5, 7, 9 or 11)");
    else if (!c.mcs.contains(c.fixed_cqi))
        err("channel.cqi", "no MCS entry for CQI " + std::to_string(c.fixed_cqi));
    if (auto bad = c.mcs.check())
        err("mcs", *bad);
    if (c.re_per_rb < 1)
        err("channel.re_per_rb", "must be at least 1");
    if (c.jakes_oscillators < 1)
        err("channel.jakes_oscillators", "must be at least 1");

    const auto& r = c.radio;
    if (!(r.carrier_ghz > 0.0))
        err("radio.carrier_ghz", "must be positive");
    if (r.numerology < 0 || r.numerology > 6)
        err("radio.numerology", "must be within 0..6");
    if (r.num_rbs < 1)
        err("radio.num_rbs", "must be at least 1");
    if (!(r.bandwidth_mhz > 0.0))
        err("radio.bandwidth_mhz", "must be positive");
    else if (r.numerology >= 0 && r.numerology <= 6 && r.num_rbs * r.rb_bandwidth_hz() > r.bandwidth_mhz * 1e6)
        err("radio.num_rbs", "num_rbs x 12 x subcarrier spacing exceeds the bandwidth");
    if (!(r.shadow_sigma_db >= 0.0))
        err("radio.shadow_sigma_db", "must be non-negative");
    if (!(r.antenna_height_m > 0.0))
        err("radio.antenna_height_m", "must be positive");
    if (!(c.gnb.height_m > 0.0))
        err("gnb.height_m", "must be positive");

    if (c.plf.c1 < 0.0 || c.plf.c1 > 1.0)
        err("mobility.plf.c1", "must be within [0, 1]");
    if (!(c.plf.xi >= 1.0))
        err("mobility.plf.xi", "must be at least 1");
    if (!(c.plf.omega_n > 0.0))
        err("mobility.plf.omega_n", "must be positive");

    if (!(c.sim_duration_s > 0.0))
        err("sim.duration_s", "must be positive");
    if (!(c.warmup_s >= 0.0) || !(c.warmup_s < c.sim_duration_s))
        err("sim.warmup_s", "must be non-negative and shorter than the duration");
    if (c.replications < 1)
        err("sim.replications", "must be at least 1");
    if (c.max_events < 1)
        err("sim.max_events", "must be at least 1");
}

/// Parses flat `key = value` text on top of `base` (defaults when omitted).
inline ParseResult parse_config(std::string_view text, ScenarioConfig base = {})
{
    ParseResult res;
    std::vector<std::pair<std::string, std::string>> settings;
    std::set<std::string> seen;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        const std::string body = detail::trim(line);
        if (body.empty())
            continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            res.errors.push_back({"", "line " + std::to_string(lineno) + ": expected 'key = value'"});
            continue;
        }
        std::string key = detail::trim(std::string_view(body).substr(0, eq));
        std::string value = detail::trim(std::string_view(body).substr(eq + 1));
        if (!seen.insert(key).second) {
            res.errors.push_back({key, "duplicate key"});
            continue;
        }
        settings.emplace_back(std::move(key), std::move(value));
    }
    // A table file replaces the whole MCS table, so it goes before per-row overrides.
    std::stable_partition(settings.begin(), settings.end(),
                          [](const auto& kv) { return kv.first == "channel.mcs_table"; });
    for (const auto& [key, value] : settings)
        if (auto e = apply_setting(base, key, value))
            res.errors.push_back(*e);
    if (!res.errors.empty())
        return res;
    validate_config(base, res.errors, res.warnings);
    if (res.errors.empty())
        res.config = std::move(base);
    return res;
}

inline ParseResult load_config_file(const std::string& path)
{
    std::ifstream f(path);
    if (!f) {
        ParseResult r;
        r.errors.push_back({"", "cannot open config file '" + path + "'"});
        return r;
    }
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

/// Canonical text form; parse_config(emit_config(c)) == c.
inline std::string emit_config(const ScenarioConfig& c)
{
    std::string out;
    for (const auto& spec : detail::key_table())
        out += spec.name + " = " + spec.get(c) + "\n";
    for (const auto& [cqi, e] : c.mcs.entries()) {
        const std::string p = "mcs." + std::to_string(cqi) + ".";
        out += p + "efficiency = " + detail::format_double(e.efficiency) + "\n";
        out += p + "threshold_db = " + detail::format_double(e.sinr_threshold_db) + "\n";
        out += p + "slope_db = " + detail::format_double(e.bler_slope_db) + "\n";
        out += p + "modulation_order = " + std::to_string(e.modulation_order) + "\n";
        out += p + "code_rate = " + detail::format_double(e.code_rate) + "\n";
    }
    return out;
}

/// Looks up the emitted value of a key (used for CSV scenario columns).
inline std::optional<std::string> config_value(const ScenarioConfig& c, std::string_view key)
{
    for (const auto& spec : detail::key_table())
        if (spec.name == key)
            return spec.get(c);
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// World

struct PlatoonSpec {
    std::uint32_t id = 0;
    std::uint32_t lane = 0;
    std::vector<NodeId> vehicles; // ordered leader .. tail
    bool operator==(const PlatoonSpec&) const = default;
};

/// Immutable description of the simulated road: platoons, vehicles and radio.
struct World {
    std::vector<PlatoonSpec> platoons;
    std::vector<VehicleState> vehicles; // indexed by NodeId
    RadioParams radio;
    GnbParams gnb;
    IftKind ift = IftKind::OneHop;
    SchedulerKind scheduler = SchedulerKind::MaxCI;
    double gap_m = 11.0;

    NodeId gnb_node() const { return static_cast<NodeId>(vehicles.size()); }
    std::size_t num_nodes() const { return vehicles.size() + 1; }
    const VehicleState& vehicle(std::uint32_t platoon, std::uint32_t index) const
    {
        return vehicles.at(platoons.at(platoon).vehicles.at(index));
    }
    const VehicleState& leader(std::uint32_t platoon) const { return vehicle(platoon, 0); }
    const VehicleState& tail(std::uint32_t platoon) const
    {
        return vehicles.at(platoons.at(platoon).vehicles.back());
    }
    bool operator==(const World&) const = default;
};

/// Platoon j drives on lane j; V_{j,0} leads at x = (N-1) d and V_{j,N-1}
/// trails at x = 0. Pure: consumes no randomness.
inline World build_world(const ScenarioConfig& cfg)
{
    World w;
    w.radio = cfg.radio;
    w.gnb = cfg.gnb;
    w.ift = cfg.ift_kind;
    w.scheduler = cfg.scheduler_kind;
    w.gap_m = cfg.gap_m;
    const auto n = static_cast<std::uint32_t>(cfg.platoon_length);
    for (std::uint32_t j = 0; j < static_cast<std::uint32_t>(cfg.num_platoons); ++j) {
        PlatoonSpec p{j, j, {}};
        for (std::uint32_t i = 0; i < n; ++i) {
            VehicleState v;
            v.id = static_cast<NodeId>(w.vehicles.size());
            v.platoon = j;
            v.index = i;
            v.lane = j;
            v.role = i == 0 ? VehicleRole::Leader : (i + 1 == n ? VehicleRole::Tail : VehicleRole::Member);
            v.position = static_cast<double>(n - 1 - i) * cfg.gap_m;
            v.speed = cfg.speed_mps;
            p.vehicles.push_back(v.id);
            w.vehicles.push_back(v);
        }
        w.platoons.push_back(std::move(p));
    }
    return w;
}

} // namespace platoonsim
