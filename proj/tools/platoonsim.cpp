// SPDX-License-Identifier: Apache-2.0
//
// platoonsim: 5G eV2X vehicle-platoon communication simulator

#include "platoonsim/platoonsim.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace platoonsim;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> reps;
    std::string out;
    bool per_link = false;
    int jobs = 1;
    std::vector<std::string> overrides;
    std::optional<double> duration;
};

void log(const std::string& msg) { std::cerr << "platoonsim: " << msg << '\n'; }

void report_errors(const std::vector<ConfigError>& errors)
{
    for (const auto& e : errors)
        log("config error: " + e.to_string());
}

// Applies --set key=value pairs on top of the file and the explicit flags.
bool apply_overrides(ScenarioConfig& cfg, const Options& o)
{
    std::vector<ConfigError> errors;
    for (const auto& kv : o.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            errors.push_back({kv, "expected key=value"});
            continue;
        }
        if (auto err = apply_setting(cfg, detail::trim(kv.substr(0, eq)), detail::trim(kv.substr(eq + 1))))
            errors.push_back(*err);
    }
    if (o.seed)
        cfg.seed = *o.seed;
    if (o.reps)
        cfg.replications = *o.reps;
    if (o.duration)
        cfg.sim_duration_s = *o.duration;
    std::vector<std::string> warnings;
    validate_config(cfg, errors, warnings);
    for (const auto& w : warnings)
        log("warning: " + w);
    report_errors(errors);
    return errors.empty();
}

void write_output(const CampaignTable& table, const Options& o)
{
    if (o.out.empty() || o.out == "-") {
        emit_csv(table, std::cout, o.per_link);
    } else {
        write_csv(table, o.out, o.per_link);
        log("wrote " + o.out);
    }
}

int finish(const CampaignTable& table)
{
    int failed = 0;
    for (const auto& r : table.rows)
        if (!r.error.empty()) {
            ++failed;
            log("row " + std::to_string(r.point.index) + " failed: " + r.error);
        }
    return failed ? kExitRuntime : kExitOk;
}

auto progress_logger()
{
    return [last = std::size_t{0}](std::size_t done, std::size_t total) mutable {
        const std::size_t pct = done * 10 / total;
        if (pct != last || done == total) {
            last = pct;
            log("runs " + std::to_string(done) + "/" + std::to_string(total));
        }
    };
}

int cmd_run(const Options& o)
{
    ParseResult parsed = o.config.empty() ? parse_config("") : load_config_file(o.config);
    for (const auto& w : parsed.warnings)
        log("warning: " + w);
    if (!parsed.ok()) {
        report_errors(parsed.errors);
        return kExitConfig;
    }
    ScenarioConfig cfg = *parsed.config;
    if (!apply_overrides(cfg, o))
        return kExitConfig;
    CampaignSpec spec;
    spec.base = cfg;
    spec.replications = cfg.replications;
    const CampaignTable table = run_campaign(spec, o.jobs, run_simulation, progress_logger());
    write_output(table, o);
    return finish(table);
}

int cmd_campaign(const Options& o)
{
    if (o.config.empty()) {
        log("campaign: --config <sweep file> is required");
        return kExitConfig;
    }
    CampaignParseResult parsed = load_campaign_file(o.config);
    for (const auto& w : parsed.warnings)
        log("warning: " + w);
    if (!parsed.ok()) {
        report_errors(parsed.errors);
        return kExitConfig;
    }
    CampaignSpec spec = *parsed.spec;
    if (!apply_overrides(spec.base, o))
        return kExitConfig;
    spec.replications = spec.base.replications;
    const auto points = expand_points(spec);
    log("campaign: " + std::to_string(points.size()) + " points x " + std::to_string(spec.replications)
        + " replications");
    const CampaignTable table = run_campaign(spec, o.jobs, run_simulation, progress_logger());
    write_output(table, o);
    return finish(table);
}

int cmd_validate(const Options& o)
{
    if (o.config.empty()) {
        log("validate: --config <file> is required");
        return kExitConfig;
    }
    std::ifstream in(o.config);
    if (!in) {
        log("cannot open " + o.config);
        return kExitConfig;
    }
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    CampaignParseResult parsed = parse_campaign(text);
    for (const auto& w : parsed.warnings)
        log("warning: " + w);
    if (!parsed.ok()) {
        report_errors(parsed.errors);
        return kExitConfig;
    }
    const auto points = expand_points(*parsed.spec);
    int bad = 0;
    for (const auto& p : points)
        if (p.error) {
            ++bad;
            log("sweep point " + std::to_string(p.index) + ": " + *p.error);
        }
    if (bad)
        return kExitConfig;
    std::cout << o.config << ": ok (" << points.size() << " scenario point" << (points.size() == 1 ? "" : "s")
              << ")\n";
    return kExitOk;
}

// Trend tables: IFT x scheduler at N=5, platoon-length and platoon-count
// sweeps per IFT, and per-link results across CQIs at N=8.
int cmd_tables(const Options& o)
{
    ScenarioConfig base;
    if (!o.config.empty()) {
        ParseResult parsed = load_config_file(o.config);
        if (!parsed.ok()) {
            report_errors(parsed.errors);
            return kExitConfig;
        }
        base = *parsed.config;
    }
    if (!apply_overrides(base, o))
        return kExitConfig;
    const std::string dir = o.out.empty() ? "tables" : o.out;
    std::filesystem::create_directories(dir);

    struct Table {
        std::string file;
        std::vector<SweepAxis> axes;
        std::vector<std::pair<std::string, std::string>> fixed;
        bool per_link;
    };
    const std::vector<Table> tables = {
        {"ift_scheduler.csv",
         {{"ift.kind", {"one_hop", "car_to_server", "multi_hop"}}, {"scheduler.kind", {"maxci", "pf", "drr"}}},
         {},
         false},
        {"platoon_length.csv",
         {{"ift.kind", {"one_hop", "car_to_server", "multi_hop"}},
          {"scenario.platoon_length", {"3", "4", "5", "6", "7", "8", "9", "10"}}},
         {},
         false},
        {"num_platoons.csv",
         {{"ift.kind", {"one_hop", "car_to_server", "multi_hop"}}, {"scenario.num_platoons", {"1", "2", "3"}}},
         {},
         false},
        {"cqi_links.csv", {{"channel.cqi", {"3", "5", "7", "9", "11"}}}, {{"scenario.platoon_length", "8"}}, true},
    };

    int status = kExitOk;
    for (const auto& t : tables) {
        CampaignSpec spec;
        spec.base = base;
        for (const auto& [k, v] : t.fixed)
            if (auto err = apply_setting(spec.base, k, v)) {
                report_errors({*err});
                return kExitConfig;
            }
        spec.axes = t.axes;
        spec.replications = base.replications;
        log("table " + t.file);
        const CampaignTable table = run_campaign(spec, o.jobs, run_simulation, progress_logger());
        const std::string path = (std::filesystem::path(dir) / t.file).string();
        write_csv(table, path, t.per_link);
        log("wrote " + path);
        if (finish(table) != kExitOk)
            status = kExitRuntime;
    }
    return status;
}

void add_common(CLI::App* cmd, Options& o, bool campaign)
{
    auto* cfg = cmd->add_option("--config,-c", o.config, campaign ? "Sweep file" : "Scenario config file");
    if (campaign)
        cmd->add_option("--sweep", o.config, "Alias of --config")->excludes(cfg);
    cmd->add_option("--seed", o.seed, "Base seed (overrides sim.seed)");
    cmd->add_option("--reps", o.reps, "Replications per scenario point")->check(CLI::PositiveNumber);
    cmd->add_option("--out,-o", o.out, "Output CSV path ('-' or empty: stdout)");
    cmd->add_flag("--per-link", o.per_link, "One row per leader-to-member link");
    cmd->add_option("--jobs,-j", o.jobs, "Parallel runs")->check(CLI::PositiveNumber);
    cmd->add_option("--set", o.overrides, "Config override key=value (repeatable)");
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"platoonsim: 5G eV2X vehicle-platoon communication simulator"};
    app.require_subcommand(1);
    Options o;

    auto* run = app.add_subcommand("run", "Run one scenario for the configured replications");
    add_common(run, o, false);
    auto* campaign = app.add_subcommand("campaign", "Run a parameter sweep");
    add_common(campaign, o, true);
    auto* validate = app.add_subcommand("validate", "Check a scenario or sweep file");
    validate->add_option("--config,-c", o.config, "File to check")->required();
    auto* tables = app.add_subcommand("tables", "Regenerate the trend comparison tables");
    add_common(tables, o, false);
    tables->add_option("--duration", o.duration, "Simulated seconds per run")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*run)
            return cmd_run(o);
        if (*campaign)
            return cmd_campaign(o);
        if (*validate)
            return cmd_validate(o);
        if (*tables)
            return cmd_tables(o);
    } catch (const std::invalid_argument& e) {
        log(std::string("error: ") + e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        log(std::string("runtime error: ") + e.what());
        return kExitRuntime;
    }
    return kExitConfig;
}
