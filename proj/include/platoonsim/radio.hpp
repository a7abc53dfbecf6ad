// SPDX-License-Identifier: Apache-2.0
//
// platoonsim: 5G eV2X vehicle-platoon communication simulator

#pragma once

#include "platoonsim/types.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace platoonsim {

struct RadioParams {
    double carrier_ghz = 30.0;
    double tx_power_dbm = 23.0;
    double antenna_gain_dbi = 5.0; // per end
    double antenna_height_m = 1.6;
    double noise_figure_db = 13.0;
    int numerology = 3;
    int num_rbs = 132;
    double bandwidth_mhz = 200.0;
    double shadow_sigma_db = 3.0;

    double subcarrier_spacing_hz() const { return 15e3 * std::ldexp(1.0, numerology); }
    double rb_bandwidth_hz() const { return 12.0 * subcarrier_spacing_hz(); }
    /// 1 ms / 2^mu.
    SimTime slot_duration() const { return SimTime{1'000'000 >> numerology}; }
    /// Thermal noise over one RB plus receiver noise figure.
    double noise_floor_per_rb_dbm(double noise_figure) const
    {
        return -174.0 + 10.0 * std::log10(rb_bandwidth_hz()) + noise_figure;
    }
    double noise_floor_per_rb_dbm() const { return noise_floor_per_rb_dbm(noise_figure_db); }
    bool operator==(const RadioParams&) const = default;
};

/// Base-station parameters used by the Car-to-Server topology.
struct GnbParams {
    double tx_power_dbm = 30.0;
    double antenna_gain_dbi = 5.0;
    double noise_figure_db = 5.0;
    double height_m = 25.0;
    double x_m = 300.0;       // longitudinal position
    double lateral_m = 20.0;  // offset from the road axis
    bool operator==(const GnbParams&) const = default;
};

struct McsEntry {
    int cqi = 0;
    int modulation_order = 0; // bits per symbol
    double code_rate = 0.0;
    double efficiency = 0.0;        // bits per resource element
    double sinr_threshold_db = 0.0; // SINR at 10% per-RB BLER
    double bler_slope_db = 0.5;     // logistic transition width
    bool operator==(const McsEntry&) const = default;
};

/// CQI -> MCS mapping. Defaults: 4-bit CQI efficiencies of the 3GPP table and
/// AWGN 10%-BLER SINR thresholds commonly used in system-level simulators.
class McsTable {
public:
    static McsTable standard()
    {
        struct Row {
            int m;
            int rate1024;
            double eff;
            double thr;
        };
        static constexpr std::array<Row, 15> rows{{
            {2, 78, 0.1523, -6.7},  {2, 120, 0.2344, -4.7}, {2, 193, 0.3770, -2.3},
            {2, 308, 0.6016, 0.2},  {2, 449, 0.8770, 2.4},  {2, 602, 1.1758, 4.3},
            {4, 378, 1.4766, 5.9},  {4, 490, 1.9141, 8.1},  {4, 616, 2.4063, 10.3},
            {6, 466, 2.7305, 11.7}, {6, 567, 3.3223, 14.1}, {6, 666, 3.9023, 16.3},
            {6, 772, 4.5234, 18.7}, {6, 873, 5.1152, 21.0}, {6, 948, 5.5547, 22.7},
        }};
        McsTable t;
        for (int i = 0; i < 15; ++i) {
            const auto& r = rows[i];
            t.entries_[i + 1] = McsEntry{i + 1, r.m, r.rate1024 / 1024.0, r.eff, r.thr, 0.5};
        }
        return t;
    }

    /// Rows: `cqi efficiency threshold_db slope_db [modulation_order code_rate]`;
    /// '#' starts a comment.
    static McsTable parse(std::string_view text)
    {
        McsTable t;
        std::istringstream in{std::string(text)};
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (auto hash = line.find('#'); hash != std::string::npos)
                line.erase(hash);
            std::istringstream ls(line);
            McsEntry e;
            if (!(ls >> e.cqi))
                continue;
            if (!(ls >> e.efficiency >> e.sinr_threshold_db >> e.bler_slope_db))
                throw std::runtime_error("MCS table line " + std::to_string(lineno) + ": expected 4 columns");
            ls >> e.modulation_order >> e.code_rate;
            t.entries_[e.cqi] = e;
        }
        if (auto err = t.check())
            throw std::runtime_error("MCS table: " + *err);
        return t;
    }

    static McsTable load(const std::string& path)
    {
        std::ifstream f(path);
        if (!f)
            throw std::runtime_error("cannot open MCS table '" + path + "'");
        std::stringstream ss;
        ss << f.rdbuf();
        return parse(ss.str());
    }

    /// Empty when the table is usable; otherwise a description of the fault.
    std::optional<std::string> check() const
    {
        const McsEntry* prev = nullptr;
        for (const auto& [cqi, e] : entries_) {
            if (cqi < 1 || cqi > 15)
                return "cqi " + std::to_string(cqi) + " outside 1..15";
            if (e.efficiency <= 0.0)
                return "cqi " + std::to_string(cqi) + ": efficiency must be positive";
            if (e.bler_slope_db <= 0.0)
                return "cqi " + std::to_string(cqi) + ": slope must be positive";
            if (prev && !(e.efficiency > prev->efficiency))
                return "efficiency not strictly increasing at cqi " + std::to_string(cqi);
            if (prev && !(e.sinr_threshold_db > prev->sinr_threshold_db))
                return "threshold not strictly increasing at cqi " + std::to_string(cqi);
            prev = &e;
        }
        return std::nullopt;
    }

    bool contains(int cqi) const { return entries_.count(cqi) != 0; }
    const McsEntry& at(int cqi) const
    {
        auto it = entries_.find(cqi);
        if (it == entries_.end())
            throw std::out_of_range("no MCS entry for cqi " + std::to_string(cqi));
        return it->second;
    }
    McsEntry& operator[](int cqi)
    {
        auto& e = entries_[cqi];
        e.cqi = cqi;
        return e;
    }
    const std::map<int, McsEntry>& entries() const { return entries_; }
    bool operator==(const McsTable&) const = default;

private:
    std::map<int, McsEntry> entries_;
};

} // namespace platoonsim
