#include "occupilot/powersim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <unordered_map>

#include "occupilot/errors.hpp"
#include "occupilot/io.hpp"

namespace occupilot::powersim {

void ShutoffPolicy::validate() const {
    if (absence_delay_bins < 1) throw ConfigError("absence_delay_bins must be >= 1");
    for (auto a : controllable)
        if (std::find(protected_channels.begin(), protected_channels.end(), a) != protected_channels.end())
            throw ConfigError("channel both controllable and protected: " +
                              std::string(telemetry::kApplianceNames[telemetry::idx(a)]));
}

bool ShutoffPolicy::is_controllable(Appliance a) const {
    return std::find(controllable.begin(), controllable.end(), a) != controllable.end();
}

namespace {

nlohmann::json names_of(const std::vector<Appliance>& set) {
    auto j = nlohmann::json::array();
    for (auto a : set) j.push_back(std::string(telemetry::kApplianceNames[telemetry::idx(a)]));
    return j;
}

std::vector<Appliance> set_from(const nlohmann::json& j) {
    std::vector<Appliance> out;
    for (const auto& v : j) {
        auto a = telemetry::appliance_from_name(v.get<std::string>());
        if (!a) throw ConfigError("unknown appliance: " + v.get<std::string>());
        out.push_back(*a);
    }
    return out;
}

}  // namespace

nlohmann::json to_json(const ShutoffPolicy& policy) {
    return {{"controllable", names_of(policy.controllable)},
            {"protected", names_of(policy.protected_channels)},
            {"absence_delay_bins", policy.absence_delay_bins},
            {"occupant_override", policy.occupant_override}};
}

ShutoffPolicy policy_from_json(const nlohmann::json& doc) {
    ShutoffPolicy p;
    try {
        if (doc.contains("controllable")) p.controllable = set_from(doc.at("controllable"));
        if (doc.contains("protected")) p.protected_channels = set_from(doc.at("protected"));
        if (doc.contains("absence_delay_bins")) p.absence_delay_bins = doc.at("absence_delay_bins").get<int>();
        if (doc.contains("occupant_override")) p.occupant_override = doc.at("occupant_override").get<bool>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad policy: ") + e.what());
    }
    p.validate();
    return p;
}

double HouseholdResult::savings_fraction() const {
    return powersim::savings_fraction(baseline_kwh, proposed_kwh);
}

double savings_fraction(double baseline, double proposed) {
    return baseline > 0.0 ? (baseline - proposed) / baseline : 0.0;
}

HouseholdResult simulate_household(int household_id, std::span<const RoomTimeline> rooms,
                                   const synthgen::PvSeries& pv, const ShutoffPolicy& policy) {
    policy.validate();
    if (pv.bin_start.size() != pv.kw.size()) throw TimelineMismatch("pv timestamps and values differ in length");
    std::unordered_map<std::int64_t, double> pv_at;
    for (std::size_t i = 0; i < pv.kw.size(); ++i) pv_at[pv.bin_start[i]] = pv.kw[i];

    // per-bin household load in kW, both scenarios
    std::map<std::int64_t, std::pair<double, double>> load;
    for (const auto& room : rooms) {
        if (room.bins.size() != room.predicted.size())
            throw TimelineMismatch("room " + std::string(telemetry::room_name(room.room)) + ": " +
                                   std::to_string(room.bins.size()) + " bins vs " +
                                   std::to_string(room.predicted.size()) + " predictions");
        int absent_run = 0;
        for (std::size_t b = 0; b < room.bins.size(); ++b) {
            const auto& bin = room.bins[b];
            if (b > 0 && bin.bin_start <= room.bins[b - 1].bin_start)
                throw TimelineMismatch("bins out of order");
            absent_run = room.predicted[b] == 0 ? absent_run + 1 : 0;
            const bool shut = absent_run >= policy.absence_delay_bins &&
                              !(policy.occupant_override && bin.occupancy_label == 1);
            double base = 0.0, prop = 0.0;
            for (std::size_t a = 0; a < telemetry::kApplianceCount; ++a) {
                const double kw = bin.power[a] / 1000.0;
                base += kw;
                if (!(shut && policy.is_controllable(static_cast<Appliance>(a)))) prop += kw;
            }
            auto& slot = load[bin.bin_start];
            slot.first += base;
            slot.second += prop;
        }
    }

    HouseholdResult r;
    r.household_id = household_id;
    for (const auto& [t, l] : load) {
        double sun = 0.0;
        if (!pv_at.empty()) {
            auto it = pv_at.find(t);
            if (it == pv_at.end()) throw TimelineMismatch("no pv sample for bin " + std::to_string(t));
            sun = it->second;
        }
        r.baseline_gross_kwh += l.first * kBinHours;
        r.proposed_gross_kwh += l.second * kBinHours;
        r.baseline_kwh += std::max(0.0, l.first - sun) * kBinHours;
        r.proposed_kwh += std::max(0.0, l.second - sun) * kBinHours;
        r.renewable_offset_kwh += std::min(l.first, sun) * kBinHours;
    }
    return r;
}

double net_energy_kwh(std::span<const double> load_kw, std::span<const double> pv_kw) {
    if (load_kw.size() != pv_kw.size()) throw TimelineMismatch("load and pv differ in length");
    double e = 0.0;
    for (std::size_t i = 0; i < load_kw.size(); ++i) e += std::max(0.0, load_kw[i] - pv_kw[i]) * kBinHours;
    return e;
}

double percentile(std::vector<double> values, double q) {
    if (values.empty()) throw TooFewHouseholds(0);
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

Percentiles percentiles(std::span<const double> values) {
    std::vector<double> v(values.begin(), values.end());
    return {percentile(v, 0.75), percentile(v, 0.50), percentile(v, 0.25)};
}

SavingsReport cohort_report(std::vector<HouseholdResult> results) {
    if (results.size() < 4) throw TooFewHouseholds(results.size());
    std::sort(results.begin(), results.end(),
              [](const auto& a, const auto& b) { return a.household_id < b.household_id; });
    std::vector<double> b, p, bg, pg;
    SavingsReport rep;
    for (const auto& r : results) {
        b.push_back(r.baseline_kwh);
        p.push_back(r.proposed_kwh);
        bg.push_back(r.baseline_gross_kwh);
        pg.push_back(r.proposed_gross_kwh);
        rep.renewable_offset_kwh += r.renewable_offset_kwh;
    }
    rep.baseline = percentiles(b);
    rep.proposed = percentiles(p);
    rep.baseline_gross = percentiles(bg);
    rep.proposed_gross = percentiles(pg);
    rep.savings = {savings_fraction(rep.baseline.p75, rep.proposed.p75),
                   savings_fraction(rep.baseline.p50, rep.proposed.p50),
                   savings_fraction(rep.baseline.p25, rep.proposed.p25)};
    rep.households = std::move(results);
    return rep;
}

namespace {

nlohmann::json pct_json(const Percentiles& p) { return {{"p75", p.p75}, {"p50", p.p50}, {"p25", p.p25}}; }

}  // namespace

nlohmann::json to_json(const SavingsReport& report) {
    nlohmann::json j;
    j["schema_version"] = io::kSchemaVersion;
    j["units"] = "kWh";
    auto hh = nlohmann::json::array();
    for (const auto& r : report.households)
        hh.push_back({{"household_id", r.household_id},
                      {"baseline_kwh", r.baseline_kwh},
                      {"proposed_kwh", r.proposed_kwh},
                      {"baseline_gross_kwh", r.baseline_gross_kwh},
                      {"proposed_gross_kwh", r.proposed_gross_kwh},
                      {"renewable_offset_kwh", r.renewable_offset_kwh},
                      {"savings_fraction", r.savings_fraction()}});
    j["households"] = hh;
    j["baseline"] = pct_json(report.baseline);
    j["proposed"] = pct_json(report.proposed);
    j["baseline_gross"] = pct_json(report.baseline_gross);
    j["proposed_gross"] = pct_json(report.proposed_gross);
    j["savings_fraction"] = pct_json(report.savings);
    j["renewable_offset_kwh"] = report.renewable_offset_kwh;
    return j;
}

std::string render_report(const SavingsReport& report) {
    std::string out;
    char line[160];
    std::snprintf(line, sizeof line, "%-10s  %14s  %14s  %14s  %14s  %8s\n", "Percentile", "Gross base kWh",
                  "Gross prop kWh", "Net base kWh", "Net prop kWh", "Savings");
    out += line;
    auto row = [&](const char* name, double bg, double pg, double b, double p, double s) {
        std::snprintf(line, sizeof line, "%-10s  %14.2f  %14.2f  %14.2f  %14.2f  %7.1f%%\n", name, bg, pg, b, p,
                      100.0 * s);
        out += line;
    };
    row("75%", report.baseline_gross.p75, report.proposed_gross.p75, report.baseline.p75, report.proposed.p75,
        report.savings.p75);
    row("50%", report.baseline_gross.p50, report.proposed_gross.p50, report.baseline.p50, report.proposed.p50,
        report.savings.p50);
    row("25%", report.baseline_gross.p25, report.proposed_gross.p25, report.baseline.p25, report.proposed.p25,
        report.savings.p25);
    std::snprintf(line, sizeof line, "PV offset (cohort): %.2f kWh\n", report.renewable_offset_kwh);
    out += line;
    return out;
}

}  // namespace occupilot::powersim
