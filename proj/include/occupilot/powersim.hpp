#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "occupilot/synthgen.hpp"
#include "occupilot/telemetry.hpp"

namespace occupilot::powersim {

using telemetry::Appliance;

struct ShutoffPolicy {
    std::vector<Appliance> controllable{Appliance::pc, Appliance::tv, Appliance::air_cleaner,
                                        Appliance::light, Appliance::hvac};
    // never cut: a running cycle always finishes
    std::vector<Appliance> protected_channels{Appliance::washing_machine, Appliance::cooker};
    int absence_delay_bins = 1;
    // a cut in a bin whose recorded label is occupied is undone by the occupant
    bool occupant_override = true;

    /// Throws ConfigError on overlap or delay < 1.
    void validate() const;
    bool is_controllable(Appliance a) const;
};

nlohmann::json to_json(const ShutoffPolicy& policy);
ShutoffPolicy policy_from_json(const nlohmann::json& doc);

/// One room's labeled bins with the occupancy predicted for each bin.
struct RoomTimeline {
    telemetry::Room room = telemetry::Room::living;
    std::vector<telemetry::BinnedRecord> bins;
    std::vector<int> predicted;
};

/// Energies in kWh over the simulated period. "gross" ignores PV; the
/// unqualified figures are grid energy after netting PV per bin.
struct HouseholdResult {
    int household_id = 0;
    double baseline_gross_kwh = 0.0;
    double proposed_gross_kwh = 0.0;
    double baseline_kwh = 0.0;
    double proposed_kwh = 0.0;
    double renewable_offset_kwh = 0.0;  // baseline load covered by PV

    double savings_fraction() const;
};

inline constexpr double kBinHours = 0.25;

/// Throws TimelineMismatch when predictions and bins differ in length, or a bin
/// has no PV sample (an empty PV series means no PV).
HouseholdResult simulate_household(int household_id, std::span<const RoomTimeline> rooms,
                                   const synthgen::PvSeries& pv, const ShutoffPolicy& policy);

/// Grid energy of a single load/PV pair of series, floored at zero per bin.
double net_energy_kwh(std::span<const double> load_kw, std::span<const double> pv_kw);

struct Percentiles {
    double p75 = 0.0, p50 = 0.0, p25 = 0.0;
};

/// Linear interpolation between order statistics, position q * (n - 1).
double percentile(std::vector<double> values, double q);
Percentiles percentiles(std::span<const double> values);

struct SavingsReport {
    std::vector<HouseholdResult> households;  // sorted by id
    Percentiles baseline, proposed;             // net grid energy
    Percentiles baseline_gross, proposed_gross;
    Percentiles savings;                        // (b - p) / b at matched rank
    double renewable_offset_kwh = 0.0;          // cohort total
};

double savings_fraction(double baseline, double proposed);

/// Throws TooFewHouseholds below four.
SavingsReport cohort_report(std::vector<HouseholdResult> results);

nlohmann::json to_json(const SavingsReport& report);
std::string render_report(const SavingsReport& report);

}  // namespace occupilot::powersim
