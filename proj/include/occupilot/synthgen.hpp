#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "occupilot/rng.hpp"
#include "occupilot/telemetry.hpp"

namespace occupilot::synthgen {

enum class Archetype { worker, homebody, shift };

struct CohortConfig {
    int n_households = 50;
    int days = 7;
    std::uint64_t seed = 42;
    std::int64_t native_period = 60;
    std::int64_t start_epoch = 1719792000;  // 2024-07-01T00:00:00Z, a Monday
    std::array<double, 3> archetype_weights{0.5, 0.3, 0.2};  // worker, homebody, shift
    double pv_peak_kw_min = 2.5;
    double pv_peak_kw_max = 4.5;
    double cloud_noise = 0.3;

    /// Throws ConfigError.
    void validate() const;
};

struct PvSeries {
    int household_id = 0;
    std::vector<std::int64_t> bin_start;
    std::vector<double> kw;

    friend bool operator==(const PvSeries&, const PvSeries&) = default;
};

struct HouseholdProfile {
    int household_id = 0;
    Archetype archetype = Archetype::worker;
    int occupants = 1;
    double pv_peak_kw = 0.0;
};

struct Cohort {
    std::vector<telemetry::HouseholdSeries> series;  // living then bedroom, per household
    std::vector<PvSeries> pv;
    std::vector<HouseholdProfile> profiles;
};

Cohort generate_cohort(const CohortConfig& config);

/// One day of 15-minute PV output in kW, starting at local midnight.
/// Zero outside daylight, bell-shaped around solar noon (12:30), scaled by a
/// multiplicative cloud factor whose depth is cloud_noise.
std::vector<double> generate_pv(double peak_kw, double cloud_noise, Rng& rng);

/// Bin index of the noiseless PV maximum within a day.
inline constexpr int kSolarNoonBin = 50;

}  // namespace occupilot::synthgen
