#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace occupilot::telemetry {

inline constexpr std::int64_t kBinSeconds = 900;
inline constexpr std::int64_t kDaySeconds = 86400;

enum class Sensor : std::size_t { co2, humidity, illuminance, pm10, pm25, temperature, tvoc };
inline constexpr std::size_t kSensorCount = 7;
inline constexpr std::array<std::string_view, kSensorCount> kSensorNames = {
    "co2", "humidity", "illuminance", "pm10", "pm25", "temperature", "tvoc"};

enum class Appliance : std::size_t {
    pc, tv, washing_machine, air_cleaner, cooker, microwave, coffee_pot, hair_dryer, hvac, light
};
inline constexpr std::size_t kApplianceCount = 10;
inline constexpr std::array<std::string_view, kApplianceCount> kApplianceNames = {
    "pc", "tv", "washing_machine", "air_cleaner", "cooker",
    "microwave", "coffee_pot", "hair_dryer", "hvac", "light"};

constexpr std::size_t idx(Sensor s) { return static_cast<std::size_t>(s); }
constexpr std::size_t idx(Appliance a) { return static_cast<std::size_t>(a); }

std::optional<Appliance> appliance_from_name(std::string_view name);

enum class Room { living, bedroom };
std::string_view room_name(Room room);  // "room1_living" / "room2_bedroom"
std::optional<Room> room_from_name(std::string_view name);

enum class TimestampFormat { epoch, iso };
std::optional<TimestampFormat> timestamp_format_from_name(std::string_view name);

/// One timestamped reading of every channel in a room.
struct TelemetryFrame {
    std::int64_t timestamp = 0;  // seconds since epoch, UTC
    std::array<double, kSensorCount> sensors{};
    bool presence = false;
    std::array<double, kApplianceCount> appliance_power{};  // watts
    std::array<bool, kApplianceCount> appliance_switch{};

    double sensor(Sensor s) const { return sensors[idx(s)]; }
    double& sensor(Sensor s) { return sensors[idx(s)]; }

    friend bool operator==(const TelemetryFrame&, const TelemetryFrame&) = default;
};

struct HouseholdSeries {
    int household_id = 0;
    Room room = Room::living;
    std::vector<TelemetryFrame> frames;
    std::int64_t native_period = 0;  // seconds

    friend bool operator==(const HouseholdSeries&, const HouseholdSeries&) = default;
};

/// Active zone is [active_start, active_end) hours; everything else is inactive.
struct TimeZonePolicy {
    int active_start = 6;
    int active_end = 24;

    void validate() const;
    bool is_active(std::int64_t timestamp) const;
};

/// A 15-minute aggregate of one room.
struct BinnedRecord {
    std::int64_t bin_start = 0;
    std::array<double, kSensorCount> sensors{};               // means
    double presence = 0.0;                                    // any-on (0 or 1)
    std::array<double, kApplianceCount> power{};              // mean watts
    std::array<double, kApplianceCount> switch_fraction{};    // fraction of frames on
    std::size_t frame_count = 0;
    int occupancy_label = 0;
};

/// Column names of the canonical telemetry CSV, timestamp first.
std::vector<std::string> canonical_schema();

std::string format_timestamp(std::int64_t ts, TimestampFormat fmt);
std::int64_t parse_timestamp(std::string_view text, TimestampFormat fmt);  // throws ConfigError

/// Shortest decimal text that parses back to the same double.
std::string format_number(double v);

HouseholdSeries parse_csv(std::istream& in, const std::vector<std::string>& schema,
                          TimestampFormat fmt = TimestampFormat::epoch);
HouseholdSeries parse_csv(const std::filesystem::path& path,
                          const std::vector<std::string>& schema,
                          TimestampFormat fmt = TimestampFormat::epoch);

void write_csv(std::ostream& out, const HouseholdSeries& series,
               TimestampFormat fmt = TimestampFormat::epoch);
void write_csv(const std::filesystem::path& path, const HouseholdSeries& series,
               TimestampFormat fmt = TimestampFormat::epoch);

/// "household_<id>_<room>.csv"
std::string series_filename(int household_id, Room room);
/// Inverse of series_filename.
std::optional<std::pair<int, Room>> parse_series_filename(std::string_view filename);

std::vector<BinnedRecord> resample_15min(const HouseholdSeries& series);

/// Occupancy ground truth from presence. In the active zone a positive bin
/// keeps the label at 1 for the following hold_bins bins (same zone run only).
/// An inactive-zone run is labeled 1 throughout if presence fired anywhere in it.
std::vector<BinnedRecord> label_occupancy(std::vector<BinnedRecord> bins,
                                          const TimeZonePolicy& policy, int hold_bins = 2);

/// Hour of day [0, 24) of a timestamp, in the timeline's own clock.
int hour_of_day(std::int64_t timestamp);

}  // namespace occupilot::telemetry
