#include "occupilot/telemetry.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "occupilot/errors.hpp"
#include "occupilot/io.hpp"

namespace occupilot::telemetry {

namespace {

// Howard Hinnant's civil-calendar conversions.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const auto yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const auto doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp < 10 ? mp + 3 : mp - 9;
    y += m <= 2;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

template <typename T>
bool parse_int(std::string_view s, T& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

bool parse_double(std::string_view s, double& out) {
    if (s.empty()) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

enum class Field { sensor, presence, power, switch_state };

struct ColumnBinding {
    Field field;
    std::size_t index;
};

ColumnBinding bind_column(std::string_view name) {
    for (std::size_t i = 0; i < kSensorCount; ++i)
        if (name == kSensorNames[i]) return {Field::sensor, i};
    if (name == "presence") return {Field::presence, 0};
    for (std::size_t i = 0; i < kApplianceCount; ++i) {
        const std::string base(kApplianceNames[i]);
        if (name == base + "_power") return {Field::power, i};
        if (name == base + "_switch") return {Field::switch_state, i};
    }
    throw ConfigError("unknown telemetry column '" + std::string(name) + "'");
}

}  // namespace

std::optional<Appliance> appliance_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kApplianceCount; ++i)
        if (kApplianceNames[i] == name) return static_cast<Appliance>(i);
    return std::nullopt;
}

std::string_view room_name(Room room) {
    return room == Room::living ? "room1_living" : "room2_bedroom";
}

std::optional<Room> room_from_name(std::string_view name) {
    if (name == "room1_living") return Room::living;
    if (name == "room2_bedroom") return Room::bedroom;
    return std::nullopt;
}

std::optional<TimestampFormat> timestamp_format_from_name(std::string_view name) {
    if (name == "epoch") return TimestampFormat::epoch;
    if (name == "iso") return TimestampFormat::iso;
    return std::nullopt;
}

void TimeZonePolicy::validate() const {
    if (!(0 <= active_start && active_start < active_end && active_end <= 24))
        throw ConfigError("time-zone policy requires 0 <= active_start < active_end <= 24");
}

int hour_of_day(std::int64_t timestamp) {
    const std::int64_t sec = timestamp - floor_div(timestamp, kDaySeconds) * kDaySeconds;
    return static_cast<int>(sec / 3600);
}

bool TimeZonePolicy::is_active(std::int64_t timestamp) const {
    const int h = hour_of_day(timestamp);
    return h >= active_start && h < active_end;
}

std::vector<std::string> canonical_schema() {
    std::vector<std::string> cols{"timestamp"};
    for (auto s : kSensorNames) cols.emplace_back(s);
    cols.emplace_back("presence");
    for (auto a : kApplianceNames) {
        cols.push_back(std::string(a) + "_power");
        cols.push_back(std::string(a) + "_switch");
    }
    return cols;
}

std::string format_timestamp(std::int64_t ts, TimestampFormat fmt) {
    if (fmt == TimestampFormat::epoch) return std::to_string(ts);
    const std::int64_t days = floor_div(ts, kDaySeconds);
    const std::int64_t sec = ts - days * kDaySeconds;
    std::int64_t y;
    unsigned m, d;
    civil_from_days(days, y, m, d);
    char buf[96];
    std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02lld:%02lld:%02lldZ",
                  static_cast<long long>(y), m, d, static_cast<long long>(sec / 3600),
                  static_cast<long long>((sec / 60) % 60), static_cast<long long>(sec % 60));
    return buf;
}

std::int64_t parse_timestamp(std::string_view text, TimestampFormat fmt) {
    if (fmt == TimestampFormat::epoch) {
        std::int64_t v;
        if (!parse_int(text, v)) throw ConfigError("bad epoch timestamp '" + std::string(text) + "'");
        return v;
    }
    // YYYY-MM-DDTHH:MM:SS with optional trailing Z
    if (!text.empty() && text.back() == 'Z') text.remove_suffix(1);
    int y, mo, d, h, mi, s;
    if (text.size() != 19 || text[4] != '-' || text[7] != '-' || text[10] != 'T' ||
        text[13] != ':' || text[16] != ':' || !parse_int(text.substr(0, 4), y) ||
        !parse_int(text.substr(5, 2), mo) || !parse_int(text.substr(8, 2), d) ||
        !parse_int(text.substr(11, 2), h) || !parse_int(text.substr(14, 2), mi) ||
        !parse_int(text.substr(17, 2), s) || mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 ||
        mi > 59 || s > 60)
        throw ConfigError("bad ISO-8601 timestamp '" + std::string(text) + "'");
    return days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d)) * kDaySeconds +
           h * 3600 + mi * 60 + s;
}

std::string format_number(double v) {
    if (v == 0.0) v = 0.0;  // drop negative zero
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, ptr};
}

HouseholdSeries parse_csv(std::istream& in, const std::vector<std::string>& schema,
                          TimestampFormat fmt) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError::malformed_row(0, "missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    std::vector<std::string> header;
    for (auto f : split(line)) header.emplace_back(f);

    for (const auto& name : schema)
        if (std::find(header.begin(), header.end(), name) == header.end())
            throw ParseError::missing_column(name);
    for (const auto& name : canonical_schema())
        if (std::find(schema.begin(), schema.end(), name) == schema.end())
            throw ParseError::missing_column(name);
    if (header != schema) throw ParseError::malformed_row(0, "header does not match schema order");
    if (schema.front() != "timestamp") throw ParseError::missing_column("timestamp");

    std::vector<ColumnBinding> bindings;
    bindings.reserve(schema.size() - 1);
    for (std::size_t c = 1; c < schema.size(); ++c) bindings.push_back(bind_column(schema[c]));

    HouseholdSeries series;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ++row;
        const auto fields = split(line);
        if (fields.size() != schema.size())
            throw ParseError::malformed_row(row, "expected " + std::to_string(schema.size()) +
                                                     " fields, got " + std::to_string(fields.size()));
        TelemetryFrame frame;
        try {
            frame.timestamp = parse_timestamp(fields[0], fmt);
        } catch (const ConfigError& e) {
            throw ParseError::malformed_row(row, e.what());
        }
        for (std::size_t c = 1; c < fields.size(); ++c) {
            double v;
            if (!parse_double(fields[c], v))
                throw ParseError::malformed_row(row, "non-numeric value in column '" + schema[c] + "'");
            const auto& b = bindings[c - 1];
            switch (b.field) {
                case Field::sensor: frame.sensors[b.index] = v; break;
                case Field::power: frame.appliance_power[b.index] = v; break;
                case Field::presence:
                case Field::switch_state:
                    if (v != 0.0 && v != 1.0)
                        throw ParseError::malformed_row(row, "binary column '" + schema[c] + "' must be 0 or 1");
                    if (b.field == Field::presence)
                        frame.presence = v == 1.0;
                    else
                        frame.appliance_switch[b.index] = v == 1.0;
                    break;
            }
        }
        if (!series.frames.empty() && frame.timestamp <= series.frames.back().timestamp)
            throw ParseError::non_monotonic(row);
        series.frames.push_back(frame);
    }
    if (series.frames.size() >= 2)
        series.native_period = series.frames[1].timestamp - series.frames[0].timestamp;
    return series;
}

HouseholdSeries parse_csv(const std::filesystem::path& path, const std::vector<std::string>& schema,
                          TimestampFormat fmt) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    auto series = parse_csv(in, schema, fmt);
    if (auto ids = parse_series_filename(path.filename().string())) {
        series.household_id = ids->first;
        series.room = ids->second;
    }
    return series;
}

void write_csv(std::ostream& out, const HouseholdSeries& series, TimestampFormat fmt) {
    const auto schema = canonical_schema();
    for (std::size_t c = 0; c < schema.size(); ++c) out << (c ? "," : "") << schema[c];
    out << '\n';
    std::string line;
    for (const auto& f : series.frames) {
        line = format_timestamp(f.timestamp, fmt);
        for (double s : f.sensors) {
            line += ',';
            line += format_number(s);
        }
        line += f.presence ? ",1" : ",0";
        for (std::size_t a = 0; a < kApplianceCount; ++a) {
            line += ',';
            line += format_number(f.appliance_power[a]);
            line += f.appliance_switch[a] ? ",1" : ",0";
        }
        line += '\n';
        out << line;
    }
}

void write_csv(const std::filesystem::path& path, const HouseholdSeries& series, TimestampFormat fmt) {
    std::ostringstream out;
    write_csv(out, series, fmt);
    io::write_atomic(path, out.str());
}

std::string series_filename(int household_id, Room room) {
    return "household_" + std::to_string(household_id) + "_" + std::string(room_name(room)) + ".csv";
}

std::optional<std::pair<int, Room>> parse_series_filename(std::string_view filename) {
    constexpr std::string_view prefix = "household_";
    constexpr std::string_view suffix = ".csv";
    if (!filename.starts_with(prefix) || !filename.ends_with(suffix)) return std::nullopt;
    filename.remove_prefix(prefix.size());
    filename.remove_suffix(suffix.size());
    const auto sep = filename.find('_');
    if (sep == std::string_view::npos) return std::nullopt;
    int id;
    if (!parse_int(filename.substr(0, sep), id)) return std::nullopt;
    auto room = room_from_name(filename.substr(sep + 1));
    if (!room) return std::nullopt;
    return std::pair{id, *room};
}

std::vector<BinnedRecord> resample_15min(const HouseholdSeries& series) {
    if (series.frames.empty()) return {};
    if (series.native_period <= 0 || kBinSeconds % series.native_period != 0)
        throw PeriodMismatch("native period " + std::to_string(series.native_period) +
                             " s does not divide 900 s");

    std::vector<BinnedRecord> bins;
    auto flush = [&](BinnedRecord& b) {
        const auto n = static_cast<double>(b.frame_count);
        for (auto& s : b.sensors) s /= n;
        for (auto& p : b.power) p /= n;
        for (auto& w : b.switch_fraction) w /= n;
        bins.push_back(b);
    };

    BinnedRecord cur;
    bool open = false;
    for (const auto& f : series.frames) {
        const std::int64_t start = floor_div(f.timestamp, kBinSeconds) * kBinSeconds;
        if (!open || start != cur.bin_start) {
            if (open) flush(cur);
            cur = BinnedRecord{};
            cur.bin_start = start;
            open = true;
        }
        for (std::size_t i = 0; i < kSensorCount; ++i) cur.sensors[i] += f.sensors[i];
        for (std::size_t a = 0; a < kApplianceCount; ++a) {
            cur.power[a] += f.appliance_power[a];
            cur.switch_fraction[a] += f.appliance_switch[a] ? 1.0 : 0.0;
        }
        if (f.presence) cur.presence = 1.0;
        ++cur.frame_count;
    }
    if (open) flush(cur);
    return bins;
}

std::vector<BinnedRecord> label_occupancy(std::vector<BinnedRecord> bins, const TimeZonePolicy& policy,
                                          int hold_bins) {
    policy.validate();
    if (hold_bins < 0) throw ConfigError("hold_bins must be >= 0");
    std::sort(bins.begin(), bins.end(),
              [](const BinnedRecord& a, const BinnedRecord& b) { return a.bin_start < b.bin_start; });

    // Late-evening inactive hours belong to the following night.
    const std::int64_t night_shift = static_cast<std::int64_t>(24 - policy.active_end) * 3600;
    auto night_of = [&](std::int64_t t) { return floor_div(t + night_shift, kDaySeconds); };
    auto day_of = [](std::int64_t t) { return floor_div(t, kDaySeconds); };

    std::int64_t hold_day = 0;
    std::optional<std::int64_t> hold_until;
    for (auto& b : bins) {
        if (!policy.is_active(b.bin_start)) continue;
        const bool fired = b.presence > 0.0;
        if (fired) {
            b.occupancy_label = 1;
            hold_day = day_of(b.bin_start);
            hold_until = b.bin_start + static_cast<std::int64_t>(hold_bins) * kBinSeconds;
        } else {
            b.occupancy_label =
                hold_until && hold_day == day_of(b.bin_start) && b.bin_start <= *hold_until ? 1 : 0;
        }
    }

    std::map<std::int64_t, bool> night_fired;
    for (const auto& b : bins)
        if (!policy.is_active(b.bin_start)) night_fired[night_of(b.bin_start)] |= b.presence > 0.0;
    for (auto& b : bins)
        if (!policy.is_active(b.bin_start)) b.occupancy_label = night_fired[night_of(b.bin_start)] ? 1 : 0;
    return bins;
}

}  // namespace occupilot::telemetry
