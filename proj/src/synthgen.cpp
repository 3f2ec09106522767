#include "occupilot/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "occupilot/errors.hpp"
#include "occupilot/parallel.hpp"

namespace occupilot::synthgen {

using telemetry::Appliance;
using telemetry::HouseholdSeries;
using telemetry::kApplianceCount;
using telemetry::Room;
using telemetry::Sensor;
using telemetry::TelemetryFrame;

namespace {

constexpr int kSlotsPerDay = 96;
constexpr double kAmbientCo2 = 420.0;
constexpr double kSunriseHour = 5.25;
constexpr double kSunsetHour = 19.75;

// Slot-level boundaries used by the behaviour model.
constexpr int kWakeSlot = 24;      // 06:00
constexpr int kBedtimeSlot = 88;   // 22:00
constexpr int kLastSlot = kSlotsPerDay - 1;

enum class Place { away, living, bedroom };

struct Traits {
    Archetype archetype = Archetype::worker;
    int occupants = 1;
    double pv_peak_kw = 3.0;
    double scale = 1.0;
    double p_light_left = 0.2;
    double p_tv_left = 0.1;
    double p_pc_left = 0.3;
    double p_hvac_left = 0.2;
    double p_hvac_off = 0.15;  // per slot, once left running
    bool has_pc = true;
    bool sleep_ac = true;
    double ac_propensity = 0.8;
    double living_ac_w = 1800.0;
    double bedroom_ac_w = 800.0;
    double light_w = 70.0;
    double tv_w = 120.0;
    double pc_w = 150.0;
};

/// Per-slot whereabouts of every occupant.
struct Plan {
    std::vector<std::vector<Place>> where;  // [slot][occupant]
    std::vector<bool> asleep;               // [slot]
};

Traits draw_traits(const CohortConfig& cfg, Rng& rng) {
    Traits t;
    const double u = rng.uniform();
    const auto& w = cfg.archetype_weights;
    t.archetype = u < w[0] ? Archetype::worker : (u < w[0] + w[1] ? Archetype::homebody : Archetype::shift);
    const double v = rng.uniform();
    t.occupants = v < 0.25 ? 1 : (v < 0.6 ? 2 : (v < 0.85 ? 3 : 4));
    t.pv_peak_kw = rng.uniform(cfg.pv_peak_kw_min, cfg.pv_peak_kw_max);
    t.scale = std::exp(rng.normal(0.0, 0.35));
    t.p_light_left = rng.uniform(0.2, 0.6);
    t.p_tv_left = rng.uniform(0.1, 0.4);
    t.p_pc_left = rng.uniform(0.2, 0.7);
    t.p_hvac_left = rng.uniform(0.1, 0.4);
    t.p_hvac_off = rng.uniform(0.04, 0.12);
    t.has_pc = rng.bernoulli(0.65);
    t.sleep_ac = rng.bernoulli(0.6);
    t.ac_propensity = rng.uniform(0.4, 1.0);
    t.living_ac_w = rng.uniform(1200.0, 2400.0) * t.scale;
    t.bedroom_ac_w = rng.uniform(600.0, 1000.0) * t.scale;
    t.light_w = rng.uniform(40.0, 100.0) * std::sqrt(t.scale);
    t.tv_w = rng.uniform(80.0, 160.0);
    t.pc_w = rng.uniform(90.0, 220.0);
    return t;
}

bool is_weekday(int day) { return day % 7 < 5; }

Plan plan_occupancy(const Traits& t, int days, Rng& rng) {
    Plan plan;
    const int n_slots = days * kSlotsPerDay;
    plan.where.assign(n_slots, std::vector<Place>(t.occupants, Place::bedroom));
    plan.asleep.assign(n_slots, false);

    for (int d = 0; d < days; ++d) {
        Archetype kind = t.archetype;
        if (kind == Archetype::worker && !is_weekday(d)) kind = Archetype::homebody;
        bool home = true;
        std::vector<Place> loc(t.occupants, Place::bedroom);
        for (int s = 0; s < kSlotsPerDay; ++s) {
            const int slot = d * kSlotsPerDay + s;
            if (s < kWakeSlot) {
                plan.asleep[slot] = true;
                std::fill(loc.begin(), loc.end(), Place::bedroom);
                plan.where[slot] = loc;
                continue;
            }
            // home/away transitions
            if (home) {
                double p_leave = 0.0;
                switch (kind) {
                    case Archetype::worker: p_leave = (s >= 29 && s < 36) ? 0.3 : 0.0; break;
                    case Archetype::homebody: p_leave = (s >= 36 && s < 80) ? 0.02 : 0.0; break;
                    case Archetype::shift: p_leave = (s >= 52 && s < 58) ? 0.35 : 0.0; break;
                }
                if (rng.bernoulli(p_leave)) home = false;
            } else {
                double p_return = 0.0;
                switch (kind) {
                    case Archetype::worker: p_return = (s >= 70) ? 0.25 : 0.0; break;
                    case Archetype::homebody: p_return = 0.15; break;
                    case Archetype::shift: p_return = (s >= 90) ? 0.4 : 0.0; break;
                }
                if (s >= 92 || rng.bernoulli(p_return)) {
                    home = true;
                    std::fill(loc.begin(), loc.end(), Place::living);
                }
            }
            for (auto& place : loc) {
                if (!home) {
                    place = Place::away;
                    continue;
                }
                if (place == Place::away) place = Place::living;
                if (s == kLastSlot) {
                    place = Place::bedroom;
                } else if (s >= kBedtimeSlot) {
                    if (place == Place::living && rng.bernoulli(0.3)) place = Place::bedroom;
                } else if (place == Place::bedroom) {
                    if (rng.bernoulli(s < 36 ? 0.5 : 0.35)) place = Place::living;
                } else if (rng.bernoulli(0.01)) {
                    place = Place::bedroom;
                }
            }
            plan.where[slot] = loc;
        }
    }
    return plan;
}

double daylight(double hour) {
    if (hour <= kSunriseHour || hour >= kSunsetHour) return 0.0;
    return std::sin(std::numbers::pi * (hour - kSunriseHour) / (kSunsetHour - kSunriseHour));
}

double outdoor_temperature(double hour, double day_offset) {
    return 27.5 + day_offset + 4.0 * std::sin(2.0 * std::numbers::pi * (hour - 9.0) / 24.0);
}

double quantize(double v) { return std::round(v * 10.0) / 10.0; }

constexpr std::array<double, kApplianceCount> kStandbyW = {
    2.0,  // pc
    1.0,  // tv
    0.8,  // washing machine
    0.5,  // air cleaner
    0.0,  // cooker
    1.5,  // microwave
    0.0,  // coffee pot
    0.0,  // hair dryer
    0.0,  // hvac
    0.0,  // light
};

/// Slot-level appliance state of one room.
struct RoomAppliances {
    std::array<bool, kApplianceCount> on{};
    std::array<int, kApplianceCount> event_steps_left{};  // timed appliances
};

struct RoomDynamics {
    double co2 = kAmbientCo2;
    double humidity = 58.0;
    double temperature = 27.0;
    double pm_excess = 0.0;
    double tvoc_excess = 0.0;
    double occupant_humidity = 0.0;
};

void simulate_room(const CohortConfig& cfg, const Traits& t, const Plan& plan,
                   const std::vector<double>& day_temp_offset, const std::vector<double>& day_cloud,
                   Room room, Rng& rng, HouseholdSeries& out) {
    const std::int64_t period = cfg.native_period;
    const int steps_per_slot = static_cast<int>(telemetry::kBinSeconds / period);
    const double dt = static_cast<double>(period) / 60.0;  // minutes
    const int n_slots = static_cast<int>(plan.asleep.size());
    const bool living = room == Room::living;
    const Place here = living ? Place::living : Place::bedroom;

    auto count_in_room = [&](int slot, bool& sleeping) {
        int n = 0;
        for (auto p : plan.where[slot]) n += p == here;
        sleeping = plan.asleep[slot];
        return n;
    };

    out.frames.clear();
    out.frames.reserve(static_cast<std::size_t>(n_slots) * steps_per_slot);

    RoomAppliances app;
    RoomDynamics dyn;
    dyn.temperature = outdoor_temperature(0.0, day_temp_offset[0]) - 1.0;
    bool prev_awake_occupied = false;
    bool ac_tonight = false;
    auto turn_on = [&](Appliance a, int minutes) {
        app.on[telemetry::idx(a)] = true;
        app.event_steps_left[telemetry::idx(a)] = std::max(1, static_cast<int>(std::lround(minutes / dt)));
    };

    for (int slot = 0; slot < n_slots; ++slot) {
        const int day = slot / kSlotsPerDay;
        const int s = slot % kSlotsPerDay;
        const double hour_start = s / 4.0;
        bool sleeping = false;
        const int n_here = count_in_room(slot, sleeping);
        const int n_awake = sleeping ? 0 : n_here;
        const int n_asleep = sleeping ? n_here : 0;
        const bool awake_occupied = n_awake > 0;
        const bool dark = daylight(hour_start + 0.125) < 0.25;
        const bool hot = outdoor_temperature(hour_start, day_temp_offset[day]) > 27.5;

        auto sticky = [&](Appliance a, double p_on, double p_off) {
            bool& st = app.on[telemetry::idx(a)];
            st = st ? !rng.bernoulli(p_off) : rng.bernoulli(p_on);
        };

        if (s == 0) ac_tonight = t.sleep_ac && rng.bernoulli(0.7);

        if (awake_occupied) {
            app.on[telemetry::idx(Appliance::light)] = dark;
            if (living) {
                const bool evening = s >= 72 && s < 92;
                const bool morning = s >= 26 && s < 32;
                sticky(Appliance::tv, evening ? 0.35 : (morning ? 0.15 : 0.05), evening ? 0.08 : 0.25);
                if (t.has_pc) sticky(Appliance::pc, 0.12, 0.1);
                const bool want_ac = hot && s >= 44 && rng.uniform() < t.ac_propensity;
                if (want_ac) app.on[telemetry::idx(Appliance::hvac)] = true;
                else if (!hot && rng.bernoulli(0.1)) app.on[telemetry::idx(Appliance::hvac)] = false;
                sticky(Appliance::air_cleaner, 0.2, 0.1);
                // kitchen and laundry events start only while someone is in the room
                if ((s == 26 || s == 27) && rng.bernoulli(0.35)) turn_on(Appliance::cooker, 30 + static_cast<int>(rng.index(20)));
                if (s >= 72 && s < 80 && rng.bernoulli(0.12)) turn_on(Appliance::cooker, 35 + static_cast<int>(rng.index(20)));
                if (rng.bernoulli(0.03)) turn_on(Appliance::microwave, 3 + static_cast<int>(rng.index(4)));
                if (s >= 25 && s < 34 && rng.bernoulli(0.08)) turn_on(Appliance::coffee_pot, 8 + static_cast<int>(rng.index(6)));
                if (s >= 36 && s < 80 && rng.bernoulli(0.012)) turn_on(Appliance::washing_machine, 50 + static_cast<int>(rng.index(30)));
            } else {
                app.on[telemetry::idx(Appliance::hvac)] = hot && s >= 80 && ac_tonight;
                sticky(Appliance::air_cleaner, 0.1, 0.2);
                if (s >= 24 && s < 30 && rng.bernoulli(0.2)) turn_on(Appliance::hair_dryer, 5 + static_cast<int>(rng.index(8)));
            }
        } else if (prev_awake_occupied) {
            // room just emptied: some things get left running
            auto maybe_left = [&](Appliance a, double p) {
                bool& st = app.on[telemetry::idx(a)];
                if (st) st = rng.bernoulli(p);
            };
            maybe_left(Appliance::light, t.p_light_left);
            maybe_left(Appliance::tv, t.p_tv_left);
            maybe_left(Appliance::pc, t.p_pc_left);
            // cooling the house for the night is the usual reason it stays on
            maybe_left(Appliance::hvac, s >= kBedtimeSlot ? std::min(1.0, 1.5 * t.p_hvac_left) : t.p_hvac_left);
            maybe_left(Appliance::air_cleaner, 0.5);
        } else if (n_here == 0) {
            // left-on loads in an empty room: timers, someone remembering
            auto fade = [&](Appliance a, double p_off) {
                bool& st = app.on[telemetry::idx(a)];
                if (st && rng.bernoulli(p_off)) st = false;
            };
            fade(Appliance::hvac, t.p_hvac_off);
            fade(Appliance::tv, 0.03);
            fade(Appliance::light, 0.02);
            fade(Appliance::pc, 0.03);
        }
        if (n_asleep > 0) {
            app.on[telemetry::idx(Appliance::light)] = false;
            app.on[telemetry::idx(Appliance::tv)] = false;
            app.on[telemetry::idx(Appliance::hvac)] = ac_tonight && s < 16;
        }
        if (!living) {
            app.on[telemetry::idx(Appliance::tv)] = false;
            app.on[telemetry::idx(Appliance::pc)] = false;
        }
        prev_awake_occupied = awake_occupied;

        const double p_fire_step =
            1.0 - std::pow(0.7, n_awake * dt) * std::pow(0.98, n_asleep * dt);

        for (int k = 0; k < steps_per_slot; ++k) {
            const std::int64_t ts = cfg.start_epoch + static_cast<std::int64_t>(slot) * telemetry::kBinSeconds +
                                    k * period;
            const double hour = hour_start + k * dt / 60.0;
            TelemetryFrame f;
            f.timestamp = ts;

            // appliances
            double cooking = 0.0;
            for (std::size_t a = 0; a < kApplianceCount; ++a) {
                const auto which = static_cast<Appliance>(a);
                const bool timed = which == Appliance::cooker || which == Appliance::microwave ||
                                   which == Appliance::coffee_pot || which == Appliance::hair_dryer ||
                                   which == Appliance::washing_machine;
                if (timed && app.on[a]) {
                    if (app.event_steps_left[a] <= 0) app.on[a] = false;
                    else --app.event_steps_left[a];
                }
                f.appliance_switch[a] = app.on[a];
                double w = 0.0;
                if (app.on[a]) {
                    switch (which) {
                        case Appliance::pc: w = t.pc_w * rng.uniform(0.8, 1.2); break;
                        case Appliance::tv: w = t.tv_w * rng.uniform(0.95, 1.05); break;
                        case Appliance::washing_machine: w = rng.uniform(350.0, 650.0); break;
                        case Appliance::air_cleaner: w = rng.uniform(30.0, 45.0); break;
                        case Appliance::cooker: w = rng.uniform(550.0, 700.0); cooking += 1.0; break;
                        case Appliance::microwave: w = rng.uniform(950.0, 1100.0); cooking += 0.6; break;
                        case Appliance::coffee_pot: w = rng.uniform(750.0, 850.0); break;
                        case Appliance::hair_dryer: w = rng.uniform(1100.0, 1300.0); break;
                        case Appliance::hvac: {
                            const double rated = living ? t.living_ac_w : t.bedroom_ac_w;
                            const double load = std::clamp(
                                (outdoor_temperature(hour, day_temp_offset[day]) - 22.0) / 12.0, 0.2, 1.0);
                            w = rated * std::clamp(0.35 + 0.6 * load + rng.normal(0.0, 0.05), 0.2, 1.0);
                            break;
                        }
                        case Appliance::light: w = t.light_w * rng.uniform(0.97, 1.03); break;
                    }
                } else {
                    w = kStandbyW[a] > 0.0 ? kStandbyW[a] * rng.uniform(0.6, 1.0) : 0.0;
                }
                f.appliance_power[a] = quantize(w);
            }
            const bool ac_on = app.on[telemetry::idx(Appliance::hvac)];
            const bool light_on = app.on[telemetry::idx(Appliance::light)];

            // indoor air: first-order relaxation with occupant and cooking sources
            const double people_src = 29.0 * n_awake + 21.0 * n_asleep;
            dyn.co2 += dt * ((kAmbientCo2 - dyn.co2) / 12.0 + people_src);
            dyn.pm_excess += dt * (-dyn.pm_excess / 20.0 + 3.0 * cooking + 0.15 * n_awake);
            dyn.tvoc_excess += dt * (-dyn.tvoc_excess / 30.0 + 2.2 * n_awake + 1.2 * n_asleep + 6.0 * cooking);
            dyn.occupant_humidity += dt * (-dyn.occupant_humidity / 40.0 + 0.07 * n_here + 0.15 * cooking);
            const double t_out = outdoor_temperature(hour, day_temp_offset[day]);
            const double t_target = ac_on ? 24.0 : t_out + 0.5;
            dyn.temperature += dt * ((t_target - dyn.temperature) / (ac_on ? 25.0 : 150.0) + 0.004 * n_here);
            const double rh_base = 62.0 - 6.0 * std::sin(2.0 * std::numbers::pi * (hour - 9.0) / 24.0);
            dyn.humidity += dt * ((rh_base - (ac_on ? 10.0 : 0.0) - dyn.humidity) / 45.0);

            f.sensor(Sensor::co2) = quantize(std::max(350.0, dyn.co2 + rng.normal(0.0, 2.0)));
            f.sensor(Sensor::humidity) =
                quantize(std::clamp(dyn.humidity + dyn.occupant_humidity + rng.normal(0.0, 0.3), 0.0, 100.0));
            const double sun = daylight(hour) * (1.0 - day_cloud[day] * 0.6);
            const double lux = (living ? 320.0 : 160.0) * sun + (light_on ? (living ? 280.0 : 200.0) : 0.0);
            f.sensor(Sensor::illuminance) = quantize(std::max(0.0, lux * (1.0 + rng.normal(0.0, 0.02))));
            const double pm10 = 14.0 + dyn.pm_excess + rng.normal(0.0, 0.6);
            f.sensor(Sensor::pm10) = quantize(std::max(0.0, pm10));
            f.sensor(Sensor::pm25) = quantize(std::max(0.0, 7.0 + 0.6 * dyn.pm_excess + rng.normal(0.0, 0.4)));
            f.sensor(Sensor::temperature) = quantize(dyn.temperature + rng.normal(0.0, 0.05));
            f.sensor(Sensor::tvoc) = quantize(std::max(0.0, 110.0 + dyn.tvoc_excess + rng.normal(0.0, 2.0)));
            f.presence = rng.bernoulli(p_fire_step);
            out.frames.push_back(f);
        }
    }
    out.native_period = period;
}

}  // namespace

void CohortConfig::validate() const {
    if (n_households < 1) throw ConfigError("n_households must be >= 1");
    if (days < 1) throw ConfigError("days must be >= 1");
    if (native_period <= 0 || telemetry::kBinSeconds % native_period != 0)
        throw ConfigError("native_period must divide 900 s");
    double sum = 0.0;
    for (double w : archetype_weights) {
        if (w < 0.0) throw ConfigError("archetype weights must be non-negative");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("archetype weights must sum to 1");
    if (!(pv_peak_kw_min >= 0.0 && pv_peak_kw_min <= pv_peak_kw_max))
        throw ConfigError("pv peak range must satisfy 0 <= min <= max");
    if (!(cloud_noise >= 0.0 && cloud_noise <= 1.0)) throw ConfigError("cloud_noise must lie in [0,1]");
}

std::vector<double> generate_pv(double peak_kw, double cloud_noise, Rng& rng) {
    std::vector<double> kw(kSlotsPerDay, 0.0);
    const double cloudiness = rng.uniform();
    double cover = rng.uniform();
    for (int b = 0; b < kSlotsPerDay; ++b) {
        // slowly varying cover, one AR(1) step per bin
        cover = std::clamp(0.85 * cover + 0.15 * rng.uniform(), 0.0, 1.0);
        const double hour = b / 4.0;
        if (hour <= kSunriseHour || hour >= kSunsetHour) continue;
        const double phase = (hour - kSunriseHour) / (kSunsetHour - kSunriseHour);
        const double bell = std::pow(std::sin(std::numbers::pi * phase), 1.5);
        const double factor = 1.0 - cloud_noise * (0.5 * cloudiness + 0.5 * cover);
        kw[b] = std::max(0.0, peak_kw * bell * factor);
    }
    return kw;
}

Cohort generate_cohort(const CohortConfig& config) {
    config.validate();
    const auto n = static_cast<std::size_t>(config.n_households);
    std::vector<telemetry::HouseholdSeries> series(2 * n);
    std::vector<PvSeries> pv(n);
    std::vector<HouseholdProfile> profiles(n);

    parallel_for(n, [&](std::size_t h) {
        Rng rng(derive_seed(config.seed, h));
        const Traits traits = draw_traits(config, rng);
        std::vector<double> temp_offset(config.days), cloud(config.days);
        for (int d = 0; d < config.days; ++d) {
            temp_offset[d] = rng.normal(0.0, 1.0);
            cloud[d] = rng.uniform() * config.cloud_noise;
        }
        const Plan plan = plan_occupancy(traits, config.days, rng);

        Rng living_rng(derive_seed(rng.next(), 1));
        Rng bedroom_rng(derive_seed(rng.next(), 2));
        Rng pv_rng(derive_seed(rng.next(), 3));
        auto& living = series[2 * h];
        auto& bedroom = series[2 * h + 1];
        living.household_id = bedroom.household_id = static_cast<int>(h);
        living.room = Room::living;
        bedroom.room = Room::bedroom;
        simulate_room(config, traits, plan, temp_offset, cloud, Room::living, living_rng, living);
        simulate_room(config, traits, plan, temp_offset, cloud, Room::bedroom, bedroom_rng, bedroom);

        auto& p = pv[h];
        p.household_id = static_cast<int>(h);
        for (int d = 0; d < config.days; ++d) {
            const auto day_kw = generate_pv(traits.pv_peak_kw, config.cloud_noise, pv_rng);
            for (int b = 0; b < kSlotsPerDay; ++b) {
                p.bin_start.push_back(config.start_epoch + (static_cast<std::int64_t>(d) * kSlotsPerDay + b) *
                                                               telemetry::kBinSeconds);
                p.kw.push_back(quantize(day_kw[b] * 1000.0) / 1000.0);
            }
        }
        profiles[h] = {static_cast<int>(h), traits.archetype, traits.occupants, traits.pv_peak_kw};
    });
    return {std::move(series), std::move(pv), std::move(profiles)};
}

}  // namespace occupilot::synthgen
