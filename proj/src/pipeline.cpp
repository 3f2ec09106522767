#include "occupilot/pipeline.hpp"

#include <algorithm>
#include <map>
#include <tuple>

#include "occupilot/errors.hpp"
#include "occupilot/parallel.hpp"
#include "occupilot/rng.hpp"

namespace occupilot::pipeline {

std::vector<preprocess::LabeledRoom> label_rooms(std::span<const telemetry::HouseholdSeries> series,
                                                 const telemetry::TimeZonePolicy& policy, int hold_bins) {
    std::vector<preprocess::LabeledRoom> out(series.size());
    parallel_for(series.size(), [&](std::size_t i) {
        out[i].household_id = series[i].household_id;
        out[i].room = series[i].room;
        out[i].bins = telemetry::label_occupancy(telemetry::resample_15min(series[i]), policy, hold_bins);
    });
    return out;
}

std::vector<std::size_t> stratified_subsample(std::span<const std::size_t> rows, std::span<const int> labels,
                                              std::size_t cap, std::uint64_t seed) {
    std::vector<std::size_t> all(rows.begin(), rows.end());
    if (cap == 0 || all.size() <= cap) return all;
    std::map<int, std::vector<std::size_t>> by_class;
    for (auto r : all) by_class[labels[r]].push_back(r);
    Rng rng(derive_seed(seed, 0x5B5));
    std::vector<std::size_t> out;
    const double frac = static_cast<double>(cap) / static_cast<double>(all.size());
    for (auto& [cls, members] : by_class) {
        rng.shuffle(members.begin(), members.end());
        auto take = static_cast<std::size_t>(std::llround(frac * static_cast<double>(members.size())));
        take = std::clamp<std::size_t>(take, 1, members.size());
        out.insert(out.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(take));
    }
    std::sort(out.begin(), out.end());
    return out;
}

AeSettings default_ae_settings(std::uint64_t seed) {
    AeSettings s;
    s.config.seed = seed;
    s.config.activation = autoencoder::Activation::relu;
    s.config.learning_rate = 0.003;
    s.config.batch_size = 64;
    s.config.epochs = 500;
    s.config.train_class = 0;
    return s;
}

svm::SvmModel fit_svm(const preprocess::FeatureMatrix& fm, SvmSettings settings) {
    const auto rows = stratified_subsample(fm.split.train_rows, fm.labels, settings.max_train_rows,
                                           settings.params.seed);
    const Matrix x = fm.values.select_rows(rows);
    std::vector<int> y;
    for (auto r : rows) y.push_back(fm.labels[r]);
    if (settings.auto_gamma && settings.params.kernel.kind == svm::KernelKind::rbf)
        settings.params.kernel.gamma = svm::default_gamma(x);
    return svm::train_svc(x, y, settings.params);
}

autoencoder::AutoencoderModel fit_ae(const preprocess::FeatureMatrix& fm, AeSettings settings) {
    auto& cfg = settings.config;
    if (cfg.layer_sizes.empty()) {
        const auto base = autoencoder::AeConfig::defaults(fm.values.cols());
        cfg.layer_sizes = base.layer_sizes;
    }
    std::vector<std::size_t> own_class;
    for (auto r : fm.split.train_rows)
        if (fm.labels[r] == cfg.train_class) own_class.push_back(r);
    if (own_class.empty()) throw SingleClass();
    std::vector<int> same(fm.labels.size(), 0);
    const auto fit_rows = stratified_subsample(own_class, same, settings.max_train_rows, derive_seed(cfg.seed, 1));
    auto model = autoencoder::train_ae(fm.values.select_rows(fit_rows), cfg);

    const auto cal_rows = stratified_subsample(fm.split.valid_rows, fm.labels, settings.max_calibration_rows,
                                               derive_seed(cfg.seed, 2));
    std::vector<int> cal_labels;
    for (auto r : cal_rows) cal_labels.push_back(fm.labels[r]);
    autoencoder::calibrate_threshold(model, fm.values.select_rows(cal_rows), cal_labels);
    return model;
}

std::vector<evalmetrics::ReportRow> evaluate_rows(std::string algorithm, std::span<const int> predictions,
                                                  const preprocess::FeatureMatrix& fm,
                                                  std::span<const std::size_t> rows) {
    if (predictions.size() != fm.labels.size())
        throw LengthMismatch("predictions cover " + std::to_string(predictions.size()) + " rows, features " +
                             std::to_string(fm.labels.size()));
    std::vector<evalmetrics::ReportRow> out;
    auto subset = [&](auto keep, const char* location) {
        std::vector<int> p, y;
        for (auto r : rows)
            if (keep(fm.meta[r])) {
                p.push_back(predictions[r]);
                y.push_back(fm.labels[r]);
            }
        if (p.empty()) return;
        out.push_back(evalmetrics::make_row(algorithm, location, evalmetrics::confusion(p, y)));
    };
    subset([](const auto& m) { return m.room == telemetry::Room::living; }, "Room 1");
    subset([](const auto& m) { return m.room == telemetry::Room::bedroom; }, "Room 2");
    subset([](const auto&) { return true; }, "Room 1 & 2");
    return out;
}

std::vector<powersim::HouseholdResult> simulate_cohort(std::span<const preprocess::LabeledRoom> rooms,
                                                       std::span<const preprocess::RowMeta> meta,
                                                       std::span<const int> predictions,
                                                       std::span<const synthgen::PvSeries> pv,
                                                       const powersim::ShutoffPolicy& policy) {
    if (meta.size() != predictions.size()) throw LengthMismatch("predictions and row metadata differ in length");
    std::map<std::tuple<int, int, std::int64_t>, int> pred_at;
    for (std::size_t i = 0; i < meta.size(); ++i)
        pred_at[{meta[i].household_id, static_cast<int>(meta[i].room), meta[i].bin_start}] = predictions[i];

    std::map<int, std::vector<powersim::RoomTimeline>> by_household;
    for (const auto& room : rooms) {
        powersim::RoomTimeline t;
        t.room = room.room;
        t.bins = room.bins;
        for (const auto& b : room.bins) {
            auto it = pred_at.find({room.household_id, static_cast<int>(room.room), b.bin_start});
            if (it == pred_at.end())
                throw TimelineMismatch("no prediction for household " + std::to_string(room.household_id) + " bin " +
                                       std::to_string(b.bin_start));
            t.predicted.push_back(it->second);
        }
        by_household[room.household_id].push_back(std::move(t));
    }
    std::map<int, const synthgen::PvSeries*> pv_of;
    for (const auto& p : pv) pv_of[p.household_id] = &p;

    std::vector<int> ids;
    for (const auto& [id, _] : by_household) ids.push_back(id);
    std::vector<powersim::HouseholdResult> out(ids.size());
    const synthgen::PvSeries none;
    parallel_for(ids.size(), [&](std::size_t i) {
        auto it = pv_of.find(ids[i]);
        out[i] = powersim::simulate_household(ids[i], by_household.at(ids[i]), it == pv_of.end() ? none : *it->second,
                                              policy);
    });
    return out;
}

std::vector<int> ground_truth(std::span<const preprocess::LabeledRoom> rooms) {
    std::vector<int> out;
    for (const auto& room : rooms)
        for (const auto& b : room.bins) out.push_back(b.occupancy_label);
    return out;
}

}  // namespace occupilot::pipeline
