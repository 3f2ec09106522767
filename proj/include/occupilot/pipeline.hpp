#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "occupilot/autoencoder.hpp"
#include "occupilot/evalmetrics.hpp"
#include "occupilot/powersim.hpp"
#include "occupilot/preprocess.hpp"
#include "occupilot/svm.hpp"
#include "occupilot/synthgen.hpp"

namespace occupilot::pipeline {

/// Resample and label every series.
std::vector<preprocess::LabeledRoom> label_rooms(std::span<const telemetry::HouseholdSeries> series,
                                                 const telemetry::TimeZonePolicy& policy, int hold_bins = 2);

/// Seeded class-stratified subset of `rows` of at most `cap` rows, sorted.
/// Returns `rows` unchanged when cap is 0 or not exceeded.
std::vector<std::size_t> stratified_subsample(std::span<const std::size_t> rows, std::span<const int> labels,
                                              std::size_t cap, std::uint64_t seed);

struct SvmSettings {
    svm::SvcParams params;
    bool auto_gamma = true;  // gamma from the training subset
    std::size_t max_train_rows = 3000;
};

/// Fitted on one class of the training rows, threshold swept on validation rows.
struct AeSettings {
    autoencoder::AeConfig config;  // layer_sizes empty: defaults for the feature width
    std::size_t max_train_rows = 6000;
    std::size_t max_calibration_rows = 6000;
};

/// One-class on absent rows, relu, mini-batch 64, rate 0.003, 500 epochs.
AeSettings default_ae_settings(std::uint64_t seed);

/// Trains on the feature matrix's training rows (subsampled to the caps).
svm::SvmModel fit_svm(const preprocess::FeatureMatrix& fm, SvmSettings settings);
autoencoder::AutoencoderModel fit_ae(const preprocess::FeatureMatrix& fm, AeSettings settings);

/// Algorithm name, Location rows Room 1 / Room 2 / Room 1 & 2 over `rows`.
std::vector<evalmetrics::ReportRow> evaluate_rows(std::string algorithm, std::span<const int> predictions,
                                                  const preprocess::FeatureMatrix& fm,
                                                  std::span<const std::size_t> rows);

/// Attach per-row predictions (aligned with the feature matrix) to each room timeline.
std::vector<powersim::HouseholdResult> simulate_cohort(std::span<const preprocess::LabeledRoom> rooms,
                                                       std::span<const preprocess::RowMeta> meta,
                                                       std::span<const int> predictions,
                                                       std::span<const synthgen::PvSeries> pv,
                                                       const powersim::ShutoffPolicy& policy);

/// Ground-truth labels from the labeled rooms, in feature-matrix row order.
std::vector<int> ground_truth(std::span<const preprocess::LabeledRoom> rooms);

}  // namespace occupilot::pipeline
