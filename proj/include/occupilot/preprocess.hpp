#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "occupilot/matrix.hpp"
#include "occupilot/telemetry.hpp"

namespace occupilot::preprocess {

struct RowMeta {
    int household_id = 0;
    telemetry::Room room = telemetry::Room::living;
    std::int64_t bin_start = 0;

    friend bool operator==(const RowMeta&, const RowMeta&) = default;
};

/// Labeled bins of one room.
struct LabeledRoom {
    int household_id = 0;
    telemetry::Room room = telemetry::Room::living;
    std::vector<telemetry::BinnedRecord> bins;
};

/// Unscaled per-bin feature rows: 8 sensor channels (presence included),
/// per-appliance switch fractions, per-appliance mean power.
struct RawDataset {
    Matrix values;
    std::vector<int> labels;
    std::vector<RowMeta> meta;
    std::vector<std::string> channel_names;
};

std::vector<std::string> feature_names();
RawDataset build_dataset(std::span<const LabeledRoom> rooms);

/// Per-column standardization fitted on training rows.
struct Scaler {
    std::size_t raw_dim = 0;
    std::vector<std::size_t> columns;  // retained raw columns
    std::vector<double> mean;
    std::vector<double> stddev;        // sample standard deviation, > 0
    std::vector<std::string> dropped;  // zero-variance columns
    std::vector<std::size_t> dropped_columns;
    std::vector<double> dropped_values;  // training constant of each dropped column

    std::size_t dim() const { return columns.size(); }
    Matrix transform(const Matrix& raw) const;
    std::vector<double> transform_row(std::span<const double> raw) const;
    /// Back to raw units; dropped columns come back as their training constant.
    Matrix inverse_transform(const Matrix& scaled) const;
};

/// Throws ConfigError with fewer than two training rows.
Scaler fit_scaler(const Matrix& raw, std::span<const std::size_t> train_rows,
                  std::span<const std::string> names);

struct SplitIndices {
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> valid_rows;
    std::uint64_t seed = 0;
};

/// Seeded stratified 80/20 split. Throws SingleClass, ConfigError (n < 10).
SplitIndices split_80_20(std::size_t n_rows, std::uint64_t seed, std::span<const int> labels);

enum class SplitScope { pooled, per_household };

/// Pooled split, or one stratified split per household merged together.
SplitIndices split_dataset(const RawDataset& data, std::uint64_t seed, SplitScope scope);

struct FeatureMatrix {
    Matrix values;  // standardized, retained columns only
    std::vector<int> labels;
    std::vector<RowMeta> meta;
    std::vector<std::string> channel_names;  // retained columns
    Scaler scaler;
    SplitIndices split;
    SplitScope scope = SplitScope::pooled;
};

FeatureMatrix make_feature_matrix(const RawDataset& data, std::uint64_t seed, SplitScope scope);

/// features.csv plus features.json sidecar (scaler, names, seed, split).
void write_feature_matrix(const std::filesystem::path& dir, const FeatureMatrix& fm);
FeatureMatrix read_feature_matrix(const std::filesystem::path& dir);

std::string_view scope_name(SplitScope scope);

}  // namespace occupilot::preprocess
