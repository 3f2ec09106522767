#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace occupilot::evalmetrics {

struct ConfusionCounts {
    std::size_t tp = 0, tn = 0, fp = 0, fn = 0;

    std::size_t total() const { return tp + tn + fp + fn; }
    friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Undefined metrics are empty optionals, rendered "n/a".
struct MetricReport {
    double accuracy = 0.0;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;
};

/// Throws LengthMismatch on unequal or empty inputs.
ConfusionCounts confusion(std::span<const int> predictions, std::span<const int> labels, int positive_class = 1);

/// Throws EmptyEvaluation when the counts are all zero.
MetricReport metrics(const ConfusionCounts& counts);

/// Harmonic mean; 0 when both inputs are 0.
double f1_score(double precision, double recall);

/// Three decimals, or "n/a".
std::string format_metric(const std::optional<double>& value);

struct ReportRow {
    std::string algorithm;
    std::string location;
    ConfusionCounts counts;
    MetricReport report;
};

ReportRow make_row(std::string algorithm, std::string location, const ConfusionCounts& counts);

/// Aligned text table: Algorithm, Location, Accuracy, Precision, Recall, F1.
std::string render_table(std::span<const ReportRow> rows);
nlohmann::json to_json(std::span<const ReportRow> rows);

}  // namespace occupilot::evalmetrics
