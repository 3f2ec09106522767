#include "occupilot/evalmetrics.hpp"

#include <algorithm>
#include <array>
#include <cstdio>

#include "occupilot/errors.hpp"
#include "occupilot/io.hpp"

namespace occupilot::evalmetrics {

ConfusionCounts confusion(std::span<const int> predictions, std::span<const int> labels, int positive_class) {
    if (predictions.size() != labels.size())
        throw LengthMismatch("predictions and labels differ in length");
    if (predictions.empty()) throw LengthMismatch("nothing to compare");
    ConfusionCounts c;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const bool pred_pos = predictions[i] == positive_class;
        const bool true_pos = labels[i] == positive_class;
        if (pred_pos && true_pos) ++c.tp;
        else if (pred_pos) ++c.fp;
        else if (true_pos) ++c.fn;
        else ++c.tn;
    }
    return c;
}

double f1_score(double precision, double recall) {
    const double s = precision + recall;
    return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

MetricReport metrics(const ConfusionCounts& c) {
    if (c.total() == 0) throw EmptyEvaluation();
    MetricReport r;
    r.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
    if (c.tp + c.fp > 0) r.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    if (c.tp + c.fn > 0) r.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    if (r.precision && r.recall) r.f1 = f1_score(*r.precision, *r.recall);
    return r;
}

std::string format_metric(const std::optional<double>& value) {
    if (!value) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", *value);
    return buf;
}

ReportRow make_row(std::string algorithm, std::string location, const ConfusionCounts& counts) {
    return {std::move(algorithm), std::move(location), counts, metrics(counts)};
}

std::string render_table(std::span<const ReportRow> rows) {
    const std::array<std::string, 6> head{"Algorithm", "Location", "Accuracy", "Precision", "Recall", "F1"};
    std::vector<std::array<std::string, 6>> cells;
    for (const auto& r : rows)
        cells.push_back({r.algorithm, r.location, format_metric(r.report.accuracy), format_metric(r.report.precision),
                         format_metric(r.report.recall), format_metric(r.report.f1)});
    std::array<std::size_t, 6> width{};
    for (std::size_t c = 0; c < 6; ++c) {
        width[c] = head[c].size();
        for (const auto& row : cells) width[c] = std::max(width[c], row[c].size());
    }
    auto line = [&](const std::array<std::string, 6>& v) {
        std::string s;
        for (std::size_t c = 0; c < 6; ++c) {
            // text columns left-aligned, numbers right-aligned
            const std::string pad(width[c] - v[c].size(), ' ');
            s += c < 2 ? v[c] + pad : pad + v[c];
            if (c + 1 < 6) s += "  ";
        }
        while (!s.empty() && s.back() == ' ') s.pop_back();
        return s + "\n";
    };
    std::string out = line(head);
    std::size_t total = 0;
    for (auto w : width) total += w;
    out += std::string(total + 10, '-') + "\n";
    for (const auto& row : cells) out += line(row);
    return out;
}

nlohmann::json to_json(std::span<const ReportRow> rows) {
    auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    nlohmann::json doc;
    doc["schema_version"] = io::kSchemaVersion;
    doc["rows"] = nlohmann::json::array();
    for (const auto& r : rows) {
        doc["rows"].push_back({{"algorithm", r.algorithm},
                               {"location", r.location},
                               {"tp", r.counts.tp},
                               {"tn", r.counts.tn},
                               {"fp", r.counts.fp},
                               {"fn", r.counts.fn},
                               {"accuracy", r.report.accuracy},
                               {"precision", opt(r.report.precision)},
                               {"recall", opt(r.report.recall)},
                               {"f1", opt(r.report.f1)}});
    }
    return doc;
}

}  // namespace occupilot::evalmetrics
