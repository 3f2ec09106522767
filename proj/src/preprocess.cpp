#include "occupilot/preprocess.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "occupilot/errors.hpp"
#include "occupilot/io.hpp"
#include "occupilot/rng.hpp"

namespace occupilot::preprocess {

using telemetry::kApplianceCount;
using telemetry::kApplianceNames;
using telemetry::kSensorCount;
using telemetry::kSensorNames;

std::vector<std::string> feature_names() {
    std::vector<std::string> names;
    for (auto s : kSensorNames) names.emplace_back(s);
    names.emplace_back("presence");
    for (auto a : kApplianceNames) names.push_back(std::string(a) + "_switch");
    for (auto a : kApplianceNames) names.push_back(std::string(a) + "_power");
    return names;
}

RawDataset build_dataset(std::span<const LabeledRoom> rooms) {
    RawDataset out;
    out.channel_names = feature_names();
    std::vector<double> row(out.channel_names.size());
    for (const auto& room : rooms) {
        for (const auto& b : room.bins) {
            std::size_t c = 0;
            for (std::size_t i = 0; i < kSensorCount; ++i) row[c++] = b.sensors[i];
            row[c++] = b.presence;
            for (std::size_t a = 0; a < kApplianceCount; ++a) row[c++] = b.switch_fraction[a];
            for (std::size_t a = 0; a < kApplianceCount; ++a) row[c++] = b.power[a];
            out.values.append_row(row);
            out.labels.push_back(b.occupancy_label);
            out.meta.push_back({room.household_id, room.room, b.bin_start});
        }
    }
    if (out.values.empty()) out.values = Matrix(0, out.channel_names.size());
    return out;
}

Scaler fit_scaler(const Matrix& raw, std::span<const std::size_t> train_rows,
                  std::span<const std::string> names) {
    if (train_rows.size() < 2) throw ConfigError("fit_scaler needs at least 2 training rows");
    Scaler sc;
    sc.raw_dim = raw.cols();
    const auto n = static_cast<double>(train_rows.size());
    for (std::size_t c = 0; c < raw.cols(); ++c) {
        double mean = 0.0;
        for (auto r : train_rows) mean += raw(r, c);
        mean /= n;
        double ss = 0.0;
        for (auto r : train_rows) {
            const double d = raw(r, c) - mean;
            ss += d * d;
        }
        const double sd = std::sqrt(ss / (n - 1.0));
        if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
            sc.dropped.push_back(c < names.size() ? names[c] : "col" + std::to_string(c));
            sc.dropped_columns.push_back(c);
            sc.dropped_values.push_back(mean);
            continue;
        }
        sc.columns.push_back(c);
        sc.mean.push_back(mean);
        sc.stddev.push_back(sd);
    }
    return sc;
}

std::vector<double> Scaler::transform_row(std::span<const double> raw) const {
    if (raw.size() != raw_dim) throw DimensionMismatch(raw_dim, raw.size());
    std::vector<double> out(columns.size());
    for (std::size_t k = 0; k < columns.size(); ++k) out[k] = (raw[columns[k]] - mean[k]) / stddev[k];
    return out;
}

Matrix Scaler::transform(const Matrix& raw) const {
    if (raw.cols() != raw_dim && raw.rows() > 0) throw DimensionMismatch(raw_dim, raw.cols());
    Matrix out(raw.rows(), columns.size());
    for (std::size_t r = 0; r < raw.rows(); ++r)
        for (std::size_t k = 0; k < columns.size(); ++k)
            out(r, k) = (raw(r, columns[k]) - mean[k]) / stddev[k];
    return out;
}

Matrix Scaler::inverse_transform(const Matrix& scaled) const {
    if (scaled.cols() != columns.size() && scaled.rows() > 0)
        throw DimensionMismatch(columns.size(), scaled.cols());
    Matrix out(scaled.rows(), raw_dim);
    for (std::size_t r = 0; r < scaled.rows(); ++r) {
        for (std::size_t k = 0; k < columns.size(); ++k)
            out(r, columns[k]) = scaled(r, k) * stddev[k] + mean[k];
        for (std::size_t k = 0; k < dropped_columns.size(); ++k) out(r, dropped_columns[k]) = dropped_values[k];
    }
    return out;
}

namespace {

void stratified_split(std::span<const std::size_t> rows, std::span<const int> labels, Rng& rng,
                      SplitIndices& out) {
    std::map<int, std::vector<std::size_t>> by_class;
    for (auto r : rows) by_class[labels[r]].push_back(r);
    for (auto& [label, members] : by_class) {
        rng.shuffle(members.begin(), members.end());
        const auto n_train = static_cast<std::size_t>(std::llround(0.8 * static_cast<double>(members.size())));
        out.train_rows.insert(out.train_rows.end(), members.begin(), members.begin() + n_train);
        out.valid_rows.insert(out.valid_rows.end(), members.begin() + n_train, members.end());
    }
}

}  // namespace

SplitIndices split_80_20(std::size_t n_rows, std::uint64_t seed, std::span<const int> labels) {
    if (n_rows < 10) throw ConfigError("split needs at least 10 rows");
    if (labels.size() != n_rows) throw LengthMismatch("labels length differs from row count");
    if (std::adjacent_find(labels.begin(), labels.end(), std::not_equal_to<>()) == labels.end())
        throw SingleClass();
    std::vector<std::size_t> rows(n_rows);
    for (std::size_t i = 0; i < n_rows; ++i) rows[i] = i;
    SplitIndices out;
    out.seed = seed;
    Rng rng(derive_seed(seed, 0x5711));
    stratified_split(rows, labels, rng, out);
    std::sort(out.train_rows.begin(), out.train_rows.end());
    std::sort(out.valid_rows.begin(), out.valid_rows.end());
    return out;
}

SplitIndices split_dataset(const RawDataset& data, std::uint64_t seed, SplitScope scope) {
    if (scope == SplitScope::pooled) return split_80_20(data.labels.size(), seed, data.labels);
    if (data.labels.size() < 10) throw ConfigError("split needs at least 10 rows");
    std::map<int, std::vector<std::size_t>> groups;
    for (std::size_t r = 0; r < data.meta.size(); ++r) groups[data.meta[r].household_id].push_back(r);
    if (std::adjacent_find(data.labels.begin(), data.labels.end(), std::not_equal_to<>()) == data.labels.end())
        throw SingleClass();
    SplitIndices out;
    out.seed = seed;
    for (const auto& [hh, rows] : groups) {
        Rng rng(derive_seed(seed, 0x5711 + static_cast<std::uint64_t>(hh) + 1));
        stratified_split(rows, data.labels, rng, out);
    }
    std::sort(out.train_rows.begin(), out.train_rows.end());
    std::sort(out.valid_rows.begin(), out.valid_rows.end());
    return out;
}

FeatureMatrix make_feature_matrix(const RawDataset& data, std::uint64_t seed, SplitScope scope) {
    FeatureMatrix fm;
    fm.split = split_dataset(data, seed, scope);
    fm.scope = scope;
    fm.scaler = fit_scaler(data.values, fm.split.train_rows, data.channel_names);
    fm.values = fm.scaler.transform(data.values);
    fm.labels = data.labels;
    fm.meta = data.meta;
    for (auto c : fm.scaler.columns) fm.channel_names.push_back(data.channel_names[c]);
    return fm;
}

std::string_view scope_name(SplitScope scope) {
    return scope == SplitScope::pooled ? "pooled" : "per-household";
}

void write_feature_matrix(const std::filesystem::path& dir, const FeatureMatrix& fm) {
    std::string csv = "household_id,room,bin_start,label";
    for (const auto& n : fm.channel_names) csv += "," + n;
    csv += '\n';
    for (std::size_t r = 0; r < fm.values.rows(); ++r) {
        const auto& m = fm.meta[r];
        csv += std::to_string(m.household_id);
        csv += ',';
        csv += telemetry::room_name(m.room);
        csv += ',';
        csv += std::to_string(m.bin_start);
        csv += ',';
        csv += std::to_string(fm.labels[r]);
        for (double v : fm.values.row(r)) {
            csv += ',';
            csv += telemetry::format_number(v);
        }
        csv += '\n';
    }
    io::write_atomic(dir / "features.csv", csv);

    nlohmann::json side;
    side["schema_version"] = io::kSchemaVersion;
    side["channel_names"] = fm.channel_names;
    side["scaler"] = {{"raw_dim", fm.scaler.raw_dim},
                      {"columns", fm.scaler.columns},
                      {"mean", fm.scaler.mean},
                      {"std", fm.scaler.stddev},
                      {"dropped", fm.scaler.dropped},
                      {"dropped_columns", fm.scaler.dropped_columns},
                      {"dropped_values", fm.scaler.dropped_values}};
    side["seed"] = fm.split.seed;
    side["split_scope"] = std::string(scope_name(fm.scope));
    side["train_rows"] = fm.split.train_rows;
    side["valid_rows"] = fm.split.valid_rows;
    io::write_json(dir / "features.json", side);
}

FeatureMatrix read_feature_matrix(const std::filesystem::path& dir) {
    const auto side = io::read_json(dir / "features.json");
    if (side.value("schema_version", 0) != io::kSchemaVersion)
        throw Error("unsupported schema_version in " + (dir / "features.json").string());
    FeatureMatrix fm;
    fm.channel_names = side.at("channel_names").get<std::vector<std::string>>();
    const auto& sc = side.at("scaler");
    fm.scaler.raw_dim = sc.at("raw_dim").get<std::size_t>();
    fm.scaler.columns = sc.at("columns").get<std::vector<std::size_t>>();
    fm.scaler.mean = sc.at("mean").get<std::vector<double>>();
    fm.scaler.stddev = sc.at("std").get<std::vector<double>>();
    fm.scaler.dropped = sc.at("dropped").get<std::vector<std::string>>();
    fm.scaler.dropped_columns = sc.at("dropped_columns").get<std::vector<std::size_t>>();
    fm.scaler.dropped_values = sc.at("dropped_values").get<std::vector<double>>();
    fm.split.seed = side.at("seed").get<std::uint64_t>();
    fm.scope = side.at("split_scope").get<std::string>() == "pooled" ? SplitScope::pooled
                                                                      : SplitScope::per_household;
    fm.split.train_rows = side.at("train_rows").get<std::vector<std::size_t>>();
    fm.split.valid_rows = side.at("valid_rows").get<std::vector<std::size_t>>();

    const auto text = io::read_text(dir / "features.csv");
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    const std::size_t d = fm.channel_names.size();
    std::vector<double> row(d);
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ++line_no;
        std::vector<std::string_view> fields;
        std::string_view rest(line);
        while (true) {
            const auto pos = rest.find(',');
            fields.push_back(rest.substr(0, pos));
            if (pos == std::string_view::npos) break;
            rest.remove_prefix(pos + 1);
        }
        if (fields.size() != d + 4) throw ParseError::malformed_row(line_no, "wrong field count");
        RowMeta meta;
        auto to_int = [&](std::string_view s, auto& v) {
            auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (ec != std::errc{} || p != s.data() + s.size())
                throw ParseError::malformed_row(line_no, "bad integer");
        };
        to_int(fields[0], meta.household_id);
        const auto room = telemetry::room_from_name(fields[1]);
        if (!room) throw ParseError::malformed_row(line_no, "bad room");
        meta.room = *room;
        to_int(fields[2], meta.bin_start);
        int label;
        to_int(fields[3], label);
        for (std::size_t c = 0; c < d; ++c) {
            const auto s = fields[4 + c];
            auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), row[c]);
            if (ec != std::errc{} || p != s.data() + s.size())
                throw ParseError::malformed_row(line_no, "bad number");
        }
        fm.values.append_row(row);
        fm.labels.push_back(label);
        fm.meta.push_back(meta);
    }
    if (fm.values.empty()) fm.values = Matrix(0, d);
    return fm;
}

}  // namespace occupilot::preprocess
