#include "occupilot/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <map>
#include <ostream>
#include <sstream>
#include <tuple>

#include <CLI11.hpp>

#include "occupilot/autoencoder.hpp"
#include "occupilot/dimred.hpp"
#include "occupilot/errors.hpp"
#include "occupilot/evalmetrics.hpp"
#include "occupilot/io.hpp"
#include "occupilot/pipeline.hpp"
#include "occupilot/powersim.hpp"
#include "occupilot/svm.hpp"

namespace occupilot::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using telemetry::TimestampFormat;

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    while (true) {
        const auto pos = line.find(',');
        out.push_back(line.substr(0, pos));
        if (pos == std::string_view::npos) break;
        line.remove_prefix(pos + 1);
    }
    return out;
}

template <typename T>
T parse_field(std::string_view s, std::size_t line_no) {
    T v{};
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        throw ParseError::malformed_row(line_no, "bad value '" + std::string(s) + "'");
    return v;
}

/// Data lines of a CSV after checking its header.
std::vector<std::string> csv_lines(const fs::path& path, std::string_view header) {
    std::istringstream in(io::read_text(path));
    std::string line;
    if (!std::getline(in, line) || line != header)
        throw ParseError::malformed_row(0, path.string() + ": expected header '" + std::string(header) + "'");
    std::vector<std::string> lines;
    while (std::getline(in, line))
        if (!line.empty()) lines.push_back(line);
    return lines;
}

std::string iso_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    return telemetry::format_timestamp(static_cast<std::int64_t>(now), TimestampFormat::iso);
}

TimestampFormat ts_format(const std::string& name) {
    auto f = telemetry::timestamp_format_from_name(name);
    if (!f) throw ConfigError("unknown timestamp format: " + name);
    return *f;
}

preprocess::SplitScope split_scope(const std::string& name) {
    if (name == "pooled") return preprocess::SplitScope::pooled;
    if (name == "per-household") return preprocess::SplitScope::per_household;
    throw ConfigError("unknown split scope: " + name);
}

void write_manifest(std::string_view command, const json& config, const fs::path& dir,
                    std::span<const std::string> artifacts) {
    io::write_json(dir / "run_manifest.json", make_manifest(command, config, dir, artifacts));
}

// ---- generate ------------------------------------------------------------

struct GenerateArgs {
    fs::path out;
    std::uint64_t seed = 42;
    int households = 50;
    int days = 7;
    std::int64_t native_period = 60;
    std::string ts_format = "epoch";
};

json config_json(const GenerateArgs& a) {
    return {{"out", a.out.string()}, {"seed", a.seed}, {"households", a.households}, {"days", a.days},
            {"native_period", a.native_period}, {"ts_format", a.ts_format}};
}

void cmd_generate(const GenerateArgs& a, std::ostream& out) {
    synthgen::CohortConfig cfg;
    cfg.seed = a.seed;
    cfg.n_households = a.households;
    cfg.days = a.days;
    cfg.native_period = a.native_period;
    cfg.validate();
    const auto fmt = ts_format(a.ts_format);

    const auto cohort = synthgen::generate_cohort(cfg);
    fs::create_directories(a.out);
    std::vector<std::string> written;
    for (const auto& s : cohort.series) {
        const auto name = telemetry::series_filename(s.household_id, s.room);
        telemetry::write_csv(a.out / name, s, fmt);
        written.push_back(name);
    }
    for (const auto& pv : cohort.pv) {
        const auto name = pv_filename(pv.household_id);
        write_pv_csv(a.out / name, pv, fmt);
        written.push_back(name);
    }
    json profiles = json::array();
    for (const auto& p : cohort.profiles)
        profiles.push_back({{"household_id", p.household_id},
                            {"archetype", p.archetype == synthgen::Archetype::worker     ? "worker"
                                          : p.archetype == synthgen::Archetype::homebody ? "homebody"
                                                                                         : "shift"},
                            {"occupants", p.occupants},
                            {"pv_peak_kw", p.pv_peak_kw}});
    io::write_json(a.out / "households.json", {{"schema_version", io::kSchemaVersion}, {"households", profiles}});
    written.push_back("households.json");
    write_manifest("generate", config_json(a), a.out, written);
    out << "generated " << cohort.series.size() << " telemetry files and " << cohort.pv.size() << " pv files in "
        << a.out.string() << "\n";
}

// ---- preprocess ----------------------------------------------------------

struct PreprocessArgs {
    fs::path data;
    fs::path out;
    std::uint64_t seed = 42;
    std::string ts_format = "epoch";
    std::string split_scope = "pooled";
    int active_start = 6;
    int active_end = 24;
    int hold_bins = 2;
};

json config_json(const PreprocessArgs& a) {
    return {{"data", a.data.string()},         {"out", a.out.string()},
            {"seed", a.seed},                  {"ts_format", a.ts_format},
            {"split_scope", a.split_scope},    {"active_start", a.active_start},
            {"active_end", a.active_end},      {"hold_bins", a.hold_bins}};
}

std::vector<telemetry::HouseholdSeries> read_cohort(const fs::path& dir, TimestampFormat fmt) {
    if (!fs::is_directory(dir)) throw Error("missing artifact: " + dir.string());
    std::vector<std::tuple<int, int, fs::path>> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (auto ids = telemetry::parse_series_filename(entry.path().filename().string()))
            files.emplace_back(ids->first, static_cast<int>(ids->second), entry.path());
    }
    if (files.empty()) throw Error("missing artifact: " + (dir / "household_<id>_<room>.csv").string());
    std::sort(files.begin(), files.end());
    const auto schema = telemetry::canonical_schema();
    std::vector<telemetry::HouseholdSeries> out;
    for (const auto& [id, room, path] : files) {
        try {
            out.push_back(telemetry::parse_csv(path, schema, fmt));
        } catch (const ParseError& e) {
            throw ParseError(e.kind(), e.line_no(), e.column(), path.string() + ": " + e.what());
        }
    }
    return out;
}

void cmd_preprocess(const PreprocessArgs& a, std::ostream& out) {
    const telemetry::TimeZonePolicy policy{a.active_start, a.active_end};
    policy.validate();
    if (a.hold_bins < 0) throw ConfigError("hold-bins must be >= 0");
    const auto scope = split_scope(a.split_scope);
    const auto series = read_cohort(a.data, ts_format(a.ts_format));

    const auto rooms = pipeline::label_rooms(series, policy, a.hold_bins);
    const auto raw = preprocess::build_dataset(rooms);
    const auto fm = preprocess::make_feature_matrix(raw, a.seed, scope);
    fs::create_directories(a.out);
    preprocess::write_feature_matrix(a.out, fm);
    write_labeled_bins(a.out / "labeled_bins.csv", rooms);
    const std::vector<std::string> written{"features.csv", "features.json", "labeled_bins.csv"};
    write_manifest("preprocess", config_json(a), a.out, written);
    out << "preprocessed " << fm.values.rows() << " rows x " << fm.values.cols() << " features ("
        << fm.split.train_rows.size() << " train, " << fm.split.valid_rows.size() << " valid)\n";
    if (!fm.scaler.dropped.empty()) {
        out << "dropped zero-variance columns:";
        for (const auto& n : fm.scaler.dropped) out << ' ' << n;
        out << "\n";
    }
}

// ---- train ---------------------------------------------------------------

struct TrainArgs {
    fs::path features;
    fs::path out;
    std::string model = "svm";
    std::uint64_t seed = 42;
    // svm
    double C = 1.0;
    std::string kernel = "rbf";
    double gamma = 0.0;  // 0: automatic
    double tol = 1e-3;
    std::size_t svm_rows = 3000;
    // autoencoder
    std::string activation = "relu";
    double ae_lr = 0.003;
    std::size_t ae_batch = 64;
    std::size_t ae_epochs = 500;
    int ae_train_class = 0;
    double ae_init_scale = 1.0;
    std::size_t ae_rows = 6000;
};

json config_json(const TrainArgs& a) {
    json j{{"features", a.features.string()}, {"out", a.out.string()}, {"model", a.model}, {"seed", a.seed}};
    if (a.model == "svm") {
        j["C"] = a.C;
        j["kernel"] = a.kernel;
        j["gamma"] = a.gamma;
        j["tol"] = a.tol;
        j["max_train_rows"] = a.svm_rows;
    } else {
        j["activation"] = a.activation;
        j["learning_rate"] = a.ae_lr;
        j["batch_size"] = a.ae_batch;
        j["epochs"] = a.ae_epochs;
        j["train_class"] = a.ae_train_class;
        j["weight_init_scale"] = a.ae_init_scale;
        j["max_train_rows"] = a.ae_rows;
    }
    return j;
}

void cmd_train(const TrainArgs& a, std::ostream& out) {
    if (a.model != "svm" && a.model != "ae") throw ConfigError("--model must be svm or ae");
    const auto fm = preprocess::read_feature_matrix(a.features);
    fs::create_directories(a.out);
    std::string name;
    if (a.model == "svm") {
        pipeline::SvmSettings s;
        s.params.C = a.C;
        s.params.tol = a.tol;
        s.params.seed = a.seed;
        if (a.kernel == "rbf") s.params.kernel.kind = svm::KernelKind::rbf;
        else if (a.kernel == "linear") s.params.kernel.kind = svm::KernelKind::linear;
        else throw ConfigError("unknown kernel: " + a.kernel);
        s.auto_gamma = a.gamma <= 0.0;
        if (!s.auto_gamma) s.params.kernel.gamma = a.gamma;
        s.max_train_rows = a.svm_rows;
        const auto model = pipeline::fit_svm(fm, s);
        name = "model_svm.json";
        io::write_json(a.out / name, svm::to_json(model));
        out << "svm: " << model.support_vectors.rows() << " support vectors, " << model.iterations
            << " iterations, converged=" << (model.converged ? "yes" : "no") << "\n";
    } else {
        auto s = pipeline::default_ae_settings(a.seed);
        if (a.activation == "relu") s.config.activation = autoencoder::Activation::relu;
        else if (a.activation == "tanh") s.config.activation = autoencoder::Activation::tanh;
        else throw ConfigError("unknown activation: " + a.activation);
        s.config.learning_rate = a.ae_lr;
        s.config.batch_size = a.ae_batch;
        s.config.epochs = a.ae_epochs;
        s.config.train_class = a.ae_train_class;
        s.config.weight_init_scale = a.ae_init_scale;
        s.max_train_rows = a.ae_rows;
        const auto model = pipeline::fit_ae(fm, s);
        name = "model_ae.json";
        io::write_json(a.out / name, autoencoder::to_json(model));
        out << "autoencoder: loss " << model.loss_trace.front() << " -> " << model.loss_trace.back()
            << ", threshold " << *model.threshold << "\n";
    }
    const std::vector<std::string> written{name};
    write_manifest("train", config_json(a), a.out, written);
}

// ---- predict -------------------------------------------------------------

struct PredictArgs {
    fs::path features;
    fs::path model;
    fs::path out;
};

std::pair<std::string, std::vector<int>> predict_with(const json& doc, const Matrix& x) {
    const auto kind = doc.value("model", "");
    if (kind == "svm") return {"svm", svm::predict(svm::svm_from_json(doc), x)};
    if (kind == "ae") return {"ae", autoencoder::predict_ae(autoencoder::ae_from_json(doc), x)};
    throw Error("unknown model kind '" + kind + "'");
}

void cmd_predict(const PredictArgs& a, std::ostream& out) {
    const auto fm = preprocess::read_feature_matrix(a.features);
    const auto doc = io::read_json(a.model);
    if (doc.value("schema_version", 0) != io::kSchemaVersion)
        throw Error("unsupported schema_version in " + a.model.string());
    const auto [kind, labels] = predict_with(doc, fm.values);
    fs::create_directories(a.out);
    const std::string name = "predictions_" + kind + ".csv";
    write_predictions(a.out / name, fm.meta, labels);
    const std::vector<std::string> written{name};
    write_manifest("predict",
                   {{"features", a.features.string()}, {"model", a.model.string()}, {"out", a.out.string()}}, a.out,
                   written);
    out << "wrote " << labels.size() << " predictions to " << (a.out / name).string() << "\n";
}

// ---- evaluate ------------------------------------------------------------

struct EvaluateArgs {
    fs::path features;
    std::vector<fs::path> predictions;
    std::vector<std::string> names;
    fs::path out;
    std::string rows = "valid";
};

std::string default_algorithm_name(const fs::path& p) {
    const auto stem = p.stem().string();
    if (stem == "predictions_svm") return "SVM";
    if (stem == "predictions_ae") return "Autoencoder";
    return stem;
}

void cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
    if (a.predictions.empty()) throw ConfigError("at least one --predictions file is required");
    if (!a.names.empty() && a.names.size() != a.predictions.size())
        throw ConfigError("--name must be given once per --predictions file");
    if (a.rows != "valid" && a.rows != "all") throw ConfigError("--rows must be valid or all");
    const auto fm = preprocess::read_feature_matrix(a.features);
    std::vector<std::size_t> rows = fm.split.valid_rows;
    if (a.rows == "all") {
        rows.resize(fm.labels.size());
        for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    }
    std::vector<evalmetrics::ReportRow> table;
    for (std::size_t k = 0; k < a.predictions.size(); ++k) {
        const auto labels = read_predictions(a.predictions[k], fm.meta);
        const auto name = a.names.empty() ? default_algorithm_name(a.predictions[k]) : a.names[k];
        auto part = pipeline::evaluate_rows(name, labels, fm, rows);
        table.insert(table.end(), part.begin(), part.end());
    }
    fs::create_directories(a.out);
    const auto text = evalmetrics::render_table(table);
    io::write_atomic(a.out / "metrics.txt", text);
    auto doc = evalmetrics::to_json(table);
    doc["evaluated_rows"] = a.rows;
    io::write_json(a.out / "metrics.json", doc);
    json preds = json::array();
    for (const auto& p : a.predictions) preds.push_back(p.string());
    const std::vector<std::string> written{"metrics.txt", "metrics.json"};
    write_manifest("evaluate",
                   {{"features", a.features.string()}, {"predictions", preds}, {"names", a.names},
                    {"rows", a.rows}, {"out", a.out.string()}},
                   a.out, written);
    out << text;
}

// ---- embed ---------------------------------------------------------------

struct EmbedArgs {
    fs::path features;
    fs::path out;
    std::string method = "pca";
    std::size_t max_points = 1000;
    double perplexity = 30.0;
    std::size_t iterations = 1000;
    std::uint64_t seed = 42;
};

void cmd_embed(const EmbedArgs& a, std::ostream& out) {
    if (a.method != "pca" && a.method != "tsne") throw ConfigError("--embed must be pca or tsne");
    const auto fm = preprocess::read_feature_matrix(a.features);
    std::vector<std::size_t> all(fm.labels.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    const auto rows = pipeline::stratified_subsample(all, fm.labels, a.max_points, derive_seed(a.seed, 0xE3B));
    const Matrix x = fm.values.select_rows(rows);
    std::vector<int> labels;
    for (auto r : rows) labels.push_back(fm.labels[r]);

    dimred::Embedding2D e;
    if (a.method == "pca") {
        e = dimred::pca_2d(x, labels);
    } else {
        dimred::TsneConfig cfg;
        cfg.perplexity = a.perplexity;
        cfg.iterations = a.iterations;
        cfg.seed = a.seed;
        e = dimred::tsne_2d(x, cfg, labels);
    }
    fs::create_directories(a.out);
    const std::string csv_name = "embedding_" + a.method + ".csv";
    const std::string json_name = "embedding_" + a.method + ".json";
    io::write_atomic(a.out / csv_name, dimred::embedding_csv(e));
    io::write_json(a.out / json_name, dimred::diagnostics_json(e));
    const std::vector<std::string> written{csv_name, json_name};
    write_manifest("embed",
                   {{"features", a.features.string()}, {"out", a.out.string()}, {"method", a.method},
                    {"max_points", a.max_points}, {"perplexity", a.perplexity}, {"iterations", a.iterations},
                    {"seed", a.seed}},
                   a.out, written);
    out << a.method << " embedding of " << x.rows() << " points";
    if (e.method == dimred::Method::pca)
        out << ", explained variance " << e.explained_variance_ratio[0] << " + " << e.explained_variance_ratio[1];
    else
        out << ", final KL " << e.kl_trace.back();
    out << "\n";
    if (e.warning) out << "warning: " << *e.warning << "\n";
}

// ---- simulate ------------------------------------------------------------

struct SimulateArgs {
    fs::path features;
    fs::path data;
    fs::path predictions;  // empty: ground truth
    fs::path policy_file;
    fs::path out;
    std::string ts_format = "epoch";
};

void cmd_simulate(const SimulateArgs& a, std::ostream& out) {
    powersim::ShutoffPolicy policy;
    if (!a.policy_file.empty()) policy = powersim::policy_from_json(io::read_json(a.policy_file));
    policy.validate();
    const auto fmt = ts_format(a.ts_format);
    const auto rooms = read_labeled_bins(a.features / "labeled_bins.csv");

    std::vector<preprocess::RowMeta> meta;
    for (const auto& r : rooms)
        for (const auto& b : r.bins) meta.push_back({r.household_id, r.room, b.bin_start});
    const auto labels = a.predictions.empty() ? pipeline::ground_truth(rooms) : read_predictions(a.predictions, meta);

    std::vector<int> ids;
    for (const auto& r : rooms)
        if (ids.empty() || ids.back() != r.household_id) ids.push_back(r.household_id);
    std::vector<synthgen::PvSeries> pv;
    for (int id : ids) {
        const auto path = a.data / pv_filename(id);
        pv.push_back(read_pv_csv(path, fmt));
        pv.back().household_id = id;
    }
    const auto results = pipeline::simulate_cohort(rooms, meta, labels, pv, policy);
    const auto report = powersim::cohort_report(results);

    fs::create_directories(a.out);
    auto doc = powersim::to_json(report);
    doc["policy"] = powersim::to_json(policy);
    doc["occupancy_source"] = a.predictions.empty() ? "ground_truth" : a.predictions.filename().string();
    io::write_json(a.out / "savings_report.json", doc);
    const auto text = powersim::render_report(report);
    io::write_atomic(a.out / "savings_report.txt", text);
    const std::vector<std::string> written{"savings_report.json", "savings_report.txt"};
    write_manifest("simulate",
                   {{"features", a.features.string()}, {"data", a.data.string()},
                    {"predictions", a.predictions.string()}, {"policy_file", a.policy_file.string()},
                    {"policy", powersim::to_json(policy)}, {"ts_format", a.ts_format}, {"out", a.out.string()}},
                   a.out, written);
    out << text;
}

// ---- pipeline ------------------------------------------------------------

struct PipelineArgs {
    fs::path out;
    std::uint64_t seed = 42;
    int households = 50;
    int days = 7;
    std::string ts_format = "epoch";
    std::string split_scope = "pooled";
    std::size_t embed_points = 1000;
    std::size_t tsne_iterations = 1000;
    fs::path policy_file;
};

void cmd_pipeline(const PipelineArgs& a, std::ostream& out) {
    GenerateArgs g;
    g.out = a.out / "data";
    g.seed = a.seed;
    g.households = a.households;
    g.days = a.days;
    g.ts_format = a.ts_format;
    {
        // validate before anything touches the disk
        synthgen::CohortConfig cfg;
        cfg.n_households = a.households;
        cfg.days = a.days;
        cfg.validate();
        ts_format(a.ts_format);
        split_scope(a.split_scope);
    }
    cmd_generate(g, out);

    PreprocessArgs p;
    p.data = g.out;
    p.out = a.out / "features";
    p.seed = a.seed;
    p.ts_format = a.ts_format;
    p.split_scope = a.split_scope;
    cmd_preprocess(p, out);

    for (const std::string model : {"svm", "ae"}) {
        TrainArgs t;
        t.features = p.out;
        t.out = a.out / "models" / model;
        t.model = model;
        t.seed = a.seed;
        cmd_train(t, out);
        PredictArgs pr{p.out, t.out / ("model_" + model + ".json"), a.out / "predictions" / model};
        cmd_predict(pr, out);
    }
    const auto svm_pred = a.out / "predictions" / "svm" / "predictions_svm.csv";
    const auto ae_pred = a.out / "predictions" / "ae" / "predictions_ae.csv";

    EvaluateArgs e;
    e.features = p.out;
    e.predictions = {svm_pred, ae_pred};
    e.out = a.out / "evaluation";
    cmd_evaluate(e, out);

    for (const std::string method : {"pca", "tsne"}) {
        EmbedArgs em;
        em.features = p.out;
        em.method = method;
        em.max_points = a.embed_points;
        em.iterations = a.tsne_iterations;
        em.seed = a.seed;
        em.out = a.out / "embedding" / method;
        cmd_embed(em, out);
    }

    const std::vector<std::pair<std::string, fs::path>> sims{{"truth", {}}, {"svm", svm_pred}, {"ae", ae_pred}};
    for (const auto& [tag, pred] : sims) {
        SimulateArgs s;
        s.features = p.out;
        s.data = g.out;
        s.predictions = pred;
        s.policy_file = a.policy_file;
        s.ts_format = a.ts_format;
        s.out = a.out / "simulation" / tag;
        out << "savings with " << tag << " occupancy:\n";
        cmd_simulate(s, out);
    }
    write_manifest("pipeline",
                   {{"out", a.out.string()}, {"seed", a.seed}, {"households", a.households}, {"days", a.days},
                    {"ts_format", a.ts_format}, {"split_scope", a.split_scope},
                    {"embed_points", a.embed_points}, {"tsne_iterations", a.tsne_iterations},
                    {"policy_file", a.policy_file.string()}},
                   a.out, {});
}

}  // namespace

// ---- file formats ----------------------------------------------------------

std::string pv_filename(int household_id) { return "pv_" + std::to_string(household_id) + ".csv"; }

void write_pv_csv(const fs::path& path, const synthgen::PvSeries& pv, TimestampFormat fmt) {
    if (pv.bin_start.size() != pv.kw.size()) throw LengthMismatch("pv timestamps and values differ in length");
    std::string text = "bin_start,kw\n";
    for (std::size_t i = 0; i < pv.kw.size(); ++i) {
        text += telemetry::format_timestamp(pv.bin_start[i], fmt);
        text += ',';
        text += telemetry::format_number(pv.kw[i]);
        text += '\n';
    }
    io::write_atomic(path, text);
}

synthgen::PvSeries read_pv_csv(const fs::path& path, TimestampFormat fmt) {
    synthgen::PvSeries pv;
    std::size_t line_no = 0;
    for (const auto& line : csv_lines(path, "bin_start,kw")) {
        ++line_no;
        const auto f = split_fields(line);
        if (f.size() != 2) throw ParseError::malformed_row(line_no, path.string() + ": expected 2 fields");
        pv.bin_start.push_back(telemetry::parse_timestamp(f[0], fmt));
        pv.kw.push_back(parse_field<double>(f[1], line_no));
    }
    if (const auto name = path.filename().string(); name.rfind("pv_", 0) == 0) {
        int id = 0;
        const auto digits = name.substr(3, name.size() - 3 - 4);
        if (std::from_chars(digits.data(), digits.data() + digits.size(), id).ec == std::errc{}) pv.household_id = id;
    }
    return pv;
}

void write_predictions(const fs::path& path, std::span<const preprocess::RowMeta> meta, std::span<const int> labels) {
    if (meta.size() != labels.size()) throw LengthMismatch("predictions and rows differ in length");
    std::string text = "household_id,room,bin_start,label\n";
    for (std::size_t i = 0; i < meta.size(); ++i) {
        text += std::to_string(meta[i].household_id);
        text += ',';
        text += telemetry::room_name(meta[i].room);
        text += ',';
        text += std::to_string(meta[i].bin_start);
        text += ',';
        text += std::to_string(labels[i]);
        text += '\n';
    }
    io::write_atomic(path, text);
}

std::vector<int> read_predictions(const fs::path& path, std::span<const preprocess::RowMeta> meta) {
    std::map<std::tuple<int, int, std::int64_t>, int> at;
    std::size_t line_no = 0;
    for (const auto& line : csv_lines(path, "household_id,room,bin_start,label")) {
        ++line_no;
        const auto f = split_fields(line);
        if (f.size() != 4) throw ParseError::malformed_row(line_no, path.string() + ": expected 4 fields");
        const auto room = telemetry::room_from_name(f[1]);
        if (!room) throw ParseError::malformed_row(line_no, path.string() + ": bad room");
        const int label = parse_field<int>(f[3], line_no);
        if (label != 0 && label != 1) throw ParseError::malformed_row(line_no, path.string() + ": label not 0/1");
        at[{parse_field<int>(f[0], line_no), static_cast<int>(*room), parse_field<std::int64_t>(f[2], line_no)}] =
            label;
    }
    std::vector<int> out;
    out.reserve(meta.size());
    for (const auto& m : meta) {
        auto it = at.find({m.household_id, static_cast<int>(m.room), m.bin_start});
        if (it == at.end())
            throw TimelineMismatch(path.string() + ": no prediction for household " + std::to_string(m.household_id) +
                                   " " + std::string(telemetry::room_name(m.room)) + " bin " +
                                   std::to_string(m.bin_start));
        out.push_back(it->second);
    }
    return out;
}

namespace {

std::string labeled_bins_header() {
    std::string h = "household_id,room,bin_start,label";
    for (auto n : telemetry::kApplianceNames) h += "," + std::string(n) + "_power";
    return h;
}

}  // namespace

void write_labeled_bins(const fs::path& path, std::span<const preprocess::LabeledRoom> rooms) {
    std::string text = labeled_bins_header() + "\n";
    for (const auto& r : rooms)
        for (const auto& b : r.bins) {
            text += std::to_string(r.household_id);
            text += ',';
            text += telemetry::room_name(r.room);
            text += ',';
            text += std::to_string(b.bin_start);
            text += ',';
            text += std::to_string(b.occupancy_label);
            for (double w : b.power) {
                text += ',';
                text += telemetry::format_number(w);
            }
            text += '\n';
        }
    io::write_atomic(path, text);
}

std::vector<preprocess::LabeledRoom> read_labeled_bins(const fs::path& path) {
    std::vector<preprocess::LabeledRoom> rooms;
    std::size_t line_no = 0;
    for (const auto& line : csv_lines(path, labeled_bins_header())) {
        ++line_no;
        const auto f = split_fields(line);
        if (f.size() != 4 + telemetry::kApplianceCount)
            throw ParseError::malformed_row(line_no, path.string() + ": wrong field count");
        const int id = parse_field<int>(f[0], line_no);
        const auto room = telemetry::room_from_name(f[1]);
        if (!room) throw ParseError::malformed_row(line_no, path.string() + ": bad room");
        if (rooms.empty() || rooms.back().household_id != id || rooms.back().room != *room)
            rooms.push_back({id, *room, {}});
        telemetry::BinnedRecord b;
        b.bin_start = parse_field<std::int64_t>(f[2], line_no);
        b.occupancy_label = parse_field<int>(f[3], line_no);
        for (std::size_t a = 0; a < telemetry::kApplianceCount; ++a) b.power[a] = parse_field<double>(f[4 + a], line_no);
        rooms.back().bins.push_back(b);
    }
    return rooms;
}

std::string file_digest(const fs::path& path) {
    const auto bytes = io::read_text(path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

json make_manifest(std::string_view command, const json& config, const fs::path& dir,
                   std::span<const std::string> artifacts) {
    json arts = json::array();
    for (const auto& name : artifacts)
        arts.push_back({{"path", name}, {"bytes", fs::file_size(dir / name)}, {"fnv1a64", file_digest(dir / name)}});
    return {{"schema_version", io::kSchemaVersion},
            {"tool", std::string(kToolName)},
            {"version", std::string(kVersion)},
            {"command", std::string(command)},
            {"created_at", iso_now()},
            {"config", config},
            {"artifacts", arts}};
}

// ---- entry point -----------------------------------------------------------

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Occupancy detection and occupancy-driven power simulation toolkit", std::string(kToolName)};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* g = app.add_subcommand("generate", "Generate a synthetic household cohort");
    g->add_option("--out", gen.out, "Output directory")->required();
    g->add_option("--seed", gen.seed, "Random seed")->capture_default_str();
    g->add_option("--households", gen.households, "Number of households")->capture_default_str();
    g->add_option("--days", gen.days, "Days per household")->capture_default_str();
    g->add_option("--native-period", gen.native_period, "Sampling period in seconds")->capture_default_str();
    g->add_option("--ts-format", gen.ts_format, "epoch or iso")->capture_default_str();

    PreprocessArgs pre;
    auto* p = app.add_subcommand("preprocess", "Resample, label, split and standardize");
    p->add_option("--data", pre.data, "Cohort directory")->required();
    p->add_option("--out", pre.out, "Output directory")->required();
    p->add_option("--seed", pre.seed, "Split seed")->capture_default_str();
    p->add_option("--ts-format", pre.ts_format, "epoch or iso")->capture_default_str();
    p->add_option("--split-scope", pre.split_scope, "pooled or per-household")->capture_default_str();
    p->add_option("--active-start", pre.active_start, "Active zone start hour")->capture_default_str();
    p->add_option("--active-end", pre.active_end, "Active zone end hour")->capture_default_str();
    p->add_option("--hold-bins", pre.hold_bins, "Bins a detection holds in the active zone")->capture_default_str();

    TrainArgs tr;
    auto* t = app.add_subcommand("train", "Train an occupancy classifier");
    t->add_option("--features", tr.features, "Feature directory")->required();
    t->add_option("--out", tr.out, "Output directory")->required();
    t->add_option("--model", tr.model, "svm or ae")->capture_default_str();
    t->add_option("--seed", tr.seed)->capture_default_str();
    t->add_option("--C", tr.C, "SVM box constraint")->capture_default_str();
    t->add_option("--kernel", tr.kernel, "rbf or linear")->capture_default_str();
    t->add_option("--gamma", tr.gamma, "RBF gamma, 0 for 1/(d var)")->capture_default_str();
    t->add_option("--tol", tr.tol, "SMO stopping tolerance")->capture_default_str();
    t->add_option("--svm-max-rows", tr.svm_rows, "SVM training subsample cap")->capture_default_str();
    t->add_option("--ae-activation", tr.activation, "relu or tanh")->capture_default_str();
    t->add_option("--ae-lr", tr.ae_lr)->capture_default_str();
    t->add_option("--ae-batch", tr.ae_batch, "0 for full batch")->capture_default_str();
    t->add_option("--ae-epochs", tr.ae_epochs)->capture_default_str();
    t->add_option("--ae-train-class", tr.ae_train_class, "Class the autoencoder models")->capture_default_str();
    t->add_option("--ae-init-scale", tr.ae_init_scale)->capture_default_str();
    t->add_option("--ae-max-rows", tr.ae_rows, "Autoencoder training subsample cap")->capture_default_str();

    PredictArgs pr;
    auto* pd = app.add_subcommand("predict", "Label every feature row with a trained model");
    pd->add_option("--features", pr.features)->required();
    pd->add_option("--model-file", pr.model)->required();
    pd->add_option("--out", pr.out)->required();

    EvaluateArgs ev;
    auto* e = app.add_subcommand("evaluate", "Confusion-matrix metrics per room");
    e->add_option("--features", ev.features)->required();
    e->add_option("--predictions", ev.predictions, "Predictions CSV (repeatable)")->required();
    e->add_option("--name", ev.names, "Algorithm name per predictions file");
    e->add_option("--rows", ev.rows, "valid or all")->capture_default_str();
    e->add_option("--out", ev.out)->required();

    EmbedArgs em;
    auto* m = app.add_subcommand("embed", "2-D embedding of the feature rows");
    m->add_option("--features", em.features)->required();
    m->add_option("--out", em.out)->required();
    m->add_option("--embed", em.method, "pca or tsne")->capture_default_str();
    m->add_option("--max-points", em.max_points)->capture_default_str();
    m->add_option("--perplexity", em.perplexity)->capture_default_str();
    m->add_option("--iterations", em.iterations)->capture_default_str();
    m->add_option("--seed", em.seed)->capture_default_str();

    SimulateArgs si;
    auto* s = app.add_subcommand("simulate", "Occupancy-driven shutoff and PV netting");
    s->add_option("--features", si.features, "Preprocess output directory")->required();
    s->add_option("--data", si.data, "Cohort directory with pv files")->required();
    s->add_option("--predictions", si.predictions, "Predictions CSV; ground truth when omitted");
    s->add_option("--policy-file", si.policy_file, "Shutoff policy JSON");
    s->add_option("--ts-format", si.ts_format)->capture_default_str();
    s->add_option("--out", si.out)->required();

    PipelineArgs pi;
    auto* pl = app.add_subcommand("pipeline", "generate, preprocess, train, evaluate, embed, simulate");
    pl->add_option("--out", pi.out, "Run directory")->required();
    pl->add_option("--seed", pi.seed, "Seed for every stage")->capture_default_str();
    pl->add_option("--households", pi.households, "Number of households")->capture_default_str();
    pl->add_option("--days", pi.days, "Days per household")->capture_default_str();
    pl->add_option("--ts-format", pi.ts_format, "epoch or iso")->capture_default_str();
    pl->add_option("--split-scope", pi.split_scope, "pooled or per-household")->capture_default_str();
    pl->add_option("--embed-points", pi.embed_points, "Rows sampled for the embeddings")->capture_default_str();
    pl->add_option("--tsne-iterations", pi.tsne_iterations, "t-SNE iterations")->capture_default_str();
    pl->add_option("--policy-file", pi.policy_file, "Shutoff policy JSON");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << kVersion << "\n";
        return kExitOk;
    } catch (const CLI::ParseError& ex) {
        err << "error: " << ex.what() << "\n";
        return kExitConfig;
    }

    try {
        if (g->parsed()) cmd_generate(gen, out);
        else if (p->parsed()) cmd_preprocess(pre, out);
        else if (t->parsed()) cmd_train(tr, out);
        else if (pd->parsed()) cmd_predict(pr, out);
        else if (e->parsed()) cmd_evaluate(ev, out);
        else if (m->parsed()) cmd_embed(em, out);
        else if (s->parsed()) cmd_simulate(si, out);
        else if (pl->parsed()) cmd_pipeline(pi, out);
    } catch (const ConfigError& ex) {
        err << "config error: " << ex.what() << "\n";
        return kExitConfig;
    } catch (const PerplexityInfeasible& ex) {
        err << "config error: " << ex.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << "\n";
        return kExitIo;
    }
    return kExitOk;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args, out, err);
}

}  // namespace occupilot::cli
