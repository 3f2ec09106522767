#include "occupilot/autoencoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "occupilot/errors.hpp"
#include "occupilot/io.hpp"
#include "occupilot/rng.hpp"

namespace occupilot::autoencoder {

namespace {

double activate(Activation a, double z) {
    switch (a) {
        case Activation::tanh: return std::tanh(z);
        case Activation::relu: return z > 0.0 ? z : 0.0;
        case Activation::identity: return z;
    }
    return z;
}

// derivative expressed through the pre-activation
double activate_grad(Activation a, double z, double out) {
    switch (a) {
        case Activation::tanh: return 1.0 - out * out;
        case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
        case Activation::identity: return 1.0;
    }
    return 1.0;
}

const char* activation_name(Activation a) {
    switch (a) {
        case Activation::tanh: return "tanh";
        case Activation::relu: return "relu";
        case Activation::identity: return "identity";
    }
    return "tanh";
}

Activation activation_from_name(const std::string& s) {
    if (s == "tanh") return Activation::tanh;
    if (s == "relu") return Activation::relu;
    if (s == "identity") return Activation::identity;
    throw ConfigError("unknown activation '" + s + "'");
}

/// Forward pass keeping pre-activations and outputs of every layer.
struct Trace {
    std::vector<std::vector<double>> z;
    std::vector<std::vector<double>> a;  // a[0] is the input
};

void forward(const AutoencoderModel& m, std::span<const double> x, Trace& t) {
    const std::size_t L = m.layers.size();
    t.z.resize(L);
    t.a.resize(L + 1);
    t.a[0].assign(x.begin(), x.end());
    for (std::size_t l = 0; l < L; ++l) {
        const auto& layer = m.layers[l];
        const std::size_t out = layer.weights.rows();
        t.z[l].resize(out);
        t.a[l + 1].resize(out);
        const bool hidden = l + 1 < L;
        for (std::size_t o = 0; o < out; ++o) {
            const double z = dot(layer.weights.row(o), t.a[l]) + layer.bias[o];
            t.z[l][o] = z;
            t.a[l + 1][o] = hidden ? activate(m.activation, z) : z;
        }
    }
}

std::size_t parameter_count(const AutoencoderModel& m) {
    std::size_t n = 0;
    for (const auto& l : m.layers) n += l.weights.data().size() + l.bias.size();
    return n;
}

}  // namespace

AeConfig AeConfig::defaults(std::size_t d) {
    AeConfig c;
    c.layer_sizes = {d, 16, 4, 16, d};
    return c;
}

void AeConfig::validate(std::size_t d) const {
    const auto& s = layer_sizes;
    if (s.size() < 3) throw ConfigError("autoencoder needs at least one hidden layer");
    if (s.front() != d || s.back() != d) throw ConfigError("first and last layer sizes must equal the input dimension");
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == 0) throw ConfigError("layer sizes must be positive");
        if (s[i] != s[s.size() - 1 - i]) throw ConfigError("layer sizes must mirror around the bottleneck");
    }
    if (*std::min_element(s.begin(), s.end()) >= d) throw ConfigError("bottleneck must be narrower than the input");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
    if (epochs == 0) throw ConfigError("epochs must be >= 1");
    if (!(weight_init_scale > 0.0)) throw ConfigError("weight_init_scale must be > 0");
    if (train_class != 0 && train_class != 1) throw ConfigError("train_class must be 0 or 1");
}

std::vector<double> AutoencoderModel::reconstruct(std::span<const double> x) const {
    if (x.size() != dim()) throw DimensionMismatch(dim(), x.size());
    Trace t;
    forward(*this, x, t);
    return t.a.back();
}

AutoencoderModel init_model(const AeConfig& config) {
    AutoencoderModel m;
    m.layer_sizes = config.layer_sizes;
    m.activation = config.activation;
    m.train_class = config.train_class;
    m.seed = config.seed;
    Rng rng(derive_seed(config.seed, 0xAE));
    for (std::size_t l = 0; l + 1 < config.layer_sizes.size(); ++l) {
        const std::size_t in = config.layer_sizes[l], out = config.layer_sizes[l + 1];
        Layer layer{Matrix(out, in), std::vector<double>(out, 0.0)};
        const double limit = config.weight_init_scale * std::sqrt(6.0 / static_cast<double>(in + out));
        for (double& w : layer.weights.data()) w = rng.uniform(-limit, limit);
        m.layers.push_back(std::move(layer));
    }
    return m;
}

std::vector<double> flatten_parameters(const AutoencoderModel& model) {
    std::vector<double> flat;
    flat.reserve(parameter_count(model));
    for (const auto& l : model.layers) {
        flat.insert(flat.end(), l.weights.data().begin(), l.weights.data().end());
        flat.insert(flat.end(), l.bias.begin(), l.bias.end());
    }
    return flat;
}

void assign_parameters(AutoencoderModel& model, std::span<const double> flat) {
    if (flat.size() != parameter_count(model)) throw DimensionMismatch(parameter_count(model), flat.size());
    std::size_t k = 0;
    for (auto& l : model.layers) {
        for (double& w : l.weights.data()) w = flat[k++];
        for (double& b : l.bias) b = flat[k++];
    }
}

LossGradient loss_and_gradient(const AutoencoderModel& model, const Matrix& features,
                               std::span<const std::size_t> rows) {
    LossGradient out;
    out.gradient.assign(parameter_count(model), 0.0);
    if (rows.empty()) return out;
    const std::size_t L = model.layers.size();
    std::vector<std::size_t> offset(L);
    for (std::size_t l = 0, k = 0; l < L; ++l) {
        offset[l] = k;
        k += model.layers[l].weights.data().size() + model.layers[l].bias.size();
    }
    const double scale = 1.0 / static_cast<double>(rows.size());

    Trace t;
    std::vector<std::vector<double>> delta(L);
    double total = 0.0;
    for (auto r : rows) {
        const auto x = features.row(r);
        forward(model, x, t);
        const auto& xhat = t.a.back();
        total += squared_error(x, xhat);

        delta[L - 1].resize(xhat.size());
        for (std::size_t i = 0; i < xhat.size(); ++i) delta[L - 1][i] = 2.0 * (xhat[i] - x[i]) * scale;
        for (std::size_t l = L - 1; l-- > 0;) {
            const auto& next = model.layers[l + 1].weights;
            delta[l].assign(next.cols(), 0.0);
            for (std::size_t o = 0; o < next.rows(); ++o) {
                const double d = delta[l + 1][o];
                const auto w = next.row(o);
                for (std::size_t i = 0; i < w.size(); ++i) delta[l][i] += w[i] * d;
            }
            for (std::size_t i = 0; i < delta[l].size(); ++i)
                delta[l][i] *= activate_grad(model.activation, t.z[l][i], t.a[l + 1][i]);
        }
        for (std::size_t l = 0; l < L; ++l) {
            const auto& in = t.a[l];
            double* g = out.gradient.data() + offset[l];
            const std::size_t n_in = in.size();
            for (std::size_t o = 0; o < delta[l].size(); ++o) {
                const double d = delta[l][o];
                double* gw = g + o * n_in;
                for (std::size_t i = 0; i < n_in; ++i) gw[i] += d * in[i];
            }
            double* gb = g + delta[l].size() * n_in;
            for (std::size_t o = 0; o < delta[l].size(); ++o) gb[o] += delta[l][o];
        }
    }
    out.loss = total * scale;
    return out;
}

double mean_loss(const AutoencoderModel& model, const Matrix& features) {
    if (features.rows() == 0) return 0.0;
    double total = 0.0;
    for (std::size_t r = 0; r < features.rows(); ++r) total += reconstruction_error(model, features.row(r));
    return total / static_cast<double>(features.rows());
}

AutoencoderModel train_ae(const Matrix& features, const AeConfig& config) {
    config.validate(features.cols());
    const std::size_t n = features.rows();
    const std::size_t batch = config.batch_size == 0 ? n : config.batch_size;
    if (n == 0 || n < batch) throw ConfigError("training needs at least batch_size rows");

    AutoencoderModel model = init_model(config);
    auto params = flatten_parameters(model);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(config.seed, 0xBA7C));
    const bool full_batch = batch >= n;

    auto check = [](double loss, std::size_t epoch) {
        if (!std::isfinite(loss)) throw NonFiniteLoss(epoch);
    };

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        if (full_batch) {
            const auto lg = loss_and_gradient(model, features, order);
            check(lg.loss, epoch);
            if (epoch > 0) model.loss_trace.push_back(lg.loss);
            for (std::size_t k = 0; k < params.size(); ++k) params[k] -= config.learning_rate * lg.gradient[k];
            assign_parameters(model, params);
        } else {
            rng.shuffle(order.begin(), order.end());
            for (std::size_t start = 0; start + batch <= n; start += batch) {
                const auto lg = loss_and_gradient(model, features, std::span(order).subspan(start, batch));
                check(lg.loss, epoch);
                for (std::size_t k = 0; k < params.size(); ++k) params[k] -= config.learning_rate * lg.gradient[k];
                assign_parameters(model, params);
            }
            const double loss = mean_loss(model, features);
            check(loss, epoch);
            model.loss_trace.push_back(loss);
        }
    }
    if (full_batch) {
        const double loss = mean_loss(model, features);
        check(loss, config.epochs);
        model.loss_trace.push_back(loss);
    }
    return model;
}

double squared_error(std::span<const double> x, std::span<const double> x_hat) {
    if (x.size() != x_hat.size()) throw DimensionMismatch(x.size(), x_hat.size());
    return squared_distance(x, x_hat);
}

double reconstruction_error(const AutoencoderModel& model, std::span<const double> x) {
    const auto xhat = model.reconstruct(x);
    return squared_error(x, xhat);
}

std::vector<double> reconstruction_errors(const AutoencoderModel& model, const Matrix& features) {
    if (features.rows() > 0 && features.cols() != model.dim()) throw DimensionMismatch(model.dim(), features.cols());
    std::vector<double> out(features.rows());
    for (std::size_t r = 0; r < features.rows(); ++r) out[r] = reconstruction_error(model, features.row(r));
    return out;
}

Calibration calibrate_threshold(std::span<const double> errors, std::span<const int> labels, int train_class) {
    if (errors.size() != labels.size()) throw LengthMismatch("errors and labels differ in length");
    bool has0 = false, has1 = false;
    for (int l : labels) (l == 1 ? has1 : has0) = true;
    if (!has0 || !has1) throw SingleClass();

    std::vector<std::size_t> order(errors.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return errors[a] < errors[b]; });

    // rows with e <= tau are predicted train_class, the rest the other class
    std::size_t pos_total = 0;
    for (int l : labels) pos_total += l == 1;
    std::size_t below_pos = 0, below_neg = 0;  // labels of rows with e <= tau
    const std::size_t neg_total = labels.size() - pos_total;

    Calibration best{errors[order.front()], -1.0};
    std::size_t k = 0;
    while (k < order.size()) {
        const double tau = errors[order[k]];
        while (k < order.size() && errors[order[k]] == tau) {
            (labels[order[k]] == 1 ? below_pos : below_neg) += 1;
            ++k;
        }
        std::size_t tp, fp, fn;
        if (train_class == 1) {
            tp = below_pos;
            fp = below_neg;
            fn = pos_total - below_pos;
        } else {
            tp = pos_total - below_pos;
            fp = neg_total - below_neg;
            fn = below_pos;
        }
        // undefined precision ranks below every defined score
        const double f1 = tp + fp == 0 ? -1.0
                                       : 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
        if (f1 > best.f1) best = {tau, f1};
    }
    return best;
}

Calibration calibrate_threshold(AutoencoderModel& model, const Matrix& features, std::span<const int> labels) {
    const auto errors = reconstruction_errors(model, features);
    const auto c = calibrate_threshold(errors, labels, model.train_class);
    model.threshold = c.threshold;
    return c;
}

std::vector<int> classify_errors(std::span<const double> errors, double threshold, int train_class) {
    std::vector<int> out(errors.size());
    for (std::size_t i = 0; i < errors.size(); ++i) out[i] = errors[i] <= threshold ? train_class : 1 - train_class;
    return out;
}

std::vector<int> predict_ae(const AutoencoderModel& model, const Matrix& features) {
    if (!model.threshold) throw UncalibratedModel();
    return classify_errors(reconstruction_errors(model, features), *model.threshold, model.train_class);
}

nlohmann::json to_json(const AutoencoderModel& model) {
    nlohmann::json j;
    j["schema_version"] = io::kSchemaVersion;
    j["model"] = "ae";
    j["layer_sizes"] = model.layer_sizes;
    j["activation"] = activation_name(model.activation);
    j["weights"] = flatten_parameters(model);
    j["threshold"] = model.threshold ? nlohmann::json(*model.threshold) : nlohmann::json(nullptr);
    j["train_class"] = model.train_class;
    j["seed"] = model.seed;
    j["loss_trace"] = model.loss_trace;
    return j;
}

AutoencoderModel ae_from_json(const nlohmann::json& doc) {
    if (doc.value("schema_version", 0) != io::kSchemaVersion) throw Error("unsupported model schema_version");
    if (doc.value("model", "") != "ae") throw Error("not an autoencoder model");
    AeConfig cfg;
    cfg.layer_sizes = doc.at("layer_sizes").get<std::vector<std::size_t>>();
    cfg.activation = activation_from_name(doc.at("activation").get<std::string>());
    cfg.train_class = doc.at("train_class").get<int>();
    cfg.seed = doc.at("seed").get<std::uint64_t>();
    auto model = init_model(cfg);
    assign_parameters(model, doc.at("weights").get<std::vector<double>>());
    if (!doc.at("threshold").is_null()) model.threshold = doc.at("threshold").get<double>();
    model.loss_trace = doc.at("loss_trace").get<std::vector<double>>();
    return model;
}

}  // namespace occupilot::autoencoder
