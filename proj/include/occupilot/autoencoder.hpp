#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "occupilot/matrix.hpp"

namespace occupilot::autoencoder {

enum class Activation { tanh, relu, identity };

struct AeConfig {
    std::vector<std::size_t> layer_sizes;  // e.g. {d, 16, 4, 16, d}
    Activation activation = Activation::tanh;  // hidden layers; output is identity
    double learning_rate = 0.01;
    std::size_t batch_size = 0;  // 0 = full batch
    std::size_t epochs = 500;
    std::uint64_t seed = 0;
    double weight_init_scale = 1.0;
    int train_class = 1;

    /// Default hourglass {d, 16, 4, 16, d}.
    static AeConfig defaults(std::size_t d);
    /// First and last sizes equal d, mirror-symmetric, bottleneck narrower than d.
    void validate(std::size_t d) const;
};

struct Layer {
    Matrix weights;  // out x in
    std::vector<double> bias;
};

struct AutoencoderModel {
    std::vector<std::size_t> layer_sizes;
    Activation activation = Activation::tanh;
    std::vector<Layer> layers;
    std::vector<double> loss_trace;  // mean e_t over training rows after each epoch
    std::optional<double> threshold;
    int train_class = 1;
    std::uint64_t seed = 0;

    std::size_t dim() const { return layer_sizes.empty() ? 0 : layer_sizes.front(); }
    std::vector<double> reconstruct(std::span<const double> x) const;
};

/// Glorot-uniform weights times weight_init_scale, zero biases.
AutoencoderModel init_model(const AeConfig& config);

/// Gradient descent on mean reconstruction error. Throws NonFiniteLoss, ConfigError.
AutoencoderModel train_ae(const Matrix& features, const AeConfig& config);

/// e_t = |x - x_hat|^2
double squared_error(std::span<const double> x, std::span<const double> x_hat);
double reconstruction_error(const AutoencoderModel& model, std::span<const double> x);
std::vector<double> reconstruction_errors(const AutoencoderModel& model, const Matrix& features);

struct Calibration {
    double threshold = 0.0;
    double f1 = 0.0;
};

/// Picks tau among the observed errors maximizing F1 (positive class 1) of
/// "e > tau => not train_class"; ties go to the smallest tau. Throws SingleClass.
Calibration calibrate_threshold(std::span<const double> errors, std::span<const int> labels, int train_class);
Calibration calibrate_threshold(AutoencoderModel& model, const Matrix& features, std::span<const int> labels);

std::vector<int> classify_errors(std::span<const double> errors, double threshold, int train_class);
/// Throws UncalibratedModel, DimensionMismatch.
std::vector<int> predict_ae(const AutoencoderModel& model, const Matrix& features);

/// Parameters flattened layer by layer: weights row-major, then biases.
std::vector<double> flatten_parameters(const AutoencoderModel& model);
void assign_parameters(AutoencoderModel& model, std::span<const double> flat);

struct LossGradient {
    double loss = 0.0;  // mean e_t over the rows
    std::vector<double> gradient;  // same layout as flatten_parameters
};
LossGradient loss_and_gradient(const AutoencoderModel& model, const Matrix& features,
                               std::span<const std::size_t> rows);
double mean_loss(const AutoencoderModel& model, const Matrix& features);

nlohmann::json to_json(const AutoencoderModel& model);
AutoencoderModel ae_from_json(const nlohmann::json& doc);

}  // namespace occupilot::autoencoder
