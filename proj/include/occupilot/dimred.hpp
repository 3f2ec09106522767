#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "occupilot/matrix.hpp"

namespace occupilot::dimred {

enum class Method { pca, tsne };

struct Embedding2D {
    Matrix points;  // n x 2
    std::vector<int> labels;
    Method method = Method::pca;
    std::vector<double> explained_variance_ratio;  // pca: top two components
    std::vector<double> eigenvalues;               // pca: all, descending
    Matrix components;                             // pca: 2 x d, orthonormal rows
    std::vector<double> kl_trace;                  // tsne: KL(P||Q) after each iteration
    std::optional<std::string> warning;
};

/// Eigenpairs of a symmetric matrix, eigenvalues descending, vectors as rows.
struct SymmetricEigen {
    std::vector<double> values;
    Matrix vectors;  // row k pairs with values[k]
};

/// Cyclic Jacobi rotations; converges to machine precision for small d.
SymmetricEigen symmetric_eigen(const Matrix& a);

/// Sample covariance (n - 1 denominator) of the column-centered data.
Matrix covariance(const Matrix& x);

/// Top-2 principal-component projection. Sign convention: the largest-magnitude
/// entry of each component is positive. A rank-deficient input yields a zero
/// second column and a warning. Throws ConfigError for n < 3 or d < 2.
Embedding2D pca_2d(const Matrix& x, std::span<const int> labels = {});

struct TsneConfig {
    double perplexity = 30.0;
    std::size_t iterations = 1000;
    double learning_rate = 200.0;
    double early_exaggeration = 12.0;
    std::size_t exaggeration_iterations = 100;
    double initial_momentum = 0.5;
    double final_momentum = 0.8;
    std::size_t momentum_switch_iteration = 250;
    std::uint64_t seed = 0;
};

/// Row-stochastic conditional affinities p(j|i) whose per-row perplexity matches
/// the target; achieved perplexities are written to `achieved` when given.
Matrix conditional_affinities(const Matrix& x, double perplexity, std::vector<double>* achieved = nullptr);

/// (P + P^T) / 2n
Matrix joint_affinities(const Matrix& conditional);

double kl_divergence(const Matrix& joint_p, const Matrix& y);

/// Exact gradient of KL(P||Q) with respect to the embedding.
Matrix kl_gradient(const Matrix& joint_p, const Matrix& y);

/// Exact O(n^2) t-SNE. Throws PerplexityInfeasible when perplexity >= n/3 or
/// <= 1 (for n >= 4; smaller inputs use uniform affinities).
Embedding2D tsne_2d(const Matrix& x, const TsneConfig& config, std::span<const int> labels = {});

std::string_view method_name(Method m);

/// Embedding as CSV with columns x, y, label.
std::string embedding_csv(const Embedding2D& e);
nlohmann::json diagnostics_json(const Embedding2D& e);

}  // namespace occupilot::dimred
