#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "occupilot/matrix.hpp"

namespace occupilot::svm {

enum class KernelKind { linear, rbf };

struct KernelSpec {
    KernelKind kind = KernelKind::rbf;
    double gamma = 1.0;  // rbf only, > 0

    double operator()(std::span<const double> a, std::span<const double> b) const;
    void validate() const;
};

/// gamma = 1 / (d * var(X)) over every entry of X.
double default_gamma(const Matrix& x);

/// Kernel SVM decision function f(x) = sum_i coef_i K(x_i, x) + bias.
struct SvmModel {
    Matrix support_vectors;
    std::vector<std::size_t> support_index;  // training-row index of each support vector
    std::vector<double> dual_coeffs;         // alpha_i * y_i
    double bias = 0.0;
    KernelSpec kernel;
    double C = 1.0;
    double tol = 1e-3;
    std::uint64_t seed = 0;
    bool converged = true;
    std::size_t iterations = 0;
    double kkt_residual = 0.0;
    std::vector<double> objective_trace;  // dual objective after each sweep

    std::size_t dim() const { return support_vectors.cols(); }
    double decision(std::span<const double> x) const;
};

struct SvrModel : SvmModel {
    double epsilon = 0.1;
};

struct SvcParams {
    double C = 1.0;
    KernelSpec kernel;
    double tol = 1e-3;
    std::size_t max_passes = 1'000'000;  // solver iteration cap
    std::uint64_t seed = 0;
};

struct SvrParams {
    double C = 1.0;
    double epsilon = 0.1;
    KernelSpec kernel;
    double tol = 1e-3;
    std::size_t max_passes = 1'000'000;
};

/// Soft-margin classifier on labels {0,1}; class 1 is the +1 side.
/// Throws SingleClass, ConfigError. On hitting max_passes the best iterate is
/// returned with converged = false.
SvmModel train_svc(const Matrix& features, std::span<const int> labels, const SvcParams& params);

/// epsilon-insensitive regression minimizing C * sum G_i + 0.5 * |w|^2.
SvrModel train_svr(const Matrix& features, std::span<const double> targets, const SvrParams& params);

/// Class labels; f(x) = 0 goes to class 1. Throws DimensionMismatch.
std::vector<int> predict(const SvmModel& model, const Matrix& features);
std::vector<double> predict(const SvrModel& model, const Matrix& features);
std::vector<double> decision_values(const SvmModel& model, const Matrix& features);

/// G_i: zero inside the tube, |f - y| - eps on or outside it.
double epsilon_insensitive_loss(double prediction, double target, double epsilon);

/// C * sum_i G_i + 0.5 * |w|^2 with |w|^2 taken through the kernel.
double regression_risk(const SvrModel& model, const Matrix& features, std::span<const double> targets);

/// SVR dual objective 0.5 * b'Kb + eps * sum|b| - y'b with b = alpha - alpha*,
/// evaluated from the stored coefficients and the training targets.
double svr_dual_objective(const SvrModel& model, std::span<const double> targets);

/// Number of training points with y_i f(x_i) < 1.
std::size_t margin_violations(const SvmModel& model, const Matrix& features, std::span<const int> labels);

nlohmann::json to_json(const SvmModel& model);
SvmModel svm_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const SvrModel& model);
SvrModel svr_from_json(const nlohmann::json& doc);

namespace detail {

/// Box- and equality-constrained QP solved by pairwise (SMO) updates:
/// minimize 0.5 a'Qa + p'a  s.t.  y'a = const,  0 <= a <= C,  Q_st = y_s y_t K_st.
struct QpProblem {
    std::vector<double> kernel;        // dense m x m kernel over the samples
    std::size_t n_samples = 0;         // m
    std::vector<std::size_t> sample;   // variable -> sample index
    std::vector<double> p;
    std::vector<signed char> y;  // +1 / -1
    double C = 1.0;
    double tol = 1e-3;
    std::size_t max_iterations = 1'000'000;
};

struct QpSolution {
    std::vector<double> alpha;
    double rho = 0.0;  // decision offset, f = sum y a K - rho
    double objective = 0.0;
    double kkt_residual = 0.0;
    std::size_t iterations = 0;
    bool converged = true;
    std::vector<double> objective_trace;
};

QpSolution solve_qp(const QpProblem& problem);

}  // namespace detail

}  // namespace occupilot::svm
