#include "occupilot/dimred.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "occupilot/errors.hpp"
#include "occupilot/io.hpp"
#include "occupilot/parallel.hpp"
#include "occupilot/rng.hpp"
#include "occupilot/telemetry.hpp"

namespace occupilot::dimred {

SymmetricEigen symmetric_eigen(const Matrix& input) {
    const std::size_t d = input.rows();
    if (input.cols() != d) throw DimensionMismatch(d, input.cols());
    Matrix a = input;
    Matrix v(d, d);
    for (std::size_t i = 0; i < d; ++i) v(i, i) = 1.0;

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0, diag = 0.0;
        for (std::size_t p = 0; p < d; ++p) {
            diag += a(p, p) * a(p, p);
            for (std::size_t q = p + 1; q < d; ++q) off += a(p, q) * a(p, q);
        }
        if (off <= 1e-30 * std::max(diag, 1e-300)) break;
        for (std::size_t p = 0; p < d; ++p) {
            for (std::size_t q = p + 1; q < d; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < d; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < d; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < d; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return a(i, i) > a(j, j); });
    SymmetricEigen out;
    out.vectors = Matrix(d, d);
    for (std::size_t k = 0; k < d; ++k) {
        out.values.push_back(a(order[k], order[k]));
        for (std::size_t i = 0; i < d; ++i) out.vectors(k, i) = v(i, order[k]);
    }
    return out;
}

Matrix covariance(const Matrix& x) {
    const std::size_t n = x.rows(), d = x.cols();
    std::vector<double> mean(d, 0.0);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c) mean[c] += x(r, c);
    for (auto& m : mean) m /= static_cast<double>(n);
    Matrix cov(d, d);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t i = 0; i < d; ++i) {
            const double di = x(r, i) - mean[i];
            for (std::size_t j = i; j < d; ++j) cov(i, j) += di * (x(r, j) - mean[j]);
        }
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i; j < d; ++j) {
            cov(i, j) /= static_cast<double>(n - 1);
            cov(j, i) = cov(i, j);
        }
    return cov;
}

Embedding2D pca_2d(const Matrix& x, std::span<const int> labels) {
    if (x.rows() < 3 || x.cols() < 2) throw ConfigError("pca needs n >= 3 and d >= 2");
    const std::size_t n = x.rows(), d = x.cols();
    const auto eig = symmetric_eigen(covariance(x));

    Embedding2D e;
    e.method = Method::pca;
    e.labels.assign(labels.begin(), labels.end());
    e.eigenvalues = eig.values;
    e.components = Matrix(2, d);
    for (std::size_t k = 0; k < 2; ++k) {
        auto comp = eig.vectors.row(k);
        std::size_t big = 0;
        for (std::size_t i = 1; i < d; ++i)
            if (std::abs(comp[i]) > std::abs(comp[big])) big = i;
        const double sign = comp[big] < 0.0 ? -1.0 : 1.0;
        for (std::size_t i = 0; i < d; ++i) e.components(k, i) = sign * comp[i];
    }
    double total = 0.0;
    for (double v : eig.values) total += std::max(v, 0.0);
    const double scale_ref = std::max(eig.values.front(), std::numeric_limits<double>::min());
    const bool rank_deficient = !(eig.values[1] > 1e-12 * scale_ref) || !(eig.values[0] > 0.0);
    for (std::size_t k = 0; k < 2; ++k)
        e.explained_variance_ratio.push_back(total > 0.0 ? std::max(eig.values[k], 0.0) / total : 0.0);
    if (rank_deficient) {
        e.warning = "rank deficient: fewer than 2 non-zero eigenvalues";
        for (std::size_t i = 0; i < d; ++i) e.components(1, i) = 0.0;
        e.explained_variance_ratio[1] = 0.0;
    }

    std::vector<double> mean(d, 0.0);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c) mean[c] += x(r, c);
    for (auto& m : mean) m /= static_cast<double>(n);
    e.points = Matrix(n, 2);
    std::vector<double> centered(d);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < d; ++c) centered[c] = x(r, c) - mean[c];
        e.points(r, 0) = dot(e.components.row(0), centered);
        e.points(r, 1) = rank_deficient ? 0.0 : dot(e.components.row(1), centered);
    }
    return e;
}

Matrix conditional_affinities(const Matrix& x, double perplexity, std::vector<double>* achieved) {
    const std::size_t n = x.rows();
    Matrix p(n, n);
    if (achieved) achieved->assign(n, 0.0);
    if (n < 2) return p;
    if (n <= 3) {
        // too few neighbours to shape a distribution: uniform over the others
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j)
                if (j != i) p(i, j) = 1.0 / static_cast<double>(n - 1);
            if (achieved) (*achieved)[i] = static_cast<double>(n - 1);
        }
        return p;
    }
    const double target_h = std::log(perplexity);
    parallel_for(n, [&](std::size_t i) {
        std::vector<double> dist(n);
        double dmin = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            dist[j] = j == i ? 0.0 : squared_distance(x.row(i), x.row(j));
            if (j != i) dmin = std::min(dmin, dist[j]);
        }
        double beta = 1.0, lo = 0.0, hi = std::numeric_limits<double>::infinity();
        auto row = p.row(i);
        double h = 0.0;
        for (int it = 0; it < 200; ++it) {
            double sum = 0.0, wsum = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) {
                    row[j] = 0.0;
                    continue;
                }
                const double shifted = dist[j] - dmin;
                row[j] = std::exp(-beta * shifted);
                sum += row[j];
                wsum += shifted * row[j];
            }
            // H = log(sum) + beta * E[d]
            h = std::log(sum) + beta * wsum / sum;
            for (std::size_t j = 0; j < n; ++j) row[j] /= sum;
            const double diff = h - target_h;
            if (std::abs(std::exp(h) - perplexity) < 1e-7 * perplexity) break;
            if (diff > 0.0) {
                lo = beta;
                beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
            } else {
                hi = beta;
                beta = 0.5 * (beta + lo);
            }
        }
        if (achieved) (*achieved)[i] = std::exp(h);
    });
    return p;
}

Matrix joint_affinities(const Matrix& conditional) {
    const std::size_t n = conditional.rows();
    Matrix p(n, n);
    const double denom = 2.0 * static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) p(i, j) = (conditional(i, j) + conditional(j, i)) / denom;
    return p;
}

namespace {

/// Unnormalized Student-t kernel (1 + |yi - yj|^2)^-1 and its total.
double student_kernel(const Matrix& y, Matrix& num) {
    const std::size_t n = y.rows();
    num = Matrix(n, n);
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            num(i, j) = 1.0 / (1.0 + squared_distance(y.row(i), y.row(j)));
            z += num(i, j);
        }
    return z;
}

}  // namespace

double kl_divergence(const Matrix& joint_p, const Matrix& y) {
    Matrix num;
    const double z = student_kernel(y, num);
    const std::size_t n = y.rows();
    double kl = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double pij = joint_p(i, j);
            if (i == j || pij <= 0.0) continue;
            const double q = std::max(num(i, j) / z, std::numeric_limits<double>::min());
            kl += pij * std::log(pij / q);
        }
    return kl;
}

Matrix kl_gradient(const Matrix& joint_p, const Matrix& y) {
    Matrix num;
    const double z = student_kernel(y, num);
    const std::size_t n = y.rows();
    Matrix grad(n, 2);
    parallel_for(n, [&](std::size_t i) {
        double g0 = 0.0, g1 = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const double mult = (joint_p(i, j) - num(i, j) / z) * num(i, j);
            g0 += mult * (y(i, 0) - y(j, 0));
            g1 += mult * (y(i, 1) - y(j, 1));
        }
        grad(i, 0) = 4.0 * g0;
        grad(i, 1) = 4.0 * g1;
    });
    return grad;
}

Embedding2D tsne_2d(const Matrix& x, const TsneConfig& cfg, std::span<const int> labels) {
    const std::size_t n = x.rows();
    if (n < 2) throw ConfigError("t-SNE needs at least 2 points");
    if (n > 5000) throw ConfigError("exact t-SNE is limited to 5000 points");
    if (n >= 4 && (cfg.perplexity >= static_cast<double>(n) / 3.0 || cfg.perplexity <= 1.0))
        throw PerplexityInfeasible("perplexity must satisfy 1 < perplexity < n/3");
    if (cfg.iterations < 1) throw ConfigError("iterations must be >= 1");

    const Matrix p = joint_affinities(conditional_affinities(x, cfg.perplexity));
    Matrix p_exag = p;
    for (double& v : p_exag.data()) v *= cfg.early_exaggeration;

    Rng rng(derive_seed(cfg.seed, 0x75E));
    Matrix y(n, 2);
    for (double& v : y.data()) v = rng.normal(0.0, 1e-4);
    Matrix update(n, 2), gains(n, 2, 1.0);

    Embedding2D e;
    e.method = Method::tsne;
    e.labels.assign(labels.begin(), labels.end());
    for (std::size_t it = 0; it < cfg.iterations; ++it) {
        const bool exaggerate = it < cfg.exaggeration_iterations;
        const Matrix grad = kl_gradient(exaggerate ? p_exag : p, y);
        const double momentum = it < cfg.momentum_switch_iteration ? cfg.initial_momentum : cfg.final_momentum;
        for (std::size_t k = 0; k < grad.data().size(); ++k) {
            const double g = grad.data()[k];
            double& gain = gains.data()[k];
            double& u = update.data()[k];
            gain = (g > 0.0) != (u > 0.0) ? gain + 0.2 : gain * 0.8;
            gain = std::max(gain, 0.01);
            u = momentum * u - cfg.learning_rate * gain * g;
            y.data()[k] += u;
        }
        for (std::size_t c = 0; c < 2; ++c) {
            double mean = 0.0;
            for (std::size_t i = 0; i < n; ++i) mean += y(i, c);
            mean /= static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i) y(i, c) -= mean;
        }
        e.kl_trace.push_back(kl_divergence(p, y));
    }
    e.points = std::move(y);
    return e;
}

std::string_view method_name(Method m) { return m == Method::pca ? "pca" : "tsne"; }

std::string embedding_csv(const Embedding2D& e) {
    std::string out = "x,y,label\n";
    for (std::size_t i = 0; i < e.points.rows(); ++i) {
        out += telemetry::format_number(e.points(i, 0));
        out += ',';
        out += telemetry::format_number(e.points(i, 1));
        out += ',';
        out += i < e.labels.size() ? std::to_string(e.labels[i]) : std::string();
        out += '\n';
    }
    return out;
}

nlohmann::json diagnostics_json(const Embedding2D& e) {
    nlohmann::json j;
    j["schema_version"] = io::kSchemaVersion;
    j["method"] = std::string(method_name(e.method));
    j["n_points"] = e.points.rows();
    if (e.method == Method::pca) {
        j["explained_variance_ratio"] = e.explained_variance_ratio;
        j["eigenvalues"] = e.eigenvalues;
    } else {
        j["kl_trace"] = e.kl_trace;
    }
    j["warning"] = e.warning ? nlohmann::json(*e.warning) : nlohmann::json(nullptr);
    return j;
}

}  // namespace occupilot::dimred
