#include "occupilot/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "occupilot/errors.hpp"
#include "occupilot/io.hpp"

namespace occupilot::svm {

double KernelSpec::operator()(std::span<const double> a, std::span<const double> b) const {
    if (kind == KernelKind::linear) return dot(a, b);
    return std::exp(-gamma * squared_distance(a, b));
}

void KernelSpec::validate() const {
    if (kind == KernelKind::rbf && !(gamma > 0.0 && std::isfinite(gamma)))
        throw ConfigError("rbf kernel needs gamma > 0");
}

double default_gamma(const Matrix& x) {
    const auto& v = x.data();
    if (v.empty()) return 1.0;
    double mean = 0.0;
    for (double e : v) mean += e;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double e : v) var += (e - mean) * (e - mean);
    var /= static_cast<double>(v.size());
    if (!(var > 0.0)) return 1.0;
    return 1.0 / (static_cast<double>(x.cols()) * var);
}

double SvmModel::decision(std::span<const double> x) const {
    if (x.size() != dim()) throw DimensionMismatch(dim(), x.size());
    double f = bias;
    for (std::size_t i = 0; i < dual_coeffs.size(); ++i) f += dual_coeffs[i] * kernel(support_vectors.row(i), x);
    return f;
}

namespace detail {

namespace {
constexpr double kTau = 1e-12;
}

QpSolution solve_qp(const QpProblem& pb) {
    const std::size_t n = pb.p.size();
    const std::size_t m = pb.n_samples;
    const double C = pb.C;
    auto K = [&](std::size_t s, std::size_t t) { return pb.kernel[pb.sample[s] * m + pb.sample[t]]; };

    QpSolution sol;
    sol.alpha.assign(n, 0.0);
    std::vector<double> G(pb.p);
    std::vector<double>& a = sol.alpha;
    auto at_upper = [&](std::size_t t) { return a[t] >= C; };
    auto at_lower = [&](std::size_t t) { return a[t] <= 0.0; };
    auto objective = [&] {
        double f = 0.0;
        for (std::size_t t = 0; t < n; ++t) f += a[t] * (G[t] + pb.p[t]);
        return 0.5 * f;
    };

    std::size_t iter = 0;
    sol.converged = false;
    while (true) {
        // first index: maximal violation in I_up
        double gmax = -std::numeric_limits<double>::infinity();
        std::size_t i = n;
        for (std::size_t t = 0; t < n; ++t) {
            if (pb.y[t] == +1) {
                if (!at_upper(t) && -G[t] >= gmax) { gmax = -G[t]; i = t; }
            } else {
                if (!at_lower(t) && G[t] >= gmax) { gmax = G[t]; i = t; }
            }
        }
        // second index: largest guaranteed decrease among I_low
        double gmax2 = -std::numeric_limits<double>::infinity();
        double best = std::numeric_limits<double>::infinity();
        std::size_t j = n;
        if (i < n) {
            const double kii = K(i, i);
            for (std::size_t t = 0; t < n; ++t) {
                double grad_diff;
                if (pb.y[t] == +1) {
                    if (at_lower(t)) continue;
                    gmax2 = std::max(gmax2, G[t]);
                    grad_diff = gmax + G[t];
                } else {
                    if (at_upper(t)) continue;
                    gmax2 = std::max(gmax2, -G[t]);
                    grad_diff = gmax - G[t];
                }
                if (grad_diff > 0.0) {
                    double quad = kii + K(t, t) - 2.0 * K(i, t);
                    if (quad <= 0.0) quad = kTau;
                    const double obj_diff = -(grad_diff * grad_diff) / quad;
                    if (obj_diff <= best) { best = obj_diff; j = t; }
                }
            }
        }
        sol.kkt_residual = (i < n && std::isfinite(gmax2)) ? std::max(0.0, gmax + gmax2) : 0.0;
        if (i == n || j == n || gmax + gmax2 < pb.tol) {
            sol.converged = true;
            break;
        }
        if (iter >= pb.max_iterations) break;
        ++iter;

        const double old_ai = a[i], old_aj = a[j];
        double quad = K(i, i) + K(j, j) - 2.0 * K(i, j);
        if (quad <= 0.0) quad = kTau;
        if (pb.y[i] != pb.y[j]) {
            const double delta = (-G[i] - G[j]) / quad;
            const double diff = a[i] - a[j];
            a[i] += delta;
            a[j] += delta;
            if (diff > 0.0) {
                if (a[j] < 0.0) { a[j] = 0.0; a[i] = diff; }
            } else {
                if (a[i] < 0.0) { a[i] = 0.0; a[j] = -diff; }
            }
            if (diff > 0.0) {
                if (a[i] > C) { a[i] = C; a[j] = C - diff; }
            } else {
                if (a[j] > C) { a[j] = C; a[i] = C + diff; }
            }
        } else {
            const double delta = (G[i] - G[j]) / quad;
            const double sum = a[i] + a[j];
            a[i] -= delta;
            a[j] += delta;
            if (sum > C) {
                if (a[i] > C) { a[i] = C; a[j] = sum - C; }
            } else {
                if (a[j] < 0.0) { a[j] = 0.0; a[i] = sum; }
            }
            if (sum > C) {
                if (a[j] > C) { a[j] = C; a[i] = sum - C; }
            } else {
                if (a[i] < 0.0) { a[i] = 0.0; a[j] = sum; }
            }
        }
        const double dai = (a[i] - old_ai) * pb.y[i];
        const double daj = (a[j] - old_aj) * pb.y[j];
        for (std::size_t t = 0; t < n; ++t) G[t] += pb.y[t] * (K(i, t) * dai + K(j, t) * daj);

        if (iter % n == 0) sol.objective_trace.push_back(objective());
    }
    sol.iterations = iter;
    sol.objective = objective();
    if (sol.objective_trace.empty() || sol.objective_trace.back() != sol.objective)
        sol.objective_trace.push_back(sol.objective);

    // offset from free variables, midpoint of the feasible interval otherwise
    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    double sum_free = 0.0;
    std::size_t n_free = 0;
    for (std::size_t t = 0; t < n; ++t) {
        const double yg = pb.y[t] * G[t];
        if (at_upper(t)) {
            if (pb.y[t] == -1) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else if (at_lower(t)) {
            if (pb.y[t] == +1) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else {
            ++n_free;
            sum_free += yg;
        }
    }
    if (n_free > 0) sol.rho = sum_free / static_cast<double>(n_free);
    else if (std::isfinite(ub) && std::isfinite(lb)) sol.rho = 0.5 * (ub + lb);
    else sol.rho = std::isfinite(ub) ? ub : (std::isfinite(lb) ? lb : 0.0);
    return sol;
}

}  // namespace detail

namespace {

std::vector<double> kernel_matrix(const Matrix& x, const KernelSpec& k) {
    const std::size_t m = x.rows();
    std::vector<double> out(m * m);
    for (std::size_t i = 0; i < m; ++i) {
        out[i * m + i] = k(x.row(i), x.row(i));
        for (std::size_t j = i + 1; j < m; ++j) out[i * m + j] = out[j * m + i] = k(x.row(i), x.row(j));
    }
    return out;
}

void check_common(const Matrix& x, double C, double tol, const KernelSpec& kernel) {
    if (!(C > 0.0)) throw ConfigError("C must be > 0");
    if (!(tol > 0.0)) throw ConfigError("tol must be > 0");
    if (x.empty()) throw ConfigError("no training rows");
    kernel.validate();
}

template <typename Model>
void store_support(Model& model, const Matrix& x, const std::vector<double>& coef) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < coef.size(); ++i)
        if (coef[i] != 0.0) idx.push_back(i);
    model.support_vectors = x.select_rows(idx);
    if (idx.empty()) model.support_vectors = Matrix(0, x.cols());
    model.support_index = idx;
    model.dual_coeffs.clear();
    for (auto i : idx) model.dual_coeffs.push_back(coef[i]);
}

}  // namespace

SvmModel train_svc(const Matrix& features, std::span<const int> labels, const SvcParams& params) {
    check_common(features, params.C, params.tol, params.kernel);
    if (labels.size() != features.rows()) throw LengthMismatch("labels length differs from row count");
    bool has0 = false, has1 = false;
    for (int l : labels) (l == 1 ? has1 : has0) = true;
    if (!has0 || !has1) throw SingleClass();

    const std::size_t m = features.rows();
    detail::QpProblem pb;
    pb.kernel = kernel_matrix(features, params.kernel);
    pb.n_samples = m;
    pb.sample.resize(m);
    pb.p.assign(m, -1.0);
    pb.y.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        pb.sample[i] = i;
        pb.y[i] = labels[i] == 1 ? +1 : -1;
    }
    pb.C = params.C;
    pb.tol = params.tol;
    pb.max_iterations = params.max_passes;
    const auto sol = detail::solve_qp(pb);

    SvmModel model;
    std::vector<double> coef(m);
    for (std::size_t i = 0; i < m; ++i) coef[i] = sol.alpha[i] * pb.y[i];
    store_support(model, features, coef);
    model.bias = -sol.rho;
    model.kernel = params.kernel;
    model.C = params.C;
    model.tol = params.tol;
    model.seed = params.seed;
    model.converged = sol.converged;
    model.iterations = sol.iterations;
    model.kkt_residual = sol.kkt_residual;
    model.objective_trace = sol.objective_trace;
    return model;
}

SvrModel train_svr(const Matrix& features, std::span<const double> targets, const SvrParams& params) {
    check_common(features, params.C, params.tol, params.kernel);
    if (!(params.epsilon >= 0.0)) throw ConfigError("epsilon must be >= 0");
    if (targets.size() != features.rows()) throw LengthMismatch("targets length differs from row count");

    const std::size_t m = features.rows();
    detail::QpProblem pb;
    pb.kernel = kernel_matrix(features, params.kernel);
    pb.n_samples = m;
    pb.sample.resize(2 * m);
    pb.p.resize(2 * m);
    pb.y.resize(2 * m);
    for (std::size_t i = 0; i < m; ++i) {
        pb.sample[i] = pb.sample[i + m] = i;
        pb.p[i] = params.epsilon - targets[i];
        pb.y[i] = +1;
        pb.p[i + m] = params.epsilon + targets[i];
        pb.y[i + m] = -1;
    }
    pb.C = params.C;
    pb.tol = params.tol;
    pb.max_iterations = params.max_passes;
    const auto sol = detail::solve_qp(pb);

    SvrModel model;
    std::vector<double> coef(m);
    for (std::size_t i = 0; i < m; ++i) coef[i] = sol.alpha[i] - sol.alpha[i + m];
    store_support(model, features, coef);
    model.bias = -sol.rho;
    model.kernel = params.kernel;
    model.C = params.C;
    model.tol = params.tol;
    model.epsilon = params.epsilon;
    model.converged = sol.converged;
    model.iterations = sol.iterations;
    model.kkt_residual = sol.kkt_residual;
    model.objective_trace = sol.objective_trace;
    return model;
}

std::vector<double> decision_values(const SvmModel& model, const Matrix& features) {
    std::vector<double> out;
    out.reserve(features.rows());
    if (features.rows() > 0 && features.cols() != model.dim()) throw DimensionMismatch(model.dim(), features.cols());
    for (std::size_t r = 0; r < features.rows(); ++r) out.push_back(model.decision(features.row(r)));
    return out;
}

std::vector<int> predict(const SvmModel& model, const Matrix& features) {
    std::vector<int> out;
    for (double f : decision_values(model, features)) out.push_back(f >= 0.0 ? 1 : 0);
    return out;
}

std::vector<double> predict(const SvrModel& model, const Matrix& features) {
    return decision_values(model, features);
}

double epsilon_insensitive_loss(double prediction, double target, double epsilon) {
    const double r = std::abs(prediction - target);
    return r >= epsilon ? r - epsilon : 0.0;
}

double regression_risk(const SvrModel& model, const Matrix& features, std::span<const double> targets) {
    if (targets.size() != features.rows()) throw LengthMismatch("targets length differs from row count");
    double loss = 0.0;
    for (std::size_t r = 0; r < features.rows(); ++r)
        loss += epsilon_insensitive_loss(model.decision(features.row(r)), targets[r], model.epsilon);
    double w2 = 0.0;
    for (std::size_t i = 0; i < model.dual_coeffs.size(); ++i)
        for (std::size_t j = 0; j < model.dual_coeffs.size(); ++j)
            w2 += model.dual_coeffs[i] * model.dual_coeffs[j] *
                  model.kernel(model.support_vectors.row(i), model.support_vectors.row(j));
    return model.C * loss + 0.5 * w2;
}

double svr_dual_objective(const SvrModel& model, std::span<const double> targets) {
    const auto& b = model.dual_coeffs;
    double quad = 0.0, lin = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j)
            quad += b[i] * b[j] * model.kernel(model.support_vectors.row(i), model.support_vectors.row(j));
        lin += model.epsilon * std::abs(b[i]) - targets[model.support_index[i]] * b[i];
    }
    return 0.5 * quad + lin;
}

std::size_t margin_violations(const SvmModel& model, const Matrix& features, std::span<const int> labels) {
    std::size_t n = 0;
    for (std::size_t r = 0; r < features.rows(); ++r) {
        const double y = labels[r] == 1 ? 1.0 : -1.0;
        if (y * model.decision(features.row(r)) < 1.0) ++n;
    }
    return n;
}

namespace {

nlohmann::json base_json(const SvmModel& m, const char* kind) {
    nlohmann::json j;
    j["schema_version"] = io::kSchemaVersion;
    j["model"] = kind;
    j["kernel"] = {{"kind", m.kernel.kind == KernelKind::linear ? "linear" : "rbf"}, {"gamma", m.kernel.gamma}};
    j["C"] = m.C;
    j["tol"] = m.tol;
    j["seed"] = m.seed;
    j["bias"] = m.bias;
    j["converged"] = m.converged;
    j["iterations"] = m.iterations;
    j["kkt_residual"] = m.kkt_residual;
    j["dual_coeffs"] = m.dual_coeffs;
    j["support_index"] = m.support_index;
    j["dim"] = m.dim();
    j["support_vectors"] = m.support_vectors.data();
    return j;
}

void read_base(const nlohmann::json& j, SvmModel& m) {
    if (j.value("schema_version", 0) != io::kSchemaVersion) throw Error("unsupported model schema_version");
    const auto& k = j.at("kernel");
    m.kernel.kind = k.at("kind").get<std::string>() == "linear" ? KernelKind::linear : KernelKind::rbf;
    m.kernel.gamma = k.at("gamma").get<double>();
    m.C = j.at("C").get<double>();
    m.tol = j.at("tol").get<double>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.bias = j.at("bias").get<double>();
    m.converged = j.at("converged").get<bool>();
    m.iterations = j.at("iterations").get<std::size_t>();
    m.kkt_residual = j.at("kkt_residual").get<double>();
    m.dual_coeffs = j.at("dual_coeffs").get<std::vector<double>>();
    m.support_index = j.at("support_index").get<std::vector<std::size_t>>();
    const auto dim = j.at("dim").get<std::size_t>();
    m.support_vectors = Matrix(m.dual_coeffs.size(), dim);
    m.support_vectors.data() = j.at("support_vectors").get<std::vector<double>>();
    if (m.support_vectors.data().size() != m.dual_coeffs.size() * dim)
        throw Error("support vector block has the wrong size");
}

}  // namespace

nlohmann::json to_json(const SvmModel& model) { return base_json(model, "svm"); }

SvmModel svm_from_json(const nlohmann::json& doc) {
    if (doc.value("model", "") != "svm") throw Error("not an svm model");
    SvmModel m;
    read_base(doc, m);
    return m;
}

nlohmann::json to_json(const SvrModel& model) {
    auto j = base_json(model, "svr");
    j["epsilon"] = model.epsilon;
    return j;
}

SvrModel svr_from_json(const nlohmann::json& doc) {
    if (doc.value("model", "") != "svr") throw Error("not an svr model");
    SvrModel m;
    read_base(doc, m);
    m.epsilon = doc.at("epsilon").get<double>();
    return m;
}

}  // namespace occupilot::svm
