#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "occupilot/svm.hpp"

namespace testing {

using occupilot::Matrix;
using occupilot::svm::KernelSpec;

// Independent KKT check from the stored model: max over I_up of -y*grad minus
// min over I_low of -y*grad.
inline double kkt_gap(const occupilot::svm::SvmModel& m, const Matrix& x, std::span<const int> labels) {
    const std::size_t n = x.rows();
    std::vector<double> alpha(n, 0.0);
    for (std::size_t k = 0; k < m.support_index.size(); ++k) alpha[m.support_index[k]] = std::abs(m.dual_coeffs[k]);
    double up = -std::numeric_limits<double>::infinity(), low = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const double y = labels[i] == 1 ? 1.0 : -1.0;
        double f = 0.0;
        for (std::size_t k = 0; k < m.support_index.size(); ++k)
            f += m.dual_coeffs[k] * m.kernel(m.support_vectors.row(k), x.row(i));
        const double grad = y * f - 1.0;
        const double v = -y * grad;
        const bool in_up = (y > 0 && alpha[i] < m.C) || (y < 0 && alpha[i] > 0);
        const bool in_low = (y > 0 && alpha[i] > 0) || (y < 0 && alpha[i] < m.C);
        if (in_up) up = std::max(up, v);
        if (in_low) low = std::min(low, v);
    }
    return up - low;
}

// Accelerated projected gradient on the 2m-variable SVR dual. Projection onto
// the box intersected with sum(a) - sum(a*) = 0 by bisection on the multiplier.
inline double svr_oracle(const Matrix& x, std::span<const double> t, const KernelSpec& kernel, double C, double eps) {
    const std::size_t m = x.rows(), n = 2 * m;
    Matrix k(m, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) k(i, j) = kernel(x.row(i), x.row(j));
    std::vector<double> sgn(n);
    for (std::size_t v = 0; v < n; ++v) sgn[v] = v < m ? 1.0 : -1.0;
    auto beta = [&](const std::vector<double>& a, std::size_t i) { return a[i] - a[i + m]; };
    auto objective = [&](const std::vector<double>& a) {
        double f = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < m; ++j) f += 0.5 * beta(a, i) * beta(a, j) * k(i, j);
            f += eps * (a[i] + a[i + m]) - t[i] * beta(a, i);
        }
        return f;
    };
    auto gradient = [&](const std::vector<double>& a) {
        std::vector<double> g(n);
        for (std::size_t i = 0; i < m; ++i) {
            double kb = 0.0;
            for (std::size_t j = 0; j < m; ++j) kb += k(i, j) * beta(a, j);
            g[i] = kb + eps - t[i];
            g[i + m] = -kb + eps + t[i];
        }
        return g;
    };
    auto project = [&](const std::vector<double>& v) {
        auto at = [&](double mu) {
            std::vector<double> a(n);
            double s = 0.0;
            for (std::size_t q = 0; q < n; ++q) {
                a[q] = std::clamp(v[q] - mu * sgn[q], 0.0, C);
                s += sgn[q] * a[q];
            }
            return std::pair{a, s};
        };
        const auto [vmin, vmax] = std::minmax_element(v.begin(), v.end());
        double lo = *vmin - C - 1.0, hi = *vmax + C + 1.0;  // s(mu) is non-increasing in mu
        for (int it = 0; it < 80; ++it) {
            const double mid = 0.5 * (lo + hi);
            (at(mid).second > 0.0 ? lo : hi) = mid;
        }
        return at(0.5 * (lo + hi)).first;
    };
    double lip = 0.0;
    for (double v : k.data()) lip += v * v;
    lip = 2.0 * std::sqrt(lip);
    std::vector<double> a(n, 0.0), z = a;
    double tk = 1.0;
    for (int it = 0; it < 50000; ++it) {
        const auto g = gradient(z);
        std::vector<double> step(n);
        for (std::size_t q = 0; q < n; ++q) step[q] = z[q] - g[q] / lip;
        const auto next = project(step);
        double restart = 0.0;
        for (std::size_t q = 0; q < n; ++q) restart += (z[q] - next[q]) * (next[q] - a[q]);
        if (restart > 0.0) tk = 1.0;
        const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
        for (std::size_t q = 0; q < n; ++q) z[q] = next[q] + (tk - 1.0) / tn * (next[q] - a[q]);
        a = next;
        tk = tn;
    }
    return objective(a);
}

}  // namespace testing
