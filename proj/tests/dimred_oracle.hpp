#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "occupilot/matrix.hpp"

namespace testing {

using Vec3 = std::array<double, 3>;

/// Eigenvalues of a symmetric 3x3 matrix by the trigonometric solution of the
/// characteristic cubic, descending.
inline Vec3 eigenvalues3(const occupilot::Matrix& a) {
    const double p1 = a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2);
    const double q = (a(0, 0) + a(1, 1) + a(2, 2)) / 3.0;
    if (p1 == 0.0) {
        Vec3 v{a(0, 0), a(1, 1), a(2, 2)};
        std::sort(v.begin(), v.end(), std::greater<>());
        return v;
    }
    const double p2 = (a(0, 0) - q) * (a(0, 0) - q) + (a(1, 1) - q) * (a(1, 1) - q) +
                      (a(2, 2) - q) * (a(2, 2) - q) + 2.0 * p1;
    const double p = std::sqrt(p2 / 6.0);
    occupilot::Matrix b(3, 3);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) b(i, j) = (a(i, j) - (i == j ? q : 0.0)) / p;
    const double det = b(0, 0) * (b(1, 1) * b(2, 2) - b(1, 2) * b(2, 1)) -
                       b(0, 1) * (b(1, 0) * b(2, 2) - b(1, 2) * b(2, 0)) +
                       b(0, 2) * (b(1, 0) * b(2, 1) - b(1, 1) * b(2, 0));
    const double r = std::clamp(det / 2.0, -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;
    const double e1 = q + 2.0 * p * std::cos(phi);
    const double e3 = q + 2.0 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
    const double e2 = 3.0 * q - e1 - e3;
    return {e1, e2, e3};
}

/// Unit eigenvector for eigenvalue `lambda`: the largest cross product of two
/// rows of (A - lambda I), with its largest-magnitude entry made positive.
inline Vec3 eigenvector3(const occupilot::Matrix& a, double lambda) {
    std::array<Vec3, 3> rows;
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) rows[i][j] = a(i, j) - (i == j ? lambda : 0.0);
    auto cross = [](const Vec3& u, const Vec3& v) {
        return Vec3{u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]};
    };
    Vec3 best{};
    double best_norm = -1.0;
    for (auto [i, j] : {std::pair{0, 1}, std::pair{0, 2}, std::pair{1, 2}}) {
        const auto c = cross(rows[static_cast<std::size_t>(i)], rows[static_cast<std::size_t>(j)]);
        const double n = c[0] * c[0] + c[1] * c[1] + c[2] * c[2];
        if (n > best_norm) best_norm = n, best = c;
    }
    const double n = std::sqrt(best_norm);
    for (auto& v : best) v /= n;
    std::size_t big = 0;
    for (std::size_t k = 1; k < 3; ++k)
        if (std::abs(best[k]) > std::abs(best[big])) big = k;
    if (best[big] < 0.0)
        for (auto& v : best) v = -v;
    return best;
}

}  // namespace testing
