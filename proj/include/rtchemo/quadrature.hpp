#pragma once

// Rules for integrals of the form  int exp(-s^2) g(s) ds  ~  sum_i w_i g(s_i).

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "rtchemo/errors.hpp"

namespace rtchemo {

enum class QuadratureRule { GaussHermite, Trapezoid };

inline std::string_view to_string(QuadratureRule r) {
    return r == QuadratureRule::GaussHermite ? "gauss-hermite" : "trapezoid";
}

inline QuadratureRule quadrature_rule_from_string(std::string_view s) {
    if (s == "gauss-hermite") return QuadratureRule::GaussHermite;
    if (s == "trapezoid") return QuadratureRule::Trapezoid;
    throw UnsupportedOrder("unknown quadrature rule '" + std::string(s) + "'");
}

struct QuadratureTable {
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline constexpr int kMaxGaussHermiteOrder = 256;
inline constexpr int kMaxTrapezoidOrder = 4096;

// Gauss-Hermite nodes and weights by Newton iteration on the orthonormal
// Hermite recurrence, seeded with the usual asymptotic root estimates.
inline QuadratureTable gauss_hermite(int n) {
    if (n < 2 || n > kMaxGaussHermiteOrder)
        throw UnsupportedOrder("gauss-hermite order must be in [2, " +
                               std::to_string(kMaxGaussHermiteOrder) + "], got " + std::to_string(n));
    const double pim4 = std::pow(std::numbers::pi, -0.25);
    QuadratureTable tab;
    tab.nodes.assign(n, 0.0);
    tab.weights.assign(n, 0.0);
    const int m = (n + 1) / 2;
    double z = 0.0;
    for (int i = 0; i < m; ++i) {
        if (i == 0)
            z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
        else if (i == 1)
            z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
        else if (i == 2)
            z = 1.86 * z - 0.86 * tab.nodes[0];
        else if (i == 3)
            z = 1.91 * z - 0.91 * tab.nodes[1];
        else
            z = 2.0 * z - tab.nodes[i - 2];
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = pim4;
            double p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / (j + 1.0)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1.0)) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            const double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) break;
        }
        tab.nodes[i] = z;
        tab.nodes[n - 1 - i] = -z;
        tab.weights[i] = 2.0 / (pp * pp);
        tab.weights[n - 1 - i] = tab.weights[i];
    }
    return tab;
}

// Trapezoid rule for the Gaussian weight on [-L, L]. For integrands analytic in
// a strip it converges geometrically in n, which Gauss-Hermite does not when
// the integrand has poles close to the real axis.
inline QuadratureTable gaussian_trapezoid(int n) {
    if (n < 2 || n > kMaxTrapezoidOrder)
        throw UnsupportedOrder("trapezoid order must be in [2, " + std::to_string(kMaxTrapezoidOrder) +
                               "], got " + std::to_string(n));
    const double L = std::min(5.5, std::sqrt(std::numbers::pi * (n - 1) / 2.0));
    const double h = 2.0 * L / (n - 1);
    QuadratureTable tab;
    tab.nodes.resize(n);
    tab.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        const double s = -L + h * i;
        tab.nodes[i] = s;
        tab.weights[i] = h * std::exp(-s * s) * ((i == 0 || i == n - 1) ? 0.5 : 1.0);
    }
    return tab;
}

inline QuadratureTable gaussian_rule(QuadratureRule rule, int n) {
    return rule == QuadratureRule::GaussHermite ? gauss_hermite(n) : gaussian_trapezoid(n);
}

}  // namespace rtchemo
