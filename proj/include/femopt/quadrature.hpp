#ifndef FEMOPT_QUADRATURE_HPP
#define FEMOPT_QUADRATURE_HPP

#include <cmath>
#include <numbers>
#include <vector>

#include "femopt/error.hpp"
#include "femopt/mesh.hpp"
#include "femopt/point.hpp"

namespace femopt {

/// Points and weights on a reference element: [0,1], [0,1]^2 or the unit
/// triangle {(0,0), (1,0), (0,1)}.
struct QuadratureRule {
    std::vector<Point> points;
    std::vector<double> weights;

    std::size_t size() const { return weights.size(); }
};

/// n-point Gauss-Legendre rule mapped to [0,1]; exact for degree 2n-1.
inline QuadratureRule gauss_legendre(int n) {
    if (n < 1) throw FemError("quadrature needs at least one point");
    QuadratureRule rule;
    rule.points.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    // Returns P_n(z) and P_n'(z) by the three-term recurrence.
    auto legendre = [n](double z, double& dp) {
        double p0 = 1.0, p1 = z;
        for (int k = 2; k <= n; ++k) {
            const double pk = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = pk;
        }
        dp = n * (z * p1 - p0) / (z * z - 1.0);
        return p1;
    };
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 1.0;
        for (int it = 0; it < 100; ++it) {
            const double dz = legendre(z, dp) / dp;
            z -= dz;
            if (std::fabs(dz) < 1e-16) break;
        }
        legendre(z, dp);
        const double w = 2.0 / ((1.0 - z * z) * dp * dp);
        // z is in (-1, 1) descending; map to [0,1] ascending.
        const auto lo = static_cast<std::size_t>(i);
        const auto hi = static_cast<std::size_t>(n - 1 - i);
        rule.points[lo] = {0.5 * (1.0 - z), 0.0};
        rule.points[hi] = {0.5 * (1.0 + z), 0.0};
        rule.weights[lo] = 0.5 * w;
        rule.weights[hi] = 0.5 * w;
    }
    if (n % 2 == 1) rule.points[static_cast<std::size_t>(n / 2)].x = 0.5;
    return rule;
}

inline QuadratureRule tensor_rule(const QuadratureRule& line) {
    QuadratureRule rule;
    for (std::size_t j = 0; j < line.size(); ++j)
        for (std::size_t i = 0; i < line.size(); ++i) {
            rule.points.push_back({line.points[i].x, line.points[j].x});
            rule.weights.push_back(line.weights[i] * line.weights[j]);
        }
    return rule;
}

/// Collapsed (Duffy) product rule on the unit triangle from n Gauss points per
/// direction; exact for total degree 2n-2.
inline QuadratureRule collapsed_triangle_rule(int n) {
    const QuadratureRule line = gauss_legendre(n);
    QuadratureRule rule;
    for (std::size_t j = 0; j < line.size(); ++j) {
        const double eta = line.points[j].x;
        for (std::size_t i = 0; i < line.size(); ++i) {
            const double xi = line.points[i].x;
            rule.points.push_back({xi * (1.0 - eta), eta});
            rule.weights.push_back(line.weights[i] * line.weights[j] * (1.0 - eta));
        }
    }
    return rule;
}

/// Rule used for assembly and error integrals at degree p: p+2 Gauss points
/// per direction, and a collapsed rule of at least the same strength on
/// triangles.
inline QuadratureRule element_rule(ElementKind kind, int p) {
    const int n = p + 2;
    switch (kind) {
    case ElementKind::Interval: return gauss_legendre(n);
    case ElementKind::Quad: return tensor_rule(gauss_legendre(n));
    case ElementKind::Triangle: return collapsed_triangle_rule(n + 1);
    }
    return {};
}

} // namespace femopt

#endif
