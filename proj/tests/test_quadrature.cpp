#include <gtest/gtest.h>

#include <cmath>

#include "femopt/lagrange.hpp"
#include "femopt/quadrature.hpp"

using namespace femopt;

namespace {

// Exact integral of x^a y^b over the unit triangle: a! b! / (a+b+2)!.
double triangle_monomial(int a, int b) {
    return std::tgamma(a + 1.0) * std::tgamma(b + 1.0) / std::tgamma(a + b + 3.0);
}

double integrate(const QuadratureRule& q, int a, int b) {
    double s = 0.0;
    for (std::size_t k = 0; k < q.size(); ++k) s += q.weights[k] * std::pow(q.points[k].x, a) * std::pow(q.points[k].y, b);
    return s;
}

} // namespace

TEST(Quadrature, GaussLegendreExactness) {
    for (int n = 1; n <= 10; ++n) {
        const QuadratureRule q = gauss_legendre(n);
        for (int d = 0; d <= 2 * n - 1; ++d) EXPECT_NEAR(integrate(q, d, 0), 1.0 / (d + 1), 1e-14) << n << " " << d;
    }
    // Two-point rule by hand: nodes 1/2 +- 1/(2 sqrt 3).
    const QuadratureRule two = gauss_legendre(2);
    EXPECT_NEAR(two.points[0].x, 0.5 - 0.5 / std::sqrt(3.0), 1e-15);
    EXPECT_NEAR(two.weights[1], 0.5, 1e-15);
    EXPECT_THROW((void)gauss_legendre(0), FemError);
}

TEST(Quadrature, TriangleExactness) {
    for (int n = 1; n <= 8; ++n) {
        const QuadratureRule q = collapsed_triangle_rule(n);
        for (int a = 0; a <= 2 * n - 2; ++a)
            for (int b = 0; a + b <= 2 * n - 2; ++b)
                EXPECT_NEAR(integrate(q, a, b), triangle_monomial(a, b), 1e-14) << n << " " << a << " " << b;
        for (const auto& p : q.points) {
            EXPECT_GE(p.x, 0.0);
            EXPECT_GE(p.y, 0.0);
            EXPECT_LE(p.x + p.y, 1.0);
        }
    }
}

TEST(Quadrature, ElementRulesIntegrateMassIntegrand) {
    // Mass matrix entries have degree 2p per direction; stiffness less.
    for (int p = 1; p <= 5; ++p) {
        const QuadratureRule qi = element_rule(ElementKind::Interval, p);
        EXPECT_NEAR(integrate(qi, 2 * p + 2, 0), 1.0 / (2 * p + 3), 1e-14);
        const QuadratureRule qq = element_rule(ElementKind::Quad, p);
        EXPECT_NEAR(integrate(qq, 2 * p, 2 * p), 1.0 / ((2 * p + 1) * (2 * p + 1)), 1e-14);
        const QuadratureRule qt = element_rule(ElementKind::Triangle, p);
        EXPECT_NEAR(integrate(qt, p + 2, p + 2), triangle_monomial(p + 2, p + 2), 1e-15);
    }
}

class LagrangeTest : public ::testing::TestWithParam<std::tuple<ElementKind, int>> {};

TEST_P(LagrangeTest, NodalInterpolationAndPartitionOfUnity) {
    const auto [kind, p] = GetParam();
    const ReferenceElement el(kind, p);
    EXPECT_EQ(el.n_nodes(), dofs_per_element(kind, p));
    for (int i = 0; i < el.n_nodes(); ++i) {
        const BasisTable t = el.tabulate(el.nodes()[static_cast<std::size_t>(i)].ref, 2);
        for (int j = 0; j < el.n_nodes(); ++j) EXPECT_NEAR(t.values[static_cast<std::size_t>(j)], i == j ? 1.0 : 0.0, 1e-13);
    }
    const Point probe{0.23, kind == ElementKind::Interval ? 0.0 : 0.31};
    const BasisTable t = el.tabulate(probe, 2);
    double s = 0.0, gx = 0.0, gy = 0.0, hxx = 0.0, hxy = 0.0, hyy = 0.0;
    double xs = 0.0;
    for (int j = 0; j < el.n_nodes(); ++j) {
        const auto J = static_cast<std::size_t>(j);
        s += t.values[J];
        gx += t.grads[J][0];
        gy += t.grads[J][1];
        hxx += t.hessians[J][0];
        hxy += t.hessians[J][1];
        hyy += t.hessians[J][2];
        xs += t.values[J] * el.nodes()[J].ref.x * el.nodes()[J].ref.x;
    }
    EXPECT_NEAR(s, 1.0, 1e-13);
    EXPECT_NEAR(gx, 0.0, 1e-11);
    EXPECT_NEAR(gy, 0.0, 1e-11);
    EXPECT_NEAR(hxx, 0.0, 1e-9);
    EXPECT_NEAR(hxy, 0.0, 1e-9);
    EXPECT_NEAR(hyy, 0.0, 1e-9);
    if (p >= 2) EXPECT_NEAR(xs, probe.x * probe.x, 1e-13);
}

TEST_P(LagrangeTest, DerivativesMatchFiniteDifferences) {
    const auto [kind, p] = GetParam();
    const ReferenceElement el(kind, p);
    const double h = 1e-6;
    const Point x0{0.21, kind == ElementKind::Interval ? 0.0 : 0.37};
    const BasisTable t = el.tabulate(x0, 2);
    const BasisTable px = el.tabulate({x0.x + h, x0.y}, 1), mx = el.tabulate({x0.x - h, x0.y}, 1);
    const BasisTable py = el.tabulate({x0.x, x0.y + h}, 1), my = el.tabulate({x0.x, x0.y - h}, 1);
    for (std::size_t j = 0; j < t.values.size(); ++j) {
        EXPECT_NEAR(t.grads[j][0], (px.values[j] - mx.values[j]) / (2 * h), 1e-6);
        EXPECT_NEAR(t.hessians[j][0], (px.grads[j][0] - mx.grads[j][0]) / (2 * h), 1e-5);
        if (kind == ElementKind::Interval) continue;
        EXPECT_NEAR(t.grads[j][1], (py.values[j] - my.values[j]) / (2 * h), 1e-6);
        EXPECT_NEAR(t.hessians[j][1], (py.grads[j][0] - my.grads[j][0]) / (2 * h), 1e-5);
        EXPECT_NEAR(t.hessians[j][2], (py.grads[j][1] - my.grads[j][1]) / (2 * h), 1e-5);
    }
}

TEST_P(LagrangeTest, FacetNodesLieOnFacet) {
    const auto [kind, p] = GetParam();
    const ReferenceElement el(kind, p);
    for (std::size_t f = 0; f < el.facets().size(); ++f) {
        const auto& fn = el.facet_nodes(static_cast<int>(f));
        EXPECT_EQ(static_cast<int>(fn.size()), kind == ElementKind::Interval ? 1 : p + 1);
        const Point a = ReferenceElement::vertex_ref(kind, el.facets()[f][0]);
        const Point b = ReferenceElement::vertex_ref(kind, el.facets()[f][1]);
        for (int i : fn) {
            const Point q = el.nodes()[static_cast<std::size_t>(i)].ref;
            const double cross = (b.x - a.x) * (q.y - a.y) - (b.y - a.y) * (q.x - a.x);
            EXPECT_NEAR(cross, 0.0, 1e-15);
        }
    }
}

INSTANTIATE_TEST_SUITE_P(All, LagrangeTest,
                         ::testing::Combine(::testing::Values(ElementKind::Interval, ElementKind::Quad, ElementKind::Triangle),
                                            ::testing::Range(1, 6)));

TEST(Lagrange, RejectsDegree) {
    EXPECT_THROW(ReferenceElement(ElementKind::Quad, 0), FemError);
    EXPECT_THROW(ReferenceElement(ElementKind::Quad, 6), FemError);
}
