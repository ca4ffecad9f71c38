#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <random>

#include "femopt/analysis.hpp"
#include "femopt/solver.hpp"

using namespace femopt;

namespace {

std::shared_ptr<const Mesh> make_mesh(ElementKind kind, int level) {
    return std::make_shared<const Mesh>(build_mesh(dimension_of(kind), kind, level));
}

std::vector<double> solve_problem(const FeSpace& space, const ProblemSpec& ps) {
    const AssembledSystem sys = assemble(space, ps);
    return solve(sys.A, sys.F);
}

// Composite Simpson on [0,1], used as an independent integral oracle.
template <class F>
double simpson(F f, int n = 20000) {
    const double h = 1.0 / n;
    double s = f(0.0) + f(1.0);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(i * h);
    return s * h / 3.0;
}

} // namespace

TEST(Norm, ConstantAndPolynomials) {
    const FeSpace space(make_mesh(ElementKind::Interval, 3), 2);
    EXPECT_NEAR(l2_norm(space, space.interpolate(Expr(1.0))), 1.0, 1e-14);
    // ||(x-0.5)^2||^2 = 1/80
    EXPECT_NEAR(l2_norm(space, space.interpolate(parse("(x-0.5)^2"))), std::sqrt(1.0 / 80.0), 1e-14);

    const FeSpace quad(make_mesh(ElementKind::Quad, 2), 2);
    // ||x*y||^2 = 1/9
    EXPECT_NEAR(l2_norm(quad, quad.interpolate(parse("x*y"))), 1.0 / 3.0, 1e-14);
    const FeSpace tri(make_mesh(ElementKind::Triangle, 2), 3);
    // ||x^2 + y||^2 = 1/5 + 2/6 + 1/3
    EXPECT_NEAR(l2_norm(tri, tri.interpolate(parse("x^2+y"))), std::sqrt(0.2 + 1.0 / 3.0 + 1.0 / 3.0), 1e-14);
}

TEST(Norm, GaussianSolution) {
    const double exact = std::sqrt(simpson([](double x) { return std::exp(-2.0 * (x - 0.5) * (x - 0.5)); }));
    const FeSpace space(make_mesh(ElementKind::Interval, 6), 3);
    const double n = l2_norm(space, space.interpolate(parse("exp(-(x-0.5)^2)")));
    EXPECT_NEAR(n, exact, 1e-10);
    EXPECT_NEAR(n, 0.92, 0.01);
}

TEST(Error, ExactlyRepresentableInterpolant) {
    for (ElementKind k : {ElementKind::Interval, ElementKind::Quad, ElementKind::Triangle}) {
        const Expr u = dimension_of(k) == 1 ? parse("(x-0.5)^2") : parse("(x-0.5)^2+(x-0.5)*(y-0.5)+(y-0.5)^2");
        const FeSpace space(make_mesh(k, 2), 2);
        const auto U = space.interpolate(u);
        const ExactSolution ex(u);
        for (int d = 0; d <= 2; ++d) EXPECT_LE(l2_error(space, U, ex, d), 1e-12) << to_string(k) << " k=" << d;
    }
}

TEST(Error, HessianOfManufacturedSolution) {
    const Expr u = parse("(x-0.5)^2");
    const auto ps = ProblemSpec::manufactured(1, ExprMatrix::identity(), Expr(0.0), u);
    const FeSpace space(make_mesh(ElementKind::Interval, 5), 2);
    const auto U = solve_problem(space, ps);
    EXPECT_LE(l2_error(space, U, *ps.exact, 2), 1e-10);
}

TEST(Error, KnownInterpolationError) {
    // p = 1, one element, u = x^2: u_h = x, error^2 = int (x^2 - x)^2 = 1/30.
    const FeSpace space(make_mesh(ElementKind::Interval, 0), 1);
    const ExactSolution ex(parse("x^2"));
    const auto U = space.interpolate(parse("x^2"));
    EXPECT_NEAR(l2_error(space, U, ex, 0), std::sqrt(1.0 / 30.0), 1e-14);
    // derivative error: int (2x - 1)^2 = 1/3
    EXPECT_NEAR(l2_error(space, U, ex, 1), std::sqrt(1.0 / 3.0), 1e-14);
    EXPECT_THROW(l2_error(space, U, ex, 2), AnalysisError);
}

TEST(Error, ComponentsCombineInL2) {
    // u = x*y on Q1 is exact; compare u = x^2 y against a hand oracle.
    const FeSpace space(make_mesh(ElementKind::Quad, 0), 1);
    const auto U = space.interpolate(parse("x*y"));
    const ExactSolution ex(parse("x^2*y"));
    // error^2 = int (x^2 y - x y)^2 = int (x^2-x)^2 * int y^2 = 1/30 * 1/3
    EXPECT_NEAR(l2_error(space, U, ex, 0), std::sqrt(1.0 / 90.0), 1e-14);
    // grad: (y - 2xy, x - x^2) ->  int (1-2x)^2 y^2 + int (x-x^2)^2 = 1/9 + 1/30
    EXPECT_NEAR(l2_error(space, U, ex, 1), std::sqrt(1.0 / 9.0 + 1.0 / 30.0), 1e-14);
}

TEST(Error, PoissonOrderInAsymptoticRange) {
    const auto ps = ProblemSpec::manufactured(1, ExprMatrix::identity(), Expr(0.0), parse("exp(-(x-0.5)^2)"));
    for (int p = 1; p <= 3; ++p) {
        std::vector<double> e[3];
        for (int r = 3; r <= 5; ++r) {
            const FeSpace space(make_mesh(ElementKind::Interval, r), p);
            const auto U = solve_problem(space, ps);
            for (int k = 0; k <= std::min(2, p); ++k) e[k].push_back(l2_error(space, U, *ps.exact, k));
        }
        for (int k = 0; k <= std::min(2, p); ++k) {
            const double q = convergence_order(e[k][1], e[k][2]);
            EXPECT_NEAR(q, expected_q(p, k, 1).q, 0.2) << "p=" << p << " k=" << k;
        }
    }
}

TEST(Error, HalfGridMatchesExactOrder) {
    const auto ps = ProblemSpec::manufactured(1, ExprMatrix::identity(), Expr(0.0), parse("exp(-(x-0.5)^2)"));
    const int p = 2;
    std::vector<std::shared_ptr<const FeSpace>> spaces;
    std::vector<std::vector<double>> sols;
    for (int r = 3; r <= 6; ++r) {
        spaces.push_back(std::make_shared<const FeSpace>(make_mesh(ElementKind::Interval, r), p));
        sols.push_back(solve_problem(*spaces.back(), ps));
    }
    for (int k = 0; k <= 2; ++k) {
        std::vector<double> ex, half;
        for (std::size_t i = 0; i + 1 < spaces.size(); ++i) {
            ex.push_back(l2_error(*spaces[i], sols[i], *ps.exact, k));
            half.push_back(l2_error_half(*spaces[i], sols[i], *spaces[i + 1], sols[i + 1], k));
        }
        const double qe = convergence_order(ex[1], ex[2]);
        const double qh = convergence_order(half[1], half[2]);
        EXPECT_NEAR(qh, qe, 0.3) << "k=" << k;
    }
}

TEST(Error, HalfGridIn2D) {
    const auto ps = ProblemSpec::manufactured(2, ExprMatrix::identity(), Expr(0.0), parse("exp(-((x-0.5)^2+(y-0.5)^2))"));
    for (ElementKind kind : {ElementKind::Quad, ElementKind::Triangle}) {
        std::vector<double> half, ex;
        for (int r = 2; r <= 4; ++r) {
            const FeSpace c(make_mesh(kind, r), 1), f(make_mesh(kind, r + 1), 1);
            const auto Uc = solve_problem(c, ps), Uf = solve_problem(f, ps);
            half.push_back(l2_error_half(c, Uc, f, Uf, 0));
            ex.push_back(l2_error(c, Uc, *ps.exact, 0));
        }
        EXPECT_NEAR(convergence_order(half[1], half[2]), convergence_order(ex[1], ex[2]), 0.3) << to_string(kind);
    }
}

TEST(ConvergenceOrder, Examples) {
    EXPECT_DOUBLE_EQ(convergence_order(1e-2, 2.5e-3), 2.0);
    EXPECT_DOUBLE_EQ(convergence_order(1e-3, 1e-3), 0.0);
    EXPECT_NEAR(convergence_order(8e-5, 1e-5), 3.0, 1e-14);
    EXPECT_THROW(convergence_order(0.0, 1.0), AnalysisError);
    EXPECT_THROW(convergence_order(1.0, -1.0), AnalysisError);
}

TEST(ExpectedOrder, Examples) {
    auto a = expected_q(3, 0, 1);
    EXPECT_EQ(a.q, 4.0);
    EXPECT_EQ(a.beta_T, 4.0);
    a = expected_q(2, 2, 2);
    EXPECT_EQ(a.q, 1.0);
    EXPECT_EQ(a.beta_T, 0.5);
    a = expected_q(1, 1, 1);
    EXPECT_EQ(a.q, 1.0);
    EXPECT_EQ(a.beta_T, 1.0);
    EXPECT_THROW(expected_q(1, 2, 1), AnalysisError);
    EXPECT_THROW(expected_q(0, 0, 1), AnalysisError);
    EXPECT_THROW(expected_q(2, 3, 2), AnalysisError);
}

TEST(PowerLaw, ExactLines) {
    std::vector<double> n{10, 100, 1000, 1e4}, e;
    for (double x : n) e.push_back(1e-17 * x * x);
    auto fit = fit_powerlaw(n, e);
    EXPECT_NEAR(fit.alpha / 1e-17, 1.0, 1e-12);
    EXPECT_NEAR(fit.beta, 2.0, 1e-12);
    EXPECT_LE(fit.residual, 1e-12);
    EXPECT_EQ(fit.n_points, 4);

    e.clear();
    for (double x : n) e.push_back(5e-16 * x);
    fit = fit_powerlaw(n, e);
    EXPECT_NEAR(fit.alpha / 5e-16, 1.0, 1e-12);
    EXPECT_NEAR(fit.beta, 1.0, 1e-12);

    const std::vector<double> n2{1e2, 1e4}, e2{1e-13, 1e-9};
    fit = fit_powerlaw(n2, e2);
    EXPECT_NEAR(fit.beta, 2.0, 1e-12);
    EXPECT_NEAR(fit.alpha / 1e-17, 1.0, 1e-11);
}

TEST(PowerLaw, ScaleEquivariantAndResidual) {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> noise(-0.3, 0.3);
    std::vector<double> n, e, e2;
    for (int i = 0; i < 12; ++i) {
        n.push_back(std::pow(2.0, i + 3));
        e.push_back(3e-18 * std::pow(n.back(), 1.7) * std::pow(10.0, noise(rng)));
        e2.push_back(e.back() * 250.0);
    }
    const auto a = fit_powerlaw(n, e), b = fit_powerlaw(n, e2);
    EXPECT_NEAR(b.alpha / a.alpha, 250.0, 250.0 * 1e-10);
    EXPECT_NEAR(b.beta, a.beta, 1e-12);
    // Stored residual bounds the RMS misfit of the inputs.
    double rss = 0.0;
    for (std::size_t i = 0; i < n.size(); ++i) {
        const double r = std::log10(e[i]) - std::log10(a(n[i]));
        rss += r * r;
    }
    EXPECT_NEAR(std::sqrt(rss / n.size()), a.residual, 1e-12);
    EXPECT_LT(a.residual, 0.3);
}

TEST(PowerLaw, Rejections) {
    const std::vector<double> one{1.0};
    EXPECT_THROW(fit_powerlaw(one, one), AnalysisError);
    const std::vector<double> n{1, 2}, bad{1e-3, 0.0}, same{5, 5}, e{1, 2};
    EXPECT_THROW(fit_powerlaw(n, bad), AnalysisError);
    EXPECT_THROW(fit_powerlaw(same, e), AnalysisError);
    EXPECT_THROW(fit_powerlaw(n, one), AnalysisError);
}

TEST(PowerLaw, SampleOverloadSkipsZeros) {
    const std::vector<ErrorSample> s{{0, 4, 0.0, 0}, {1, 16, 16e-16, 0}, {2, 64, 64e-16, 0}};
    const auto fit = fit_powerlaw(s);
    EXPECT_EQ(fit.n_points, 2);
    EXPECT_NEAR(fit.beta, 1.0, 1e-12);
}

TEST(Series, InvariantsAndRoundoffWindow) {
    ErrorSeries s;
    s.add({0, 3, 1e-3, 0.1});
    s.add({1, 5, 1e-6, 0.2});
    EXPECT_THROW(s.add({2, 5, 1e-7, 0.0}), AnalysisError);
    EXPECT_THROW(s.add({2, 9, -1.0, 0.0}), AnalysisError);
    EXPECT_THROW(s.add({2, 9, std::nan(""), 0.0}), AnalysisError);
    s.add({2, 9, 1e-9, 0.0});
    s.add({3, 17, 4e-9, 0.0});
    s.add({4, 33, 16e-9, 0.0});
    EXPECT_EQ(s.argmin(), 2u);
    EXPECT_NEAR(s.total_seconds(), 0.3, 1e-15);
    EXPECT_THROW(roundoff_window(s), AnalysisError);
    const auto w = roundoff_window(s, 2);
    ASSERT_EQ(w.size(), 2u);
    EXPECT_EQ(w.front().level, 3);
}

TEST(Anchor, Examples) {
    EXPECT_NEAR(alpha_T_from_anchor(1e-6, 1e3, 2), 1.0, 1e-12);
    EXPECT_EQ(alpha_T_from_anchor(3.5e-4, 1.0, 7.0), 3.5e-4);
    EXPECT_NEAR(alpha_T_from_anchor(2e-8, 1e2, 3) / 2e-2, 1.0, 1e-12);
    EXPECT_THROW(alpha_T_from_anchor(0.0, 10.0, 1.0), AnalysisError);
}

TEST(Variables, Parse) {
    EXPECT_EQ(parse_variable("u"), Variable::U);
    EXPECT_EQ(parse_variable("grad"), Variable::Grad);
    EXPECT_EQ(parse_variable("uxx"), Variable::Hess);
    EXPECT_EQ(to_string(Variable::Hess), "hess");
    EXPECT_THROW(parse_variable("lap"), AnalysisError);
}
