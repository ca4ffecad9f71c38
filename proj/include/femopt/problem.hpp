#ifndef FEMOPT_PROBLEM_HPP
#define FEMOPT_PROBLEM_HPP

// The model boundary-value problem
//   -div(D grad u) + r u = f   on [0,1] or [0,1]^2
//   u = g on Dirichlet sides,  (D grad u) . n = h on Neumann sides.

#include <array>
#include <optional>
#include <vector>

#include "femopt/error.hpp"
#include "femopt/expr.hpp"
#include "femopt/mesh.hpp"

namespace femopt {

/// Exact solution with its symbolic derivatives up to second order.
struct ExactSolution {
    Expr u, ux, uy, uxx, uxy, uyx, uyy;

    explicit ExactSolution(const Expr& sol) : u(sol) {
        ux = differentiate(u, Var::X);
        uy = differentiate(u, Var::Y);
        uxx = differentiate(ux, Var::X);
        uxy = differentiate(ux, Var::Y);
        uyx = differentiate(uy, Var::X);
        uyy = differentiate(uy, Var::Y);
    }

    /// Components in the order used by `evaluate`: {u}, {ux[, uy]} or
    /// {uxx[, uxy, uyx, uyy]}.
    std::vector<Expr> components(int order, int dim) const {
        switch (order) {
        case 0: return {u};
        case 1: return dim == 1 ? std::vector<Expr>{ux} : std::vector<Expr>{ux, uy};
        case 2: return dim == 1 ? std::vector<Expr>{uxx} : std::vector<Expr>{uxx, uxy, uyx, uyy};
        default: throw AnalysisError("derivative order must be 0, 1 or 2");
        }
    }
};

inline Point outward_normal(Side s) {
    switch (s) {
    case Side::Left: return {-1.0, 0.0};
    case Side::Right: return {1.0, 0.0};
    case Side::Bottom: return {0.0, -1.0};
    case Side::Top: return {0.0, 1.0};
    }
    return {};
}

struct ProblemSpec {
    int dim = 1;
    ExprMatrix D = ExprMatrix::identity();
    Expr r{0.0};
    Expr f{0.0};
    /// Dirichlet data, evaluated at boundary support points.
    Expr g{0.0};
    /// Neumann flux per side, indexed by Side.
    std::array<Expr, 4> h{Expr(0.0), Expr(0.0), Expr(0.0), Expr(0.0)};
    std::array<BoundaryKind, 4> bc{BoundaryKind::Dirichlet, BoundaryKind::Dirichlet, BoundaryKind::Neumann,
                                   BoundaryKind::Neumann};
    std::optional<ExactSolution> exact;

    BoundaryKind boundary(Side s) const { return bc[static_cast<std::size_t>(s)]; }
    const Expr& flux(Side s) const { return h[static_cast<std::size_t>(s)]; }

    /// Same operator and boundary types, with f, g and h generated from `u`.
    static ProblemSpec manufactured(int dim, const ExprMatrix& D, const Expr& r, const Expr& u,
                                    const std::array<BoundaryKind, 4>& bc = {BoundaryKind::Dirichlet,
                                                                             BoundaryKind::Dirichlet,
                                                                             BoundaryKind::Neumann,
                                                                             BoundaryKind::Neumann}) {
        if (dim != 1 && dim != 2) throw Error("dimension must be 1 or 2");
        ProblemSpec ps;
        ps.dim = dim;
        ps.D = D;
        ps.r = r;
        ps.bc = bc;
        if (dim == 1) {
            ps.bc[2] = BoundaryKind::Neumann;
            ps.bc[3] = BoundaryKind::Neumann;
        }
        ps.f = manufacture_rhs(u, D, r, dim);
        ps.g = u;
        ps.exact.emplace(u);
        const Expr ux = ps.exact->ux, uy = ps.exact->uy;
        for (int s = 0; s < 4; ++s) {
            const Point n = outward_normal(static_cast<Side>(s));
            Expr flux(0.0);
            if (dim == 1) {
                flux = D(0, 0) * ux * n.x;
            } else {
                const Expr fx = D(0, 0) * ux + D(0, 1) * uy;
                const Expr fy = D(1, 0) * ux + D(1, 1) * uy;
                flux = fx * n.x + fy * n.y;
            }
            ps.h[static_cast<std::size_t>(s)] = flux;
        }
        return ps;
    }

    /// Copy with the data regenerated for another exact solution, keeping
    /// dim, D, r and the boundary types.
    ProblemSpec with_solution(const Expr& u) const { return manufactured(dim, D, r, u, bc); }
};

} // namespace femopt

#endif
