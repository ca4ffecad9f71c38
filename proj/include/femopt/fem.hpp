#ifndef FEMOPT_FEM_HPP
#define FEMOPT_FEM_HPP

// Continuous Lagrange spaces on the structured meshes, assembly of the
// stiffness system A U = F and pointwise evaluation of u_h and its
// derivatives.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include "femopt/error.hpp"
#include "femopt/lagrange.hpp"
#include "femopt/mesh.hpp"
#include "femopt/problem.hpp"
#include "femopt/quadrature.hpp"
#include "femopt/sparse.hpp"

namespace femopt {

/// Affine reference-to-physical map x = origin + J xi. Quads must be
/// parallelograms, which holds for every mesh this library builds.
struct AffineMap {
    int dim = 1;
    Point origin;
    double j[2][2] = {{1.0, 0.0}, {0.0, 1.0}};
    double jinv[2][2] = {{1.0, 0.0}, {0.0, 1.0}};
    double det = 1.0;

    Point to_physical(const Point& r) const {
        return {origin.x + j[0][0] * r.x + j[0][1] * r.y, origin.y + j[1][0] * r.x + j[1][1] * r.y};
    }
    Point to_reference(const Point& x) const {
        const double dx = x.x - origin.x, dy = x.y - origin.y;
        return {jinv[0][0] * dx + jinv[0][1] * dy, jinv[1][0] * dx + jinv[1][1] * dy};
    }
    /// grad_x = J^{-T} grad_xi.
    std::array<double, 2> grad(const std::array<double, 2>& g) const {
        return {jinv[0][0] * g[0] + jinv[1][0] * g[1], jinv[0][1] * g[0] + jinv[1][1] * g[1]};
    }
    /// H_x = J^{-T} H_xi J^{-1}, with input and output as (xx, xy, yy).
    std::array<double, 3> hessian(const std::array<double, 3>& h) const {
        const double a[2][2] = {{h[0], h[1]}, {h[1], h[2]}};
        double t[2][2];
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 2; ++c) t[r][c] = a[r][0] * jinv[0][c] + a[r][1] * jinv[1][c];
        double o[2][2];
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 2; ++c) o[r][c] = jinv[0][r] * t[0][c] + jinv[1][r] * t[1][c];
        return {o[0][0], 0.5 * (o[0][1] + o[1][0]), o[1][1]};
    }
};

inline AffineMap element_map(const Mesh& mesh, int e) {
    const auto v = mesh.element(e);
    const Point& a = mesh.vertices[static_cast<std::size_t>(v[0])];
    const Point& b = mesh.vertices[static_cast<std::size_t>(v[1])];
    AffineMap m;
    m.dim = mesh.dim;
    m.origin = a;
    if (mesh.kind == ElementKind::Interval) {
        m.j[0][0] = b.x - a.x;
        m.det = m.j[0][0];
        if (!(m.det > 0.0)) throw FemError("degenerate element " + std::to_string(e));
        m.jinv[0][0] = 1.0 / m.det;
        return m;
    }
    const Point& c = mesh.vertices[static_cast<std::size_t>(v[2])];
    m.j[0][0] = b.x - a.x;
    m.j[1][0] = b.y - a.y;
    m.j[0][1] = c.x - a.x;
    m.j[1][1] = c.y - a.y;
    if (mesh.kind == ElementKind::Quad) {
        const Point& d = mesh.vertices[static_cast<std::size_t>(v[3])];
        const double ex = b.x + c.x - a.x - d.x, ey = b.y + c.y - a.y - d.y;
        if (std::fabs(ex) + std::fabs(ey) > 1e-12 * (std::fabs(m.j[0][0]) + std::fabs(m.j[1][1])))
            throw FemError("element " + std::to_string(e) + " is not a parallelogram");
    }
    m.det = m.j[0][0] * m.j[1][1] - m.j[0][1] * m.j[1][0];
    if (!(m.det > 0.0)) throw FemError("degenerate element " + std::to_string(e));
    m.jinv[0][0] = m.j[1][1] / m.det;
    m.jinv[0][1] = -m.j[0][1] / m.det;
    m.jinv[1][0] = -m.j[1][0] / m.det;
    m.jinv[1][1] = m.j[0][0] / m.det;
    return m;
}

class FeSpace {
public:
    FeSpace(std::shared_ptr<const Mesh> mesh, int p) : mesh_(std::move(mesh)), element_(mesh_->kind, p) {
        number_dofs();
    }

    const Mesh& mesh() const { return *mesh_; }
    std::shared_ptr<const Mesh> mesh_ptr() const { return mesh_; }
    const ReferenceElement& element() const { return element_; }
    int degree() const { return element_.degree(); }
    int dim() const { return mesh_->dim; }
    int n_dofs() const { return n_dofs_; }
    int dofs_per_cell() const { return element_.n_nodes(); }

    std::span<const int> dofs(int e) const {
        const auto k = static_cast<std::size_t>(element_.n_nodes());
        return {dof_map_.data() + static_cast<std::size_t>(e) * k, k};
    }
    const std::vector<Point>& support_points() const { return support_; }

    /// Nodal interpolant of `u`.
    std::vector<double> interpolate(const Expr& u) const {
        std::vector<double> out(static_cast<std::size_t>(n_dofs_));
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = u.eval(support_[i]);
        return out;
    }

private:
    void number_dofs() {
        const Mesh& m = *mesh_;
        const int p = element_.degree();
        const int ne = m.n_elements();
        const int nloc = element_.n_nodes();
        int n_interior = 0;
        for (const auto& nd : element_.nodes())
            if (nd.type == EntityType::Interior) ++n_interior;

        // Edges in order of first appearance.
        std::unordered_map<std::uint64_t, int> edge_id;
        std::vector<int> cell_edges;
        const bool has_edges = m.dim == 2 && p > 1;
        const auto& facets = element_.facets();
        if (has_edges) {
            cell_edges.resize(static_cast<std::size_t>(ne) * facets.size());
            edge_id.reserve(static_cast<std::size_t>(ne) * 2);
            for (int e = 0; e < ne; ++e) {
                const auto v = m.element(e);
                for (std::size_t f = 0; f < facets.size(); ++f) {
                    const auto a = static_cast<std::uint64_t>(v[static_cast<std::size_t>(facets[f][0])]);
                    const auto b = static_cast<std::uint64_t>(v[static_cast<std::size_t>(facets[f][1])]);
                    const std::uint64_t key = (std::min(a, b) << 32) | std::max(a, b);
                    auto [it, fresh] = edge_id.try_emplace(key, static_cast<int>(edge_id.size()));
                    cell_edges[static_cast<std::size_t>(e) * facets.size() + f] = it->second;
                }
            }
        }
        const std::int64_t nv = m.n_vertices();
        const std::int64_t edge_base = nv;
        const std::int64_t interior_base = edge_base + static_cast<std::int64_t>(edge_id.size()) * (p - 1);
        const std::int64_t total = interior_base + static_cast<std::int64_t>(ne) * n_interior;
        if (total > std::int64_t{2'000'000'000}) throw CapacityError("too many degrees of freedom");
        n_dofs_ = static_cast<int>(total);

        dof_map_.resize(static_cast<std::size_t>(ne) * static_cast<std::size_t>(nloc));
        support_.assign(static_cast<std::size_t>(n_dofs_), Point{});
        for (int e = 0; e < ne; ++e) {
            const auto v = m.element(e);
            const AffineMap map = element_map(m, e);
            for (int i = 0; i < nloc; ++i) {
                const LocalNode& nd = element_.nodes()[static_cast<std::size_t>(i)];
                std::int64_t g = 0;
                switch (nd.type) {
                case EntityType::Vertex: g = v[static_cast<std::size_t>(nd.entity)]; break;
                case EntityType::Edge: {
                    const auto& fv = facets[static_cast<std::size_t>(nd.entity)];
                    const int va = v[static_cast<std::size_t>(fv[0])], vb = v[static_cast<std::size_t>(fv[1])];
                    const int pos = va < vb ? nd.position : p - nd.position;
                    const int id = cell_edges[static_cast<std::size_t>(e) * facets.size() + static_cast<std::size_t>(nd.entity)];
                    g = edge_base + static_cast<std::int64_t>(id) * (p - 1) + (pos - 1);
                    break;
                }
                case EntityType::Interior:
                    g = interior_base + static_cast<std::int64_t>(e) * n_interior + nd.position;
                    break;
                }
                // 1D DoFs run left to right, so the matrix is banded.
                if (m.dim == 1) g = static_cast<std::int64_t>(e) * p + i;
                dof_map_[static_cast<std::size_t>(e) * static_cast<std::size_t>(nloc) + static_cast<std::size_t>(i)] =
                    static_cast<int>(g);
                Point x = map.to_physical(nd.ref);
                // Vertices keep their exact coordinates.
                if (nd.type == EntityType::Vertex) x = m.vertices[static_cast<std::size_t>(v[static_cast<std::size_t>(nd.entity)])];
                support_[static_cast<std::size_t>(g)] = x;
            }
        }
    }

    std::shared_ptr<const Mesh> mesh_;
    ReferenceElement element_;
    int n_dofs_ = 0;
    std::vector<int> dof_map_;
    std::vector<Point> support_;
};

struct AssembledSystem {
    SparseMatrix A;
    std::vector<double> F;
    /// Sorted constrained DoFs and their prescribed values.
    std::vector<int> dirichlet_dofs;
    std::vector<double> dirichlet_values;
};

namespace detail {

// Row-wise sparsity pattern of the full (unconstrained) operator.
inline SparseMatrix build_pattern(const FeSpace& space) {
    const int n = space.n_dofs();
    const int ne = space.mesh().n_elements();
    // DoF -> elements incidence in CSR form.
    std::vector<std::int64_t> start(static_cast<std::size_t>(n) + 1, 0);
    for (int e = 0; e < ne; ++e)
        for (int d : space.dofs(e)) ++start[static_cast<std::size_t>(d) + 1];
    for (int i = 0; i < n; ++i) start[static_cast<std::size_t>(i) + 1] += start[static_cast<std::size_t>(i)];
    std::vector<int> cells(static_cast<std::size_t>(start.back()));
    {
        std::vector<std::int64_t> pos(start.begin(), start.end() - 1);
        for (int e = 0; e < ne; ++e)
            for (int d : space.dofs(e)) cells[static_cast<std::size_t>(pos[static_cast<std::size_t>(d)]++)] = e;
    }
    SparseMatrix a;
    a.n = n;
    a.row_ptr.assign(static_cast<std::size_t>(n) + 1, 0);
    std::vector<int> row;
    for (int i = 0; i < n; ++i) {
        row.clear();
        for (auto k = start[static_cast<std::size_t>(i)]; k < start[static_cast<std::size_t>(i) + 1]; ++k) {
            const auto d = space.dofs(cells[static_cast<std::size_t>(k)]);
            row.insert(row.end(), d.begin(), d.end());
        }
        std::sort(row.begin(), row.end());
        row.erase(std::unique(row.begin(), row.end()), row.end());
        a.col.insert(a.col.end(), row.begin(), row.end());
        a.row_ptr[static_cast<std::size_t>(i) + 1] = static_cast<std::int64_t>(a.col.size());
    }
    a.val.assign(a.col.size(), 0.0);
    return a;
}

inline std::size_t slot(const SparseMatrix& a, int i, int j) {
    const auto b = a.col.begin() + a.row_ptr[static_cast<std::size_t>(i)];
    const auto e = a.col.begin() + a.row_ptr[static_cast<std::size_t>(i) + 1];
    return static_cast<std::size_t>(std::lower_bound(b, e, j) - a.col.begin());
}

// Reference basis tabulated at the points of a rule.
inline std::vector<BasisTable> tabulate_rule(const ReferenceElement& el, const QuadratureRule& q, int order) {
    std::vector<BasisTable> out;
    out.reserve(q.size());
    for (const auto& pt : q.points) out.push_back(el.tabulate(pt, order));
    return out;
}

} // namespace detail

/// A_ij = (grad phi_i, D grad phi_j) + (phi_i, r phi_j), F_i = (phi_i, f) plus
/// Neumann terms. Dirichlet DoFs become identity rows with their columns
/// moved to the right-hand side, so A stays symmetric positive definite.
inline AssembledSystem assemble(const FeSpace& space, const ProblemSpec& problem) {
    const Mesh& mesh = space.mesh();
    if (problem.dim != mesh.dim) throw FemError("problem and mesh dimensions differ");
    const ReferenceElement& el = space.element();
    const int p = el.degree();
    const int nloc = el.n_nodes();
    const auto NL = static_cast<std::size_t>(nloc);
    const int dim = mesh.dim;

    SparseMatrix a = detail::build_pattern(space);
    std::vector<double> F(static_cast<std::size_t>(space.n_dofs()), 0.0);

    const QuadratureRule rule = element_rule(mesh.kind, p);
    const auto tabs = detail::tabulate_rule(el, rule, 1);
    const bool d_const = problem.D(0, 0).is_constant() && problem.D(0, 1).is_constant() &&
                         problem.D(1, 0).is_constant() && problem.D(1, 1).is_constant();
    const bool r_const = problem.r.is_constant();
    const bool r_zero = problem.r.is_constant(0.0);

    std::vector<double> ke(NL * NL), fe(NL);
    std::vector<std::array<double, 2>> gphys(NL), dg(NL);
    double dm[2][2] = {{problem.D(0, 0).value(), 0.0}, {0.0, 0.0}};
    if (d_const && dim == 2) {
        dm[0][1] = problem.D(0, 1).value();
        dm[1][0] = problem.D(1, 0).value();
        dm[1][1] = problem.D(1, 1).value();
    }
    double rv = r_const ? problem.r.value() : 0.0;

    for (int e = 0; e < mesh.n_elements(); ++e) {
        const AffineMap map = element_map(mesh, e);
        std::fill(ke.begin(), ke.end(), 0.0);
        std::fill(fe.begin(), fe.end(), 0.0);
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const Point x = map.to_physical(rule.points[q]);
            const double w = rule.weights[q] * map.det;
            if (!d_const) {
                dm[0][0] = problem.D(0, 0).eval(x);
                if (dim == 2) {
                    dm[0][1] = problem.D(0, 1).eval(x);
                    dm[1][0] = problem.D(1, 0).eval(x);
                    dm[1][1] = problem.D(1, 1).eval(x);
                }
            }
            if (!r_const) rv = problem.r.eval(x);
            const double fv = problem.f.eval(x);
            const BasisTable& t = tabs[q];
            for (std::size_t i = 0; i < NL; ++i) {
                gphys[i] = map.grad(t.grads[i]);
                if (dim == 1) {
                    dg[i] = {dm[0][0] * gphys[i][0], 0.0};
                } else {
                    dg[i] = {dm[0][0] * gphys[i][0] + dm[0][1] * gphys[i][1],
                             dm[1][0] * gphys[i][0] + dm[1][1] * gphys[i][1]};
                }
                fe[i] += w * fv * t.values[i];
            }
            for (std::size_t i = 0; i < NL; ++i) {
                const double gx = gphys[i][0], gy = gphys[i][1];
                const double wr = r_zero ? 0.0 : w * rv * t.values[i];
                for (std::size_t jx = i; jx < NL; ++jx) {
                    double s = w * (gx * dg[jx][0] + gy * dg[jx][1]);
                    if (!r_zero) s += wr * t.values[jx];
                    ke[i * NL + jx] += s;
                }
            }
        }
        const auto dofs = space.dofs(e);
        for (std::size_t i = 0; i < NL; ++i) {
            const int gi = dofs[i];
            F[static_cast<std::size_t>(gi)] += fe[i];
            for (std::size_t jx = 0; jx < NL; ++jx) {
                const double v = jx >= i ? ke[i * NL + jx] : ke[jx * NL + i];
                a.val[detail::slot(a, gi, dofs[jx])] += v;
            }
        }
    }

    // Neumann data.
    const auto& facets = el.facets();
    if (dim == 1) {
        for (const auto& bf : mesh.boundary) {
            if (problem.boundary(bf.side) != BoundaryKind::Neumann) continue;
            const int node = el.facet_nodes(bf.local_facet).front();
            const int gi = space.dofs(bf.element)[static_cast<std::size_t>(node)];
            F[static_cast<std::size_t>(gi)] += problem.flux(bf.side).eval(space.support_points()[static_cast<std::size_t>(gi)]);
        }
    } else {
        const QuadratureRule line = gauss_legendre(p + 2);
        for (const auto& bf : mesh.boundary) {
            if (problem.boundary(bf.side) != BoundaryKind::Neumann) continue;
            const AffineMap map = element_map(mesh, bf.element);
            const auto& fv = facets[static_cast<std::size_t>(bf.local_facet)];
            const Point ra = ReferenceElement::vertex_ref(mesh.kind, fv[0]);
            const Point rb = ReferenceElement::vertex_ref(mesh.kind, fv[1]);
            const Point xa = map.to_physical(ra), xb = map.to_physical(rb);
            const double len = std::hypot(xb.x - xa.x, xb.y - xa.y);
            const auto& fnodes = el.facet_nodes(bf.local_facet);
            const auto dofs = space.dofs(bf.element);
            for (std::size_t q = 0; q < line.size(); ++q) {
                const double s = line.points[q].x;
                const Point r{ra.x + s * (rb.x - ra.x), ra.y + s * (rb.y - ra.y)};
                const double hv = problem.flux(bf.side).eval(map.to_physical(r));
                const BasisTable t = el.tabulate(r, 0);
                for (int node : fnodes)
                    F[static_cast<std::size_t>(dofs[static_cast<std::size_t>(node)])] +=
                        line.weights[q] * len * hv * t.values[static_cast<std::size_t>(node)];
            }
        }
    }

    // Dirichlet constraints.
    std::vector<char> fixed(static_cast<std::size_t>(space.n_dofs()), 0);
    for (const auto& bf : mesh.boundary) {
        if (problem.boundary(bf.side) != BoundaryKind::Dirichlet) continue;
        const auto dofs = space.dofs(bf.element);
        for (int node : el.facet_nodes(bf.local_facet)) fixed[static_cast<std::size_t>(dofs[static_cast<std::size_t>(node)])] = 1;
    }
    AssembledSystem sys;
    std::vector<double> gvals(static_cast<std::size_t>(space.n_dofs()), 0.0);
    for (int i = 0; i < space.n_dofs(); ++i)
        if (fixed[static_cast<std::size_t>(i)]) {
            sys.dirichlet_dofs.push_back(i);
            const double gv = problem.g.eval(space.support_points()[static_cast<std::size_t>(i)]);
            sys.dirichlet_values.push_back(gv);
            gvals[static_cast<std::size_t>(i)] = gv;
        }

    SparseMatrix out;
    out.n = a.n;
    out.row_ptr.assign(static_cast<std::size_t>(a.n) + 1, 0);
    out.col.reserve(a.col.size());
    out.val.reserve(a.val.size());
    for (int i = 0; i < a.n; ++i) {
        const auto I = static_cast<std::size_t>(i);
        if (fixed[I]) {
            out.col.push_back(i);
            out.val.push_back(1.0);
            F[I] = gvals[I];
        } else {
            for (auto k = a.row_ptr[I]; k < a.row_ptr[I + 1]; ++k) {
                const int j = a.col[static_cast<std::size_t>(k)];
                const double v = a.val[static_cast<std::size_t>(k)];
                if (fixed[static_cast<std::size_t>(j)]) {
                    F[I] -= v * gvals[static_cast<std::size_t>(j)];
                } else {
                    out.col.push_back(j);
                    out.val.push_back(v);
                }
            }
        }
        out.row_ptr[I + 1] = static_cast<std::int64_t>(out.col.size());
    }
    sys.A = std::move(out);
    sys.F = std::move(F);
    return sys;
}

/// Value (k = 0), gradient (k = 1) or Hessian (k = 2) of u_h at one point,
/// as components {u}, {ux[, uy]} or {uxx[, uxy, uyx, uyy]}.
inline std::vector<double> evaluate_in(const FeSpace& space, std::span<const double> U, int e, const Point& x,
                                       int k) {
    const AffineMap map = element_map(space.mesh(), e);
    const Point ref = map.to_reference(x);
    const BasisTable t = space.element().tabulate(ref, k);
    const auto dofs = space.dofs(e);
    const int dim = space.dim();
    if (k == 0) {
        double s = 0.0;
        for (std::size_t i = 0; i < dofs.size(); ++i) s += U[static_cast<std::size_t>(dofs[i])] * t.values[i];
        return {s};
    }
    if (k == 1) {
        double gx = 0.0, gy = 0.0;
        for (std::size_t i = 0; i < dofs.size(); ++i) {
            const double c = U[static_cast<std::size_t>(dofs[i])];
            gx += c * t.grads[i][0];
            gy += c * t.grads[i][1];
        }
        const auto g = map.grad({gx, gy});
        if (dim == 1) return {g[0]};
        return {g[0], g[1]};
    }
    double hxx = 0.0, hxy = 0.0, hyy = 0.0;
    for (std::size_t i = 0; i < dofs.size(); ++i) {
        const double c = U[static_cast<std::size_t>(dofs[i])];
        hxx += c * t.hessians[i][0];
        hxy += c * t.hessians[i][1];
        hyy += c * t.hessians[i][2];
    }
    const auto h = map.hessian({hxx, hxy, hyy});
    if (dim == 1) return {h[0]};
    return {h[0], h[1], h[1], h[2]};
}

inline std::vector<double> evaluate(const FeSpace& space, std::span<const double> U, const Point& x, int k) {
    if (k < 0 || k > 2) throw FemError("derivative order must be 0, 1 or 2");
    if (k == 2 && space.degree() < 2) throw FemError("second derivatives need p >= 2");
    if (static_cast<int>(U.size()) != space.n_dofs()) throw FemError("coefficient vector has the wrong length");
    const int e = space.mesh().locate(x);
    return evaluate_in(space, U, e, x, k);
}

} // namespace femopt

#endif
