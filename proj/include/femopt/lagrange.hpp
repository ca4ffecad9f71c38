#ifndef FEMOPT_LAGRANGE_HPP
#define FEMOPT_LAGRANGE_HPP

// Lagrange bases with equidistant support points on the reference interval,
// square (Q_p) and triangle (P_p).
//
// Every basis function is written as a constant times a product of affine
// factors a*xi + b*eta + c: tensor products of 1D Lagrange polynomials on
// quads, Silvester's barycentric product on triangles. Values and
// derivatives then follow from the product rule without any Vandermonde
// inversion, so the interpolation property holds to the last bit.

#include <array>
#include <vector>

#include "femopt/error.hpp"
#include "femopt/mesh.hpp"
#include "femopt/point.hpp"

namespace femopt {

enum class EntityType { Vertex, Edge, Interior };

struct LocalNode {
    Point ref;
    EntityType type;
    /// Local vertex or local edge index; 0 for interior nodes.
    int entity;
    /// Position 1..p-1 along an edge counted from its first vertex, or the
    /// running index of an interior node.
    int position;
};

struct AffineFactor {
    double a, b, c;
    double operator()(const Point& p) const { return a * p.x + b * p.y + c; }
};

/// Basis values and reference derivatives at one point. Hessians are stored
/// as (xx, xy, yy).
struct BasisTable {
    std::vector<double> values;
    std::vector<std::array<double, 2>> grads;
    std::vector<std::array<double, 3>> hessians;
};

class ReferenceElement {
public:
    static constexpr int max_degree = 5;

    ReferenceElement(ElementKind kind, int p) : kind_(kind), degree_(p) {
        if (p < 1 || p > max_degree) throw FemError("unsupported element degree " + std::to_string(p));
        switch (kind) {
        case ElementKind::Interval: build_interval(); break;
        case ElementKind::Quad: build_quad(); break;
        case ElementKind::Triangle: build_triangle(); break;
        }
        build_facets();
    }

    ElementKind kind() const { return kind_; }
    int degree() const { return degree_; }
    int n_nodes() const { return static_cast<int>(nodes_.size()); }
    const std::vector<LocalNode>& nodes() const { return nodes_; }

    /// Local vertex pairs of the edges (2D) or the single vertex of each end
    /// point (1D, second entry repeated).
    const std::vector<std::array<int, 2>>& facets() const { return facet_vertices_; }
    const std::vector<int>& facet_nodes(int f) const { return facet_nodes_[static_cast<std::size_t>(f)]; }

    static Point vertex_ref(ElementKind kind, int v) {
        switch (kind) {
        case ElementKind::Interval: return {static_cast<double>(v), 0.0};
        case ElementKind::Quad: return {static_cast<double>(v & 1), static_cast<double>(v >> 1)};
        case ElementKind::Triangle: return {v == 1 ? 1.0 : 0.0, v == 2 ? 1.0 : 0.0};
        }
        return {};
    }

    /// Values and derivatives up to `order` of all basis functions.
    BasisTable tabulate(const Point& ref, int order) const {
        BasisTable t;
        const std::size_t n = nodes_.size();
        t.values.resize(n);
        if (order >= 1) t.grads.resize(n);
        if (order >= 2) t.hessians.resize(n);
        std::array<double, 2 * max_degree> f{};
        std::array<double, 2 * max_degree + 1> prefix{}, suffix{};
        for (std::size_t i = 0; i < n; ++i) {
            const auto& fac = factors_[i];
            const std::size_t m = fac.size();
            for (std::size_t k = 0; k < m; ++k) f[k] = fac[k](ref);
            prefix[0] = 1.0;
            for (std::size_t k = 0; k < m; ++k) prefix[k + 1] = prefix[k] * f[k];
            suffix[m] = 1.0;
            for (std::size_t k = m; k-- > 0;) suffix[k] = suffix[k + 1] * f[k];
            t.values[i] = scale_[i] * prefix[m];
            if (order >= 1) {
                double gx = 0.0, gy = 0.0;
                for (std::size_t k = 0; k < m; ++k) {
                    const double rest = prefix[k] * suffix[k + 1];
                    gx += fac[k].a * rest;
                    gy += fac[k].b * rest;
                }
                t.grads[i] = {scale_[i] * gx, scale_[i] * gy};
            }
            if (order >= 2) {
                double hxx = 0.0, hxy = 0.0, hyy = 0.0;
                for (std::size_t k = 0; k < m; ++k) {
                    double mid = 1.0;
                    for (std::size_t l = k + 1; l < m; ++l) {
                        const double rest = prefix[k] * mid * suffix[l + 1];
                        hxx += 2.0 * fac[k].a * fac[l].a * rest;
                        hxy += (fac[k].a * fac[l].b + fac[k].b * fac[l].a) * rest;
                        hyy += 2.0 * fac[k].b * fac[l].b * rest;
                        mid *= f[l];
                    }
                }
                t.hessians[i] = {scale_[i] * hxx, scale_[i] * hxy, scale_[i] * hyy};
            }
        }
        return t;
    }

private:
    void add_node(LocalNode node, std::vector<AffineFactor> factors, double scale) {
        nodes_.push_back(node);
        factors_.push_back(std::move(factors));
        scale_.push_back(scale);
    }

    // 1D Lagrange polynomial of node i at t = i/p in the direction (a, b).
    void lagrange_1d(int i, double a, double b, std::vector<AffineFactor>& out, double& scale) const {
        const double p = degree_;
        for (int j = 0; j <= degree_; ++j) {
            if (j == i) continue;
            out.push_back({p * a, p * b, -static_cast<double>(j)});
            scale /= static_cast<double>(i - j);
        }
    }

    static LocalNode classify_interval(int i, int p) {
        const Point ref{static_cast<double>(i) / p, 0.0};
        if (i == 0) return {ref, EntityType::Vertex, 0, 0};
        if (i == p) return {ref, EntityType::Vertex, 1, 0};
        return {ref, EntityType::Interior, 0, i - 1};
    }

    void build_interval() {
        const int p = degree_;
        for (int i = 0; i <= p; ++i) {
            std::vector<AffineFactor> fac;
            double scale = 1.0;
            lagrange_1d(i, 1.0, 0.0, fac, scale);
            add_node(classify_interval(i, p), std::move(fac), scale);
        }
    }

    void build_quad() {
        const int p = degree_;
        int interior = 0;
        for (int j = 0; j <= p; ++j) {
            for (int i = 0; i <= p; ++i) {
                std::vector<AffineFactor> fac;
                double scale = 1.0;
                lagrange_1d(i, 1.0, 0.0, fac, scale);
                lagrange_1d(j, 0.0, 1.0, fac, scale);
                const Point ref{static_cast<double>(i) / p, static_cast<double>(j) / p};
                const bool ie = (i == 0 || i == p), je = (j == 0 || j == p);
                LocalNode node{ref, EntityType::Interior, 0, 0};
                if (ie && je) {
                    node.type = EntityType::Vertex;
                    node.entity = (i == p ? 1 : 0) + (j == p ? 2 : 0);
                } else if (je) {
                    node.type = EntityType::Edge;
                    node.entity = j == 0 ? 0 : 2;  // bottom v0->v1, top v2->v3
                    node.position = i;
                } else if (ie) {
                    node.type = EntityType::Edge;
                    node.entity = i == p ? 1 : 3;  // right v1->v3, left v0->v2
                    node.position = j;
                } else {
                    node.position = interior++;
                }
                add_node(node, std::move(fac), scale);
            }
        }
    }

    void build_triangle() {
        const int p = degree_;
        const double dp = p;
        int interior = 0;
        for (int j = 0; j <= p; ++j) {
            for (int i = 0; i + j <= p; ++i) {
                const int k = p - i - j;
                std::vector<AffineFactor> fac;
                double scale = 1.0;
                for (int a = 0; a < i; ++a) {
                    fac.push_back({dp, 0.0, -static_cast<double>(a)});
                    scale /= static_cast<double>(i - a);
                }
                for (int b = 0; b < j; ++b) {
                    fac.push_back({0.0, dp, -static_cast<double>(b)});
                    scale /= static_cast<double>(j - b);
                }
                for (int c = 0; c < k; ++c) {
                    fac.push_back({-dp, -dp, dp - static_cast<double>(c)});
                    scale /= static_cast<double>(k - c);
                }
                const Point ref{static_cast<double>(i) / p, static_cast<double>(j) / p};
                LocalNode node{ref, EntityType::Interior, 0, 0};
                const int zeros = (i == 0) + (j == 0) + (k == 0);
                if (zeros == 2) {
                    node.type = EntityType::Vertex;
                    node.entity = i == p ? 1 : (j == p ? 2 : 0);
                } else if (j == 0) {
                    node.type = EntityType::Edge;
                    node.entity = 0;  // v0->v1
                    node.position = i;
                } else if (k == 0) {
                    node.type = EntityType::Edge;
                    node.entity = 1;  // v1->v2
                    node.position = j;
                } else if (i == 0) {
                    node.type = EntityType::Edge;
                    node.entity = 2;  // v2->v0
                    node.position = p - j;
                } else {
                    node.position = interior++;
                }
                add_node(node, std::move(fac), scale);
            }
        }
    }

    void build_facets() {
        switch (kind_) {
        case ElementKind::Interval: facet_vertices_ = {{0, 0}, {1, 1}}; break;
        case ElementKind::Quad: facet_vertices_ = {{0, 1}, {1, 3}, {2, 3}, {0, 2}}; break;
        case ElementKind::Triangle: facet_vertices_ = {{0, 1}, {1, 2}, {2, 0}}; break;
        }
        facet_nodes_.resize(facet_vertices_.size());
        for (std::size_t f = 0; f < facet_vertices_.size(); ++f) {
            const auto [va, vb] = facet_vertices_[f];
            for (int i = 0; i < n_nodes(); ++i) {
                const auto& nd = nodes_[static_cast<std::size_t>(i)];
                const bool on_vertex = nd.type == EntityType::Vertex && (nd.entity == va || nd.entity == vb);
                const bool on_edge = kind_ != ElementKind::Interval && nd.type == EntityType::Edge &&
                                     nd.entity == static_cast<int>(f);
                if (on_vertex || on_edge) facet_nodes_[f].push_back(i);
            }
        }
    }

    ElementKind kind_;
    int degree_;
    std::vector<LocalNode> nodes_;
    std::vector<std::vector<AffineFactor>> factors_;
    std::vector<double> scale_;
    std::vector<std::array<int, 2>> facet_vertices_;
    std::vector<std::vector<int>> facet_nodes_;
};

} // namespace femopt

#endif
