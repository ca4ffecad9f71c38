#ifndef FEMOPT_MESH_HPP
#define FEMOPT_MESH_HPP

// Structured meshes of [0,1] and [0,1]^2 under uniform h-refinement.
//
// Level R splits every side into 2^R cells. Quadrilaterals are stored with
// lexicographic corners (v00, v10, v01, v11). Triangle meshes take the quad
// mesh of the same level and split each cell through its center into four
// triangles (bottom, right, top, left), all counter-clockwise, with the
// boundary edge of each triangle as local facet 0.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "femopt/error.hpp"
#include "femopt/point.hpp"

namespace femopt {

enum class ElementKind { Interval, Quad, Triangle };
enum class Side { Left = 0, Right = 1, Bottom = 2, Top = 3 };
enum class BoundaryKind { Dirichlet, Neumann };

inline std::string_view to_string(ElementKind k) {
    switch (k) {
    case ElementKind::Interval: return "interval";
    case ElementKind::Quad: return "quad";
    case ElementKind::Triangle: return "triangle";
    }
    return "?";
}

inline ElementKind parse_element_kind(std::string_view s) {
    if (s == "interval") return ElementKind::Interval;
    if (s == "quad" || s == "quadrilateral") return ElementKind::Quad;
    if (s == "triangle") return ElementKind::Triangle;
    throw MeshError("unknown element kind '" + std::string(s) + "'");
}

inline std::string_view to_string(Side s) {
    switch (s) {
    case Side::Left: return "left";
    case Side::Right: return "right";
    case Side::Bottom: return "bottom";
    case Side::Top: return "top";
    }
    return "?";
}

inline int dimension_of(ElementKind k) { return k == ElementKind::Interval ? 1 : 2; }

inline int vertices_per_element(ElementKind k) {
    switch (k) {
    case ElementKind::Interval: return 2;
    case ElementKind::Quad: return 4;
    case ElementKind::Triangle: return 3;
    }
    return 0;
}

/// Left/right carry Dirichlet data, bottom/top Neumann data.
inline BoundaryKind default_boundary_kind(Side s) {
    return (s == Side::Left || s == Side::Right) ? BoundaryKind::Dirichlet : BoundaryKind::Neumann;
}

struct BoundaryFacet {
    int element;
    int local_facet;
    Side side;
};

struct DistortionSpec {
    int mesh_type = 1;
    /// f_h = h_d / h_0 (Type 2 only).
    double magnitude = 0.4;
    std::uint64_t seed = 0;
};

class Mesh {
public:
    int dim = 1;
    ElementKind kind = ElementKind::Interval;
    int level = 0;
    int mesh_type = 1;
    std::vector<Point> vertices;
    /// Flattened vertex indices, vertices_per_element(kind) per element.
    std::vector<int> cells;
    std::vector<BoundaryFacet> boundary;

    int cells_per_side() const { return 1 << level; }
    int n_vertices() const { return static_cast<int>(vertices.size()); }
    int n_elements() const { return static_cast<int>(cells.size()) / vertices_per_element(kind); }

    std::span<const int> element(int e) const {
        const auto k = static_cast<std::size_t>(vertices_per_element(kind));
        return {cells.data() + static_cast<std::size_t>(e) * k, k};
    }

    /// Length or area.
    double measure(int e) const {
        const auto v = element(e);
        const Point& a = vertices[static_cast<std::size_t>(v[0])];
        const Point& b = vertices[static_cast<std::size_t>(v[1])];
        if (kind == ElementKind::Interval) return b.x - a.x;
        const Point& c = vertices[static_cast<std::size_t>(v[2])];
        const double cross = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
        return kind == ElementKind::Quad ? cross : 0.5 * cross;
    }

    /// Index of an element containing `p`. Throws MeshError outside the domain.
    int locate(const Point& p) const {
        if (!(p.x >= 0.0 && p.x <= 1.0) || (dim == 2 && !(p.y >= 0.0 && p.y <= 1.0)))
            throw MeshError("point outside domain");
        const int n = cells_per_side();
        if (kind == ElementKind::Interval) {
            auto it = std::upper_bound(vertices.begin(), vertices.end(), p.x,
                                       [](double x, const Point& v) { return x < v.x; });
            const int i = static_cast<int>(it - vertices.begin()) - 1;
            return std::clamp(i, 0, n - 1);
        }
        const int i = std::clamp(static_cast<int>(std::floor(p.x * n)), 0, n - 1);
        const int j = std::clamp(static_cast<int>(std::floor(p.y * n)), 0, n - 1);
        const int cell = j * n + i;
        if (kind == ElementKind::Quad) return cell;
        const double s = p.x * n - i;
        const double t = p.y * n - j;
        int sub = 3;
        if (t <= s && t <= 1.0 - s) sub = 0;
        else if (s >= t && s >= 1.0 - t) sub = 1;
        else if (t >= s && t >= 1.0 - s) sub = 2;
        return 4 * cell + sub;
    }
};

/// Equidistant mesh at refinement level R; interior coordinates are i / 2^R.
inline Mesh build_mesh(int dim, ElementKind kind, int level) {
    if (level < 0) throw MeshError("refinement level must be non-negative");
    if (level > 30) throw MeshError("refinement level too large");
    if (dimension_of(kind) != dim)
        throw MeshError("element kind '" + std::string(to_string(kind)) + "' does not match dimension " +
                        std::to_string(dim));
    Mesh m;
    m.dim = dim;
    m.kind = kind;
    m.level = level;
    const int n = 1 << level;
    const double dn = n;

    if (kind == ElementKind::Interval) {
        m.vertices.reserve(static_cast<std::size_t>(n) + 1);
        for (int i = 0; i <= n; ++i) m.vertices.push_back({i / dn, 0.0});
        m.cells.reserve(2 * static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            m.cells.push_back(i);
            m.cells.push_back(i + 1);
        }
        m.boundary.push_back({0, 0, Side::Left});
        m.boundary.push_back({n - 1, 1, Side::Right});
        return m;
    }

    const std::size_t nv = static_cast<std::size_t>(n + 1) * static_cast<std::size_t>(n + 1);
    m.vertices.reserve(nv + (kind == ElementKind::Triangle ? static_cast<std::size_t>(n) * n : 0));
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i) m.vertices.push_back({i / dn, j / dn});
    auto vid = [n](int i, int j) { return j * (n + 1) + i; };

    if (kind == ElementKind::Quad) {
        m.cells.reserve(4 * static_cast<std::size_t>(n) * n);
        for (int j = 0; j < n; ++j) {
            for (int i = 0; i < n; ++i) {
                const int e = j * n + i;
                m.cells.insert(m.cells.end(), {vid(i, j), vid(i + 1, j), vid(i, j + 1), vid(i + 1, j + 1)});
                if (j == 0) m.boundary.push_back({e, 0, Side::Bottom});
                if (i == n - 1) m.boundary.push_back({e, 1, Side::Right});
                if (j == n - 1) m.boundary.push_back({e, 2, Side::Top});
                if (i == 0) m.boundary.push_back({e, 3, Side::Left});
            }
        }
        return m;
    }

    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) m.vertices.push_back({(i + 0.5) / dn, (j + 0.5) / dn});
    m.cells.reserve(12 * static_cast<std::size_t>(n) * n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const int c = static_cast<int>(nv) + j * n + i;
            const int e = 4 * (j * n + i);
            m.cells.insert(m.cells.end(), {vid(i, j), vid(i + 1, j), c});
            m.cells.insert(m.cells.end(), {vid(i + 1, j), vid(i + 1, j + 1), c});
            m.cells.insert(m.cells.end(), {vid(i + 1, j + 1), vid(i, j + 1), c});
            m.cells.insert(m.cells.end(), {vid(i, j + 1), vid(i, j), c});
            if (j == 0) m.boundary.push_back({e + 0, 0, Side::Bottom});
            if (i == n - 1) m.boundary.push_back({e + 1, 0, Side::Right});
            if (j == n - 1) m.boundary.push_back({e + 2, 0, Side::Top});
            if (i == 0) m.boundary.push_back({e + 3, 0, Side::Left});
        }
    }
    return m;
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace detail

/// Moves interior vertices of a 1D mesh.
///
/// Type 2 shifts each interior vertex by +-f_h * h_0, the sign drawn from a
/// 64-bit Mersenne twister seeded from (seed, level), so every level draws
/// fresh offsets reproducibly. Types 3 and 4 are symmetric about x = 0.5 and
/// map x_0 < 0.5 to 0.5 x_0 and x_0 / (1.5 - x_0) respectively.
inline Mesh distort(const Mesh& mesh, const DistortionSpec& spec) {
    if (spec.mesh_type < 1 || spec.mesh_type > 4) throw MeshError("mesh type must be 1..4");
    Mesh out = mesh;
    out.mesh_type = spec.mesh_type;
    if (spec.mesh_type == 1) return out;
    if (mesh.dim != 1) throw MeshError("distortion is only defined for 1D meshes");
    if (spec.mesh_type == 2 && !(std::fabs(spec.magnitude) < 0.5))
        throw MeshError("|f_h| must be below 0.5 for Type 2 distortion");

    const int n = mesh.cells_per_side();
    const double h0 = 1.0 / n;
    std::mt19937_64 rng(detail::splitmix64(spec.seed ^ detail::splitmix64(static_cast<std::uint64_t>(mesh.level))));
    for (int i = 1; i < n; ++i) {
        const double x0 = mesh.vertices[static_cast<std::size_t>(i)].x;
        double x1 = x0;
        switch (spec.mesh_type) {
        case 2: {
            const bool right = (rng() >> 63) != 0;
            x1 = x0 + (right ? 1.0 : -1.0) * spec.magnitude * h0;
            break;
        }
        case 3:
            if (x0 < 0.5) x1 = 0.5 * x0;
            else if (x0 > 0.5) x1 = 1.0 - 0.5 * (1.0 - x0);
            break;
        case 4:
            if (x0 < 0.5) x1 = x0 / (1.5 - x0);
            else if (x0 > 0.5) x1 = 1.0 - (1.0 - x0) / (1.5 - (1.0 - x0));
            break;
        default: break;
        }
        out.vertices[static_cast<std::size_t>(i)].x = x1;
    }
    for (int e = 0; e < out.n_elements(); ++e)
        if (!(out.measure(e) > 0.0)) throw MeshError("distortion produced a non-positive element length");
    return out;
}

inline Mesh build_mesh(int dim, ElementKind kind, int level, const DistortionSpec& spec) {
    return distort(build_mesh(dim, kind, level), spec);
}

/// Number of support points m of the continuous Lagrange space.
inline std::int64_t count_dofs(ElementKind kind, int level, int p) {
    if (p < 1) throw MeshError("degree must be >= 1");
    if (level < 0) throw MeshError("refinement level must be non-negative");
    const std::int64_t n = std::int64_t{1} << level;
    const std::int64_t q = p;
    switch (kind) {
    case ElementKind::Interval: return n * q + 1;
    case ElementKind::Quad: return (n * q + 1) * (n * q + 1);
    case ElementKind::Triangle:
        return ((n + 1) * (n + 1) + n * n) + (2 * n * (n + 1) + 4 * n * n) * (q - 1) +
               4 * n * n * ((q - 1) * (q - 2) / 2);
    }
    return 0;
}

inline int dofs_per_element(ElementKind kind, int p) {
    if (p < 1) throw MeshError("degree must be >= 1");
    switch (kind) {
    case ElementKind::Interval: return p + 1;
    case ElementKind::Quad: return (p + 1) * (p + 1);
    case ElementKind::Triangle: return 3 + 3 * (p - 1) + (p - 1) * (p - 2) / 2;
    }
    return 0;
}

/// Plain-text dump: a header line, then `vertices`, `elements` and
/// `boundary` blocks, each introduced by its keyword and entry count.
inline void write_text(std::ostream& os, const Mesh& m) {
    os << "mesh " << m.dim << ' ' << to_string(m.kind) << ' ' << m.level << ' ' << m.mesh_type << '\n';
    os << "vertices " << m.n_vertices() << '\n';
    os.precision(17);
    for (const auto& v : m.vertices) {
        os << v.x;
        if (m.dim == 2) os << ' ' << v.y;
        os << '\n';
    }
    os << "elements " << m.n_elements() << ' ' << vertices_per_element(m.kind) << '\n';
    for (int e = 0; e < m.n_elements(); ++e) {
        const auto v = m.element(e);
        for (std::size_t k = 0; k < v.size(); ++k) os << (k ? " " : "") << v[k];
        os << '\n';
    }
    os << "boundary " << m.boundary.size() << '\n';
    for (const auto& f : m.boundary) os << f.element << ' ' << f.local_facet << ' ' << to_string(f.side) << '\n';
}

} // namespace femopt

#endif
