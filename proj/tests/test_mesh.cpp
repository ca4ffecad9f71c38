#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>
#include <utility>

#include "femopt/mesh.hpp"

using namespace femopt;

TEST(MeshBuild, CoarsestMeshes) {
    const Mesh q = build_mesh(2, ElementKind::Quad, 0);
    EXPECT_EQ(q.n_vertices(), 4);
    EXPECT_EQ(q.n_elements(), 1);
    const Mesh t = build_mesh(2, ElementKind::Triangle, 0);
    EXPECT_EQ(t.n_vertices(), 5);
    EXPECT_EQ(t.n_elements(), 4);
    const Mesh i = build_mesh(1, ElementKind::Interval, 3);
    EXPECT_EQ(i.n_vertices(), 9);
    EXPECT_EQ(i.n_elements(), 8);
    EXPECT_EQ(i.vertices[3].x, 3.0 / 8.0);
}

TEST(MeshBuild, CountsPerLevel) {
    for (int r = 0; r <= 5; ++r) {
        const int n = 1 << r;
        const Mesh q = build_mesh(2, ElementKind::Quad, r);
        EXPECT_EQ(q.n_vertices(), (n + 1) * (n + 1));
        EXPECT_EQ(q.n_elements(), n * n);
        const Mesh t = build_mesh(2, ElementKind::Triangle, r);
        EXPECT_EQ(t.n_vertices(), (n + 1) * (n + 1) + n * n);
        EXPECT_EQ(t.n_elements(), 4 * n * n);
        for (const Mesh* m : {&q, &t})
            for (int e = 0; e < m->n_elements(); ++e) ASSERT_GT(m->measure(e), 0.0);
        double area = 0.0;
        for (int e = 0; e < t.n_elements(); ++e) area += t.measure(e);
        EXPECT_DOUBLE_EQ(area, 1.0);
    }
}

TEST(MeshBuild, BoundaryTagsBySide) {
    const Mesh q = build_mesh(2, ElementKind::Triangle, 2);
    int counts[4] = {0, 0, 0, 0};
    for (const auto& f : q.boundary) ++counts[static_cast<int>(f.side)];
    for (int c : counts) EXPECT_EQ(c, 4);
    EXPECT_EQ(default_boundary_kind(Side::Left), BoundaryKind::Dirichlet);
    EXPECT_EQ(default_boundary_kind(Side::Right), BoundaryKind::Dirichlet);
    EXPECT_EQ(default_boundary_kind(Side::Bottom), BoundaryKind::Neumann);
    EXPECT_EQ(default_boundary_kind(Side::Top), BoundaryKind::Neumann);
}

TEST(MeshBuild, RefinementIsNested) {
    for (ElementKind k : {ElementKind::Interval, ElementKind::Quad, ElementKind::Triangle}) {
        const int dim = dimension_of(k);
        for (int r = 0; r < 5; ++r) {
            const Mesh coarse = build_mesh(dim, k, r), fine = build_mesh(dim, k, r + 1);
            std::set<std::pair<double, double>> fine_set;
            for (const auto& v : fine.vertices) fine_set.insert({v.x, v.y});
            for (const auto& v : coarse.vertices) ASSERT_TRUE(fine_set.count({v.x, v.y}));
        }
    }
}

TEST(MeshBuild, RejectsBadInput) {
    EXPECT_THROW((void)build_mesh(1, ElementKind::Quad, 1), MeshError);
    EXPECT_THROW((void)build_mesh(2, ElementKind::Quad, -1), MeshError);
}

TEST(MeshLocate, FindsContainingElement) {
    const Mesh t = build_mesh(2, ElementKind::Triangle, 1);
    const int e = t.locate({0.3, 0.1});
    // Cell (0,0), bottom triangle.
    EXPECT_EQ(e, 0);
    EXPECT_EQ(t.locate({0.45, 0.25}), 1);
    EXPECT_EQ(t.locate({1.0, 1.0}) / 4, 3);
    EXPECT_THROW((void)t.locate({1.5, 0.0}), MeshError);
}

TEST(MeshDistort, Type3HalvesLeftVertices) {
    const Mesh m = build_mesh(1, ElementKind::Interval, 2, {3, 0.0, 0});
    EXPECT_EQ(m.vertices[1].x, 0.125);
    EXPECT_EQ(m.vertices[3].x, 0.875);
    EXPECT_EQ(m.vertices[2].x, 0.5);
}

TEST(MeshDistort, Type4Map) {
    const Mesh m = build_mesh(1, ElementKind::Interval, 2, {4, 0.0, 0});
    // 0.25 / (1.5 - 0.25) = 0.2 by hand.
    EXPECT_DOUBLE_EQ(m.vertices[1].x, 0.2);
    EXPECT_DOUBLE_EQ(m.vertices[3].x, 0.8);
}

TEST(MeshDistort, Type1IsIdentity) {
    const Mesh a = build_mesh(1, ElementKind::Interval, 4);
    const Mesh b = distort(a, {1, 0.4, 9});
    EXPECT_EQ(a.vertices, b.vertices);
}

TEST(MeshDistort, Type2IsSeededAndBounded) {
    const DistortionSpec spec{2, 0.4, 42};
    const Mesh a = build_mesh(1, ElementKind::Interval, 4, spec);
    const Mesh b = build_mesh(1, ElementKind::Interval, 4, spec);
    EXPECT_EQ(a.vertices, b.vertices);
    const Mesh c = build_mesh(1, ElementKind::Interval, 4, {2, 0.4, 43});
    EXPECT_NE(a.vertices, c.vertices);
    const double h0 = 1.0 / 16;
    for (int i = 1; i < 16; ++i) EXPECT_NEAR(std::fabs(a.vertices[i].x - i * h0), 0.4 * h0, 1e-15);
    EXPECT_EQ(a.vertices.front().x, 0.0);
    EXPECT_EQ(a.vertices.back().x, 1.0);
    EXPECT_EQ(a.n_elements(), 16);
    EXPECT_THROW((void)build_mesh(1, ElementKind::Interval, 4, {2, 0.6, 1}), MeshError);
    EXPECT_THROW((void)build_mesh(2, ElementKind::Quad, 2, {2, 0.4, 1}), MeshError);
}

TEST(MeshDistort, PreservesTopology) {
    for (int type = 1; type <= 4; ++type) {
        const Mesh base = build_mesh(1, ElementKind::Interval, 5);
        const Mesh d = distort(base, {type, 0.4, 5});
        EXPECT_EQ(d.n_vertices(), base.n_vertices());
        EXPECT_EQ(d.cells, base.cells);
        for (int e = 0; e < d.n_elements(); ++e) EXPECT_GT(d.measure(e), 0.0);
    }
}

TEST(DofCount, Examples) {
    // (4*2 + 1)^2 = 81.
    EXPECT_EQ(count_dofs(ElementKind::Quad, 2, 2), 81);
    // (2+1)^2 + 2^2 = 13.
    EXPECT_EQ(count_dofs(ElementKind::Triangle, 1, 1), 13);
    EXPECT_EQ(count_dofs(ElementKind::Quad, 0, 1), 4);
    // 13 vertices plus 12 grid and 16 diagonal edges.
    EXPECT_EQ(count_dofs(ElementKind::Triangle, 1, 2), 41);
    EXPECT_EQ(count_dofs(ElementKind::Interval, 3, 2), 17);
}

TEST(DofCount, PerElement) {
    EXPECT_EQ(dofs_per_element(ElementKind::Quad, 2), 9);
    EXPECT_EQ(dofs_per_element(ElementKind::Triangle, 2), 6);
    EXPECT_EQ(dofs_per_element(ElementKind::Triangle, 1), 3);
    EXPECT_EQ(dofs_per_element(ElementKind::Triangle, 3), 10);
    EXPECT_EQ(dofs_per_element(ElementKind::Interval, 4), 5);
}

TEST(DofCount, RatioApproachesFourIn2D) {
    for (ElementKind k : {ElementKind::Quad, ElementKind::Triangle})
        for (int p = 1; p <= 5; ++p)
            for (int r = 6; r <= 12; ++r) {
                const double ratio = static_cast<double>(count_dofs(k, r + 1, p)) / static_cast<double>(count_dofs(k, r, p));
                EXPECT_NEAR(ratio, 4.0, 0.2) << to_string(k) << " p=" << p << " R=" << r;
            }
}

TEST(MeshDump, TextFormat) {
    std::ostringstream os;
    write_text(os, build_mesh(1, ElementKind::Interval, 1));
    EXPECT_EQ(os.str(), "mesh 1 interval 1 1\nvertices 3\n0\n0.5\n1\nelements 2 2\n0 1\n1 2\nboundary 2\n0 0 left\n1 1 right\n");
}
