#include "podecm/meshgen.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace podecm {
namespace {

double region_volume(const Mesh& mesh, const QuadCache& cache, int region) {
  double v = 0;
  for (int q = 0; q < cache.n_qp(); ++q)
    if (mesh.regions(cache.elem_of(q)) == region) v += cache.w(q);
  return v;
}

double ellipse_area(const GeomSpec& spec) {
  double a = 0;
  for (const Ellipse& e : spec.ellipses) a += M_PI * e.a * e.b;
  return a;
}

TEST(Geometry, TargetEllipses) {
  const GeomSpec comp = composite_geometry();
  const auto scaled = comp.target_ellipses({1.2});
  for (std::size_t k = 0; k < scaled.size(); ++k) {
    EXPECT_NEAR(scaled[k].a, 1.2 * comp.ellipses[k].a, 1e-15);
    EXPECT_NEAR(scaled[k].b, 1.2 * comp.ellipses[k].b, 1e-15);
    EXPECT_EQ(scaled[k].cx, comp.ellipses[k].cx);
  }

  const GeomSpec pore = pore_geometry();
  const auto t = pore.target_ellipses({0.5, 1.5});
  double void_area = 0.0;
  for (const Ellipse& e : t) {
    void_area += M_PI * e.a * e.b;
    EXPECT_NEAR(e.b / e.a, 1.5, 1e-13);
    EXPECT_NEAR(e.a, t[0].a, 1e-15);  // congruent holes
  }
  EXPECT_NEAR(void_area, 0.5, 1e-13);
  EXPECT_NEAR(pore.material_area({0.5, 1.5}), 0.5, 1e-15);
}

TEST(Geometry, CompositeTargetsStayDisjointInsideCell) {
  const GeomSpec spec = composite_geometry();
  const auto big = spec.target_ellipses({1.2});
  // sampled separation check between every pair, and margin to the box
  for (std::size_t i = 0; i < big.size(); ++i) {
    for (int s = 0; s < 256; ++s) {
      const double th = 2 * M_PI * s / 256;
      const Vec2 x = big[i].to_world(
          Vec2(big[i].a * std::cos(th), big[i].b * std::sin(th)));
      EXPECT_GT(x(0), 0.02);
      EXPECT_LT(x(0), 0.98);
      EXPECT_GT(x(1), 0.02);
      EXPECT_LT(x(1), 0.98);
      for (std::size_t j = 0; j < big.size(); ++j) {
        if (j == i) continue;
        EXPECT_GT(big[j].level(x), 0.05) << "ellipses " << i << "," << j;
      }
    }
  }
}

TEST(Geometry, JsonRoundTrip) {
  const GeomSpec spec = composite_geometry();
  const std::string p = "/tmp/podecm_geom_test.json";
  save_geometry(spec, p);
  const GeomSpec back = load_geometry(p);
  EXPECT_EQ(back.kind, spec.kind);
  ASSERT_EQ(back.ellipses.size(), spec.ellipses.size());
  for (std::size_t k = 0; k < spec.ellipses.size(); ++k) {
    EXPECT_NEAR(back.ellipses[k].a, spec.ellipses[k].a, 1e-12);
    EXPECT_NEAR(back.ellipses[k].angle, spec.ellipses[k].angle, 1e-12);
    EXPECT_EQ(back.ellipses[k].tag, spec.ellipses[k].tag);
  }
  std::remove(p.c_str());
}

TEST(FittedMesh, CompositeCell) {
  const GeomSpec spec = composite_geometry();
  const Mesh mesh = fitted_cell_mesh(16, spec);
  const QuadCache cache = build_quad_cache(mesh);

  EXPECT_NEAR(cache.w.sum(), 1.0, 2e-3);
  const double frac = region_volume(mesh, cache, 1);
  EXPECT_NEAR(frac, ellipse_area(spec), 0.02);

  // fitted interface nodes sit on their ellipse
  for (std::size_t k = 0; k < spec.ellipses.size(); ++k) {
    const auto nodes = mesh.nodes_with_tag(spec.ellipses[k].tag);
    EXPECT_GE(nodes.size(), 8u) << "ellipse " << k;
    for (int n : nodes)
      EXPECT_NEAR(spec.ellipses[k].level(mesh.nodes.row(n).transpose()), 0.0,
                  1e-9);
  }

  // outer boundary must survive fitting for the periodic constraints
  EXPECT_NO_THROW(periodic_pairs(mesh));
}

TEST(FittedMesh, PoreCell) {
  const GeomSpec spec = pore_geometry();
  const Mesh mesh = fitted_cell_mesh(14, spec);
  const QuadCache cache = build_quad_cache(mesh);

  const double v = spec.parent_params()[0];
  EXPECT_NEAR(cache.w.sum(), 1.0 - v, 0.01);
  EXPECT_EQ(region_volume(mesh, cache, 1), 0.0);

  const auto hole = mesh.nodes_with_tag(spec.ellipses[0].tag);
  EXPECT_GE(hole.size(), 12u);
  for (int n : hole)
    EXPECT_NEAR(spec.ellipses[0].level(mesh.nodes.row(n).transpose()), 0.0, 1e-9);

  EXPECT_NO_THROW(periodic_pairs(mesh));
}

TEST(FittedMesh, Deterministic) {
  const GeomSpec spec = composite_geometry();
  EXPECT_EQ(fitted_cell_mesh(12, spec).fingerprint(),
            fitted_cell_mesh(12, spec).fingerprint());
}

}  // namespace
}  // namespace podecm
