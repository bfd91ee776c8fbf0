#include "podecm/morph.hpp"

#include "podecm/meshgen.hpp"

#include <gtest/gtest.h>

namespace podecm {
namespace {

class CompositeMorph : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    spec_ = new GeomSpec(composite_geometry());
    mesh_ = new Mesh(fitted_cell_mesh(12, *spec_));
    cache_ = new QuadCache(build_quad_cache(*mesh_));
    op_ = new MorphOperator(*mesh_, *cache_, *spec_);
  }
  static void TearDownTestSuite() {
    delete op_;
    delete cache_;
    delete mesh_;
    delete spec_;
  }

  static GeomSpec* spec_;
  static Mesh* mesh_;
  static QuadCache* cache_;
  static MorphOperator* op_;
};

GeomSpec* CompositeMorph::spec_ = nullptr;
Mesh* CompositeMorph::mesh_ = nullptr;
QuadCache* CompositeMorph::cache_ = nullptr;
MorphOperator* CompositeMorph::op_ = nullptr;

TEST_F(CompositeMorph, ParentParametersGiveIdentity) {
  const MorphField f = op_->solve({1.0});
  EXPECT_EQ(f.d.norm(), 0.0);
  for (int q = 0; q < 8; ++q) EXPECT_EQ(f.det_fmu(q), 1.0);
  EXPECT_NEAR(f.volume, cache_->w.sum(), 1e-14);
}

TEST_F(CompositeMorph, InterfaceLandsOnTarget) {
  const double zeta = 1.18;
  const MorphField f = op_->solve({zeta});
  const auto targets = spec_->target_ellipses({zeta});
  for (std::size_t k = 0; k < targets.size(); ++k) {
    for (int n : mesh_->nodes_with_tag(spec_->ellipses[k].tag)) {
      const Vec2 x = mesh_->nodes.row(n).transpose() +
                     Vec2(f.d(2 * n), f.d(2 * n + 1));
      EXPECT_NEAR(targets[k].level(x), 0.0, 1e-9);
    }
  }
}

TEST_F(CompositeMorph, OuterBoundaryPinned) {
  const MorphField f = op_->solve({0.55});
  for (int n : mesh_->nodes_with_tag(kOuterTag)) {
    EXPECT_EQ(f.d(2 * n), 0.0);
    EXPECT_EQ(f.d(2 * n + 1), 0.0);
  }
}

TEST_F(CompositeMorph, MapStaysInvertibleAcrossTheRange) {
  for (double zeta : {0.5, 0.75, 1.0, 1.1, 1.2}) {
    const MorphField f = op_->solve({zeta});
    EXPECT_GT(f.min_det, 0.05) << "zeta = " << zeta;
    // boundary is fixed, so the morph preserves the total cell volume
    EXPECT_NEAR(f.volume, 1.0, 3e-3) << "zeta = " << zeta;
  }
}

TEST_F(CompositeMorph, SmoothInParameters) {
  const MorphField a = op_->solve({0.9});
  const MorphField b = op_->solve({0.9 + 1e-6});
  EXPECT_LT((a.d - b.d).norm(), 1e-4);
  EXPECT_GT((a.d - b.d).norm(), 0.0);
}

TEST(PoreMorph, ExtremeCornersStayValid) {
  const GeomSpec spec = pore_geometry();
  const Mesh mesh = fitted_cell_mesh(14, spec);
  const QuadCache cache = build_quad_cache(mesh);
  const MorphOperator op(mesh, cache, spec);

  struct Case {
    double v, kappa, tol;
  };
  for (const Case& c : {Case{0.4, 1.01, 0.01}, Case{0.5, 1.5, 0.02},
                        Case{0.45, 1.25, 0.01}, Case{0.5, 1.01, 0.01}}) {
    const MorphField f = op.solve({c.v, c.kappa});
    EXPECT_GT(f.min_det, 0.0) << "v = " << c.v << ", kappa = " << c.kappa;
    EXPECT_NEAR(f.volume, 1.0 - c.v, c.tol)
        << "v = " << c.v << ", kappa = " << c.kappa;
  }
}

}  // namespace
}  // namespace podecm
