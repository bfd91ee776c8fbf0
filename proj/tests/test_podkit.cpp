#include "podecm/podkit.hpp"

#include "podecm/meshgen.hpp"

#include <gtest/gtest.h>

#include <random>

namespace podecm {
namespace {

MatX random_matrix(int rows, int cols, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> dist;
  MatX m(rows, cols);
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) m(i, j) = dist(rng);
  }
  return m;
}

class H1Gram : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    mesh_ = new Mesh(structured_tri6(4));
    cache_ = new QuadCache(build_quad_cache(*mesh_));
    gram_ = new SpMat(h1_gram(*mesh_, *cache_));
  }
  static void TearDownTestSuite() {
    delete gram_;
    delete cache_;
    delete mesh_;
    gram_ = nullptr;
    cache_ = nullptr;
    mesh_ = nullptr;
  }

  static Mesh* mesh_;
  static QuadCache* cache_;
  static SpMat* gram_;
};

Mesh* H1Gram::mesh_ = nullptr;
QuadCache* H1Gram::cache_ = nullptr;
SpMat* H1Gram::gram_ = nullptr;

TEST_F(H1Gram, ConstantFieldMeasuresCellArea) {
  VecX v = VecX::Zero(2 * mesh_->n_nodes());
  for (int a = 0; a < mesh_->n_nodes(); ++a) v(2 * a) = 1.0;
  EXPECT_NEAR(v.dot(*gram_ * v), 1.0, 1e-12);
}

TEST_F(H1Gram, LinearFieldAddsGradientEnergy) {
  // u_x = x: integral of x^2 plus integral of 1 over the unit cell.
  VecX v = VecX::Zero(2 * mesh_->n_nodes());
  for (int a = 0; a < mesh_->n_nodes(); ++a) v(2 * a) = mesh_->nodes(a, 0);
  EXPECT_NEAR(v.dot(*gram_ * v), 1.0 / 3.0 + 1.0, 1e-12);
}

TEST_F(H1Gram, ComponentsDoNotCouple) {
  VecX vx = VecX::Zero(2 * mesh_->n_nodes());
  VecX vy = VecX::Zero(2 * mesh_->n_nodes());
  for (int a = 0; a < mesh_->n_nodes(); ++a) {
    vx(2 * a) = mesh_->nodes(a, 0);
    vy(2 * a + 1) = mesh_->nodes(a, 1);
  }
  EXPECT_NEAR(vx.dot(*gram_ * vy), 0.0, 1e-14);
}

TEST_F(H1Gram, IdentityMorphLeavesGramUnchanged) {
  GeomSpec spec;
  spec.kind = GeomKind::Scale;
  MorphOperator op(*mesh_, *cache_, spec);
  SpMat morphed = h1_gram_morphed(*mesh_, *cache_, op.identity());
  EXPECT_LT((MatX(morphed) - MatX(*gram_)).norm(), 1e-13 * MatX(*gram_).norm());
}

TEST_F(H1Gram, StressGramDiagMatchesQuadratureWeights) {
  VecX diag = stress_gram_diag(*cache_);
  ASSERT_EQ(diag.size(), 4 * cache_->n_qp());
  for (int q = 0; q < cache_->n_qp(); ++q) {
    for (int c = 0; c < 4; ++c) EXPECT_EQ(diag(4 * q + c), cache_->w(q));
  }
  EXPECT_NEAR(diag.sum(), 4.0, 1e-12);
}

class PodSuite : public H1Gram {
 protected:
  static MatX snapshots() {
    return random_matrix(2 * mesh_->n_nodes(), 8, 1234);
  }
};

TEST_F(PodSuite, ModesAreGramOrthonormal) {
  PodResult res = pod(snapshots(), *gram_, 8);
  ASSERT_EQ(res.modes.cols(), 8);
  MatX gm = res.modes.transpose() * (*gram_ * res.modes);
  EXPECT_LT((gm - MatX::Identity(8, 8)).norm(), 1e-10);
}

TEST_F(PodSuite, EigenvaluesSortedDescending) {
  PodResult res = pod(snapshots(), *gram_, 8);
  for (int i = 1; i < res.eigenvalues.size(); ++i) {
    EXPECT_GE(res.eigenvalues(i - 1), res.eigenvalues(i));
  }
  EXPECT_GT(res.eigenvalues(0), 0.0);
}

TEST_F(PodSuite, FullBasisReconstructsSnapshots) {
  MatX s = snapshots();
  PodResult res = pod(s, *gram_, 8);
  MatX coeff = res.modes.transpose() * (*gram_ * s);
  EXPECT_LT((res.modes * coeff - s).norm(), 1e-8 * s.norm());
}

TEST_F(PodSuite, TruncationIsNested) {
  MatX s = snapshots();
  PodResult full = pod(s, *gram_, 8);
  PodResult part = pod(s, *gram_, 3);
  ASSERT_EQ(part.modes.cols(), 3);
  EXPECT_EQ((part.modes - full.modes.leftCols(3)).norm(), 0.0);
}

TEST_F(PodSuite, DroppedEnergyEqualsProjectionError) {
  MatX s = snapshots();
  PodResult full = pod(s, *gram_, 8);
  const int keep = 3;
  MatX basis = full.modes.leftCols(keep);
  MatX residual = s - basis * (basis.transpose() * (*gram_ * s));
  double err2 = 0.0;
  for (int j = 0; j < s.cols(); ++j) {
    err2 += residual.col(j).dot(*gram_ * residual.col(j));
  }
  const double dropped = full.eigenvalues.tail(8 - keep).sum();
  EXPECT_NEAR(err2, dropped, 1e-8 * full.eigenvalues.sum());
}

TEST_F(PodSuite, RankDeficientSnapshotsDropNullDirections) {
  MatX s = snapshots();
  s.col(7) = 2.0 * s.col(3) - s.col(4);  // make one column dependent
  PodResult res = pod(s, *gram_, 8, 1e-6);
  EXPECT_EQ(res.modes.cols(), 7);
}

TEST(PodDiag, MatchesDenseGramPod) {
  const int n = 40;
  MatX s = random_matrix(n, 6, 77);
  VecX diag = random_matrix(n, 1, 88).cwiseAbs().col(0).array() + 0.5;
  PodResult res = pod_diag(s, diag, 6);
  MatX gm = res.modes.transpose() * diag.asDiagonal() * res.modes;
  EXPECT_LT((gm - MatX::Identity(6, 6)).norm(), 1e-10);
  MatX coeff = res.modes.transpose() * (diag.asDiagonal() * s);
  EXPECT_LT((res.modes * coeff - s).norm(), 1e-8 * s.norm());
}

TEST_F(PodSuite, DeterministicAcrossRepeats) {
  PodResult a = pod(snapshots(), *gram_, 5);
  PodResult b = pod(snapshots(), *gram_, 5);
  EXPECT_EQ((a.modes - b.modes).norm(), 0.0);
  EXPECT_EQ((a.eigenvalues - b.eigenvalues).norm(), 0.0);
}

TEST_F(H1Gram, OrthonormalizeRejectsDependentColumns) {
  MatX basis = random_matrix(2 * mesh_->n_nodes(), 5, 42);
  basis.col(4) = basis.col(0) - 3.0 * basis.col(2);
  MatX q = orthonormalize(basis, *gram_);
  ASSERT_EQ(q.cols(), 4);
  MatX gm = q.transpose() * (*gram_ * q);
  EXPECT_LT((gm - MatX::Identity(4, 4)).norm(), 1e-12);
}

TEST_F(H1Gram, InjectionBasisMatchesDofExpansion) {
  PeriodicPairing pairing = periodic_pairs(*mesh_);
  DofMap dofs = periodic_dof_map(*mesh_, pairing);
  MatX basis = periodic_injection_basis(*mesh_, dofs);
  ASSERT_EQ(basis.cols(), dofs.n_red);
  VecX reduced = random_matrix(dofs.n_red, 1, 5).col(0);
  VecX via_basis = basis * reduced;
  VecX via_map = dofs.expand(reduced, mesh_->n_nodes());
  EXPECT_EQ((via_basis - via_map).norm(), 0.0);
}

}  // namespace
}  // namespace podecm
