#include "podecm/microfem.hpp"

#include "podecm/meshgen.hpp"

#include <gtest/gtest.h>

#include <random>

namespace podecm {
namespace {

std::vector<PlasticityParams> two_phase_materials() {
  PlasticityParams matrix;
  matrix.E = 10;
  matrix.nu = 0.3;
  matrix.sigma_y0 = 0.2;
  matrix.H = 5;
  PlasticityParams inclusion;
  inclusion.E = 100;
  inclusion.nu = 0.3;
  inclusion.sigma_y0 = 1e12;
  inclusion.H = 5;
  return {matrix, inclusion};
}

TEST(Schedules, CyclicAndRampWaypoints) {
  const Mat2 u = (Mat2() << 1.1, 0.05, 0.0, 0.92).finished();
  const LoadSchedule cyc = cyclic_schedule(u, 40);
  ASSERT_EQ(cyc.fbar.size(), 40u);
  EXPECT_NEAR((cyc.fbar[9] - u).norm(), 0.0, 1e-14);  // k = 10 at the peak
  const Mat2 lo = 2 * Mat2::Identity() - u;
  EXPECT_NEAR((cyc.fbar[29] - lo).norm(), 0.0, 1e-14);  // k = 30 at the trough
  EXPECT_NEAR((cyc.fbar[39] - Mat2::Identity()).norm(), 0.0, 1e-14);

  const LoadSchedule ramp = ramp_schedule(u, 50);
  ASSERT_EQ(ramp.fbar.size(), 50u);
  EXPECT_NEAR((ramp.fbar[24] - u).norm(), 0.0, 1e-14);
  EXPECT_NEAR((ramp.fbar[49] - Mat2::Identity()).norm(), 0.0, 1e-14);
}

// A homogeneous cell under any uniform deformation has zero fluctuation, so
// the cell average must coincide with the single-point response, plastic
// history included.
TEST(MicroFem, HomogeneousCellMatchesPointDriver) {
  const Mesh mesh = structured_tri6(4);
  const QuadCache cache = build_quad_cache(mesh);
  auto mats = two_phase_materials();
  const RveProblem prob = RveProblem::build(mesh, cache, {mats[0]});
  const MorphOperator op(mesh, cache, GeomSpec{GeomKind::Scale, {}});
  const MorphField morph = op.identity();

  const Mat2 u = (Mat2() << 1.06, 0.04, 0.0, 0.95).finished();
  const LoadSchedule schedule = cyclic_schedule(u, 8);
  const RveSolution sol = solve_rve(prob, morph, schedule, NewtonOpts{});

  PlasticState point;
  for (std::size_t k = 0; k < schedule.fbar.size(); ++k) {
    EXPECT_LT(sol.steps[k].w_red.norm(), 1e-10) << "step " << k;
    const LargeResult r =
        large_strain_update(mats[0], point, schedule.fbar[k], &point);
    EXPECT_NEAR((sol.steps[k].pbar - r.P).norm(), 0.0, 1e-10) << "step " << k;
  }
  // residual state after the cycle: back at identity but not stress free
  EXPECT_GT(sol.steps.back().pbar.norm(), 1e-3);
}

class CompositeCell : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    spec_ = new GeomSpec(composite_geometry());
    mesh_ = new Mesh(fitted_cell_mesh(8, *spec_));
    cache_ = new QuadCache(build_quad_cache(*mesh_));
    prob_ = new RveProblem(
        RveProblem::build(*mesh_, *cache_, two_phase_materials()));
    op_ = new MorphOperator(*mesh_, *cache_, *spec_);
    morph_ = new MorphField(op_->solve({0.9}));
  }
  static void TearDownTestSuite() {
    delete morph_;
    delete op_;
    delete prob_;
    delete cache_;
    delete mesh_;
    delete spec_;
  }

  static GeomSpec* spec_;
  static Mesh* mesh_;
  static QuadCache* cache_;
  static RveProblem* prob_;
  static MorphOperator* op_;
  static MorphField* morph_;
};

GeomSpec* CompositeCell::spec_ = nullptr;
Mesh* CompositeCell::mesh_ = nullptr;
QuadCache* CompositeCell::cache_ = nullptr;
RveProblem* CompositeCell::prob_ = nullptr;
MorphOperator* CompositeCell::op_ = nullptr;
MorphField* CompositeCell::morph_ = nullptr;

TEST_F(CompositeCell, NewtonConvergesSuperlinearly) {
  const Mat2 fbar = (Mat2() << 1.05, 0.03, 0.0, 0.96).finished();
  std::vector<PlasticState> states0(cache_->n_qp());
  const StepResult res = solve_step(*prob_, *morph_, states0, fbar,
                                    VecX::Zero(prob_->dofs.n_red), NewtonOpts{});
  EXPECT_LE(res.iters, 6);
  EXPECT_GT(res.pbar.norm(), 1e-3);
}

TEST_F(CompositeCell, AssembledTangentMatchesResidualDifferences) {
  // put the cell into a partly plastic state first
  const Mat2 f1 = (Mat2() << 1.04, 0.02, 0.0, 0.97).finished();
  std::vector<PlasticState> states0(cache_->n_qp());
  const StepResult base = solve_step(*prob_, *morph_, states0, f1,
                                     VecX::Zero(prob_->dofs.n_red), NewtonOpts{});

  const Mat2 f2 = (Mat2() << 1.06, 0.03, 0.01, 0.95).finished();
  AssemblyOpts ao;
  const Assembly as = assemble(*prob_, *morph_, base.states, nullptr, f2,
                               base.w_red, ao);

  std::mt19937 rng(5);
  std::normal_distribution<double> g(0, 1);
  const double h = 1e-6;
  AssemblyOpts no_tan;
  no_tan.tangent = false;
  for (int trial = 0; trial < 10; ++trial) {
    VecX dir(prob_->dofs.n_red);
    for (int i = 0; i < dir.size(); ++i) dir(i) = g(rng);
    dir /= dir.norm();
    const VecX fp = assemble(*prob_, *morph_, base.states, nullptr, f2,
                             base.w_red + h * dir, no_tan)
                        .f;
    const VecX fm = assemble(*prob_, *morph_, base.states, nullptr, f2,
                             base.w_red - h * dir, no_tan)
                        .f;
    const VecX fd = (fp - fm) / (2 * h);
    const VecX kd = as.k * dir;
    EXPECT_LT((kd - fd).norm() / fd.norm(), 1e-5) << "direction " << trial;
  }
}

TEST_F(CompositeCell, EffectiveStiffnessMatchesStressDifferences) {
  const Mat2 f1 = (Mat2() << 1.04, 0.02, 0.0, 0.97).finished();
  std::vector<PlasticState> states0(cache_->n_qp());
  const StepResult s1 = solve_step(*prob_, *morph_, states0, f1,
                                   VecX::Zero(prob_->dofs.n_red), NewtonOpts{});
  const Mat2 f2 = (Mat2() << 1.055, 0.025, 0.005, 0.96).finished();
  const StepResult s2 =
      solve_step(*prob_, *morph_, s1.states, f2, s1.w_red, NewtonOpts{});

  const Tensor4 abar =
      effective_stiffness(*prob_, *morph_, s1.states, f2, s2.w_red);

  // central differences of the converged effective stress, restarting each
  // perturbed solve from the same committed history
  const double h = 1e-6;
  for (int k = 0; k < 2; ++k)
    for (int l = 0; l < 2; ++l) {
      Mat2 fp = f2, fm = f2;
      fp(k, l) += h;
      fm(k, l) -= h;
      const Mat2 pp =
          solve_step(*prob_, *morph_, s1.states, fp, s2.w_red, NewtonOpts{})
              .pbar;
      const Mat2 pm =
          solve_step(*prob_, *morph_, s1.states, fm, s2.w_red, NewtonOpts{})
              .pbar;
      const Mat2 fd = (pp - pm) / (2 * h);
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          EXPECT_NEAR(abar(i, j, k, l), fd(i, j),
                      1e-4 * std::max(1.0, std::abs(fd(i, j))))
              << i << j << k << l;
    }
}

TEST_F(CompositeCell, PlasticCycleLeavesResidualState) {
  const Mat2 u = (Mat2() << 1.08, 0.04, 0.0, 0.94).finished();
  const LoadSchedule schedule = cyclic_schedule(u, 8);
  const RveSolution sol = solve_rve(*prob_, *morph_, schedule, NewtonOpts{});
  // unloaded at the end of the cycle, but plastically deformed
  EXPECT_GT(sol.steps.back().pbar.norm(), 1e-3);
  EXPECT_GT(sol.steps.back().w_red.norm(), 1e-6);
}

}  // namespace
}  // namespace podecm
