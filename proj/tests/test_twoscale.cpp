#include "podecm/twoscale.hpp"

#include "podecm/meshgen.hpp"

#include <gtest/gtest.h>

#include <Eigen/SparseLU>

#include <cmath>

namespace podecm {
namespace {

MacroConfig small_config() {
  MacroConfig cfg;
  cfg.nx = 2;
  cfg.ny = 1;
  cfg.steps = 10;
  cfg.peak_traction = 0.02;  // stays elastic
  return cfg;
}

// Independent single-scale reference: one linear solve of the same plate
// with the same discretization, assembled through the material tangent.
VecX linear_reference(const MacroConfig& cfg, double e, double nu,
                      double factor) {
  const Mesh mesh = structured_quad8(cfg.nx, cfg.ny, cfg.width, cfg.height);
  const QuadCache cache = build_quad_cache(mesh);
  const DofMap dofs = dirichlet_dof_map(mesh, mesh.nodes_with_tag(kBottomTag));
  const int npe = nodes_per_elem(mesh.kind);
  PlasticityParams p{e, nu, 1e300, 0.0};
  const Tensor4 d = elastic_tangent_2d(p.lambda(), p.mu());

  std::vector<Triplet> trips;
  for (int q = 0; q < cache.n_qp(); ++q) {
    const int el = cache.elem_of(q);
    for (int a = 0; a < npe; ++a) {
      const int da = dofs.node_dof(mesh.elements(el, a));
      if (da < 0) continue;
      for (int b = 0; b < npe; ++b) {
        const int db = dofs.node_dof(mesh.elements(el, b));
        if (db < 0) continue;
        for (int r = 0; r < 2; ++r) {
          for (int s = 0; s < 2; ++s) {
            double v = 0.0;
            for (int c = 0; c < 2; ++c) {
              for (int dd = 0; dd < 2; ++dd) {
                v += cache.grad[q](a, c) * d(r, c, s, dd) *
                     cache.grad[q](b, dd);
              }
            }
            trips.emplace_back(da + r, db + s, cache.w(q) * v);
          }
        }
      }
    }
  }
  SpMat k(dofs.n_red, dofs.n_red);
  k.setFromTriplets(trips.begin(), trips.end());

  VecX f_full = VecX::Zero(2 * mesh.n_nodes());
  const EdgeRule& er = edge_rule();
  for (const auto& edge : mesh.boundary_edges(kTopTag)) {
    Eigen::Matrix<double, 3, 2> xe;
    for (int i = 0; i < 3; ++i) xe.row(i) = mesh.nodes.row(edge[i]);
    for (int kq = 0; kq < er.points.size(); ++kq) {
      const Vec2 x = xe.transpose() * er.n.col(kq);
      const Vec2 dx = xe.transpose() * er.dn.col(kq);
      const double s = 2.0 * x(0) / cfg.width - 1.0;
      const double ty = -cfg.peak_traction * (1.0 - s * s);
      for (int i = 0; i < 3; ++i) {
        f_full(2 * edge[i] + 1) += er.weights(kq) * dx.norm() * ty * er.n(i, kq);
      }
    }
  }
  Eigen::SparseLU<SpMat> solver;
  solver.compute(k);
  VecX u = solver.solve(VecX(factor * dofs.reduce(f_full)));
  return dofs.expand(u, mesh.n_nodes());
}

TEST(LinearEngine, StressAndTangentAreConsistent) {
  LinearElasticEngine engine(10.0, 0.3);
  Mat2 f;
  f << 1.001, 0.002, -0.001, 0.9985;
  Mat2 p;
  Tensor4 a;
  engine.respond(f, &p, &a);
  EXPECT_LT((a.contract(f - Mat2::Identity()) - p).norm(), 1e-15);
  EXPECT_NEAR(p(0, 1), p(1, 0), 1e-15);  // symmetric stress from sym strain
}

TEST(Twoscale, LinearEngineReproducesSingleScaleSolution) {
  MacroConfig cfg = small_config();
  TwoscaleResult res = run_twoscale(cfg, [](const Vec2&) {
    return std::make_unique<LinearElasticEngine>(10.0, 0.3);
  });

  ASSERT_EQ(res.load_factor.size(), 10u);
  EXPECT_EQ(res.load_factor[4], 1.0);  // peak after the up-ramp
  EXPECT_EQ(res.load_factor[9], 0.0);

  // Linearity makes the displacement proportional to the load factor, so
  // the compliance must be quadratic in it, and nothing remains after the
  // unload.
  for (size_t k = 0; k < res.compliance.size(); ++k) {
    const double factor = res.load_factor[k];
    EXPECT_NEAR(res.compliance[k], factor * factor * res.compliance[4], 1e-10)
        << "step " << k;
  }
  EXPECT_GT(res.compliance[4], 0.0);
  EXPECT_LT(res.residual_norm, 1e-10);

  // At peak load the compliance equals the external work of the one-shot
  // single-scale solution, computed with an independent assembly.
  const VecX ref = linear_reference(cfg, 10.0, 0.3, 1.0);
  const Mesh mesh = structured_quad8(cfg.nx, cfg.ny, cfg.width, cfg.height);
  const EdgeRule& er = edge_rule();
  double work_ref = 0.0;
  for (const auto& edge : mesh.boundary_edges(kTopTag)) {
    Eigen::Matrix<double, 3, 2> xe;
    for (int i = 0; i < 3; ++i) xe.row(i) = mesh.nodes.row(edge[i]);
    for (int kq = 0; kq < er.points.size(); ++kq) {
      const Vec2 x = xe.transpose() * er.n.col(kq);
      const Vec2 dx = xe.transpose() * er.dn.col(kq);
      const double s = 2.0 * x(0) / cfg.width - 1.0;
      const double ty = -cfg.peak_traction * (1.0 - s * s);
      double uy = 0.0;
      for (int i = 0; i < 3; ++i) uy += er.n(i, kq) * ref(2 * edge[i] + 1);
      work_ref += er.weights(kq) * dx.norm() * ty * uy;
    }
  }
  EXPECT_NEAR(res.compliance[4], work_ref, 1e-9 * std::abs(work_ref));
}

TEST(Twoscale, HomogeneousFullEngineStaysNearTheLinearAnswer) {
  MacroConfig cfg = small_config();

  // Elastic homogeneous cell: the two-scale answer must approach plain
  // linear elasticity at these strain levels.
  auto mesh = std::make_shared<Mesh>(structured_tri6(3));
  auto cache = std::make_shared<QuadCache>(build_quad_cache(*mesh));
  PlasticityParams mat{10.0, 0.3, 1e300, 0.0};
  auto prob = std::make_shared<RveProblem>(
      RveProblem::build(*mesh, *cache, {mat}));
  GeomSpec empty;
  MorphOperator op(*mesh, *cache, empty);
  MorphField identity = op.identity();

  TwoscaleResult full = run_twoscale(cfg, [&](const Vec2&) {
    return std::make_unique<FullMicroEngine>(*prob, identity, NewtonOpts{});
  });
  TwoscaleResult linear = run_twoscale(cfg, [](const Vec2&) {
    return std::make_unique<LinearElasticEngine>(10.0, 0.3);
  });

  ASSERT_EQ(full.compliance.size(), linear.compliance.size());
  EXPECT_NEAR(full.compliance[4], linear.compliance[4],
              5e-3 * std::abs(linear.compliance[4]));
  EXPECT_LT(full.residual_norm, 1e-8);
  EXPECT_GT(full.micro_evals, 0);
}

TEST(GradedParams, FieldSpansTheDesignedBox) {
  GeomParams left = graded_pore_params({0.0, 0.0});
  EXPECT_NEAR(left[0], 0.5, 1e-15);
  EXPECT_NEAR(left[1], 1.5, 1e-15);
  GeomParams right_top = graded_pore_params({2.0, 1.0});
  EXPECT_NEAR(right_top[0], 0.5, 1e-15);
  EXPECT_NEAR(right_top[1], 1.01, 1e-15);
  GeomParams center = graded_pore_params({1.0, 0.5});
  EXPECT_NEAR(center[0], 0.4, 1e-15);
  EXPECT_NEAR(center[1], 1.255, 1e-15);
}

TEST(EffectiveProperties, UniaxialProbeBehavesPhysically) {
  GeomSpec spec = pore_geometry();
  Mesh mesh = fitted_cell_mesh(14, spec);
  QuadCache cache = build_quad_cache(mesh);
  PlasticityParams mat{10.0, 0.3, 0.2, 5.0};
  RveProblem prob = RveProblem::build(mesh, cache, {mat});
  MorphOperator op(mesh, cache, spec);

  PropertyPoint a = effective_properties(prob, op, 0.40, 1.25);
  PropertyPoint b = effective_properties(prob, op, 0.50, 1.25);

  EXPECT_LT(std::abs(a.pbar_xx), 1e-8);
  EXPECT_GT(a.e_eff, 0.0);
  EXPECT_LT(a.e_eff, 10.0);       // softer than the matrix
  EXPECT_GT(b.e_eff, 0.0);
  EXPECT_GT(a.e_eff, b.e_eff);    // more void, softer cell
  EXPECT_GT(a.nu_eff, 0.0);
  EXPECT_LT(a.nu_eff, 0.5);
}

}  // namespace
}  // namespace podecm
