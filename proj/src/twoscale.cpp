#include "podecm/twoscale.hpp"

#include "podecm/meshgen.hpp"

#include <Eigen/SparseLU>

#include <cmath>
#include <utility>

namespace podecm {

LinearElasticEngine::LinearElasticEngine(double e, double nu) {
  PlasticityParams p{e, nu, 1e300, 0.0};
  d_ = elastic_tangent_2d(p.lambda(), p.mu());
}

void LinearElasticEngine::respond(const Mat2& fbar, Mat2* pbar, Tensor4* abar) {
  *pbar = d_.contract(fbar - Mat2::Identity());
  if (abar != nullptr) *abar = d_;
}

FullMicroEngine::FullMicroEngine(const RveProblem& prob, MorphField morph,
                                 NewtonOpts opts)
    : prob_(&prob),
      morph_(std::move(morph)),
      opts_(opts),
      states_(prob.cache->n_qp()),
      w_(VecX::Zero(prob.dofs.n_red)) {}

void FullMicroEngine::respond(const Mat2& fbar, Mat2* pbar, Tensor4* abar) {
  NewtonOpts opts = opts_;
  opts.force_ref = std::max(opts.force_ref, force_ref_);
  StepResult step = solve_step_adaptive(*prob_, morph_, states_,
                                        fbar_committed_, fbar, w_, opts, true);
  force_ref_ = std::max(force_ref_, step.initial_residual);
  states_trial_ = std::move(step.states);
  w_trial_ = step.w_red;
  fbar_trial_ = fbar;
  *pbar = step.pbar;
  if (abar != nullptr) {
    *abar = effective_stiffness(*prob_, morph_, states_, fbar, w_trial_);
  }
}

void FullMicroEngine::commit() {
  if (!states_trial_.empty()) {
    states_ = states_trial_;
    w_ = w_trial_;
    fbar_committed_ = fbar_trial_;
  }
}

RomMicroEngine::RomMicroEngine(const RveProblem& prob, const RomModel& model,
                               const MorphField& morph, NewtonOpts opts,
                               std::vector<std::pair<double, double>>
                                   stretch_bounds)
    : prob_(&prob),
      model_(&model),
      slice_(slice_morph(morph, model.ecm_ids)),
      opts_(opts),
      states_(model.n_points()),
      a_(VecX::Zero(model.n_modes())),
      stretch_bounds_(std::move(stretch_bounds)) {}

void RomMicroEngine::respond(const Mat2& fbar, Mat2* pbar, Tensor4* abar) {
  if (stretch_bounds_.size() == 3) {
    const double comp[3] = {fbar(0, 0), fbar(1, 1), fbar(0, 1)};
    for (int k = 0; k < 3; ++k) {
      if (comp[k] < stretch_bounds_[k].first ||
          comp[k] > stretch_bounds_[k].second) {
        ++out_of_range_;
        break;
      }
    }
  }
  NewtonOpts opts = opts_;
  opts.force_ref = std::max(opts.force_ref, force_ref_);
  RomStepResult step = rom_solve_step_adaptive(
      *prob_, *model_, slice_, states_, fbar_committed_, fbar, a_, opts);
  force_ref_ = std::max(force_ref_, step.initial_residual);
  states_trial_ = std::move(step.states);
  a_trial_ = step.a;
  fbar_trial_ = fbar;
  *pbar = step.pbar;
  if (abar != nullptr) {
    *abar = rom_effective_stiffness(*prob_, *model_, slice_, states_, fbar,
                                    a_trial_);
  }
}

void RomMicroEngine::commit() {
  if (!states_trial_.empty()) {
    states_ = states_trial_;
    a_ = a_trial_;
    fbar_committed_ = fbar_trial_;
  }
}

GeomParams graded_pore_params(const Vec2& x) {
  const double v = 0.4 + 0.1 * (1.0 - x(0)) * (1.0 - x(0));
  const double kappa = 1.5 - 0.49 * x(1);
  return {v, kappa};
}

namespace {

// Consistent nodal force of the parabolic top traction at unit load factor,
// integrated on the reference edge geometry.
VecX traction_force(const Mesh& mesh, double width, double peak) {
  VecX f = VecX::Zero(2 * mesh.n_nodes());
  const EdgeRule& er = edge_rule();
  for (const auto& edge : mesh.boundary_edges(kTopTag)) {
    Eigen::Matrix<double, 3, 2> xe;
    for (int i = 0; i < 3; ++i) xe.row(i) = mesh.nodes.row(edge[i]);
    for (int k = 0; k < er.points.size(); ++k) {
      const Vec2 x = xe.transpose() * er.n.col(k);
      const Vec2 dx = xe.transpose() * er.dn.col(k);
      const double s = 2.0 * x(0) / width - 1.0;
      const double ty = -peak * (1.0 - s * s);
      const double c = er.weights(k) * dx.norm() * ty;
      for (int i = 0; i < 3; ++i) {
        f(2 * edge[i] + 1) += c * er.n(i, k);
      }
    }
  }
  return f;
}

}  // namespace

TwoscaleResult run_twoscale(const MacroConfig& cfg,
                            const EngineFactory& factory) {
  const Mesh mesh = structured_quad8(cfg.nx, cfg.ny, cfg.width, cfg.height);
  const QuadCache cache = build_quad_cache(mesh);
  const DofMap dofs = dirichlet_dof_map(mesh, mesh.nodes_with_tag(kBottomTag));
  const int npe = nodes_per_elem(mesh.kind);

  std::vector<std::unique_ptr<MicroEngine>> engines;
  engines.reserve(cache.n_qp());
  for (int q = 0; q < cache.n_qp(); ++q) {
    engines.push_back(factory(Vec2(cache.x.row(q).transpose())));
  }

  const VecX f_ext_full = traction_force(mesh, cfg.width, cfg.peak_traction);
  const VecX f_ext = dofs.reduce(f_ext_full);

  TwoscaleResult result;
  VecX u = VecX::Zero(dofs.n_red);
  Eigen::SparseLU<SpMat> solver;
  bool analyzed = false;

  const int up_steps = cfg.steps / 2;
  for (int step = 0; step < cfg.steps; ++step) {
    const double factor =
        step < up_steps
            ? static_cast<double>(step + 1) / up_steps
            : static_cast<double>(cfg.steps - 1 - step) / (cfg.steps - up_steps);

    double tol = cfg.newton.eps_abs;
    int iters = 0;
    for (int it = 0;; ++it) {
      const VecX u_full = dofs.expand(u, mesh.n_nodes());
      VecX f_int = VecX::Zero(2 * mesh.n_nodes());
      std::vector<Triplet> trips;
      trips.reserve(static_cast<size_t>(cache.n_qp()) * npe * npe * 4);
      for (int q = 0; q < cache.n_qp(); ++q) {
        const int e = cache.elem_of(q);
        Mat2 h = Mat2::Zero();
        for (int a = 0; a < npe; ++a) {
          const int node = mesh.elements(e, a);
          h.row(0) += u_full(2 * node) * cache.grad[q].row(a);
          h.row(1) += u_full(2 * node + 1) * cache.grad[q].row(a);
        }
        Mat2 pbar;
        Tensor4 abar;
        engines[q]->respond(Mat2::Identity() + h, &pbar, &abar);
        ++result.micro_evals;
        const double w = cache.w(q);
        for (int a = 0; a < npe; ++a) {
          const int na = mesh.elements(e, a);
          const Vec2 ga = cache.grad[q].row(a).transpose();
          f_int(2 * na) += w * pbar.row(0).dot(ga);
          f_int(2 * na + 1) += w * pbar.row(1).dot(ga);
          const int da = dofs.node_dof(na);
          if (da < 0) continue;
          for (int b = 0; b < npe; ++b) {
            const int nb = mesh.elements(e, b);
            const int db = dofs.node_dof(nb);
            if (db < 0) continue;
            const Vec2 gb = cache.grad[q].row(b).transpose();
            for (int r = 0; r < 2; ++r) {
              for (int s = 0; s < 2; ++s) {
                double v = 0.0;
                for (int c = 0; c < 2; ++c) {
                  for (int d = 0; d < 2; ++d) {
                    v += ga(c) * abar(r, c, s, d) * gb(d);
                  }
                }
                trips.emplace_back(da + r, db + s, w * v);
              }
            }
          }
        }
      }
      const VecX residual = dofs.reduce(f_int) - factor * f_ext;
      const double rnorm = residual.norm();
      if (it == 0) {
        tol = std::max(cfg.newton.eps_rel * rnorm, cfg.newton.eps_abs);
      }
      if (rnorm <= tol) {
        iters = it;
        break;
      }
      if (it >= cfg.newton.max_iter) {
        throw SolveError("macro Newton did not converge at step " +
                         std::to_string(step));
      }
      SpMat k(dofs.n_red, dofs.n_red);
      k.setFromTriplets(trips.begin(), trips.end());
      if (!analyzed) {
        solver.analyzePattern(k);
        analyzed = true;
      }
      solver.factorize(k);
      if (solver.info() != Eigen::Success) {
        throw SolveError("macro tangent factorization failed at step " +
                         std::to_string(step));
      }
      u += solver.solve(VecX(-residual));
    }

    for (auto& engine : engines) engine->commit();
    const VecX u_full = dofs.expand(u, mesh.n_nodes());
    result.load_factor.push_back(factor);
    result.compliance.push_back(factor * f_ext_full.dot(u_full));
    result.iters.push_back(iters);
  }

  result.u_final = dofs.expand(u, mesh.n_nodes());
  result.residual_norm = result.u_final.norm();
  return result;
}

PropertyPoint effective_properties(const RveProblem& prob,
                                   const MorphOperator& op, double v,
                                   double kappa, double fyy,
                                   const NewtonOpts& opts) {
  const MorphField morph = op.solve({v, kappa});
  auto lateral_stress = [&](double fxx, Mat2* pbar_out) {
    Mat2 fbar;
    fbar << fxx, 0.0, 0.0, fyy;
    std::vector<PlasticState> states(prob.cache->n_qp());
    StepResult step =
        solve_step_adaptive(prob, morph, states, Mat2::Identity(), fbar,
                            VecX::Zero(prob.dofs.n_red), opts, true);
    if (pbar_out != nullptr) *pbar_out = step.pbar;
    return step.pbar(0, 0);
  };

  // Secant iteration on the lateral stretch; the response is nearly linear
  // at this strain level so convergence is fast.
  double f0 = fyy;
  double f1 = 2.0 - fyy;
  double g0 = lateral_stress(f0, nullptr);
  double g1 = lateral_stress(f1, nullptr);
  Mat2 pbar = Mat2::Zero();
  double fxx = f1;
  for (int it = 0; it < 30; ++it) {
    if (g1 == g0) break;
    fxx = f1 - g1 * (f1 - f0) / (g1 - g0);
    const double g = lateral_stress(fxx, &pbar);
    f0 = f1;
    g0 = g1;
    f1 = fxx;
    g1 = g;
    if (std::abs(g) <= 1e-10) break;
  }
  if (std::abs(g1) > 1e-8) {
    throw SolveError("uniaxial probe did not relax the lateral stress");
  }

  PropertyPoint point;
  point.v = v;
  point.kappa = kappa;
  point.pbar_xx = g1;
  point.e_eff = pbar(1, 1) / (fyy - 1.0);
  point.nu_eff = -(fxx - 1.0) / (fyy - 1.0);
  return point;
}

}  // namespace podecm
