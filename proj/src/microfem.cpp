#include "podecm/microfem.hpp"

#include <Eigen/SparseLU>

#include <cmath>

namespace podecm {

RveProblem RveProblem::build(const Mesh& mesh, const QuadCache& cache,
                             std::vector<PlasticityParams> materials) {
  RveProblem p;
  p.mesh = &mesh;
  p.cache = &cache;
  p.pairing = periodic_pairs(mesh);
  p.dofs = periodic_dof_map(mesh, p.pairing);
  p.materials = std::move(materials);
  for (int e = 0; e < mesh.n_elems(); ++e)
    if (mesh.regions(e) < 0 ||
        mesh.regions(e) >= static_cast<int>(p.materials.size()))
      throw ConfigError("element region " + std::to_string(mesh.regions(e)) +
                        " has no material");
  return p;
}

LoadSchedule cyclic_schedule(const Mat2& u, int steps) {
  if (steps % 4 != 0) throw ConfigError("cyclic schedule needs steps % 4 == 0");
  const int q = steps / 4;
  const Mat2 du = u - Mat2::Identity();
  LoadSchedule s;
  for (int k = 1; k <= steps; ++k) {
    double c;
    if (k <= q)
      c = static_cast<double>(k) / q;
    else if (k <= 3 * q)
      c = static_cast<double>(2 * q - k) / q;
    else
      c = static_cast<double>(k - 4 * q) / q;
    s.fbar.push_back(Mat2::Identity() + c * du);
  }
  return s;
}

LoadSchedule ramp_schedule(const Mat2& u, int steps) {
  if (steps % 2 != 0) throw ConfigError("ramp schedule needs steps % 2 == 0");
  const int h = steps / 2;
  const Mat2 du = u - Mat2::Identity();
  LoadSchedule s;
  for (int k = 1; k <= steps; ++k) {
    const double c = k <= h ? static_cast<double>(k) / h
                            : static_cast<double>(steps - k) / h;
    s.fbar.push_back(Mat2::Identity() + c * du);
  }
  return s;
}

Assembly assemble(const RveProblem& prob, const MorphField& morph,
                  const std::vector<PlasticState>& states0,
                  std::vector<PlasticState>* states1, const Mat2& fbar,
                  const VecX& w_red, const AssemblyOpts& opts) {
  const Mesh& mesh = *prob.mesh;
  const QuadCache& cache = *prob.cache;
  const int nqp = cache.n_qp();
  const int npe = nodes_per_elem(mesh.kind);
  const VecX w_full = prob.dofs.expand(w_red, mesh.n_nodes());

  Assembly out;
  out.f = VecX::Zero(prob.dofs.n_red);
  if (opts.store_stress) out.p_field.resize(4, nqp);
  if (opts.store_tangent_field) out.a_field.resize(nqp);
  if (states1) states1->resize(nqp);

  std::vector<Triplet> trips;
  if (opts.tangent) trips.reserve(static_cast<std::size_t>(nqp) * npe * npe * 4);

  MatX gt(npe, 2);
  for (int q = 0; q < nqp; ++q) {
    const int e = cache.elem_of(q);
    const MatX& g = cache.grad[q];
    const Mat2& fmi = morph.fmu_inv[q];

    Mat2 gw = Mat2::Zero();
    for (int a = 0; a < npe; ++a) {
      const int node = mesh.elements(e, a);
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) gw(i, j) += w_full(2 * node + i) * g(a, j);
    }
    const Mat2 f = fbar + gw * fmi;

    const PlasticityParams& mat = prob.material_at(q);
    const LargeResult lr = large_strain_update(
        mat, states0[q], f, states1 ? &(*states1)[q] : nullptr);
    if (opts.store_stress) out.p_field.col(q) = flatten(lr.P);

    const double wq = cache.w(q) * morph.det_fmu(q);
    gt.noalias() = g * fmi;

    for (int a = 0; a < npe; ++a) {
      const int ra = prob.dofs.node_dof(mesh.elements(e, a));
      if (ra < 0) continue;
      for (int i = 0; i < 2; ++i)
        out.f(ra + i) +=
            wq * (lr.P(i, 0) * gt(a, 0) + lr.P(i, 1) * gt(a, 1));
    }

    if (!opts.tangent) continue;
    const Tensor4 a4 = large_strain_tangent(mat, states0[q], f);
    if (opts.store_tangent_field) out.a_field[q] = a4;
    for (int a = 0; a < npe; ++a) {
      const int ra = prob.dofs.node_dof(mesh.elements(e, a));
      if (ra < 0) continue;
      for (int b = 0; b < npe; ++b) {
        const int rb = prob.dofs.node_dof(mesh.elements(e, b));
        if (rb < 0) continue;
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j) {
            const double v =
                gt(a, 0) * (a4(i, 0, j, 0) * gt(b, 0) + a4(i, 0, j, 1) * gt(b, 1)) +
                gt(a, 1) * (a4(i, 1, j, 0) * gt(b, 0) + a4(i, 1, j, 1) * gt(b, 1));
            trips.emplace_back(ra + i, rb + j, wq * v);
          }
      }
    }
  }

  if (opts.tangent) {
    out.k.resize(prob.dofs.n_red, prob.dofs.n_red);
    out.k.setFromTriplets(trips.begin(), trips.end());
  }
  return out;
}

Mat2 effective_stress(const RveProblem& prob, const MatX& p_field,
                      const MorphField& morph) {
  Mat2 pbar = Mat2::Zero();
  for (int q = 0; q < p_field.cols(); ++q) {
    const double wq = prob.cache->w(q) * morph.det_fmu(q);
    pbar += wq * unflatten(p_field.col(q));
  }
  return pbar / prob.cell_volume;
}

StepResult solve_step(const RveProblem& prob, const MorphField& morph,
                      const std::vector<PlasticState>& states0,
                      const Mat2& fbar, const VecX& w_init,
                      const NewtonOpts& opts, bool store_stress) {
  StepResult res;
  res.w_red = w_init;

  Eigen::SparseLU<SpMat> lu;
  bool analyzed = false;
  double f0 = 0.0;

  AssemblyOpts ao;
  ao.tangent = true;
  ao.store_stress = store_stress;

  for (int it = 0; it <= opts.max_iter; ++it) {
    Assembly as =
        assemble(prob, morph, states0, &res.states, fbar, res.w_red, ao);
    const double rn = as.f.norm();
    if (it == 0) {
      f0 = rn;
      res.initial_residual = rn;
    }
    const double tol = std::max(
        opts.eps_rel * std::max(f0, opts.force_ref), opts.eps_abs);
    if (rn <= tol) {
      res.iters = it;
      res.residual = rn;
      if (store_stress) {
        res.p_field = std::move(as.p_field);
        res.pbar = effective_stress(prob, res.p_field, morph);
      }
      return res;
    }
    if (it == opts.max_iter) break;
    if (!analyzed) {
      lu.analyzePattern(as.k);
      analyzed = true;
    }
    lu.factorize(as.k);
    if (lu.info() != Eigen::Success)
      throw SolveError("cell tangent factorization failed");
    res.w_red += lu.solve(-as.f);
  }
  throw SolveError("cell Newton did not converge in " +
                   std::to_string(opts.max_iter) + " iterations");
}

StepResult solve_step_adaptive(const RveProblem& prob, const MorphField& morph,
                               const std::vector<PlasticState>& states0,
                               const Mat2& fbar_prev, const Mat2& fbar,
                               const VecX& w_init, const NewtonOpts& opts,
                               bool store_stress, int max_bisect) {
  try {
    return solve_step(prob, morph, states0, fbar, w_init, opts, store_stress);
  } catch (const SolveError&) {
    if (max_bisect <= 0) throw;
  }
  const Mat2 mid = 0.5 * (fbar_prev + fbar);
  StepResult half =
      solve_step_adaptive(prob, morph, states0, fbar_prev, mid, w_init, opts,
                          false, max_bisect - 1);
  StepResult full =
      solve_step_adaptive(prob, morph, half.states, mid, fbar, half.w_red,
                          opts, store_stress, max_bisect - 1);
  full.iters += half.iters;
  full.initial_residual =
      std::max(full.initial_residual, half.initial_residual);
  return full;
}

RveSolution solve_rve(const RveProblem& prob, const MorphField& morph,
                      const LoadSchedule& schedule, const NewtonOpts& opts,
                      const RveRecordOpts& record) {
  RveSolution sol;
  std::vector<PlasticState> committed(prob.cache->n_qp());
  VecX w = VecX::Zero(prob.dofs.n_red);
  Mat2 fbar_prev = Mat2::Identity();

  for (const Mat2& fbar : schedule.fbar) {
    StepResult step = solve_step_adaptive(prob, morph, committed, fbar_prev,
                                          fbar, w, opts, true);
    fbar_prev = fbar;
    committed = step.states;
    w = step.w_red;

    RveSolution::Step rec;
    rec.w_red = step.w_red;
    rec.pbar = step.pbar;
    rec.iters = step.iters;
    rec.residual = step.residual;
    if (record.stress) rec.p_field = std::move(step.p_field);
    if (record.states) rec.states = step.states;
    sol.steps.push_back(std::move(rec));
  }
  return sol;
}

Tensor4 effective_stiffness(const RveProblem& prob, const MorphField& morph,
                            const std::vector<PlasticState>& states0,
                            const Mat2& fbar, const VecX& w_red) {
  const Mesh& mesh = *prob.mesh;
  const QuadCache& cache = *prob.cache;
  const int nqp = cache.n_qp();
  const int npe = nodes_per_elem(mesh.kind);

  AssemblyOpts ao;
  ao.tangent = true;
  ao.store_tangent_field = true;
  const Assembly as =
      assemble(prob, morph, states0, nullptr, fbar, w_red, ao);

  Eigen::SparseLU<SpMat> lu;
  lu.compute(as.k);
  if (lu.info() != Eigen::Success)
    throw SolveError("effective stiffness: tangent factorization failed");

  // Right-hand sides of the four tangent problems, one per unit direction
  // E_kl of the macroscopic deformation gradient.
  MatX rhs = MatX::Zero(prob.dofs.n_red, 4);
  MatX gt(npe, 2);
  for (int q = 0; q < nqp; ++q) {
    const int e = cache.elem_of(q);
    const Mat2& fmi = morph.fmu_inv[q];
    const double wq = cache.w(q) * morph.det_fmu(q);
    gt.noalias() = cache.grad[q] * fmi;
    const Tensor4& a4 = as.a_field[q];
    for (int a = 0; a < npe; ++a) {
      const int ra = prob.dofs.node_dof(mesh.elements(e, a));
      if (ra < 0) continue;
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) {
          const int col = Tensor4::idx(k, l);
          for (int i = 0; i < 2; ++i)
            rhs(ra + i, col) -= wq * (a4(i, 0, k, l) * gt(a, 0) +
                                      a4(i, 1, k, l) * gt(a, 1));
        }
    }
  }

  Tensor4 abar;
  for (int k = 0; k < 2; ++k)
    for (int l = 0; l < 2; ++l) {
      const int col = Tensor4::idx(k, l);
      const VecX qkl = lu.solve(rhs.col(col));
      const VecX q_full = prob.dofs.expand(qkl, mesh.n_nodes());

      for (int q = 0; q < nqp; ++q) {
        const int e = cache.elem_of(q);
        const MatX& g = cache.grad[q];
        const Mat2& fmi = morph.fmu_inv[q];
        const double wq = cache.w(q) * morph.det_fmu(q);
        const Tensor4& a4 = as.a_field[q];

        Mat2 gq = Mat2::Zero();
        for (int a = 0; a < npe; ++a) {
          const int node = mesh.elements(e, a);
          for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
              gq(i, j) += q_full(2 * node + i) * g(a, j);
        }
        Mat2 df = gq * fmi;  // fluctuation response to E_kl
        df(k, l) += 1.0;
        const Mat2 contrib = a4.contract(df);
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j) abar(i, j, k, l) += wq * contrib(i, j);
      }
    }

  abar.m /= prob.cell_volume;
  return abar;
}

}  // namespace podecm
