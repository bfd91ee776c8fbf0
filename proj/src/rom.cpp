#include "podecm/rom.hpp"

#include "podecm/store.hpp"

#include <Eigen/LU>

#include <cmath>
#include <utility>

namespace podecm {

namespace {

// Right-multiplication of a flattened 2x2 gradient by a 2x2 matrix, as a
// 4x4 operator on column-stacked components.
Eigen::Matrix4d right_mult_op(const Mat2& m) {
  Eigen::Matrix4d k = Eigen::Matrix4d::Zero();
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      for (int l = 0; l < 2; ++l) {
        k(i + 2 * j, i + 2 * l) = m(j, l);
      }
    }
  }
  return k;
}

struct RomAssembly {
  VecX f;
  MatX k;
  std::vector<Mat2> p;  // per cubature point
};

RomAssembly rom_assemble(const RveProblem& prob, const RomModel& model,
                         const MorphSlice& morph,
                         const std::vector<PlasticState>& states0,
                         std::vector<PlasticState>* states1, const Mat2& fbar,
                         const VecX& a, bool tangent,
                         std::vector<Tensor4>* a_field = nullptr) {
  const int n = model.n_modes();
  RomAssembly out;
  out.f = VecX::Zero(n);
  if (tangent) out.k = MatX::Zero(n, n);
  out.p.resize(model.n_points());
  if (a_field != nullptr) a_field->resize(model.n_points());
  for (int p = 0; p < model.n_points(); ++p) {
    const int qp = model.ecm_ids[p];
    const MatX mapped = model.mode_grads[p] * right_mult_op(morph.fmu_inv[p]);
    const Mat2 f_micro =
        fbar + unflatten(Eigen::Vector4d(mapped.transpose() * a));
    const PlasticityParams& mat = prob.material_at(qp);
    PlasticState trial;
    const LargeResult res = large_strain_update(mat, states0[p], f_micro,
                                                states1 != nullptr ? &(*states1)[p]
                                                                   : &trial);
    const double c = model.ecm_weights(p) * morph.det_fmu(p);
    out.p[p] = res.P;
    out.f += c * (mapped * flatten(res.P));
    if (tangent) {
      const Tensor4 tang = large_strain_tangent(mat, states0[p], f_micro);
      if (a_field != nullptr) (*a_field)[p] = tang;
      out.k += c * (mapped * tang.m * mapped.transpose());
    }
  }
  return out;
}

Mat2 rom_effective_stress(const RveProblem& prob, const RomModel& model,
                          const MorphSlice& morph,
                          const std::vector<Mat2>& p_points) {
  Mat2 pbar = Mat2::Zero();
  for (int p = 0; p < model.n_points(); ++p) {
    pbar += model.ecm_weights(p) * morph.det_fmu(p) * p_points[p];
  }
  return pbar / prob.cell_volume;
}

}  // namespace

RomModel build_rom(const Mesh& mesh, const QuadCache& cache,
                   const MatX& disp_modes, const EcmResult& rule,
                   GeomKind kind, int n_stress_modes, double ecm_eps) {
  RomModel model;
  model.mesh_tag = mesh.fingerprint();
  model.kind = kind;
  model.n_stress_modes = n_stress_modes;
  model.ecm_eps = ecm_eps;
  model.modes = disp_modes;
  model.ecm_ids = rule.ids;
  model.ecm_weights = rule.weights;
  const int n = model.n_modes();
  const int npe = nodes_per_elem(mesh.kind);
  model.mode_grads.reserve(rule.ids.size());
  for (int qp : rule.ids) {
    const int e = cache.elem_of(qp);
    MatX grads(n, 4);
    for (int i = 0; i < n; ++i) {
      Mat2 h = Mat2::Zero();
      for (int a = 0; a < npe; ++a) {
        const int node = mesh.elements(e, a);
        h.row(0) += disp_modes(2 * node, i) * cache.grad[qp].row(a);
        h.row(1) += disp_modes(2 * node + 1, i) * cache.grad[qp].row(a);
      }
      grads.row(i) = flatten(h).transpose();
    }
    model.mode_grads.push_back(std::move(grads));
  }
  return model;
}

MorphSlice slice_morph(const MorphField& morph, const std::vector<int>& ids) {
  MorphSlice s;
  s.fmu_inv.reserve(ids.size());
  s.det_fmu.resize(ids.size());
  for (size_t k = 0; k < ids.size(); ++k) {
    s.fmu_inv.push_back(morph.fmu_inv[ids[k]]);
    s.det_fmu(k) = morph.det_fmu(ids[k]);
  }
  return s;
}

RomStepResult rom_solve_step(const RveProblem& prob, const RomModel& model,
                             const MorphSlice& morph,
                             const std::vector<PlasticState>& states0,
                             const Mat2& fbar, const VecX& a_init,
                             const NewtonOpts& opts) {
  RomStepResult out;
  out.a = a_init;
  out.states = states0;
  double tol = opts.eps_abs;
  for (int it = 0; it <= opts.max_iter; ++it) {
    RomAssembly asmb = rom_assemble(prob, model, morph, states0, &out.states,
                                    fbar, out.a, true);
    out.residual = asmb.f.norm();
    if (it == 0) {
      out.initial_residual = out.residual;
      tol = std::max(opts.eps_rel * std::max(out.residual, opts.force_ref),
                     opts.eps_abs);
    }
    if (out.residual <= tol) {
      out.iters = it;
      out.k_red = std::move(asmb.k);
      out.pbar = rom_effective_stress(prob, model, morph, asmb.p);
      return out;
    }
    if (it == opts.max_iter) break;
    out.a += asmb.k.partialPivLu().solve(VecX(-asmb.f));
  }
  throw SolveError("reduced cell Newton did not converge");
}

RomStepResult rom_solve_step_adaptive(const RveProblem& prob,
                                      const RomModel& model,
                                      const MorphSlice& morph,
                                      const std::vector<PlasticState>& states0,
                                      const Mat2& fbar_prev, const Mat2& fbar,
                                      const VecX& a_init,
                                      const NewtonOpts& opts, int max_bisect) {
  try {
    return rom_solve_step(prob, model, morph, states0, fbar, a_init, opts);
  } catch (const SolveError&) {
    if (max_bisect <= 0) throw;
  }
  const Mat2 mid = 0.5 * (fbar_prev + fbar);
  RomStepResult half = rom_solve_step_adaptive(
      prob, model, morph, states0, fbar_prev, mid, a_init, opts,
      max_bisect - 1);
  RomStepResult full = rom_solve_step_adaptive(
      prob, model, morph, half.states, mid, fbar, half.a, opts,
      max_bisect - 1);
  full.iters += half.iters;
  full.initial_residual =
      std::max(full.initial_residual, half.initial_residual);
  return full;
}

RomSolution rom_solve(const RveProblem& prob, const RomModel& model,
                      const MorphField& morph, const LoadSchedule& schedule,
                      const NewtonOpts& opts, bool record_states) {
  const MorphSlice sl = slice_morph(morph, model.ecm_ids);
  RomSolution sol;
  std::vector<PlasticState> states(model.n_points());
  VecX a = VecX::Zero(model.n_modes());
  Mat2 fbar_prev = Mat2::Identity();
  for (const Mat2& fbar : schedule.fbar) {
    RomStepResult step = rom_solve_step_adaptive(prob, model, sl, states,
                                                 fbar_prev, fbar, a, opts);
    fbar_prev = fbar;
    states = step.states;
    a = step.a;
    RomSolution::Step rec;
    rec.a = step.a;
    rec.pbar = step.pbar;
    rec.iters = step.iters;
    rec.residual = step.residual;
    if (record_states) rec.states = step.states;
    sol.steps.push_back(std::move(rec));
  }
  return sol;
}

Tensor4 rom_effective_stiffness(const RveProblem& prob, const RomModel& model,
                                const MorphSlice& morph,
                                const std::vector<PlasticState>& states0,
                                const Mat2& fbar, const VecX& a) {
  std::vector<Tensor4> a_field;
  RomAssembly asmb = rom_assemble(prob, model, morph, states0, nullptr, fbar,
                                  a, true, &a_field);
  Eigen::PartialPivLU<MatX> lu(asmb.k);
  const int n = model.n_modes();
  Tensor4 abar;
  for (int k = 0; k < 2; ++k) {
    for (int l = 0; l < 2; ++l) {
      Mat2 e_kl = Mat2::Zero();
      e_kl(k, l) = 1.0;
      VecX rhs = VecX::Zero(n);
      for (int p = 0; p < model.n_points(); ++p) {
        const double c = model.ecm_weights(p) * morph.det_fmu(p);
        const MatX mapped =
            model.mode_grads[p] * right_mult_op(morph.fmu_inv[p]);
        rhs -= c * (mapped * (a_field[p].m * flatten(e_kl)));
      }
      const VecX q = lu.solve(rhs);
      Mat2 col = Mat2::Zero();
      for (int p = 0; p < model.n_points(); ++p) {
        const double c = model.ecm_weights(p) * morph.det_fmu(p);
        const MatX mapped =
            model.mode_grads[p] * right_mult_op(morph.fmu_inv[p]);
        const Mat2 df = e_kl + unflatten(Eigen::Vector4d(mapped.transpose() * q));
        col += c * a_field[p].contract(df);
      }
      col /= prob.cell_volume;
      for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
          abar(i, j, k, l) = col(i, j);
        }
      }
    }
  }
  return abar;
}

std::vector<Mat2> rom_sensitivity(const RveProblem& prob, const RomModel& model,
                                  const MorphOperator& morph_op,
                                  const GeomParams& params,
                                  const LoadSchedule& schedule,
                                  const NewtonOpts& opts, double h) {
  std::vector<Mat2> grad(params.size());
  for (size_t k = 0; k < params.size(); ++k) {
    const double step = h * std::max(1.0, std::abs(params[k]));
    GeomParams lo = params;
    GeomParams hi = params;
    lo[k] -= step;
    hi[k] += step;
    const RomSolution sol_lo =
        rom_solve(prob, model, morph_op.solve(lo), schedule, opts);
    const RomSolution sol_hi =
        rom_solve(prob, model, morph_op.solve(hi), schedule, opts);
    grad[k] =
        (sol_hi.steps.back().pbar - sol_lo.steps.back().pbar) / (2.0 * step);
  }
  return grad;
}

void RomModel::save(const std::string& path) const {
  ArrayStore store;
  store.content_tag = mesh_tag;
  store.put("modes", modes);
  MatX grads(4 * n_modes(), n_points());
  for (int p = 0; p < n_points(); ++p) {
    for (int i = 0; i < n_modes(); ++i) {
      grads.block<4, 1>(4 * i, p) = mode_grads[p].row(i).transpose();
    }
  }
  store.put("mode_gradients", grads);
  MatI64 ids(n_points(), 1);
  for (int p = 0; p < n_points(); ++p) ids(p, 0) = ecm_ids[p];
  store.put("ecm_ids", ids);
  store.put("ecm_weights", MatX(ecm_weights));
  MatX params(1, 1);
  params(0, 0) = ecm_eps;
  store.put("params", params);
  MatI64 meta(3, 1);
  meta(0, 0) = static_cast<std::int64_t>(kind);
  meta(1, 0) = n_modes();
  meta(2, 0) = n_stress_modes;
  store.put("metadata", meta);
  store.save(path);
}

RomModel RomModel::load(const std::string& path) {
  const ArrayStore store = ArrayStore::load(path);
  RomModel model;
  model.mesh_tag = store.content_tag;
  model.modes = store.get_f64("modes");
  const MatX& grads = store.get_f64("mode_gradients");
  const MatI64& ids = store.get_i64("ecm_ids");
  const MatX& weights = store.get_f64("ecm_weights");
  const MatX& params = store.get_f64("params");
  const MatI64& meta = store.get_i64("metadata");
  if (meta.rows() != 3 || meta.cols() != 1 || params.rows() != 1 ||
      weights.cols() != 1 || ids.cols() != 1) {
    throw FormatError(path + ": malformed reduced-model metadata");
  }
  model.ecm_weights = weights.col(0);
  model.kind = static_cast<GeomKind>(meta(0, 0));
  model.n_stress_modes = static_cast<int>(meta(2, 0));
  model.ecm_eps = params(0, 0);
  const int n = static_cast<int>(meta(1, 0));
  const int n_pts = static_cast<int>(ids.rows());
  if (model.modes.cols() != n || grads.rows() != 4 * n ||
      grads.cols() != n_pts || model.ecm_weights.size() != n_pts) {
    throw FormatError(path + ": inconsistent reduced-model array shapes");
  }
  model.ecm_ids.resize(n_pts);
  for (int p = 0; p < n_pts; ++p) {
    model.ecm_ids[p] = static_cast<int>(ids(p, 0));
  }
  model.mode_grads.resize(n_pts);
  for (int p = 0; p < n_pts; ++p) {
    model.mode_grads[p].resize(n, 4);
    for (int i = 0; i < n; ++i) {
      model.mode_grads[p].row(i) = grads.block<4, 1>(4 * i, p).transpose();
    }
  }
  return model;
}

}  // namespace podecm
