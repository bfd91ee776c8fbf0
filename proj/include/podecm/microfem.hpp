#pragma once

#include "podecm/material.hpp"
#include "podecm/mesh.hpp"
#include "podecm/morph.hpp"

#include <string>
#include <vector>

namespace podecm {

// One cell problem: mesh, quadrature cache, periodic constraint elimination
// and per-region materials.  Effective stresses are normalized by the unit
// cell volume, not the mesh measure, so porous cells average over the full
// box.
struct RveProblem {
  const Mesh* mesh = nullptr;
  const QuadCache* cache = nullptr;
  PeriodicPairing pairing;
  DofMap dofs;
  std::vector<PlasticityParams> materials;  // by region id
  double cell_volume = 1.0;

  static RveProblem build(const Mesh& mesh, const QuadCache& cache,
                          std::vector<PlasticityParams> materials);

  const PlasticityParams& material_at(int qp) const {
    return materials[(*mesh).regions(cache->elem_of(qp))];
  }
};

// Macroscopic deformation schedule; step k applies Fbar[k] as the uniform
// part of the micro deformation.  The unloaded initial state (identity, zero
// fluctuation) is implicit and not part of the list.
struct LoadSchedule {
  std::vector<Mat2> fbar;
};

// Triangle wave I -> U -> reflected unload through I to 2I - U -> back to I,
// with quarter, half, quarter of the steps on each leg.
LoadSchedule cyclic_schedule(const Mat2& u, int steps);
// Ramp I -> U over the first half of the steps, back to I over the second.
LoadSchedule ramp_schedule(const Mat2& u, int steps);

struct NewtonOpts {
  double eps_rel = 1e-8;
  double eps_abs = 1e-12;
  int max_iter = 25;
  // Known force scale of the problem; the convergence floor becomes
  // eps_rel times the larger of this and the initial residual.  Callers
  // that re-solve at an already converged state (the two-scale engines)
  // set it to the largest initial residual seen so far, so a start point
  // in equilibrium at the load scale is accepted instead of chasing the
  // roundoff floor of an incidental tiny initial residual.
  double force_ref = 0.0;
};

struct AssemblyOpts {
  bool tangent = true;
  bool store_stress = false;
  bool store_tangent_field = false;
};

struct Assembly {
  VecX f;                         // reduced internal force
  SpMat k;                        // reduced consistent tangent
  MatX p_field;                   // 4 x n_qp first Piola-Kirchhoff stresses
  std::vector<Tensor4> a_field;   // per-qp material tangents
};

// Internal force and tangent of the mapped cell at fluctuation w_red, with
// the history frozen at states0; trial updated states go to states1 when
// given.
Assembly assemble(const RveProblem& prob, const MorphField& morph,
                  const std::vector<PlasticState>& states0,
                  std::vector<PlasticState>* states1, const Mat2& fbar,
                  const VecX& w_red, const AssemblyOpts& opts);

struct StepResult {
  VecX w_red;
  std::vector<PlasticState> states;
  Mat2 pbar = Mat2::Zero();
  MatX p_field;  // 4 x n_qp
  int iters = 0;
  double residual = 0.0;
  double initial_residual = 0.0;
};

// One load increment by Newton iteration starting from fluctuation w_init
// and committed history states0.
StepResult solve_step(const RveProblem& prob, const MorphField& morph,
                      const std::vector<PlasticState>& states0,
                      const Mat2& fbar, const VecX& w_init,
                      const NewtonOpts& opts, bool store_stress = true);

// Same increment with automatic bisection: when the Newton loop fails to
// converge (a coarse schedule can trap the plastic active set in a limit
// cycle), the increment from fbar_prev is halved and the halves solved in
// sequence, recursively up to 2^max_bisect substeps.  Only the target
// deformation's result is returned; iteration counts accumulate and the
// reported initial residual is the largest seen across the substeps.
StepResult solve_step_adaptive(const RveProblem& prob, const MorphField& morph,
                               const std::vector<PlasticState>& states0,
                               const Mat2& fbar_prev, const Mat2& fbar,
                               const VecX& w_init, const NewtonOpts& opts,
                               bool store_stress = true, int max_bisect = 5);

struct RveRecordOpts {
  bool stress = true;
  bool states = false;
};

struct RveSolution {
  struct Step {
    VecX w_red;
    Mat2 pbar;
    MatX p_field;                     // empty unless recorded
    std::vector<PlasticState> states; // empty unless recorded
    int iters = 0;
    double residual = 0.0;
  };
  std::vector<Step> steps;
};

RveSolution solve_rve(const RveProblem& prob, const MorphField& morph,
                      const LoadSchedule& schedule, const NewtonOpts& opts,
                      const RveRecordOpts& record = {});

Mat2 effective_stress(const RveProblem& prob, const MatX& p_field,
                      const MorphField& morph);

// Consistent effective stiffness dPbar/dFbar: four tangent cell problems
// against the converged stiffness, history frozen at states0.
Tensor4 effective_stiffness(const RveProblem& prob, const MorphField& morph,
                            const std::vector<PlasticState>& states0,
                            const Mat2& fbar, const VecX& w_red);

}  // namespace podecm
