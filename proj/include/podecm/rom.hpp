#pragma once

#include "podecm/ecm.hpp"
#include "podecm/microfem.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace podecm {

// Hyper-reduced cell model: a reduced displacement basis with its parent
// gradients precomputed at the cubature points, plus the cubature rule.
// Bound to one parent mesh through the mesh fingerprint.
struct RomModel {
  std::uint64_t mesh_tag = 0;
  GeomKind kind = GeomKind::Scale;
  int n_stress_modes = 0;
  double ecm_eps = 0.0;
  MatX modes;                    // 2 * n_nodes x N, full nodal vectors
  std::vector<int> ecm_ids;      // cubature quadrature points, ascending
  VecX ecm_weights;
  std::vector<MatX> mode_grads;  // per cubature point: N x 4 flattened 2x2

  int n_modes() const { return static_cast<int>(modes.cols()); }
  int n_points() const { return static_cast<int>(ecm_ids.size()); }

  void save(const std::string& path) const;
  static RomModel load(const std::string& path);
};

RomModel build_rom(const Mesh& mesh, const QuadCache& cache,
                   const MatX& disp_modes, const EcmResult& rule,
                   GeomKind kind, int n_stress_modes, double ecm_eps);

// Morph map data restricted to the cubature points.
struct MorphSlice {
  std::vector<Mat2> fmu_inv;
  VecX det_fmu;
};

MorphSlice slice_morph(const MorphField& morph, const std::vector<int>& ids);

struct RomStepResult {
  VecX a;                            // reduced coordinates
  std::vector<PlasticState> states;  // at cubature points only
  Mat2 pbar = Mat2::Zero();
  MatX k_red;                        // reduced tangent at convergence
  int iters = 0;
  double residual = 0.0;
  double initial_residual = 0.0;
};

// One load increment of the reduced cell problem; internal variables live at
// the cubature points only.
RomStepResult rom_solve_step(const RveProblem& prob, const RomModel& model,
                             const MorphSlice& morph,
                             const std::vector<PlasticState>& states0,
                             const Mat2& fbar, const VecX& a_init,
                             const NewtonOpts& opts);

// Reduced increment with automatic bisection of a failing step, mirroring
// solve_step_adaptive: halves the increment from fbar_prev recursively up
// to 2^max_bisect substeps and returns the target step's result with
// accumulated iteration counts.
RomStepResult rom_solve_step_adaptive(const RveProblem& prob,
                                      const RomModel& model,
                                      const MorphSlice& morph,
                                      const std::vector<PlasticState>& states0,
                                      const Mat2& fbar_prev, const Mat2& fbar,
                                      const VecX& a_init,
                                      const NewtonOpts& opts,
                                      int max_bisect = 5);

struct RomSolution {
  struct Step {
    VecX a;
    Mat2 pbar = Mat2::Zero();
    std::vector<PlasticState> states;  // empty unless recorded
    int iters = 0;
    double residual = 0.0;
  };
  std::vector<Step> steps;
};

RomSolution rom_solve(const RveProblem& prob, const RomModel& model,
                      const MorphField& morph, const LoadSchedule& schedule,
                      const NewtonOpts& opts, bool record_states = false);

// Reduced counterpart of the consistent effective stiffness: four reduced
// tangent problems at the converged state, history frozen at states0.
Tensor4 rom_effective_stiffness(const RveProblem& prob, const RomModel& model,
                                const MorphSlice& morph,
                                const std::vector<PlasticState>& states0,
                                const Mat2& fbar, const VecX& a);

// Central finite-difference sensitivity of the end-of-schedule effective
// stress with respect to the geometry parameters; every evaluation re-solves
// the morph and replays the whole schedule so path dependence is respected.
std::vector<Mat2> rom_sensitivity(const RveProblem& prob, const RomModel& model,
                                  const MorphOperator& morph_op,
                                  const GeomParams& params,
                                  const LoadSchedule& schedule,
                                  const NewtonOpts& opts, double h = 1e-4);

}  // namespace podecm
