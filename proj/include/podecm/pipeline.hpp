#pragma once

#include "podecm/config.hpp"
#include "podecm/rom.hpp"
#include "podecm/twoscale.hpp"

#include <memory>
#include <string>
#include <vector>

namespace podecm {

// Shared per-campaign context: the parent mesh with its quadrature cache,
// the assembled periodic cell problem and the morph operator.  The problem
// and operator hold references into the mesh, so a workbench lives on the
// heap and never moves.
class Workbench {
 public:
  static std::unique_ptr<Workbench> build(const TrainConfig& cfg);

  Workbench(const Workbench&) = delete;
  Workbench& operator=(const Workbench&) = delete;

  Mesh mesh;
  QuadCache cache;
  RveProblem prob;
  std::unique_ptr<MorphOperator> morph_op;

  // Morph for one sampled parameter row; throws SolveError when the map
  // inverts anywhere.
  MorphField morph_for(const TrainConfig& cfg, const VecX& mu) const;

 private:
  Workbench() = default;
};

// Training snapshot bundle in memory: one displacement and one weighted
// stress column per converged load step, sample parameters as rows.
struct SnapshotSet {
  MatX samples;           // n_train x param_dim
  MatX disp;              // 2 n_nodes x total_steps
  MatX stress;            // 4 n_qp x total_steps
  std::vector<int> steps_per_sample;
  std::vector<int> newton_iters;  // per collected step
};

MatX training_samples(const TrainConfig& cfg);
// Deterministic test design: uniform draws seeded by the campaign seed.
MatX test_samples(const TrainConfig& cfg);

SnapshotSet collect_snapshots(const Workbench& wb, const TrainConfig& cfg,
                              const MatX& samples);

void save_snapshots(const SnapshotSet& set, std::uint64_t mesh_tag,
                    const std::string& path);
SnapshotSet load_snapshots(const std::string& path, std::uint64_t mesh_tag);

// POD + cubature + model assembly from collected snapshots.  Mode counts
// are capped by the snapshot ranks; ecm_eps <= 0 requests the full
// quadrature rule (projection-only model).
struct ReductionReport {
  RomModel model;
  VecX disp_eigenvalues;
  VecX stress_eigenvalues;
  double ecm_residual = 0.0;
};

ReductionReport reduce_snapshots(const Workbench& wb, const SnapshotSet& set,
                                 int n_disp_modes, int n_stress_modes,
                                 double ecm_eps);

// Full offline campaign: sample, solve, reduce, persist.  Writes mesh.txt,
// snapshots.bin, rom.bin, manifest.json and timings.csv into out_dir.
struct OfflineReport {
  std::string model_path;
  std::string snapshot_path;
  std::string manifest_path;
  int n_train = 0;
  int total_steps = 0;
  int n_modes = 0;
  int n_stress_modes = 0;
  int n_points = 0;
  double ecm_residual = 0.0;
};

OfflineReport run_offline(const TrainConfig& cfg, const std::string& out_dir);

// Full-order reference trajectory of one test sample, with the morphed-cell
// displacement metric used by the fluctuation error norm.
struct FullRecord {
  VecX mu;
  std::vector<Mat2> pbar;
  MatX w;  // 2 n_nodes x steps, full nodal fluctuations
  SpMat gram;
  int newton_iters = 0;
};

std::vector<FullRecord> solve_reference_set(const Workbench& wb,
                                            const TrainConfig& cfg,
                                            const MatX& samples);

// Relative trajectory errors of one reduced model against precomputed
// references: effective stress in summed Frobenius norms, fluctuation field
// in summed morphed-metric norms.
struct ValidationCase {
  VecX mu;
  double e_pbar = 0.0;
  double e_w = 0.0;
  int rom_iters = 0;
};

struct ValidationReport {
  std::vector<ValidationCase> cases;
  double mean_e_pbar = 0.0;
  double mean_e_w = 0.0;
};

ValidationReport validate_model(const Workbench& wb, const TrainConfig& cfg,
                                const RomModel& model,
                                const std::vector<FullRecord>& refs);

// Offline artifacts in, error report out; writes validation.csv and
// validation.json into out_dir.
ValidationReport run_validate(const TrainConfig& cfg,
                              const std::string& model_path,
                              const std::string& out_dir);

// Reduced solve of one parameter point with optional effective stiffness
// and geometry sensitivities; writes response.csv (P per step) plus
// stiffness.csv / sensitivity.csv when requested.
struct OnlineRequest {
  VecX mu;
  bool effective_stiffness = false;
  double sensitivity_h = 0.0;  // 0 disables the sensitivity sweep
};

struct OnlineReport {
  std::vector<Mat2> pbar;
  std::vector<int> iters;
  Tensor4 abar;
  std::vector<Mat2> sensitivities;  // per geometry parameter
};

OnlineReport run_online(const Workbench& wb, const TrainConfig& cfg,
                        const RomModel& model, const OnlineRequest& req,
                        const std::string& out_dir);

// Graded-plate two-scale run with full or reduced cell engines on the
// campaign microstructure; writes twoscale_<engine>.csv into out_dir.
TwoscaleResult run_twoscale_cmd(const Workbench& wb, const TrainConfig& cfg,
                                const MacroConfig& macro,
                                const RomModel* model,
                                const std::string& out_dir);

// Effective uniaxial property sweep over a (void fraction, aspect ratio)
// grid; writes propmap.csv into out_dir.
std::vector<PropertyPoint> run_propmap(const Workbench& wb,
                                       const std::vector<double>& v_values,
                                       const std::vector<double>& kappa_values,
                                       const std::string& out_dir);

// Shared CSV cell formatting: shortest round-trip decimal, '.' separator.
std::string csv_num(double v);

}  // namespace podecm
