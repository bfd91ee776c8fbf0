#pragma once

#include "podecm/microfem.hpp"
#include "podecm/rom.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace podecm {

// Constitutive provider for one macro Gauss point.  respond() evaluates the
// stress and tangent for a trial macro deformation gradient, always starting
// from the last committed history; commit() accepts the trial state once the
// macro step has converged.
class MicroEngine {
 public:
  virtual ~MicroEngine() = default;
  virtual void respond(const Mat2& fbar, Mat2* pbar, Tensor4* abar) = 0;
  virtual void commit() = 0;
  virtual std::string label() const = 0;
};

// Plain plane-strain linear elasticity, the single-scale oracle.
class LinearElasticEngine : public MicroEngine {
 public:
  LinearElasticEngine(double e, double nu);
  void respond(const Mat2& fbar, Mat2* pbar, Tensor4* abar) override;
  void commit() override {}
  std::string label() const override { return "linear"; }

 private:
  Tensor4 d_;
};

// Full-order cell solve per evaluation.
class FullMicroEngine : public MicroEngine {
 public:
  FullMicroEngine(const RveProblem& prob, MorphField morph, NewtonOpts opts);
  void respond(const Mat2& fbar, Mat2* pbar, Tensor4* abar) override;
  void commit() override;
  std::string label() const override { return "full"; }

 private:
  const RveProblem* prob_;
  MorphField morph_;
  NewtonOpts opts_;
  std::vector<PlasticState> states_, states_trial_;
  VecX w_, w_trial_;
  Mat2 fbar_committed_ = Mat2::Identity();
  Mat2 fbar_trial_ = Mat2::Identity();
  double force_ref_ = 0.0;
};

// Hyper-reduced cell solve per evaluation.  Counts evaluations whose
// deformation leaves the training box as a staleness signal.
class RomMicroEngine : public MicroEngine {
 public:
  RomMicroEngine(const RveProblem& prob, const RomModel& model,
                 const MorphField& morph, NewtonOpts opts,
                 std::vector<std::pair<double, double>> stretch_bounds = {});
  void respond(const Mat2& fbar, Mat2* pbar, Tensor4* abar) override;
  void commit() override;
  std::string label() const override { return "rom"; }

  int out_of_range() const { return out_of_range_; }

 private:
  const RveProblem* prob_;
  const RomModel* model_;
  MorphSlice slice_;
  NewtonOpts opts_;
  std::vector<PlasticState> states_, states_trial_;
  VecX a_, a_trial_;
  std::vector<std::pair<double, double>> stretch_bounds_;
  int out_of_range_ = 0;
  Mat2 fbar_committed_ = Mat2::Identity();
  Mat2 fbar_trial_ = Mat2::Identity();
  double force_ref_ = 0.0;
};

// Macro plate problem: nx x ny serendipity mesh of [0, w] x [0, h], bottom
// edge clamped, parabolic downward traction on the top edge ramped up to
// peak over the first half of the steps and back to zero over the second.
struct MacroConfig {
  int nx = 5;
  int ny = 3;
  double width = 2.0;
  double height = 1.0;
  double peak_traction = 0.2;
  int steps = 50;
  NewtonOpts newton;
};

struct TwoscaleResult {
  std::vector<double> load_factor;  // per step
  std::vector<double> compliance;   // work rate of the applied traction
  std::vector<int> iters;
  VecX u_final;                     // full nodal displacement at the end
  double residual_norm = 0.0;       // displacement norm after unloading
  int micro_evals = 0;
};

using EngineFactory =
    std::function<std::unique_ptr<MicroEngine>(const Vec2& x)>;

// Run the plate problem, building one engine per macro Gauss point from its
// reference position.
TwoscaleResult run_twoscale(const MacroConfig& cfg,
                            const EngineFactory& factory);

// Geometry parameter field (void fraction, aspect ratio) of the graded
// plate: porosity falls toward the right edge, pore aspect falls with
// height.
GeomParams graded_pore_params(const Vec2& x);

// Effective uniaxial properties of one cell: hold the vertical stretch,
// relax the horizontal one until the lateral effective stress vanishes, and
// read off modulus and contraction ratio from the resulting strains.
struct PropertyPoint {
  double v = 0.0;
  double kappa = 0.0;
  double e_eff = 0.0;
  double nu_eff = 0.0;
  double pbar_xx = 0.0;  // residual lateral stress of the probe
};

PropertyPoint effective_properties(const RveProblem& prob,
                                   const MorphOperator& op, double v,
                                   double kappa, double fyy = 0.999,
                                   const NewtonOpts& opts = {});

}  // namespace podecm
