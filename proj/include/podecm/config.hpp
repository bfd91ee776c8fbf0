#pragma once

#include "podecm/geometry.hpp"
#include "podecm/material.hpp"
#include "podecm/microfem.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace podecm {

struct SamplingConfig {
  int train_count = 0;
  int test_count = 0;
  std::string scheme;  // "sobol" or "uniform" (training design)
  std::uint64_t seed = 0;
};

struct LoadConfig {
  int steps = 0;
  std::string shape;  // "cyclic" or "ramp"
};

struct RomConfig {
  int displacement_modes = 0;
  int stress_modes = 0;
  double ecm_eps = 0.0;
};

// One training/reduction campaign: cell geometry and mesh resolution,
// materials by region, the sampled parameter box (u_xx, u_yy, u_xy, then
// the geometry parameters), the load schedule shape and the reduction
// sizes.  Parsed strictly: unknown or missing keys fail with the JSON path.
struct TrainConfig {
  GeomSpec geometry;
  std::string geometry_name;  // builtin name or the file it came from
  int mesh_n = 0;
  std::vector<PlasticityParams> materials;  // by region id
  std::vector<std::pair<double, double>> bounds;
  SamplingConfig sampling;
  LoadConfig load;
  RomConfig rom;
  NewtonOpts newton;

  int param_dim() const { return static_cast<int>(bounds.size()); }

  // Split one sampled parameter row into its pieces.
  Mat2 stretch(const VecX& mu) const;
  GeomParams geom_params(const VecX& mu) const;
  LoadSchedule schedule_for(const VecX& mu) const;
};

TrainConfig load_train_config(const std::string& path);

}  // namespace podecm
