#pragma once

#include "podecm/types.hpp"

#include <cstdint>
#include <vector>

namespace podecm {

// Low-discrepancy Sobol points in the unit hypercube (Gray-code order), up
// to 8 dimensions, optionally randomized by a seeded digital shift so
// different seeds give different but equally well-spread designs.  seed 0
// means no scrambling.
class SobolSampler {
 public:
  explicit SobolSampler(int dim, std::uint64_t seed = 0);

  // The next point of the sequence.
  VecX next();
  // Points i..i+count-1 as rows.
  MatX draw(int count);

  int dim() const { return dim_; }

 private:
  int dim_ = 0;
  std::uint64_t index_ = 0;
  std::vector<std::uint64_t> state_;  // current Gray-code accumulator
  std::vector<std::uint64_t> shift_;
  std::vector<std::vector<std::uint64_t>> dirs_;  // per dim, 64 numbers
};

// Pseudo-random uniform points (rows) from a seeded generator; the test-set
// counterpart of the structured training design.
MatX uniform_samples(int count, int dim, std::uint64_t seed);

// Affine map of unit-cube rows into a box given by per-dimension
// (lower, upper) bounds.
MatX scale_to_bounds(const MatX& unit,
                     const std::vector<std::pair<double, double>>& bounds);

}  // namespace podecm
