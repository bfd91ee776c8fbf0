#include "podecm/sampling.hpp"

#include <bit>
#include <random>

namespace podecm {

namespace {

// Primitive-polynomial degrees, coefficients and initial direction integers
// for dimensions 2..8 of the Sobol sequence (dimension 1 is the plain
// radical-inverse sequence).
struct DirSeed {
  int s;
  std::uint64_t a;
  std::uint64_t m[5];
};

constexpr DirSeed kDirSeeds[] = {
    {1, 0, {1, 0, 0, 0, 0}},   {2, 1, {1, 3, 0, 0, 0}},
    {3, 1, {1, 3, 1, 0, 0}},   {3, 2, {1, 1, 1, 0, 0}},
    {4, 1, {1, 1, 3, 3, 0}},   {4, 4, {1, 3, 5, 13, 0}},
    {5, 2, {1, 1, 5, 5, 17}},
};

constexpr int kMaxDim = 8;
constexpr int kBits = 64;

std::vector<std::uint64_t> direction_numbers(int d) {
  std::vector<std::uint64_t> v(kBits);
  if (d == 0) {
    for (int k = 0; k < kBits; ++k) v[k] = 1ull << (kBits - 1 - k);
    return v;
  }
  const DirSeed& seed = kDirSeeds[d - 1];
  for (int k = 0; k < seed.s; ++k) v[k] = seed.m[k] << (kBits - 1 - k);
  for (int k = seed.s; k < kBits; ++k) {
    std::uint64_t val = v[k - seed.s] ^ (v[k - seed.s] >> seed.s);
    for (int i = 1; i < seed.s; ++i) {
      if ((seed.a >> (seed.s - 1 - i)) & 1ull) val ^= v[k - i];
    }
    v[k] = val;
  }
  return v;
}

double to_unit(std::uint64_t x) {
  return static_cast<double>(x >> 11) * 0x1p-53;
}

}  // namespace

SobolSampler::SobolSampler(int dim, std::uint64_t seed) : dim_(dim) {
  if (dim < 1 || dim > kMaxDim) {
    throw ConfigError("sobol sampler supports 1 to 8 dimensions");
  }
  state_.assign(dim_, 0);
  shift_.assign(dim_, 0);
  dirs_.reserve(dim_);
  for (int d = 0; d < dim_; ++d) dirs_.push_back(direction_numbers(d));
  if (seed != 0) {
    std::mt19937_64 rng(seed);
    for (int d = 0; d < dim_; ++d) shift_[d] = rng();
  }
}

VecX SobolSampler::next() {
  VecX p(dim_);
  for (int d = 0; d < dim_; ++d) p(d) = to_unit(state_[d] ^ shift_[d]);
  const int c = std::countr_one(index_);
  for (int d = 0; d < dim_; ++d) state_[d] ^= dirs_[d][c];
  ++index_;
  return p;
}

MatX SobolSampler::draw(int count) {
  MatX out(count, dim_);
  for (int i = 0; i < count; ++i) out.row(i) = next().transpose();
  return out;
}

MatX uniform_samples(int count, int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  MatX out(count, dim);
  for (int i = 0; i < count; ++i) {
    for (int j = 0; j < dim; ++j) out(i, j) = dist(rng);
  }
  return out;
}

MatX scale_to_bounds(const MatX& unit,
                     const std::vector<std::pair<double, double>>& bounds) {
  if (static_cast<int>(bounds.size()) != unit.cols()) {
    throw ConfigError("bounds dimension does not match sample dimension");
  }
  MatX out = unit;
  for (int j = 0; j < out.cols(); ++j) {
    const auto& [lo, hi] = bounds[j];
    out.col(j) = lo + (hi - lo) * out.col(j).array();
  }
  return out;
}

}  // namespace podecm
