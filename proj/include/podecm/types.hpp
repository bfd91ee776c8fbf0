#pragma once

#include <Eigen/Core>
#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace podecm {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;
using VecXi = Eigen::VectorXi;
using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// Fourth-order tensor over 2x2 second-order tensors, stored as a 4x4 matrix
// acting on the column-stacked components (11, 21, 12, 22).  With that layout
// (A : B)_ij = A4(idx(i,j), idx(k,l)) B_kl and contraction is plain matvec.
struct Tensor4 {
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();

  static int idx(int i, int j) { return i + 2 * j; }

  double& operator()(int i, int j, int k, int l) { return m(idx(i, j), idx(k, l)); }
  double operator()(int i, int j, int k, int l) const { return m(idx(i, j), idx(k, l)); }

  Mat2 contract(const Mat2& b) const {
    Eigen::Vector4d v = m * Eigen::Vector4d(b(0, 0), b(1, 0), b(0, 1), b(1, 1));
    Mat2 r;
    r << v(0), v(2), v(1), v(3);
    return r;
  }
};

inline Eigen::Vector4d flatten(const Mat2& a) {
  return Eigen::Vector4d(a(0, 0), a(1, 0), a(0, 1), a(1, 1));
}

inline Mat2 unflatten(const Eigen::Vector4d& v) {
  Mat2 a;
  a << v(0), v(2), v(1), v(3);
  return a;
}

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

class SolveError : public std::runtime_error {
 public:
  explicit SolveError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace podecm
