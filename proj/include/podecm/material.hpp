#pragma once

#include "podecm/types.hpp"

namespace podecm {

// Isotropic elasto-plastic parameters: J2 yield with linear isotropic
// hardening, yield stress sigma_y0 + H * xi at accumulated plastic strain xi.
struct PlasticityParams {
  double E = 1.0;
  double nu = 0.3;
  double sigma_y0 = 1e300;  // effectively elastic unless set
  double H = 0.0;

  double lambda() const { return E * nu / ((1 + nu) * (1 - 2 * nu)); }
  double mu() const { return E / (2 * (1 + nu)); }
};

// --- small-strain plane-strain model -------------------------------------
//
// Symmetric tensors carry four active components [xx, yy, zz, xy]; the two
// in-plane shears are equal and out-of-plane shears vanish.  Total strain
// input has eps_zz = 0 (plane strain) but plastic flow populates eps_p_zz.

struct SmallState {
  Eigen::Vector4d eps_p = Eigen::Vector4d::Zero();
  double xi = 0.0;
};

struct SmallResult {
  Eigen::Vector4d sigma = Eigen::Vector4d::Zero();
  Eigen::Matrix4d tangent = Eigen::Matrix4d::Zero();  // consistent d sigma / d eps
  double dgamma = 0.0;
  double f_trial = 0.0;
  double q_trial = 0.0;
  double mises = 0.0;  // von Mises norm of the returned stress
};

SmallResult small_strain_update(const PlasticityParams& p, const SmallState& s0,
                                const Eigen::Vector4d& eps, SmallState* s1);

// Plane-strain elastic stiffness acting on [xx, yy, zz, xy] strain components.
Eigen::Matrix4d elastic_tangent_small(const PlasticityParams& p);

// In-plane linear elastic stiffness A(i,j,k,l) = lambda d_ij d_kl
// + mu (d_ik d_jl + d_il d_jk), for linear kernels and auxiliary operators.
Tensor4 elastic_tangent_2d(double lambda, double mu);

// --- finite-strain model ---------------------------------------------------
//
// Multiplicative split F = F_el F_pl with the return map formulated on the
// logarithmic elastic strain.  Plane strain keeps the in-plane plastic block
// and the out-of-plane stretch separately; det of the full 3D F_pl stays 1.

struct PlasticState {
  Mat2 Fp = Mat2::Identity();
  double Fp_zz = 1.0;
  double xi = 0.0;
};

struct LargeResult {
  Mat2 P = Mat2::Zero();  // first Piola-Kirchhoff stress, in-plane block
  double dgamma = 0.0;
  double f_trial = 0.0;
  double q_trial = 0.0;
  double mises = 0.0;
};

LargeResult large_strain_update(const PlasticityParams& p, const PlasticState& s0,
                                const Mat2& F, PlasticState* s1);

// Consistent tangent dP/dF by central differences around F with the history
// frozen at s0; step scales with max(1, ||F||).
Tensor4 large_strain_tangent(const PlasticityParams& p, const PlasticState& s0,
                             const Mat2& F, double h_rel = 1e-7);

}  // namespace podecm
