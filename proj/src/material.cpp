#include "podecm/material.hpp"

#include <cmath>

namespace podecm {

namespace {

// Contraction a : b for symmetric tensors in [xx, yy, zz, xy] components.
double sym_dot(const Eigen::Vector4d& a, const Eigen::Vector4d& b) {
  return a(0) * b(0) + a(1) * b(1) + a(2) * b(2) + 2.0 * a(3) * b(3);
}

Eigen::Vector4d deviator(const Eigen::Vector4d& a) {
  const double p = (a(0) + a(1) + a(2)) / 3.0;
  return Eigen::Vector4d(a(0) - p, a(1) - p, a(2) - p, a(3));
}

// Row vector such that row * deps equals N : deps for plain components.
Eigen::RowVector4d contraction_row(const Eigen::Vector4d& n) {
  return Eigen::RowVector4d(n(0), n(1), n(2), 2.0 * n(3));
}

const Eigen::Matrix4d& deviatoric_projector() {
  static const Eigen::Matrix4d p = [] {
    Eigen::Matrix4d m;
    m << 2.0 / 3, -1.0 / 3, -1.0 / 3, 0,
        -1.0 / 3, 2.0 / 3, -1.0 / 3, 0,
        -1.0 / 3, -1.0 / 3, 2.0 / 3, 0,
        0, 0, 0, 1;
    return m;
  }();
  return p;
}

struct Eig2 {
  double l1 = 0, l2 = 0;
  Vec2 v1 = Vec2::UnitX(), v2 = Vec2::UnitY();
};

Eig2 eig_sym2(const Mat2& c) {
  Eig2 e;
  const double tr = c(0, 0) + c(1, 1);
  const double hd = 0.5 * (c(0, 0) - c(1, 1));
  const double off = 0.5 * (c(0, 1) + c(1, 0));
  const double d = std::sqrt(hd * hd + off * off);
  e.l1 = 0.5 * tr + d;
  e.l2 = 0.5 * tr - d;
  if (d <= 1e-14 * (std::abs(tr) + 1.0)) return e;  // repeated root, any frame
  Vec2 v(off, e.l1 - c(0, 0));
  if (v.squaredNorm() < 1e-30 * d * d) v = Vec2(e.l1 - c(1, 1), off);
  e.v1 = v.normalized();
  e.v2 = Vec2(-e.v1(1), e.v1(0));
  return e;
}

}  // namespace

Eigen::Matrix4d elastic_tangent_small(const PlasticityParams& p) {
  const double la = p.lambda(), mu = p.mu();
  Eigen::Matrix4d c;
  c << la + 2 * mu, la, la, 0,
      la, la + 2 * mu, la, 0,
      la, la, la + 2 * mu, 0,
      0, 0, 0, 2 * mu;
  return c;
}

Tensor4 elastic_tangent_2d(double lambda, double mu) {
  Tensor4 a;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l)
          a(i, j, k, l) = lambda * (i == j) * (k == l) +
                          mu * ((i == k) * (j == l) + (i == l) * (j == k));
  return a;
}

SmallResult small_strain_update(const PlasticityParams& p, const SmallState& s0,
                                const Eigen::Vector4d& eps, SmallState* s1) {
  const double la = p.lambda(), mu = p.mu();
  const Eigen::Matrix4d c_el = elastic_tangent_small(p);

  SmallResult res;
  const Eigen::Vector4d eps_el = eps - s0.eps_p;
  const double tr = eps_el(0) + eps_el(1) + eps_el(2);
  Eigen::Vector4d sigma_tr(la * tr + 2 * mu * eps_el(0),
                           la * tr + 2 * mu * eps_el(1),
                           la * tr + 2 * mu * eps_el(2), 2 * mu * eps_el(3));
  const Eigen::Vector4d dev = deviator(sigma_tr);
  const double norm_dev = std::sqrt(sym_dot(dev, dev));
  res.q_trial = std::sqrt(1.5) * norm_dev;
  res.f_trial = res.q_trial - (p.sigma_y0 + p.H * s0.xi);

  SmallState next = s0;
  if (res.f_trial <= 0.0) {
    res.sigma = sigma_tr;
    res.tangent = c_el;
    res.mises = res.q_trial;
  } else {
    res.dgamma = res.f_trial / (3 * mu + p.H);
    const Eigen::Vector4d r = (1.5 / res.q_trial) * dev;  // flow direction
    res.sigma = sigma_tr - 2 * mu * res.dgamma * r;
    next.eps_p += res.dgamma * r;
    next.xi += res.dgamma;
    res.mises = res.q_trial - 3 * mu * res.dgamma;

    const Eigen::Vector4d n = dev / norm_dev;
    const Eigen::Matrix4d nn = n * contraction_row(n);
    res.tangent = c_el - 6 * mu * mu *
                             (nn / (3 * mu + p.H) +
                              (res.dgamma / res.q_trial) *
                                  (deviatoric_projector() - nn));
  }
  if (s1) *s1 = next;
  return res;
}

LargeResult large_strain_update(const PlasticityParams& p, const PlasticState& s0,
                                const Mat2& F, PlasticState* s1) {
  const Mat2 fp0_inv = s0.Fp.inverse();
  const Mat2 fe_tr = F * fp0_inv;
  const Mat2 c_tr = fe_tr.transpose() * fe_tr;
  const double czz_tr = 1.0 / (s0.Fp_zz * s0.Fp_zz);

  const Eig2 eg = eig_sym2(c_tr);
  if (eg.l2 <= 0.0 || czz_tr <= 0.0)
    throw SolveError("plasticity update hit a non-positive elastic stretch "
                     "(det F = " + std::to_string(F.determinant()) + ")");

  // Return map on principal logarithmic strains.  The elastic trial state is
  // coaxial with its own stress, so flow, stress and the updated elastic
  // stretch all share the trial eigenframe and the shear component stays zero.
  const Eigen::Vector4d eps_tr(0.5 * std::log(eg.l1), 0.5 * std::log(eg.l2),
                               0.5 * std::log(czz_tr), 0.0);
  SmallState inner1;
  const SmallResult sr = small_strain_update(p, SmallState{}, eps_tr, &inner1);

  const Mat2 vv1 = eg.v1 * eg.v1.transpose();
  const Mat2 vv2 = eg.v2 * eg.v2.transpose();

  PlasticState next = s0;
  next.Fp = (std::exp(inner1.eps_p(0)) * vv1 + std::exp(inner1.eps_p(1)) * vv2) *
            s0.Fp;
  next.Fp_zz = std::exp(inner1.eps_p(2)) * s0.Fp_zz;
  next.xi = s0.xi + sr.dgamma;

  const double l1n = std::exp(2.0 * (eps_tr(0) - inner1.eps_p(0)));
  const double l2n = std::exp(2.0 * (eps_tr(1) - inner1.eps_p(1)));
  const Mat2 s_hat = (sr.sigma(0) / l1n) * vv1 + (sr.sigma(1) / l2n) * vv2;

  const Mat2 fpn_inv = next.Fp.inverse();
  LargeResult res;
  res.P = (F * fpn_inv) * s_hat * fpn_inv.transpose();
  res.dgamma = sr.dgamma;
  res.f_trial = sr.f_trial;
  res.q_trial = sr.q_trial;
  res.mises = sr.mises;
  if (s1) *s1 = next;
  return res;
}

Tensor4 large_strain_tangent(const PlasticityParams& p, const PlasticState& s0,
                             const Mat2& F, double h_rel) {
  const double h = h_rel * std::max(1.0, F.norm());
  Tensor4 a;
  for (int k = 0; k < 2; ++k) {
    for (int l = 0; l < 2; ++l) {
      Mat2 fp = F, fm = F;
      fp(k, l) += h;
      fm(k, l) -= h;
      const Mat2 pp = large_strain_update(p, s0, fp, nullptr).P;
      const Mat2 pm = large_strain_update(p, s0, fm, nullptr).P;
      const Mat2 diff = (pp - pm) / (2.0 * h);
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) a(i, j, k, l) = diff(i, j);
    }
  }
  return a;
}

}  // namespace podecm
