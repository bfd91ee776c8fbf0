#include "podecm/morph.hpp"

#include "podecm/material.hpp"
#include "podecm/meshgen.hpp"

#include <cmath>

namespace podecm {

namespace {
constexpr double kAuxE = 1.0;
constexpr double kAuxNu = 0.25;
}

MorphOperator::MorphOperator(const Mesh& mesh, const QuadCache& cache,
                             const GeomSpec& spec)
    : mesh_(mesh), cache_(cache), spec_(spec) {
  const int nn = mesh.n_nodes();
  interface_of_.assign(nn, -1);
  for (std::size_t k = 0; k < spec_.ellipses.size(); ++k)
    for (int node : mesh.nodes_with_tag(spec_.ellipses[k].tag))
      interface_of_[node] = static_cast<int>(k);

  std::vector<char> fixed(nn, 0);
  for (int node : mesh.nodes_with_tag(kOuterTag)) fixed[node] = 1;
  for (int v = 0; v < nn; ++v)
    if (interface_of_[v] >= 0) fixed[v] = 1;

  aux_dof_.assign(nn, -1);
  int next = 0;
  for (int v = 0; v < nn; ++v) {
    if (fixed[v]) {
      constrained_.push_back(v);
    } else {
      aux_dof_[v] = next;
      next += 2;
    }
  }
  n_free_ = next;

  // node -> column pair in the constrained block
  std::vector<int> cons_col(nn, -1);
  for (std::size_t c = 0; c < constrained_.size(); ++c)
    cons_col[constrained_[c]] = static_cast<int>(2 * c);

  const double la = kAuxE * kAuxNu / ((1 + kAuxNu) * (1 - 2 * kAuxNu));
  const double mu = kAuxE / (2 * (1 + kAuxNu));
  const Tensor4 a_el = elastic_tangent_2d(la, mu);

  const int npe = nodes_per_elem(mesh.kind);
  std::vector<Triplet> tff, tfc;
  for (int q = 0; q < cache_.n_qp(); ++q) {
    const MatX& g = cache_.grad[q];
    const double w = cache_.w(q);
    const int e = cache_.elem_of(q);
    for (int an = 0; an < npe; ++an) {
      const int na = mesh.elements(e, an);
      const int ra = aux_dof_[na];
      if (ra < 0) continue;
      for (int bn = 0; bn < npe; ++bn) {
        const int nb = mesh.elements(e, bn);
        const int rb = aux_dof_[nb];
        Mat2 kab = Mat2::Zero();
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j) {
            double v = 0;
            for (int nidx = 0; nidx < 2; ++nidx)
              for (int midx = 0; midx < 2; ++midx)
                v += g(an, nidx) * a_el(i, nidx, j, midx) * g(bn, midx);
            kab(i, j) = w * v;
          }
        if (rb >= 0) {
          for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
              tff.emplace_back(ra + i, rb + j, kab(i, j));
        } else {
          const int cb = cons_col[nb];
          for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
              tfc.emplace_back(ra + i, cb + j, kab(i, j));
        }
      }
    }
  }

  SpMat k_ff(n_free_, n_free_);
  k_ff.setFromTriplets(tff.begin(), tff.end());
  k_fc_.resize(n_free_, 2 * constrained_.size());
  k_fc_.setFromTriplets(tfc.begin(), tfc.end());

  solver_ = std::make_unique<Eigen::SimplicialLDLT<SpMat>>();
  solver_->compute(k_ff);
  if (solver_->info() != Eigen::Success)
    throw SolveError("morph operator factorization failed");
}

MorphField MorphOperator::derive(const VecX& d) const {
  MorphField field;
  field.d = d;
  const int nq = cache_.n_qp();
  field.fmu_inv.resize(nq);
  field.det_fmu.resize(nq);
  field.volume = 0.0;
  field.min_det = 1e300;
  const int npe = nodes_per_elem(mesh_.kind);
  for (int q = 0; q < nq; ++q) {
    const MatX& g = cache_.grad[q];
    const int e = cache_.elem_of(q);
    Mat2 grad_d = Mat2::Zero();
    for (int an = 0; an < npe; ++an) {
      const int node = mesh_.elements(e, an);
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) grad_d(i, j) += d(2 * node + i) * g(an, j);
    }
    const Mat2 fmu = Mat2::Identity() + grad_d;
    const double det = fmu.determinant();
    field.det_fmu(q) = det;
    field.min_det = std::min(field.min_det, det);
    if (det <= 0.0)
      throw SolveError("morph folds the mesh (det F = " + std::to_string(det) +
                       " at quadrature point " + std::to_string(q) + ")");
    field.fmu_inv[q] = fmu.inverse();
    field.volume += cache_.w(q) * det;
  }
  return field;
}

MorphField MorphOperator::identity() const {
  return derive(VecX::Zero(2 * mesh_.n_nodes()));
}

MorphField MorphOperator::solve(const GeomParams& params) const {
  const std::vector<Ellipse> targets = spec_.target_ellipses(params);

  VecX d_c = VecX::Zero(2 * constrained_.size());
  bool moved = false;
  for (std::size_t c = 0; c < constrained_.size(); ++c) {
    const int node = constrained_[c];
    const int k = interface_of_[node];
    if (k < 0) continue;  // outer boundary stays put
    Vec2 disp = interface_displacement(
        spec_.ellipses[k], targets[k], mesh_.nodes.row(node).transpose());
    // reconstruction noise at the parent parameters must not break the
    // exact-identity property
    if (disp.norm() < 1e-13) disp.setZero();
    d_c(2 * c) = disp(0);
    d_c(2 * c + 1) = disp(1);
    if (disp.squaredNorm() > 0) moved = true;
  }

  VecX d = VecX::Zero(2 * mesh_.n_nodes());
  if (moved) {
    const VecX rhs = -(k_fc_ * d_c);
    const VecX d_f = solver_->solve(rhs);
    if (solver_->info() != Eigen::Success)
      throw SolveError("morph solve failed");
    for (int v = 0; v < mesh_.n_nodes(); ++v) {
      const int r = aux_dof_[v];
      if (r >= 0) {
        d(2 * v) = d_f(r);
        d(2 * v + 1) = d_f(r + 1);
      }
    }
    for (std::size_t c = 0; c < constrained_.size(); ++c) {
      d(2 * constrained_[c]) = d_c(2 * c);
      d(2 * constrained_[c] + 1) = d_c(2 * c + 1);
    }
  }
  return derive(d);
}

}  // namespace podecm
