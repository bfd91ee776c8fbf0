#include "podecm/podkit.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <vector>

namespace podecm {

namespace {

SpMat h1_gram_impl(const Mesh& mesh, const QuadCache& cache,
                   const MorphField* morph) {
  const int npe = nodes_per_elem(mesh.kind);
  const int n_dofs = 2 * static_cast<int>(mesh.nodes.rows());
  std::vector<Triplet> trips;
  trips.reserve(static_cast<size_t>(cache.n_qp()) * npe * npe * 2);
  for (int q = 0; q < cache.n_qp(); ++q) {
    const int e = cache.elem_of(q);
    const int k = q % cache.n_per_elem;  // local quadrature index
    double w = cache.w(q);
    MatX g = cache.grad[q];
    if (morph != nullptr) {
      w *= morph->det_fmu(q);
      g = g * morph->fmu_inv[q];
    }
    for (int a = 0; a < npe; ++a) {
      const int na = mesh.elements(e, a);
      for (int b = 0; b < npe; ++b) {
        const int nb = mesh.elements(e, b);
        const double v = w * (cache.ref_n(a, k) * cache.ref_n(b, k) +
                              g.row(a).dot(g.row(b)));
        trips.emplace_back(2 * na, 2 * nb, v);
        trips.emplace_back(2 * na + 1, 2 * nb + 1, v);
      }
    }
  }
  SpMat gram(n_dofs, n_dofs);
  gram.setFromTriplets(trips.begin(), trips.end());
  return gram;
}

PodResult pod_impl(const MatX& snapshots, const MatX& gram_snapshots,
                   int max_modes, double tol_rel) {
  const int n_snap = static_cast<int>(snapshots.cols());
  MatX corr = snapshots.transpose() * gram_snapshots;
  corr = 0.5 * (corr + corr.transpose().eval());
  Eigen::SelfAdjointEigenSolver<MatX> eig(corr);
  if (eig.info() != Eigen::Success) {
    throw SolveError("snapshot eigenproblem failed to converge");
  }
  VecX lambda(n_snap);
  MatX vectors(n_snap, n_snap);
  for (int i = 0; i < n_snap; ++i) {
    lambda(i) = eig.eigenvalues()(n_snap - 1 - i);
    vectors.col(i) = eig.eigenvectors().col(n_snap - 1 - i);
  }
  const double lead = std::max(lambda(0), 0.0);
  const double cut = tol_rel * tol_rel * lead;
  int keep = 0;
  while (keep < n_snap && keep < max_modes && lambda(keep) > cut &&
         lambda(keep) > 0.0) {
    ++keep;
  }
  PodResult out;
  out.eigenvalues = lambda;
  out.modes.resize(snapshots.rows(), keep);
  for (int i = 0; i < keep; ++i) {
    out.modes.col(i) = snapshots * vectors.col(i) / std::sqrt(lambda(i));
  }
  return out;
}

// One modified Gram-Schmidt sweep against precomputed gram-images.
void mgs_pass(MatX& basis, MatX& gram_basis, int cols) {
  for (int i = 0; i < cols; ++i) {
    for (int j = 0; j < i; ++j) {
      const double c = gram_basis.col(j).dot(basis.col(i));
      basis.col(i) -= c * basis.col(j);
      gram_basis.col(i) -= c * gram_basis.col(j);
    }
    const double nrm = std::sqrt(gram_basis.col(i).dot(basis.col(i)));
    basis.col(i) /= nrm;
    gram_basis.col(i) /= nrm;
  }
}

}  // namespace

SpMat h1_gram(const Mesh& mesh, const QuadCache& cache) {
  return h1_gram_impl(mesh, cache, nullptr);
}

SpMat h1_gram_morphed(const Mesh& mesh, const QuadCache& cache,
                      const MorphField& morph) {
  return h1_gram_impl(mesh, cache, &morph);
}

VecX stress_gram_diag(const QuadCache& cache) {
  VecX diag(4 * cache.n_qp());
  for (int q = 0; q < cache.n_qp(); ++q) {
    diag.segment<4>(4 * q).setConstant(cache.w(q));
  }
  return diag;
}

PodResult pod(const MatX& snapshots, const SpMat& gram, int max_modes,
              double tol_rel) {
  PodResult out = pod_impl(snapshots, gram * snapshots, max_modes, tol_rel);
  if (out.modes.cols() > 0) {
    MatX gram_modes = gram * out.modes;
    mgs_pass(out.modes, gram_modes, static_cast<int>(out.modes.cols()));
  }
  return out;
}

PodResult pod_diag(const MatX& snapshots, const VecX& gram_diag, int max_modes,
                   double tol_rel) {
  PodResult out =
      pod_impl(snapshots, gram_diag.asDiagonal() * snapshots, max_modes,
               tol_rel);
  if (out.modes.cols() > 0) {
    MatX gram_modes = gram_diag.asDiagonal() * out.modes;
    mgs_pass(out.modes, gram_modes, static_cast<int>(out.modes.cols()));
  }
  return out;
}

MatX orthonormalize(const MatX& basis, const SpMat& gram) {
  MatX q = basis;
  MatX gq = gram * q;
  int kept = 0;
  for (int i = 0; i < q.cols(); ++i) {
    VecX v = q.col(i);
    VecX gv = gq.col(i);
    for (int pass = 0; pass < 2; ++pass) {
      for (int j = 0; j < kept; ++j) {
        const double c = gq.col(j).dot(v);
        v -= c * q.col(j);
        gv -= c * gq.col(j);
      }
    }
    const double nrm2 = gv.dot(v);
    const double ref = gq.col(i).dot(q.col(i));
    if (nrm2 <= 1e-24 * std::max(ref, 1.0)) {
      continue;
    }
    q.col(kept) = v / std::sqrt(nrm2);
    gq.col(kept) = gv / std::sqrt(nrm2);
    ++kept;
  }
  q.conservativeResize(Eigen::NoChange, kept);
  return q;
}

MatX periodic_injection_basis(const Mesh& mesh, const DofMap& dofs) {
  const int n_nodes = static_cast<int>(mesh.nodes.rows());
  MatX basis = MatX::Zero(2 * n_nodes, dofs.n_red);
  for (int a = 0; a < n_nodes; ++a) {
    const int d = dofs.node_dof(a);
    if (d < 0) continue;
    basis(2 * a, d) = 1.0;
    basis(2 * a + 1, d + 1) = 1.0;
  }
  return basis;
}

}  // namespace podecm
