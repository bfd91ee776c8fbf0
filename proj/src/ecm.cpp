#include "podecm/ecm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace podecm {

MatX weighted_stress_field(const MorphField& morph, const MatX& p_field) {
  MatX w(4, p_field.cols());
  for (int q = 0; q < p_field.cols(); ++q) {
    const Mat2 p = unflatten(p_field.col(q));
    w.col(q) = flatten(Mat2(p * morph.fmu_inv[q].transpose() *
                            morph.det_fmu(q)));
  }
  return w;
}

MatX ecm_integrand(const Mesh& mesh, const QuadCache& cache,
                   const MatX& disp_modes, const MatX& stress_modes,
                   bool volume_row) {
  const int n_disp = static_cast<int>(disp_modes.cols());
  const int n_stress = static_cast<int>(stress_modes.cols());
  const int nqp = cache.n_qp();
  const int npe = nodes_per_elem(mesh.kind);
  MatX rows(n_disp * n_stress + (volume_row ? 1 : 0), nqp);
  for (int q = 0; q < nqp; ++q) {
    const int e = cache.elem_of(q);
    for (int i = 0; i < n_disp; ++i) {
      Mat2 h = Mat2::Zero();
      for (int a = 0; a < npe; ++a) {
        const int node = mesh.elements(e, a);
        h.row(0) += disp_modes(2 * node, i) * cache.grad[q].row(a);
        h.row(1) += disp_modes(2 * node + 1, i) * cache.grad[q].row(a);
      }
      const Eigen::Vector4d hv = flatten(h);
      for (int l = 0; l < n_stress; ++l) {
        rows(i * n_stress + l, q) =
            hv.dot(stress_modes.block<4, 1>(4 * q, l));
      }
    }
  }
  if (volume_row) {
    rows.row(rows.rows() - 1).setOnes();
  }
  return rows;
}

namespace {

// Feasibility restoration of Lawson-Hanson: repeatedly solve the
// unconstrained least-squares problem on the passive columns, step back to
// the feasible boundary when a weight crosses zero and drop that column.
// Dropped indices (positions into `ids`) are appended to `removed`.
void restore_feasible(const MatX& a, const VecX& b, std::vector<int>& ids,
                      VecX& x, std::vector<int>& removed) {
  removed.clear();
  while (!ids.empty()) {
    MatX a_sel(a.rows(), ids.size());
    for (size_t k = 0; k < ids.size(); ++k) a_sel.col(k) = a.col(ids[k]);
    VecX z = a_sel.colPivHouseholderQr().solve(b);
    if (z.minCoeff() > 0.0) {
      x = z;
      return;
    }
    double alpha = 1.0;
    for (int k = 0; k < z.size(); ++k) {
      if (z(k) <= 0.0) {
        alpha = std::min(alpha, x(k) / (x(k) - z(k)));
      }
    }
    x += alpha * (z - x);
    const double zero_tol = 1e-12 * std::max(x.cwiseAbs().maxCoeff(), 1e-30);
    std::vector<int> keep_ids;
    VecX keep_x(x.size());
    int kept = 0;
    for (int k = 0; k < x.size(); ++k) {
      if (x(k) <= zero_tol) {
        removed.push_back(ids[k]);
      } else {
        keep_ids.push_back(ids[k]);
        keep_x(kept++) = x(k);
      }
    }
    ids = std::move(keep_ids);
    x = keep_x.head(kept).eval();
  }
  x.resize(0);
}

}  // namespace

VecX nnls(const MatX& a, const VecX& b, double tol, int max_iter) {
  const int n = static_cast<int>(a.cols());
  if (max_iter <= 0) max_iter = 3 * n + 10;
  std::vector<int> passive;
  std::vector<char> in_passive(n, 0);
  VecX x_passive;
  VecX x = VecX::Zero(n);
  VecX resid = b;
  std::vector<int> removed;
  for (int it = 0; it < max_iter; ++it) {
    VecX grad = a.transpose() * resid;
    int best = -1;
    double best_val = tol;
    for (int j = 0; j < n; ++j) {
      if (!in_passive[j] && grad(j) > best_val) {
        best_val = grad(j);
        best = j;
      }
    }
    if (best < 0) break;
    passive.push_back(best);
    in_passive[best] = 1;
    VecX x_ext(passive.size());
    x_ext.head(passive.size() - 1) = x_passive;
    x_ext(passive.size() - 1) = 0.0;
    x_passive = x_ext;
    restore_feasible(a, b, passive, x_passive, removed);
    for (int j : removed) in_passive[j] = 0;
    x.setZero();
    resid = b;
    for (size_t k = 0; k < passive.size(); ++k) {
      x(passive[k]) = x_passive(k);
      resid -= x_passive(k) * a.col(passive[k]);
    }
  }
  return x;
}

EcmResult ecm_select(const MatX& integrand, const VecX& quad_weights,
                     const EcmOpts& opts) {
  const int n_rows = static_cast<int>(integrand.rows());
  const int n_cand = static_cast<int>(integrand.cols());
  const VecX rhs = integrand * quad_weights;
  const double rhs_norm = rhs.norm();
  const double row_tol =
      opts.eps * rhs_norm / std::sqrt(static_cast<double>(n_rows));
  const int cap = opts.max_points > 0 ? opts.max_points : n_cand;

  VecX col_norm(n_cand);
  for (int j = 0; j < n_cand; ++j) col_norm(j) = integrand.col(j).norm();

  EcmResult out;
  std::vector<int> selected;
  std::vector<char> unavailable(n_cand, 0);
  VecX x;
  VecX resid = rhs;
  std::vector<int> removed;

  auto converged = [&](const VecX& r) {
    if (rhs_norm == 0.0) return true;
    return r.norm() <= opts.eps * rhs_norm &&
           r.cwiseAbs().maxCoeff() <= row_tol;
  };

  while (!converged(resid)) {
    if (static_cast<int>(selected.size()) >= cap) {
      throw SolveError("cubature did not reach the requested accuracy within "
                       "the point budget");
    }
    VecX corr = integrand.transpose() * resid;
    int best = -1;
    double best_val = 0.0;
    for (int j = 0; j < n_cand; ++j) {
      if (unavailable[j] || col_norm(j) == 0.0) continue;
      const double v = corr(j) / col_norm(j);
      if (v > best_val) {
        best_val = v;
        best = j;
      }
    }
    if (best < 0) {
      throw SolveError(
          "cubature stalled: no remaining point improves the residual");
    }
    selected.push_back(best);
    unavailable[best] = 1;
    VecX x_ext(selected.size());
    x_ext.head(selected.size() - 1) = x;
    x_ext(selected.size() - 1) = 0.0;
    x = x_ext;
    restore_feasible(integrand, rhs, selected, x, removed);
    ++out.iterations;
    resid = rhs;
    for (size_t k = 0; k < selected.size(); ++k) {
      resid -= x(k) * integrand.col(selected[k]);
    }
  }

  std::vector<int> order(selected.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int p, int q) { return selected[p] < selected[q]; });
  out.ids.resize(selected.size());
  out.weights.resize(selected.size());
  for (size_t k = 0; k < order.size(); ++k) {
    out.ids[k] = selected[order[k]];
    out.weights(k) = x(order[k]);
  }
  out.residual_rel = rhs_norm == 0.0 ? 0.0 : resid.norm() / rhs_norm;
  return out;
}

EcmResult full_quadrature_rule(const QuadCache& cache) {
  EcmResult out;
  out.ids.resize(cache.n_qp());
  std::iota(out.ids.begin(), out.ids.end(), 0);
  out.weights = cache.w;
  return out;
}

}  // namespace podecm
