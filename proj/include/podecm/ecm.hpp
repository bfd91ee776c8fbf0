#pragma once

#include "podecm/mesh.hpp"
#include "podecm/morph.hpp"

#include <vector>

namespace podecm {

// Stress measure whose parent-domain integral against parent-coordinate test
// gradients reproduces the internal force on the morphed cell: the first
// Piola stress times the inverse-transposed morph gradient, scaled by the
// morph determinant.  Layout matches p_field: 4 x n_qp, column-stacked 2x2.
MatX weighted_stress_field(const MorphField& morph, const MatX& p_field);

// Training matrix for the cubature fit.  Row (i * n_stress + l) samples the
// contraction of displacement-mode i's parent gradient with stress-mode l at
// every quadrature point; an all-ones row appended at the bottom pins the
// total cell volume.  disp_modes is 2n x N nodal, stress_modes is
// 4*n_qp x L.
MatX ecm_integrand(const Mesh& mesh, const QuadCache& cache,
                   const MatX& disp_modes, const MatX& stress_modes,
                   bool volume_row = true);

// Nonnegative least squares, Lawson-Hanson active set.
VecX nnls(const MatX& a, const VecX& b, double tol, int max_iter = 0);

struct EcmOpts {
  double eps = 0.01;       // target relative residual
  bool volume_row = true;  // append the volume constraint row
  int max_points = 0;      // 0: no cap below the candidate count
};

struct EcmResult {
  std::vector<int> ids;  // selected quadrature points, ascending
  VecX weights;          // positive cubature weights, matching ids
  double residual_rel = 0.0;
  int iterations = 0;
};

// Greedy empirical cubature: starting from the exact right-hand side
// rhs = integrand * quadrature weights, repeatedly add the candidate column
// best aligned with the residual, refit nonnegative weights, and stop once
// the residual satisfies eps both in root-mean-square and row by row.
// Points driven to zero weight are discarded and never revisited.  Throws
// SolveError if the candidate pool is exhausted first.
EcmResult ecm_select(const MatX& integrand, const VecX& quad_weights,
                     const EcmOpts& opts);

// Trivial rule using every quadrature point with its parent weight; gives a
// reduced model whose only approximation is the displacement basis.
EcmResult full_quadrature_rule(const QuadCache& cache);

}  // namespace podecm
