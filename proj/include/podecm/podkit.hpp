#pragma once

#include "podecm/mesh.hpp"
#include "podecm/morph.hpp"

namespace podecm {

// H1 inner product on full nodal displacement vectors (both components),
// mass plus gradient term, parent measure.
SpMat h1_gram(const Mesh& mesh, const QuadCache& cache);

// Same metric transported to the morphed cell: integrand mapped with the
// morph gradient and weighted by its determinant.  Used for fluctuation
// error norms on a specific geometry.
SpMat h1_gram_morphed(const Mesh& mesh, const QuadCache& cache,
                      const MorphField& morph);

// Diagonal weights of the L2 inner product for per-quadrature-point stress
// fields with four components per point (parent measure).
VecX stress_gram_diag(const QuadCache& cache);

// Proper orthogonal decomposition by the method of snapshots under a given
// gram matrix.  Returns at most max_modes gram-orthonormal modes, dropping
// directions whose snapshot eigenvalue falls below tol_rel^2 times the
// largest.  Eigenvalues of the full snapshot correlation come back sorted
// descending.
struct PodResult {
  MatX modes;
  VecX eigenvalues;
};

PodResult pod(const MatX& snapshots, const SpMat& gram, int max_modes,
              double tol_rel = 1e-10);
PodResult pod_diag(const MatX& snapshots, const VecX& gram_diag, int max_modes,
                   double tol_rel = 1e-10);

// Gram-orthonormalize the columns of a basis (modified Gram-Schmidt, two
// passes); dependent columns are rejected.
MatX orthonormalize(const MatX& basis, const SpMat& gram);

// Full-dof unit basis of the periodic fluctuation space: one column per
// reduced dof, slaved entries replicated.
MatX periodic_injection_basis(const Mesh& mesh, const DofMap& dofs);

}  // namespace podecm
