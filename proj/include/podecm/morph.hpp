#pragma once

#include "podecm/geometry.hpp"
#include "podecm/mesh.hpp"

#include <Eigen/SparseCholesky>

#include <memory>
#include <vector>

namespace podecm {

// Mesh morph for one geometry parameter value: nodal displacement from the
// parent configuration plus the per-quadrature-point map data every mapped
// integral needs (inverse deformation gradient of the morph and its
// determinant).
struct MorphField {
  VecX d;                      // 2 * n_nodes
  std::vector<Mat2> fmu_inv;   // per global quadrature point
  VecX det_fmu;
  double volume = 0.0;         // integral of det over the parent cell
  double min_det = 0.0;
};

// Auxiliary linear-elastic morph operator on the parent mesh (E = 1,
// nu = 0.25): zero displacement on the outer boundary, interface nodes
// carried onto the target ellipses at matching parametric angle.  The
// stiffness factorization is computed once per mesh and reused for every
// parameter value.
class MorphOperator {
 public:
  MorphOperator(const Mesh& mesh, const QuadCache& cache, const GeomSpec& spec);

  MorphField solve(const GeomParams& params) const;

  // Identity morph of the parent configuration (exact, no solve).
  MorphField identity() const;

  const GeomSpec& spec() const { return spec_; }

 private:
  const Mesh& mesh_;
  const QuadCache& cache_;
  GeomSpec spec_;

  std::vector<int> aux_dof_;          // node -> free aux dof (-1 constrained)
  std::vector<int> constrained_;      // constrained nodes
  std::vector<int> interface_of_;     // node -> ellipse index (-1 none)
  int n_free_ = 0;
  SpMat k_fc_;
  std::unique_ptr<Eigen::SimplicialLDLT<SpMat>> solver_;

  MorphField derive(const VecX& d) const;
};

}  // namespace podecm
