#pragma once

#include "podecm/types.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace podecm {

enum class ElemKind { Tri6, Quad8 };

int nodes_per_elem(ElemKind kind);
std::string elem_kind_name(ElemKind kind);
ElemKind elem_kind_from_name(const std::string& name);

// Shape function values and parent-coordinate derivatives at one point.
struct ShapeEval {
  VecX n;    // nodes_per_elem
  MatX dn;   // nodes_per_elem x 2
};

ShapeEval shape_eval(ElemKind kind, const Vec2& xi);

// Reference-element quadrature rule (degree 2, exact for the stiffness
// integrand on affine elements): 3 interior points for Tri6, tensor 2x2
// Gauss for Quad8.
struct QuadratureRule {
  MatX points;  // n_qp x 2
  VecX weights;
};

const QuadratureRule& quadrature(ElemKind kind);

// Quadratic line shape functions for boundary edges, nodes ordered
// (corner a, corner b, midside), xi in [-1, 1], with a 3-point Gauss rule.
struct EdgeRule {
  VecX points;   // n_qp
  VecX weights;
  MatX n;        // 3 x n_qp values
  MatX dn;       // 3 x n_qp derivatives d/dxi
};

const EdgeRule& edge_rule();

// Unstructured 2D mesh of a single element kind.  Regions give one integer
// material/phase id per element; boundary holds pairs (node, tag) and a node
// may carry several tags.  Text serialization is the `mesh2d v1` format
// described in docs/formats.md.
struct Mesh {
  ElemKind kind = ElemKind::Tri6;
  MatX nodes;                                // n_nodes x 2
  Eigen::MatrixXi elements;                  // n_elems x nodes_per_elem
  VecXi regions;                             // n_elems
  std::vector<std::pair<int, int>> boundary; // (node, tag)

  int n_nodes() const { return static_cast<int>(nodes.rows()); }
  int n_elems() const { return static_cast<int>(elements.rows()); }

  std::vector<int> nodes_with_tag(int tag) const;
  // Boundary edges whose three nodes all carry `tag`, each as (a, b, mid)
  // in the element's traversal order.
  std::vector<std::array<int, 3>> boundary_edges(int tag) const;

  void validate() const;
  std::uint64_t fingerprint() const;
};

Mesh load_mesh(const std::string& path);
void save_mesh(const Mesh& mesh, const std::string& path);

// Master/slave identification of the opposite faces of the unit square.
// Right/top nodes are slaved to their left/bottom partners, the three
// non-anchor corners to the (0,0) anchor, and the anchor itself is pinned.
struct PeriodicPairing {
  int anchor = -1;
  std::unordered_map<int, int> slave_of;  // slave node -> master node

  bool is_slave(int node) const { return slave_of.count(node) != 0; }
};

PeriodicPairing periodic_pairs(const Mesh& mesh, double tol = 1e-8);

// Nodal degree-of-freedom numbering after constraint elimination.  Each
// unconstrained master node owns two consecutive reduced dofs; slaves alias
// their master's dofs and fixed nodes map to -1.
struct DofMap {
  VecXi node_dof;  // node -> reduced index of its x dof (-1 if fixed)
  int n_red = 0;

  VecX expand(const VecX& reduced, int n_nodes) const;
  VecX reduce(const VecX& full) const;
};

DofMap periodic_dof_map(const Mesh& mesh, const PeriodicPairing& pairing);
// Dirichlet map: nodes carrying `fixed_tag` are pinned, everything else free.
DofMap dirichlet_dof_map(const Mesh& mesh, const std::vector<int>& fixed_nodes);

// Precomputed quadrature data in the mesh (parent) configuration: physical
// shape gradients, weighted measures and point locations for every global
// quadrature point q = elem * n_qp_per_elem + k.
struct QuadCache {
  int n_per_elem = 0;
  MatX ref_n;                 // nodes_per_elem x n_per_elem
  std::vector<MatX> grad;     // per global qp: nodes_per_elem x 2
  VecX w;                     // per global qp
  MatX x;                     // n_qp x 2
  VecXi elem_of;

  int n_qp() const { return static_cast<int>(w.size()); }
};

QuadCache build_quad_cache(const Mesh& mesh);

}  // namespace podecm
