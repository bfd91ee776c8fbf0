#pragma once

#include "podecm/geometry.hpp"
#include "podecm/mesh.hpp"

namespace podecm {

// Outer-boundary node tag shared by all generated meshes; the macro mesh
// additionally tags its four sides individually.
inline constexpr int kOuterTag = 1;
inline constexpr int kBottomTag = 2;
inline constexpr int kTopTag = 3;
inline constexpr int kLeftTag = 4;
inline constexpr int kRightTag = 5;

// Uniform n x n triangulation of the unit square, each cell split along its
// lower-left to upper-right diagonal.  All elements carry region 0.
Mesh structured_tri6(int n);

// Uniform nx x ny serendipity quadrilateral mesh of [0, w] x [0, h] with the
// four sides tagged.
Mesh structured_quad8(int nx, int ny, double w, double h);

// Body-fitted cell mesh: starts from structured_tri6(n), snaps grid nodes
// onto the parent ellipse interfaces, smooths, and curves the interface
// midside nodes onto the arcs.  Inclusions (scale kind) become region 1;
// pores are removed from the mesh.  Interface nodes carry each ellipse's tag.
Mesh fitted_cell_mesh(int n, const GeomSpec& spec);

}  // namespace podecm
