#pragma once

#include "podecm/types.hpp"

#include <string>
#include <vector>

namespace podecm {

struct Ellipse {
  double cx = 0.5, cy = 0.5;  // center
  double a = 0.2, b = 0.2;    // semi-axes (a along the rotated x axis)
  double angle = 0.0;         // rotation, radians
  int tag = 10;               // boundary tag of the fitted interface nodes

  // Level function, negative inside.
  double level(const Vec2& x) const;
  // Local (rotated, centered) coordinates of a world point.
  Vec2 to_local(const Vec2& x) const;
  Vec2 to_world(const Vec2& local) const;
};

// Families of parameterized microstructures.  Scale: stiff elliptical
// inclusions whose semi-axes all scale by one factor zeta.  Pore: a single
// centered elliptical void with prescribed void fraction v_void and aspect
// ratio kappa = b / a.
enum class GeomKind { Scale, Pore };

std::string geom_kind_name(GeomKind kind);
GeomKind geom_kind_from_name(const std::string& name);

using GeomParams = std::vector<double>;

std::vector<std::string> geom_param_names(GeomKind kind);

struct GeomSpec {
  GeomKind kind = GeomKind::Scale;
  std::vector<Ellipse> ellipses;  // parent configuration

  GeomParams parent_params() const;
  std::vector<Ellipse> target_ellipses(const GeomParams& params) const;
  // Material area of the unit cell a morph to `params` should preserve
  // (1 for inclusions, 1 - v_void for pores).
  double material_area(const GeomParams& params) const;
};

// Displacement that carries a point on the parent ellipse onto the target
// ellipse at the matching parametric angle.
Vec2 interface_displacement(const Ellipse& parent, const Ellipse& target,
                            const Vec2& x);

GeomSpec load_geometry(const std::string& path);
void save_geometry(const GeomSpec& spec, const std::string& path);

// Built-in desk-scale microstructures: a four-inclusion composite cell and a
// centered-pore cell.
GeomSpec composite_geometry();
GeomSpec pore_geometry();

}  // namespace podecm
