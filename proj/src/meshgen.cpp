#include "podecm/meshgen.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>

namespace podecm {

namespace {

constexpr double kBoxTol = 1e-12;

bool on_box(const Vec2& x) {
  return std::abs(x(0)) < kBoxTol || std::abs(x(0) - 1) < kBoxTol ||
         std::abs(x(1)) < kBoxTol || std::abs(x(1) - 1) < kBoxTol;
}

Vec2 project_radial(const Ellipse& e, const Vec2& x) {
  const Vec2 l = e.to_local(x);
  const double r = std::hypot(l(0) / e.a, l(1) / e.b);
  if (r < 1e-12)
    throw SolveError("cannot project the ellipse center onto its boundary");
  return e.to_world(l / r);
}

double min_det_tri6(const MatX& coords) {
  const QuadratureRule& rule = quadrature(ElemKind::Tri6);
  double dmin = 1e300;
  for (int q = 0; q < rule.weights.size(); ++q) {
    const ShapeEval s = shape_eval(ElemKind::Tri6, rule.points.row(q).transpose());
    const Mat2 jac = coords.transpose() * s.dn;
    dmin = std::min(dmin, jac.determinant());
  }
  return dmin;
}

}  // namespace

Mesh structured_tri6(int n) {
  if (n < 1) throw ConfigError("structured_tri6 needs n >= 1");
  const int m = 2 * n + 1;
  Mesh mesh;
  mesh.kind = ElemKind::Tri6;
  mesh.nodes.resize(m * m, 2);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) {
      mesh.nodes(j * m + i, 0) = static_cast<double>(i) / (m - 1);
      mesh.nodes(j * m + i, 1) = static_cast<double>(j) / (m - 1);
    }

  mesh.elements.resize(2 * n * n, 6);
  int e = 0;
  auto id = [m](int i, int j) { return j * m + i; };
  for (int cj = 0; cj < n; ++cj)
    for (int ci = 0; ci < n; ++ci) {
      const int i = 2 * ci, j = 2 * cj;
      mesh.elements.row(e++) << id(i, j), id(i + 2, j), id(i + 2, j + 2),
          id(i + 1, j), id(i + 2, j + 1), id(i + 1, j + 1);
      mesh.elements.row(e++) << id(i, j), id(i + 2, j + 2), id(i, j + 2),
          id(i + 1, j + 1), id(i + 1, j + 2), id(i, j + 1);
    }
  mesh.regions = VecXi::Zero(mesh.n_elems());
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i)
      if (i == 0 || i == m - 1 || j == 0 || j == m - 1)
        mesh.boundary.emplace_back(id(i, j), kOuterTag);
  mesh.validate();
  return mesh;
}

Mesh structured_quad8(int nx, int ny, double w, double h) {
  if (nx < 1 || ny < 1) throw ConfigError("structured_quad8 needs nx, ny >= 1");
  const int mx = 2 * nx + 1, my = 2 * ny + 1;
  std::vector<int> id(mx * my, -1);
  std::vector<Vec2> pos;
  for (int j = 0; j < my; ++j)
    for (int i = 0; i < mx; ++i) {
      if (i % 2 == 1 && j % 2 == 1) continue;  // serendipity: no cell centers
      id[j * mx + i] = static_cast<int>(pos.size());
      pos.emplace_back(w * i / (mx - 1.0), h * j / (my - 1.0));
    }

  Mesh mesh;
  mesh.kind = ElemKind::Quad8;
  mesh.nodes.resize(pos.size(), 2);
  for (std::size_t k = 0; k < pos.size(); ++k) mesh.nodes.row(k) = pos[k];

  auto at = [&](int i, int j) { return id[j * mx + i]; };
  mesh.elements.resize(nx * ny, 8);
  int e = 0;
  for (int cj = 0; cj < ny; ++cj)
    for (int ci = 0; ci < nx; ++ci) {
      const int i = 2 * ci, j = 2 * cj;
      mesh.elements.row(e++) << at(i, j), at(i + 2, j), at(i + 2, j + 2),
          at(i, j + 2), at(i + 1, j), at(i + 2, j + 1), at(i + 1, j + 2),
          at(i, j + 1);
    }
  mesh.regions = VecXi::Zero(mesh.n_elems());
  for (int j = 0; j < my; ++j)
    for (int i = 0; i < mx; ++i) {
      const int node = at(i, j);
      if (node < 0) continue;
      bool outer = false;
      if (j == 0) mesh.boundary.emplace_back(node, kBottomTag), outer = true;
      if (j == my - 1) mesh.boundary.emplace_back(node, kTopTag), outer = true;
      if (i == 0) mesh.boundary.emplace_back(node, kLeftTag), outer = true;
      if (i == mx - 1) mesh.boundary.emplace_back(node, kRightTag), outer = true;
      if (outer) mesh.boundary.emplace_back(node, kOuterTag);
    }
  mesh.validate();
  return mesh;
}

Mesh fitted_cell_mesh(int n, const GeomSpec& spec) {
  if (n < 4) throw ConfigError("fitted_cell_mesh needs n >= 4");
  const int m = n + 1;
  auto id = [m](int i, int j) { return j * m + i; };

  std::vector<Vec2> pos(m * m);
  std::vector<char> outer(m * m, 0);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) {
      pos[id(i, j)] = Vec2(static_cast<double>(i) / n, static_cast<double>(j) / n);
      outer[id(i, j)] = (i == 0 || i == n || j == 0 || j == n);
    }

  // Grid edges of the triangulation: horizontal, vertical and cell diagonals.
  std::vector<std::array<int, 2>> edges;
  for (int j = 0; j < m; ++j)
    for (int i = 0; i + 1 < m; ++i) edges.push_back({id(i, j), id(i + 1, j)});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j + 1 < m; ++j) edges.push_back({id(i, j), id(i, j + 1)});
  for (int cj = 0; cj < n; ++cj)
    for (int ci = 0; ci < n; ++ci)
      edges.push_back({id(ci, cj), id(ci + 1, cj + 1)});

  // For every edge crossing an ellipse, snap the nearer endpoint onto the
  // intersection point; a node keeps its nearest snap target.
  struct Snap {
    Vec2 target;
    double dist;
    int ell;
  };
  std::vector<std::optional<Snap>> best(m * m);
  auto request = [&](int node, const Vec2& target, int ell) {
    const double d = (target - pos[node]).norm();
    if (!best[node] || d < best[node]->dist) best[node] = Snap{target, d, ell};
  };

  for (std::size_t k = 0; k < spec.ellipses.size(); ++k) {
    const Ellipse& el = spec.ellipses[k];
    for (const auto& [na, nb] : edges) {
      const Vec2 la = el.to_local(pos[na]);
      const Vec2 lb = el.to_local(pos[nb]);
      const Vec2 d = lb - la;
      const double ax2 = el.a * el.a, bx2 = el.b * el.b;
      const double qa = d(0) * d(0) / ax2 + d(1) * d(1) / bx2;
      const double qb = 2 * (la(0) * d(0) / ax2 + la(1) * d(1) / bx2);
      const double qc = la(0) * la(0) / ax2 + la(1) * la(1) / bx2 - 1.0;
      const double disc = qb * qb - 4 * qa * qc;
      if (disc < 0 || qa <= 0) continue;
      const double sd = std::sqrt(disc);
      double roots[2] = {(-qb - sd) / (2 * qa), (-qb + sd) / (2 * qa)};
      std::vector<double> in;
      for (double t : roots)
        if (t > -1e-9 && t < 1 + 1e-9) in.push_back(std::clamp(t, 0.0, 1.0));
      if (in.empty()) continue;
      auto point = [&](double t) { return el.to_world(la + t * (lb - la)); };
      if (in.size() == 1) {
        request(in[0] < 0.5 ? na : nb, point(in[0]), static_cast<int>(k));
      } else {
        request(na, point(in[0]), static_cast<int>(k));
        request(nb, point(in[1]), static_cast<int>(k));
      }
    }
  }

  std::vector<int> snap_of(m * m, -1);
  for (int v = 0; v < m * m; ++v) {
    if (!best[v]) continue;
    if (outer[v])
      throw SolveError("geometry touches the cell boundary; enlarge the margin "
                       "or refine the grid");
    pos[v] = best[v]->target;
    snap_of[v] = best[v]->ell;
  }

  // Linear triangles (corner connectivity), lower-left/upper-right split.
  std::vector<std::array<int, 3>> tris;
  tris.reserve(2 * n * n);
  for (int cj = 0; cj < n; ++cj)
    for (int ci = 0; ci < n; ++ci) {
      tris.push_back({id(ci, cj), id(ci + 1, cj), id(ci + 1, cj + 1)});
      tris.push_back({id(ci, cj), id(ci + 1, cj + 1), id(ci, cj + 1)});
    }
  auto tri_area = [&](const std::array<int, 3>& t) {
    const Vec2 a = pos[t[0]], b = pos[t[1]], c = pos[t[2]];
    return 0.5 * ((b - a)(0) * (c - a)(1) - (b - a)(1) * (c - a)(0));
  };

  // Jacobi smoothing of unsnapped interior nodes, reverted if it folds
  // anything.
  std::vector<std::vector<int>> nbr(m * m);
  for (const auto& [a, b] : edges) {
    nbr[a].push_back(b);
    nbr[b].push_back(a);
  }
  const std::vector<Vec2> unsmoothed = pos;
  for (int pass = 0; pass < 2; ++pass) {
    std::vector<Vec2> next = pos;
    for (int v = 0; v < m * m; ++v) {
      if (outer[v] || snap_of[v] >= 0) continue;
      Vec2 mean = Vec2::Zero();
      for (int u : nbr[v]) mean += pos[u];
      mean /= static_cast<double>(nbr[v].size());
      next[v] = 0.5 * (pos[v] + mean);
    }
    pos.swap(next);
  }
  for (const auto& t : tris)
    if (tri_area(t) <= 1e-12) {
      pos = unsmoothed;
      break;
    }
  for (const auto& t : tris)
    if (tri_area(t) <= 1e-12)
      throw SolveError("snapping produced a degenerate triangle; refine the "
                       "grid or adjust the geometry");

  // Classify by centroid, using the snapped coordinates.
  std::vector<int> inside(tris.size(), -1);
  for (std::size_t t = 0; t < tris.size(); ++t) {
    const Vec2 c = (pos[tris[t][0]] + pos[tris[t][1]] + pos[tris[t][2]]) / 3.0;
    for (std::size_t k = 0; k < spec.ellipses.size(); ++k)
      if (spec.ellipses[k].level(c) < 0) {
        inside[t] = static_cast<int>(k);
        break;
      }
  }

  const bool pore = spec.kind == GeomKind::Pore;
  std::vector<char> keep(tris.size(), 1);
  if (pore)
    for (std::size_t t = 0; t < tris.size(); ++t)
      if (inside[t] >= 0) keep[t] = 0;

  // Midside nodes.  Interface edges (between snapped nodes of one ellipse,
  // separating inside from outside or kept from removed) get their midside
  // projected onto the arc, with a blend-back fallback if an element folds.
  std::map<std::pair<int, int>, int> edge_mid;
  std::vector<Vec2> mid_pos;
  struct Curved {
    int mid;
    Vec2 chord, arc;
    double lambda = 1.0;
  };
  std::vector<Curved> curved;
  std::map<std::pair<int, int>, std::array<int, 2>> edge_tris;
  for (std::size_t t = 0; t < tris.size(); ++t)
    for (int s = 0; s < 3; ++s) {
      const int a = tris[t][s], b = tris[t][(s + 1) % 3];
      const auto key = std::minmax(a, b);
      auto it = edge_tris.find(key);
      if (it == edge_tris.end())
        edge_tris[key] = {static_cast<int>(t), -1};
      else
        it->second[1] = static_cast<int>(t);
    }

  auto mid_of = [&](int a, int b) {
    const auto key = std::minmax(a, b);
    auto it = edge_mid.find(key);
    if (it != edge_mid.end()) return it->second;
    const int node = m * m + static_cast<int>(mid_pos.size());
    const Vec2 chord = 0.5 * (pos[a] + pos[b]);
    Vec2 p = chord;
    if (snap_of[a] >= 0 && snap_of[a] == snap_of[b]) {
      const auto& adj = edge_tris.at(key);
      const bool single = adj[1] < 0;
      const int ia = inside[adj[0]];
      const int ib = single ? ia : inside[adj[1]];
      if (ia != ib || single) {  // true interface edge
        const Vec2 arc = project_radial(spec.ellipses[snap_of[a]], chord);
        curved.push_back({node, chord, arc, 1.0});
        p = arc;
      }
    }
    edge_mid[key] = node;
    mid_pos.push_back(p);
    return node;
  };

  std::vector<std::array<int, 6>> elems6;
  std::vector<int> region6;
  for (std::size_t t = 0; t < tris.size(); ++t) {
    if (!keep[t]) continue;
    const auto& tr = tris[t];
    elems6.push_back({tr[0], tr[1], tr[2], mid_of(tr[0], tr[1]),
                      mid_of(tr[1], tr[2]), mid_of(tr[2], tr[0])});
    region6.push_back(!pore && inside[t] >= 0 ? 1 : 0);
  }

  auto node_pos = [&](int v) -> const Vec2& {
    return v < m * m ? pos[v] : mid_pos[v - m * m];
  };

  // Fold repair: halve the curvature of midside nodes of bad elements.
  for (int round = 0; round < 6; ++round) {
    std::vector<char> bad_mid(mid_pos.size(), 0);
    bool any = false;
    MatX coords(6, 2);
    for (const auto& el : elems6) {
      for (int a = 0; a < 6; ++a) coords.row(a) = node_pos(el[a]);
      if (min_det_tri6(coords) <= 1e-10) {
        any = true;
        for (int a = 3; a < 6; ++a)
          if (el[a] >= m * m) bad_mid[el[a] - m * m] = 1;
      }
    }
    if (!any) break;
    for (Curved& c : curved) {
      if (!bad_mid[c.mid - m * m]) continue;
      c.lambda = round >= 4 ? 0.0 : 0.5 * c.lambda;
      mid_pos[c.mid - m * m] = c.chord + c.lambda * (c.arc - c.chord);
    }
  }

  // Assemble, dropping unreferenced nodes (removed pore interiors).
  const int total = m * m + static_cast<int>(mid_pos.size());
  std::vector<int> renum(total, -1);
  int next = 0;
  for (const auto& el : elems6)
    for (int a = 0; a < 6; ++a)
      if (renum[el[a]] < 0) renum[el[a]] = 1;
  for (int v = 0; v < total; ++v)
    if (renum[v] > 0) renum[v] = next++;

  Mesh mesh;
  mesh.kind = ElemKind::Tri6;
  mesh.nodes.resize(next, 2);
  for (int v = 0; v < total; ++v)
    if (renum[v] >= 0) mesh.nodes.row(renum[v]) = node_pos(v);
  mesh.elements.resize(elems6.size(), 6);
  for (std::size_t e = 0; e < elems6.size(); ++e)
    for (int a = 0; a < 6; ++a) mesh.elements(e, a) = renum[elems6[e][a]];
  mesh.regions = Eigen::Map<const VecXi>(region6.data(), region6.size());

  // Boundary tags: the outer box and each fitted interface.
  for (int v = 0; v < total; ++v) {
    if (renum[v] < 0) continue;
    if (on_box(node_pos(v))) mesh.boundary.emplace_back(renum[v], kOuterTag);
  }
  for (int v = 0; v < m * m; ++v)
    if (renum[v] >= 0 && snap_of[v] >= 0)
      mesh.boundary.emplace_back(renum[v], spec.ellipses[snap_of[v]].tag);
  for (const auto& [key, node] : edge_mid) {
    const auto& [a, b] = key;
    if (renum[node] >= 0 && snap_of[a] >= 0 && snap_of[a] == snap_of[b]) {
      const auto& adj = edge_tris.at(key);
      const bool single = adj[1] < 0;
      if (single || inside[adj[0]] != inside[adj[1]])
        mesh.boundary.emplace_back(renum[node], spec.ellipses[snap_of[a]].tag);
    }
  }

  mesh.validate();
  build_quad_cache(mesh);  // rejects any remaining non-positive Jacobian
  return mesh;
}

}  // namespace podecm
