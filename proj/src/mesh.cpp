#include "podecm/mesh.hpp"

#include "podecm/store.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace podecm {

int nodes_per_elem(ElemKind kind) { return kind == ElemKind::Tri6 ? 6 : 8; }

std::string elem_kind_name(ElemKind kind) {
  return kind == ElemKind::Tri6 ? "tri6" : "quad8";
}

ElemKind elem_kind_from_name(const std::string& name) {
  if (name == "tri6") return ElemKind::Tri6;
  if (name == "quad8") return ElemKind::Quad8;
  throw FormatError("unknown element kind '" + name + "'");
}

ShapeEval shape_eval(ElemKind kind, const Vec2& xi) {
  ShapeEval s;
  if (kind == ElemKind::Tri6) {
    const double l1 = 1.0 - xi(0) - xi(1), l2 = xi(0), l3 = xi(1);
    s.n.resize(6);
    s.dn.resize(6, 2);
    s.n << l1 * (2 * l1 - 1), l2 * (2 * l2 - 1), l3 * (2 * l3 - 1),
        4 * l1 * l2, 4 * l2 * l3, 4 * l3 * l1;
    s.dn << -(4 * l1 - 1), -(4 * l1 - 1),
        4 * l2 - 1, 0,
        0, 4 * l3 - 1,
        4 * (l1 - l2), -4 * l2,
        4 * l3, 4 * l2,
        -4 * l3, 4 * (l1 - l3);
  } else {
    static const double cx[8] = {-1, 1, 1, -1, 0, 1, 0, -1};
    static const double cy[8] = {-1, -1, 1, 1, -1, 0, 1, 0};
    const double x = xi(0), y = xi(1);
    s.n.resize(8);
    s.dn.resize(8, 2);
    for (int i = 0; i < 4; ++i) {
      const double xi_i = cx[i], eta_i = cy[i];
      s.n(i) = 0.25 * (1 + x * xi_i) * (1 + y * eta_i) * (x * xi_i + y * eta_i - 1);
      s.dn(i, 0) = 0.25 * xi_i * (1 + y * eta_i) * (2 * x * xi_i + y * eta_i);
      s.dn(i, 1) = 0.25 * eta_i * (1 + x * xi_i) * (2 * y * eta_i + x * xi_i);
    }
    for (int i = 4; i < 8; ++i) {
      const double xi_i = cx[i], eta_i = cy[i];
      if (xi_i == 0.0) {
        s.n(i) = 0.5 * (1 - x * x) * (1 + y * eta_i);
        s.dn(i, 0) = -x * (1 + y * eta_i);
        s.dn(i, 1) = 0.5 * (1 - x * x) * eta_i;
      } else {
        s.n(i) = 0.5 * (1 + x * xi_i) * (1 - y * y);
        s.dn(i, 0) = 0.5 * xi_i * (1 - y * y);
        s.dn(i, 1) = -y * (1 + x * xi_i);
      }
    }
  }
  return s;
}

const QuadratureRule& quadrature(ElemKind kind) {
  static const QuadratureRule tri = [] {
    QuadratureRule r;
    r.points.resize(3, 2);
    r.points << 1.0 / 6, 1.0 / 6, 2.0 / 3, 1.0 / 6, 1.0 / 6, 2.0 / 3;
    r.weights = VecX::Constant(3, 1.0 / 6);
    return r;
  }();
  static const QuadratureRule quad = [] {
    QuadratureRule r;
    const double g = 1.0 / std::sqrt(3.0);
    r.points.resize(4, 2);
    r.points << -g, -g, g, -g, g, g, -g, g;
    r.weights = VecX::Constant(4, 1.0);
    return r;
  }();
  return kind == ElemKind::Tri6 ? tri : quad;
}

const EdgeRule& edge_rule() {
  static const EdgeRule r = [] {
    EdgeRule e;
    const double g = std::sqrt(3.0 / 5.0);
    e.points.resize(3);
    e.points << -g, 0.0, g;
    e.weights.resize(3);
    e.weights << 5.0 / 9, 8.0 / 9, 5.0 / 9;
    e.n.resize(3, 3);
    e.dn.resize(3, 3);
    for (int q = 0; q < 3; ++q) {
      const double t = e.points(q);
      e.n(0, q) = 0.5 * t * (t - 1);
      e.n(1, q) = 0.5 * t * (t + 1);
      e.n(2, q) = 1 - t * t;
      e.dn(0, q) = t - 0.5;
      e.dn(1, q) = t + 0.5;
      e.dn(2, q) = -2 * t;
    }
    return e;
  }();
  return r;
}

std::vector<int> Mesh::nodes_with_tag(int tag) const {
  std::vector<int> out;
  for (const auto& [node, t] : boundary)
    if (t == tag) out.push_back(node);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::array<int, 3>> Mesh::boundary_edges(int tag) const {
  std::vector<char> tagged(n_nodes(), 0);
  for (int n : nodes_with_tag(tag)) tagged[n] = 1;

  static const int tri_edges[3][3] = {{0, 1, 3}, {1, 2, 4}, {2, 0, 5}};
  static const int quad_edges[4][3] = {{0, 1, 4}, {1, 2, 5}, {2, 3, 6}, {3, 0, 7}};
  const int n_edges = kind == ElemKind::Tri6 ? 3 : 4;

  std::vector<std::array<int, 3>> out;
  for (int e = 0; e < n_elems(); ++e) {
    for (int s = 0; s < n_edges; ++s) {
      const int* loc = kind == ElemKind::Tri6 ? tri_edges[s] : quad_edges[s];
      const int a = elements(e, loc[0]);
      const int b = elements(e, loc[1]);
      const int m = elements(e, loc[2]);
      if (tagged[a] && tagged[b] && tagged[m]) out.push_back({a, b, m});
    }
  }
  return out;
}

void Mesh::validate() const {
  const int npe = nodes_per_elem(kind);
  if (elements.cols() != npe)
    throw FormatError("element connectivity has " + std::to_string(elements.cols()) +
                      " columns, expected " + std::to_string(npe));
  if (regions.size() != n_elems())
    throw FormatError("regions count " + std::to_string(regions.size()) +
                      " does not match element count " + std::to_string(n_elems()));
  for (int e = 0; e < n_elems(); ++e)
    for (int a = 0; a < npe; ++a)
      if (elements(e, a) < 0 || elements(e, a) >= n_nodes())
        throw FormatError("element " + std::to_string(e) + " references node " +
                          std::to_string(elements(e, a)) + " out of range");
  for (const auto& [node, tag] : boundary)
    if (node < 0 || node >= n_nodes())
      throw FormatError("boundary entry references node " + std::to_string(node) +
                        " out of range");
}

std::uint64_t Mesh::fingerprint() const {
  std::uint64_t h = fnv1a64(nullptr, 0);
  const std::uint8_t k = kind == ElemKind::Tri6 ? 0 : 1;
  h = fnv1a64(&k, 1, h);
  const std::int64_t counts[3] = {n_nodes(), n_elems(),
                                  static_cast<std::int64_t>(boundary.size())};
  h = fnv1a64(counts, sizeof(counts), h);
  h = fnv1a64(nodes.data(), sizeof(double) * nodes.size(), h);
  for (int e = 0; e < n_elems(); ++e)
    for (int a = 0; a < elements.cols(); ++a) {
      const std::int64_t v = elements(e, a);
      h = fnv1a64(&v, sizeof(v), h);
    }
  for (int e = 0; e < regions.size(); ++e) {
    const std::int64_t v = regions(e);
    h = fnv1a64(&v, sizeof(v), h);
  }
  for (const auto& [node, tag] : boundary) {
    const std::int64_t v[2] = {node, tag};
    h = fnv1a64(v, sizeof(v), h);
  }
  return h;
}

namespace {

// Line-oriented reader that skips blanks/comments and tracks line numbers
// for error messages.
class LineReader {
 public:
  LineReader(std::istream& is, std::string path) : is_(is), path_(std::move(path)) {}

  bool next(std::istringstream& out) {
    std::string line;
    while (std::getline(is_, line)) {
      ++lineno_;
      const auto pos = line.find_first_not_of(" \t\r");
      if (pos == std::string::npos || line[pos] == '#') continue;
      out = std::istringstream(line);
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw FormatError(path_ + ":" + std::to_string(lineno_) + ": " + msg);
  }

 private:
  std::istream& is_;
  std::string path_;
  int lineno_ = 0;
};

}  // namespace

Mesh load_mesh(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open mesh file '" + path + "'");
  LineReader reader(is, path);
  std::istringstream line;

  if (!reader.next(line)) reader.fail("empty mesh file");
  std::string word, version, kind_name;
  line >> word >> version >> kind_name;
  if (word != "mesh2d" || version != "v1")
    reader.fail("expected header 'mesh2d v1 <kind>'");

  Mesh mesh;
  mesh.kind = elem_kind_from_name(kind_name);
  const int npe = nodes_per_elem(mesh.kind);

  auto expect_block = [&](const std::string& name) -> long {
    if (!reader.next(line)) reader.fail("missing '" + name + "' block");
    long count = -1;
    line >> word >> count;
    if (word != name || count < 0)
      reader.fail("expected '" + name + " <count>'");
    return count;
  };

  const long nn = expect_block("nodes");
  mesh.nodes.resize(nn, 2);
  for (long i = 0; i < nn; ++i) {
    if (!reader.next(line)) reader.fail("unexpected end of nodes block");
    double x, y;
    if (!(line >> x >> y)) reader.fail("malformed node line");
    mesh.nodes(i, 0) = x;
    mesh.nodes(i, 1) = y;
  }

  const long ne = expect_block("elements");
  mesh.elements.resize(ne, npe);
  for (long e = 0; e < ne; ++e) {
    if (!reader.next(line)) reader.fail("unexpected end of elements block");
    for (int a = 0; a < npe; ++a) {
      long v;
      if (!(line >> v)) reader.fail("malformed element line");
      mesh.elements(e, a) = static_cast<int>(v);
    }
  }

  const long nr = expect_block("regions");
  if (nr != ne) reader.fail("regions count must equal element count");
  mesh.regions.resize(nr);
  for (long e = 0; e < nr; ++e) {
    if (!reader.next(line)) reader.fail("unexpected end of regions block");
    long v;
    if (!(line >> v)) reader.fail("malformed region line");
    mesh.regions(e) = static_cast<int>(v);
  }

  const long nb = expect_block("boundary");
  for (long i = 0; i < nb; ++i) {
    if (!reader.next(line)) reader.fail("unexpected end of boundary block");
    long node, tag;
    if (!(line >> node >> tag)) reader.fail("malformed boundary line");
    mesh.boundary.emplace_back(static_cast<int>(node), static_cast<int>(tag));
  }

  if (reader.next(line)) reader.fail("trailing content after boundary block");
  mesh.validate();
  return mesh;
}

void save_mesh(const Mesh& mesh, const std::string& path) {
  std::ostringstream os;
  os.precision(17);
  os << "mesh2d v1 " << elem_kind_name(mesh.kind) << "\n";
  os << "nodes " << mesh.n_nodes() << "\n";
  for (int i = 0; i < mesh.n_nodes(); ++i)
    os << mesh.nodes(i, 0) << " " << mesh.nodes(i, 1) << "\n";
  os << "elements " << mesh.n_elems() << "\n";
  for (int e = 0; e < mesh.n_elems(); ++e) {
    for (int a = 0; a < mesh.elements.cols(); ++a)
      os << (a ? " " : "") << mesh.elements(e, a);
    os << "\n";
  }
  os << "regions " << mesh.n_elems() << "\n";
  for (int e = 0; e < mesh.n_elems(); ++e) os << mesh.regions(e) << "\n";
  os << "boundary " << mesh.boundary.size() << "\n";
  for (const auto& [node, tag] : mesh.boundary) os << node << " " << tag << "\n";

  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << os.str();
  if (!out) throw IoError("short write to '" + path + "'");
}

PeriodicPairing periodic_pairs(const Mesh& mesh, double tol) {
  const auto near = [tol](double a, double b) { return std::abs(a - b) <= tol; };

  int anchor = -1;
  std::vector<int> corners;  // (1,0), (0,1), (1,1)
  std::vector<int> left, right, bottom, top;
  for (int i = 0; i < mesh.n_nodes(); ++i) {
    const double x = mesh.nodes(i, 0), y = mesh.nodes(i, 1);
    const bool x0 = near(x, 0), x1 = near(x, 1), y0 = near(y, 0), y1 = near(y, 1);
    if (x0 && y0) {
      anchor = i;
    } else if ((x1 && y0) || (x0 && y1) || (x1 && y1)) {
      corners.push_back(i);
    } else if (x0) {
      left.push_back(i);
    } else if (x1) {
      right.push_back(i);
    } else if (y0) {
      bottom.push_back(i);
    } else if (y1) {
      top.push_back(i);
    }
  }
  if (anchor < 0 || corners.size() != 3)
    throw SolveError("periodic pairing requires a mesh of the unit square with "
                     "all four corner nodes present");

  PeriodicPairing pairing;
  pairing.anchor = anchor;
  for (int c : corners) pairing.slave_of[c] = anchor;

  auto pair_edges = [&](std::vector<int>& masters, std::vector<int>& slaves,
                        int coord, const char* what) {
    auto key = [&](int n) { return mesh.nodes(n, coord); };
    std::sort(masters.begin(), masters.end(),
              [&](int a, int b) { return key(a) < key(b); });
    std::sort(slaves.begin(), slaves.end(),
              [&](int a, int b) { return key(a) < key(b); });
    if (masters.size() != slaves.size())
      throw SolveError(std::string("periodic pairing: ") + what +
                       " faces have different node counts");
    for (std::size_t k = 0; k < masters.size(); ++k) {
      if (!near(key(masters[k]), key(slaves[k])))
        throw SolveError(std::string("periodic pairing: unmatched node on ") +
                         what + " faces");
      pairing.slave_of[slaves[k]] = masters[k];
    }
  };
  pair_edges(left, right, 1, "left/right");
  pair_edges(bottom, top, 0, "bottom/top");
  return pairing;
}

DofMap periodic_dof_map(const Mesh& mesh, const PeriodicPairing& pairing) {
  DofMap map;
  map.node_dof = VecXi::Constant(mesh.n_nodes(), -2);
  int next = 0;
  for (int i = 0; i < mesh.n_nodes(); ++i) {
    if (i == pairing.anchor || pairing.is_slave(i)) continue;
    map.node_dof(i) = next;
    next += 2;
  }
  map.node_dof(pairing.anchor) = -1;
  for (const auto& [slave, master] : pairing.slave_of)
    map.node_dof(slave) = map.node_dof(master);
  map.n_red = next;
  return map;
}

DofMap dirichlet_dof_map(const Mesh& mesh, const std::vector<int>& fixed_nodes) {
  DofMap map;
  map.node_dof = VecXi::Zero(mesh.n_nodes());
  for (int n : fixed_nodes) map.node_dof(n) = -1;
  int next = 0;
  for (int i = 0; i < mesh.n_nodes(); ++i) {
    if (map.node_dof(i) == -1) continue;
    map.node_dof(i) = next;
    next += 2;
  }
  map.n_red = next;
  return map;
}

VecX DofMap::expand(const VecX& reduced, int n_nodes) const {
  VecX full = VecX::Zero(2 * n_nodes);
  for (int i = 0; i < n_nodes; ++i) {
    const int d = node_dof(i);
    if (d < 0) continue;
    full(2 * i) = reduced(d);
    full(2 * i + 1) = reduced(d + 1);
  }
  return full;
}

VecX DofMap::reduce(const VecX& full) const {
  VecX out = VecX::Zero(n_red);
  for (int i = 0; i < node_dof.size(); ++i) {
    const int d = node_dof(i);
    if (d < 0) continue;
    out(d) = full(2 * i);
    out(d + 1) = full(2 * i + 1);
  }
  return out;
}

QuadCache build_quad_cache(const Mesh& mesh) {
  const QuadratureRule& rule = quadrature(mesh.kind);
  const int npe = nodes_per_elem(mesh.kind);
  const int nq = static_cast<int>(rule.weights.size());

  QuadCache cache;
  cache.n_per_elem = nq;
  cache.ref_n.resize(npe, nq);
  std::vector<MatX> ref_dn(nq);
  for (int q = 0; q < nq; ++q) {
    const ShapeEval s = shape_eval(mesh.kind, rule.points.row(q).transpose());
    cache.ref_n.col(q) = s.n;
    ref_dn[q] = s.dn;
  }

  const int total = mesh.n_elems() * nq;
  cache.grad.resize(total);
  cache.w.resize(total);
  cache.x.resize(total, 2);
  cache.elem_of.resize(total);

  MatX coords(npe, 2);
  for (int e = 0; e < mesh.n_elems(); ++e) {
    for (int a = 0; a < npe; ++a) coords.row(a) = mesh.nodes.row(mesh.elements(e, a));
    for (int q = 0; q < nq; ++q) {
      const Mat2 jac = (coords.transpose() * ref_dn[q]).eval();
      const double det = jac.determinant();
      if (det <= 0.0)
        throw SolveError("element " + std::to_string(e) +
                         " has non-positive Jacobian (det = " + std::to_string(det) +
                         ")");
      const int g = e * nq + q;
      cache.grad[g] = ref_dn[q] * jac.inverse();
      cache.w(g) = rule.weights(q) * det;
      cache.x.row(g) = (coords.transpose() * cache.ref_n.col(q)).transpose();
      cache.elem_of(g) = e;
    }
  }
  return cache;
}

}  // namespace podecm
