#include "podecm/geometry.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

namespace podecm {

using nlohmann::json;

Vec2 Ellipse::to_local(const Vec2& x) const {
  const double c = std::cos(angle), s = std::sin(angle);
  const double dx = x(0) - cx, dy = x(1) - cy;
  return Vec2(c * dx + s * dy, -s * dx + c * dy);
}

Vec2 Ellipse::to_world(const Vec2& local) const {
  const double c = std::cos(angle), s = std::sin(angle);
  return Vec2(cx + c * local(0) - s * local(1), cy + s * local(0) + c * local(1));
}

double Ellipse::level(const Vec2& x) const {
  const Vec2 l = to_local(x);
  return (l(0) / a) * (l(0) / a) + (l(1) / b) * (l(1) / b) - 1.0;
}

std::string geom_kind_name(GeomKind kind) {
  return kind == GeomKind::Scale ? "scale" : "pore";
}

GeomKind geom_kind_from_name(const std::string& name) {
  if (name == "scale") return GeomKind::Scale;
  if (name == "pore") return GeomKind::Pore;
  throw ConfigError("unknown geometry kind '" + name + "'");
}

std::vector<std::string> geom_param_names(GeomKind kind) {
  if (kind == GeomKind::Scale) return {"zeta"};
  return {"v_void", "kappa"};
}

GeomParams GeomSpec::parent_params() const {
  if (kind == GeomKind::Scale) return {1.0};
  double v = 0.0;
  for (const Ellipse& e : ellipses) v += M_PI * e.a * e.b;
  const Ellipse& e0 = ellipses.at(0);
  return {v, e0.b / e0.a};
}

std::vector<Ellipse> GeomSpec::target_ellipses(const GeomParams& params) const {
  std::vector<Ellipse> out = ellipses;
  if (kind == GeomKind::Scale) {
    if (params.size() != 1)
      throw ConfigError("scale geometry expects one parameter (zeta)");
    for (Ellipse& e : out) {
      e.a *= params[0];
      e.b *= params[0];
    }
  } else {
    if (params.size() != 2)
      throw ConfigError("pore geometry expects two parameters (v_void, kappa)");
    const double v = params[0], kappa = params[1];
    if (v <= 0 || kappa <= 0)
      throw ConfigError("pore parameters must be positive");
    // All holes are congruent: v_void is the total void fraction, split
    // evenly, and kappa = b/a is shared.
    const double n_holes = static_cast<double>(out.size());
    const double a = std::sqrt(v / (n_holes * M_PI * kappa));
    for (Ellipse& e : out) {
      e.a = a;
      e.b = kappa * a;
    }
  }
  return out;
}

double GeomSpec::material_area(const GeomParams& params) const {
  if (kind == GeomKind::Scale) return 1.0;
  return 1.0 - params.at(0);
}

Vec2 interface_displacement(const Ellipse& parent, const Ellipse& target,
                            const Vec2& x) {
  const Vec2 l = parent.to_local(x);
  const double theta = std::atan2(l(1) / parent.b, l(0) / parent.a);
  const Vec2 tl(target.a * std::cos(theta), target.b * std::sin(theta));
  return target.to_world(tl) - x;
}

GeomSpec load_geometry(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open geometry file '" + path + "'");
  json j;
  try {
    is >> j;
  } catch (const json::parse_error& e) {
    throw FormatError(path + ": " + e.what());
  }
  GeomSpec spec;
  try {
    spec.kind = geom_kind_from_name(j.at("kind").get<std::string>());
    for (const json& je : j.at("ellipses")) {
      Ellipse e;
      e.cx = je.at("cx").get<double>();
      e.cy = je.at("cy").get<double>();
      e.a = je.at("a").get<double>();
      e.b = je.at("b").get<double>();
      e.angle = je.at("angle_deg").get<double>() * M_PI / 180.0;
      e.tag = je.at("tag").get<int>();
      spec.ellipses.push_back(e);
    }
  } catch (const json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
  if (spec.ellipses.empty())
    throw FormatError(path + ": geometry must contain at least one ellipse");
  if (spec.kind == GeomKind::Pore) {
    const Ellipse& e0 = spec.ellipses.front();
    for (const Ellipse& e : spec.ellipses)
      if (std::abs(e.a - e0.a) > 1e-12 || std::abs(e.b - e0.b) > 1e-12)
        throw FormatError(path +
                          ": pore holes must be congruent (the v_void/kappa "
                          "family scales all holes together)");
  }
  return spec;
}

void save_geometry(const GeomSpec& spec, const std::string& path) {
  json j;
  j["kind"] = geom_kind_name(spec.kind);
  j["ellipses"] = json::array();
  for (const Ellipse& e : spec.ellipses) {
    j["ellipses"].push_back({{"cx", e.cx},
                             {"cy", e.cy},
                             {"a", e.a},
                             {"b", e.b},
                             {"angle_deg", e.angle * 180.0 / M_PI},
                             {"tag", e.tag}});
  }
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  os << j.dump(2) << "\n";
}

GeomSpec composite_geometry() {
  GeomSpec spec;
  spec.kind = GeomKind::Scale;
  const double deg = M_PI / 180.0;
  spec.ellipses = {
      {0.27, 0.30, 0.155, 0.118, 20 * deg, 11},
      {0.74, 0.24, 0.150, 0.120, -35 * deg, 12},
      {0.32, 0.74, 0.160, 0.113, 70 * deg, 13},
      {0.73, 0.72, 0.148, 0.122, 110 * deg, 14},
  };
  return spec;
}

GeomSpec pore_geometry() {
  GeomSpec spec;
  spec.kind = GeomKind::Pore;
  const double v = 0.45, kappa = 1.25;
  const double a = std::sqrt(v / (4.0 * M_PI * kappa));
  const double b = kappa * a;
  // 2x2 hole pattern with alternating major-axis orientation (the classic
  // rotation-mechanism cell): under compression the ligament lattice between
  // the holes rotates, which is what drives the Poisson's ratio down -- and
  // eventually negative -- as kappa grows.  Holes are congruent; angle 0 puts
  // the semi-major axis b along y, pi/2 along x.
  spec.ellipses = {
      {0.25, 0.25, a, b, 0.0, 11},
      {0.75, 0.25, a, b, M_PI / 2, 12},
      {0.25, 0.75, a, b, M_PI / 2, 13},
      {0.75, 0.75, a, b, 0.0, 14},
  };
  return spec;
}

}  // namespace podecm
