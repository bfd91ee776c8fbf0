#include "podecm/config.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <set>

namespace podecm {

namespace {

using nlohmann::json;

// Strict access into one JSON object: every key must be consumed exactly
// once and leftovers are an error, so typos never pass silently.
class StrictObject {
 public:
  StrictObject(const json& j, std::string ctx) : j_(j), ctx_(std::move(ctx)) {
    if (!j_.is_object()) {
      throw ConfigError(ctx_ + ": expected an object");
    }
  }

  const json& child(const std::string& key) {
    auto it = j_.find(key);
    if (it == j_.end()) {
      throw ConfigError(ctx_ + ": missing key '" + key + "'");
    }
    used_.insert(key);
    return *it;
  }

  const json* optional(const std::string& key) {
    auto it = j_.find(key);
    if (it == j_.end()) return nullptr;
    used_.insert(key);
    return &*it;
  }

  double number(const std::string& key) {
    const json& v = child(key);
    if (!v.is_number()) {
      throw ConfigError(ctx_ + "." + key + ": expected a number");
    }
    return v.get<double>();
  }

  int integer(const std::string& key) {
    const json& v = child(key);
    if (!v.is_number_integer()) {
      throw ConfigError(ctx_ + "." + key + ": expected an integer");
    }
    return v.get<int>();
  }

  std::string str(const std::string& key) {
    const json& v = child(key);
    if (!v.is_string()) {
      throw ConfigError(ctx_ + "." + key + ": expected a string");
    }
    return v.get<std::string>();
  }

  void finish() {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (used_.count(it.key()) == 0) {
        throw ConfigError(ctx_ + ": unknown key '" + it.key() + "'");
      }
    }
  }

  const std::string& ctx() const { return ctx_; }

 private:
  const json& j_;
  std::string ctx_;
  std::set<std::string> used_;
};

std::pair<double, double> interval(const json& v, const std::string& ctx) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() ||
      !v[1].is_number()) {
    throw ConfigError(ctx + ": expected [lower, upper]");
  }
  const double lo = v[0].get<double>();
  const double hi = v[1].get<double>();
  if (!(lo < hi)) {
    throw ConfigError(ctx + ": lower bound must be below upper bound");
  }
  return {lo, hi};
}

PlasticityParams material(const json& v, const std::string& ctx) {
  StrictObject obj(v, ctx);
  PlasticityParams p;
  p.E = obj.number("E");
  p.nu = obj.number("nu");
  p.sigma_y0 = obj.number("sigma_y0");
  p.H = obj.number("H");
  obj.finish();
  if (p.E <= 0.0) throw ConfigError(ctx + ".E: must be positive");
  if (p.nu <= -1.0 || p.nu >= 0.5) {
    throw ConfigError(ctx + ".nu: must lie in (-1, 0.5)");
  }
  if (p.sigma_y0 <= 0.0) {
    throw ConfigError(ctx + ".sigma_y0: must be positive");
  }
  if (p.H < 0.0) throw ConfigError(ctx + ".H: must be nonnegative");
  return p;
}

}  // namespace

Mat2 TrainConfig::stretch(const VecX& mu) const {
  Mat2 u;
  u << mu(0), mu(2), mu(2), mu(1);
  return u;
}

GeomParams TrainConfig::geom_params(const VecX& mu) const {
  GeomParams params(mu.size() - 3);
  for (int k = 3; k < mu.size(); ++k) params[k - 3] = mu(k);
  return params;
}

LoadSchedule TrainConfig::schedule_for(const VecX& mu) const {
  const Mat2 u = stretch(mu);
  return load.shape == "cyclic" ? cyclic_schedule(u, load.steps)
                                : ramp_schedule(u, load.steps);
}

TrainConfig load_train_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path + ": cannot open config");
  json root_json;
  try {
    in >> root_json;
  } catch (const json::parse_error& err) {
    throw ConfigError(path + ": " + err.what());
  }

  TrainConfig cfg;
  StrictObject root(root_json, path);

  const json& geom = root.child("geometry");
  if (geom.is_string()) {
    const std::string name = geom.get<std::string>();
    if (name == "composite") {
      cfg.geometry = composite_geometry();
    } else if (name == "pore") {
      cfg.geometry = pore_geometry();
    } else {
      throw ConfigError(path + ".geometry: unknown builtin '" + name +
                        "' (use \"composite\", \"pore\" or {\"file\": ...})");
    }
    cfg.geometry_name = name;
  } else {
    StrictObject obj(geom, path + ".geometry");
    const std::string file = obj.str("file");
    obj.finish();
    const auto resolved =
        std::filesystem::path(path).parent_path() / file;
    cfg.geometry = load_geometry(resolved.string());
    cfg.geometry_name = resolved.string();
  }

  {
    StrictObject mesh(root.child("mesh"), path + ".mesh");
    cfg.mesh_n = mesh.integer("n");
    mesh.finish();
    if (cfg.mesh_n < 2 || cfg.mesh_n > 64) {
      throw ConfigError(path + ".mesh.n: must lie in [2, 64]");
    }
  }

  {
    StrictObject mats(root.child("materials"), path + ".materials");
    cfg.materials.push_back(material(mats.child("matrix"),
                                     path + ".materials.matrix"));
    const json* inclusion = mats.optional("inclusion");
    if (cfg.geometry.kind == GeomKind::Scale) {
      if (inclusion == nullptr) {
        throw ConfigError(path +
                          ".materials: inclusion material required for "
                          "inclusion-type geometries");
      }
      cfg.materials.push_back(material(*inclusion,
                                       path + ".materials.inclusion"));
    } else if (inclusion != nullptr) {
      throw ConfigError(path +
                        ".materials: pore cells take no inclusion material");
    }
    mats.finish();
  }

  {
    StrictObject bounds(root.child("bounds"), path + ".bounds");
    cfg.bounds.push_back(interval(bounds.child("u_xx"), path + ".bounds.u_xx"));
    cfg.bounds.push_back(interval(bounds.child("u_yy"), path + ".bounds.u_yy"));
    cfg.bounds.push_back(interval(bounds.child("u_xy"), path + ".bounds.u_xy"));
    const json& gb = bounds.child("geometry");
    const auto names = geom_param_names(cfg.geometry.kind);
    if (!gb.is_array() || gb.size() != names.size()) {
      throw ConfigError(path + ".bounds.geometry: expected " +
                        std::to_string(names.size()) +
                        " interval(s) for this geometry family");
    }
    for (size_t k = 0; k < gb.size(); ++k) {
      cfg.bounds.push_back(interval(gb[k], path + ".bounds.geometry[" +
                                               std::to_string(k) + "]"));
    }
    bounds.finish();
    if (cfg.geometry.kind == GeomKind::Scale && cfg.bounds[3].first <= 0.0) {
      throw ConfigError(path + ".bounds.geometry[0]: scale must stay positive");
    }
    if (cfg.geometry.kind == GeomKind::Pore) {
      if (cfg.bounds[3].first <= 0.0 || cfg.bounds[3].second >= 1.0) {
        throw ConfigError(path +
                          ".bounds.geometry[0]: void fraction must lie in "
                          "(0, 1)");
      }
      if (cfg.bounds[4].first < 1.0) {
        throw ConfigError(path +
                          ".bounds.geometry[1]: aspect ratio is b/a >= 1");
      }
    }
  }

  {
    StrictObject sampling(root.child("sampling"), path + ".sampling");
    cfg.sampling.train_count = sampling.integer("train_count");
    cfg.sampling.test_count = sampling.integer("test_count");
    cfg.sampling.scheme = sampling.str("scheme");
    const int seed = sampling.integer("seed");
    sampling.finish();
    if (cfg.sampling.train_count < 1) {
      throw ConfigError(path + ".sampling.train_count: must be at least 1");
    }
    if (cfg.sampling.test_count < 0) {
      throw ConfigError(path + ".sampling.test_count: must be nonnegative");
    }
    if (cfg.sampling.scheme != "sobol" && cfg.sampling.scheme != "uniform") {
      throw ConfigError(path +
                        ".sampling.scheme: expected \"sobol\" or \"uniform\"");
    }
    if (seed < 0) {
      throw ConfigError(path + ".sampling.seed: must be nonnegative");
    }
    cfg.sampling.seed = static_cast<std::uint64_t>(seed);
  }

  {
    StrictObject load(root.child("load"), path + ".load");
    cfg.load.steps = load.integer("steps");
    cfg.load.shape = load.str("shape");
    load.finish();
    if (cfg.load.shape == "cyclic") {
      if (cfg.load.steps < 4 || cfg.load.steps % 4 != 0) {
        throw ConfigError(path +
                          ".load.steps: cyclic schedules need a positive "
                          "multiple of 4");
      }
    } else if (cfg.load.shape == "ramp") {
      if (cfg.load.steps < 2 || cfg.load.steps % 2 != 0) {
        throw ConfigError(path +
                          ".load.steps: ramp schedules need a positive "
                          "multiple of 2");
      }
    } else {
      throw ConfigError(path + ".load.shape: expected \"cyclic\" or \"ramp\"");
    }
  }

  {
    StrictObject rom(root.child("rom"), path + ".rom");
    cfg.rom.displacement_modes = rom.integer("displacement_modes");
    cfg.rom.stress_modes = rom.integer("stress_modes");
    cfg.rom.ecm_eps = rom.number("ecm_eps");
    rom.finish();
    if (cfg.rom.displacement_modes < 1 || cfg.rom.stress_modes < 1) {
      throw ConfigError(path + ".rom: mode counts must be at least 1");
    }
    if (cfg.rom.ecm_eps <= 0.0 || cfg.rom.ecm_eps >= 1.0) {
      throw ConfigError(path + ".rom.ecm_eps: must lie in (0, 1)");
    }
  }

  if (const json* newton = root.optional("newton")) {
    StrictObject obj(*newton, path + ".newton");
    if (const json* v = obj.optional("eps_rel")) {
      cfg.newton.eps_rel = v->get<double>();
    }
    if (const json* v = obj.optional("eps_abs")) {
      cfg.newton.eps_abs = v->get<double>();
    }
    if (const json* v = obj.optional("max_iter")) {
      cfg.newton.max_iter = v->get<int>();
    }
    obj.finish();
    if (cfg.newton.eps_rel <= 0.0 || cfg.newton.eps_abs <= 0.0 ||
        cfg.newton.max_iter < 1) {
      throw ConfigError(path + ".newton: tolerances must be positive");
    }
  }

  root.finish();
  return cfg;
}

}  // namespace podecm
