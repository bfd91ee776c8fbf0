#include "podecm/pipeline.hpp"

#include "podecm/ecm.hpp"
#include "podecm/meshgen.hpp"
#include "podecm/podkit.hpp"
#include "podecm/sampling.hpp"
#include "podecm/store.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <utility>

namespace podecm {
namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

// Offset separating the test-set stream from the training seed.
constexpr std::uint64_t kTestSeedOffset = 0x7e57;

std::string hex_tag(std::uint64_t tag) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(tag));
  return buf;
}

std::uint64_t file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open for hashing");
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  return fnv1a64(bytes.data(), bytes.size());
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path + ": cannot open for writing");
  return out;
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError(dir + ": cannot create output directory");
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::vector<std::string> param_names(const TrainConfig& cfg) {
  std::vector<std::string> names = {"u_xx", "u_yy", "u_xy"};
  for (const auto& g : geom_param_names(cfg.geometry.kind)) names.push_back(g);
  return names;
}

ordered_json campaign_json(const TrainConfig& cfg) {
  ordered_json mats = ordered_json::array();
  for (const auto& m : cfg.materials) {
    mats.push_back({{"E", m.E},
                    {"nu", m.nu},
                    {"sigma_y0", m.sigma_y0},
                    {"H", m.H}});
  }
  ordered_json bounds = ordered_json::array();
  const auto names = param_names(cfg);
  for (std::size_t k = 0; k < cfg.bounds.size(); ++k) {
    bounds.push_back(
        {{"name", names[k]}, {"lo", cfg.bounds[k].first},
         {"hi", cfg.bounds[k].second}});
  }
  return ordered_json{
      {"geometry", cfg.geometry_name},
      {"geometry_kind", geom_kind_name(cfg.geometry.kind)},
      {"mesh_n", cfg.mesh_n},
      {"materials", mats},
      {"bounds", bounds},
      {"sampling",
       {{"train_count", cfg.sampling.train_count},
        {"test_count", cfg.sampling.test_count},
        {"scheme", cfg.sampling.scheme},
        {"seed", cfg.sampling.seed}}},
      {"load", {{"steps", cfg.load.steps}, {"shape", cfg.load.shape}}},
      {"rom",
       {{"displacement_modes", cfg.rom.displacement_modes},
        {"stress_modes", cfg.rom.stress_modes},
        {"ecm_eps", cfg.rom.ecm_eps}}},
      {"newton",
       {{"eps_rel", cfg.newton.eps_rel},
        {"eps_abs", cfg.newton.eps_abs},
        {"max_iter", cfg.newton.max_iter}}}};
}

}  // namespace

std::string csv_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::unique_ptr<Workbench> Workbench::build(const TrainConfig& cfg) {
  std::unique_ptr<Workbench> wb(new Workbench());
  wb->mesh = fitted_cell_mesh(cfg.mesh_n, cfg.geometry);
  wb->cache = build_quad_cache(wb->mesh);
  wb->prob = RveProblem::build(wb->mesh, wb->cache, cfg.materials);
  wb->morph_op =
      std::make_unique<MorphOperator>(wb->mesh, wb->cache, cfg.geometry);
  return wb;
}

MorphField Workbench::morph_for(const TrainConfig& cfg, const VecX& mu) const {
  const GeomParams params = cfg.geom_params(mu);
  MorphField morph = morph_op->solve(params);
  if (morph.min_det <= 0.0) {
    std::string where;
    for (double p : params) {
      if (!where.empty()) where += ", ";
      where += std::to_string(p);
    }
    throw SolveError("morph map inverts (min det " +
                     std::to_string(morph.min_det) + ") at geometry (" + where +
                     ")");
  }
  return morph;
}

MatX training_samples(const TrainConfig& cfg) {
  const int dim = cfg.param_dim();
  MatX unit;
  if (cfg.sampling.scheme == "sobol") {
    SobolSampler sampler(dim, cfg.sampling.seed);
    unit = sampler.draw(cfg.sampling.train_count);
  } else {
    unit = uniform_samples(cfg.sampling.train_count, dim, cfg.sampling.seed);
  }
  return scale_to_bounds(unit, cfg.bounds);
}

MatX test_samples(const TrainConfig& cfg) {
  const MatX unit = uniform_samples(cfg.sampling.test_count, cfg.param_dim(),
                                    cfg.sampling.seed + kTestSeedOffset);
  return scale_to_bounds(unit, cfg.bounds);
}

SnapshotSet collect_snapshots(const Workbench& wb, const TrainConfig& cfg,
                              const MatX& samples) {
  const int n_nodes = wb.mesh.n_nodes();
  const int n_qp = wb.cache.n_qp();
  SnapshotSet set;
  set.samples = samples;
  const int total = static_cast<int>(samples.rows()) * cfg.load.steps;
  set.disp.resize(2 * n_nodes, total);
  set.stress.resize(4 * n_qp, total);
  int col = 0;
  for (int s = 0; s < samples.rows(); ++s) {
    const VecX mu = samples.row(s).transpose();
    try {
      const MorphField morph = wb.morph_for(cfg, mu);
      const RveSolution sol = solve_rve(wb.prob, morph, cfg.schedule_for(mu),
                                        cfg.newton, {true, false});
      for (const auto& step : sol.steps) {
        set.disp.col(col) = wb.prob.dofs.expand(step.w_red, n_nodes);
        const MatX ws = weighted_stress_field(morph, step.p_field);
        set.stress.col(col) =
            Eigen::Map<const VecX>(ws.data(), ws.size());
        set.newton_iters.push_back(step.iters);
        ++col;
      }
      set.steps_per_sample.push_back(static_cast<int>(sol.steps.size()));
    } catch (const SolveError& err) {
      throw SolveError("training sample " + std::to_string(s) + ": " +
                       err.what());
    }
  }
  return set;
}

void save_snapshots(const SnapshotSet& set, std::uint64_t mesh_tag,
                    const std::string& path) {
  ArrayStore store;
  store.content_tag = mesh_tag;
  store.put("samples", set.samples);
  store.put("disp", set.disp);
  store.put("stress", set.stress);
  MatI64 steps(set.steps_per_sample.size(), 1);
  for (std::size_t k = 0; k < set.steps_per_sample.size(); ++k)
    steps(k, 0) = set.steps_per_sample[k];
  store.put("steps_per_sample", steps);
  MatI64 iters(set.newton_iters.size(), 1);
  for (std::size_t k = 0; k < set.newton_iters.size(); ++k)
    iters(k, 0) = set.newton_iters[k];
  store.put("newton_iters", iters);
  store.save(path);
}

SnapshotSet load_snapshots(const std::string& path, std::uint64_t mesh_tag) {
  const ArrayStore store = ArrayStore::load(path);
  if (store.content_tag != mesh_tag) {
    throw FormatError(path + ": snapshot container does not match the parent "
                             "mesh (tag " +
                      hex_tag(store.content_tag) + " vs " + hex_tag(mesh_tag) +
                      ")");
  }
  SnapshotSet set;
  set.samples = store.get_f64("samples");
  set.disp = store.get_f64("disp");
  set.stress = store.get_f64("stress");
  const MatI64& steps = store.get_i64("steps_per_sample");
  for (Eigen::Index k = 0; k < steps.rows(); ++k)
    set.steps_per_sample.push_back(static_cast<int>(steps(k, 0)));
  const MatI64& iters = store.get_i64("newton_iters");
  for (Eigen::Index k = 0; k < iters.rows(); ++k)
    set.newton_iters.push_back(static_cast<int>(iters(k, 0)));
  return set;
}

ReductionReport reduce_snapshots(const Workbench& wb, const SnapshotSet& set,
                                 int n_disp_modes, int n_stress_modes,
                                 double ecm_eps) {
  ReductionReport report;
  const SpMat gram = h1_gram(wb.mesh, wb.cache);
  const PodResult disp = pod(set.disp, gram, n_disp_modes);
  report.disp_eigenvalues = disp.eigenvalues;
  const PodResult stress =
      pod_diag(set.stress, stress_gram_diag(wb.cache), n_stress_modes);
  report.stress_eigenvalues = stress.eigenvalues;

  EcmResult rule;
  if (ecm_eps > 0.0) {
    const MatX integrand =
        ecm_integrand(wb.mesh, wb.cache, disp.modes, stress.modes, true);
    EcmOpts opts;
    opts.eps = ecm_eps;
    rule = ecm_select(integrand, wb.cache.w, opts);
    report.ecm_residual = rule.residual_rel;
  } else {
    rule = full_quadrature_rule(wb.cache);
  }
  report.model = build_rom(wb.mesh, wb.cache, disp.modes, rule,
                           wb.morph_op->spec().kind,
                           static_cast<int>(stress.modes.cols()), ecm_eps);
  return report;
}

OfflineReport run_offline(const TrainConfig& cfg, const std::string& out_dir) {
  ensure_dir(out_dir);
  std::vector<std::pair<std::string, double>> timings;
  auto t0 = std::chrono::steady_clock::now();

  auto wb = Workbench::build(cfg);
  const std::string mesh_path = join_path(out_dir, "mesh.txt");
  save_mesh(wb->mesh, mesh_path);
  timings.emplace_back("mesh", seconds_since(t0));

  t0 = std::chrono::steady_clock::now();
  const MatX samples = training_samples(cfg);
  const SnapshotSet set = collect_snapshots(*wb, cfg, samples);
  timings.emplace_back("training_solves", seconds_since(t0));

  t0 = std::chrono::steady_clock::now();
  const std::string snap_path = join_path(out_dir, "snapshots.bin");
  save_snapshots(set, wb->mesh.fingerprint(), snap_path);
  const ReductionReport red =
      reduce_snapshots(*wb, set, cfg.rom.displacement_modes,
                       cfg.rom.stress_modes, cfg.rom.ecm_eps);
  timings.emplace_back("reduction", seconds_since(t0));

  t0 = std::chrono::steady_clock::now();
  const std::string model_path = join_path(out_dir, "rom.bin");
  red.model.save(model_path);

  OfflineReport report;
  report.model_path = model_path;
  report.snapshot_path = snap_path;
  report.manifest_path = join_path(out_dir, "manifest.json");
  report.n_train = static_cast<int>(samples.rows());
  report.total_steps = static_cast<int>(set.disp.cols());
  report.n_modes = red.model.n_modes();
  report.n_stress_modes = red.model.n_stress_modes;
  report.n_points = red.model.n_points();
  report.ecm_residual = red.ecm_residual;

  int iters_total = 0;
  for (int it : set.newton_iters) iters_total += it;

  ordered_json manifest{
      {"format", 1},
      {"command", "offline"},
      {"campaign", campaign_json(cfg)},
      {"mesh",
       {{"fingerprint", hex_tag(wb->mesh.fingerprint())},
        {"nodes", wb->mesh.n_nodes()},
        {"elements", wb->mesh.n_elems()},
        {"quadrature_points", wb->cache.n_qp()}}},
      {"training",
       {{"samples", report.n_train},
        {"snapshot_columns", report.total_steps},
        {"newton_iterations", iters_total}}},
      {"reduction",
       {{"displacement_modes", report.n_modes},
        {"stress_modes", report.n_stress_modes},
        {"cubature_points", report.n_points},
        {"ecm_residual", report.ecm_residual}}},
      {"artifacts",
       {{"mesh.txt", hex_tag(file_hash(mesh_path))},
        {"snapshots.bin", hex_tag(file_hash(snap_path))},
        {"rom.bin", hex_tag(file_hash(model_path))}}}};
  {
    auto out = open_out(report.manifest_path);
    out << manifest.dump(2) << "\n";
  }
  timings.emplace_back("persist", seconds_since(t0));

  auto timing_csv = open_out(join_path(out_dir, "timings.csv"));
  timing_csv << "stage,seconds\n";
  for (const auto& [stage, secs] : timings)
    timing_csv << stage << "," << csv_num(secs) << "\n";
  return report;
}

std::vector<FullRecord> solve_reference_set(const Workbench& wb,
                                            const TrainConfig& cfg,
                                            const MatX& samples) {
  std::vector<FullRecord> records;
  records.reserve(samples.rows());
  const int n_nodes = wb.mesh.n_nodes();
  for (int s = 0; s < samples.rows(); ++s) {
    const VecX mu = samples.row(s).transpose();
    try {
      const MorphField morph = wb.morph_for(cfg, mu);
      const RveSolution sol = solve_rve(wb.prob, morph, cfg.schedule_for(mu),
                                        cfg.newton, {false, false});
      FullRecord rec;
      rec.mu = mu;
      rec.gram = h1_gram_morphed(wb.mesh, wb.cache, morph);
      rec.w.resize(2 * n_nodes, sol.steps.size());
      for (std::size_t k = 0; k < sol.steps.size(); ++k) {
        rec.pbar.push_back(sol.steps[k].pbar);
        rec.w.col(k) = wb.prob.dofs.expand(sol.steps[k].w_red, n_nodes);
        rec.newton_iters += sol.steps[k].iters;
      }
      records.push_back(std::move(rec));
    } catch (const SolveError& err) {
      throw SolveError("test sample " + std::to_string(s) + ": " + err.what());
    }
  }
  return records;
}

ValidationReport validate_model(const Workbench& wb, const TrainConfig& cfg,
                                const RomModel& model,
                                const std::vector<FullRecord>& refs) {
  ValidationReport report;
  for (std::size_t s = 0; s < refs.size(); ++s) {
    const FullRecord& ref = refs[s];
    ValidationCase vc;
    vc.mu = ref.mu;
    try {
      const MorphField morph = wb.morph_for(cfg, ref.mu);
      const RomSolution sol = rom_solve(wb.prob, model, morph,
                                        cfg.schedule_for(ref.mu), cfg.newton);
      if (sol.steps.size() != ref.pbar.size())
        throw SolveError("step count mismatch against the reference");
      double num_p = 0.0, den_p = 0.0, num_w = 0.0, den_w = 0.0;
      for (std::size_t k = 0; k < sol.steps.size(); ++k) {
        num_p += (sol.steps[k].pbar - ref.pbar[k]).norm();
        den_p += ref.pbar[k].norm();
        const VecX w_rom = model.modes * sol.steps[k].a;
        const VecX diff = w_rom - ref.w.col(k);
        num_w += std::sqrt(diff.dot(ref.gram * diff));
        den_w += std::sqrt(ref.w.col(k).dot(ref.gram * ref.w.col(k)));
        vc.rom_iters += sol.steps[k].iters;
      }
      vc.e_pbar = num_p / den_p;
      vc.e_w = num_w / den_w;
    } catch (const SolveError& err) {
      throw SolveError("test sample " + std::to_string(s) + ": " + err.what());
    }
    report.cases.push_back(std::move(vc));
  }
  for (const auto& vc : report.cases) {
    report.mean_e_pbar += vc.e_pbar;
    report.mean_e_w += vc.e_w;
  }
  if (!report.cases.empty()) {
    report.mean_e_pbar /= static_cast<double>(report.cases.size());
    report.mean_e_w /= static_cast<double>(report.cases.size());
  }
  return report;
}

ValidationReport run_validate(const TrainConfig& cfg,
                              const std::string& model_path,
                              const std::string& out_dir) {
  ensure_dir(out_dir);
  auto wb = Workbench::build(cfg);
  const RomModel model = RomModel::load(model_path);
  if (model.mesh_tag != wb->mesh.fingerprint()) {
    throw FormatError(model_path +
                      ": reduced model was built for a different parent mesh");
  }
  if (cfg.sampling.test_count < 1)
    throw ConfigError("validation requires sampling.test_count >= 1");
  const MatX samples = test_samples(cfg);
  const std::vector<FullRecord> refs = solve_reference_set(*wb, cfg, samples);
  const ValidationReport report = validate_model(*wb, cfg, model, refs);

  auto csv = open_out(join_path(out_dir, "validation.csv"));
  csv << "sample";
  for (const auto& name : param_names(cfg)) csv << "," << name;
  csv << ",e_pbar,e_w,rom_iters\n";
  for (std::size_t s = 0; s < report.cases.size(); ++s) {
    const auto& vc = report.cases[s];
    csv << s;
    for (int k = 0; k < vc.mu.size(); ++k) csv << "," << csv_num(vc.mu(k));
    csv << "," << csv_num(vc.e_pbar) << "," << csv_num(vc.e_w) << ","
        << vc.rom_iters << "\n";
  }

  ordered_json summary{{"format", 1},
                       {"command", "validate"},
                       {"model", hex_tag(file_hash(model_path))},
                       {"samples", report.cases.size()},
                       {"mean_e_pbar", report.mean_e_pbar},
                       {"mean_e_w", report.mean_e_w}};
  auto out = open_out(join_path(out_dir, "validation.json"));
  out << summary.dump(2) << "\n";
  return report;
}

OnlineReport run_online(const Workbench& wb, const TrainConfig& cfg,
                        const RomModel& model, const OnlineRequest& req,
                        const std::string& out_dir) {
  ensure_dir(out_dir);
  if (req.mu.size() != cfg.param_dim())
    throw ConfigError("parameter point has " + std::to_string(req.mu.size()) +
                      " entries, campaign expects " +
                      std::to_string(cfg.param_dim()));
  const MorphField morph = wb.morph_for(cfg, req.mu);
  const MorphSlice slice = slice_morph(morph, model.ecm_ids);
  const LoadSchedule schedule = cfg.schedule_for(req.mu);

  OnlineReport report;
  std::vector<PlasticState> states(model.n_points());
  std::vector<PlasticState> prev_states = states;
  VecX a = VecX::Zero(model.n_modes());
  Mat2 fbar_prev = Mat2::Identity();
  for (const Mat2& fbar : schedule.fbar) {
    prev_states = states;
    RomStepResult res = rom_solve_step_adaptive(wb.prob, model, slice, states,
                                                fbar_prev, fbar, a, cfg.newton);
    fbar_prev = fbar;
    report.pbar.push_back(res.pbar);
    report.iters.push_back(res.iters);
    states = std::move(res.states);
    a = res.a;
  }
  auto csv = open_out(join_path(out_dir, "response.csv"));
  csv << "step,f_xx,f_yx,f_xy,f_yy,p_xx,p_yx,p_xy,p_yy,iters\n";
  for (std::size_t k = 0; k < schedule.fbar.size(); ++k) {
    csv << (k + 1);
    const Eigen::Vector4d f = flatten(schedule.fbar[k]);
    const Eigen::Vector4d p = flatten(report.pbar[k]);
    for (int c = 0; c < 4; ++c) csv << "," << csv_num(f(c));
    for (int c = 0; c < 4; ++c) csv << "," << csv_num(p(c));
    csv << "," << report.iters[k] << "\n";
  }

  if (req.effective_stiffness) {
    report.abar = rom_effective_stiffness(wb.prob, model, slice, prev_states,
                                          schedule.fbar.back(), a);
    auto stiff = open_out(join_path(out_dir, "stiffness.csv"));
    stiff << "component,f_xx,f_yx,f_xy,f_yy\n";
    const char* rows[] = {"p_xx", "p_yx", "p_xy", "p_yy"};
    for (int r = 0; r < 4; ++r) {
      stiff << rows[r];
      for (int c = 0; c < 4; ++c) stiff << "," << csv_num(report.abar.m(r, c));
      stiff << "\n";
    }
  }

  if (req.sensitivity_h > 0.0) {
    report.sensitivities =
        rom_sensitivity(wb.prob, model, *wb.morph_op, cfg.geom_params(req.mu),
                        schedule, cfg.newton, req.sensitivity_h);
    auto sens = open_out(join_path(out_dir, "sensitivity.csv"));
    sens << "parameter,dp_xx,dp_yx,dp_xy,dp_yy\n";
    const auto names = geom_param_names(cfg.geometry.kind);
    for (std::size_t g = 0; g < report.sensitivities.size(); ++g) {
      sens << names[g];
      const Eigen::Vector4d d = flatten(report.sensitivities[g]);
      for (int c = 0; c < 4; ++c) sens << "," << csv_num(d(c));
      sens << "\n";
    }
  }
  return report;
}

TwoscaleResult run_twoscale_cmd(const Workbench& wb, const TrainConfig& cfg,
                                const MacroConfig& macro,
                                const RomModel* model,
                                const std::string& out_dir) {
  ensure_dir(out_dir);
  if (cfg.geometry.kind != GeomKind::Pore)
    throw ConfigError(
        "the graded two-scale problem needs a pore-geometry campaign");
  std::vector<std::pair<double, double>> stretch_bounds(cfg.bounds.begin(),
                                                        cfg.bounds.begin() + 3);
  EngineFactory factory = [&](const Vec2& x) -> std::unique_ptr<MicroEngine> {
    const GeomParams params = graded_pore_params(x);
    MorphField morph = wb.morph_op->solve(params);
    if (morph.min_det <= 0.0)
      throw SolveError("morph map inverts at macro point (" +
                       std::to_string(x(0)) + ", " + std::to_string(x(1)) +
                       ")");
    if (model != nullptr) {
      return std::make_unique<RomMicroEngine>(wb.prob, *model, morph,
                                              cfg.newton, stretch_bounds);
    }
    return std::make_unique<FullMicroEngine>(wb.prob, std::move(morph),
                                             cfg.newton);
  };
  const TwoscaleResult result = run_twoscale(macro, factory);

  const std::string name =
      model != nullptr ? "twoscale_rom.csv" : "twoscale_full.csv";
  auto csv = open_out(join_path(out_dir, name));
  csv << "step,load_factor,compliance,iters\n";
  for (std::size_t k = 0; k < result.compliance.size(); ++k) {
    csv << (k + 1) << "," << csv_num(result.load_factor[k]) << ","
        << csv_num(result.compliance[k]) << "," << result.iters[k] << "\n";
  }
  return result;
}

std::vector<PropertyPoint> run_propmap(const Workbench& wb,
                                       const std::vector<double>& v_values,
                                       const std::vector<double>& kappa_values,
                                       const std::string& out_dir) {
  ensure_dir(out_dir);
  if (wb.morph_op->spec().kind != GeomKind::Pore)
    throw ConfigError("the property map needs a pore-geometry campaign");
  std::vector<PropertyPoint> points;
  for (double kappa : kappa_values) {
    for (double v : v_values) {
      points.push_back(effective_properties(wb.prob, *wb.morph_op, v, kappa));
    }
  }
  auto csv = open_out(join_path(out_dir, "propmap.csv"));
  csv << "v_void,kappa,e_eff,nu_eff,residual_p_xx\n";
  for (const auto& p : points) {
    csv << csv_num(p.v) << "," << csv_num(p.kappa) << "," << csv_num(p.e_eff)
        << "," << csv_num(p.nu_eff) << "," << csv_num(p.pbar_xx) << "\n";
  }
  return points;
}

}  // namespace podecm
