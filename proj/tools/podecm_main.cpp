// Command-line front end: offline training, reduced online solves, model
// validation, two-scale runs and property maps.  Exit codes: 0 success,
// 2 configuration/usage error, 3 solver failure.

#include "podecm/mesh.hpp"
#include "podecm/pipeline.hpp"
#include "podecm/store.hpp"

#include <CLI11.hpp>
#include <Eigen/Core>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace podecm;

// Loads a reduced model and refuses one trained on a different parent mesh.
RomModel load_model_for(const Workbench& wb, const std::string& path) {
  RomModel model = RomModel::load(path);
  if (model.mesh_tag != wb.mesh.fingerprint()) {
    throw FormatError("model " + path +
                      " was trained on a different parent mesh");
  }
  return model;
}

std::string engine_model_path(const std::string& engine) {
  if (engine == "full") return {};
  const std::string prefix = "rom:";
  if (engine.rfind(prefix, 0) == 0 && engine.size() > prefix.size()) {
    return engine.substr(prefix.size());
  }
  throw ConfigError("--engine must be 'full' or 'rom:<model path>', got '" +
                    engine + "'");
}

void print_pbar(const Mat2& p) {
  std::printf("p_bar = [%s %s; %s %s]\n", csv_num(p(0, 0)).c_str(),
              csv_num(p(0, 1)).c_str(), csv_num(p(1, 0)).c_str(),
              csv_num(p(1, 1)).c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Parameterized cell homogenization: full-order training, POD + "
      "empirical-cubature reduction, validation and two-scale runs"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::string model_path;
  std::string engine = "full";
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::vector<double> mu_values;
  bool want_stiffness = false;
  double sensitivity_h = 0.0;
  std::vector<double> v_values = {0.40, 0.425, 0.45, 0.475, 0.50};
  std::vector<double> kappa_values = {1.01, 1.1325, 1.255, 1.3775, 1.5};
  MacroConfig macro;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "campaign configuration file")
        ->required();
    sub->add_option("--out", out_dir, "output directory")->capture_default_str();
    sub->add_option("--threads", threads, "linear-algebra thread count");
  };

  CLI::App* offline =
      app.add_subcommand("offline", "sample, solve, reduce and persist");
  add_common(offline);
  offline->add_option("--seed", seed, "override the campaign sampling seed");

  CLI::App* validate = app.add_subcommand(
      "validate", "trajectory errors of a trained model on fresh test draws");
  add_common(validate);
  validate->add_option("--model", model_path, "reduced model file")->required();
  validate->add_option("--seed", seed, "override the campaign sampling seed");

  CLI::App* online = app.add_subcommand(
      "online", "reduced solve of one parameter point over the load schedule");
  add_common(online);
  online->add_option("--model", model_path, "reduced model file")->required();
  online
      ->add_option("--mu", mu_values,
                   "parameter point: stretch components, then geometry")
      ->delimiter(',')
      ->required();
  online->add_flag("--effective-stiffness", want_stiffness,
                   "also write the effective stiffness");
  online->add_option("--sensitivity", sensitivity_h,
                     "central-difference half-width for geometry "
                     "sensitivities (0 disables)");

  CLI::App* twoscale = app.add_subcommand(
      "twoscale", "plate bending with a cell problem at every gauss point");
  add_common(twoscale);
  twoscale->add_option("--engine", engine, "cell engine: full | rom:<path>")->capture_default_str();
  twoscale->add_option("--macro-nx", macro.nx, "macro elements across")->capture_default_str();
  twoscale->add_option("--macro-ny", macro.ny, "macro elements up")->capture_default_str();
  twoscale->add_option("--macro-steps", macro.steps,
                       "load steps (ramp up, then down)")->capture_default_str();
  twoscale->add_option("--macro-peak", macro.peak_traction,
                       "peak traction magnitude")->capture_default_str();

  CLI::App* propmap = app.add_subcommand(
      "propmap", "effective uniaxial properties over a pore-shape grid");
  add_common(propmap);
  propmap->add_option("--v", v_values, "void fractions")->delimiter(',');
  propmap->add_option("--kappa", kappa_values, "pore aspect ratios")
      ->delimiter(',');

  CLI::App* meshgen = app.add_subcommand(
      "meshgen", "write the campaign parent mesh for inspection");
  add_common(meshgen);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (threads > 0) Eigen::setNbThreads(threads);

  try {
    TrainConfig cfg = load_train_config(config_path);
    if (seed) cfg.sampling.seed = *seed;

    if (app.got_subcommand(offline)) {
      OfflineReport rep = run_offline(cfg, out_dir);
      std::printf("trained %d samples, %d steps total\n", rep.n_train,
                  rep.total_steps);
      std::printf("modes = %d displacement, %d stress; cubature points = %d "
                  "(residual %s)\n",
                  rep.n_modes, rep.n_stress_modes, rep.n_points,
                  csv_num(rep.ecm_residual).c_str());
      std::printf("model = %s\n", rep.model_path.c_str());
      std::printf("manifest = %s\n", rep.manifest_path.c_str());
      return 0;
    }

    if (app.got_subcommand(validate)) {
      ValidationReport rep = run_validate(cfg, model_path, out_dir);
      std::printf("validated %zu test samples\n", rep.cases.size());
      std::printf("mean stress error = %s\n",
                  csv_num(rep.mean_e_pbar).c_str());
      std::printf("mean fluctuation error = %s\n",
                  csv_num(rep.mean_e_w).c_str());
      std::printf("report = %s/validation.csv\n", out_dir.c_str());
      return 0;
    }

    if (app.got_subcommand(online)) {
      auto wb = Workbench::build(cfg);
      RomModel model = load_model_for(*wb, model_path);
      OnlineRequest req;
      req.mu = Eigen::Map<const VecX>(mu_values.data(),
                                      static_cast<int>(mu_values.size()));
      req.effective_stiffness = want_stiffness;
      req.sensitivity_h = sensitivity_h;
      OnlineReport rep = run_online(*wb, cfg, model, req, out_dir);
      std::printf("solved %zu steps\n", rep.pbar.size());
      if (!rep.pbar.empty()) print_pbar(rep.pbar.back());
      std::printf("response = %s/response.csv\n", out_dir.c_str());
      return 0;
    }

    if (app.got_subcommand(twoscale)) {
      auto wb = Workbench::build(cfg);
      const std::string rom_path = engine_model_path(engine);
      RomModel model;
      const RomModel* model_ptr = nullptr;
      if (!rom_path.empty()) {
        model = load_model_for(*wb, rom_path);
        model_ptr = &model;
      }
      TwoscaleResult res =
          run_twoscale_cmd(*wb, cfg, macro, model_ptr, out_dir);
      std::printf("traced %zu load steps\n", res.load_factor.size());
      double peak = 0.0;
      for (double c : res.compliance) peak = std::max(peak, c);
      std::printf("peak compliance = %s\n", csv_num(peak).c_str());
      std::printf("trace = %s/twoscale_%s.csv\n", out_dir.c_str(),
                  model_ptr == nullptr ? "full" : "rom");
      return 0;
    }

    if (app.got_subcommand(propmap)) {
      auto wb = Workbench::build(cfg);
      std::vector<PropertyPoint> pts =
          run_propmap(*wb, v_values, kappa_values, out_dir);
      std::printf("swept %zu shape points\n", pts.size());
      std::printf("map = %s/propmap.csv\n", out_dir.c_str());
      return 0;
    }

    if (app.got_subcommand(meshgen)) {
      auto wb = Workbench::build(cfg);
      std::filesystem::create_directories(out_dir);
      const std::string path = out_dir + "/mesh.txt";
      save_mesh(wb->mesh, path);
      std::printf("%d nodes, %d elements, %d quadrature points\n",
                  wb->mesh.n_nodes(), wb->mesh.n_elems(),
                  static_cast<int>(wb->cache.n_qp()));
      std::printf("fingerprint = %016llx\n",
                  static_cast<unsigned long long>(wb->mesh.fingerprint()));
      std::printf("mesh = %s\n", path.c_str());
      return 0;
    }

    std::fprintf(stderr, "error: no command selected\n");
    return 2;
  } catch (const SolveError& e) {
    std::fprintf(stderr, "solver error: %s\n", e.what());
    return 3;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "format error: %s\n", e.what());
    return 2;
  } catch (const IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
