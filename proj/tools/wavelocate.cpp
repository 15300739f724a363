// wavelocate: synthesize guided-wave datasets, train the mixture-density
// localizer, and run matched-field baselines from one INI config.

#include <CLI11.hpp>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "wavelocate/config.hpp"
#include "wavelocate/errors.hpp"
#include "wavelocate/eval.hpp"
#include "wavelocate/log.hpp"
#include "wavelocate/mdn.hpp"
#include "wavelocate/mfp.hpp"
#include "wavelocate/wavefield.hpp"

namespace {

namespace fs = std::filesystem;
using namespace wavelocate;

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  int threads = 1;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "INI configuration file")
      ->required();
  cmd->add_option("--out", args.out_dir, "output directory")->required();
  cmd->add_option("--seed", args.seed, "override the config's master seed");
  cmd->add_option("--threads", args.threads,
                  "worker threads (currently capped at 1)");
}

config::RunConfig load_config(const CommonArgs& args) {
  config::RunConfig cfg = config::parse_config_file(args.config_path);
  if (args.seed) {
    cfg.seed = *args.seed;
    cfg.scenario.master_seed = *args.seed;
    cfg.training.seed = derive_seed(*args.seed, {streams::kInit});
  }
  cfg.validate();
  if (args.threads > 1) {
    log_info("multi-threaded execution is not wired up; running on 1 thread");
  }
  return cfg;
}

fs::path prepare_out(const CommonArgs& args, const config::RunConfig& cfg) {
  const fs::path out(args.out_dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create " + out.string() + ": " + ec.message());
  std::ofstream rf(out / "resolved.json", std::ios::trunc);
  if (!rf) throw IoError("cannot write resolved.json");
  rf << config::resolved_json(cfg).dump(2) << "\n";
  if (!rf) throw IoError("resolved.json write failed");
  return out;
}

int cmd_dispersion(const CommonArgs& args) {
  const config::RunConfig cfg = load_config(args);
  const fs::path out = prepare_out(args, cfg);
  const auto table =
      dispersion::solve_rayleigh_lamb(cfg.scenario.material, cfg.scenario.grid);
  std::ofstream csv(out / "dispersion.csv", std::ios::trunc);
  if (!csv) throw IoError("cannot write dispersion.csv");
  dispersion::write_csv(table, csv);
  log_info("dispersion table: " + std::to_string(table.num_modes()) +
           " modes, " + std::to_string(table.grid.num_points) + " bins");
  return 0;
}

int cmd_simulate(const CommonArgs& args) {
  const config::RunConfig cfg = load_config(args);
  const fs::path out = prepare_out(args, cfg);
  const auto dataset = wavefield::generate_dataset(cfg.scenario, cfg.counts);
  wavefield::save_dataset(dataset, out / "dataset");
  double snr_acc = 0.0;
  int snr_count = 0;
  for (int s = 0; s < 3; ++s) {
    for (const auto& sample : dataset.split(s)) {
      if (std::isfinite(sample.realized_snr_db)) {
        snr_acc += sample.realized_snr_db;
        ++snr_count;
      }
    }
  }
  log_info("dataset written to " + (out / "dataset").string() +
           (snr_count > 0 ? " (mean realized snr " +
                                std::to_string(snr_acc / snr_count) + " dB)"
                          : " (noiseless)"));
  return 0;
}

int cmd_train(const CommonArgs& args, const std::string& data_dir, bool cv3) {
  const config::RunConfig cfg = load_config(args);
  const fs::path out = prepare_out(args, cfg);
  wavefield::Dataset dataset;
  if (!data_dir.empty()) {
    dataset = wavefield::load_dataset(data_dir);
    // a loaded dataset must match the config's geometry, or resolved.json
    // would misstate the provenance of the trained model
    const int pairs = cfg.scenario.sensor_count *
                      (cfg.scenario.sensor_count - 1) / 2;
    const int expected = pairs * cfg.scenario.grid.num_points;
    const int found =
        dataset.num_pairs() * dataset.scenario.grid.num_points;
    if (expected != found) {
      throw ConfigError("config expects input dim " + std::to_string(expected) +
                        " (" + std::to_string(pairs) + " pairs x " +
                        std::to_string(cfg.scenario.grid.num_points) +
                        " bins), dataset provides " + std::to_string(found));
    }
  } else {
    log_info("no --data directory given; generating the dataset from config");
    dataset = wavefield::generate_dataset(cfg.scenario, cfg.counts);
  }
  mdn::NetworkSpec net = cfg.network;
  if (net.num_components == 0) {
    net.num_components = dataset.scenario.damages.count + 1;
  }
  const auto model = mdn::train(dataset, net, cfg.training, cv3);
  mdn::save_model(model, out / "model");
  log_info("model written to " + (out / "model").string());
  return 0;
}

int cmd_eval(const CommonArgs& args, const std::string& model_dir, bool cv3,
             int export_surfaces) {
  const config::RunConfig cfg = load_config(args);
  const fs::path out = prepare_out(args, cfg);
  eval::SweepContext ctx = config::sweep_context(cfg);
  ctx.cv3 = cv3;
  ctx.export_surfaces = export_surfaces;
  ctx.export_dir = out;
  if (!model_dir.empty()) {
    // informational only: sweeps retrain per cell so every model matches its
    // cell's uncertainty level
    log_info("--model is noted but sweep cells train their own models");
  }
  const eval::MetricReport report = eval::run_sweep(ctx, cfg.sweep, cfg.seed);
  std::ofstream csv(out / "metrics.csv", std::ios::trunc);
  if (!csv) throw IoError("cannot write metrics.csv");
  eval::write_report_csv(report, csv);
  std::ofstream json(out / "metrics.json", std::ios::trunc);
  if (!json) throw IoError("cannot write metrics.json");
  eval::write_report_json(report, json);
  log_info("metrics written to " + out.string() + " (" +
           std::to_string(report.rows.size()) + " rows)");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"guided-wave damage localization toolkit"};
  app.require_subcommand(1);

  CommonArgs disp_args, sim_args, train_args, eval_args;
  std::string data_dir, model_dir;
  bool train_cv3 = false, eval_cv3 = false;
  int export_surfaces = 0;

  CLI::App* disp = app.add_subcommand("dispersion", "solve and export the "
                                                    "dispersion table");
  add_common(disp, disp_args);

  CLI::App* sim = app.add_subcommand("simulate", "generate a Monte Carlo "
                                                 "dataset");
  add_common(sim, sim_args);

  CLI::App* train = app.add_subcommand("train", "train the mixture-density "
                                                "localizer");
  add_common(train, train_args);
  train->add_option("--data", data_dir, "dataset directory from simulate");
  train->add_flag("--cv3", train_cv3, "3-fold cross-validation before the "
                                      "final fit");

  CLI::App* ev = app.add_subcommand("eval", "run the uncertainty sweep and "
                                            "write metrics");
  add_common(ev, eval_args);
  ev->add_option("--model", model_dir, "trained model directory (noted only)");
  ev->add_flag("--cv3", eval_cv3, "3-fold cross-validation inside each cell");
  ev->add_option("--export-surfaces", export_surfaces,
                 "export the first N test ambiguity surfaces per mfp cell");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (disp->parsed()) return cmd_dispersion(disp_args);
    if (sim->parsed()) return cmd_simulate(sim_args);
    if (train->parsed()) return cmd_train(train_args, data_dir, train_cv3);
    if (ev->parsed()) return cmd_eval(eval_args, model_dir, eval_cv3,
                                      export_surfaces);
  } catch (const ConfigError& e) {
    log_error(e.what());
    return 2;
  } catch (const SolverError& e) {
    log_error(e.what());
    return 3;
  } catch (const IoError& e) {
    log_error(e.what());
    return 4;
  } catch (const TrainingError& e) {
    log_error(e.what());
    return 5;
  } catch (const std::exception& e) {
    log_error(std::string("unexpected error: ") + e.what());
    return 1;
  }
  return 0;
}
