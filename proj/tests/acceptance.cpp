// Acceptance harness: one pass/fail line per top-level claim. No framework;
// every tolerance is pinned inline next to the check it gates. Exit code is
// the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "wavelocate/dispersion.hpp"
#include "wavelocate/eval.hpp"
#include "wavelocate/mdn.hpp"
#include "wavelocate/mfp.hpp"
#include "wavelocate/rng.hpp"
#include "wavelocate/wavefield.hpp"

using namespace wavelocate;

namespace {

int g_failures = 0;

void report(int id, const std::string& label, bool ok,
            const std::string& detail) {
  std::printf("[%s] %2d %s: %s\n", ok ? "PASS" : "FAIL", id, label.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

// shared fixed seed for every dataset-driven criterion
constexpr std::uint64_t kMasterSeed = 424242;

// the desk candidate grid: 50 x 50 over the unit plate
mfp::QueryGrid desk_grid() { return {1.0, 1.0, 50, 50}; }

// ---------------------------------------------------------------------------
// 1. analytic MDN gradients vs central finite differences, desk-scale network

void criterion_gradient_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  mdn::NetworkSpec spec;
  spec.input_dim = 28 * 256;  // 8-sensor desk scenario: 28 pairs x 256 bins
  spec.num_components = 3;

  double worst = 0.0;
  for (std::uint64_t seed : {101ULL, 102ULL, 103ULL}) {
    RngStream rng(seed);
    mdn::Params params = mdn::Params::initial(spec, rng);
    Eigen::MatrixXd x(spec.input_dim, 2);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    std::vector<mdn::TargetSet> targets(2);
    for (auto& t : targets)
      t.points = {{rng.uniform01(), rng.uniform01()},
                  {rng.uniform01(), rng.uniform01()}};

    mdn::Grads grads = mdn::Grads::zeros_like(params);
    mdn::batch_loss(params, spec, x, targets, false, nullptr, &grads);

    const double eps = 1e-5;  // central-difference step
    mdn::Params shifted = params;
    auto loss_at = [&]() {
      return mdn::batch_loss(shifted, spec, x, targets, false, nullptr,
                             nullptr);
    };
    auto probe = [&](double* entry, double analytic) {
      const double saved = *entry;
      *entry = saved + eps;
      const double up = loss_at();
      *entry = saved - eps;
      const double down = loss_at();
      *entry = saved;
      const double fd = (up - down) / (2.0 * eps);
      // 1e-3 floor: FD roundoff is ~1e-8 absolute at loss scale O(1), which
      // would swamp the relative error of near-zero gradient entries
      const double rel = std::abs(analytic - fd) /
                         std::max({std::abs(analytic), std::abs(fd), 1e-3});
      worst = std::max(worst, rel);
    };
    // every parameter tensor, a fixed random subsample of entries per tensor
    RngStream pick(seed + 7);
    for (int l = 0; l < 4; ++l) {
      const Eigen::Index nw = params.w[l].size();
      for (int s = 0; s < std::min<Eigen::Index>(nw, 150); ++s) {
        const auto i = static_cast<Eigen::Index>(
            pick.uniform_index(static_cast<std::size_t>(nw)));
        probe(shifted.w[l].data() + i, grads.w[l].data()[i]);
      }
      const Eigen::Index nb = params.b[l].size();
      for (int s = 0; s < std::min<Eigen::Index>(nb, 150); ++s) {
        const auto i = static_cast<Eigen::Index>(
            pick.uniform_index(static_cast<std::size_t>(nb)));
        probe(shifted.b[l].data() + i, grads.b[l].data()[i]);
      }
    }
  }
  const double wall = seconds_since(t0);
  const bool ok = worst < 1e-4 && wall < 60.0;
  report(1, "gradient oracle", ok,
         "max rel err " + fmt("%.3g", worst) + " (< 1e-4), " +
             fmt("%.1f", wall) + " s (< 60)");
}

// ---------------------------------------------------------------------------
// 2. MFP returns the exact generating grid point for noiseless matched data

void criterion_matched_point() {
  const auto t0 = std::chrono::steady_clock::now();
  dispersion::PlateMaterial mat;
  dispersion::FrequencyGrid fgrid{256, -500e3, 500e3};
  const auto table = dispersion::solve_rayleigh_lamb(mat, fgrid);
  RngStream rng(kMasterSeed);
  const auto sensors = wavefield::SensorArray::random(8, 1.0, 1.0, rng);
  const mfp::QueryGrid grid = desk_grid();
  const mfp::MfpEngine engine(table, sensors, grid);

  int exact = 0;
  const int trials = 50;
  std::vector<Eigen::MatrixXcd> data(trials);
  std::vector<int> target_idx(trials);
  for (int t = 0; t < trials; ++t) {
    target_idx[t] = static_cast<int>(
        rng.uniform_index(static_cast<std::size_t>(grid.size())));
    const Point2 damage = grid.point(target_idx[t]);
    Eigen::MatrixXcd spectra(sensors.num_pairs(), fgrid.num_points);
    for (int m = 0; m < sensors.num_pairs(); ++m) {
      const auto [i, j] = sensors.pairs[m];
      spectra.row(m) = wavefield::scatter_spectrum(
                           table, sensors.positions[i], sensors.positions[j],
                           damage, 1.0)
                           .transpose();
    }
    data[t] = std::move(spectra);
  }
  std::vector<const Eigen::MatrixXcd*> ptrs;
  for (const auto& d : data) ptrs.push_back(&d);
  const auto surfaces = engine.ambiguity_batch(ptrs);
  for (int t = 0; t < trials; ++t) {
    const auto est = mfp::localize(surfaces[t], 1);
    const Point2 want = grid.point(target_idx[t]);
    if (est.size() == 1 && est[0].x == want.x && est[0].y == want.y) ++exact;
  }
  const double wall = seconds_since(t0);
  const bool ok = exact == trials && wall < 120.0;
  report(2, "matched-point optimality", ok,
         std::to_string(exact) + "/50 exact, " + fmt("%.1f", wall) +
             " s (< 120)");
}

// ---------------------------------------------------------------------------
// shared sweep plumbing for the dataset-driven criteria

eval::SweepContext desk_context() {
  eval::SweepContext ctx;
  ctx.scenario.master_seed = kMasterSeed;
  ctx.counts = {1000, 200, 100};  // desk split: train / val / test
  ctx.network.num_components = 0;  // damages per cell + 1
  ctx.grid = desk_grid();
  return ctx;
}

// 3. MFP near-optimality with noise as the only corruption

void criterion_mfp_noise_only() {
  const auto t0 = std::chrono::steady_clock::now();
  eval::SweepContext ctx = desk_context();
  ctx.counts = {1, 1, 100};  // no model is trained on this cell
  const eval::SweepSpec spec{{25.0}, {0.0}, {1}, {eval::Method::Mfp}};
  const auto rep = eval::run_sweep(ctx, spec, kMasterSeed);
  const double ale = rep.rows.at(0).ale;
  const bool ok = ale <= 0.03;
  report(3, "mfp noise-only near-optimality", ok,
         "ale " + fmt("%.4f", ale) + " m (<= 0.03), " +
             fmt("%.0f", seconds_since(t0)) + " s");
}

// 4. robustness crossover: trained MDN beats MFP under noise + distortion

void criterion_crossover() {
  const auto t0 = std::chrono::steady_clock::now();
  eval::SweepContext ctx = desk_context();
  // strongest recipe found for this cell; wider stacks (600/300/60), lower
  // dropout and shorter/longer schedules all measured worse
  ctx.training.epochs = 4000;
  ctx.training.learning_rate = 1e-3;
  ctx.training.dropout_prob = 0.2;
  const eval::SweepSpec spec{
      {5.0}, {0.15}, {2}, {eval::Method::Mdn, eval::Method::Mfp}};
  const auto rep = eval::run_sweep(ctx, spec, kMasterSeed);
  double mdn_ale = -1.0, mfp_ale = -1.0;
  for (const auto& row : rep.rows) {
    (row.method == eval::Method::Mdn ? mdn_ale : mfp_ale) = row.ale;
  }
  const double wall = seconds_since(t0);
  const bool ok = mdn_ale >= 0.0 && mfp_ale >= 0.0 && mdn_ale < mfp_ale &&
                  wall < 1800.0;
  report(4, "robustness crossover", ok,
         "mdn ale " + fmt("%.4f", mdn_ale) + " vs mfp ale " +
             fmt("%.4f", mfp_ale) + " m, " + fmt("%.0f", wall) + " s (< 1800)");
}

// 5 + 6. predictive variance grows and validation likelihood degrades as the
// distortion band widens

void criteria_uncertainty_trends() {
  const auto t0 = std::chrono::steady_clock::now();
  eval::SweepContext ctx = desk_context();
  ctx.training.epochs = 1600;  // the likelihood needs this long to converge
  ctx.training.learning_rate = 1e-3;
  ctx.training.dropout_prob = 0.2;

  // one single-cell sweep per distortion width, all from the same master
  // seed: sensors, damage draws, noise realizations and the initial weights
  // are then identical across the four models, and the width is the only
  // experimental variable. Deriving the four cells from one sweep instead
  // would reseed everything per cell, and at this training-set size dataset
  // and initialization luck are larger than the trend under study.
  std::vector<double> max_var, loglik;
  for (double w : {0.0, 0.1, 0.2, 0.3}) {
    const eval::SweepSpec spec{{5.0}, {w}, {1}, {eval::Method::Mdn}};
    const auto rep = eval::run_sweep(ctx, spec, kMasterSeed);
    max_var.push_back(rep.rows.at(0).max_var);
    loglik.push_back(rep.rows.at(0).mean_loglik);
  }
  std::string vs, ls;
  for (std::size_t i = 0; i < max_var.size(); ++i) {
    vs += (i ? " " : "") + fmt("%.3g", max_var[i]);
    ls += (i ? " " : "") + fmt("%.2f", loglik[i]);
  }
  const double wall = seconds_since(t0);

  bool increasing = max_var.size() == 4;
  for (std::size_t i = 1; i < max_var.size(); ++i)
    increasing = increasing && max_var[i] > max_var[i - 1];
  report(5, "uncertainty scaling", increasing,
         "max_var [" + vs + "] strictly increasing over w {0,0.1,0.2,0.3}, " +
             fmt("%.0f", wall) + " s");

  bool non_increasing = loglik.size() == 4;
  for (std::size_t i = 1; i < loglik.size(); ++i)
    non_increasing = non_increasing && loglik[i] <= loglik[i - 1];
  report(6, "likelihood trend", non_increasing,
         "val loglik [" + ls + "] non-increasing over w {0,0.1,0.2,0.3}");
}

// ---------------------------------------------------------------------------
// 7. uniformly random predictions vs uniformly random truths on the unit plate

void criterion_random_baseline() {
  RngStream rng(777);
  std::vector<std::vector<Point2>> est, truth;
  for (int s = 0; s < 10000; ++s) {
    est.push_back({{rng.uniform01(), rng.uniform01()}});
    truth.push_back({{rng.uniform01(), rng.uniform01()}});
  }
  const double ale = eval::ale(est, truth).ale;
  const bool ok = std::abs(ale - 0.52) <= 0.02;
  report(7, "random-baseline sanity", ok,
         "ale " + fmt("%.4f", ale) + " m (0.52 +/- 0.02)");
}

// 8. truths drawn from the selected component are covered 95% of the time

void criterion_ci95_calibration() {
  RngStream rng(31);
  std::vector<mdn::GmmPrediction> preds;
  std::vector<std::vector<Point2>> truths;
  for (int s = 0; s < 10000; ++s) {
    // two components; the first carries the dominant weight, so with a single
    // truth the assignment always selects it, and the truth is its own draw
    const double w0 = 0.6 + 0.3 * rng.uniform01();
    mdn::GmmPrediction p;
    p.means.resize(2, 2);
    p.variances.resize(2, 2);
    p.weights.resize(2);
    p.means << rng.uniform01(), rng.uniform01(), rng.uniform01(),
        rng.uniform01();
    p.variances << 0.5e-3 + 1e-3 * rng.uniform01(),
        0.5e-3 + 1e-3 * rng.uniform01(), 1e-3, 1e-3;
    p.weights << w0, 1.0 - w0;
    const Point2 y{p.means(0, 0) + std::sqrt(p.variances(0, 0)) * rng.normal(),
                   p.means(0, 1) + std::sqrt(p.variances(0, 1)) * rng.normal()};
    preds.push_back(std::move(p));
    truths.push_back({y});
  }
  const double coverage = eval::ci95_coverage(preds, truths);
  const bool ok = std::abs(coverage - 0.95) <= 0.02;
  report(8, "ci95 calibration oracle", ok,
         "coverage " + fmt("%.4f", coverage) + " (0.95 +/- 0.02)");
}

// ---------------------------------------------------------------------------
// 9. cross-module property bundle

void criterion_properties() {
  std::string fails;

  // mixture weights land on the simplex and variances stay positive
  {
    mdn::NetworkSpec spec;
    spec.input_dim = 6;
    spec.num_components = 4;
    RngStream rng(90);
    bool weights_ok = true, var_ok = true;
    for (int t = 0; t < 200; ++t) {
      Eigen::VectorXd z(spec.output_dim());
      for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = 3.0 * rng.normal();
      const auto p = mdn::activate(z, spec);
      weights_ok = weights_ok && std::abs(p.weights.sum() - 1.0) <= 1e-9;
      var_ok = var_ok && (p.variances.array() > 0.0).all();
    }
    if (!weights_ok) fails += " weight-normalization";
    if (!var_ok) fails += " variance-positivity";
  }

  // a generated multi-damage spectrum is the superposition of per-damage
  // scatter responses
  {
    wavefield::ScenarioConfig sc;
    sc.sensor_count = 4;
    sc.grid = {64, -500e3, 500e3};
    sc.damages.count = 2;
    sc.master_seed = 5;
    sc.keep_spectra = wavefield::SpectraRetention::All;
    const auto ds = wavefield::generate_dataset(sc, {1, 0, 0});
    const auto table = dispersion::solve_rayleigh_lamb(sc.material, sc.grid);
    const auto& s = ds.train[0];
    double worst = 0.0;
    for (int m = 0; m < ds.num_pairs(); ++m) {
      const auto [i, j] = ds.sensors.pairs[m];
      Eigen::VectorXcd sum = Eigen::VectorXcd::Zero(sc.grid.num_points);
      for (const auto& d : s.truth)
        sum += wavefield::scatter_spectrum(table, ds.sensors.positions[i],
                                           ds.sensors.positions[j], d, s.alpha);
      worst = std::max(worst,
                       (s.spectra.row(m).transpose() - sum)
                           .lpNorm<Eigen::Infinity>());
    }
    if (worst > 1e-14) fails += " superposition";
  }

  // distorting by alpha is bitwise identical to scaling the wavenumber table
  {
    dispersion::FrequencyGrid grid{32, -400e3, 400e3};
    const auto table = dispersion::analytic_dispersion(
        dispersion::AnalyticModel::power_law(0.015, 0.9), grid);
    dispersion::DispersionTable scaled = table;
    for (auto& k : scaled.kappa[0]) k *= 1.13;
    const auto a = wavefield::scatter_spectrum(table, {0.1, 0.1}, {0.9, 0.8},
                                               {0.4, 0.6}, 1.13);
    const auto b =
        wavefield::scatter_spectrum(scaled, {0.1, 0.1}, {0.9, 0.8}, {0.4, 0.6},
                                    1.0);
    if ((a - b).lpNorm<Eigen::Infinity>() != 0.0) fails += " alpha-scaling";
  }

  // injected noise realizes the requested SNR
  {
    RngStream srng(3);
    Eigen::MatrixXd signals(28, 256);
    for (Eigen::Index i = 0; i < signals.size(); ++i)
      signals.data()[i] = srng.normal();
    for (double target : {25.0, 5.0}) {
      Eigen::MatrixXd noisy = signals;
      RngStream nrng(77);
      const double realized = wavefield::add_awgn(noisy, target, nrng);
      if (std::abs(realized - target) >= 0.5) fails += " snr-calibration";
    }
  }

  // dataset and model round trips are bit-exact through disk
  {
    wavefield::ScenarioConfig sc;
    sc.sensor_count = 4;
    sc.grid = {32, -400e3, 400e3};
    sc.master_seed = 42;
    sc.uncertainty.snr_db = 20.0;
    sc.uncertainty.w_distort = 0.1;
    const auto ds = wavefield::generate_dataset(sc, {24, 4, 4});

    namespace fs = std::filesystem;
    const fs::path dir =
        fs::temp_directory_path() / "wavelocate_acceptance_roundtrip";
    fs::remove_all(dir);
    wavefield::save_dataset(ds, dir / "data");
    const auto ds2 = wavefield::load_dataset(dir / "data");
    bool ok = ds2.feature_mean == ds.feature_mean &&
              ds2.feature_std == ds.feature_std;
    auto same_truth = [](const std::vector<Point2>& a,
                         const std::vector<Point2>& b) {
      if (a.size() != b.size()) return false;
      for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].x != b[i].x || a[i].y != b[i].y) return false;
      return true;
    };
    for (int split = 0; split < 3 && ok; ++split) {
      const auto& a = ds.split(split);
      const auto& b = ds2.split(split);
      ok = a.size() == b.size();
      for (std::size_t i = 0; i < a.size() && ok; ++i)
        ok = a[i].signals == b[i].signals && same_truth(a[i].truth, b[i].truth) &&
             a[i].alpha == b[i].alpha;
    }
    if (!ok) fails += " dataset-round-trip";

    mdn::TrainConfig tc;
    tc.epochs = 3;
    tc.seed = 9;
    mdn::NetworkSpec spec;
    spec.hidden = {16, 8, 4};
    spec.num_components = 2;
    const auto model = mdn::train(ds, spec, tc);
    mdn::save_model(model, dir / "model");
    const auto model2 = mdn::load_model(dir / "model");
    const auto raw = ds.raw_signals(ds.test[0]);
    const auto pa = mdn::predict(model, raw);
    const auto pb = mdn::predict(model2, raw);
    if (!(pa.means == pb.means && pa.variances == pb.variances &&
          pa.weights == pb.weights))
      fails += " model-round-trip";
    fs::remove_all(dir);
  }

  // generation is reproducible per seed and sensitive to it
  {
    wavefield::ScenarioConfig sc;
    sc.sensor_count = 4;
    sc.grid = {32, -400e3, 400e3};
    sc.uncertainty.snr_db = 15.0;
    sc.uncertainty.w_distort = 0.2;
    sc.master_seed = 11;
    const auto a = wavefield::generate_dataset(sc, {6, 2, 2});
    const auto b = wavefield::generate_dataset(sc, {6, 2, 2});
    sc.master_seed = 12;
    const auto c = wavefield::generate_dataset(sc, {6, 2, 2});
    const bool same = a.input_vector(a.train[0]) == b.input_vector(b.train[0]);
    const bool differs =
        a.input_vector(a.train[0]) != c.input_vector(c.train[0]);
    if (!same || !differs) fails += " seed-determinism";
  }

  report(9, "property suites", fails.empty(),
         fails.empty() ? "weight normalization, variance positivity, "
                         "superposition, alpha scaling, snr calibration, "
                         "round trips, seed determinism all hold"
                       : "failing:" + fails);
}

// ---------------------------------------------------------------------------
// 10. every dispersion root satisfies the characteristic equation; S0 tends
// to the closed-form plate velocity at low frequency

void criterion_dispersion_validity() {
  dispersion::PlateMaterial mat;
  dispersion::FrequencyGrid grid{256, -500e3, 500e3};
  const auto table = dispersion::solve_rayleigh_lamb(mat, grid);
  double worst = 0.0;
  for (int mode = 0; mode < table.num_modes(); ++mode) {
    const auto m = mode == 0 ? dispersion::Mode::S0 : dispersion::Mode::A0;
    for (int bin = 0; bin < grid.num_points; ++bin) {
      if (grid.frequency_hz(bin) == 0.0) continue;
      worst = std::max(
          worst, dispersion::characteristic_residual(
                     mat, m, std::abs(grid.omega(bin)),
                     std::abs(table.kappa[mode][bin])));
    }
  }
  const int bin = grid.zero_bin() + 1;  // lowest positive frequency
  const double v = grid.omega(bin) / table.kappa[0][bin];
  const double rel_v = std::abs(v - mat.plate_velocity()) / mat.plate_velocity();
  const bool ok = worst < 1e-6 && rel_v < 0.01;
  report(10, "dispersion validity", ok,
         "max residual " + fmt("%.2e", worst) + " (< 1e-6), S0 low-f velocity off by " +
             fmt("%.3f", 100.0 * rel_v) + "% (< 1%)");
}

}  // namespace

int main(int argc, char** argv) {
  // optional args: criterion numbers to run (default all ten)
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));
  auto selected = [&](int id) {
    return wanted.empty() ||
           std::find(wanted.begin(), wanted.end(), id) != wanted.end();
  };

  int attempted = 0;
  auto run = [&](int id, auto&& fn, int extra_id = 0) {
    if (!selected(id) && !(extra_id && selected(extra_id))) return;
    attempted += extra_id ? 2 : 1;
    fn();
  };
  run(1, criterion_gradient_oracle);
  run(2, criterion_matched_point);
  run(3, criterion_mfp_noise_only);
  run(7, criterion_random_baseline);
  run(8, criterion_ci95_calibration);
  run(9, criterion_properties);
  run(10, criterion_dispersion_validity);
  run(5, criteria_uncertainty_trends, 6);
  run(4, criterion_crossover);
  std::printf("acceptance: %d/%d criteria passed\n", attempted - g_failures,
              attempted);
  return g_failures;
}
