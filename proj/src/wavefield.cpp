#include "wavelocate/wavefield.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <string>

#include "wavelocate/errors.hpp"
#include "wavelocate/log.hpp"
#include "wavelocate/spectral.hpp"

namespace wavelocate::wavefield {

namespace {

// split ids for seed derivation and retention checks
constexpr std::uint64_t kSplitTrain = 0, kSplitVal = 1, kSplitTest = 2;

bool retain_spectra(SpectraRetention policy, std::uint64_t split) {
  switch (policy) {
    case SpectraRetention::All:
      return true;
    case SpectraRetention::TestOnly:
      return split == kSplitTest;
    case SpectraRetention::None:
      return false;
  }
  return false;
}

}  // namespace

SensorArray SensorArray::random(int count, double length, double width,
                                RngStream& rng) {
  if (count < 2) throw InvalidParameter("sensor array needs >= 2 sensors");
  if (!(length > 0.0) || !(width > 0.0)) {
    throw InvalidParameter("plate dimensions must be positive");
  }
  SensorArray array;
  array.positions.reserve(count);
  for (int i = 0; i < count; ++i) {
    const double x = rng.uniform(0.0, length);
    const double y = rng.uniform(0.0, width);
    array.positions.push_back({x, y});
  }
  array.pairs = all_pairs(count);
  return array;
}

std::vector<std::pair<int, int>> SensorArray::all_pairs(int count) {
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(count * (count - 1) / 2);
  for (int i = 0; i < count; ++i) {
    for (int j = i + 1; j < count; ++j) pairs.emplace_back(i, j);
  }
  return pairs;
}

double ExcitationWindow::weight(double f_hz) const {
  if (kind == Kind::None) return 1.0;
  const double d = std::abs(f_hz) - center_hz;
  return std::exp(-0.5 * d * d / (sigma_hz * sigma_hz));
}

void ScenarioConfig::validate() const {
  material.validate();
  grid.validate();
  if (!grid.is_symmetric()) {
    throw InvalidParameter(
        "synthesis requires a symmetric grid (even bin count, f_min = -f_max)");
  }
  if (!(plate_length > 0.0) || !(plate_width > 0.0)) {
    throw InvalidParameter("plate dimensions must be positive");
  }
  if (sensor_count < 2) throw InvalidParameter("sensor_count must be >= 2");
  if (damages.count < 1 || damages.count > 4) {
    throw InvalidDamageCount("damage count must be in [1, 4], got " +
                             std::to_string(damages.count));
  }
  if (!(uncertainty.w_distort >= 0.0) || uncertainty.w_distort >= 1.0) {
    throw InvalidParameter("w_distort must lie in [0, 1)");
  }
  if (std::isnan(uncertainty.snr_db)) {
    throw InvalidParameter("snr_db must not be NaN");
  }
  if (window.kind == ExcitationWindow::Kind::Gaussian &&
      !(window.sigma_hz > 0.0)) {
    throw InvalidParameter("excitation window sigma must be positive");
  }
}

Eigen::VectorXcd scatter_spectrum(const dispersion::DispersionTable& table,
                                  const Point2& transmitter,
                                  const Point2& receiver, const Point2& damage,
                                  double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw InvalidParameter("alpha must be positive and finite");
  }
  if (!table.grid.is_symmetric()) {
    throw InvalidParameter("scatter synthesis requires a symmetric grid");
  }
  const double r = distance(transmitter, damage) + distance(damage, receiver);
  if (!(r > kMinPathLength)) {
    throw PathTooShort("scatter path of " + std::to_string(r) +
                       " m is below the " + std::to_string(kMinPathLength) +
                       " m floor");
  }
  const int n = table.grid.num_points;
  const int zb = table.grid.zero_bin();
  Eigen::VectorXcd spectrum = Eigen::VectorXcd::Zero(n);
  for (int q = zb + 1; q < n; ++q) {
    std::complex<double> acc(0.0, 0.0);
    for (int m = 0; m < table.num_modes(); ++m) {
      const double kappa = table.kappa[m][q];
      if (!(kappa > 0.0)) {
        throw ZeroWavenumber("mode " + table.mode_names[m] +
                             " has nonpositive wavenumber at bin " +
                             std::to_string(q));
      }
      const double kr = alpha * kappa * r;
      // cylindrical spreading amplitude with propagation phase
      acc += std::polar(std::sqrt(1.0 / kr), -kr);
    }
    spectrum[q] = acc;
    const int partner = 2 * zb - q;
    if (partner >= 1) spectrum[partner] = std::conj(acc);
  }
  // f = 0 carries no propagating wave; bin 0 has no positive partner and is
  // zeroed to keep the synthesized signal real
  return spectrum;
}

double sample_alpha(double w_distort, RngStream& rng) {
  if (!(w_distort >= 0.0) || w_distort >= 1.0) {
    throw InvalidParameter("w_distort must lie in [0, 1)");
  }
  if (w_distort == 0.0) return 1.0;
  // rejection sampling from N(1, 1) onto [1 - w, 1 + w]; acceptance is about
  // 2 * w * phi(0) so even w = 0.05 accepts within a few hundred tries
  for (int attempt = 0; attempt < 1000000; ++attempt) {
    const double x = 1.0 + rng.normal();
    if (std::abs(x - 1.0) <= w_distort) return x;
  }
  throw SolverError("alpha rejection sampling failed to accept");
}

double add_awgn(Eigen::MatrixXd& signals, double snr_db, RngStream& rng) {
  if (std::isinf(snr_db) && snr_db > 0.0) return snr_db;
  if (std::isnan(snr_db)) throw InvalidParameter("snr_db must not be NaN");
  const double signal_power = signals.squaredNorm();
  if (!(signal_power > 0.0)) {
    throw ZeroSignal("cannot calibrate noise against an all-zero signal");
  }
  const double mean_power = signal_power / static_cast<double>(signals.size());
  const double sigma = std::sqrt(mean_power / std::pow(10.0, snr_db / 10.0));
  double noise_power = 0.0;
  // fixed traversal order (row by row) keeps the draw sequence reproducible
  for (Eigen::Index i = 0; i < signals.rows(); ++i) {
    for (Eigen::Index j = 0; j < signals.cols(); ++j) {
      const double n = sigma * rng.normal();
      signals(i, j) += n;
      noise_power += n * n;
    }
  }
  return 10.0 * std::log10(signal_power / noise_power);
}

Eigen::VectorXd to_time_domain(const Eigen::VectorXcd& spectrum) {
  SpectralTransform transform(static_cast<int>(spectrum.size()));
  return transform.to_time_domain(spectrum);
}

Eigen::VectorXcd to_spectrum(const Eigen::VectorXd& signal) {
  SpectralTransform transform(static_cast<int>(signal.size()));
  return transform.to_spectrum(signal);
}

namespace {

// Draw one damage set: distinct quadrants chosen uniformly, one point uniform
// inside each, re-drawn wholesale if any scatter path degenerates. Truths are
// kept in ascending quadrant order.
std::vector<Point2> draw_damages(const ScenarioConfig& sc,
                                 const SensorArray& sensors, int k,
                                 RngStream& rng) {
  const double hl = 0.5 * sc.plate_length;
  const double hw = 0.5 * sc.plate_width;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    std::array<int, 4> quads = {0, 1, 2, 3};
    for (int j = 0; j < k; ++j) {
      const int pick = j + static_cast<int>(rng.uniform_index(4 - j));
      std::swap(quads[j], quads[pick]);
    }
    std::sort(quads.begin(), quads.begin() + k);
    std::vector<Point2> damages;
    damages.reserve(k);
    for (int j = 0; j < k; ++j) {
      const double x0 = (quads[j] & 1) ? hl : 0.0;
      const double y0 = (quads[j] & 2) ? hw : 0.0;
      damages.push_back({rng.uniform(x0, x0 + hl), rng.uniform(y0, y0 + hw)});
    }
    bool ok = true;
    for (const auto& [a, b] : sensors.pairs) {
      for (const auto& d : damages) {
        const double r = distance(sensors.positions[a], d) +
                         distance(d, sensors.positions[b]);
        if (!(r > kMinPathLength)) {
          ok = false;
          break;
        }
      }
      if (!ok) break;
    }
    if (ok) return damages;
  }
  throw SolverError("failed to draw an admissible damage set");
}

}  // namespace

int Dataset::samples_per_split(int s) const {
  return static_cast<int>(split(s).size());
}

const std::vector<Sample>& Dataset::split(int s) const {
  switch (s) {
    case 0:
      return train;
    case 1:
      return val;
    case 2:
      return test;
  }
  throw InvalidParameter("split index must be 0, 1 or 2");
}

Eigen::MatrixXd Dataset::raw_signals(const Sample& sample) const {
  Eigen::MatrixXd raw = sample.signals;
  const Eigen::Index qt = raw.cols();
  for (Eigen::Index m = 0; m < raw.rows(); ++m) {
    for (Eigen::Index t = 0; t < qt; ++t) {
      const Eigen::Index f = m * qt + t;
      raw(m, t) = raw(m, t) * feature_std[f] + feature_mean[f];
    }
  }
  return raw;
}

Eigen::VectorXd Dataset::input_vector(const Sample& sample) const {
  const Eigen::Index qt = sample.signals.cols();
  Eigen::VectorXd v(sample.signals.rows() * qt);
  for (Eigen::Index m = 0; m < sample.signals.rows(); ++m) {
    for (Eigen::Index t = 0; t < qt; ++t) v[m * qt + t] = sample.signals(m, t);
  }
  return v;
}

Eigen::MatrixXcd Dataset::measured_spectra(const Sample& sample) const {
  if (sample.spectra.size() > 0) return sample.spectra;
  const Eigen::MatrixXd raw = raw_signals(sample);
  SpectralTransform transform(static_cast<int>(raw.cols()));
  Eigen::MatrixXcd spectra(raw.rows(), raw.cols());
  for (Eigen::Index m = 0; m < raw.rows(); ++m) {
    spectra.row(m) = transform.to_spectrum(raw.row(m).transpose()).transpose();
  }
  return spectra;
}

Dataset generate_dataset(const ScenarioConfig& scenario,
                         const SplitCounts& counts) {
  scenario.validate();
  if (counts.train < 0 || counts.val < 0 || counts.test < 0) {
    throw InvalidParameter("split counts must be nonnegative");
  }

  Dataset ds;
  ds.scenario = scenario;
  // resolve per-source seeds once so the manifest can reproduce them
  auto& unc = ds.scenario.uncertainty;
  if (!unc.noise_seed) {
    unc.noise_seed = derive_seed(scenario.master_seed, {streams::kNoiseRoot});
  }
  if (!unc.distortion_seed) {
    unc.distortion_seed =
        derive_seed(scenario.master_seed, {streams::kDistortionRoot});
  }

  const auto table = dispersion::solve_rayleigh_lamb(scenario.material,
                                                     scenario.grid);
  RngStream sensor_rng =
      RngStream::derive(scenario.master_seed, {streams::kSensors});
  ds.sensors = SensorArray::random(scenario.sensor_count, scenario.plate_length,
                                   scenario.plate_width, sensor_rng);

  const int n = scenario.grid.num_points;
  const int num_pairs = ds.sensors.num_pairs();
  Eigen::VectorXd window_weights(n);
  for (int q = 0; q < n; ++q) {
    window_weights[q] = scenario.window.weight(scenario.grid.frequency_hz(q));
  }
  SpectralTransform transform(n);

  auto make_sample = [&](std::uint64_t split, std::uint64_t index) {
    RngStream loc_rng = RngStream::derive(scenario.master_seed,
                                          {streams::kLocations, split, index});
    RngStream alpha_rng =
        RngStream::derive(*unc.distortion_seed, {streams::kAlpha, split, index});
    RngStream noise_rng =
        RngStream::derive(*unc.noise_seed, {streams::kNoise, split, index});

    int k = scenario.damages.count;
    if (scenario.damages.policy == DamagePolicy::UpTo) {
      k = 1 + static_cast<int>(loc_rng.uniform_index(scenario.damages.count));
    }
    Sample sample;
    sample.truth = draw_damages(scenario, ds.sensors, k, loc_rng);
    sample.alpha = sample_alpha(scenario.uncertainty.w_distort, alpha_rng);

    Eigen::MatrixXcd spectra = Eigen::MatrixXcd::Zero(num_pairs, n);
    for (int m = 0; m < num_pairs; ++m) {
      const auto& [a, b] = ds.sensors.pairs[m];
      Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(n);
      for (const auto& d : sample.truth) {
        acc += scatter_spectrum(table, ds.sensors.positions[a],
                                ds.sensors.positions[b], d, sample.alpha);
      }
      spectra.row(m) =
          acc.cwiseProduct(window_weights.cast<std::complex<double>>())
              .transpose();
    }

    sample.signals.resize(num_pairs, n);
    for (int m = 0; m < num_pairs; ++m) {
      sample.signals.row(m) =
          transform.to_time_domain(spectra.row(m).transpose()).transpose();
    }
    sample.realized_snr_db =
        add_awgn(sample.signals, scenario.uncertainty.snr_db, noise_rng);

    if (retain_spectra(scenario.keep_spectra, split)) {
      sample.spectra.resize(num_pairs, n);
      for (int m = 0; m < num_pairs; ++m) {
        sample.spectra.row(m) =
            transform.to_spectrum(sample.signals.row(m).transpose())
                .transpose();
      }
    }
    return sample;
  };

  ds.train.reserve(counts.train);
  ds.val.reserve(counts.val);
  ds.test.reserve(counts.test);
  for (int i = 0; i < counts.train; ++i) {
    ds.train.push_back(make_sample(kSplitTrain, i));
  }
  for (int i = 0; i < counts.val; ++i) ds.val.push_back(make_sample(kSplitVal, i));
  for (int i = 0; i < counts.test; ++i) {
    ds.test.push_back(make_sample(kSplitTest, i));
  }

  // per-feature standardization from the raw train split; degenerate features
  // keep scale 1 so they pass through centered but unscaled
  const Eigen::Index dim = static_cast<Eigen::Index>(num_pairs) * n;
  ds.feature_mean = Eigen::VectorXd::Zero(dim);
  ds.feature_std = Eigen::VectorXd::Ones(dim);
  if (!ds.train.empty()) {
    const double inv_count = 1.0 / static_cast<double>(ds.train.size());
    for (const auto& s : ds.train) {
      for (int m = 0; m < num_pairs; ++m) {
        for (int t = 0; t < n; ++t) {
          ds.feature_mean[m * n + t] += s.signals(m, t) * inv_count;
        }
      }
    }
    Eigen::VectorXd var = Eigen::VectorXd::Zero(dim);
    for (const auto& s : ds.train) {
      for (int m = 0; m < num_pairs; ++m) {
        for (int t = 0; t < n; ++t) {
          const double d = s.signals(m, t) - ds.feature_mean[m * n + t];
          var[m * n + t] += d * d * inv_count;
        }
      }
    }
    for (Eigen::Index f = 0; f < dim; ++f) {
      const double sd = std::sqrt(var[f]);
      ds.feature_std[f] = sd > 1e-12 ? sd : 1.0;
    }
  }
  auto standardize = [&](std::vector<Sample>& split) {
    for (auto& s : split) {
      for (int m = 0; m < num_pairs; ++m) {
        for (int t = 0; t < n; ++t) {
          s.signals(m, t) = (s.signals(m, t) - ds.feature_mean[m * n + t]) /
                            ds.feature_std[m * n + t];
        }
      }
    }
  };
  standardize(ds.train);
  standardize(ds.val);
  standardize(ds.test);

  log_info("generated dataset: train " + std::to_string(ds.train.size()) +
           ", val " + std::to_string(ds.val.size()) + ", test " +
           std::to_string(ds.test.size()));
  return ds;
}

}  // namespace wavelocate::wavefield
