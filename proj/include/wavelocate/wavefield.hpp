#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "wavelocate/dispersion.hpp"
#include "wavelocate/geometry.hpp"
#include "wavelocate/rng.hpp"

namespace wavelocate::wavefield {

// shortest admissible scatter path (transmitter -> damage -> receiver)
inline constexpr double kMinPathLength = 1e-3;

struct SensorArray {
  std::vector<Point2> positions;
  std::vector<std::pair<int, int>> pairs;  // lexicographic (i, j), i < j

  static SensorArray random(int count, double length, double width,
                            RngStream& rng);
  static std::vector<std::pair<int, int>> all_pairs(int count);
  int num_pairs() const { return static_cast<int>(pairs.size()); }
};

struct UncertaintySpec {
  double w_distort = 0.0;  // velocity distortion half width, [0, 1)
  double snr_db = std::numeric_limits<double>::infinity();
  // Per-source seeds; when unset they are derived from the master seed.
  std::optional<std::uint64_t> noise_seed;
  std::optional<std::uint64_t> distortion_seed;
};

enum class DamagePolicy { Fixed, UpTo };

struct DamageSpec {
  DamagePolicy policy = DamagePolicy::Fixed;
  int count = 1;  // exact count (Fixed) or inclusive upper bound (UpTo)
  int max_count() const { return count; }
};

struct ExcitationWindow {
  enum class Kind { None, Gaussian };
  Kind kind = Kind::None;
  double center_hz = 250e3;
  double sigma_hz = 50e3;
  // weight at frequency f; even in f so real signals stay real
  double weight(double f_hz) const;
};

enum class SpectraRetention { None, TestOnly, All };

struct ScenarioConfig {
  dispersion::PlateMaterial material;
  double plate_length = 1.0;  // m
  double plate_width = 1.0;   // m
  int sensor_count = 8;
  dispersion::FrequencyGrid grid{256, -500e3, 500e3};
  ExcitationWindow window;
  UncertaintySpec uncertainty;
  DamageSpec damages;
  std::uint64_t master_seed = 1;
  SpectraRetention keep_spectra = SpectraRetention::TestOnly;

  void validate() const;
};

struct Sample {
  // sensor-pair time signals, one row per pair; raw at generation time,
  // standardized once the parent dataset is finalized
  Eigen::MatrixXd signals;
  // measured (post-noise) spectra in zero-centered layout; empty unless the
  // retention policy keeps them for this split
  Eigen::MatrixXcd spectra;
  std::vector<Point2> truth;
  double alpha = 1.0;
  double realized_snr_db = std::numeric_limits<double>::infinity();
};

struct SplitCounts {
  int train = 0;
  int val = 0;
  int test = 0;
};

struct Dataset {
  ScenarioConfig scenario;  // with seeds resolved
  SensorArray sensors;
  std::vector<Sample> train, val, test;
  // per-feature standardization computed on the train split (flattened
  // pair-major: feature m * Q_t + t)
  Eigen::VectorXd feature_mean, feature_std;

  int num_pairs() const { return sensors.num_pairs(); }
  int samples_per_split(int split) const;
  const std::vector<Sample>& split(int s) const;

  // undo standardization for one sample
  Eigen::MatrixXd raw_signals(const Sample& sample) const;
  // flattened standardized input vector (network feature layout)
  Eigen::VectorXd input_vector(const Sample& sample) const;
  // stored measured spectra, or the forward transform of the raw signals
  // when the retention policy dropped them
  Eigen::MatrixXcd measured_spectra(const Sample& sample) const;
};

// Frequency response of one transmitter -> damage -> receiver path summed
// over the table's modes, with wavenumbers scaled by the velocity-distortion
// factor alpha. Bins at f = 0 and the unpaired negative Nyquist are zero;
// negative-frequency bins mirror the positive ones so the spectrum is exactly
// conjugate symmetric. Requires a symmetric grid.
Eigen::VectorXcd scatter_spectrum(const dispersion::DispersionTable& table,
                                  const Point2& transmitter,
                                  const Point2& receiver, const Point2& damage,
                                  double alpha);

// One draw of the velocity-distortion factor: a standard normal centered at 1
// truncated to [1 - w, 1 + w] by rejection. w = 0 returns exactly 1.
double sample_alpha(double w_distort, RngStream& rng);

// Adds white Gaussian noise calibrated so the expected SNR over the whole
// matrix equals snr_db. Infinite SNR is a no-op. Returns the realized SNR.
double add_awgn(Eigen::MatrixXd& signals, double snr_db, RngStream& rng);

// Convenience wrappers building a transform of matching size per call; reuse
// a SpectralTransform directly in hot loops.
Eigen::VectorXd to_time_domain(const Eigen::VectorXcd& spectrum);
Eigen::VectorXcd to_spectrum(const Eigen::VectorXd& signal);

// Monte Carlo dataset generation. Deterministic in (scenario, counts): each
// sample draws from streams derived from the master and per-source seeds, so
// the result is independent of evaluation order. Damage locations are drawn
// uniformly inside distinct (randomly chosen) plate quadrants; truth lists
// are sorted by quadrant index.
Dataset generate_dataset(const ScenarioConfig& scenario,
                         const SplitCounts& counts);

// Dataset directory layout: manifest.json plus one little-endian float64
// blob per split.
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace wavelocate::wavefield
