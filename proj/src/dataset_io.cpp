#include <cstdint>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "f64_io.hpp"
#include "wavelocate/errors.hpp"
#include "wavelocate/wavefield.hpp"

namespace wavelocate::wavefield {

namespace {

using detail::get_f64;
using detail::put_f64;
using nlohmann::ordered_json;

constexpr const char* kFormat = "wavelocate-ds/1";

ordered_json snr_to_json(double snr_db) {
  if (std::isinf(snr_db) && snr_db > 0.0) return "infinite";
  return snr_db;
}

double snr_from_json(const ordered_json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "infinite") {
      return std::numeric_limits<double>::infinity();
    }
    throw IoError("unrecognized snr_db value in manifest");
  }
  return j.get<double>();
}

// Blob layout per sample: standardized signals row by row (num_pairs * n),
// truth coordinates padded with NaN to the per-dataset maximum damage count,
// the true count, alpha and the realized SNR.
void write_split(const std::filesystem::path& path,
                 const std::vector<Sample>& split, int num_pairs, int n,
                 int max_damages) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& s : split) {
    for (int m = 0; m < num_pairs; ++m) {
      for (int t = 0; t < n; ++t) put_f64(out, s.signals(m, t));
    }
    for (int d = 0; d < max_damages; ++d) {
      if (d < static_cast<int>(s.truth.size())) {
        put_f64(out, s.truth[d].x);
        put_f64(out, s.truth[d].y);
      } else {
        put_f64(out, nan);
        put_f64(out, nan);
      }
    }
    put_f64(out, static_cast<double>(s.truth.size()));
    put_f64(out, s.alpha);
    put_f64(out, s.realized_snr_db);
  }
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<Sample> read_split(const std::filesystem::path& path, int count,
                               int num_pairs, int n, int max_damages) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<Sample> split;
  split.reserve(count);
  for (int i = 0; i < count; ++i) {
    Sample s;
    s.signals.resize(num_pairs, n);
    for (int m = 0; m < num_pairs; ++m) {
      for (int t = 0; t < n; ++t) s.signals(m, t) = get_f64(in);
    }
    std::vector<Point2> padded(max_damages);
    for (int d = 0; d < max_damages; ++d) {
      padded[d].x = get_f64(in);
      padded[d].y = get_f64(in);
    }
    const int k = static_cast<int>(get_f64(in));
    if (k < 0 || k > max_damages) {
      throw IoError("corrupt damage count in " + path.string());
    }
    s.truth.assign(padded.begin(), padded.begin() + k);
    s.alpha = get_f64(in);
    s.realized_snr_db = get_f64(in);
    split.push_back(std::move(s));
  }
  char extra;
  if (in.read(&extra, 1)) {
    throw IoError("trailing bytes in " + path.string());
  }
  return split;
}

}  // namespace

void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  const auto& sc = ds.scenario;
  const int n = sc.grid.num_points;
  const int num_pairs = ds.sensors.num_pairs();
  const int max_damages = sc.damages.max_count();

  ordered_json manifest;
  manifest["format"] = kFormat;
  manifest["plate"] = {{"length", sc.plate_length},
                       {"width", sc.plate_width},
                       {"youngs_modulus", sc.material.youngs_modulus},
                       {"poisson_ratio", sc.material.poisson_ratio},
                       {"density", sc.material.density},
                       {"thickness", sc.material.thickness}};
  ordered_json positions = ordered_json::array();
  for (const auto& p : ds.sensors.positions) positions.push_back({p.x, p.y});
  ordered_json pairs = ordered_json::array();
  for (const auto& [a, b] : ds.sensors.pairs) pairs.push_back({a, b});
  manifest["sensors"] = {{"count", sc.sensor_count},
                         {"positions", positions},
                         {"pairs", pairs}};
  manifest["frequencies"] = {{"num_points", n},
                             {"f_min_hz", sc.grid.f_min_hz},
                             {"f_max_hz", sc.grid.f_max_hz}};
  manifest["window"] = {
      {"kind",
       sc.window.kind == ExcitationWindow::Kind::Gaussian ? "gaussian" : "none"},
      {"center_hz", sc.window.center_hz},
      {"sigma_hz", sc.window.sigma_hz}};
  manifest["uncertainty"] = {
      {"w_distort", sc.uncertainty.w_distort},
      {"snr_db", snr_to_json(sc.uncertainty.snr_db)},
      {"alpha_bounds",
       {1.0 - sc.uncertainty.w_distort, 1.0 + sc.uncertainty.w_distort}},
      {"noise_seed", sc.uncertainty.noise_seed.value()},
      {"distortion_seed", sc.uncertainty.distortion_seed.value()}};
  manifest["damages"] = {
      {"policy", sc.damages.policy == DamagePolicy::UpTo ? "up_to" : "fixed"},
      {"count", sc.damages.count}};
  manifest["seeds"] = {{"master", sc.master_seed}};
  manifest["splits"] = {{"train", static_cast<int>(ds.train.size())},
                        {"val", static_cast<int>(ds.val.size())},
                        {"test", static_cast<int>(ds.test.size())}};
  const char* retention =
      sc.keep_spectra == SpectraRetention::All
          ? "all"
          : sc.keep_spectra == SpectraRetention::TestOnly ? "test" : "none";
  manifest["keep_spectra"] = retention;
  manifest["standardization"] = {
      {"mean", std::vector<double>(ds.feature_mean.data(),
                                   ds.feature_mean.data() + ds.feature_mean.size())},
      {"std", std::vector<double>(ds.feature_std.data(),
                                  ds.feature_std.data() + ds.feature_std.size())}};

  std::ofstream mf(dir / "manifest.json", std::ios::trunc);
  if (!mf) throw IoError("cannot write manifest.json");
  mf << manifest.dump(2) << "\n";
  if (!mf) throw IoError("manifest.json write failed");

  write_split(dir / "train.f64", ds.train, num_pairs, n, max_damages);
  write_split(dir / "val.f64", ds.val, num_pairs, n, max_damages);
  write_split(dir / "test.f64", ds.test, num_pairs, n, max_damages);
}

Dataset load_dataset(const std::filesystem::path& dir) {
  std::ifstream mf(dir / "manifest.json");
  if (!mf) throw IoError("cannot open " + (dir / "manifest.json").string());
  ordered_json manifest;
  try {
    mf >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed manifest.json: " + std::string(e.what()));
  }
  try {
    if (manifest.at("format").get<std::string>() != kFormat) {
      throw IoError("unsupported dataset format " +
                    manifest["format"].get<std::string>());
    }
    Dataset ds;
    auto& sc = ds.scenario;
    const auto& plate = manifest.at("plate");
    sc.plate_length = plate.at("length").get<double>();
    sc.plate_width = plate.at("width").get<double>();
    sc.material.youngs_modulus = plate.at("youngs_modulus").get<double>();
    sc.material.poisson_ratio = plate.at("poisson_ratio").get<double>();
    sc.material.density = plate.at("density").get<double>();
    sc.material.thickness = plate.at("thickness").get<double>();

    const auto& sensors = manifest.at("sensors");
    sc.sensor_count = sensors.at("count").get<int>();
    for (const auto& p : sensors.at("positions")) {
      ds.sensors.positions.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    }
    for (const auto& p : sensors.at("pairs")) {
      ds.sensors.pairs.emplace_back(p.at(0).get<int>(), p.at(1).get<int>());
    }

    const auto& freq = manifest.at("frequencies");
    sc.grid.num_points = freq.at("num_points").get<int>();
    sc.grid.f_min_hz = freq.at("f_min_hz").get<double>();
    sc.grid.f_max_hz = freq.at("f_max_hz").get<double>();

    const auto& window = manifest.at("window");
    sc.window.kind = window.at("kind").get<std::string>() == "gaussian"
                         ? ExcitationWindow::Kind::Gaussian
                         : ExcitationWindow::Kind::None;
    sc.window.center_hz = window.at("center_hz").get<double>();
    sc.window.sigma_hz = window.at("sigma_hz").get<double>();

    const auto& unc = manifest.at("uncertainty");
    sc.uncertainty.w_distort = unc.at("w_distort").get<double>();
    sc.uncertainty.snr_db = snr_from_json(unc.at("snr_db"));
    sc.uncertainty.noise_seed = unc.at("noise_seed").get<std::uint64_t>();
    sc.uncertainty.distortion_seed =
        unc.at("distortion_seed").get<std::uint64_t>();

    const auto& damages = manifest.at("damages");
    sc.damages.policy = damages.at("policy").get<std::string>() == "up_to"
                            ? DamagePolicy::UpTo
                            : DamagePolicy::Fixed;
    sc.damages.count = damages.at("count").get<int>();

    sc.master_seed = manifest.at("seeds").at("master").get<std::uint64_t>();
    const std::string retention = manifest.at("keep_spectra").get<std::string>();
    sc.keep_spectra = retention == "all"
                          ? SpectraRetention::All
                          : retention == "test" ? SpectraRetention::TestOnly
                                                : SpectraRetention::None;

    const auto mean = manifest.at("standardization").at("mean")
                          .get<std::vector<double>>();
    const auto sd =
        manifest.at("standardization").at("std").get<std::vector<double>>();
    const int num_pairs = ds.sensors.num_pairs();
    const int n = sc.grid.num_points;
    const std::size_t dim = static_cast<std::size_t>(num_pairs) * n;
    if (mean.size() != dim || sd.size() != dim) {
      throw IoError("standardization vectors do not match the data shape");
    }
    ds.feature_mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), dim);
    ds.feature_std = Eigen::Map<const Eigen::VectorXd>(sd.data(), dim);

    const auto& splits = manifest.at("splits");
    ds.train = read_split(dir / "train.f64", splits.at("train").get<int>(),
                          num_pairs, n, sc.damages.max_count());
    ds.val = read_split(dir / "val.f64", splits.at("val").get<int>(), num_pairs,
                        n, sc.damages.max_count());
    ds.test = read_split(dir / "test.f64", splits.at("test").get<int>(),
                         num_pairs, n, sc.damages.max_count());
    return ds;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("manifest.json is missing required fields: " +
                  std::string(e.what()));
  }
}

}  // namespace wavelocate::wavefield
