#include "wavelocate/mfp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "wavelocate/errors.hpp"
#include "wavelocate/log.hpp"

namespace wavelocate::mfp {

void QueryGrid::validate() const {
  if (nx < 2 || ny < 2) throw InvalidParameter("query grid needs nx, ny >= 2");
  if (!(length > 0.0) || !(width > 0.0)) {
    throw InvalidParameter("query grid dimensions must be positive");
  }
}

MfpEngine::MfpEngine(const dispersion::DispersionTable& table,
                     const wavefield::SensorArray& sensors,
                     const QueryGrid& grid,
                     const wavefield::ExcitationWindow& window,
                     std::size_t cache_budget_bytes)
    : table_(table), sensors_(sensors), grid_(grid) {
  grid_.validate();
  if (sensors_.pairs.empty()) throw InvalidParameter("sensor array has no pairs");
  const int n = table_.grid.num_points;
  window_weights_.resize(n);
  for (int q = 0; q < n; ++q) {
    window_weights_[q] = window.weight(table_.grid.frequency_hz(q));
  }
  const std::size_t bytes = static_cast<std::size_t>(grid_.size()) *
                            sensors_.pairs.size() * n *
                            sizeof(std::complex<double>);
  if (bytes <= cache_budget_bytes) {
    const int num_pairs = sensors_.num_pairs();
    cache_.resize(static_cast<std::size_t>(grid_.size()) * num_pairs * n);
    model_norms_.resize(grid_.size());
    for (int p = 0; p < grid_.size(); ++p) {
      const Eigen::MatrixXcd z = model_matrix(p);
      std::copy(z.data(), z.data() + z.size(),
                cache_.begin() + static_cast<std::size_t>(p) * z.size());
      model_norms_[p] = z.squaredNorm();
    }
    log_debug("mfp model cache built: " + std::to_string(bytes >> 20) + " MiB");
  } else {
    log_info("mfp model cache of " + std::to_string(bytes >> 20) +
             " MiB exceeds budget; streaming per call");
  }
}

Eigen::VectorXcd MfpEngine::model_spectrum(int pair_index,
                                           const Point2& grid_point) const {
  if (pair_index < 0 || pair_index >= sensors_.num_pairs()) {
    throw InvalidParameter("pair index out of range");
  }
  const auto& [a, b] = sensors_.pairs[pair_index];
  Eigen::VectorXcd z =
      wavefield::scatter_spectrum(table_, sensors_.positions[a],
                                  sensors_.positions[b], grid_point, 1.0);
  return z.cwiseProduct(window_weights_.cast<std::complex<double>>());
}

Eigen::MatrixXcd MfpEngine::model_matrix(int point_index) const {
  const int n = table_.grid.num_points;
  Eigen::MatrixXcd z(sensors_.num_pairs(), n);
  const Point2 p = grid_.point(point_index);
  for (int m = 0; m < sensors_.num_pairs(); ++m) {
    z.row(m) = model_spectrum(m, p).transpose();
  }
  return z;
}

AmbiguitySurface MfpEngine::ambiguity(const Eigen::MatrixXcd& data) const {
  return ambiguity_batch({&data}).front();
}

std::vector<AmbiguitySurface> MfpEngine::ambiguity_batch(
    const std::vector<const Eigen::MatrixXcd*>& samples) const {
  const int n = table_.grid.num_points;
  const int num_pairs = sensors_.num_pairs();
  for (const auto* sample : samples) {
    if (sample->rows() != num_pairs || sample->cols() != n) {
      throw DimensionMismatch(
          "expected spectra of shape " + std::to_string(num_pairs) + "x" +
          std::to_string(n) + ", got " + std::to_string(sample->rows()) + "x" +
          std::to_string(sample->cols()));
    }
  }
  std::vector<AmbiguitySurface> surfaces(samples.size());
  for (auto& s : surfaces) {
    s.grid = grid_;
    s.values.resize(grid_.size());
  }
  const std::size_t stride = static_cast<std::size_t>(num_pairs) * n;
  Eigen::MatrixXcd streamed;
  for (int p = 0; p < grid_.size(); ++p) {
    const std::complex<double>* z_data;
    double denom;
    if (cache_.empty()) {
      streamed = model_matrix(p);
      z_data = streamed.data();
      denom = streamed.squaredNorm();
    } else {
      z_data = cache_.data() + stride * p;
      denom = model_norms_[p];
    }
    if (!(denom > 0.0)) {
      throw EmptyModel("model spectra vanish at grid point " +
                       std::to_string(p));
    }
    Eigen::Map<const Eigen::MatrixXcd> z(z_data, num_pairs, n);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const std::complex<double> corr =
          (samples[i]->cwiseProduct(z.conjugate())).sum();
      surfaces[i].values[p] = std::norm(corr) / denom;
    }
  }
  return surfaces;
}

std::vector<Point2> localize(const AmbiguitySurface& surface, int num_damages,
                             std::span<const int> quadrants) {
  surface.grid.validate();
  if (surface.values.size() != surface.grid.size()) {
    throw DimensionMismatch("surface value count does not match its grid");
  }
  if (num_damages < 1 || num_damages > 4) {
    throw InvalidDamageCount("localize supports 1 to 4 damages, got " +
                             std::to_string(num_damages));
  }
  if (num_damages == 1 && quadrants.empty()) {
    int best = 0;
    for (int p = 1; p < surface.grid.size(); ++p) {
      if (surface.values[p] > surface.values[best]) best = p;
    }
    return {surface.grid.point(best)};
  }
  if (static_cast<int>(quadrants.size()) != num_damages) {
    throw InvalidDamageCount(
        "multi-damage localization needs one quadrant per damage");
  }
  std::vector<Point2> peaks;
  peaks.reserve(num_damages);
  for (int d = 0; d < num_damages; ++d) {
    const int quad = quadrants[d];
    if (quad < 0 || quad > 3) {
      throw InvalidParameter("quadrant index must be in [0, 3]");
    }
    int best = -1;
    for (int p = 0; p < surface.grid.size(); ++p) {
      if (surface.grid.quadrant(p) != quad) continue;
      if (best < 0 || surface.values[p] > surface.values[best]) best = p;
    }
    if (best < 0) throw SolverError("query grid has no points in quadrant " +
                                    std::to_string(quad));
    peaks.push_back(surface.grid.point(best));
  }
  return peaks;
}

void write_surface_csv(const AmbiguitySurface& surface, std::ostream& out) {
  out << "x,y,b\n";
  char buf[96];
  for (int p = 0; p < surface.grid.size(); ++p) {
    const Point2 pt = surface.grid.point(p);
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", pt.x, pt.y,
                  surface.values[p]);
    out << buf;
  }
  if (!out) throw IoError("surface CSV write failed");
}

void write_surface_pgm(const AmbiguitySurface& surface, std::ostream& out) {
  const double lo = surface.values.minCoeff();
  const double hi = surface.values.maxCoeff();
  const double span = hi > lo ? hi - lo : 1.0;
  out << "P5\n" << surface.grid.nx << " " << surface.grid.ny << "\n65535\n";
  for (int p = 0; p < surface.grid.size(); ++p) {
    const double scaled = (surface.values[p] - lo) / span;
    const auto v = static_cast<unsigned>(std::lround(scaled * 65535.0));
    // big-endian sample order per the format
    out.put(static_cast<char>((v >> 8) & 0xFF));
    out.put(static_cast<char>(v & 0xFF));
  }
  if (!out) throw IoError("surface PGM write failed");
}

}  // namespace wavelocate::mfp
