#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <ostream>
#include <span>
#include <vector>

#include "wavelocate/dispersion.hpp"
#include "wavelocate/geometry.hpp"
#include "wavelocate/wavefield.hpp"

namespace wavelocate::mfp {

// Regular candidate grid over the plate, row-major with x fastest; both axes
// include the plate edges.
struct QueryGrid {
  double length = 1.0;
  double width = 1.0;
  int nx = 100;
  int ny = 100;

  void validate() const;
  int size() const { return nx * ny; }
  Point2 point(int index) const {
    const int iy = index / nx;
    const int ix = index % nx;
    return {length * ix / static_cast<double>(nx - 1),
            width * iy / static_cast<double>(ny - 1)};
  }
  int quadrant(int index) const {
    return quadrant_of(point(index), length, width);
  }
};

struct AmbiguitySurface {
  QueryGrid grid;
  Eigen::VectorXd values;  // one nonnegative score per grid point
};

// Matched-field localizer. Correlates measured spectra against modeled
// scatter spectra at every grid point. Model spectra are cached up front when
// they fit the byte budget, otherwise recomputed per call.
class MfpEngine {
 public:
  MfpEngine(const dispersion::DispersionTable& table,
            const wavefield::SensorArray& sensors, const QueryGrid& grid,
            const wavefield::ExcitationWindow& window = {},
            std::size_t cache_budget_bytes = std::size_t{512} << 20);

  // modeled spectrum of one sensor pair for a damage at grid_point, undistorted
  Eigen::VectorXcd model_spectrum(int pair_index, const Point2& grid_point) const;

  // normalized correlation surface for one sample of measured spectra
  // (num_pairs x num_bins)
  AmbiguitySurface ambiguity(const Eigen::MatrixXcd& data_spectra) const;

  // shared scan over many samples; one surface per input sample
  std::vector<AmbiguitySurface> ambiguity_batch(
      const std::vector<const Eigen::MatrixXcd*>& samples) const;

  const QueryGrid& grid() const { return grid_; }
  bool cache_enabled() const { return !cache_.empty(); }

 private:
  Eigen::MatrixXcd model_matrix(int point_index) const;

  dispersion::DispersionTable table_;
  wavefield::SensorArray sensors_;
  QueryGrid grid_;
  Eigen::VectorXd window_weights_;
  // cached model spectra, flattened per point (num_pairs * n entries each)
  std::vector<std::complex<double>> cache_;
  std::vector<double> model_norms_;  // Frobenius norm squared per point
};

// Peak extraction. For one damage returns the global argmax; for several the
// caller supplies the quadrant each damage is known to occupy and the peak is
// taken inside each listed quadrant, in order. Ties resolve to the lowest
// row-major index.
std::vector<Point2> localize(const AmbiguitySurface& surface, int num_damages,
                             std::span<const int> quadrants = {});

// CSV rows x,y,b; PGM is a 16-bit grayscale map of the min-max scaled surface.
void write_surface_csv(const AmbiguitySurface& surface, std::ostream& out);
void write_surface_pgm(const AmbiguitySurface& surface, std::ostream& out);

}  // namespace wavelocate::mfp
