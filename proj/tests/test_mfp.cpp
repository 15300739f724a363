#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>
#include <vector>

#include "wavelocate/dispersion.hpp"
#include "wavelocate/errors.hpp"
#include "wavelocate/mfp.hpp"
#include "wavelocate/wavefield.hpp"

using namespace wavelocate;
using namespace wavelocate::mfp;

namespace {

struct Setup {
  dispersion::DispersionTable table;
  wavefield::SensorArray sensors;

  Setup(int n_sensors = 4, int bins = 32, std::uint64_t seed = 3) {
    dispersion::FrequencyGrid grid{bins, -400e3, 400e3};
    table = analytic_dispersion(
        dispersion::AnalyticModel::nondispersive(3100.0), grid);
    RngStream rng(seed);
    sensors = wavefield::SensorArray::random(n_sensors, 1.0, 1.0, rng);
  }

  Eigen::MatrixXcd spectra_for(const std::vector<Point2>& damages,
                               double alpha = 1.0) const {
    const int n = table.grid.num_points;
    Eigen::MatrixXcd out =
        Eigen::MatrixXcd::Zero(sensors.num_pairs(), n);
    for (int m = 0; m < sensors.num_pairs(); ++m) {
      const auto& [a, b] = sensors.pairs[m];
      for (const auto& d : damages) {
        out.row(m) += wavefield::scatter_spectrum(table, sensors.positions[a],
                                                  sensors.positions[b], d,
                                                  alpha)
                          .transpose();
      }
    }
    return out;
  }
};

// direct transcription of the normalized correlation: |sum_m sum_q x z*|^2
// over sum_m sum_q |z|^2, looping scalar by scalar
double brute_force_score(const Eigen::MatrixXcd& data,
                         const Eigen::MatrixXcd& model) {
  std::complex<double> corr(0.0, 0.0);
  double denom = 0.0;
  for (Eigen::Index m = 0; m < data.rows(); ++m) {
    for (Eigen::Index q = 0; q < data.cols(); ++q) {
      corr += data(m, q) * std::conj(model(m, q));
      denom += std::norm(model(m, q));
    }
  }
  return std::norm(corr) / denom;
}

}  // namespace

TEST_CASE("query grid covers the plate edges in row-major order") {
  QueryGrid grid{2.0, 1.0, 5, 3};
  CHECK(grid.size() == 15);
  CHECK(grid.point(0).x == 0.0);
  CHECK(grid.point(0).y == 0.0);
  CHECK(grid.point(4).x == 2.0);
  CHECK(grid.point(4).y == 0.0);
  CHECK(grid.point(14).x == 2.0);
  CHECK(grid.point(14).y == 1.0);
  CHECK(grid.point(7).x == doctest::Approx(1.0));  // x fastest
  CHECK_THROWS_AS((QueryGrid{1.0, 1.0, 1, 4}.validate()), InvalidParameter);
  CHECK_THROWS_AS((QueryGrid{-1.0, 1.0, 4, 4}.validate()), InvalidParameter);
}

TEST_CASE("model spectrum equals the undistorted scatter response") {
  Setup s;
  QueryGrid grid{1.0, 1.0, 7, 7};
  MfpEngine engine(s.table, s.sensors, grid);
  const Point2 p = grid.point(17);
  for (int m = 0; m < s.sensors.num_pairs(); ++m) {
    const auto& [a, b] = s.sensors.pairs[m];
    const Eigen::VectorXcd expected = wavefield::scatter_spectrum(
        s.table, s.sensors.positions[a], s.sensors.positions[b], p, 1.0);
    const Eigen::VectorXcd got = engine.model_spectrum(m, p);
    CHECK((got - expected).lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("model spectrum applies the excitation window") {
  Setup s;
  wavefield::ExcitationWindow window;
  window.kind = wavefield::ExcitationWindow::Kind::Gaussian;
  window.center_hz = 200e3;
  window.sigma_hz = 60e3;
  QueryGrid grid{1.0, 1.0, 5, 5};
  MfpEngine engine(s.table, s.sensors, grid, window);
  const Point2 p = grid.point(12);
  const auto& [a, b] = s.sensors.pairs[1];
  Eigen::VectorXcd expected = wavefield::scatter_spectrum(
      s.table, s.sensors.positions[a], s.sensors.positions[b], p, 1.0);
  for (int q = 0; q < s.table.grid.num_points; ++q) {
    expected[q] *= window.weight(s.table.grid.frequency_hz(q));
  }
  const Eigen::VectorXcd got = engine.model_spectrum(1, p);
  CHECK((got - expected).lpNorm<Eigen::Infinity>() < 1e-15);
}

TEST_CASE("ambiguity matches a brute-force double sum everywhere") {
  Setup s;
  QueryGrid grid{1.0, 1.0, 11, 11};
  MfpEngine engine(s.table, s.sensors, grid);
  const Eigen::MatrixXcd data = s.spectra_for({{0.63, 0.28}}, 1.07);
  const auto surface = engine.ambiguity(data);
  REQUIRE(surface.values.size() == grid.size());
  for (int p = 0; p < grid.size(); ++p) {
    Eigen::MatrixXcd model(s.sensors.num_pairs(), s.table.grid.num_points);
    for (int m = 0; m < s.sensors.num_pairs(); ++m) {
      model.row(m) = engine.model_spectrum(m, grid.point(p)).transpose();
    }
    const double expected = brute_force_score(data, model);
    CHECK(surface.values[p] ==
          doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("data generated at a grid point peaks exactly there") {
  Setup s(5, 64);
  QueryGrid grid{1.0, 1.0, 9, 9};
  MfpEngine engine(s.table, s.sensors, grid);
  RngStream rng(17);
  for (int rep = 0; rep < 10; ++rep) {
    const int target = static_cast<int>(rng.uniform_index(grid.size()));
    const Eigen::MatrixXcd data = s.spectra_for({grid.point(target)});
    const auto surface = engine.ambiguity(data);
    Eigen::Index peak;
    surface.values.maxCoeff(&peak);
    CHECK(peak == target);
    const auto located = localize(surface, 1);
    CHECK(located[0].x == grid.point(target).x);
    CHECK(located[0].y == grid.point(target).y);
  }
}

TEST_CASE("surfaces are invariant to data scaling and pair order") {
  Setup s;
  QueryGrid grid{1.0, 1.0, 8, 8};
  MfpEngine engine(s.table, s.sensors, grid);
  const Eigen::MatrixXcd data = s.spectra_for({{0.4, 0.7}});
  const auto base = engine.ambiguity(data);

  // complex unit phase times positive gain on the whole sample
  const std::complex<double> gain = 2.5 * std::polar(1.0, 0.7);
  const auto scaled = engine.ambiguity(gain * data);
  for (int p = 0; p < grid.size(); ++p) {
    CHECK(scaled.values[p] ==
          doctest::Approx(std::norm(gain) * base.values[p]).epsilon(1e-12));
  }
  // swapping two sensor pairs in both data and engine leaves scores unchanged
  wavefield::SensorArray swapped = s.sensors;
  std::swap(swapped.pairs[0], swapped.pairs[2]);
  Eigen::MatrixXcd swapped_data = data;
  swapped_data.row(0).swap(swapped_data.row(2));
  MfpEngine engine2(s.table, swapped, grid);
  const auto reordered = engine2.ambiguity(swapped_data);
  for (int p = 0; p < grid.size(); ++p) {
    CHECK(reordered.values[p] == doctest::Approx(base.values[p]).epsilon(1e-12));
  }
}

TEST_CASE("batch ambiguity equals per-sample calls") {
  Setup s;
  QueryGrid grid{1.0, 1.0, 6, 6};
  MfpEngine engine(s.table, s.sensors, grid);
  const Eigen::MatrixXcd d1 = s.spectra_for({{0.2, 0.3}});
  const Eigen::MatrixXcd d2 = s.spectra_for({{0.8, 0.6}, {0.1, 0.9}});
  const auto batch = engine.ambiguity_batch({&d1, &d2});
  REQUIRE(batch.size() == 2);
  CHECK((batch[0].values - engine.ambiguity(d1).values)
            .lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((batch[1].values - engine.ambiguity(d2).values)
            .lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("streaming mode reproduces cached scores") {
  Setup s;
  QueryGrid grid{1.0, 1.0, 10, 10};
  MfpEngine cached(s.table, s.sensors, grid);
  MfpEngine streamed(s.table, s.sensors, grid, {}, 0);
  CHECK(cached.cache_enabled());
  CHECK_FALSE(streamed.cache_enabled());
  const Eigen::MatrixXcd data = s.spectra_for({{0.33, 0.71}});
  const auto a = cached.ambiguity(data);
  const auto b = streamed.ambiguity(data);
  CHECK((a.values - b.values).lpNorm<Eigen::Infinity>() <
        1e-12 * a.values.maxCoeff());
}

TEST_CASE("localize picks per-quadrant peaks for multiple damages") {
  QueryGrid grid{1.0, 1.0, 10, 10};
  AmbiguitySurface surface;
  surface.grid = grid;
  surface.values = Eigen::VectorXd::Zero(grid.size());
  // plant peaks in quadrant 0 (lower left) and quadrant 3 (upper right)
  int q0 = -1, q3 = -1;
  for (int p = 0; p < grid.size(); ++p) {
    if (grid.quadrant(p) == 0 && q0 < 0) q0 = p;
    if (grid.quadrant(p) == 3 && q3 < 0) q3 = p;
  }
  surface.values[q0] = 2.0;
  surface.values[q3] = 3.0;
  // a taller global peak in quadrant 1 must not distract the constrained scan
  int q1 = -1;
  for (int p = 0; p < grid.size(); ++p) {
    if (grid.quadrant(p) == 1) {
      q1 = p;
      break;
    }
  }
  surface.values[q1] = 10.0;

  const std::vector<int> quadrants = {0, 3};
  const auto points = localize(surface, 2, quadrants);
  REQUIRE(points.size() == 2);
  CHECK(points[0].x == grid.point(q0).x);
  CHECK(points[0].y == grid.point(q0).y);
  CHECK(points[1].x == grid.point(q3).x);
  CHECK(points[1].y == grid.point(q3).y);

  // single damage without quadrant knowledge takes the global argmax
  const auto single = localize(surface, 1);
  CHECK(single[0].x == grid.point(q1).x);
  CHECK(single[0].y == grid.point(q1).y);
}

TEST_CASE("localize breaks ties toward the lowest row-major index") {
  QueryGrid grid{1.0, 1.0, 4, 4};
  AmbiguitySurface surface;
  surface.grid = grid;
  surface.values = Eigen::VectorXd::Ones(grid.size());
  const auto points = localize(surface, 1);
  CHECK(points[0].x == grid.point(0).x);
  CHECK(points[0].y == grid.point(0).y);
}

TEST_CASE("localize validates its inputs") {
  QueryGrid grid{1.0, 1.0, 4, 4};
  AmbiguitySurface surface;
  surface.grid = grid;
  surface.values = Eigen::VectorXd::Ones(grid.size());
  CHECK_THROWS_AS(localize(surface, 0), InvalidDamageCount);
  CHECK_THROWS_AS(localize(surface, 5), InvalidDamageCount);
  const std::vector<int> wrong = {0};
  CHECK_THROWS_AS(localize(surface, 2, wrong), InvalidDamageCount);
  const std::vector<int> bad = {0, 7};
  CHECK_THROWS_AS(localize(surface, 2, bad), InvalidParameter);
  AmbiguitySurface empty;
  empty.grid = grid;
  CHECK_THROWS_AS(localize(empty, 1), DimensionMismatch);
}

TEST_CASE("ambiguity validates data dimensions and rejects zero models") {
  Setup s;
  QueryGrid grid{1.0, 1.0, 5, 5};
  MfpEngine engine(s.table, s.sensors, grid);
  Eigen::MatrixXcd wrong(s.sensors.num_pairs() + 1, s.table.grid.num_points);
  wrong.setZero();
  CHECK_THROWS_AS(engine.ambiguity(wrong), DimensionMismatch);

  // a window this narrow, centered between bins, underflows every weight to
  // zero, so the modeled spectra vanish identically
  wavefield::ExcitationWindow dead;
  dead.kind = wavefield::ExcitationWindow::Kind::Gaussian;
  dead.center_hz = 12.5e3;
  dead.sigma_hz = 1.0;
  MfpEngine hollow(s.table, s.sensors, grid, dead);
  Eigen::MatrixXcd data(s.sensors.num_pairs(), s.table.grid.num_points);
  data.setOnes();
  CHECK_THROWS_AS(hollow.ambiguity(data), EmptyModel);
}

TEST_CASE("surface csv lists x,y,score rows in grid order") {
  QueryGrid grid{1.0, 2.0, 3, 2};
  AmbiguitySurface surface;
  surface.grid = grid;
  surface.values = Eigen::VectorXd::LinSpaced(6, 0.0, 5.0);
  std::ostringstream out;
  write_surface_csv(surface, out);
  std::istringstream in(out.str());
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "x,y,b");
  int rows = 0;
  while (std::getline(in, line)) {
    double x, y, b;
    REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf", &x, &y, &b) == 3);
    CHECK(x == surface.grid.point(rows).x);
    CHECK(y == surface.grid.point(rows).y);
    CHECK(b == surface.values[rows]);
    ++rows;
  }
  CHECK(rows == 6);
}

TEST_CASE("surface pgm is 16-bit big-endian with min-max scaling") {
  QueryGrid grid{1.0, 1.0, 3, 2};
  AmbiguitySurface surface;
  surface.grid = grid;
  surface.values.resize(6);
  surface.values << 1.0, 2.0, 3.0, 4.0, 5.0, 9.0;
  std::ostringstream out;
  write_surface_pgm(surface, out);
  const std::string blob = out.str();
  std::istringstream in(blob);
  std::string magic;
  int w, h, maxval;
  in >> magic >> w >> h >> maxval;
  CHECK(magic == "P5");
  CHECK(w == 3);
  CHECK(h == 2);
  CHECK(maxval == 65535);
  in.get();  // single whitespace after the header
  const std::size_t header = static_cast<std::size_t>(in.tellg());
  REQUIRE(blob.size() == header + 2 * 6);
  auto pixel = [&](int i) {
    const unsigned char hi = blob[header + 2 * i];
    const unsigned char lo = blob[header + 2 * i + 1];
    return (static_cast<int>(hi) << 8) | lo;
  };
  CHECK(pixel(0) == 0);      // min maps to 0
  CHECK(pixel(5) == 65535);  // max maps to full scale
  CHECK(pixel(1) == static_cast<int>(std::lround(65535.0 * (2.0 - 1.0) / 8.0)));
}

TEST_CASE("distorted and noisy data still peak near the damage") {
  // the end-to-end robustness claim lives in the acceptance suite; this is a
  // cheap guard that the correlation degrades gracefully
  Setup s(6, 128, 9);
  QueryGrid grid{1.0, 1.0, 21, 21};
  MfpEngine engine(s.table, s.sensors, grid);
  const Point2 truth = grid.point(162);
  Eigen::MatrixXcd data = s.spectra_for({truth}, 1.02);
  const auto surface = engine.ambiguity(data);
  const auto points = localize(surface, 1);
  CHECK(distance(points[0], truth) < 0.12);
}
