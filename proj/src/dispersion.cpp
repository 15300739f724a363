#include "wavelocate/dispersion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include "wavelocate/errors.hpp"
#include "wavelocate/log.hpp"

namespace wavelocate::dispersion {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
// residual gate applied to every accepted root
constexpr double kResidualTol = 1e-6;

// tan(s h) / s continued through s^2 <= 0: tanh for evanescent partial waves,
// limit h at s = 0. Real-analytic in s^2.
double term_t1(double s2, double h) {
  if (s2 > 0.0) {
    const double s = std::sqrt(s2);
    if (s * h < 1e-12) return h;
    return std::tan(s * h) / s;
  }
  if (s2 < 0.0) {
    const double s = std::sqrt(-s2);
    if (s * h < 1e-12) return h;
    return std::tanh(s * h) / s;
  }
  return h;
}

// s tan(s h) continued through s^2 <= 0
double term_t2(double s2, double h) {
  if (s2 > 0.0) {
    const double s = std::sqrt(s2);
    return s * std::tan(s * h);
  }
  if (s2 < 0.0) {
    const double s = std::sqrt(-s2);
    return -s * std::tanh(s * h);
  }
  return 0.0;
}

struct Characteristic {
  double inv_cl2;  // 1 / cL^2
  double inv_ct2;  // 1 / cT^2
  double h;        // half thickness
  Mode mode;

  Characteristic(const PlateMaterial& m, Mode md) : mode(md) {
    const double cl = m.longitudinal_velocity();
    const double ct = m.shear_velocity();
    inv_cl2 = 1.0 / (cl * cl);
    inv_ct2 = 1.0 / (ct * ct);
    h = 0.5 * m.thickness;
  }

  void terms(double omega, double kappa, double* t1, double* t2) const {
    const double w2 = omega * omega;
    const double k2 = kappa * kappa;
    const double p2 = w2 * inv_cl2 - k2;
    const double q2 = w2 * inv_ct2 - k2;
    const double qk = q2 - k2;
    if (mode == Mode::S0) {
      *t1 = qk * qk * term_t1(q2, h);
      *t2 = 4.0 * k2 * term_t2(p2, h);
    } else {
      *t1 = 4.0 * k2 * term_t2(q2, h);
      *t2 = qk * qk * term_t1(p2, h);
    }
  }

  // normalized residual in [-1, 1]; roots are its sign changes
  double value(double omega, double kappa) const {
    double t1 = 0.0, t2 = 0.0;
    terms(omega, kappa, &t1, &t2);
    return (t1 + t2) / (std::abs(t1) + std::abs(t2) + 1e-300);
  }
};

// bisection on kappa, assuming value(lo) and value(hi) have opposite signs
double bisect(const Characteristic& ch, double omega, double lo, double hi,
              double f_lo) {
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;  // interval exhausted in fp
    const double f_mid = ch.value(omega, mid);
    if (f_mid == 0.0) return mid;
    if ((f_mid < 0.0) == (f_lo < 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 1e-10 * hi) break;
  }
  return 0.5 * (lo + hi);
}

// Full scan over phase velocity, log-spaced from c_min up to past cL. The
// fundamental mode is the sign change at the lowest phase velocity (largest
// kappa). Returns all bracketed roots in descending kappa order.
std::vector<double> scan_roots(const Characteristic& ch, double omega,
                               double c_max) {
  constexpr int kScanPoints = 4096;
  const double c_min = 1.0;
  const double log_lo = std::log(c_min);
  const double log_hi = std::log(c_max);
  std::vector<double> roots;
  double kappa_prev = omega / c_min;
  double f_prev = ch.value(omega, kappa_prev);
  for (int i = 1; i <= kScanPoints; ++i) {
    const double c =
        std::exp(log_lo + (log_hi - log_lo) * i / double(kScanPoints));
    const double kappa = omega / c;
    const double f = ch.value(omega, kappa);
    if (std::isfinite(f) && std::isfinite(f_prev) &&
        (f < 0.0) != (f_prev < 0.0)) {
      // kappa decreases along the scan: bracket is [kappa, kappa_prev]
      roots.push_back(bisect(ch, omega, kappa, kappa_prev, f));
    }
    kappa_prev = kappa;
    f_prev = f;
  }
  return roots;
}

class ModeTracker {
 public:
  ModeTracker(const PlateMaterial& material, Mode mode)
      : ch_(material, mode),
        c_max_(1.2 * material.longitudinal_velocity()),
        name_(mode == Mode::S0 ? "S0" : "A0") {}

  const std::string& name() const { return name_; }

  // Root for omega > 0. Calls must come in ascending omega so the tracker can
  // warm-start from the previous bin and keep the branch continuous.
  double solve(double omega) {
    double root = std::numeric_limits<double>::quiet_NaN();
    bool found = false;
    if (have_prev_) {
      const double slope =
          have_prev2_ ? (kappa_prev_ - kappa_prev2_) / (omega_prev_ - omega_prev2_)
                      : kappa_prev_ / omega_prev_;
      const double predicted = kappa_prev_ + slope * (omega - omega_prev_);
      found = bracket_near(omega, predicted, &root);
    }
    if (!found) {
      const auto roots = scan_roots(ch_, omega, c_max_);
      if (roots.empty()) {
        throw NoRootFound("no " + name_ + " dispersion root at omega = " +
                          std::to_string(omega) + " rad/s");
      }
      if (have_prev_) {
        // fall back to the scanned root closest to the track
        const double predicted =
            kappa_prev_ * (omega / omega_prev_);  // crude but monotone
        root = roots.front();
        for (double r : roots) {
          if (std::abs(r - predicted) < std::abs(root - predicted)) root = r;
        }
      } else {
        root = roots.front();  // largest kappa: the fundamental branch
      }
    }
    const double res = std::abs(ch_.value(omega, root));
    if (!(res < kResidualTol)) {
      throw SolverError(name_ + " root failed residual check at omega = " +
                        std::to_string(omega) + " (residual " +
                        std::to_string(res) + ")");
    }
    omega_prev2_ = omega_prev_;
    kappa_prev2_ = kappa_prev_;
    have_prev2_ = have_prev_;
    omega_prev_ = omega;
    kappa_prev_ = root;
    have_prev_ = true;
    return root;
  }

 private:
  bool bracket_near(double omega, double predicted, double* root) {
    const double kappa_min = omega / c_max_;
    double half = std::max({0.05 * std::abs(predicted),
                            2.0 * std::abs(predicted - kappa_prev_), 1e-9});
    for (int attempt = 0; attempt < 48; ++attempt) {
      const double lo = std::max(predicted - half, kappa_min);
      const double hi = predicted + half;
      if (lo < hi) {
        const double f_lo = ch_.value(omega, lo);
        const double f_hi = ch_.value(omega, hi);
        if (std::isfinite(f_lo) && std::isfinite(f_hi) &&
            (f_lo < 0.0) != (f_hi < 0.0)) {
          *root = bisect(ch_, omega, lo, hi, f_lo);
          return true;
        }
      }
      half *= 1.8;
      if (predicted - half < kappa_min && predicted + half > 4.0 * predicted) {
        break;  // window covers everything plausible; rescan instead
      }
    }
    return false;
  }

  Characteristic ch_;
  double c_max_;
  std::string name_;
  double omega_prev_ = 0.0, kappa_prev_ = 0.0;
  double omega_prev2_ = 0.0, kappa_prev2_ = 0.0;
  bool have_prev_ = false, have_prev2_ = false;
};

// Fills a table from per-|omega| solutions. On symmetric grids negative bins
// are mirrored from their positive partners so kappa(-omega) = -kappa(omega)
// holds bitwise; the unpaired negative-Nyquist bin is solved on its own.
template <typename SolveFn>
std::vector<double> fill_mode(const FrequencyGrid& grid, SolveFn&& solve) {
  const int n = grid.num_points;
  std::vector<double> kappa(n, 0.0);
  if (grid.is_symmetric()) {
    const int zb = grid.zero_bin();
    kappa[zb] = 0.0;
    for (int q = zb + 1; q < n; ++q) kappa[q] = solve(grid.omega(q));
    for (int q = zb + 1; q < n; ++q) {
      const int partner = 2 * zb - q;
      if (partner >= 1) kappa[partner] = -kappa[q];
    }
    kappa[0] = -solve(kTwoPi * grid.f_max_hz);
    return kappa;
  }
  // general grid: solve in ascending |f| to keep the tracker warm
  std::vector<int> order(n);
  for (int q = 0; q < n; ++q) order[q] = q;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return std::abs(grid.frequency_hz(a)) < std::abs(grid.frequency_hz(b));
  });
  for (int q : order) {
    const double f = grid.frequency_hz(q);
    if (f == 0.0) {
      kappa[q] = 0.0;
    } else {
      const double k = solve(kTwoPi * std::abs(f));
      kappa[q] = f > 0.0 ? k : -k;
    }
  }
  return kappa;
}

}  // namespace

void PlateMaterial::validate() const {
  if (!(youngs_modulus > 0.0) || !std::isfinite(youngs_modulus)) {
    throw InvalidMaterial("youngs_modulus must be positive and finite");
  }
  if (!(poisson_ratio > -1.0) || !(poisson_ratio < 0.5)) {
    throw InvalidMaterial("poisson_ratio must lie in (-1, 0.5)");
  }
  if (!(density > 0.0) || !std::isfinite(density)) {
    throw InvalidMaterial("density must be positive and finite");
  }
  if (!(thickness > 0.0) || !std::isfinite(thickness)) {
    throw InvalidMaterial("thickness must be positive and finite");
  }
}

double PlateMaterial::longitudinal_velocity() const {
  const double e = youngs_modulus, nu = poisson_ratio, rho = density;
  return std::sqrt(e * (1.0 - nu) / (rho * (1.0 + nu) * (1.0 - 2.0 * nu)));
}

double PlateMaterial::shear_velocity() const {
  return std::sqrt(youngs_modulus / (2.0 * density * (1.0 + poisson_ratio)));
}

double PlateMaterial::plate_velocity() const {
  return std::sqrt(youngs_modulus /
                   (density * (1.0 - poisson_ratio * poisson_ratio)));
}

void FrequencyGrid::validate() const {
  if (num_points < 2) throw InvalidParameter("frequency grid needs >= 2 points");
  if (!(f_max_hz > f_min_hz)) {
    throw InvalidParameter("frequency grid requires f_max > f_min");
  }
  if (!std::isfinite(f_min_hz) || !std::isfinite(f_max_hz)) {
    throw InvalidParameter("frequency grid bounds must be finite");
  }
}

double FrequencyGrid::omega(int q) const { return kTwoPi * frequency_hz(q); }

bool FrequencyGrid::is_symmetric() const {
  return num_points % 2 == 0 && f_min_hz == -f_max_hz;
}

DispersionTable solve_rayleigh_lamb(const PlateMaterial& material,
                                    const FrequencyGrid& grid,
                                    const std::vector<Mode>& modes) {
  material.validate();
  grid.validate();
  if (modes.empty()) throw InvalidParameter("no dispersion modes requested");

  DispersionTable table;
  table.grid = grid;
  for (Mode mode : modes) {
    ModeTracker tracker(material, mode);
    table.mode_names.push_back(tracker.name());
    table.kappa.push_back(
        fill_mode(grid, [&](double omega) { return tracker.solve(omega); }));
    log_debug("solved " + tracker.name() + " on " +
              std::to_string(grid.num_points) + " bins");
  }
  return table;
}

double characteristic_residual(const PlateMaterial& material, Mode mode,
                               double omega, double kappa) {
  return std::abs(Characteristic(material, mode).value(omega, kappa));
}

AnalyticModel AnalyticModel::nondispersive(double velocity) {
  if (!(velocity > 0.0)) throw InvalidParameter("velocity must be positive");
  return AnalyticModel{1.0 / velocity, 1.0};
}

AnalyticModel AnalyticModel::power_law(double scale, double exponent) {
  if (!(scale > 0.0)) throw InvalidParameter("power-law scale must be positive");
  if (!(exponent > 0.0)) {
    throw InvalidParameter("power-law exponent must be positive");
  }
  return AnalyticModel{scale, exponent};
}

DispersionTable analytic_dispersion(const AnalyticModel& model,
                                    const FrequencyGrid& grid,
                                    const std::string& name) {
  grid.validate();
  if (!(model.scale > 0.0) || !(model.exponent > 0.0)) {
    throw InvalidParameter("analytic dispersion needs positive scale/exponent");
  }
  DispersionTable table;
  table.grid = grid;
  table.mode_names.push_back(name);
  table.kappa.push_back(fill_mode(grid, [&](double omega) {
    return model.scale * std::pow(omega, model.exponent);
  }));
  return table;
}

std::vector<double> group_velocity(const DispersionTable& table,
                                   int mode_index) {
  if (mode_index < 0 || mode_index >= table.num_modes()) {
    throw InvalidParameter("mode index out of range");
  }
  const auto& kappa = table.kappa[mode_index];
  const int n = static_cast<int>(kappa.size());
  if (n < 3) throw DegenerateTable("group velocity needs >= 3 bins");
  std::vector<double> vg(n);
  for (int q = 0; q < n; ++q) {
    const int lo = q == 0 ? 0 : q - 1;
    const int hi = q == n - 1 ? n - 1 : q + 1;
    const double dk = kappa[hi] - kappa[lo];
    if (dk == 0.0) {
      throw DegenerateTable("coincident wavenumber samples around bin " +
                            std::to_string(q));
    }
    vg[q] = (table.grid.omega(hi) - table.grid.omega(lo)) / dk;
  }
  return vg;
}

void write_csv(const DispersionTable& table, std::ostream& out) {
  out << "omega_rad_s";
  for (const auto& name : table.mode_names) out << ",kappa_" << name;
  out << "\n";
  char buf[32];
  for (int q = 0; q < table.grid.num_points; ++q) {
    std::snprintf(buf, sizeof buf, "%.17g", table.grid.omega(q));
    out << buf;
    for (const auto& mode : table.kappa) {
      std::snprintf(buf, sizeof buf, "%.17g", mode[q]);
      out << ',' << buf;
    }
    out << "\n";
  }
  if (!out) throw IoError("dispersion CSV write failed");
}

}  // namespace wavelocate::dispersion
