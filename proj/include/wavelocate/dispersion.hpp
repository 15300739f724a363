#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace wavelocate::dispersion {

enum class Mode { S0, A0 };

// Isotropic plate. Velocities derive from E, nu, rho in the usual way;
// thickness is the full plate thickness (the characteristic equations use
// the half thickness).
struct PlateMaterial {
  double youngs_modulus = 69e9;   // Pa
  double poisson_ratio = 0.33;
  double density = 2700.0;        // kg/m^3
  double thickness = 3e-3;        // m

  void validate() const;  // throws InvalidMaterial
  double longitudinal_velocity() const;
  double shear_velocity() const;
  // low-frequency S0 limit sqrt(E / (rho (1 - nu^2)))
  double plate_velocity() const;
};

// Uniformly spaced frequency grid, half-open: f_q = f_min + q (f_max - f_min) / n.
// Time-domain synthesis additionally requires a symmetric grid (n even,
// f_min = -f_max), which places f = 0 at bin n/2 and leaves bin 0 as the
// unpaired negative-Nyquist sample.
struct FrequencyGrid {
  int num_points = 256;
  double f_min_hz = -500e3;
  double f_max_hz = 500e3;

  void validate() const;  // throws InvalidParameter
  double spacing_hz() const {
    return (f_max_hz - f_min_hz) / static_cast<double>(num_points);
  }
  double frequency_hz(int q) const {
    return f_min_hz + static_cast<double>(q) * spacing_hz();
  }
  double omega(int q) const;
  bool is_symmetric() const;
  int zero_bin() const { return num_points / 2; }
  // sample spacing of the matching time grid, 1 / (n * spacing)
  double dt_seconds() const { return 1.0 / (num_points * spacing_hz()); }
};

// Wavenumber samples per mode on a frequency grid. kappa is odd in frequency
// and zero at f = 0.
struct DispersionTable {
  FrequencyGrid grid;
  std::vector<std::string> mode_names;
  std::vector<std::vector<double>> kappa;  // [mode][bin], rad/m

  int num_modes() const { return static_cast<int>(kappa.size()); }
};

// Solves the Rayleigh-Lamb characteristic equations for the fundamental
// symmetric and/or antisymmetric modes on the given grid. Throws NoRootFound
// if a bin admits no root bracket, SolverError if a converged root fails the
// residual check (normalized residual < 1e-6).
DispersionTable solve_rayleigh_lamb(const PlateMaterial& material,
                                    const FrequencyGrid& grid,
                                    const std::vector<Mode>& modes = {Mode::S0,
                                                                      Mode::A0});

// Normalized characteristic residual |t1 + t2| / (|t1| + |t2| + tiny) at a
// candidate (omega, kappa). Near zero iff kappa is a dispersion root.
double characteristic_residual(const PlateMaterial& material, Mode mode,
                               double omega, double kappa);

// Closed-form dispersion stand-ins for tests and synthetic studies.
struct AnalyticModel {
  // kappa(omega) = sign(omega) * scale * |omega|^exponent
  double scale = 1.0;
  double exponent = 1.0;

  static AnalyticModel nondispersive(double velocity);
  static AnalyticModel power_law(double scale, double exponent);
};

DispersionTable analytic_dispersion(const AnalyticModel& model,
                                    const FrequencyGrid& grid,
                                    const std::string& name = "analytic");

// Group velocity d(omega)/d(kappa) per bin by central differences (one-sided
// at the ends). Throws DegenerateTable when adjacent kappa samples coincide.
std::vector<double> group_velocity(const DispersionTable& table,
                                   int mode_index);

// CSV export: header "omega_rad_s,kappa_<mode>..." and one row per bin, full
// double precision.
void write_csv(const DispersionTable& table, std::ostream& out);

}  // namespace wavelocate::dispersion
