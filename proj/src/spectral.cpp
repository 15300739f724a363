#include "wavelocate/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <string>

#include "wavelocate/errors.hpp"

namespace wavelocate {

namespace {
fftw_complex* as_fftw(std::complex<double>* p) {
  return reinterpret_cast<fftw_complex*>(p);
}
}  // namespace

SpectralTransform::SpectralTransform(int n) : n_(n), in_(n), out_(n) {
  if (n < 2 || n % 2 != 0) {
    throw InvalidParameter("transform size must be even and >= 2, got " +
                           std::to_string(n));
  }
  // FFTW_ESTIMATE picks the plan from static heuristics, so results are
  // reproducible run to run.
  fwd_ = fftw_plan_dft_1d(n_, as_fftw(in_.data()), as_fftw(out_.data()),
                          FFTW_FORWARD, FFTW_ESTIMATE);
  inv_ = fftw_plan_dft_1d(n_, as_fftw(in_.data()), as_fftw(out_.data()),
                          FFTW_BACKWARD, FFTW_ESTIMATE);
  if (fwd_ == nullptr || inv_ == nullptr) {
    throw SolverError("failed to create FFT plans");
  }
}

SpectralTransform::~SpectralTransform() {
  if (fwd_ != nullptr) fftw_destroy_plan(static_cast<fftw_plan>(fwd_));
  if (inv_ != nullptr) fftw_destroy_plan(static_cast<fftw_plan>(inv_));
}

void SpectralTransform::check_conjugate_symmetric(
    const Eigen::VectorXcd& spectrum, double tol) {
  const int n = static_cast<int>(spectrum.size());
  if (n < 2 || n % 2 != 0) {
    throw InvalidParameter("spectrum length must be even and >= 2");
  }
  const int zb = n / 2;
  double max_abs = 0.0;
  for (int q = 0; q < n; ++q) max_abs = std::max(max_abs, std::abs(spectrum[q]));
  const double bound = tol * std::max(max_abs, 1e-300);
  auto fail = [&](int q, double err) {
    throw NotConjugateSymmetric(
        "spectrum is not conjugate symmetric at bin " + std::to_string(q) +
        " (error " + std::to_string(err) + ", bound " + std::to_string(bound) +
        ")");
  };
  if (std::abs(spectrum[zb].imag()) > bound) fail(zb, std::abs(spectrum[zb].imag()));
  if (std::abs(spectrum[0].imag()) > bound) fail(0, std::abs(spectrum[0].imag()));
  for (int j = 1; j < zb; ++j) {
    const double err = std::abs(spectrum[zb + j] - std::conj(spectrum[zb - j]));
    if (err > bound) fail(zb + j, err);
  }
}

Eigen::VectorXd SpectralTransform::to_time_domain(
    const Eigen::VectorXcd& spectrum) {
  if (static_cast<int>(spectrum.size()) != n_) {
    throw LengthMismatch("expected spectrum of length " + std::to_string(n_) +
                         ", got " + std::to_string(spectrum.size()));
  }
  check_conjugate_symmetric(spectrum);
  // ifftshift: standard[k] = centered[(k + n/2) % n]
  for (int k = 0; k < n_; ++k) in_[k] = spectrum[(k + n_ / 2) % n_];
  fftw_execute(static_cast<fftw_plan>(inv_));
  Eigen::VectorXd signal(n_);
  double re2 = 0.0, im2 = 0.0;
  const double scale = 1.0 / static_cast<double>(n_);
  for (int t = 0; t < n_; ++t) {
    const double re = out_[t].real() * scale;
    const double im = out_[t].imag() * scale;
    signal[t] = re;
    re2 += re * re;
    im2 += im * im;
  }
  const double norm = std::sqrt(re2 + im2);
  if (std::sqrt(im2) > 1e-9 * std::max(norm, 1e-300)) {
    throw NotConjugateSymmetric("inverse transform left a nonreal residue");
  }
  return signal;
}

Eigen::VectorXcd SpectralTransform::to_spectrum(const Eigen::VectorXd& signal) {
  if (static_cast<int>(signal.size()) != n_) {
    throw LengthMismatch("expected signal of length " + std::to_string(n_) +
                         ", got " + std::to_string(signal.size()));
  }
  for (int t = 0; t < n_; ++t) in_[t] = std::complex<double>(signal[t], 0.0);
  fftw_execute(static_cast<fftw_plan>(fwd_));
  Eigen::VectorXcd spectrum(n_);
  // fftshift: centered[j] = standard[(j + n/2) % n]
  for (int j = 0; j < n_; ++j) spectrum[j] = out_[(j + n_ / 2) % n_];
  return spectrum;
}

}  // namespace wavelocate
