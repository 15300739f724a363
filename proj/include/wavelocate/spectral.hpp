#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace wavelocate {

// Thin FFT wrapper fixing the layout conventions used throughout: spectra are
// stored zero-centered (bin n/2 is DC, bin 0 the unpaired negative Nyquist),
// time signals are real with sample spacing 1 / (n * df).
//
// Instances hold FFTW plans and scratch buffers and are not thread safe;
// create one per thread.
class SpectralTransform {
 public:
  explicit SpectralTransform(int n);  // n even, >= 2
  ~SpectralTransform();
  SpectralTransform(const SpectralTransform&) = delete;
  SpectralTransform& operator=(const SpectralTransform&) = delete;

  int size() const { return n_; }

  // Inverse transform of a conjugate-symmetric zero-centered spectrum,
  // normalized by 1/n. Throws NotConjugateSymmetric if the input fails the
  // symmetry check or the output keeps a nonreal residue.
  Eigen::VectorXd to_time_domain(const Eigen::VectorXcd& spectrum);

  // Forward transform of a real signal into the zero-centered layout.
  Eigen::VectorXcd to_spectrum(const Eigen::VectorXd& signal);

  // Symmetry check on its own: X[zb + j] == conj(X[zb - j]) within
  // tol * max|X|, X[zb] and X[0] real within the same bound.
  static void check_conjugate_symmetric(const Eigen::VectorXcd& spectrum,
                                        double tol = 1e-9);

 private:
  int n_;
  std::vector<std::complex<double>> in_, out_;
  void* fwd_ = nullptr;  // fftw_plan, kept opaque here
  void* inv_ = nullptr;
};

}  // namespace wavelocate
