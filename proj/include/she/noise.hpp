#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "she/correlation.hpp"
#include "she/fft.hpp"
#include "she/lattice.hpp"
#include "she/parallel.hpp"

namespace she {

/// Counter-based white-noise stream: the Gaussians of step s depend only on
/// (seed, stream_id, s), so any slice can be regenerated independently.
class WhiteNoiseSource {
 public:
  WhiteNoiseSource(std::uint64_t seed, std::uint64_t stream_id) : seed_(seed), stream_(stream_id) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_; }
  std::uint64_t step_counter() const { return step_; }
  void seek(std::uint64_t step) { step_ = step; }

  /// Fills `out` with N(0, stddev^2) draws for the current step, then advances.
  void fill(std::span<double> out, double stddev);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t step_ = 0;
};

/// i.i.d. N(0, dt / dx^d) per site; advances the source by one step.
RealArray sample_white_slice(WhiteNoiseSource& src, const LatticeGrid& grid, double dt);
void sample_white_slice_into(WhiteNoiseSource& src, const LatticeGrid& grid, double dt, RealArray& out);

enum class KernelLevel { Full, Cutoff, Difference };

struct NoiseLevel {
  KernelLevel kind = KernelLevel::Full;
  double n = 0.0;

  static NoiseLevel full() { return {KernelLevel::Full, 0.0}; }
  static NoiseLevel cutoff(double n) { return {KernelLevel::Cutoff, n}; }
  /// Kernel h - h_n.
  static NoiseLevel difference(double n) { return {KernelLevel::Difference, n}; }
  std::string label() const;
};

/// Real, even spectral multipliers turning a white slice into correlated noise.
///  - Full: h^(xi_k) on the frequency grid (Riesz zero mode replaced by the
///    value at 2 pi / L).
///  - Cutoff(n): dx^d * DFT of the gridded h_n.
///  - Difference(n): Full minus Cutoff(n).
class NoiseKernel {
 public:
  NoiseKernel(const CorrelationModel& model, const LatticeGrid& grid, NoiseLevel level);

  const LatticeGrid& grid() const { return fft_->grid(); }
  const RealFft& fft() const { return *fft_; }
  NoiseLevel level() const { return level_; }
  const std::vector<double>& multipliers() const { return mult_; }

  /// Lattice covariance per unit time, f_eff(site), obtained as
  /// (1/L^d) sum_k mult_k^2 exp(i xi_k x).
  std::vector<double> effective_covariance() const;

 private:
  std::shared_ptr<const RealFft> fft_;
  NoiseLevel level_;
  std::vector<double> mult_;
};

struct NoiseSlice {
  LatticeGrid grid;
  RealArray values;
  double dt = 0.0;
  NoiseLevel level;
};

NoiseSlice correlate_slice(const RealArray& white, const NoiseKernel& kernel, double dt);

/// Correlates an already transformed white slice; lets several kernels share
/// one forward FFT (the coupling across cutoff levels).
void correlate_spectral(const SpectralArray& white_hat, const NoiseKernel& kernel, RealArray& out,
                        SpectralWorkspace& ws);

struct CovarianceRow {
  std::size_t lag = 0;  ///< in sites along the first axis
  double target = 0.0;  ///< dt * f_eff(lag)
  double empirical = 0.0;
  double stderr_ = 0.0;
};

struct NoiseSelftest {
  std::vector<CovarianceRow> rows;
  /// Mean of F_s(x) F_{s+dt}(x) / (dt f_eff(0)) and its stderr; zero in law.
  double cross_time = 0.0;
  double cross_time_stderr = 0.0;
  std::size_t slices = 0;
};

/// Empirical-vs-target covariance of correlated slices. Slice i comes from
/// stream i of `seed` (steps 0 and 1, the second one for the cross-time
/// statistic); per-slice spatial averages are the independent samples.
NoiseSelftest noise_selftest(const NoiseKernel& kernel, double dt, const std::vector<std::size_t>& lags,
                             std::size_t slices, std::uint64_t seed, const FarmOptions& opt = {});

}  // namespace she
