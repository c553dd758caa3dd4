#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <vector>

#include "she/grid.hpp"

namespace she {

/// std::allocator replacement backed by fftw_malloc, so every buffer has the
/// alignment FFTW planned for and new-array execution picks the same
/// codelets (and therefore bit-identical results) for every buffer.
template <class T>
struct FftwAllocator {
  using value_type = T;
  FftwAllocator() = default;
  template <class U>
  FftwAllocator(const FftwAllocator<U>&) {}
  T* allocate(std::size_t n);
  void deallocate(T* p, std::size_t) noexcept;
  template <class U>
  bool operator==(const FftwAllocator<U>&) const { return true; }
};

using RealArray = std::vector<double, FftwAllocator<double>>;
using Complex = std::complex<double>;
using SpectralArray = std::vector<Complex, FftwAllocator<Complex>>;

/// Real-to-half-complex FFT pair for one lattice geometry. Plans are built
/// once with FFTW_ESTIMATE (deterministic) and executed through FFTW's
/// new-array interface, which is safe to call concurrently.
class RealFft {
 public:
  explicit RealFft(const LatticeGrid& grid);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  const LatticeGrid& grid() const { return grid_; }

  /// Unnormalized forward transform: out_k = sum_j in_j exp(-i xi_k x_j).
  void forward(const RealArray& in, SpectralArray& out) const;
  /// Inverse transform including the 1/m^d factor. `scratch` is clobbered.
  void inverse(const SpectralArray& in, RealArray& out, SpectralArray& scratch) const;

  RealArray make_real() const { return RealArray(grid_.sites(), 0.0); }
  SpectralArray make_spectral() const { return SpectralArray(grid_.spectral_size()); }

 private:
  LatticeGrid grid_;
  struct Plans;
  std::unique_ptr<Plans> plans_;
};

/// Shared, cached transform for a grid geometry.
std::shared_ptr<const RealFft> fft_for(const LatticeGrid& grid);

}  // namespace she
