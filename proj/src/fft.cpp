#include "she/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <mutex>
#include <new>
#include <tuple>

namespace she {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

template <class T>
T* FftwAllocator<T>::allocate(std::size_t n) {
  if (n == 0) n = 1;
  void* p = fftw_malloc(n * sizeof(T));
  if (!p) throw std::bad_alloc();
  return static_cast<T*>(p);
}

template <class T>
void FftwAllocator<T>::deallocate(T* p, std::size_t) noexcept {
  fftw_free(p);
}

template struct FftwAllocator<double>;
template struct FftwAllocator<Complex>;

struct RealFft::Plans {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
};

RealFft::RealFft(const LatticeGrid& grid) : grid_(grid), plans_(std::make_unique<Plans>()) {
  int n[3];
  for (int a = 0; a < grid.dimension(); ++a) n[a] = static_cast<int>(grid.points_per_axis());
  RealArray re = make_real();
  SpectralArray sp = make_spectral();
  std::lock_guard<std::mutex> lock(planner_mutex());
  plans_->r2c = fftw_plan_dft_r2c(grid.dimension(), n, re.data(),
                                  reinterpret_cast<fftw_complex*>(sp.data()), FFTW_ESTIMATE);
  plans_->c2r = fftw_plan_dft_c2r(grid.dimension(), n, reinterpret_cast<fftw_complex*>(sp.data()),
                                  re.data(), FFTW_ESTIMATE);
  if (!plans_->r2c || !plans_->c2r) throw NumericalError("FFTW planning failed");
}

RealFft::~RealFft() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  if (plans_->r2c) fftw_destroy_plan(plans_->r2c);
  if (plans_->c2r) fftw_destroy_plan(plans_->c2r);
}

void RealFft::forward(const RealArray& in, SpectralArray& out) const {
  if (in.size() != grid_.sites()) throw DomainError("forward FFT: field size does not match grid");
  out.resize(grid_.spectral_size());
  fftw_execute_dft_r2c(plans_->r2c, const_cast<double*>(in.data()),
                       reinterpret_cast<fftw_complex*>(out.data()));
}

void RealFft::inverse(const SpectralArray& in, RealArray& out, SpectralArray& scratch) const {
  if (in.size() != grid_.spectral_size())
    throw DomainError("inverse FFT: spectrum size does not match grid");
  scratch.assign(in.begin(), in.end());
  out.resize(grid_.sites());
  fftw_execute_dft_c2r(plans_->c2r, reinterpret_cast<fftw_complex*>(scratch.data()), out.data());
  const double scale = 1.0 / static_cast<double>(grid_.sites());
  for (double& v : out) v *= scale;
}

std::shared_ptr<const RealFft> fft_for(const LatticeGrid& grid) {
  static std::mutex cache_mutex;
  static std::map<std::tuple<int, std::size_t, double>, std::shared_ptr<const RealFft>> cache;
  auto key = std::make_tuple(grid.dimension(), grid.points_per_axis(), grid.spacing());
  std::lock_guard<std::mutex> lock(cache_mutex);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto fft = std::make_shared<const RealFft>(grid);
  cache.emplace(key, fft);
  return fft;
}

}  // namespace she
