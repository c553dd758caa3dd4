#include "she/noise.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "she/stats.hpp"

namespace she {

void WhiteNoiseSource::fill(std::span<double> out, double stddev) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                    static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32),
                    static_cast<std::uint32_t>(step_), static_cast<std::uint32_t>(step_ >> 32)};
  std::mt19937_64 eng(seq);
  std::normal_distribution<double> normal(0.0, stddev);
  for (double& v : out) v = normal(eng);
  ++step_;
}

void sample_white_slice_into(WhiteNoiseSource& src, const LatticeGrid& grid, double dt, RealArray& out) {
  if (!(dt > 0.0)) throw DomainError("white slice requires dt > 0");
  out.resize(grid.sites());
  src.fill(out, std::sqrt(dt / grid.cell_volume()));
}

RealArray sample_white_slice(WhiteNoiseSource& src, const LatticeGrid& grid, double dt) {
  RealArray out(grid.sites());
  sample_white_slice_into(src, grid, dt, out);
  return out;
}

std::string NoiseLevel::label() const {
  std::ostringstream os;
  switch (kind) {
    case KernelLevel::Full: return "full";
    case KernelLevel::Cutoff: os << "cutoff(" << n << ")"; break;
    case KernelLevel::Difference: os << "difference(" << n << ")"; break;
  }
  return os.str();
}

namespace {

std::vector<double> full_multipliers(const CorrelationModel& model, const LatticeGrid& grid) {
  std::vector<double> mult(grid.spectral_size());
  const double xi_min = 2.0 * std::numbers::pi / grid.period();
  for (std::size_t k = 0; k < mult.size(); ++k) {
    double r = std::sqrt(grid.mode_wavenumber_sq(k));
    if (r == 0.0 && model.kind() == ModelKind::Riesz) r = xi_min;
    mult[k] = h_hat_radial(model, r);
  }
  return mult;
}

std::vector<double> cutoff_multipliers(const CorrelationModel& model, const LatticeGrid& grid, double n,
                                       const RealFft& fft) {
  std::vector<double> hn = gridded_hn(model, grid, CutoffConfig{n});
  RealArray buf(hn.begin(), hn.end());
  SpectralArray spec = fft.make_spectral();
  fft.forward(buf, spec);
  std::vector<double> mult(spec.size());
  const double cell = grid.cell_volume();
  for (std::size_t k = 0; k < spec.size(); ++k) mult[k] = cell * spec[k].real();
  return mult;
}

}  // namespace

NoiseKernel::NoiseKernel(const CorrelationModel& model, const LatticeGrid& grid, NoiseLevel level)
    : fft_(fft_for(grid)), level_(level) {
  if (!model.has_kernel())
    throw UnsupportedError("constant covariance has no L^2 kernel h; lattice noise is unavailable");
  if (model.dimension() != grid.dimension()) throw DomainError("model and grid dimensions differ");
  if (level.kind != KernelLevel::Full && !(level.n >= grid.spacing()))
    throw DomainError("cutoff level n is smaller than one grid cell");
  switch (level.kind) {
    case KernelLevel::Full:
      mult_ = full_multipliers(model, grid);
      break;
    case KernelLevel::Cutoff:
      mult_ = cutoff_multipliers(model, grid, level.n, *fft_);
      break;
    case KernelLevel::Difference: {
      mult_ = full_multipliers(model, grid);
      std::vector<double> cut = cutoff_multipliers(model, grid, level.n, *fft_);
      for (std::size_t k = 0; k < mult_.size(); ++k) mult_[k] -= cut[k];
      break;
    }
  }
}

std::vector<double> NoiseKernel::effective_covariance() const {
  SpectralArray spec = fft_->make_spectral();
  for (std::size_t k = 0; k < spec.size(); ++k) spec[k] = mult_[k] * mult_[k];
  RealArray out = fft_->make_real();
  SpectralArray scratch = fft_->make_spectral();
  fft_->inverse(spec, out, scratch);
  const double inv_cell = 1.0 / grid().cell_volume();
  std::vector<double> cov(out.size());
  for (std::size_t s = 0; s < out.size(); ++s) cov[s] = out[s] * inv_cell;
  return cov;
}

void correlate_spectral(const SpectralArray& white_hat, const NoiseKernel& kernel, RealArray& out,
                        SpectralWorkspace& ws) {
  const auto& mult = kernel.multipliers();
  if (white_hat.size() != mult.size()) throw DomainError("correlate: spectrum size mismatch");
  ws.spec.resize(mult.size());
  for (std::size_t k = 0; k < mult.size(); ++k) ws.spec[k] = white_hat[k] * mult[k];
  kernel.fft().inverse(ws.spec, out, ws.scratch);
}

NoiseSlice correlate_slice(const RealArray& white, const NoiseKernel& kernel, double dt) {
  if (white.size() != kernel.grid().sites()) throw DomainError("correlate: white slice does not match grid");
  SpectralWorkspace ws(kernel.fft());
  SpectralArray white_hat = kernel.fft().make_spectral();
  kernel.fft().forward(white, white_hat);
  NoiseSlice slice{kernel.grid(), kernel.fft().make_real(), dt, kernel.level()};
  correlate_spectral(white_hat, kernel, slice.values, ws);
  return slice;
}

NoiseSelftest noise_selftest(const NoiseKernel& kernel, double dt, const std::vector<std::size_t>& lags,
                             std::size_t slices, std::uint64_t seed, const FarmOptions& opt) {
  if (slices < 2) throw DomainError("noise self-test needs at least two slices");
  if (!(dt > 0.0)) throw DomainError("noise self-test needs dt > 0");
  const LatticeGrid& g = kernel.grid();
  const std::size_t m = g.points_per_axis();
  const std::size_t stride = g.sites() / m;
  for (std::size_t lag : lags)
    if (lag >= m) throw DomainError("noise self-test lag exceeds the grid");
  const std::vector<double> fe = kernel.effective_covariance();

  auto task = [&](std::size_t i) {
    WhiteNoiseSource src(seed, i);
    SpectralWorkspace ws(kernel.fft());
    SpectralArray hat = kernel.fft().make_spectral();
    RealArray white = kernel.fft().make_real(), a = kernel.fft().make_real(), b = kernel.fft().make_real();
    sample_white_slice_into(src, g, dt, white);
    kernel.fft().forward(white, hat);
    correlate_spectral(hat, kernel, a, ws);
    sample_white_slice_into(src, g, dt, white);
    kernel.fft().forward(white, hat);
    correlate_spectral(hat, kernel, b, ws);
    std::vector<double> stat;
    for (std::size_t lag : lags) {
      KahanSum acc;
      for (std::size_t s = 0; s < g.sites(); ++s) {
        // Shift along the first (slowest) axis by lag sites, wrapping.
        const std::size_t first = s / stride;
        const std::size_t shifted = ((first + lag) % m) * stride + s % stride;
        acc.add(a[s] * a[shifted]);
      }
      stat.push_back(acc.value() / static_cast<double>(g.sites()));
    }
    KahanSum cross;
    for (std::size_t s = 0; s < g.sites(); ++s) cross.add(a[s] * b[s]);
    stat.push_back(cross.value() / static_cast<double>(g.sites()) / (dt * fe[0]));
    return stat;
  };
  auto res = farm<std::vector<double>>(slices, task, opt);
  if (!res.failures.empty()) throw NumericalError("noise self-test: slice failed: " + res.failures.front().second);

  NoiseSelftest out;
  out.slices = res.values.size();
  std::vector<double> col(res.values.size());
  for (std::size_t l = 0; l <= lags.size(); ++l) {
    for (std::size_t i = 0; i < col.size(); ++i) col[i] = res.values[i][l];
    Estimate e = mean_with_stderr(col);
    if (l == lags.size()) {
      out.cross_time = e.value;
      out.cross_time_stderr = e.stderr_;
    } else {
      out.rows.push_back({lags[l], dt * fe[lags[l] * stride], e.value, e.stderr_});
    }
  }
  return out;
}

}  // namespace she
