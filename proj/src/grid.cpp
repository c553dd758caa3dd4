#include "she/grid.hpp"

#include <cmath>
#include <numbers>

namespace she {

LatticeGrid::LatticeGrid(int d, std::size_t m, double dx) : d_(d), m_(m), dx_(dx) {
  if (d < 1 || d > 3) throw DomainError("grid dimension must be 1, 2 or 3");
  if (m < 8 || (m & (m - 1)) != 0) throw DomainError("grid m must be a power of two >= 8");
  if (!(dx > 0.0) || !std::isfinite(dx)) throw DomainError("grid spacing dx must be positive");
  sites_ = 1;
  for (int i = 0; i < d; ++i) sites_ *= m;
  spectral_ = sites_ / m * (m / 2 + 1);
}

double LatticeGrid::cell_volume() const { return std::pow(dx_, d_); }

long LatticeGrid::signed_index(std::size_t j) const {
  long jj = static_cast<long>(j % m_);
  long mm = static_cast<long>(m_);
  return jj < mm / 2 ? jj : jj - mm;
}

double LatticeGrid::axis_frequency(std::size_t j) const {
  return 2.0 * std::numbers::pi * static_cast<double>(signed_index(j)) / period();
}

void LatticeGrid::site_coordinates(std::size_t site, std::span<double> out) const {
  for (int a = d_ - 1; a >= 0; --a) {
    out[a] = axis_coordinate(site % m_);
    site /= m_;
  }
}

Point LatticeGrid::site_coordinates(std::size_t site) const {
  Point p(d_);
  site_coordinates(site, p);
  return p;
}

double LatticeGrid::site_radius_sq(std::size_t site) const {
  double r2 = 0.0;
  for (int a = 0; a < d_; ++a) {
    double c = axis_coordinate(site % m_);
    r2 += c * c;
    site /= m_;
  }
  return r2;
}

void LatticeGrid::mode_wavevector(std::size_t mode, std::span<double> out) const {
  const std::size_t half = m_ / 2 + 1;
  out[d_ - 1] = 2.0 * std::numbers::pi * static_cast<double>(mode % half) / period();
  mode /= half;
  for (int a = d_ - 2; a >= 0; --a) {
    out[a] = axis_frequency(mode % m_);
    mode /= m_;
  }
}

double LatticeGrid::mode_wavenumber_sq(std::size_t mode) const {
  double xi[3];
  mode_wavevector(mode, std::span<double>(xi, d_));
  double s = 0.0;
  for (int a = 0; a < d_; ++a) s += xi[a] * xi[a];
  return s;
}

std::size_t LatticeGrid::nearest_site(PointView x) const {
  if (static_cast<int>(x.size()) != d_) throw DomainError("point dimension does not match grid");
  std::size_t idx = 0;
  const long mm = static_cast<long>(m_);
  for (int a = 0; a < d_; ++a) {
    long j = std::lround(x[a] / dx_);
    j %= mm;
    if (j < 0) j += mm;
    idx = idx * m_ + static_cast<std::size_t>(j);
  }
  return idx;
}

std::size_t LatticeGrid::site_index(std::span<const std::size_t> axis) const {
  std::size_t idx = 0;
  for (int a = 0; a < d_; ++a) idx = idx * m_ + axis[a] % m_;
  return idx;
}

nlohmann::json LatticeGrid::to_json() const {
  return {{"d", d_}, {"m", m_}, {"dx", dx_}};
}

LatticeGrid LatticeGrid::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw DomainError("grid must be a JSON object");
  for (const char* key : {"d", "m", "dx"})
    if (!j.contains(key)) throw DomainError(std::string("grid missing '") + key + "'");
  if (!j["d"].is_number_integer() || !j["m"].is_number_integer() || !j["dx"].is_number())
    throw DomainError("grid fields have wrong types");
  long m = j["m"].get<long>();
  if (m <= 0) throw DomainError("grid m must be positive");
  return LatticeGrid(j["d"].get<int>(), static_cast<std::size_t>(m), j["dx"].get<double>());
}

}  // namespace she
