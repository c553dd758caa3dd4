#pragma once

#include <cstddef>
#include "json.hpp"

#include "she/common.hpp"

namespace she {

/// Periodic d-dimensional lattice with m points per axis and spacing dx.
///
/// Sites are stored row-major with the last axis fastest. Site coordinates
/// use the minimal-image convention: index j on an axis maps to j*dx for
/// j < m/2 and to (j - m)*dx otherwise, so the origin is site 0.
///
/// The spectral (half-complex) layout follows FFTW's r2c convention: all
/// axes but the last are full length m, the last has m/2 + 1 entries.
class LatticeGrid {
 public:
  LatticeGrid(int d, std::size_t m, double dx);

  int dimension() const { return d_; }
  std::size_t points_per_axis() const { return m_; }
  double spacing() const { return dx_; }
  double period() const { return static_cast<double>(m_) * dx_; }
  double cell_volume() const;

  std::size_t sites() const { return sites_; }
  std::size_t spectral_size() const { return spectral_; }

  /// Signed integer offset of axis index j under the minimal-image map.
  long signed_index(std::size_t j) const;
  double axis_coordinate(std::size_t j) const { return static_cast<double>(signed_index(j)) * dx_; }
  double axis_frequency(std::size_t j) const;

  /// Coordinates of a site; out must have d entries.
  void site_coordinates(std::size_t site, std::span<double> out) const;
  Point site_coordinates(std::size_t site) const;
  double site_radius_sq(std::size_t site) const;

  /// Wave vector of a spectral-layout mode; out must have d entries.
  void mode_wavevector(std::size_t mode, std::span<double> out) const;
  double mode_wavenumber_sq(std::size_t mode) const;

  /// Nearest site to a point (coordinates wrapped onto the torus).
  std::size_t nearest_site(PointView x) const;

  /// Site index from per-axis indices.
  std::size_t site_index(std::span<const std::size_t> axis) const;

  bool operator==(const LatticeGrid& o) const { return d_ == o.d_ && m_ == o.m_ && dx_ == o.dx_; }

  nlohmann::json to_json() const;
  static LatticeGrid from_json(const nlohmann::json& j);

 private:
  int d_;
  std::size_t m_;
  double dx_;
  std::size_t sites_;
  std::size_t spectral_;
};

}  // namespace she
