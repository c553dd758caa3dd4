#pragma once

#include <cmath>
#include <string>

#include "json.hpp"
#include "she/common.hpp"

namespace she {

enum class SigmaKind { Constant, BoundedBoth, BoundedBelow, Linear, LipschitzZero };

/// Globally Lipschitz nonlinearity sigma(u).
///
///   Constant(eps0)    sigma = eps0
///   BoundedBoth       sigma = 1 + 0.5 sin u           in [0.5, 1.5]
///   BoundedBelow      sigma = 1 + 0.5|u|/(1+|u|) + 0.1|u|
///   Linear(c)         sigma = c u                     (PAM)
///   LipschitzZero(c)  sigma = c u / (1 + u^2)         sigma(0) = 0
struct SigmaFunction {
  SigmaKind kind = SigmaKind::Constant;
  double param = 1.0;

  static SigmaFunction constant(double eps0) {
    if (!(eps0 >= 0.0) || !std::isfinite(eps0)) throw DomainError("constant sigma requires a finite eps0 >= 0");
    return {SigmaKind::Constant, eps0};
  }
  static SigmaFunction bounded_both() { return {SigmaKind::BoundedBoth, 1.0}; }
  static SigmaFunction bounded_below() { return {SigmaKind::BoundedBelow, 1.0}; }
  static SigmaFunction linear(double c = 1.0) { return {SigmaKind::Linear, c}; }
  static SigmaFunction lipschitz_zero(double c = 1.0) { return {SigmaKind::LipschitzZero, c}; }

  double operator()(double u) const;
  double lipschitz() const;
  std::string name() const;

  nlohmann::json to_json() const;
  static SigmaFunction from_json(const nlohmann::json& j);
};

}  // namespace she
