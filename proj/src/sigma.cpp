#include "she/sigma.hpp"

#include <cmath>

#include "she/common.hpp"

namespace she {

double SigmaFunction::operator()(double u) const {
  switch (kind) {
    case SigmaKind::Constant: return param;
    case SigmaKind::BoundedBoth: return 1.0 + 0.5 * std::sin(u);
    case SigmaKind::BoundedBelow: {
      double a = std::fabs(u);
      return 1.0 + 0.5 * a / (1.0 + a) + 0.1 * a;
    }
    case SigmaKind::Linear: return param * u;
    case SigmaKind::LipschitzZero: return param * u / (1.0 + u * u);
  }
  return 0.0;
}

double SigmaFunction::lipschitz() const {
  switch (kind) {
    case SigmaKind::Constant: return 0.0;
    case SigmaKind::BoundedBoth: return 0.5;
    case SigmaKind::BoundedBelow: return 0.6;
    case SigmaKind::Linear: return std::fabs(param);
    case SigmaKind::LipschitzZero: return std::fabs(param);
  }
  return 0.0;
}

std::string SigmaFunction::name() const {
  switch (kind) {
    case SigmaKind::Constant: return "constant";
    case SigmaKind::BoundedBoth: return "bounded_both";
    case SigmaKind::BoundedBelow: return "bounded_below";
    case SigmaKind::Linear: return "linear";
    case SigmaKind::LipschitzZero: return "lipschitz_zero";
  }
  return "unknown";
}

nlohmann::json SigmaFunction::to_json() const {
  nlohmann::json j{{"kind", name()}};
  if (kind == SigmaKind::Constant) j["eps0"] = param;
  if (kind == SigmaKind::Linear || kind == SigmaKind::LipschitzZero) j["c"] = param;
  return j;
}

SigmaFunction SigmaFunction::from_json(const nlohmann::json& j) {
  std::string kind;
  if (j.is_string()) {
    kind = j.get<std::string>();
  } else if (j.is_object() && j.contains("kind") && j["kind"].is_string()) {
    kind = j["kind"].get<std::string>();
  } else {
    throw DomainError("sigma must be a kind string or an object with 'kind'");
  }
  auto num = [&](const char* key, double fallback) {
    if (j.is_object() && j.contains(key)) {
      if (!j[key].is_number()) throw DomainError(std::string("sigma field '") + key + "' must be a number");
      return j[key].get<double>();
    }
    return fallback;
  };
  if (kind == "constant") {
    double e = num("eps0", 1.0);
    if (!(e >= 0.0)) throw DomainError("constant sigma requires eps0 >= 0");
    return constant(e);
  }
  if (kind == "bounded_both") return bounded_both();
  if (kind == "bounded_below") return bounded_below();
  if (kind == "linear") return linear(num("c", 1.0));
  if (kind == "lipschitz_zero") return lipschitz_zero(num("c", 1.0));
  throw DomainError("unknown sigma kind '" + kind + "'");
}

}  // namespace she
