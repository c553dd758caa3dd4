#include "she/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace she {

namespace {

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& p : v) s += "\n  - " + p;
  return s;
}

/// Field reader that records problems instead of stopping at the first one.
class Reader {
 public:
  Reader(const nlohmann::json& j, std::string prefix, std::vector<std::string>& errors)
      : j_(j), prefix_(std::move(prefix)), errors_(errors) {}

  bool has(const char* key) const { return j_.is_object() && j_.contains(key); }
  const nlohmann::json& at(const char* key) const { return j_.at(key); }
  std::string path(const char* key) const { return prefix_ + key; }
  void fail(const std::string& msg) { errors_.push_back(msg); }

  template <class T>
  void get(const char* key, T& out) {
    if (!has(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const std::exception&) {
      fail(path(key) + ": wrong type");
    }
  }

  template <class T, class Parse>
  void parse(const char* key, T& out, Parse parse_fn) {
    if (!has(key)) return;
    try {
      out = parse_fn(j_.at(key));
    } catch (const std::exception& e) {
      fail(path(key) + ": " + e.what());
    }
  }

 private:
  const nlohmann::json& j_;
  std::string prefix_;
  std::vector<std::string>& errors_;
};

std::vector<Point> read_points(const nlohmann::json& j) {
  if (!j.is_array()) throw DomainError("expected an array of points");
  std::vector<Point> pts;
  for (const auto& p : j) {
    if (p.is_number())
      pts.push_back(Point{p.get<double>()});
    else
      pts.push_back(p.get<Point>());
  }
  return pts;
}

bool requested(const ExperimentManifest& m, const std::string& name) {
  return std::find(m.analysis.run.begin(), m.analysis.run.end(), name) != m.analysis.run.end();
}

}  // namespace

ManifestError::ManifestError(std::vector<std::string> problems)
    : DomainError("invalid manifest:" + join(problems)), problems_(std::move(problems)) {}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

nlohmann::json ExperimentManifest::to_json() const {
  const auto& a = analysis;
  nlohmann::json oracle{{"walkers", a.oracle.walkers},
                        {"inner_steps", a.oracle.inner_steps},
                        {"pair_sum", a.oracle.pair_sum == PairSum::Ordered ? "ordered" : "unordered"}};
  if (a.oracle.r_reg) oracle["r_reg"] = *a.oracle.r_reg;
  nlohmann::json aj{{"run", a.run},
                    {"replicas", a.replicas},
                    {"ks", a.ks},
                    {"probes", a.probes},
                    {"average_probes", a.average_probes},
                    {"record_times", a.record_times},
                    {"snapshot", a.snapshot},
                    {"lags", a.lags},
                    {"lambdas", a.lambdas},
                    {"radii", a.radii},
                    {"betas", a.betas},
                    {"n_picard", a.n_picard},
                    {"beta", a.beta},
                    {"points", a.points},
                    {"oracle", oracle}};
  return {{"version", version},
          {"scenario", scenario},
          {"model", model.to_json()},
          {"grid", grid.to_json()},
          {"solver",
           {{"kappa", kappa}, {"dt", dt}, {"t_final", t_final}, {"sigma", sigma.to_json()}, {"u0", u0.to_json()}}},
          {"analysis", aj},
          {"seed", seed},
          {"output", output},
          {"threads", threads}};
}

std::uint64_t ExperimentManifest::hash() const {
  // Output location and thread count do not affect any number produced.
  nlohmann::json j = to_json();
  j.erase("output");
  j.erase("threads");
  return fnv1a64(j.dump());
}

std::string ExperimentManifest::hash_hex() const { return hex64(hash()); }

SolverConfig ExperimentManifest::solver_config() const {
  SolverConfig c;
  c.kappa = kappa;
  c.dt = dt;
  c.grid = grid;
  c.sigma = sigma;
  c.u0 = u0;
  c.model = model;
  return c;
}

FarmOptions ExperimentManifest::farm_options() const { return FarmOptions{Execution::OpenMP, threads}; }

Scenario ExperimentManifest::scenario_config() const {
  Scenario sc;
  sc.solver = solver_config();
  sc.t_final = t_final;
  sc.seed = seed;
  sc.probes = analysis.probes;
  sc.average_probes = analysis.average_probes;
  sc.farm = farm_options();
  return sc;
}

ExperimentManifest parse_manifest(const nlohmann::json& j) {
  std::vector<std::string> errors;
  ExperimentManifest m;
  if (!j.is_object()) throw ManifestError({"manifest must be a JSON object"});

  Reader top(j, "", errors);
  if (!top.has("version")) {
    errors.push_back("version: missing (expected " + std::to_string(kManifestVersion) + ")");
  } else {
    top.get("version", m.version);
    if (m.version != kManifestVersion)
      errors.push_back("version: unsupported value " + std::to_string(m.version) + " (expected " +
                       std::to_string(kManifestVersion) + ")");
  }
  static const std::vector<std::string> known{"version", "scenario", "model",  "grid",   "solver",
                                              "analysis", "seed",    "output", "threads"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(known.begin(), known.end(), it.key()) == known.end()) errors.push_back(it.key() + ": unknown field");

  top.get("scenario", m.scenario);
  top.parse("model", m.model, [](const nlohmann::json& v) { return CorrelationModel::from_json(v); });
  top.parse("grid", m.grid, [](const nlohmann::json& v) { return LatticeGrid::from_json(v); });
  top.get("seed", m.seed);
  top.get("output", m.output);
  top.get("threads", m.threads);

  if (top.has("solver")) {
    Reader s(j["solver"], "solver.", errors);
    s.get("kappa", m.kappa);
    s.get("dt", m.dt);
    s.get("t_final", m.t_final);
    s.parse("sigma", m.sigma, [](const nlohmann::json& v) { return SigmaFunction::from_json(v); });
    s.parse("u0", m.u0, [](const nlohmann::json& v) { return InitialCondition::from_json(v); });
  }

  if (top.has("analysis")) {
    auto& a = m.analysis;
    Reader r(j["analysis"], "analysis.", errors);
    r.parse("run", a.run, [](const nlohmann::json& v) {
      if (v.is_string()) return std::vector<std::string>{v.get<std::string>()};
      return v.get<std::vector<std::string>>();
    });
    r.get("replicas", a.replicas);
    r.get("ks", a.ks);
    r.parse("probes", a.probes, read_points);
    r.get("average_probes", a.average_probes);
    r.get("record_times", a.record_times);
    r.get("snapshot", a.snapshot);
    r.get("lags", a.lags);
    r.get("lambdas", a.lambdas);
    r.get("radii", a.radii);
    r.get("betas", a.betas);
    r.get("n_picard", a.n_picard);
    r.get("beta", a.beta);
    r.parse("points", a.points, read_points);
    if (r.has("oracle")) {
      Reader o(r.at("oracle"), "analysis.oracle.", errors);
      o.get("walkers", a.oracle.walkers);
      o.get("inner_steps", a.oracle.inner_steps);
      std::string ps = a.oracle.pair_sum == PairSum::Ordered ? "ordered" : "unordered";
      o.get("pair_sum", ps);
      if (ps == "ordered")
        a.oracle.pair_sum = PairSum::Ordered;
      else if (ps == "unordered")
        a.oracle.pair_sum = PairSum::Unordered;
      else
        errors.push_back("analysis.oracle.pair_sum: expected 'ordered' or 'unordered'");
      if (o.has("r_reg")) {
        double r_reg = 0.0;
        o.get("r_reg", r_reg);
        a.oracle.r_reg = r_reg;
      }
    }
  }

  {
    // Fields that failed to parse keep their defaults here.
    std::vector<std::string> more;
    try {
      more = validate_manifest(m);
    } catch (const std::exception& e) {
      more.push_back(e.what());
    }
    errors.insert(errors.end(), more.begin(), more.end());
  }
  if (!errors.empty()) throw ManifestError(errors);
  return m;
}

std::vector<std::string> validate_manifest(const ExperimentManifest& m) {
  std::vector<std::string> e;
  const auto& a = m.analysis;
  const double L = m.grid.period();

  if (a.run.empty()) e.push_back("analysis.run: no analysis requested");
  for (const auto& name : a.run)
    if (std::find(analysis_names().begin(), analysis_names().end(), name) == analysis_names().end())
      e.push_back("analysis.run: unknown analysis '" + name + "'");
  if (!(m.kappa > 0.0)) e.push_back("solver.kappa must be > 0");
  if (!(m.dt > 0.0)) e.push_back("solver.dt must be > 0");
  if (!(m.t_final >= 0.0)) e.push_back("solver.t_final must be >= 0");
  if (m.threads < 0) e.push_back("threads must be >= 0");
  if (a.replicas < 2) e.push_back("analysis.replicas must be >= 2");

  const bool lattice = requested(m, "simulate") || requested(m, "moments") || requested(m, "extremes") ||
                       requested(m, "localize") || requested(m, "independence") || requested(m, "boundedness");
  if (lattice || requested(m, "noise-selftest")) {
    if (m.model.dimension() != m.grid.dimension())
      e.push_back("model.d (" + std::to_string(m.model.dimension()) + ") differs from grid.d (" +
                  std::to_string(m.grid.dimension()) + ")");
    if (!m.model.has_kernel())
      e.push_back("model: constant covariance has no kernel h, so lattice analyses are unsupported (use 'oracle')");
    else if (!dalang_condition(m.model).finite)
      e.push_back("model: Dalang condition fails, the solution does not exist");
  }
  if (lattice && m.dt > 0.0 && m.t_final > 0.0) {
    try {
      step_count(m.t_final, m.dt);
    } catch (const std::exception& ex) {
      e.push_back(std::string("solver: ") + ex.what());
    }
    for (double t : a.record_times) {
      if (!(t > 0.0 && t <= m.t_final)) {
        e.push_back("analysis.record_times: each time must be in (0, t_final]");
        break;
      }
      try {
        step_count(t, m.dt);
      } catch (const std::exception& ex) {
        e.push_back("analysis.record_times: t = " + std::to_string(t) + ": " + ex.what());
      }
    }
  }
  if (lattice && !(m.t_final > 0.0)) e.push_back("solver.t_final must be > 0 for lattice analyses");

  auto check_ks = [&](int lo, int hi) {
    if (a.ks.empty()) e.push_back("analysis.ks: empty");
    for (int k : a.ks)
      if (k < lo || k > hi) {
        e.push_back("analysis.ks: order " + std::to_string(k) + " outside [" + std::to_string(lo) + ", " +
                    std::to_string(hi) + "]");
        break;
      }
  };
  if (requested(m, "moments") || requested(m, "localize")) check_ks(1, 16);
  if (requested(m, "oracle")) {
    check_ks(2, 16);
    if (a.oracle.walkers < 2) e.push_back("analysis.oracle.walkers must be >= 2");
    if (a.oracle.inner_steps < 1) e.push_back("analysis.oracle.inner_steps must be >= 1");
    if (!(m.t_final > 0.0)) e.push_back("solver.t_final must be > 0 for the oracle");
    if (m.u0.kind != InitialCondition::Kind::Constant) e.push_back("solver.u0: the oracle requires a constant initial level");
    if (m.model.kind() == ModelKind::Riesz && !(m.model.alpha() < 2.0))
      e.push_back("model: the oracle requires alpha < 2 for Riesz models");
  }
  if (requested(m, "extremes")) {
    for (double lam : a.lambdas)
      if (!(lam > std::exp(1.0))) {
        e.push_back("analysis.lambdas: each threshold must exceed e");
        break;
      }
    for (double R : a.radii)
      if (!(R >= 0.0 && R <= L / 2)) {
        e.push_back("analysis.radii: R = " + std::to_string(R) + " violates 0 <= R <= L/2 = " + std::to_string(L / 2));
        break;
      }
    if (a.lambdas.empty() && a.radii.empty()) e.push_back("analysis: extremes needs lambdas or radii");
  }
  if (requested(m, "boundedness")) {
    if (a.radii.size() < 2) e.push_back("analysis.radii: insufficient ladder (need at least two radii)");
    for (double R : a.radii)
      if (!(R >= 0.0 && R <= L / 2)) {
        e.push_back("analysis.radii: R = " + std::to_string(R) + " violates 0 <= R <= L/2 = " + std::to_string(L / 2));
        break;
      }
  }
  auto check_window = [&](double beta, const std::string& where) {
    try {
      validate_localization(m.solver_config(), LocalizationConfig{beta, a.n_picard}, m.t_final);
    } catch (const std::exception& ex) {
      e.push_back(where + ": " + ex.what());
    }
  };
  if (requested(m, "localize")) {
    if (a.betas.empty()) e.push_back("analysis.betas: empty");
    for (double b : a.betas) check_window(b, "analysis.betas");
  }
  if (requested(m, "independence")) {
    check_window(a.beta, "analysis.beta");
    if (a.points.size() < 2) e.push_back("analysis.points: independence needs at least two points");
    for (const auto& p : a.points)
      if (static_cast<int>(p.size()) != m.grid.dimension()) {
        e.push_back("analysis.points: dimension mismatch");
        break;
      }
  }
  for (const auto& p : a.probes)
    if (static_cast<int>(p.size()) != m.grid.dimension()) {
      e.push_back("analysis.probes: dimension mismatch");
      break;
    }
  if (requested(m, "noise-selftest"))
    for (std::size_t lag : a.lags)
      if (lag >= m.grid.points_per_axis()) {
        e.push_back("analysis.lags: lag exceeds the grid");
        break;
      }
  return e;
}

ExperimentManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ManifestError({"cannot open manifest '" + path + "'"});
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const std::exception& e) {
    throw ManifestError({"manifest '" + path + "' is not valid JSON: " + e.what()});
  }
  return parse_manifest(j);
}

CorrelationModel read_model_argument(const std::string& arg) {
  nlohmann::json j;
  std::ifstream in(arg);
  if (in) {
    j = nlohmann::json::parse(in);
  } else {
    try {
      j = nlohmann::json::parse(arg);
    } catch (const std::exception&) {
      throw DomainError("--model: '" + arg + "' is neither a readable file nor JSON");
    }
  }
  return CorrelationModel::from_json(j);
}

}  // namespace she
