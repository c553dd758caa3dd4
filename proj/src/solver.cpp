#include "she/solver.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace she {

double InitialCondition::operator()(PointView x) const {
  if (kind == Kind::Constant) return level;
  return level * std::exp(-squared_norm(x) / (width * width));
}

RealArray InitialCondition::sample(const LatticeGrid& grid) const {
  RealArray u(grid.sites());
  Point x(grid.dimension());
  for (std::size_t s = 0; s < grid.sites(); ++s) {
    grid.site_coordinates(s, x);
    u[s] = (*this)(x);
  }
  return u;
}

nlohmann::json InitialCondition::to_json() const {
  if (kind == Kind::Constant) return {{"kind", "constant"}, {"level", level}};
  return {{"kind", "bump"}, {"amplitude", level}, {"width", width}};
}

InitialCondition InitialCondition::from_json(const nlohmann::json& j) {
  if (j.is_number()) return constant(j.get<double>());
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
    throw DomainError("u0 must be a number or an object with 'kind'");
  auto num = [&](const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) throw DomainError(std::string("u0 field '") + key + "' must be a number");
    return j[key].get<double>();
  };
  const std::string kind = j["kind"].get<std::string>();
  if (kind == "constant") return constant(num("level", 1.0));
  if (kind == "bump") {
    double w = num("width", 1.0);
    if (!(w > 0.0)) throw DomainError("u0 bump width must be positive");
    return bump(num("amplitude", 1.0), w);
  }
  throw DomainError("unknown u0 kind '" + kind + "'");
}

void ClampLog::merge(const ClampLog& o) {
  clamped_sites += o.clamped_sites;
  min_before_clamp = std::min(min_before_clamp, o.min_before_clamp);
}

std::size_t step_count(double t_final, double dt) {
  if (!(dt > 0.0)) throw DomainError("time step dt must be positive");
  if (!(t_final >= 0.0) || !std::isfinite(t_final)) throw DomainError("t_final must be finite and >= 0");
  if (t_final == 0.0) return 0;
  const double k = t_final / dt;
  const double kr = std::round(k);
  if (std::fabs(k - kr) > 1e-9 * std::max(1.0, k)) {
    std::ostringstream os;
    os << "t_final = " << t_final << " is not an integer multiple of dt = " << dt;
    throw DomainError(os.str());
  }
  if (kr < 16.0) {
    std::ostringstream os;
    os << "dt = " << dt << " violates dt <= t_final/16 = " << t_final / 16.0;
    throw DomainError(os.str());
  }
  return static_cast<std::size_t>(kr);
}

namespace {

double max_abs(const RealArray& u) {
  double m = 0.0;
  for (double v : u) m = std::max(m, std::fabs(v));
  return m;
}

// u <- P_dt [u + sigma(s) dF], with s the field sigma is evaluated on.
void mild_increment(RealArray& u, const RealArray& s, const RealArray& dF, const SigmaFunction& sigma,
                    const HeatPropagator& prop, SpectralWorkspace& ws) {
  for (std::size_t i = 0; i < u.size(); ++i) u[i] += sigma(s[i]) * dF[i];
  prop.apply(u, ws);
}

void check_finite(const RealArray& u, double t, double pre_max) {
  for (double v : u) {
    if (!std::isfinite(v)) {
      std::ostringstream os;
      os << "non-finite solution value at t = " << t << " (max|u| before the step = " << pre_max << ")";
      throw NumericalError(os.str());
    }
  }
}

}  // namespace

Solver::Solver(const SolverConfig& cfg, NoiseLevel level)
    : cfg_(cfg), prop_(cfg.grid, cfg.kappa, cfg.dt),
      noise_(std::make_shared<const NoiseKernel>(cfg.model, cfg.grid, level)) {}

SolutionField Solver::initial() const {
  SolutionField f{cfg_.grid, 0.0, cfg_.u0.sample(cfg_.grid), 0, 0, 0, 0, {}};
  return f;
}

void Solver::advance(RealArray& u, const RealArray& dF, double t, ClampLog& log, SpectralWorkspace& ws) const {
  const double pre_max = max_abs(u);
  for (std::size_t i = 0; i < u.size(); ++i) u[i] += cfg_.sigma(u[i]) * dF[i];
  prop_.apply(u, ws);
  check_finite(u, t, pre_max);
  if (clamps()) {
    const double floor = -1e-12 * max_abs(u);
    for (double& v : u) {
      if (v < floor) {
        ++log.clamped_sites;
        log.min_before_clamp = std::min(log.min_before_clamp, v);
        v = floor;
      }
    }
  }
}

void Solver::step(SolutionField& field, const NoiseSlice& slice) const {
  if (!(slice.grid == cfg_.grid) || !(field.grid == cfg_.grid)) throw DomainError("step: grid mismatch");
  if (std::fabs(slice.dt - cfg_.dt) > 1e-15 * cfg_.dt) throw DomainError("step: slice dt differs from solver dt");
  if (field.values.size() != cfg_.grid.sites()) throw DomainError("step: field size mismatch");
  SpectralWorkspace ws(prop_.fft());
  advance(field.values, slice.values, field.t + cfg_.dt, field.clamp, ws);
  field.t += cfg_.dt;
  ++field.steps;
}

SolutionField Solver::solve_white(double t_final, const WhiteProvider& white) const {
  const std::size_t n = step_count(t_final, cfg_.dt);
  SolutionField field = initial();
  SpectralWorkspace ws(prop_.fft());
  SpectralArray white_hat = prop_.fft().make_spectral();
  RealArray w = prop_.fft().make_real();
  RealArray dF = prop_.fft().make_real();
  for (std::size_t j = 0; j < n; ++j) {
    white(j, w);
    prop_.fft().forward(w, white_hat);
    correlate_spectral(white_hat, *noise_, dF, ws);
    advance(field.values, dF, static_cast<double>(j + 1) * cfg_.dt, field.clamp, ws);
  }
  field.steps = n;
  field.t = t_final;
  return field;
}

SolutionField Solver::solve(double t_final, WhiteNoiseSource src) const {
  const std::uint64_t first = src.step_counter();
  SolutionField field = solve_white(t_final, [&](std::size_t, RealArray& w) {
    sample_white_slice_into(src, cfg_.grid, cfg_.dt, w);
  });
  field.seed = src.seed();
  field.stream_id = src.stream_id();
  field.first_step = first;
  return field;
}

SolutionField step(const SolutionField& field, const NoiseSlice& slice, const SolverConfig& cfg) {
  Solver s(cfg, slice.level);
  SolutionField out = field;
  s.step(out, slice);
  return out;
}

SolutionField solve(const SolverConfig& cfg, double t_final, const WhiteNoiseSource& src) {
  return Solver(cfg).solve(t_final, src);
}

double lattice_l2_distance(const RealArray& a, const RealArray& b, const LatticeGrid& grid) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s * grid.cell_volume());
}

double lattice_l2_norm(const RealArray& a, const LatticeGrid& grid) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return std::sqrt(s * grid.cell_volume());
}

namespace {

std::vector<RealArray> frozen_noise(const NoiseKernel& kernel, WhiteNoiseSource src, std::size_t n, double dt) {
  const RealFft& fft = kernel.fft();
  SpectralWorkspace ws(fft);
  SpectralArray white_hat = fft.make_spectral();
  RealArray w = fft.make_real();
  std::vector<RealArray> dF(n, fft.make_real());
  for (std::size_t i = 0; i < n; ++i) {
    sample_white_slice_into(src, kernel.grid(), dt, w);
    fft.forward(w, white_hat);
    correlate_spectral(white_hat, kernel, dF[i], ws);
  }
  return dF;
}

void record_distance(PicardResult& res, double dist, int iteration) {
  res.distances.push_back(dist);
  const std::size_t k = res.distances.size();
  if (iteration > 3 && k >= 2 && !(dist < res.distances[k - 2])) {
    std::ostringstream os;
    os << "Picard iteration " << iteration << " did not contract: distance " << dist
       << " >= previous " << res.distances[k - 2]
       << " (t_final * Lip_sigma^2 * f(0) is likely too large)";
    res.warnings.push_back(os.str());
  }
}

// Picard iteration with exact propagators: the sum over earlier slices
// collapses to the exponential-Euler recursion driven by the previous iterate.
PicardResult picard_exact(const SolverConfig& cfg, const NoiseKernel& kernel, double t_final, int iterations,
                          const WhiteNoiseSource& src) {
  const std::size_t n = step_count(t_final, cfg.dt);
  HeatPropagator prop(cfg.grid, cfg.kappa, cfg.dt);
  SpectralWorkspace ws(prop.fft());
  std::vector<RealArray> dF = frozen_noise(kernel, src, n, cfg.dt);
  const RealArray u0 = cfg.u0.sample(cfg.grid);
  std::vector<RealArray> prev(n + 1, u0), cur(n + 1, u0);
  PicardResult res;
  for (int l = 1; l <= iterations; ++l) {
    RealArray a = u0;
    for (std::size_t j = 1; j <= n; ++j) {
      mild_increment(a, prev[j - 1], dF[j - 1], cfg.sigma, prop, ws);
      check_finite(a, static_cast<double>(j) * cfg.dt, max_abs(prev[j - 1]));
      cur[j] = a;
    }
    record_distance(res, lattice_l2_distance(cur[n], prev[n], cfg.grid), l);
    std::swap(prev, cur);
  }
  res.field = SolutionField{cfg.grid, t_final, prev[n], src.seed(), src.stream_id(), src.step_counter(), n, {}};
  return res;
}

}  // namespace

PicardResult picard_solve(const SolverConfig& cfg, double t_final, int iterations, const WhiteNoiseSource& src) {
  if (iterations < 1) throw DomainError("picard_solve requires iterations >= 1");
  NoiseKernel kernel(cfg.model, cfg.grid, NoiseLevel::full());
  return picard_exact(cfg, kernel, t_final, iterations, src);
}

int LocalizationConfig::iterations() const {
  if (n_picard >= 0) return n_picard;
  if (!std::isfinite(beta)) throw DomainError("beta = infinity requires an explicit n_picard");
  return static_cast<int>(std::floor(std::log(beta))) + 1;
}

void validate_localization(const SolverConfig& cfg, const LocalizationConfig& loc, double t_final) {
  if (!(loc.beta > 0.0)) throw DomainError("localization beta must be positive");
  if (std::isinf(loc.beta)) {
    if (loc.n_picard < 0) throw DomainError("beta = infinity requires an explicit n_picard");
    return;
  }
  const double half = loc.beta * std::sqrt(t_final);
  const double quarter = cfg.grid.period() / 4.0;
  if (half > quarter) {
    std::ostringstream os;
    os << "localization window violates beta*sqrt(t) <= L/4: " << loc.beta << "*sqrt(" << t_final
       << ") = " << half << " > " << quarter;
    throw DomainError(os.str());
  }
  if (loc.beta < cfg.grid.spacing()) throw DomainError("cutoff level beta is smaller than one grid cell");
}

PicardResult localized_solve(const SolverConfig& cfg, const LocalizationConfig& loc, double t_final,
                             const WhiteNoiseSource& src) {
  validate_localization(cfg, loc, t_final);
  const int iters = loc.iterations();
  const std::size_t n = step_count(t_final, cfg.dt);
  if (iters == 0) {
    PicardResult res;
    RealArray u = cfg.u0.sample(cfg.grid);
    if (n > 0) {
      HeatPropagator p(cfg.grid, cfg.kappa, t_final);
      SpectralWorkspace ws(p.fft());
      p.apply(u, ws);
    }
    res.field = SolutionField{cfg.grid, t_final, u, src.seed(), src.stream_id(), src.step_counter(), n, {}};
    return res;
  }
  if (std::isinf(loc.beta)) {
    NoiseKernel kernel(cfg.model, cfg.grid, NoiseLevel::full());
    return picard_exact(cfg, kernel, t_final, iters, src);
  }

  const LatticeGrid& grid = cfg.grid;
  NoiseKernel kernel(cfg.model, grid, NoiseLevel::cutoff(loc.beta));
  const RealFft& fft = kernel.fft();
  SpectralWorkspace ws(fft);
  const std::size_t M = grid.spectral_size();

  // Real-space periodic heat kernels for each lag, then the windowed versions
  // for each evaluation time j: K[j][lag] = DFT(mask_j * IDFT(p^_{lag dt})).
  std::vector<RealArray> p_lag(n + 1, fft.make_real());
  for (std::size_t lag = 1; lag <= n; ++lag) {
    HeatPropagator p(grid, cfg.kappa, static_cast<double>(lag) * cfg.dt);
    SpectralArray spec = fft.make_spectral();
    for (std::size_t k = 0; k < M; ++k) spec[k] = p.multipliers()[k];
    fft.inverse(spec, p_lag[lag], ws.scratch);
  }
  std::vector<double> linf(grid.sites());
  {
    Point x(grid.dimension());
    for (std::size_t s = 0; s < grid.sites(); ++s) {
      grid.site_coordinates(s, x);
      double m = 0.0;
      for (double v : x) m = std::max(m, std::fabs(v));
      linf[s] = m;
    }
  }
  auto window_kernels = [&](std::size_t j) {
    std::vector<std::vector<double>> K(j + 1);
    const double r = loc.beta * std::sqrt(static_cast<double>(j) * cfg.dt);
    RealArray buf = fft.make_real();
    SpectralArray spec = fft.make_spectral();
    for (std::size_t lag = 1; lag <= j; ++lag) {
      for (std::size_t s = 0; s < grid.sites(); ++s) buf[s] = linf[s] <= r ? p_lag[lag][s] : 0.0;
      fft.forward(buf, spec);
      K[lag].resize(M);
      for (std::size_t k = 0; k < M; ++k) K[lag][k] = spec[k].real();
    }
    return K;
  };
  std::vector<std::vector<std::vector<double>>> kernels(n + 1);
  if (iters > 1)
    for (std::size_t j = 1; j <= n; ++j) kernels[j] = window_kernels(j);
  else
    kernels[n] = window_kernels(n);

  std::vector<RealArray> dF = frozen_noise(kernel, src, n, cfg.dt);
  const RealArray u0 = cfg.u0.sample(grid);
  SpectralArray u0_hat = fft.make_spectral();
  fft.forward(u0, u0_hat);
  std::vector<std::vector<double>> heat_mult(n + 1);
  for (std::size_t j = 1; j <= n; ++j)
    heat_mult[j] = HeatPropagator(grid, cfg.kappa, static_cast<double>(j) * cfg.dt).multipliers();

  std::vector<RealArray> prev(n + 1, u0), cur(n + 1, u0);
  std::vector<SpectralArray> G(n, fft.make_spectral());
  RealArray g = fft.make_real();
  SpectralArray acc = fft.make_spectral();
  PicardResult res;
  for (int l = 1; l <= iters; ++l) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t s = 0; s < grid.sites(); ++s) g[s] = cfg.sigma(prev[i][s]) * dF[i][s];
      fft.forward(g, G[i]);
    }
    const std::size_t j_begin = l == iters ? n : 1;
    for (std::size_t j = j_begin; j <= n; ++j) {
      const auto& K = kernels[j];
      for (std::size_t k = 0; k < M; ++k) acc[k] = u0_hat[k] * heat_mult[j][k];
      for (std::size_t i = 0; i < j; ++i) {
        const auto& Kl = K[j - i];
        const auto& Gi = G[i];
        for (std::size_t k = 0; k < M; ++k) acc[k] += Kl[k] * Gi[k];
      }
      fft.inverse(acc, cur[j], ws.scratch);
      check_finite(cur[j], static_cast<double>(j) * cfg.dt, max_abs(prev[j]));
    }
    record_distance(res, lattice_l2_distance(cur[n], prev[n], grid), l);
    std::swap(prev, cur);
  }
  res.field = SolutionField{grid, t_final, prev[n], src.seed(), src.stream_id(), src.step_counter(), n, {}};
  return res;
}

nlohmann::json solver_config_to_json(const SolverConfig& cfg) {
  return {{"kappa", cfg.kappa},
          {"dt", cfg.dt},
          {"grid", cfg.grid.to_json()},
          {"sigma", cfg.sigma.to_json()},
          {"u0", cfg.u0.to_json()},
          {"model", cfg.model.to_json()}};
}

void write_snapshot(const SolutionField& field, const SolverConfig& cfg, const std::string& path_stem) {
  {
    std::ofstream bin(path_stem + ".bin", std::ios::binary);
    if (!bin) throw std::runtime_error("cannot write snapshot " + path_stem + ".bin");
    bin.write(reinterpret_cast<const char*>(field.values.data()),
              static_cast<std::streamsize>(field.values.size() * sizeof(double)));
  }
  nlohmann::json header{{"grid", field.grid.to_json()},
                        {"t", field.t},
                        {"kappa", cfg.kappa},
                        {"sigma", cfg.sigma.name()},
                        {"seed", field.seed},
                        {"stream_id", field.stream_id},
                        {"dtype", "float64"},
                        {"layout", "row-major, last axis fastest"},
                        {"data", path_stem.substr(path_stem.find_last_of('/') + 1) + ".bin"}};
  std::ofstream js(path_stem + ".json");
  if (!js) throw std::runtime_error("cannot write snapshot header " + path_stem + ".json");
  js << header.dump(2) << "\n";
}

}  // namespace she
