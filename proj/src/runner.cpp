#include "she/runner.hpp"

#include <unistd.h>

#include <array>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "she/noise.hpp"

namespace she {

namespace fs = std::filesystem;

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string point_label(const Point& p) {
  std::string s;
  for (std::size_t i = 0; i < p.size(); ++i) s += (i ? " " : "") + csv_number(p[i]);
  return s;
}

nlohmann::json estimate_json(const Estimate& e) { return {{"value", e.value}, {"stderr", e.stderr_}}; }

std::size_t count_failures(const std::vector<std::pair<std::size_t, std::string>>& f) { return f.size(); }

nlohmann::json failures_json(const std::vector<std::pair<std::size_t, std::string>>& f) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& [s, msg] : f) j.push_back({{"stream", s}, {"error", msg}});
  return j;
}

AnalysisOutput do_dalang(const ExperimentManifest& m) {
  AnalysisOutput out;
  DalangResult d = dalang_condition(m.model);
  std::ostringstream csv;
  csv << "finite,integral,quadrature_error,converged\n";
  csv << (d.finite ? 1 : 0) << "," << (d.integral ? csv_number(*d.integral) : std::string("inf")) << ","
      << csv_number(d.quadrature.error) << "," << (d.quadrature.converged ? 1 : 0) << "\n";
  out.files.push_back({"dalang.csv", csv.str()});
  out.summary = {{"model", m.model.to_json()},
                 {"finite", d.finite},
                 {"integral", d.integral ? nlohmann::json(*d.integral) : nlohmann::json(nullptr)},
                 {"reason", d.reason}};
  std::string line = "Dalang condition for " + m.model.name() + ": " + (d.finite ? "finite" : "infinite");
  line += d.integral ? ", integral = " + csv_number(*d.integral) : ", integral = inf";
  if (!d.reason.empty()) line += " (" + d.reason + ")";
  out.lines.push_back(line);
  return out;
}

AnalysisOutput do_noise_selftest(const ExperimentManifest& m) {
  AnalysisOutput out;
  NoiseKernel kernel(m.model, m.grid, NoiseLevel::full());
  NoiseSelftest st = noise_selftest(kernel, m.dt, m.analysis.lags, m.analysis.replicas, m.seed, m.farm_options());
  std::ostringstream csv;
  csv << "lag,target,empirical,stderr\n";
  nlohmann::json rows = nlohmann::json::array();
  std::size_t within = 0;
  for (const auto& r : st.rows) {
    const double lag = static_cast<double>(r.lag) * m.grid.spacing();
    csv << csv_number(lag) << "," << csv_number(r.target) << "," << csv_number(r.empirical) << ","
        << csv_number(r.stderr_) << "\n";
    const bool ok = std::fabs(r.empirical - r.target) <= 3.0 * r.stderr_;
    within += ok;
    rows.push_back({{"lag", lag}, {"target", r.target}, {"empirical", r.empirical}, {"stderr", r.stderr_},
                    {"within_3_stderr", ok}});
    out.lines.push_back("lag " + csv_number(lag) + ": target " + fmt("%.6g", r.target) + ", empirical " +
                        fmt("%.6g", r.empirical) + " +- " + fmt("%.2g", r.stderr_));
  }
  const bool band = std::fabs(st.cross_time) < 4.0 * st.cross_time_stderr;
  out.files.push_back({"noise_selftest.csv", csv.str()});
  out.summary = {{"rows", rows},
                 {"slices", st.slices},
                 {"within_3_stderr", within},
                 {"cross_time", st.cross_time},
                 {"cross_time_stderr", st.cross_time_stderr},
                 {"cross_time_within_band", band}};
  out.lines.push_back("cross-time correlation " + fmt("%.3g", st.cross_time) + " +- " +
                      fmt("%.2g", st.cross_time_stderr) + (band ? " (within" : " (outside") + " the 4-stderr band)");
  return out;
}

struct SimRecord {
  std::vector<std::array<double, 5>> stats;
  ClampLog clamp;
};

AnalysisOutput do_simulate(const ExperimentManifest& m) {
  AnalysisOutput out;
  const SolverConfig cfg = m.solver_config();
  Solver solver(cfg);
  std::vector<double> times = m.analysis.record_times;
  if (times.empty()) times.push_back(m.t_final);
  std::sort(times.begin(), times.end());
  std::vector<std::size_t> record;
  for (double t : times) record.push_back(step_count(t, m.dt));
  const std::size_t total = step_count(m.t_final, m.dt);
  std::optional<SolutionField> first;

  auto task = [&](std::size_t r) {
    WhiteNoiseSource src(m.seed, r);
    SolutionField f = solver.initial();
    f.seed = m.seed;
    f.stream_id = r;
    SimRecord rec;
    std::size_t next = 0;
    auto observe = [&](std::size_t step) {
      while (next < record.size() && record[next] == step) {
        KahanSum s, s2;
        double mn = f.values[0], mx = f.values[0], sup = 0.0;
        for (double v : f.values) {
          s.add(v);
          mn = std::min(mn, v);
          mx = std::max(mx, v);
          sup = std::max(sup, std::fabs(v));
        }
        const double n = static_cast<double>(f.values.size());
        const double mean = s.value() / n;
        for (double v : f.values) s2.add((v - mean) * (v - mean));
        rec.stats.push_back({mean, s2.value() / n, mn, mx, sup});
        ++next;
      }
    };
    observe(0);
    for (std::size_t i = 0; i < total; ++i) {
      NoiseSlice slice = correlate_slice(sample_white_slice(src, cfg.grid, cfg.dt), solver.noise(), cfg.dt);
      solver.step(f, slice);
      observe(i + 1);
    }
    rec.clamp = f.clamp;
    if (r == 0 && m.analysis.snapshot) first = f;
    return rec;
  };
  auto res = farm<SimRecord>(m.analysis.replicas, task, m.farm_options());

  std::ostringstream csv;
  csv << "replica,t,mean,var,min,max,sup\n";
  ClampLog clamp;
  std::vector<double> final_sup;
  for (std::size_t i = 0; i < res.values.size(); ++i) {
    const auto& rec = res.values[i];
    clamp.merge(rec.clamp);
    for (std::size_t j = 0; j < rec.stats.size(); ++j) {
      csv << res.streams[i] << "," << csv_number(times[j]);
      for (double v : rec.stats[j]) csv << "," << csv_number(v);
      csv << "\n";
    }
    final_sup.push_back(rec.stats.back()[4]);
  }
  out.files.push_back({"field_stats.csv", csv.str()});
  out.failures = count_failures(res.failures);
  out.summary = {{"record_times", times},
                 {"replicas", res.values.size()},
                 {"clamped_sites", clamp.clamped_sites},
                 {"min_before_clamp", clamp.min_before_clamp},
                 {"failures", failures_json(res.failures)}};
  if (final_sup.size() >= 2) {
    Estimate e = mean_with_stderr(final_sup);
    out.summary["final_sup"] = estimate_json(e);
    out.lines.push_back("mean sup|u| at t = " + csv_number(m.t_final) + ": " + fmt("%.6g", e.value) + " +- " +
                        fmt("%.2g", e.stderr_));
  }
  if (first) {
    SolutionField snap = *first;
    out.writers.push_back([snap, cfg](const std::string& dir) {
      write_snapshot(snap, cfg, dir + "/snapshot_r0");
      return std::vector<std::string>{"snapshot_r0.bin", "snapshot_r0.json"};
    });
  }
  return out;
}

void add_growth_fit(AnalysisOutput& out, const std::vector<int>& ks, const std::vector<double>& logs) {
  if (ks.size() < 4) return;
  try {
    ExponentFit f = moment_growth_exponent(ks, logs);
    out.summary["growth_fit"] = f.to_json();
    out.lines.push_back("moment growth exponent theta = " + fmt("%.4f", f.exponent) + " +- " +
                        fmt("%.2g", f.stderr_));
  } catch (const std::exception& e) {
    out.summary["growth_fit_error"] = e.what();
  }
}

AnalysisOutput do_moments(const ExperimentManifest& m) {
  AnalysisOutput out;
  Scenario sc = m.scenario_config();
  MomentReport rep = estimate_moments(sc, m.analysis.ks, m.analysis.replicas);
  std::ostringstream csv;
  csv << "k,t,probe,x,estimate,stderr,unreliable,heavy_tail\n";
  std::vector<int> ks;
  std::vector<double> logs;
  for (const auto& row : rep.rows) {
    for (std::size_t p = 0; p < row.per_probe.size(); ++p)
      csv << row.k << "," << csv_number(rep.t) << "," << p << "," << point_label(rep.probes[p]) << ","
          << csv_number(row.per_probe[p].value) << "," << csv_number(row.per_probe[p].stderr_) << ","
          << row.unreliable << "," << row.heavy_tail << "\n";
    if (sc.average_probes && row.per_probe.size() > 1)
      csv << row.k << "," << csv_number(rep.t) << ",mean,," << csv_number(row.estimate.value) << ","
          << csv_number(row.estimate.stderr_) << "," << row.unreliable << "," << row.heavy_tail << "\n";
    out.lines.push_back("E|u|^" + std::to_string(row.k) + " = " + fmt("%.6g", row.estimate.value) + " +- " +
                        fmt("%.2g", row.estimate.stderr_) + (row.unreliable ? " [unreliable]" : "") +
                        (row.heavy_tail ? " [heavy tail]" : ""));
    if (!row.unreliable) {
      ks.push_back(row.k);
      logs.push_back(std::log(row.estimate.value));
    }
  }
  out.files.push_back({"moments.csv", csv.str()});
  out.failures = count_failures(rep.failures);
  out.summary = rep.to_json();
  add_growth_fit(out, ks, logs);
  return out;
}

AnalysisOutput do_oracle(const ExperimentManifest& m) {
  AnalysisOutput out;
  std::ostringstream csv;
  csv << "k,t,estimate,stderr,log_estimate,log_stderr,heavy_tail,top_share,walkers,r_reg\n";
  nlohmann::json rows = nlohmann::json::array();
  std::vector<int> ks;
  std::vector<double> logs;
  for (int k : m.analysis.ks) {
    FkOracleConfig cfg;
    cfg.walkers = m.analysis.oracle.walkers;
    cfg.inner_steps = m.analysis.oracle.inner_steps;
    cfg.k = k;
    cfg.r_reg = m.analysis.oracle.r_reg;
    cfg.pair_sum = m.analysis.oracle.pair_sum;
    cfg.seed = m.seed;
    cfg.farm = m.farm_options();
    FkOracleResult r = fk_moment_oracle(m.model, m.kappa, m.t_final, cfg, m.u0.level);
    csv << k << "," << csv_number(r.t) << "," << csv_number(r.estimate) << "," << csv_number(r.stderr_) << ","
        << csv_number(r.log_estimate) << "," << csv_number(r.log_stderr) << "," << r.heavy_tail << ","
        << csv_number(r.top_share) << "," << r.walkers << "," << csv_number(r.r_reg) << "\n";
    rows.push_back(r.to_json());
    out.lines.push_back("k=" + std::to_string(k) + " t=" + csv_number(r.t) + ": E u^k = " + csv_number(r.estimate) +
                        " +- " + fmt("%.3g", r.stderr_) + (r.heavy_tail ? " [heavy tail]" : ""));
    ks.push_back(k);
    logs.push_back(r.log_estimate);
  }
  out.files.push_back({"oracle.csv", csv.str()});
  out.summary = {{"rows", rows},
                 {"pair_sum", m.analysis.oracle.pair_sum == PairSum::Ordered ? "ordered" : "unordered"}};
  add_growth_fit(out, ks, logs);
  return out;
}

AnalysisOutput do_extremes(const ExperimentManifest& m) {
  AnalysisOutput out;
  Scenario sc = m.scenario_config();
  Solver solver(sc.solver);
  const std::size_t site = sc.probe_sites().front();
  const auto& radii = m.analysis.radii;
  auto task = [&](std::size_t r) {
    SolutionField f = solver.solve(sc.t_final, WhiteNoiseSource(sc.seed, r));
    std::vector<double> v{f.values[site]};
    for (double R : radii) v.push_back(spatial_sup(f, R));
    return v;
  };
  auto res = farm<std::vector<double>>(m.analysis.replicas, task, sc.farm);
  out.failures = count_failures(res.failures);
  out.summary["failures"] = failures_json(res.failures);
  out.summary["replicas"] = res.values.size();

  if (!m.analysis.lambdas.empty()) {
    std::vector<double> u;
    for (const auto& v : res.values) u.push_back(v[0]);
    std::ostringstream csv;
    csv << "lambda,probability,lower,upper,exceedances,trials,upper_bound_only\n";
    nlohmann::json rows = nlohmann::json::array();
    for (double lam : m.analysis.lambdas) {
      TailEstimate te = tail_from_samples(u, lam);
      csv << csv_number(lam) << "," << csv_number(te.probability) << "," << csv_number(te.interval.lower) << ","
          << csv_number(te.interval.upper) << "," << te.exceedances << "," << te.trials << ","
          << te.upper_bound_only << "\n";
      rows.push_back({{"lambda", lam},
                      {"probability", te.probability},
                      {"lower", te.interval.lower},
                      {"upper", te.interval.upper},
                      {"upper_bound_only", te.upper_bound_only}});
      out.lines.push_back("P{|u| > " + csv_number(lam) + "} = " + fmt("%.4g", te.probability) + " [" +
                          fmt("%.3g", te.interval.lower) + ", " + fmt("%.3g", te.interval.upper) + "]" +
                          (te.upper_bound_only ? " (upper bound only)" : ""));
    }
    out.files.push_back({"tails.csv", csv.str()});
    out.summary["tails"] = rows;
  }
  if (!radii.empty()) {
    std::ostringstream csv;
    csv << "R,mean_sup,stderr_sup,mean_log_sup,stderr_log_sup\n";
    const bool pam = m.sigma.kind == SigmaKind::Linear;
    std::vector<std::pair<double, double>> series;
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t j = 0; j < radii.size(); ++j) {
      std::vector<double> s, ls;
      for (const auto& v : res.values) {
        s.push_back(v[j + 1]);
        if (v[j + 1] > 0.0) ls.push_back(std::log(v[j + 1]));
      }
      Estimate es = mean_with_stderr(s);
      Estimate el = ls.size() >= 2 ? mean_with_stderr(ls) : Estimate{};
      csv << csv_number(radii[j]) << "," << csv_number(es.value) << "," << csv_number(es.stderr_) << ","
          << csv_number(el.value) << "," << csv_number(el.stderr_) << "\n";
      rows.push_back({{"R", radii[j]}, {"sup", estimate_json(es)}, {"log_sup", estimate_json(el)}});
      series.emplace_back(radii[j], pam ? el.value : es.value);
    }
    out.files.push_back({"sup.csv", csv.str()});
    out.summary["sup"] = rows;
    if (radii.size() >= 4) {
      try {
        ExponentFit f = fluctuation_exponent(series);
        f.method += pam ? " (y = mean log u*)" : " (y = mean u*)";
        out.summary["fluctuation_fit"] = f.to_json();
        out.lines.push_back("fluctuation exponent psi = " + fmt("%.4f", f.exponent) + " +- " + fmt("%.2g", f.stderr_));
      } catch (const std::exception& e) {
        out.summary["fluctuation_fit_error"] = e.what();
      }
    }
  }
  return out;
}

AnalysisOutput do_localize(const ExperimentManifest& m) {
  AnalysisOutput out;
  LocalizationCurve c = localization_error_curve(m.scenario_config(), m.analysis.betas, m.analysis.ks,
                                                 m.analysis.replicas, m.analysis.n_picard);
  std::ostringstream csv;
  csv << "beta,n_picard,k,error,stderr\n";
  for (const auto& r : c.rows) {
    csv << csv_number(r.beta) << "," << r.n_picard << "," << r.k << "," << csv_number(r.error.value) << ","
        << csv_number(r.error.stderr_) << "\n";
    out.lines.push_back("beta " + csv_number(r.beta) + " (n = " + std::to_string(r.n_picard) + "), k = " +
                        std::to_string(r.k) + ": error " + fmt("%.4g", r.error.value) + " +- " +
                        fmt("%.2g", r.error.stderr_));
  }
  out.files.push_back({"localization.csv", csv.str()});
  out.failures = count_failures(c.failures);
  out.summary = c.to_json();
  for (int k : m.analysis.ks) {
    bool dec = true;
    double prev = std::numeric_limits<double>::infinity();
    for (const auto& r : c.rows)
      if (r.k == k) {
        dec = dec && r.error.value < prev;
        prev = r.error.value;
      }
    out.summary["strictly_decreasing_k" + std::to_string(k)] = dec;
  }
  return out;
}

AnalysisOutput do_independence(const ExperimentManifest& m) {
  AnalysisOutput out;
  IndependenceResult r = independence_test(m.analysis.points, m.scenario_config(),
                                           LocalizationConfig{m.analysis.beta, m.analysis.n_picard},
                                           m.analysis.replicas);
  std::ostringstream csv;
  csv << "i,j,correlation\n";
  for (std::size_t i = 0; i < r.correlation.size(); ++i)
    for (std::size_t j = 0; j < r.correlation.size(); ++j)
      csv << i << "," << j << "," << csv_number(r.correlation[i][j]) << "\n";
  out.files.push_back({"independence.csv", csv.str()});
  out.failures = count_failures(r.failures);
  out.summary = r.to_json();
  out.lines.push_back("max |corr| = " + fmt("%.4f", r.max_abs_offdiag) + ", null band " + fmt("%.4f", r.null_band) +
                      (r.within_band ? " (within)" : " (exceeded)") + "; min separation " +
                      fmt("%.4g", r.min_separation) + " vs required " + fmt("%.4g", r.required_separation));
  return out;
}

AnalysisOutput do_boundedness(const ExperimentManifest& m) {
  AnalysisOutput out;
  BoundednessResult b = boundedness_probe(m.scenario_config(), m.analysis.radii, m.analysis.replicas);
  std::ostringstream csv;
  csv << "R,mean_sup,stderr_sup,mean_log_sup,stderr_log_sup\n";
  for (const auto& r : b.rows) {
    csv << csv_number(r.R) << "," << csv_number(r.sup.value) << "," << csv_number(r.sup.stderr_) << ","
        << csv_number(r.log_sup.value) << "," << csv_number(r.log_sup.stderr_) << "\n";
    out.lines.push_back("R " + csv_number(r.R) + ": mean u* " + fmt("%.5g", r.sup.value) + " +- " +
                        fmt("%.2g", r.sup.stderr_));
  }
  out.files.push_back({"boundedness.csv", csv.str()});
  out.failures = count_failures(b.failures);
  out.summary = b.to_json();
  out.lines.push_back("verdict: " + b.verdict);
  if (b.rows.size() >= 4) {
    try {
      ExponentFit f = b.pooled_fit();
      out.summary["pooled_fit"] = f.to_json();
      out.summary["per_replica_fit"] = estimate_json(b.per_replica_fit());
      out.lines.push_back("pooled fluctuation exponent psi = " + fmt("%.4f", f.exponent) + " +- " +
                          fmt("%.2g", f.stderr_));
    } catch (const std::exception& e) {
      out.summary["pooled_fit_error"] = e.what();
    }
  }
  return out;
}

std::string gnuplot_script(const std::vector<std::string>& files) {
  std::ostringstream g;
  g << "set datafile separator ','\nset key autotitle columnhead\nset terminal pngcairo size 900,600\n";
  auto has = [&](const std::string& f) { return std::find(files.begin(), files.end(), f) != files.end(); };
  if (has("noise_selftest.csv"))
    g << "set output 'noise_selftest.png'\nset xlabel 'lag'\n"
         "plot 'noise_selftest.csv' using 1:2 with lines, '' using 1:3:4 with yerrorbars\n";
  if (has("moments.csv"))
    g << "set output 'moments.png'\nset logscale y\nset xlabel 'k'\n"
         "plot 'moments.csv' using 1:5:6 with yerrorbars\nunset logscale y\n";
  if (has("oracle.csv"))
    g << "set output 'oracle.png'\nset xlabel 'k'\nplot 'oracle.csv' using 1:5:6 with yerrorbars\n";
  if (has("tails.csv"))
    g << "set output 'tails.png'\nset logscale y\nset xlabel 'lambda'\n"
         "plot 'tails.csv' using 1:2 with linespoints\nunset logscale y\n";
  if (has("sup.csv"))
    g << "set output 'sup.png'\nset logscale x\nset xlabel 'R'\n"
         "plot 'sup.csv' using 1:2:3 with yerrorbars\nunset logscale x\n";
  if (has("localization.csv"))
    g << "set output 'localization.png'\nset logscale xy\nset xlabel 'beta'\n"
         "plot 'localization.csv' using 1:4:5 with yerrorbars\nunset logscale xy\n";
  if (has("boundedness.csv"))
    g << "set output 'boundedness.png'\nset logscale x\nset xlabel 'R'\n"
         "plot 'boundedness.csv' using 1:2:3 with yerrorbars\nunset logscale x\n";
  if (has("field_stats.csv"))
    g << "set output 'field_stats.png'\nset xlabel 't'\nplot 'field_stats.csv' using 2:7 with points\n";
  return g.str();
}

void write_file(const fs::path& p, const std::string& contents) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << contents;
}

std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw DomainError("cannot read " + p.string());
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

}  // namespace

std::string csv_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool ResultBundle::complete() const {
  for (const auto& a : analyses)
    if (a.failures > 0 || a.summary.contains("error")) return false;
  return true;
}

AnalysisOutput run_analysis(const ExperimentManifest& m, const std::string& name) {
  AnalysisOutput out;
  if (name == "dalang")
    out = do_dalang(m);
  else if (name == "noise-selftest")
    out = do_noise_selftest(m);
  else if (name == "simulate")
    out = do_simulate(m);
  else if (name == "moments")
    out = do_moments(m);
  else if (name == "oracle")
    out = do_oracle(m);
  else if (name == "extremes")
    out = do_extremes(m);
  else if (name == "localize")
    out = do_localize(m);
  else if (name == "independence")
    out = do_independence(m);
  else if (name == "boundedness")
    out = do_boundedness(m);
  else
    throw DomainError("unknown analysis '" + name + "'");
  out.name = name;
  return out;
}

ResultBundle run(const ExperimentManifest& m, const RunOptions& opt) {
  ResultBundle b;
  b.manifest = m;
  const auto start = std::chrono::steady_clock::now();
  for (const auto& name : m.analysis.run) {
    try {
      b.analyses.push_back(run_analysis(m, name));
    } catch (const ManifestError&) {
      throw;
    } catch (const std::exception& e) {
      AnalysisOutput failed;
      failed.name = name;
      failed.summary = {{"error", e.what()}};
      failed.lines.push_back(std::string("failed: ") + e.what());
      b.analyses.push_back(std::move(failed));
    }
  }
  b.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  nlohmann::json analyses = nlohmann::json::object();
  std::size_t failures = 0;
  for (const auto& a : b.analyses) {
    analyses[a.name] = a.summary;
    failures += a.failures;
  }
  b.summary = {{"version", m.version},
               {"scenario", m.scenario},
               {"manifest_hash", m.hash_hex()},
               {"seed", m.seed},
               {"replicas", m.analysis.replicas},
               {"stream_ids", {0, m.analysis.replicas == 0 ? 0 : m.analysis.replicas - 1}},
               {"threads", m.threads},
               {"complete", b.complete()},
               {"replica_failures", failures},
               {"wall_seconds", b.wall_seconds},
               {"analyses", analyses}};

  const std::string dir = opt.output.empty() ? m.output : opt.output;
  if (dir.empty()) return b;

  const fs::path target(dir);
  const fs::path tmp = fs::path(dir + ".tmp-" + std::to_string(::getpid()));
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  ExperimentManifest copy = m;
  copy.output = dir;
  write_file(tmp / "manifest.json", copy.to_json().dump(2) + "\n");
  b.files.push_back("manifest.json");
  for (const auto& a : b.analyses) {
    for (const auto& f : a.files) {
      write_file(tmp / f.name, f.contents);
      b.files.push_back(f.name);
    }
    for (const auto& w : a.writers)
      for (const auto& name : w(tmp.string())) b.files.push_back(name);
  }
  if (opt.emit_gnuplot) {
    write_file(tmp / "plot.gp", gnuplot_script(b.files));
    b.files.push_back("plot.gp");
  }
  b.summary["files"] = b.files;
  write_file(tmp / "summary.json", b.summary.dump(2) + "\n");
  if (fs::exists(target)) fs::remove_all(target);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::rename(tmp, target);
  b.directory = dir;
  return b;
}

nlohmann::json load_bundle_summary(const std::string& dir, const std::optional<ExperimentManifest>& expected) {
  const fs::path d(dir);
  nlohmann::json summary, manifest_j;
  try {
    summary = nlohmann::json::parse(read_file(d / "summary.json"));
    manifest_j = nlohmann::json::parse(read_file(d / "manifest.json"));
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("bundle is not valid JSON: ") + e.what());
  }
  const std::string recorded = summary.value("manifest_hash", std::string());
  const std::string actual = parse_manifest(manifest_j).hash_hex();
  if (recorded != actual)
    throw DomainError("manifest hash mismatch: summary records " + recorded + " but the bundle manifest hashes to " +
                      actual);
  if (expected && expected->hash_hex() != recorded)
    throw DomainError("manifest hash mismatch: bundle " + recorded + " vs requested manifest " +
                      expected->hash_hex());
  if (summary.contains("files"))
    for (const auto& f : summary["files"])
      if (!fs::exists(d / f.get<std::string>())) throw DomainError("bundle is missing " + f.get<std::string>());
  return summary;
}

namespace {

std::string scalar_text(const nlohmann::json& v) {
  if (v.is_number_float()) return fmt("%.6g", v.get<double>());
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

void render(std::ostringstream& os, const nlohmann::json& obj, int indent) {
  const std::string pad(static_cast<std::size_t>(indent), ' ');
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const auto& v = it.value();
    if (v.is_object()) {
      bool flat = true;
      for (const auto& x : v) flat = flat && x.is_primitive();
      if (flat) {
        os << pad << it.key() << ":";
        for (auto jt = v.begin(); jt != v.end(); ++jt) os << " " << jt.key() << "=" << scalar_text(jt.value());
        os << "\n";
      } else {
        os << pad << it.key() << ":\n";
        render(os, v, indent + 2);
      }
    } else if (v.is_array() && !v.empty() && v.front().is_object()) {
      std::vector<std::string> cols;
      for (auto jt = v.front().begin(); jt != v.front().end(); ++jt)
        if (jt.value().is_primitive()) cols.push_back(jt.key());
      os << pad << it.key() << ":\n" << pad << " ";
      for (const auto& c : cols) os << " " << std::setw(14) << c;
      os << "\n";
      for (const auto& row : v) {
        os << pad << " ";
        for (const auto& c : cols) os << " " << std::setw(14) << (row.contains(c) ? scalar_text(row[c]) : "");
        os << "\n";
      }
    } else if (v.is_array() && v.size() > 12) {
      os << pad << it.key() << ": [" << v.size() << " values]\n";
    } else {
      os << pad << it.key() << ": " << scalar_text(v) << "\n";
    }
  }
}

}  // namespace

std::string format_report(const nlohmann::json& summary) {
  std::ostringstream os;
  os << "scenario " << summary.value("scenario", std::string("?")) << "  manifest "
     << summary.value("manifest_hash", std::string("?")) << "\n";
  os << "seed " << summary.value("seed", 0ULL) << ", replicas " << summary.value("replicas", 0ULL) << ", "
     << (summary.value("complete", false) ? "complete" : "PARTIAL") << ", replica failures "
     << summary.value("replica_failures", 0ULL) << "\n";
  if (summary.contains("analyses"))
    for (auto it = summary["analyses"].begin(); it != summary["analyses"].end(); ++it) {
      os << "\n[" << it.key() << "]\n";
      render(os, it.value(), 2);
    }
  if (summary.contains("files")) {
    os << "\nfiles:";
    for (const auto& f : summary["files"]) os << " " << f.get<std::string>();
    os << "\n";
  }
  return os.str();
}

}  // namespace she
