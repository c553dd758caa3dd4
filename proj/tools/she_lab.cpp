#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "she/manifest.hpp"
#include "she/runner.hpp"

using namespace she;
using nlohmann::json;

namespace {

struct Flags {
  std::string manifest;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replicas;
  std::optional<int> threads;
  std::string out;
  bool emit_gnuplot = false;

  std::string model;
  std::optional<double> t, kappa, dt, dx, beta;
  std::optional<int> d, n_picard;
  std::optional<std::size_t> m, walkers, inner_steps;
  std::vector<int> ks;
  std::vector<double> radii, betas, lambdas;
  std::vector<std::size_t> lags;
  std::string sigma, u0, points, probes, pair_sum, scenario;
  bool average_probes = false;
  bool snapshot = false;
  std::string bundle;
};

/// Inline JSON, a path to a JSON file, or a bare string / number.
json json_argument(const std::string& s) {
  std::ifstream in(s);
  if (in) return json::parse(in);
  try {
    return json::parse(s);
  } catch (const std::exception&) {
    return json(s);
  }
}

json build_manifest_json(const Flags& f, const std::string& verb) {
  json j;
  if (!f.manifest.empty()) {
    std::ifstream in(f.manifest);
    if (!in) throw ManifestError({"cannot open manifest '" + f.manifest + "'"});
    try {
      j = json::parse(in);
    } catch (const std::exception& e) {
      throw ManifestError({"manifest '" + f.manifest + "' is not valid JSON: " + e.what()});
    }
    if (!j.is_object()) throw ManifestError({"manifest must be a JSON object"});
  } else {
    ExperimentManifest defaults;
    j = defaults.to_json();
    j["scenario"] = verb;
  }
  if (verb != "run") j["analysis"]["run"] = json::array({verb});
  if (!f.scenario.empty()) j["scenario"] = f.scenario;
  if (f.seed) j["seed"] = *f.seed;
  if (f.replicas) j["analysis"]["replicas"] = *f.replicas;
  if (f.threads) j["threads"] = *f.threads;
  if (!f.out.empty()) j["output"] = f.out;

  if (!f.model.empty()) {
    j["model"] = json_argument(f.model);
    // Without a manifest the default grid follows the model's dimension.
    if (f.manifest.empty() && !f.d && j["model"].is_object() && j["model"].contains("d") && j["model"]["d"].is_number_integer())
      j["grid"]["d"] = j["model"]["d"];
  } else if (f.d && f.manifest.empty()) {
    j["model"]["d"] = *f.d;
  }
  if (f.d) j["grid"]["d"] = *f.d;
  if (f.manifest.empty() && !f.m && j["grid"]["d"].is_number_integer()) {
    const int d = j["grid"]["d"].get<int>();
    j["grid"]["m"] = d == 1 ? 256 : d == 2 ? 64 : 32;
  }
  if (f.m) j["grid"]["m"] = *f.m;
  if (f.dx) j["grid"]["dx"] = *f.dx;
  if (f.t) j["solver"]["t_final"] = *f.t;
  if (f.kappa) j["solver"]["kappa"] = *f.kappa;
  if (f.dt) j["solver"]["dt"] = *f.dt;
  if (!f.sigma.empty()) j["solver"]["sigma"] = json_argument(f.sigma);
  if (!f.u0.empty()) j["solver"]["u0"] = json_argument(f.u0);

  auto& a = j["analysis"];
  if (!f.ks.empty()) a["ks"] = f.ks;
  if (!f.radii.empty()) a["radii"] = f.radii;
  if (!f.betas.empty()) a["betas"] = f.betas;
  if (!f.lambdas.empty()) a["lambdas"] = f.lambdas;
  if (!f.lags.empty()) a["lags"] = f.lags;
  if (f.beta) a["beta"] = *f.beta;
  if (f.n_picard) a["n_picard"] = *f.n_picard;
  if (!f.points.empty()) a["points"] = json_argument(f.points);
  if (!f.probes.empty()) a["probes"] = json_argument(f.probes);
  if (f.average_probes) a["average_probes"] = true;
  if (f.snapshot) a["snapshot"] = true;
  if (f.walkers) a["oracle"]["walkers"] = *f.walkers;
  if (f.inner_steps) a["oracle"]["inner_steps"] = *f.inner_steps;
  if (!f.pair_sum.empty()) a["oracle"]["pair_sum"] = f.pair_sum;
  return j;
}

int run_verb(const Flags& f, const std::string& verb) {
  ExperimentManifest m;
  try {
    m = parse_manifest(build_manifest_json(f, verb));
  } catch (const ManifestError& e) {
    std::cerr << e.what() << "\n";
    return kExitValidation;
  } catch (const json::exception& e) {
    std::cerr << "invalid manifest: " << e.what() << "\n";
    return kExitValidation;
  }
  RunOptions opt;
  opt.emit_gnuplot = f.emit_gnuplot;
  ResultBundle b = run(m, opt);
  for (const auto& a : b.analyses) {
    if (b.analyses.size() > 1) std::cout << "[" << a.name << "]\n";
    for (const auto& line : a.lines) std::cout << line << "\n";
    if (a.failures > 0) std::cout << a.failures << " replica(s) failed\n";
  }
  if (!b.directory.empty())
    std::cout << "bundle " << b.directory << " (manifest " << m.hash_hex() << ", "
              << (b.complete() ? "complete" : "partial") << ")\n";
  return b.exit_code();
}

int run_report(const Flags& f) {
  std::optional<ExperimentManifest> expected;
  try {
    if (!f.manifest.empty()) expected = load_manifest(f.manifest);
  } catch (const ManifestError& e) {
    std::cerr << e.what() << "\n";
    return kExitValidation;
  }
  try {
    json summary = load_bundle_summary(f.bundle, expected);
    std::cout << format_report(summary);
    return summary.value("complete", false) ? kExitComplete : kExitPartial;
  } catch (const std::exception& e) {
    std::cerr << "report refused: " << e.what() << "\n";
    return kExitValidation;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo laboratory for the stochastic heat equation with spatially correlated noise", "she_lab"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags f;

  app.add_option("--manifest", f.manifest, "Experiment manifest (JSON)");
  app.add_option("--seed", f.seed, "Master seed");
  app.add_option("--replicas", f.replicas, "Number of replicas N (stream ids 0..N-1)");
  app.add_option("--threads", f.threads, "Worker threads (0 = OpenMP default)");
  app.add_option("--out", f.out, "Bundle output directory");
  app.add_flag("--emit-gnuplot", f.emit_gnuplot, "Write plot.gp next to the CSVs");

  app.add_option("--model", f.model, "Correlation model: JSON file or inline JSON");
  app.add_option("--scenario", f.scenario, "Scenario name");
  app.add_option("--t", f.t, "Final time t");
  app.add_option("--kappa", f.kappa, "Viscosity kappa");
  app.add_option("--dt", f.dt, "Time step");
  app.add_option("--d", f.d, "Spatial dimension");
  app.add_option("--m", f.m, "Points per axis (power of two)");
  app.add_option("--dx", f.dx, "Lattice spacing");
  app.add_option("--sigma", f.sigma, "Nonlinearity: kind name or JSON");
  app.add_option("--u0", f.u0, "Initial condition: number or JSON");
  app.add_option("--k", f.ks, "Moment orders")->delimiter(',');
  app.add_option("--radii", f.radii, "Radius ladder R")->delimiter(',');
  app.add_option("--betas", f.betas, "Localization ladder beta")->delimiter(',');
  app.add_option("--beta", f.beta, "Localization beta for the independence test");
  app.add_option("--n-picard", f.n_picard, "Picard iterations (-1 = floor(log beta) + 1)");
  app.add_option("--lambda", f.lambdas, "Tail thresholds")->delimiter(',');
  app.add_option("--lags", f.lags, "Noise self-test lags in sites")->delimiter(',');
  app.add_option("--points", f.points, "Independence points as JSON, e.g. [[0],[16]]");
  app.add_option("--probes", f.probes, "Probe points as JSON");
  app.add_flag("--average-probes", f.average_probes, "Average moments over the probes");
  app.add_flag("--snapshot", f.snapshot, "simulate: write replica 0's final field");
  app.add_option("--walkers", f.walkers, "Oracle walkers M");
  app.add_option("--inner-steps", f.inner_steps, "Oracle time steps");
  app.add_option("--pair-sum", f.pair_sum, "Oracle pair sum: ordered | unordered");

  const std::vector<std::pair<std::string, std::string>> verbs{
      {"dalang", "Dalang integral and verdict for a model"},
      {"noise-selftest", "Empirical vs target noise covariance table"},
      {"simulate", "Solve replicas and record field statistics"},
      {"moments", "Monte Carlo moments E|u_t(x)|^k"},
      {"oracle", "Feynman-Kac moment oracle"},
      {"extremes", "Tail probabilities and spatial suprema"},
      {"localize", "Coupled localization error curve"},
      {"independence", "Correlations of localized solutions at separated points"},
      {"boundedness", "Spatial supremum against a growing radius ladder"},
      {"run", "Run every analysis listed in the manifest"}};
  std::vector<CLI::App*> subs;
  for (const auto& [name, help] : verbs) subs.push_back(app.add_subcommand(name, help));
  CLI::App* report = app.add_subcommand("report", "Render a bundle summary (refuses hash mismatches)");
  report->add_option("bundle", f.bundle, "Bundle directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitValidation;
  }

  try {
    if (report->parsed()) return run_report(f);
    for (CLI::App* s : subs)
      if (s->parsed()) return run_verb(f, s->get_name());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}
