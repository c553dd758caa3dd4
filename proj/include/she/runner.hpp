#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "she/manifest.hpp"

namespace she {

enum ExitCode : int { kExitComplete = 0, kExitFailure = 1, kExitValidation = 2, kExitPartial = 3 };

/// A file produced by an analysis, relative to the bundle directory.
struct BundleFile {
  std::string name;
  std::string contents;
};

struct AnalysisOutput {
  std::string name;
  std::vector<BundleFile> files;
  /// Writers for binary artifacts (snapshots); they return the names written.
  std::vector<std::function<std::vector<std::string>(const std::string& dir)>> writers;
  nlohmann::json summary = nlohmann::json::object();
  /// Human-readable result lines for the terminal.
  std::vector<std::string> lines;
  std::size_t failures = 0;
};

struct ResultBundle {
  ExperimentManifest manifest;
  std::vector<AnalysisOutput> analyses;
  std::string directory;  ///< empty when nothing was written
  std::vector<std::string> files;
  nlohmann::json summary;
  double wall_seconds = 0.0;

  bool complete() const;
  int exit_code() const { return complete() ? kExitComplete : kExitPartial; }
};

struct RunOptions {
  bool emit_gnuplot = false;
  /// Override of the manifest's output directory (empty keeps it).
  std::string output;
};

/// Runs one named analysis of the manifest.
AnalysisOutput run_analysis(const ExperimentManifest& m, const std::string& name);

/// Runs every requested analysis and, when an output directory is set,
/// writes the bundle atomically (temporary directory, then rename).
ResultBundle run(const ExperimentManifest& m, const RunOptions& opt = {});

/// %.17g formatting used by every CSV.
std::string csv_number(double v);

/// Loads a bundle's summary.json and checks it against its manifest copy
/// (and against `expected` when given); throws DomainError on mismatch.
nlohmann::json load_bundle_summary(const std::string& dir, const std::optional<ExperimentManifest>& expected = {});

/// Plain-text rendering of a bundle summary.
std::string format_report(const nlohmann::json& summary);

}  // namespace she
