#pragma once

#include <omp.h>

#include <cstddef>
#include <exception>
#include <optional>
#include <string>
#include <vector>

namespace she {

enum class Execution { Serial, OpenMP };

struct FarmOptions {
  Execution execution = Execution::OpenMP;
  int threads = 0;  ///< 0 keeps the OpenMP default
};

template <class R>
struct ReplicaOutcome {
  std::optional<R> value;
  std::string error;
};

/// Runs task(stream_id) for stream ids 0..n-1 and returns the outcomes
/// indexed by stream id. Each replica writes only its own slot, so the
/// result is independent of scheduling and thread count. Exceptions are
/// captured per replica.
template <class R, class Task>
std::vector<ReplicaOutcome<R>> run_replicas(std::size_t n, const Task& task, const FarmOptions& opt = {}) {
  std::vector<ReplicaOutcome<R>> out(n);
  auto one = [&](std::size_t i) {
    try {
      out[i].value.emplace(task(i));
    } catch (const std::exception& e) {
      out[i].error = e.what();
    } catch (...) {
      out[i].error = "unknown error";
    }
  };
  if (opt.execution == Execution::Serial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) one(i);
    return out;
  }
  const int threads = opt.threads > 0 ? opt.threads : omp_get_max_threads();
  const long nn = static_cast<long>(n);
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (long i = 0; i < nn; ++i) one(static_cast<std::size_t>(i));
  return out;
}

/// Replica results with failures split off, still in stream-id order.
template <class R>
struct FarmResult {
  std::vector<R> values;
  std::vector<std::size_t> streams;
  std::vector<std::pair<std::size_t, std::string>> failures;
  bool partial() const { return !failures.empty(); }
};

template <class R>
FarmResult<R> collect(std::vector<ReplicaOutcome<R>>&& outcomes) {
  FarmResult<R> res;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (outcomes[i].value) {
      res.values.push_back(std::move(*outcomes[i].value));
      res.streams.push_back(i);
    } else {
      res.failures.emplace_back(i, outcomes[i].error);
    }
  }
  return res;
}

template <class R, class Task>
FarmResult<R> farm(std::size_t n, const Task& task, const FarmOptions& opt = {}) {
  return collect(run_replicas<R>(n, task, opt));
}

}  // namespace she
