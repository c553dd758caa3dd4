#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace she {

/// Kahan-Babuska (Neumaier) compensated accumulator.
class KahanSum {
 public:
  void add(double x);
  double value() const { return sum_ + comp_; }
  KahanSum& operator+=(double x) {
    add(x);
    return *this;
  }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

double kahan_sum(std::span<const double> x);
double mean(std::span<const double> x);
/// Unbiased sample variance.
double variance(std::span<const double> x);

struct Estimate {
  double value = 0.0;
  double stderr_ = 0.0;
  std::size_t n = 0;
};

/// Delete-one jackknife of g(mean(x)).
Estimate jackknife_of_mean(std::span<const double> x, const std::function<double(double)>& g);
/// Jackknife standard error of the plain mean (equals sd / sqrt(n)).
Estimate mean_with_stderr(std::span<const double> x);

/// log(mean(exp(l))) computed stably, with its delete-one jackknife stderr.
Estimate log_mean_exp(std::span<const double> log_values);

/// Fraction of sum(x) carried by the largest ceil(1%) of the (nonnegative) samples.
double top_share(std::span<const double> x, double fraction = 0.01);
/// Marks estimates whose top 1% of samples carry more than half of the mass.
bool heavy_tailed(std::span<const double> x);
/// Same test applied to exp(log_values) without overflow.
bool heavy_tailed_log(std::span<const double> log_values);

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

/// Wilson score interval for a binomial proportion at normal quantile z.
Interval wilson_interval(std::size_t successes, std::size_t trials, double z = 1.959963984540054);

/// Two-sided Student-t quantile t_{1-(1-level)/2, dof}.
double student_t_quantile(double level, double dof);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double intercept_stderr = 0.0;
  double r_squared = 0.0;
  std::size_t n = 0;
  /// Half-width of the 95% confidence interval of the slope.
  double slope_ci95 = 0.0;
};

/// Ordinary least squares y = intercept + slope x.
LinearFit linear_regression(std::span<const double> x, std::span<const double> y);

/// Pearson correlation matrix of the columns of samples (rows = replicas).
std::vector<std::vector<double>> pearson_matrix(const std::vector<std::vector<double>>& samples);

}  // namespace she
