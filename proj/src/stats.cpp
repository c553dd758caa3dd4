#include "she/stats.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <limits>

#include "she/common.hpp"

namespace she {

void KahanSum::add(double x) {
  double t = sum_ + x;
  if (std::fabs(sum_) >= std::fabs(x))
    comp_ += (sum_ - t) + x;
  else
    comp_ += (x - t) + sum_;
  sum_ = t;
}

double kahan_sum(std::span<const double> x) {
  KahanSum s;
  for (double v : x) s.add(v);
  return s.value();
}

double mean(std::span<const double> x) {
  if (x.empty()) throw DomainError("mean of an empty sample");
  return kahan_sum(x) / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
  if (x.size() < 2) throw DomainError("variance needs at least two samples");
  const double m = mean(x);
  KahanSum s;
  for (double v : x) s.add((v - m) * (v - m));
  return s.value() / static_cast<double>(x.size() - 1);
}

Estimate jackknife_of_mean(std::span<const double> x, const std::function<double(double)>& g) {
  const std::size_t n = x.size();
  if (n < 2) throw DomainError("jackknife needs at least two samples");
  const double total = kahan_sum(x);
  const double nn = static_cast<double>(n);
  std::vector<double> loo(n);
  for (std::size_t i = 0; i < n; ++i) loo[i] = g((total - x[i]) / (nn - 1.0));
  const double loo_mean = mean(loo);
  KahanSum s;
  for (double v : loo) s.add((v - loo_mean) * (v - loo_mean));
  return {g(total / nn), std::sqrt((nn - 1.0) / nn * s.value()), n};
}

Estimate mean_with_stderr(std::span<const double> x) {
  if (x.size() < 2) throw DomainError("stderr needs at least two samples");
  return {mean(x), std::sqrt(variance(x) / static_cast<double>(x.size())), x.size()};
}

Estimate log_mean_exp(std::span<const double> l) {
  const std::size_t n = l.size();
  if (n < 2) throw DomainError("log_mean_exp needs at least two samples");
  const double mx = *std::max_element(l.begin(), l.end());
  const double nn = static_cast<double>(n);
  KahanSum s;
  for (double v : l) s.add(std::exp(v - mx));
  const double total = s.value();
  const double full = mx + std::log(total / nn);
  std::vector<double> loo(n);
  for (std::size_t i = 0; i < n; ++i) {
    double rest = total - std::exp(l[i] - mx);
    if (!(rest > 1e-12 * total)) {
      // The removed walker dominated: recompute the remainder directly.
      double m2 = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) m2 = std::max(m2, l[j]);
      KahanSum r;
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) r.add(std::exp(l[j] - m2));
      loo[i] = m2 + std::log(r.value() / (nn - 1.0));
    } else {
      loo[i] = mx + std::log(rest / (nn - 1.0));
    }
  }
  const double loo_mean = mean(loo);
  KahanSum v;
  for (double x : loo) v.add((x - loo_mean) * (x - loo_mean));
  return {full, std::sqrt((nn - 1.0) / nn * v.value()), n};
}

double top_share(std::span<const double> x, double fraction) {
  if (x.empty()) return 0.0;
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end(), std::greater<>());
  std::size_t top = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(fraction * s.size())));
  const double total = kahan_sum(s);
  if (!(total > 0.0)) return 0.0;
  return kahan_sum(std::span<const double>(s.data(), top)) / total;
}

bool heavy_tailed(std::span<const double> x) { return top_share(x) > 0.5; }

bool heavy_tailed_log(std::span<const double> l) {
  if (l.empty()) return false;
  const double mx = *std::max_element(l.begin(), l.end());
  std::vector<double> w(l.size());
  for (std::size_t i = 0; i < l.size(); ++i) w[i] = std::exp(l[i] - mx);
  return heavy_tailed(w);
}

Interval wilson_interval(std::size_t k, std::size_t n, double z) {
  if (n == 0) throw DomainError("Wilson interval needs at least one trial");
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(k) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double centre = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  return {k == 0 ? 0.0 : std::max(0.0, centre - half), k == n ? 1.0 : std::min(1.0, centre + half)};
}

double student_t_quantile(double level, double dof) {
  boost::math::students_t dist(dof);
  return boost::math::quantile(dist, 1.0 - (1.0 - level) / 2.0);
}

LinearFit linear_regression(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n != y.size()) throw DomainError("regression: x and y lengths differ");
  if (n < 2) throw DomainError("regression needs at least two points");
  Eigen::MatrixXd A(n, 2);
  Eigen::VectorXd b(n);
  for (std::size_t i = 0; i < n; ++i) {
    A(i, 0) = 1.0;
    A(i, 1) = x[i];
    b(i) = y[i];
  }
  Eigen::VectorXd beta = A.colPivHouseholderQr().solve(b);
  LinearFit fit;
  fit.n = n;
  fit.intercept = beta(0);
  fit.slope = beta(1);
  Eigen::VectorXd resid = b - A * beta;
  const double rss = resid.squaredNorm();
  const double ybar = b.mean();
  const double tss = (b.array() - ybar).square().sum();
  fit.r_squared = tss > 0.0 ? 1.0 - rss / tss : 1.0;
  if (n > 2) {
    const double s2 = rss / static_cast<double>(n - 2);
    Eigen::Matrix2d cov = s2 * (A.transpose() * A).inverse();
    fit.intercept_stderr = std::sqrt(std::max(0.0, cov(0, 0)));
    fit.slope_stderr = std::sqrt(std::max(0.0, cov(1, 1)));
    fit.slope_ci95 = student_t_quantile(0.95, static_cast<double>(n - 2)) * fit.slope_stderr;
  }
  return fit;
}

std::vector<std::vector<double>> pearson_matrix(const std::vector<std::vector<double>>& samples) {
  if (samples.size() < 2) throw DomainError("correlation needs at least two samples");
  const std::size_t p = samples.front().size();
  const double n = static_cast<double>(samples.size());
  std::vector<double> mu(p, 0.0);
  for (std::size_t a = 0; a < p; ++a) {
    KahanSum s;
    for (const auto& row : samples) s.add(row[a]);
    mu[a] = s.value() / n;
  }
  std::vector<std::vector<double>> c(p, std::vector<double>(p, 0.0));
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = a; b < p; ++b) {
      KahanSum s;
      for (const auto& row : samples) s.add((row[a] - mu[a]) * (row[b] - mu[b]));
      c[a][b] = c[b][a] = s.value();
    }
  }
  std::vector<std::vector<double>> r(p, std::vector<double>(p, 0.0));
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b = 0; b < p; ++b) {
      const double den = std::sqrt(c[a][a] * c[b][b]);
      r[a][b] = den > 0.0 ? c[a][b] / den : (a == b ? 1.0 : 0.0);
    }
  return r;
}

}  // namespace she
