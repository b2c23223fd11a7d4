#ifndef RIDE_TESTS_ORACLES_HPP
#define RIDE_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <vector>

#include <Eigen/Core>

namespace testutil {

// Central finite differences, h = 1e-5.
inline Eigen::VectorXd finite_difference(const std::function<double(const Eigen::VectorXd&)>& f,
                                         const Eigen::VectorXd& x, double h = 1e-5) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd xp = x;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double orig = xp[k];
    xp[k] = orig + h;
    const double fp = f(xp);
    xp[k] = orig - h;
    const double fm = f(xp);
    xp[k] = orig;
    g[k] = (fp - fm) / (2.0 * h);
  }
  return g;
}

// Relative error with an absolute floor for near-zero coordinates.
inline double max_scaled_error(const Eigen::VectorXd& analytic, const Eigen::VectorXd& numeric) {
  double worst = 0.0;
  for (Eigen::Index k = 0; k < analytic.size(); ++k) {
    const double denom = std::max({std::abs(analytic[k]), std::abs(numeric[k]), 1e-3});
    worst = std::max(worst, std::abs(analytic[k] - numeric[k]) / denom);
  }
  return worst;
}

// Composite Simpson integration of exp(logf) over [lo, hi].
inline double integrate_exp(const std::function<double(double)>& logf, double lo, double hi,
                            int intervals = 4000) {
  if (intervals % 2 != 0) ++intervals;
  const double h = (hi - lo) / intervals;
  double sum = std::exp(logf(lo)) + std::exp(logf(hi));
  for (int k = 1; k < intervals; ++k) {
    sum += (k % 2 == 1 ? 4.0 : 2.0) * std::exp(logf(lo + k * h));
  }
  return sum * h / 3.0;
}

struct Moments {
  double mean = 0.0;
  double var = 0.0;
};

inline Moments sample_moments(const std::vector<double>& xs) {
  Moments m;
  for (double x : xs) m.mean += x;
  m.mean /= static_cast<double>(xs.size());
  for (double x : xs) m.var += (x - m.mean) * (x - m.mean);
  m.var /= static_cast<double>(xs.size());
  return m;
}

inline double correlation(const std::vector<double>& xs, const std::vector<double>& ys) {
  const Moments mx = sample_moments(xs), my = sample_moments(ys);
  double cov = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) cov += (xs[k] - mx.mean) * (ys[k] - my.mean);
  cov /= static_cast<double>(xs.size());
  return cov / std::sqrt(mx.var * my.var);
}

inline double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Kolmogorov-Smirnov distance of a sample to the standard normal.
inline double ks_distance_normal(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const double cdf = standard_normal_cdf(xs[k]);
    d = std::max(d, std::abs(cdf - static_cast<double>(k) / n));
    d = std::max(d, std::abs(cdf - static_cast<double>(k + 1) / n));
  }
  return d;
}

// Unique writable scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& tag) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("ride_test_" + tag + "_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testutil

#endif  // RIDE_TESTS_ORACLES_HPP
