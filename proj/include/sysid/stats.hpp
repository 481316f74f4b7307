#pragma once

#include <utility>
#include <vector>

namespace sysid {

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  int points = 0;
};

/// Ordinary least squares y = slope * x + intercept. Needs two distinct x.
/// r_squared is clamped to [0, 1]; a constant y is fitted exactly (r^2 = 1).
RateFit fit_linear(const std::vector<double>& x, const std::vector<double>& y);

/// fit_linear on (log x, log y); all values must be positive.
RateFit fit_loglog_slope(const std::vector<std::pair<double, double>>& points);

/// Linear-interpolation quantile (numpy's default) of an unsorted sample.
double quantile(std::vector<double> sample, double q);
double median(const std::vector<double>& sample);
double mean(const std::vector<double>& sample);
/// Sample standard deviation (n - 1 denominator).
double sample_std(const std::vector<double>& sample);

/// sqrt(p (1 - p) / n).
double binomial_stderr(double p, long n);

struct Histogram {
  std::vector<double> edges;  // counts.size() + 1 entries
  std::vector<long> counts;

  double center(std::size_t i) const { return 0.5 * (edges[i] + edges[i + 1]); }
};

/// Freedman-Diaconis bins over [min, max]; a degenerate sample gets one bin.
Histogram freedman_diaconis_histogram(const std::vector<double>& sample);

/// Centers of local maxima whose count is at least rel_height * max count and
/// whose prominence (drop to the higher of the two surrounding valley floors) is at
/// least rel_height * own count.
/// A run of equal counts forming a maximum counts once, at its midpoint.
std::vector<double> histogram_modes(const Histogram& h, double rel_height = 0.5);

}  // namespace sysid
