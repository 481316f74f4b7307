#include "sysid/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sysid/error.hpp"

namespace sysid {

RateFit fit_linear(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw InvalidArgument("fit_linear: x and y differ in length");
  const std::size_t n = x.size();
  if (n < 2) throw InvalidArgument("fit_linear: need at least two points");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw InvalidArgument("fit_linear: non-finite point");
  }
  const double mx = mean(x);
  const double my = mean(y);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw InvalidArgument("fit_linear: need at least two distinct x");
  RateFit fit;
  fit.points = static_cast<int>(n);
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    sse += r * r;
  }
  const double scale = std::max(syy, 1e-300);
  fit.r_squared = syy <= 1e-28 * std::max(1.0, my * my) * static_cast<double>(n) ? 1.0 : 1.0 - sse / scale;
  fit.r_squared = std::clamp(fit.r_squared, 0.0, 1.0);
  return fit;
}

RateFit fit_loglog_slope(const std::vector<std::pair<double, double>>& points) {
  std::vector<double> lx, ly;
  for (const auto& [x, y] : points) {
    if (!(x > 0.0) || !(y > 0.0)) throw InvalidArgument("fit_loglog_slope: values must be positive");
    lx.push_back(std::log(x));
    ly.push_back(std::log(y));
  }
  return fit_linear(lx, ly);
}

double quantile(std::vector<double> sample, double q) {
  if (sample.empty()) throw InvalidArgument("quantile: empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("quantile: q must be in [0, 1]");
  std::sort(sample.begin(), sample.end());
  const double pos = q * static_cast<double>(sample.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sample.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sample[lo] + frac * (sample[hi] - sample[lo]);
}

double median(const std::vector<double>& sample) { return quantile(sample, 0.5); }

double mean(const std::vector<double>& sample) {
  if (sample.empty()) throw InvalidArgument("mean: empty sample");
  return std::accumulate(sample.begin(), sample.end(), 0.0) / static_cast<double>(sample.size());
}

double sample_std(const std::vector<double>& sample) {
  if (sample.size() < 2) return 0.0;
  const double m = mean(sample);
  double ss = 0.0;
  for (double v : sample) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(sample.size() - 1));
}

double binomial_stderr(double p, long n) {
  if (n <= 0) throw InvalidArgument("binomial_stderr: n must be positive");
  return std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(n));
}

Histogram freedman_diaconis_histogram(const std::vector<double>& sample) {
  if (sample.empty()) throw InvalidArgument("histogram: empty sample");
  const auto [lo_it, hi_it] = std::minmax_element(sample.begin(), sample.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  const double iqr = quantile(sample, 0.75) - quantile(sample, 0.25);
  const double width = 2.0 * iqr / std::cbrt(static_cast<double>(sample.size()));
  std::size_t bins = 1;
  if (hi > lo && width > 0.0) bins = static_cast<std::size_t>(std::max(1.0, std::ceil((hi - lo) / width)));
  Histogram h;
  h.counts.assign(bins, 0);
  for (std::size_t i = 0; i <= bins; ++i) {
    h.edges.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins));
  }
  for (double v : sample) {
    std::size_t k = hi > lo ? static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(bins)) : 0;
    h.counts[std::min(k, bins - 1)] += 1;
  }
  return h;
}

std::vector<double> histogram_modes(const Histogram& h, double rel_height) {
  std::vector<double> modes;
  if (h.counts.empty()) return modes;
  const long top = *std::max_element(h.counts.begin(), h.counts.end());
  const double floor = rel_height * static_cast<double>(top);
  const std::size_t n = h.counts.size();
  // Lowest count between a peak and the nearest strictly higher bar on one
  // side; the region past the histogram edge counts as zero.
  auto valley = [&](std::size_t from, int step, long c) {
    long low = c;
    for (long k = static_cast<long>(from) + step; k >= 0 && k < static_cast<long>(n); k += step) {
      const long v = h.counts[static_cast<std::size_t>(k)];
      if (v > c) return low;
      low = std::min(low, v);
    }
    return 0L;
  };
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && h.counts[j + 1] == h.counts[i]) ++j;
    const long c = h.counts[i];
    const bool left_ok = i == 0 || h.counts[i - 1] < c;
    const bool right_ok = j + 1 == n || h.counts[j + 1] < c;
    if (left_ok && right_ok && c > 0 && static_cast<double>(c) >= floor) {
      const long base = std::max(valley(i, -1, c), valley(j, 1, c));
      if (static_cast<double>(c - base) >= rel_height * static_cast<double>(c)) {
        modes.push_back(0.5 * (h.center(i) + h.center(j)));
      }
    }
    i = j + 1;
  }
  return modes;
}

}  // namespace sysid
