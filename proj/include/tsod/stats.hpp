#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>

namespace tsod::stats {

inline double mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  double acc = 0.0;
  for (double x : xs) acc += x;
  return acc / static_cast<double>(xs.size());
}

/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
inline double sample_std(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double mu = mean(xs);
  double acc = 0.0;
  for (double x : xs) acc += (x - mu) * (x - mu);
  return std::sqrt(acc / static_cast<double>(xs.size() - 1));
}

/// P(X <= k) for X ~ Binomial(trials, p).
inline double binomial_cdf(std::int64_t k, std::int64_t trials, double p) {
  if (k < 0) return 0.0;
  if (k >= trials) return 1.0;
  if (p <= 0.0) return 1.0;
  if (p >= 1.0) return 0.0;
  const double lp = std::log(p);
  const double lq = std::log1p(-p);
  const double ln_n = std::lgamma(static_cast<double>(trials) + 1.0);
  double total = 0.0;
  for (std::int64_t i = 0; i <= k; ++i) {
    const double di = static_cast<double>(i);
    const double log_term = ln_n - std::lgamma(di + 1.0) -
                            std::lgamma(static_cast<double>(trials - i) + 1.0) + di * lp +
                            static_cast<double>(trials - i) * lq;
    total += std::exp(log_term);
  }
  return std::min(total, 1.0);
}

/// One-sided test of H0: success probability >= target. Returns true unless
/// H0 is rejected at the given confidence (p-value P(X <= successes) < 1 - confidence).
inline bool binomial_not_below(std::int64_t successes, std::int64_t trials, double target,
                               double confidence = 0.99) {
  return binomial_cdf(successes, trials, target) >= 1.0 - confidence;
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Ordinary least squares y = intercept + slope x.
inline LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("linear_fit needs >= 2 paired points");
  const double mx = mean(x);
  const double my = mean(y);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LinearFit fit;
  fit.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = (sxx > 0.0 && syy > 0.0) ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

}  // namespace tsod::stats
