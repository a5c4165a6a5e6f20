#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "pocfuse/error.hpp"

namespace pocfuse::num {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Softmax of `logits + mask`, where mask entries are 0 (attend) or -inf
// (blocked). Stabilized by subtracting the max over unmasked entries; blocked
// positions come out as exact zeros.
inline std::vector<double> softmax_masked(std::span<const double> logits,
                                          std::span<const double> mask) {
  if (logits.size() != mask.size())
    throw InvariantError("softmax_masked: mask length differs from logits");
  double peak = kNegInf;
  for (std::size_t j = 0; j < logits.size(); ++j) {
    if (!std::isfinite(logits[j])) throw InvariantError("softmax_masked: non-finite logit");
    if (mask[j] == 0.0 && logits[j] > peak) peak = logits[j];
  }
  if (peak == kNegInf) throw InvariantError("empty attention support");
  std::vector<double> out(logits.size(), 0.0);
  double total = 0.0;
  for (std::size_t j = 0; j < logits.size(); ++j) {
    if (mask[j] != 0.0) continue;
    out[j] = std::exp(logits[j] - peak);
    total += out[j];
  }
  for (double& v : out) v /= total;
  return out;
}

inline std::vector<double> log_softmax(std::span<const double> logits) {
  double peak = kNegInf;
  for (double v : logits) peak = std::max(peak, v);
  double total = 0.0;
  for (double v : logits) total += std::exp(v - peak);
  const double log_z = peak + std::log(total);
  std::vector<double> out(logits.size());
  for (std::size_t j = 0; j < logits.size(); ++j) out[j] = logits[j] - log_z;
  return out;
}

// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Exact GeLU, x * Phi(x).
inline double gelu(double x) { return x * normal_cdf(x); }

inline double gelu_derivative(double x) {
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return normal_cdf(x) + x * pdf;
}

}  // namespace pocfuse::num
