#pragma once

// Closed-form achievable rates for the finite-memory channel: the Gaussian
// input lower bound with its optimal power clamp, the memoryless GN-model
// capacity it converges to as memory grows, and the auxiliary-channel
// variance objective whose maximizer justifies the bound's noise constant.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "optcap/channel.hpp"
#include "optcap/rng.hpp"

namespace optcap {

/// Sweep abscissa: strictly increasing positive powers in watts.
struct PowerGrid {
  std::vector<double> powers;

  void validate() const {
    for (std::size_t i = 0; i < powers.size(); ++i) {
      if (!(powers[i] > 0.0)) throw std::invalid_argument("PowerGrid: powers must be > 0");
      if (i > 0 && !(powers[i] > powers[i - 1]))
        throw std::invalid_argument("PowerGrid: powers must be strictly increasing");
    }
  }
};

struct RateCurvePoint {
  double power_w = 0.0;
  double rate = 0.0;     // bits/symbol
  double std_err = 0.0;  // bits/symbol; 0 for deterministic methods
};

/// (power, rate) pairs with provenance: method tag, parameter snapshot, and
/// seeding/sample metadata when the method is stochastic.
struct RateCurve {
  std::vector<RateCurvePoint> points;
  std::string method;
  ChannelParams params;
  std::uint64_t seed = 0;
  std::int64_t n_samples = 0;
};

/// Value with a Monte Carlo standard error.
struct MomentEstimate {
  double value = 0.0;
  double std_err = 0.0;
};

/// E[S^3] under iid circularly symmetric Gaussian inputs of power P:
/// P^3 (2N+3)(2N+2) / (2N+1)^2.
inline double mean_cubed_local_power(double power_w, int memory) {
  if (power_w < 0.0) throw std::invalid_argument("mean_cubed_local_power: power must be >= 0");
  if (memory < 0) throw std::invalid_argument("mean_cubed_local_power: memory must be >= 0");
  const double n = memory;
  const double c = (2.0 * n + 3.0) * (2.0 * n + 2.0) / ((2.0 * n + 1.0) * (2.0 * n + 1.0));
  return power_w * power_w * power_w * c;
}

/// Monte Carlo estimate of E[S^3] under iid CN(0, P) inputs; the independent
/// check for mean_cubed_local_power.
inline MomentEstimate mean_cubed_local_power_mc(double power_w, int memory, std::int64_t samples,
                                                std::uint64_t seed) {
  if (power_w < 0.0) throw std::invalid_argument("mean_cubed_local_power_mc: power must be >= 0");
  if (memory < 0 || samples < 1) throw std::invalid_argument("mean_cubed_local_power_mc: bad arguments");
  Rng rng(seed);
  const int w = 2 * memory + 1;
  double sum = 0.0, sumsq = 0.0;
  for (std::int64_t it = 0; it < samples; ++it) {
    double s = 0.0;
    for (int k = 0; k < w; ++k) s += std::norm(rng.complex_normal(power_w));
    s /= w;
    const double s3 = s * s * s;
    sum += s3;
    sumsq += s3 * s3;
  }
  const double mean = sum / samples;
  const double var = std::max(0.0, sumsq / samples - mean * mean);
  return {mean, std::sqrt(var / samples)};
}

/// Power maximizing the closed-form lower bound.
inline double optimal_input_power(const ChannelParams& params) {
  params.validate();
  if (params.eta == 0.0)
    throw std::domain_error("optimal_input_power: no finite optimum; bound is monotone in P");
  const double n = params.memory;
  const double num = params.sigma_a2 * (2.0 * n + 1.0) * (2.0 * n + 1.0);
  const double den = 2.0 * params.eta * (2.0 * n + 3.0) * (2.0 * n + 2.0);
  return std::cbrt(num / den);
}

/// Closed-form achievable rate: with P' = min(P, optimal power),
/// log2(1 + P' / (sigma_a2 + eta E[S^3](P'))). Non-decreasing in P.
inline double capacity_lower_bound(double power_w, const ChannelParams& params) {
  params.validate();
  if (power_w < 0.0) throw std::invalid_argument("capacity_lower_bound: power must be >= 0");
  double p = power_w;
  if (params.eta > 0.0) p = std::min(p, optimal_input_power(params));
  const double denom = params.sigma_a2 + params.eta * mean_cubed_local_power(p, params.memory);
  return std::log2(1.0 + p / denom);
}

/// Capacity of the memoryless GN model: log2(1 + P / (sigma_a2 + eta P^3)).
inline double gn_capacity(double power_w, const ChannelParams& params) {
  params.validate();
  if (power_w < 0.0) throw std::invalid_argument("gn_capacity: power must be >= 0");
  return std::log2(1.0 + power_w / (params.sigma_a2 + params.eta * power_w * power_w * power_w));
}

/// Power at which the GN-model capacity peaks: (sigma_a2 / (2 eta))^(1/3).
inline double gn_peak_power(const ChannelParams& params) {
  params.validate();
  if (params.eta == 0.0)
    throw std::domain_error("gn_peak_power: no finite optimum; capacity is monotone in P");
  return std::cbrt(params.sigma_a2 / (2.0 * params.eta));
}

/// Per-symbol auxiliary-channel rate as a function of the auxiliary noise
/// variance parameter V; maximized at V = E[S^3](P).
inline double aux_variance_objective(double v, double power_w, const ChannelParams& params) {
  params.validate();
  if (v < 0.0) throw std::invalid_argument("aux_variance_objective: V must be >= 0");
  if (power_w < 0.0) throw std::invalid_argument("aux_variance_objective: power must be >= 0");
  const double sbar = mean_cubed_local_power(power_w, params.memory);
  const double aux = params.sigma_a2 + params.eta * v;
  const double tru = params.sigma_a2 + params.eta * sbar;
  constexpr double log2e = std::numbers::log2e;
  return std::log2(1.0 + power_w / aux) - (tru / aux) * log2e +
         ((power_w + tru) / (power_w + aux)) * log2e;
}

}  // namespace optcap
