#pragma once

// Finite-memory optical channel: each output sees the input plus ASE noise
// plus a nonlinear-interference term whose variance scales with the cube of
// the local power, a sliding-window average of input powers over 2N+1
// symbols. Indices outside the transmitted block contribute zero power.

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "optcap/rng.hpp"

namespace optcap {

using Complex = std::complex<double>;
using ComplexSequence = std::vector<Complex>;

/// Physical and model constants of the channel.
struct ChannelParams {
  double eta = 0.0;       // nonlinearity coefficient, 1/W^2
  double sigma_a2 = 1.0;  // ASE noise variance, W
  int memory = 0;         // window half-width N

  void validate() const {
    if (!(eta >= 0.0)) throw std::invalid_argument("ChannelParams: eta must be >= 0");
    if (!(sigma_a2 > 0.0)) throw std::invalid_argument("ChannelParams: sigma_a2 must be > 0");
    if (memory < 0) throw std::invalid_argument("ChannelParams: memory must be >= 0");
  }
};

/// Simulated block: outputs y[i] and the local powers s[i] they saw.
struct SimOutput {
  ComplexSequence y;
  std::vector<double> s;  // watts
};

/// Sliding-window average power around symbol i (0-based); out-of-range
/// indices count as zero.
inline double local_power(const ComplexSequence& x, std::size_t i, const ChannelParams& params) {
  params.validate();
  if (i >= x.size()) throw std::out_of_range("local_power: index out of range");
  const std::size_t n = x.size();
  const std::size_t lo = i >= static_cast<std::size_t>(params.memory) ? i - params.memory : 0;
  const std::size_t hi = std::min(n - 1, i + static_cast<std::size_t>(params.memory));
  double sum = 0.0;
  for (std::size_t k = lo; k <= hi; ++k) sum += std::norm(x[k]);
  return sum / (2.0 * params.memory + 1.0);
}

namespace detail {

// Local powers for outputs 0..n-1 where n = x.size() - memory, via prefix sums.
inline std::vector<double> local_powers(const ComplexSequence& x, int memory) {
  const std::size_t len = x.size();
  std::vector<double> prefix(len + 1, 0.0);
  for (std::size_t k = 0; k < len; ++k) prefix[k + 1] = prefix[k] + std::norm(x[k]);
  const std::size_t n = len - static_cast<std::size_t>(memory);
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= static_cast<std::size_t>(memory) ? i - memory : 0;
    const std::size_t hi = std::min(len - 1, i + static_cast<std::size_t>(memory));
    s[i] = std::max(0.0, (prefix[hi + 1] - prefix[lo]) / (2.0 * memory + 1.0));
  }
  return s;
}

inline void check_sim_input(const ComplexSequence& x, const ChannelParams& params) {
  params.validate();
  if (x.empty()) throw std::invalid_argument("simulate: empty input");
  if (x.size() <= static_cast<std::size_t>(params.memory))
    throw std::invalid_argument("simulate: input must be longer than the channel memory");
}

}  // namespace detail

/// Simulates the channel over inputs x of length n+N, producing n outputs:
/// y[i] = x[i] + a[i] + z[i] * sqrt(eta * s[i]^3) with a ~ CN(0, sigma_a2)
/// and z ~ CN(0, 1), all draws independent. Deterministic given the seed.
inline SimOutput simulate(const ComplexSequence& x, const ChannelParams& params, std::uint64_t seed) {
  detail::check_sim_input(x, params);
  Rng rng(seed);
  SimOutput out;
  out.s = detail::local_powers(x, params.memory);
  out.y.resize(out.s.size());
  for (std::size_t i = 0; i < out.y.size(); ++i) {
    const Complex a = rng.complex_normal(params.sigma_a2);
    const Complex z = rng.complex_normal(1.0);
    const double s = out.s[i];
    out.y[i] = x[i] + a + z * std::sqrt(params.eta * s * s * s);
  }
  return out;
}

/// Single-noise-source formulation with the same per-symbol conditional law:
/// y[i] = x[i] + z[i] * sqrt(sigma_a2 + eta * s[i]^3).
inline SimOutput simulate_equivalent(const ComplexSequence& x, const ChannelParams& params,
                                     std::uint64_t seed) {
  detail::check_sim_input(x, params);
  Rng rng(seed);
  SimOutput out;
  out.s = detail::local_powers(x, params.memory);
  out.y.resize(out.s.size());
  for (std::size_t i = 0; i < out.y.size(); ++i) {
    const double s = out.s[i];
    out.y[i] = x[i] + rng.complex_normal(params.sigma_a2 + params.eta * s * s * s);
  }
  return out;
}

/// Conditional noise variance given a local power value.
inline double noise_variance(double local_power_w, const ChannelParams& params) {
  return params.sigma_a2 + params.eta * local_power_w * local_power_w * local_power_w;
}

/// log of the conditional output density given the 2N+1 input window
/// (boundary entries zero-padded by the caller). Natural log.
inline double log_conditional_density(Complex y, std::span<const Complex> x_window,
                                      const ChannelParams& params) {
  params.validate();
  const std::size_t w = 2 * static_cast<std::size_t>(params.memory) + 1;
  if (x_window.size() != w)
    throw std::invalid_argument("conditional_density: window must have length 2N+1");
  double sum = 0.0;
  for (const Complex& c : x_window) sum += std::norm(c);
  const double v = noise_variance(sum / static_cast<double>(w), params);
  const Complex center = x_window[params.memory];
  return -std::norm(y - center) / v - std::log(std::numbers::pi * v);
}

/// Conditional output density p(y | x window): circularly symmetric complex
/// Gaussian with mean x_window[N] and variance sigma_a2 + eta * S^3.
inline double conditional_density(Complex y, std::span<const Complex> x_window,
                                  const ChannelParams& params) {
  return std::exp(log_conditional_density(y, x_window, params));
}

}  // namespace optcap
