#pragma once

// Finite-support input distributions and the Gaussian quantizer used to feed
// them to the message-passing estimator. The quantizer splits [-x_T, x_T]
// into 2(n_q - 1) equal cells plus two tails, rounds interior samples toward
// zero onto cell endpoints, and clamps tails to +/- x_T, so the output
// variance is strictly below the input variance. Probabilities are exact
// Gaussian interval masses.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "optcap/channel.hpp"

namespace optcap {

/// Finite-support complex input distribution.
struct QuantizedDistribution {
  std::vector<Complex> atoms;
  std::vector<double> probs;

  void validate() const {
    if (atoms.empty() || atoms.size() != probs.size())
      throw std::invalid_argument("QuantizedDistribution: atoms/probs size mismatch");
    double sum = 0.0;
    for (double p : probs) {
      if (!(p >= 0.0)) throw std::invalid_argument("QuantizedDistribution: negative probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw std::invalid_argument("QuantizedDistribution: probabilities must sum to 1");
    std::vector<Complex> sorted = atoms;
    std::sort(sorted.begin(), sorted.end(), [](Complex a, Complex b) {
      return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    for (std::size_t i = 1; i < sorted.size(); ++i)
      if (sorted[i] == sorted[i - 1])
        throw std::invalid_argument("QuantizedDistribution: atoms must be distinct");
  }

  double mean_power() const {
    double p = 0.0;
    for (std::size_t i = 0; i < atoms.size(); ++i) p += probs[i] * std::norm(atoms[i]);
    return p;
  }

  Complex mean() const {
    Complex m{0.0, 0.0};
    for (std::size_t i = 0; i < atoms.size(); ++i) m += probs[i] * atoms[i];
    return m;
  }
};

inline QuantizedDistribution single_atom(Complex a) { return {{a}, {1.0}}; }

namespace detail {

// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0); }

// Inverse standard normal CDF: Acklam's rational approximation polished with
// one Halley step, accurate to ~1e-15 relative.
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p must be in (0,1)");
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double err = normal_cdf(x) - p;
  const double u = err * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

// Q^{-1}: upper-tail quantile of the standard normal.
inline double q_inverse(double p) { return -normal_quantile(p); }

}  // namespace detail

/// Distribution of the quantizer output when the input is a real Gaussian
/// with mean 0 and variance `variance`. Support has 2 n_q - 1 points. By
/// default the truncation threshold is x_T = 2 sqrt(V) Q^{-1}(eps/2); with
/// `variance_threshold` it is the literal 2 V Q^{-1}(eps/2) (see README).
inline QuantizedDistribution quantize_gaussian(double variance, int n_q, double eps,
                                               bool variance_threshold = false) {
  if (!(variance > 0.0)) throw std::invalid_argument("quantize_gaussian: variance must be > 0");
  if (n_q < 2) throw std::invalid_argument("quantize_gaussian: n_q must be >= 2");
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("quantize_gaussian: eps must be in (0,1)");

  const double sd = std::sqrt(variance);
  const double scale = variance_threshold ? variance : sd;
  const double x_t = 2.0 * scale * detail::q_inverse(0.5 * eps);
  const double step = x_t / (n_q - 1);

  // Magnitude grid m_j = j * step; atoms are +/- m_j so the support is
  // exactly symmetric in floating point.
  std::vector<double> mag(n_q);
  for (int j = 0; j < n_q; ++j) mag[j] = j * step;

  auto cdf = [&](double x) { return detail::normal_cdf(x / sd); };

  // Mass sent to +m_j: interior cells [m_j, m_{j+1}) round down toward zero
  // (their samples are >= 0), the tail clamps to the top point. The cell
  // around zero collects both signs.
  std::vector<double> pos_mass(n_q);
  pos_mass[0] = cdf(mag[1]) - cdf(-mag[1]);
  for (int j = 1; j + 1 < n_q; ++j) pos_mass[j] = cdf(mag[j + 1]) - cdf(mag[j]);
  pos_mass[n_q - 1] = 1.0 - cdf(mag[n_q - 1]);

  QuantizedDistribution out;
  out.atoms.reserve(2 * n_q - 1);
  out.probs.reserve(2 * n_q - 1);
  for (int j = n_q - 1; j >= 1; --j) {
    out.atoms.push_back({-mag[j], 0.0});
    out.probs.push_back(pos_mass[j]);
  }
  for (int j = 0; j < n_q; ++j) {
    out.atoms.push_back({mag[j], 0.0});
    out.probs.push_back(pos_mass[j]);
  }
  return out;
}

/// Complex quantized Gaussian of target power P: the product of independent
/// real quantized Gaussians of variance P/2 on real and imaginary parts.
/// E|X|^2 is strictly below P.
inline QuantizedDistribution quantized_complex_gaussian(double power_w, int n_q, double eps,
                                                        bool variance_threshold = false) {
  if (!(power_w > 0.0))
    throw std::invalid_argument("quantized_complex_gaussian: power must be > 0");
  const QuantizedDistribution real = quantize_gaussian(0.5 * power_w, n_q, eps, variance_threshold);
  QuantizedDistribution out;
  const std::size_t a = real.atoms.size();
  out.atoms.reserve(a * a);
  out.probs.reserve(a * a);
  for (std::size_t i = 0; i < a; ++i)
    for (std::size_t j = 0; j < a; ++j) {
      out.atoms.push_back({real.atoms[i].real(), real.atoms[j].real()});
      out.probs.push_back(real.probs[i] * real.probs[j]);
    }
  return out;
}

/// Draws n iid samples from a finite-support distribution.
inline ComplexSequence sample_from(const QuantizedDistribution& dist, std::size_t n, Rng& rng) {
  ComplexSequence out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform01();
    double acc = 0.0;
    std::size_t pick = dist.atoms.size() - 1;
    for (std::size_t j = 0; j < dist.probs.size(); ++j) {
      acc += dist.probs[j];
      if (u <= acc) {
        pick = j;
        break;
      }
    }
    out[i] = dist.atoms[pick];
  }
  return out;
}

}  // namespace optcap
