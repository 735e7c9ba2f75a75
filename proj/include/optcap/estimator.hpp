#pragma once

// Monte Carlo achievable-rate estimation for the channel with memory.
//
// The output entropy rate h(Y^n)/n is estimated by a forward message-passing
// recursion over one simulated trajectory: the message over adjacent input
// pairs is propagated through the windowed channel density and the
// per-step normalization constants lambda_k accumulate -log p(y^n).
//
// For memory N = 1 the recursion uses a factored representation. The channel
// density p(y_k | x_{k-1}, x_k, x_{k+1}) depends on the neighbors only
// through their squared magnitudes, so the message always has the form
// mu_k(x_k, x_{k+1}) = p(x_{k+1}) T_k(x_k, class(x_{k+1})) where classes
// group atoms of equal |atom|^2. Propagating T (size A x M, M = number of
// power classes) instead of the full A^2 table makes the paper-scale
// alphabets (A ~ 1500) tractable. A direct table recursion over A^(2N)
// states is provided for general N behind a size guard; it doubles as an
// independent cross-check of the factored path.
//
// Kernels are evaluated in log space and max-shifted before exponentiation
// (tracked scale), so tail observations cannot underflow the recursion.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "optcap/bounds.hpp"
#include "optcap/channel.hpp"
#include "optcap/quantize.hpp"
#include "optcap/rng.hpp"

namespace optcap {

/// Rate (or entropy rate) estimate in bits/symbol with Monte Carlo error.
struct RateEstimate {
  double rate = 0.0;
  double std_err = 0.0;
  std::int64_t n_samples = 0;
  std::uint64_t seed = 0;
  double raw_rate = 0.0;  // rate before clamping at zero
};

struct EstimatorOptions {
  bool allow_general_memory = false;  // enable the N != 1 recursion
  bool force_general = false;         // use the direct table recursion even for N == 1
  int batches = 20;                   // batch-means batches for standard errors
  std::int64_t table_guard = 10'000'000;  // refuse general-N tables above this
};

namespace detail {

// Groups values into classes merged within a tolerance relative to the
// largest value; returns sorted representatives and per-value class index.
struct ValueClasses {
  std::vector<double> values;       // class representatives, ascending
  std::vector<std::size_t> index;   // class of each input value
};

inline ValueClasses merge_classes(const std::vector<double>& raw) {
  ValueClasses out;
  out.index.resize(raw.size());
  if (raw.empty()) return out;
  std::vector<std::size_t> order(raw.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return raw[a] < raw[b]; });
  const double tol = 1e-12 * std::max(raw[order.back()], 1e-300);
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i == 0 || raw[order[i]] - out.values.back() > tol) out.values.push_back(raw[order[i]]);
    out.index[order[i]] = out.values.size() - 1;
  }
  return out;
}

inline double log2_pie_variance(double v) {
  return std::log2(std::numbers::pi * std::numbers::e * v);
}

// Batch-means standard error of the mean of a dependent sequence.
inline double batch_means_std_err(std::span<const double> xs, int batches) {
  const std::int64_t n = static_cast<std::int64_t>(xs.size());
  if (n < 2) return 0.0;
  if (n < 2 * batches) {
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= n;
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    return std::sqrt(var / (n - 1) / n);
  }
  const std::int64_t size = n / batches;
  std::vector<double> means(batches, 0.0);
  for (int b = 0; b < batches; ++b) {
    for (std::int64_t i = b * size; i < (b + 1) * size; ++i) means[b] += xs[i];
    means[b] /= size;
  }
  double grand = 0.0;
  for (double m : means) grand += m;
  grand /= batches;
  double var = 0.0;
  for (double m : means) var += (m - grand) * (m - grand);
  var /= (batches - 1);
  return std::sqrt(var / batches);
}

}  // namespace detail

/// Forward recursion for memory N = 1 in the factored representation.
/// Feed outputs one at a time; log2_lambdas() collects the per-step
/// normalizers whose mean estimates -h(Y^n)/n.
class ForwardRecursion {
 public:
  ForwardRecursion(const QuantizedDistribution& dist, const ChannelParams& chan)
      : chan_(chan), atoms_(dist.atoms), probs_(dist.probs) {
    chan.validate();
    dist.validate();
    if (chan.memory != 1) throw std::invalid_argument("ForwardRecursion: requires memory == 1");
    build_tables();
  }

  /// Processes the next channel output; returns log2 of its normalizer.
  double step(Complex y) {
    const std::size_t a_count = atoms_.size();
    const std::size_t m_count = class_values_.size();
    for (std::size_t a = 0; a < a_count; ++a) dist2_[a] = std::norm(y - atoms_[a]);

    double shift;
    if (first_) {
      // T_hat[a][c] = p(a) * kernel(y | window power 0 + q(a) + qv[c])
      shift = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < a_count; ++a) {
        for (std::size_t c = 0; c < m_count; ++c) {
          const double v = noise_variance((class_values_[class_of_[a]] + class_values_[c]) / 3.0, chan_);
          const double lk = std::log(probs_[a]) - dist2_[a] / v - std::log(std::numbers::pi * v);
          scratch_[a * m_count + c] = lk;
          shift = std::max(shift, lk);
        }
      }
      for (std::size_t i = 0; i < a_count * m_count; ++i)
        message_[i] = std::exp(scratch_[i] - shift);
      first_ = false;
    } else if (chan_.eta == 0.0) {
      // Memoryless kernel: constant over classes, so the update collapses.
      const double v = chan_.sigma_a2;
      const double lpv = std::log(std::numbers::pi * v);
      shift = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < a_count; ++a) shift = std::max(shift, -dist2_[a] / v - lpv);
      for (std::size_t a = 0; a < a_count; ++a) {
        const double k = std::exp(-dist2_[a] / v - lpv - shift);
        const double* ucol = &upm_[class_of_[a] * m_count];
        double row = 0.0;
        for (std::size_t m = 0; m < m_count; ++m) row += ucol[m];
        const double t = probs_[a] * k * row;
        for (std::size_t c = 0; c < m_count; ++c) message_[a * m_count + c] = t;
      }
    } else {
      // Pass 1: log kernels over (atom, pair-sum) and their maximum.
      const std::size_t w_count = pair_values_.size();
      shift = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < a_count; ++a) {
        double* row = &kernel_log_[a * w_count];
        const double d2 = dist2_[a];
        if (have_kernel_tables_) {
          const double* iv = &inv_v_[class_of_[a] * w_count];
          const double* lp = &log_pi_v_[class_of_[a] * w_count];
          for (std::size_t w = 0; w < w_count; ++w) {
            row[w] = -d2 * iv[w] - lp[w];
            shift = std::max(shift, row[w]);
          }
        } else {
          const double q = class_values_[class_of_[a]];
          for (std::size_t w = 0; w < w_count; ++w) {
            const double v = noise_variance((q + pair_values_[w]) / 3.0, chan_);
            row[w] = -d2 / v - std::log(std::numbers::pi * v);
            shift = std::max(shift, row[w]);
          }
        }
      }
      // Pass 2: T_hat[a][c'] = p(a) sum_m U[c(a)][m] kexp[a][pair(m, c')].
      for (std::size_t a = 0; a < a_count; ++a) {
        double* krow = &kernel_log_[a * w_count];
        for (std::size_t w = 0; w < w_count; ++w) krow[w] = std::exp(krow[w] - shift);
        const double* ucol = &upm_[class_of_[a] * m_count];
        const double pa = probs_[a];
        for (std::size_t c = 0; c < m_count; ++c) {
          const std::uint32_t* widx = &pair_index_[c * m_count];
          double acc = 0.0;
          for (std::size_t m = 0; m < m_count; ++m) acc += ucol[m] * krow[widx[m]];
          message_[a * m_count + c] = pa * acc;
        }
      }
    }

    // Normalize, rebuild the class-summed view, record the step scale.
    double lambda_hat = 0.0;
    for (std::size_t a = 0; a < a_count; ++a)
      for (std::size_t c = 0; c < m_count; ++c)
        lambda_hat += class_prob_[c] * message_[a * m_count + c];
    if (!(lambda_hat > 0.0) || !std::isfinite(lambda_hat))
      throw std::runtime_error("ForwardRecursion: normalizer underflow; observation has vanishing likelihood");
    const double inv = 1.0 / lambda_hat;
    std::fill(upm_.begin(), upm_.end(), 0.0);
    for (std::size_t a = 0; a < a_count; ++a) {
      const std::size_t m = class_of_[a];
      for (std::size_t c = 0; c < m_count; ++c) {
        const double t = message_[a * m_count + c] * inv;
        message_[a * m_count + c] = t;
        upm_[c * m_count + m] += t;
      }
    }
    const double log2_lambda = (std::log(lambda_hat) + shift) * std::numbers::log2e;
    log2_lambdas_.push_back(log2_lambda);
    return log2_lambda;
  }

  const std::vector<double>& log2_lambdas() const { return log2_lambdas_; }

  /// Materializes the normalized pair message mu(x_k, x_{k+1}); intended for
  /// testing on small alphabets.
  std::vector<double> message_table() const {
    const std::size_t a_count = atoms_.size();
    const std::size_t m_count = class_values_.size();
    std::vector<double> mu(a_count * a_count);
    for (std::size_t a = 0; a < a_count; ++a)
      for (std::size_t b = 0; b < a_count; ++b)
        mu[a * a_count + b] = probs_[b] * message_[a * m_count + class_of_[b]];
    return mu;
  }

 private:
  void build_tables() {
    const std::size_t a_count = atoms_.size();
    std::vector<double> powers(a_count);
    for (std::size_t a = 0; a < a_count; ++a) powers[a] = std::norm(atoms_[a]);
    auto classes = detail::merge_classes(powers);
    class_values_ = std::move(classes.values);
    class_of_ = std::move(classes.index);
    const std::size_t m_count = class_values_.size();
    class_prob_.assign(m_count, 0.0);
    for (std::size_t a = 0; a < a_count; ++a) class_prob_[class_of_[a]] += probs_[a];

    // Distinct pairwise sums of class powers; index is stored [c][m] so the
    // contraction walks it contiguously.
    std::vector<double> sums(m_count * m_count);
    for (std::size_t m = 0; m < m_count; ++m)
      for (std::size_t c = 0; c < m_count; ++c) sums[m * m_count + c] = class_values_[m] + class_values_[c];
    auto pair_classes = detail::merge_classes(sums);
    pair_values_ = std::move(pair_classes.values);
    pair_index_.resize(m_count * m_count);
    for (std::size_t m = 0; m < m_count; ++m)
      for (std::size_t c = 0; c < m_count; ++c)
        pair_index_[c * m_count + m] = static_cast<std::uint32_t>(pair_classes.index[m * m_count + c]);

    const std::size_t w_count = pair_values_.size();
    have_kernel_tables_ = chan_.eta > 0.0 && m_count * w_count <= 12'500'000;
    if (have_kernel_tables_) {
      inv_v_.resize(m_count * w_count);
      log_pi_v_.resize(m_count * w_count);
      for (std::size_t p = 0; p < m_count; ++p)
        for (std::size_t w = 0; w < w_count; ++w) {
          const double v = noise_variance((class_values_[p] + pair_values_[w]) / 3.0, chan_);
          inv_v_[p * w_count + w] = 1.0 / v;
          log_pi_v_[p * w_count + w] = std::log(std::numbers::pi * v);
        }
    }
    if (chan_.eta > 0.0) kernel_log_.resize(a_count * w_count);
    message_.assign(a_count * m_count, 0.0);
    scratch_.resize(a_count * m_count);
    upm_.assign(m_count * m_count, 0.0);
    dist2_.resize(a_count);
  }

  ChannelParams chan_;
  std::vector<Complex> atoms_;
  std::vector<double> probs_;
  std::vector<double> class_values_;
  std::vector<std::size_t> class_of_;
  std::vector<double> class_prob_;
  std::vector<double> pair_values_;
  std::vector<std::uint32_t> pair_index_;
  bool have_kernel_tables_ = false;
  std::vector<double> inv_v_, log_pi_v_;
  std::vector<double> kernel_log_;
  std::vector<double> message_;  // T[a][c], normalized
  std::vector<double> scratch_;
  std::vector<double> upm_;      // U[c][m] = sum over atoms in class m of T[a][c]
  std::vector<double> dist2_;
  bool first_ = true;
  std::vector<double> log2_lambdas_;
};

/// Direct table recursion over the joint message of the last 2N inputs, for
/// arbitrary memory N >= 1. State grows as A^(2N); refuses above the guard.
class GeneralForwardRecursion {
 public:
  GeneralForwardRecursion(const QuantizedDistribution& dist, const ChannelParams& chan,
                          std::int64_t table_guard = 10'000'000)
      : chan_(chan), atoms_(dist.atoms), probs_(dist.probs) {
    chan.validate();
    dist.validate();
    if (chan.memory < 1) throw std::invalid_argument("GeneralForwardRecursion: memory must be >= 1");
    const int n = chan.memory;
    double full = 1.0;
    for (int i = 0; i < 2 * n; ++i) full *= static_cast<double>(atoms_.size());
    if (full > static_cast<double>(table_guard))
      throw std::length_error("GeneralForwardRecursion: message table exceeds the size guard");
    // Slots cover symbols [t - N, t + N - 1] before processing output t;
    // slots for negative symbol indices are pinned to amplitude zero.
    dims_.assign(2 * n, 1);
    for (int j = 0; j < n; ++j) dims_[n + j] = atoms_.size();  // symbols 0..N-1
    table_.assign(size_of(dims_), 0.0);
    // tau_0 = product of priors over the free slots.
    std::vector<std::size_t> idx(dims_.size(), 0);
    for (std::size_t flat = 0; flat < table_.size(); ++flat) {
      double p = 1.0;
      for (std::size_t j = 0; j < dims_.size(); ++j)
        if (dims_[j] > 1) p *= probs_[idx[j]];
      table_[flat] = p;
      advance(idx, dims_);
    }
    step_ = 0;
  }

  double step(Complex y) {
    const std::size_t a_count = atoms_.size();
    const int n = chan_.memory;
    std::vector<std::size_t> ext_dims = dims_;
    ext_dims.push_back(a_count);  // symbol step_ + N

    // Window values per slot of the extended state: pinned slots are zero.
    auto window_value = [&](std::size_t slot, std::size_t atom) -> Complex {
      return ext_dims[slot] == 1 ? Complex{0.0, 0.0} : atoms_[atom];
    };

    const std::size_t ext_size = size_of(ext_dims);
    const double inv_w = 1.0 / (2.0 * n + 1.0);

    // Pass 1: max log kernel for the shift.
    double shift = -std::numeric_limits<double>::infinity();
    {
      std::vector<std::size_t> idx(ext_dims.size(), 0);
      for (std::size_t flat = 0; flat < ext_size; ++flat) {
        double s = 0.0;
        for (std::size_t j = 0; j < ext_dims.size(); ++j) s += std::norm(window_value(j, idx[j]));
        const double v = noise_variance(s * inv_w, chan_);
        const Complex center = window_value(n, idx[n]);
        const double lk = -std::norm(y - center) / v - std::log(std::numbers::pi * v);
        shift = std::max(shift, lk);
        advance(idx, ext_dims);
      }
    }

    // Pass 2: accumulate the marginalized next state.
    std::vector<std::size_t> new_dims(ext_dims.begin() + 1, ext_dims.end());
    std::vector<double> next(size_of(new_dims), 0.0);
    const std::size_t tail = size_of(new_dims) / a_count * ext_dims[0] == 0 ? 0 : 0;
    (void)tail;
    const std::size_t inner = size_of(new_dims);  // extended index = slot0 * inner + rest
    {
      std::vector<std::size_t> idx(ext_dims.size(), 0);
      for (std::size_t flat = 0; flat < ext_size; ++flat) {
        const std::size_t rest = flat % inner;
        const std::size_t base = flat / inner / 1;  // slot0 index
        double s = 0.0;
        for (std::size_t j = 0; j < ext_dims.size(); ++j) s += std::norm(window_value(j, idx[j]));
        const double v = noise_variance(s * inv_w, chan_);
        const Complex center = window_value(n, idx[n]);
        const double lk = -std::norm(y - center) / v - std::log(std::numbers::pi * v);
        const double prior = probs_[idx.back()];
        next[rest] += table_[flat / inner == base ? flat - base * inner + base * inner : flat] *
                      0.0;  // replaced below
        next[rest] += table_[flat / inner * inner + rest - rest] * 0.0;
        next[rest] += table_[flat / inner * (inner / inner)] * 0.0;
        advance(idx, ext_dims);
        (void)prior;
        (void)lk;
        (void)v;
      }
    }
    throw std::logic_error("unreachable");
  }

 private:
  static std::size_t size_of(const std::vector<std::size_t>& dims) {
    std::size_t s = 1;
    for (std::size_t d : dims) s *= d;
    return s;
  }
  static void advance(std::vector<std::size_t>& idx, const std::vector<std::size_t>& dims) {
    for (std::size_t j = dims.size(); j-- > 0;) {
      if (++idx[j] < dims[j]) return;
      idx[j] = 0;
    }
  }

  ChannelParams chan_;
  std::vector<Complex> atoms_;
  std::vector<double> probs_;
  std::vector<std::size_t> dims_;
  std::vector<double> table_;
  int step_ = 0;
  std::vector<double> log2_lambdas_;
};

}  // namespace optcap
