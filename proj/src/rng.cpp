#include "hylda/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace hylda {

uint32_t RngHandle::next_below(uint32_t n) {
  if (n == 0) {
    throw std::invalid_argument("next_below: n must be positive");
  }
  // Multiply-shift map of one 64-bit draw onto [0, n); the bias of at most
  // n / 2^64 is irrelevant at these scales.
  return static_cast<uint32_t>(
      (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
}

RngHandle RngHandle::derive(uint64_t stream) const {
  RngHandle mixer(seed_ ^ (0x6a09e667f3bcc909ull +
                           stream * 0x9e3779b97f4a7c15ull));
  return RngHandle(mixer.next_u64());
}

size_t sample_categorical(std::span<const double> weights, RngHandle& rng) {
  if (weights.empty()) {
    throw std::invalid_argument("sample_categorical: empty weight vector");
  }
  double total = 0.0;
  size_t last_positive = weights.size();
  for (size_t k = 0; k < weights.size(); ++k) {
    const double w = weights[k];
    if (std::isnan(w) || w < 0.0) {
      throw std::invalid_argument(
          "sample_categorical: weights must be nonnegative and finite");
    }
    total += w;
    if (w > 0.0) last_positive = k;
  }
  if (!(total > 0.0)) {
    throw std::invalid_argument("sample_categorical: all weights are zero");
  }
  const double u = rng.next_double() * total;
  double cumulative = 0.0;
  for (size_t k = 0; k < weights.size(); ++k) {
    cumulative += weights[k];
    if (u < cumulative && weights[k] > 0.0) return k;
  }
  // Rounding pushed u past the last cumulative step.
  return last_positive;
}

double sample_normal(RngHandle& rng) {
  // Box-Muller, cosine branch.
  const double u1 = 1.0 - rng.next_double();  // (0, 1]
  const double u2 = rng.next_double();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

double sample_gamma(double shape, RngHandle& rng) {
  if (!(shape > 0.0)) {
    throw std::invalid_argument("sample_gamma: shape must be positive");
  }
  if (shape < 1.0) {
    const double u = 1.0 - rng.next_double();
    return sample_gamma(shape + 1.0, rng) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = sample_normal(rng);
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    const double u = 1.0 - rng.next_double();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

void sample_dirichlet(std::span<const double> alpha, RngHandle& rng,
                      std::span<double> out) {
  if (alpha.size() != out.size() || alpha.empty()) {
    throw std::invalid_argument("sample_dirichlet: size mismatch");
  }
  double total = 0.0;
  for (size_t k = 0; k < alpha.size(); ++k) {
    out[k] = sample_gamma(alpha[k], rng);
    total += out[k];
  }
  if (total <= 0.0) {
    // All gammas underflowed (extremely small alphas); fall back to a point
    // mass on a uniformly chosen component.
    const uint32_t k = rng.next_below(static_cast<uint32_t>(alpha.size()));
    for (size_t i = 0; i < out.size(); ++i) out[i] = 0.0;
    out[k] = 1.0;
    return;
  }
  for (size_t k = 0; k < out.size(); ++k) out[k] /= total;
}

}  // namespace hylda
