#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "hylda/corpus.hpp"
#include "hylda/state.hpp"

namespace hylda {

// Rao-Blackwellised predictive probability of word w in document j:
//   sum_k (alpha_k + N_kj) / (sum alpha + N_j) * (beta + N_wk) / (W beta + N_k).
// Test tokens live in their training documents, so N_j is the trained
// document length. Sums to 1 over the vocabulary for every document.
double predictive(const CountState& counts, const Hyperparams& hyper,
                  uint32_t word, uint32_t doc);

// exp(-mean log predictive) over the test tokens, computed in log space.
double perplexity_point(const CountState& counts, const Hyperparams& hyper,
                        std::span<const std::pair<uint32_t, uint32_t>> test);

// Running per-token average of predictive probabilities across post-burn-in
// iterations; perplexity of the averaged probabilities.
class PredictiveAverager {
 public:
  PredictiveAverager(size_t num_test_tokens, uint32_t burn_in)
      : burn_in_(burn_in), prob_sum_(num_test_tokens, 0.0) {}

  // Call once per iteration (1-based). Returns the online perplexity, or
  // nullopt during burn-in when nothing is accumulated.
  std::optional<double> observe(
      const CountState& counts, const Hyperparams& hyper,
      std::span<const std::pair<uint32_t, uint32_t>> test, uint32_t iteration);

  uint32_t samples() const { return samples_; }
  uint32_t burn_in() const { return burn_in_; }

 private:
  uint32_t burn_in_;
  uint32_t samples_ = 0;
  std::vector<double> prob_sum_;
};

// The collapsed log joint as a functional of (possibly real-valued) count
// arrays, with all normalizing constants included.
double collapsed_log_joint(const CountState& counts, const Hyperparams& hyper);

// log p(z, x | d) for a pure assignment state. Throws std::invalid_argument
// if any count entry is not integral.
double log_joint(const CountState& counts, const Hyperparams& hyper);

// Evidence bound for the variational side: token-weighted entropy of Q plus
// the collapsed log joint at the blended counts. A strict lower bound on the
// log evidence when everything is variational; with a sampled side it is the
// per-sample integrand, a monitoring estimate rather than a bound.
double svb_bound(const Partition& partition, const VariationalPosterior& q,
                 const CountState& counts, const Hyperparams& hyper);

// Exact quantities for tiny instances by summing the collapsed joint over
// all K^n topic assignments. Tokens are ordered as corpus_tokens(). Guarded
// at K^n <= 1e7.
struct Enumeration {
  double log_evidence = 0.0;
  size_t num_tokens = 0;
  uint32_t num_topics = 0;
  std::vector<double> marginals;  // [token * K + k], P(z_t = k | x, d)

  double marginal(size_t token, uint32_t k) const {
    return marginals[token * num_topics + k];
  }
};

Enumeration enumerate_exact(const Corpus& corpus, const Hyperparams& hyper);

// Log joint of every full assignment vector in odometer order (last token
// fastest), for distribution-level chain diagnostics. Guarded at K^n <= 1e6.
std::vector<double> enumerate_assignment_log_joints(const Corpus& corpus,
                                                    const Hyperparams& hyper);

}  // namespace hylda
