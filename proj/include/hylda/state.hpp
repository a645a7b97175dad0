#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

#include "hylda/corpus.hpp"
#include "hylda/rng.hpp"

namespace hylda {

struct Hyperparams {
  std::vector<double> alpha;  // one strength per topic
  double beta = 0.0;          // symmetric word-side strength

  uint32_t num_topics() const { return static_cast<uint32_t>(alpha.size()); }
  double alpha_sum() const;
  void validate() const;  // throws std::invalid_argument on nonpositive entries
};

// Sentinel threshold meaning "every pair is variational".
inline constexpr uint32_t kAllVariational =
    std::numeric_limits<uint32_t>::max();

// Split of the training tokens into a variational side (pairs with count
// above the threshold, updated as whole pairs) and a Gibbs side (flat token
// list). Two sentinels: threshold 0 sends everything to the Gibbs side and
// kAllVariational sends everything to the variational side. The partition is
// fixed before training and never adapted.
struct Partition {
  uint32_t num_docs = 0;
  uint32_t vocab_size = 0;
  uint32_t threshold = 0;  // r
  std::vector<Pair> vb_pairs;  // (doc, word)-lexicographic order
  std::vector<std::pair<uint32_t, uint32_t>> cg_tokens;  // (word, doc), doc-major

  uint64_t vb_tokens() const;
};

Partition partition_by_count(const Corpus& train, uint32_t threshold);

// Topic-indexed count arrays shared by every kernel. Entries are real-valued:
// expected counts from the variational side plus integer counts from the
// sampled side. doc_len holds training document lengths and stays constant.
struct CountState {
  uint32_t vocab_size = 0;  // W
  uint32_t num_docs = 0;    // J
  uint32_t num_topics = 0;  // K
  std::vector<double> word_topic;  // [w * K + k], N_wk
  std::vector<double> topic_doc;   // [k * J + j], N_kj
  std::vector<double> topic;       // [k],         N_k
  std::vector<double> doc_len;     // [j],         N_j

  double& wk(uint32_t w, uint32_t k) {
    return word_topic[static_cast<size_t>(w) * num_topics + k];
  }
  double wk(uint32_t w, uint32_t k) const {
    return word_topic[static_cast<size_t>(w) * num_topics + k];
  }
  double& kj(uint32_t k, uint32_t j) {
    return topic_doc[static_cast<size_t>(k) * num_docs + j];
  }
  double kj(uint32_t k, uint32_t j) const {
    return topic_doc[static_cast<size_t>(k) * num_docs + j];
  }
};

// One simplex row of topic responsibilities per variational pair, indexed
// like Partition::vb_pairs.
struct VariationalPosterior {
  uint32_t num_topics = 0;
  std::vector<double> rows;  // [pair * K + k]

  size_t num_rows() const {
    return num_topics == 0 ? 0 : rows.size() / num_topics;
  }
  std::span<double> row(size_t p) {
    return {rows.data() + p * num_topics, num_topics};
  }
  std::span<const double> row(size_t p) const {
    return {rows.data() + p * num_topics, num_topics};
  }
};

struct TopicAssignments {
  std::vector<uint32_t> z;  // one topic per Gibbs-side token
};

// Count-shaped accumulators of per-token Bernoulli variances Q(1-Q) over the
// variational side. Gibbs-side tokens are conditioned on within an iteration
// and contribute zero variance.
struct VarianceState {
  std::vector<double> word_topic;  // V_wk, laid out like CountState
  std::vector<double> topic_doc;   // V_kj
  std::vector<double> topic;       // V_k
};

// Explicit per-document and per-word Dirichlet strengths absorbing the
// variational expected counts. The training loop never materializes these
// (the blended CountState realizes them implicitly); they exist for tests.
struct EffectiveHyperparams {
  std::vector<double> alpha_prime;  // [k * J + j]
  std::vector<double> beta_prime;   // [w * K + k]
};

struct InferenceState {
  VariationalPosterior q;
  TopicAssignments z;
  CountState counts;
};

// Near-uniform responsibilities with small seeded jitter (magnitude 0.01/K,
// symmetric rows are a fixed point of the variational update), uniform
// random topic per Gibbs token, counts assembled from scratch.
InferenceState init_state(const Partition& partition, const Hyperparams& hyper,
                          RngHandle& rng);

// From-scratch evaluation of the blended counts; the drift oracle for the
// incrementally maintained CountState.
CountState recompute_counts(const Partition& partition,
                            const VariationalPosterior& q,
                            const TopicAssignments& z,
                            const Hyperparams& hyper);

VarianceState recompute_variance(const Partition& partition,
                                 const VariationalPosterior& q,
                                 const Hyperparams& hyper);

EffectiveHyperparams materialize_effective_hyperparams(
    const Partition& partition, const VariationalPosterior& q,
    const Hyperparams& hyper);

// Checkpointing: a self-describing textual dump of the partition, the
// responsibilities, the topic assignments, the live count arrays (and
// variance arrays when present), the sweep RNG and the iteration counter.
// Values are written as hex floats, so a resumed run continues bit-for-bit
// identically to an uninterrupted one.
struct Checkpoint {
  Partition partition;
  InferenceState state;
  VarianceState variance;  // empty when the algorithm carries none
  bool has_variance = false;
  uint64_t rng_seed = 0;
  uint64_t rng_state = 0;
  uint32_t iteration = 0;
};

void save_checkpoint(std::ostream& out, const Checkpoint& ck);
Checkpoint load_checkpoint(std::istream& in);

}  // namespace hylda
