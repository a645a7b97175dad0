#include "hylda/algorithms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "hylda/numerics.hpp"

namespace hylda {

bool uses_variance(AlgorithmKind kind) {
  return kind == AlgorithmKind::kCvb || kind == AlgorithmKind::kHybridCvbCgs;
}

bool is_hybrid(AlgorithmKind kind) {
  return kind == AlgorithmKind::kHybridSvbCgs ||
         kind == AlgorithmKind::kHybridCvbCgs;
}

const char* algorithm_name(AlgorithmKind kind) {
  switch (kind) {
    case AlgorithmKind::kCgs: return "cgs";
    case AlgorithmKind::kSvb: return "svb";
    case AlgorithmKind::kCvb: return "cvb";
    case AlgorithmKind::kHybridSvbCgs: return "hybrid_svb_cgs";
    case AlgorithmKind::kHybridCvbCgs: return "hybrid_cvb_cgs";
  }
  return "unknown";
}

std::optional<AlgorithmKind> algorithm_from_name(std::string_view name) {
  if (name == "cgs") return AlgorithmKind::kCgs;
  if (name == "svb") return AlgorithmKind::kSvb;
  if (name == "cvb") return AlgorithmKind::kCvb;
  if (name == "hybrid_svb_cgs") return AlgorithmKind::kHybridSvbCgs;
  if (name == "hybrid_cvb_cgs") return AlgorithmKind::kHybridCvbCgs;
  return std::nullopt;
}

void cgs_conditional(const CountState& counts, const Hyperparams& hyper,
                     uint32_t word, uint32_t doc,
                     std::optional<uint32_t> exclude_topic,
                     std::span<double> weights_out) {
  const uint32_t K = hyper.num_topics();
  const double wbeta = hyper.beta * counts.vocab_size;
  for (uint32_t k = 0; k < K; ++k) {
    double nwk = counts.wk(word, k);
    double nkj = counts.kj(k, doc);
    double nk = counts.topic[k];
    if (exclude_topic && *exclude_topic == k) {
      nwk -= 1.0;
      nkj -= 1.0;
      nk -= 1.0;
    }
    weights_out[k] =
        (nwk + hyper.beta) * (nkj + hyper.alpha[k]) / (nk + wbeta);
  }
}

namespace {

void remove_token(CountState& counts, uint32_t w, uint32_t j, uint32_t k) {
  counts.wk(w, k) -= 1.0;
  counts.kj(k, j) -= 1.0;
  counts.topic[k] -= 1.0;
}

void add_token(CountState& counts, uint32_t w, uint32_t j, uint32_t k) {
  counts.wk(w, k) += 1.0;
  counts.kj(k, j) += 1.0;
  counts.topic[k] += 1.0;
}

// New responsibilities for one pair from the exp(psi(.)) ratio form. With
// several count snapshots the psi terms are averaged over them.
void svb_row(std::span<CountState* const> states, const Pair& pair,
             const Hyperparams& hyper, std::span<double> row_out) {
  const uint32_t K = hyper.num_topics();
  const double wbeta = hyper.beta * states[0]->vocab_size;
  const double inv_s = 1.0 / static_cast<double>(states.size());
  double max_t = -std::numeric_limits<double>::infinity();
  for (uint32_t k = 0; k < K; ++k) {
    double acc = 0.0;
    for (const CountState* counts : states) {
      acc += digamma(counts->wk(pair.word, k) + hyper.beta) -
             digamma(counts->topic[k] + wbeta) +
             digamma(counts->kj(k, pair.doc) + hyper.alpha[k]);
    }
    row_out[k] = acc * inv_s;
    max_t = std::max(max_t, row_out[k]);
  }
  double total = 0.0;
  for (uint32_t k = 0; k < K; ++k) {
    row_out[k] = std::exp(row_out[k] - max_t);
    total += row_out[k];
  }
  for (uint32_t k = 0; k < K; ++k) row_out[k] /= total;
}

void svb_update_pair_states(const Partition& partition, size_t pair_index,
                            std::span<CountState* const> states,
                            VariationalPosterior& q,
                            const Hyperparams& hyper,
                            std::span<double> scratch) {
  const Pair& pair = partition.vb_pairs[pair_index];
  const uint32_t K = hyper.num_topics();
  auto row = q.row(pair_index);
  svb_row(states, pair, hyper, scratch);
  for (uint32_t k = 0; k < K; ++k) {
    const double delta = pair.count * (scratch[k] - row[k]);
    for (CountState* counts : states) {
      counts->wk(pair.word, k) += delta;
      counts->kj(k, pair.doc) += delta;
      counts->topic[k] += delta;
    }
    row[k] = scratch[k];
  }
}

void svb_sweep_states(const Partition& partition,
                      std::span<CountState* const> states,
                      VariationalPosterior& q, const Hyperparams& hyper) {
  std::vector<double> scratch(hyper.num_topics());
  for (size_t p = 0; p < partition.vb_pairs.size(); ++p) {
    svb_update_pair_states(partition, p, states, q, hyper, scratch);
  }
}

}  // namespace

void cgs_sweep(const Partition& partition, CountState& counts,
               TopicAssignments& z, const Hyperparams& hyper, RngHandle& rng) {
  const uint32_t K = hyper.num_topics();
  std::vector<double> weights(K);
  for (size_t t = 0; t < partition.cg_tokens.size(); ++t) {
    const auto [w, j] = partition.cg_tokens[t];
    remove_token(counts, w, j, z.z[t]);
    cgs_conditional(counts, hyper, w, j, std::nullopt, weights);
    const uint32_t k = static_cast<uint32_t>(sample_categorical(weights, rng));
    add_token(counts, w, j, k);
    z.z[t] = k;
  }
}

void svb_update_pair(const Partition& partition, size_t pair_index,
                     CountState& counts, VariationalPosterior& q,
                     const Hyperparams& hyper) {
  std::vector<double> scratch(hyper.num_topics());
  CountState* live[] = {&counts};
  svb_update_pair_states(partition, pair_index, live, q, hyper, scratch);
}

void svb_sweep(const Partition& partition, CountState& counts,
               VariationalPosterior& q, const Hyperparams& hyper) {
  CountState* live[] = {&counts};
  svb_sweep_states(partition, live, q, hyper);
}

void cvb_update_pair(const Partition& partition, size_t pair_index,
                     CountState& counts, VarianceState& variance,
                     VariationalPosterior& q, const Hyperparams& hyper) {
  const Pair& pair = partition.vb_pairs[pair_index];
  const uint32_t K = hyper.num_topics();
  const uint32_t J = counts.num_docs;
  const double wbeta = hyper.beta * counts.vocab_size;
  auto row = q.row(pair_index);

  std::vector<double> fresh(K);
  double max_t = -std::numeric_limits<double>::infinity();
  for (uint32_t k = 0; k < K; ++k) {
    const double qk = row[k];
    const double vk = qk * (1.0 - qk);
    // One token's expected contribution is removed; the remaining mass of
    // this pair stays in, mirroring the per-token exclusion of the
    // collapsed update applied to a shared pair row.
    auto excluded_mean = [&](double value) {
      const double m = value - qk;
      if (m < -1e-9) {
        throw std::logic_error("cvb_update_pair: negative mean after exclusion");
      }
      return std::max(m, 0.0);
    };
    // Clamped at zero: degenerate accumulators (one-hot rows, or callers
    // forcing the zeroth-order form) legitimately reach it.
    auto excluded_var = [&](double value) { return std::max(value - vk, 0.0); };
    const double m_wk = excluded_mean(counts.wk(pair.word, k));
    const double m_kj = excluded_mean(counts.kj(k, pair.doc));
    const double m_k = excluded_mean(counts.topic[k]);
    const double v_wk = excluded_var(
        variance.word_topic[static_cast<size_t>(pair.word) * K + k]);
    const double v_kj = excluded_var(
        variance.topic_doc[static_cast<size_t>(k) * J + pair.doc]);
    const double v_k = excluded_var(variance.topic[k]);

    const double a = hyper.alpha[k] + m_kj;
    const double b = hyper.beta + m_wk;
    const double c = wbeta + m_k;
    fresh[k] = std::log(a) + std::log(b) - std::log(c) -
               v_kj / (2.0 * a * a) - v_wk / (2.0 * b * b) +
               v_k / (2.0 * c * c);
    max_t = std::max(max_t, fresh[k]);
  }
  double total = 0.0;
  for (uint32_t k = 0; k < K; ++k) {
    fresh[k] = std::exp(fresh[k] - max_t);
    total += fresh[k];
  }
  for (uint32_t k = 0; k < K; ++k) fresh[k] /= total;

  for (uint32_t k = 0; k < K; ++k) {
    const double mean_delta = pair.count * (fresh[k] - row[k]);
    const double var_delta =
        pair.count *
        (fresh[k] * (1.0 - fresh[k]) - row[k] * (1.0 - row[k]));
    counts.wk(pair.word, k) += mean_delta;
    counts.kj(k, pair.doc) += mean_delta;
    counts.topic[k] += mean_delta;
    variance.word_topic[static_cast<size_t>(pair.word) * K + k] += var_delta;
    variance.topic_doc[static_cast<size_t>(k) * J + pair.doc] += var_delta;
    variance.topic[k] += var_delta;
    row[k] = fresh[k];
  }
}

void cvb_sweep(const Partition& partition, CountState& counts,
               VarianceState& variance, VariationalPosterior& q,
               const Hyperparams& hyper) {
  for (size_t p = 0; p < partition.vb_pairs.size(); ++p) {
    cvb_update_pair(partition, p, counts, variance, q, hyper);
  }
}

void hybrid_sweep(AlgorithmKind kind, const Partition& partition,
                  CountState& counts, VariationalPosterior& q,
                  TopicAssignments& z, VarianceState* variance,
                  const Hyperparams& hyper, RngHandle& rng,
                  uint32_t num_samples) {
  if (num_samples < 1) {
    throw std::invalid_argument("hybrid_sweep: num_samples must be >= 1");
  }
  if (kind != AlgorithmKind::kHybridSvbCgs &&
      kind != AlgorithmKind::kHybridCvbCgs) {
    throw std::invalid_argument("hybrid_sweep: not a hybrid algorithm");
  }

  // Snapshots of the counts after each of the first S-1 Gibbs sweeps; the
  // live state doubles as the final sample.
  std::vector<CountState> snapshots;
  snapshots.reserve(num_samples - 1);
  for (uint32_t s = 0; s < num_samples; ++s) {
    cgs_sweep(partition, counts, z, hyper, rng);
    if (s + 1 < num_samples) snapshots.push_back(counts);
  }

  if (kind == AlgorithmKind::kHybridSvbCgs) {
    std::vector<CountState*> states;
    states.reserve(num_samples);
    for (CountState& snap : snapshots) states.push_back(&snap);
    states.push_back(&counts);
    svb_sweep_states(partition, states, q, hyper);
  } else {
    if (variance == nullptr) {
      throw std::invalid_argument("hybrid_sweep: cvb flavor needs variance");
    }
    cvb_sweep(partition, counts, *variance, q, hyper);
  }
}

}  // namespace hylda
