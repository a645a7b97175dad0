#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

#include "hylda/rng.hpp"
#include "hylda/state.hpp"

namespace hylda {

// Update kernels over (Q, z, counts).
//
// cgs_*   collapsed Gibbs sampling on the Gibbs-side tokens
// svb_*   variational updates on whole pairs, exp(psi(.)) ratio form,
//         no self-exclusion (the pair's own mass stays in the counts)
// cvb_*   collapsed variational updates with second-order (mean + variance)
//         count statistics, excluding one token's expected contribution
// hybrid_sweep  one iteration of the blended scheme: sample the Gibbs side
//         from the counts-conditional, then update the variational side
//         against the resulting counts.

enum class AlgorithmKind {
  kCgs,
  kSvb,
  kCvb,
  kHybridSvbCgs,
  kHybridCvbCgs,
};

bool uses_variance(AlgorithmKind kind);
bool is_hybrid(AlgorithmKind kind);
const char* algorithm_name(AlgorithmKind kind);
std::optional<AlgorithmKind> algorithm_from_name(std::string_view name);

// Unnormalized full-conditional weights for assigning a (word, doc) token:
//   weight_k = (N_wk + beta) * (N_kj + alpha_k) / (N_k + W beta),
// optionally with the token's current topic contribution removed first.
void cgs_conditional(const CountState& counts, const Hyperparams& hyper,
                     uint32_t word, uint32_t doc,
                     std::optional<uint32_t> exclude_topic,
                     std::span<double> weights_out);

// Resamples every Gibbs-side token in partition order: decrement, draw from
// the full conditional, increment.
void cgs_sweep(const Partition& partition, CountState& counts,
               TopicAssignments& z, const Hyperparams& hyper, RngHandle& rng);

// One pair's responsibility update,
//   Q_k  proportional to  exp(psi(N_wk+beta) - psi(N_k+W beta) + psi(N_kj+alpha_k)),
// followed by count deltas of count * (new - old).
void svb_update_pair(const Partition& partition, size_t pair_index,
                     CountState& counts, VariationalPosterior& q,
                     const Hyperparams& hyper);

// Gauss-Seidel pass over all variational pairs in partition order.
void svb_sweep(const Partition& partition, CountState& counts,
               VariationalPosterior& q, const Hyperparams& hyper);

// One pair's collapsed update. Removes a single token's expected
// contribution from means and variances, evaluates
//   Q_k  proportional to  (alpha_k + N_kj) (beta + N_wk) / (W beta + N_k)
//         * exp( -V_kj / 2(alpha_k+N_kj)^2 - V_wk / 2(beta+N_wk)^2
//                + V_k / 2(W beta+N_k)^2 )
// at the excluded counts, then reassigns the whole pair's mass.
void cvb_update_pair(const Partition& partition, size_t pair_index,
                     CountState& counts, VarianceState& variance,
                     VariationalPosterior& q, const Hyperparams& hyper);

void cvb_sweep(const Partition& partition, CountState& counts,
               VarianceState& variance, VariationalPosterior& q,
               const Hyperparams& hyper);

// One hybrid iteration: num_samples Gibbs sweeps over the Gibbs side (the
// conditional seen by the sampler already absorbs the variational mass via
// the blended counts), then one variational pass. With num_samples > 1 the
// svb flavor averages psi(.) over the post-sweep count snapshots; the cvb
// flavor updates against the final sample's counts.
void hybrid_sweep(AlgorithmKind kind, const Partition& partition,
                  CountState& counts, VariationalPosterior& q,
                  TopicAssignments& z, VarianceState* variance,
                  const Hyperparams& hyper, RngHandle& rng,
                  uint32_t num_samples);

}  // namespace hylda
