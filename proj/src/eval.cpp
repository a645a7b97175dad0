#include "hylda/eval.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "hylda/numerics.hpp"

namespace hylda {

double predictive(const CountState& counts, const Hyperparams& hyper,
                  uint32_t word, uint32_t doc) {
  const uint32_t K = hyper.num_topics();
  const double wbeta = hyper.beta * counts.vocab_size;
  const double doc_norm = hyper.alpha_sum() + counts.doc_len[doc];
  double p = 0.0;
  for (uint32_t k = 0; k < K; ++k) {
    p += (hyper.alpha[k] + counts.kj(k, doc)) / doc_norm *
         (hyper.beta + counts.wk(word, k)) / (wbeta + counts.topic[k]);
  }
  return p;
}

double perplexity_point(const CountState& counts, const Hyperparams& hyper,
                        std::span<const std::pair<uint32_t, uint32_t>> test) {
  if (test.empty()) {
    throw std::invalid_argument("perplexity_point: empty test set");
  }
  double log_sum = 0.0;
  for (const auto& [w, j] : test) {
    log_sum += std::log(predictive(counts, hyper, w, j));
  }
  return std::exp(-log_sum / static_cast<double>(test.size()));
}

std::optional<double> PredictiveAverager::observe(
    const CountState& counts, const Hyperparams& hyper,
    std::span<const std::pair<uint32_t, uint32_t>> test, uint32_t iteration) {
  if (iteration <= burn_in_) return std::nullopt;
  if (test.size() != prob_sum_.size()) {
    throw std::invalid_argument("PredictiveAverager: test set size changed");
  }
  ++samples_;
  double log_sum = 0.0;
  for (size_t i = 0; i < test.size(); ++i) {
    prob_sum_[i] += predictive(counts, hyper, test[i].first, test[i].second);
    log_sum += std::log(prob_sum_[i] / samples_);
  }
  return std::exp(-log_sum / static_cast<double>(test.size()));
}

double collapsed_log_joint(const CountState& counts,
                           const Hyperparams& hyper) {
  const uint32_t K = hyper.num_topics();
  const uint32_t W = counts.vocab_size;
  const uint32_t J = counts.num_docs;
  const double wbeta = hyper.beta * W;
  const double asum = hyper.alpha_sum();
  const double lg_beta = log_gamma(hyper.beta);

  double total = 0.0;
  for (uint32_t k = 0; k < K; ++k) {
    total += log_gamma(wbeta) - log_gamma(counts.topic[k] + wbeta);
    for (uint32_t w = 0; w < W; ++w) {
      total += log_gamma(counts.wk(w, k) + hyper.beta) - lg_beta;
    }
  }
  double lg_alpha = 0.0;
  for (uint32_t k = 0; k < K; ++k) lg_alpha += log_gamma(hyper.alpha[k]);
  for (uint32_t j = 0; j < J; ++j) {
    total += log_gamma(asum) - log_gamma(counts.doc_len[j] + asum) - lg_alpha;
    for (uint32_t k = 0; k < K; ++k) {
      total += log_gamma(counts.kj(k, j) + hyper.alpha[k]);
    }
  }
  return total;
}

double log_joint(const CountState& counts, const Hyperparams& hyper) {
  auto require_integral = [](std::span<const double> values) {
    for (double v : values) {
      if (std::fabs(v - std::nearbyint(v)) > 1e-9) {
        throw std::invalid_argument("log_joint: counts are not integral");
      }
    }
  };
  require_integral(counts.word_topic);
  require_integral(counts.topic_doc);
  require_integral(counts.topic);
  require_integral(counts.doc_len);
  return collapsed_log_joint(counts, hyper);
}

double svb_bound(const Partition& partition, const VariationalPosterior& q,
                 const CountState& counts, const Hyperparams& hyper) {
  double entropy = 0.0;
  for (size_t p = 0; p < partition.vb_pairs.size(); ++p) {
    const auto row = q.row(p);
    double h = 0.0;
    for (double qk : row) {
      if (qk > 0.0) h -= qk * std::log(qk);
    }
    entropy += partition.vb_pairs[p].count * h;
  }
  return entropy + collapsed_log_joint(counts, hyper);
}

namespace {

// Shared scaffolding for exact enumeration: the sequential predictive form
// of the collapsed joint, built token by token so the sum over assignments
// telescopes into the Gamma-function form.
struct EnumerationContext {
  std::vector<std::pair<uint32_t, uint32_t>> tokens;
  uint32_t K = 0;
  uint32_t W = 0;
  double wbeta = 0.0;
  double asum = 0.0;
  const Hyperparams* hyper = nullptr;

  std::vector<double> word_topic;  // [w * K + k]
  std::vector<double> topic_doc;   // [k * J + j]
  std::vector<double> topic;       // [k]
  std::vector<double> doc_seen;    // [j]
  uint32_t num_docs = 0;

  double token_factor(size_t t, uint32_t k) const {
    const auto [w, j] = tokens[t];
    return (hyper->alpha[k] + topic_doc[static_cast<size_t>(k) * num_docs + j]) /
           (asum + doc_seen[j]) *
           (hyper->beta + word_topic[static_cast<size_t>(w) * K + k]) /
           (wbeta + topic[k]);
  }

  void push(size_t t, uint32_t k) {
    const auto [w, j] = tokens[t];
    word_topic[static_cast<size_t>(w) * K + k] += 1.0;
    topic_doc[static_cast<size_t>(k) * num_docs + j] += 1.0;
    topic[k] += 1.0;
    doc_seen[j] += 1.0;
  }
  void pop(size_t t, uint32_t k) {
    const auto [w, j] = tokens[t];
    word_topic[static_cast<size_t>(w) * K + k] -= 1.0;
    topic_doc[static_cast<size_t>(k) * num_docs + j] -= 1.0;
    topic[k] -= 1.0;
    doc_seen[j] -= 1.0;
  }
};

EnumerationContext make_context(const Corpus& corpus,
                                const Hyperparams& hyper) {
  hyper.validate();
  EnumerationContext ctx;
  ctx.tokens = corpus_tokens(corpus);
  ctx.K = hyper.num_topics();
  ctx.W = corpus.vocab_size;
  ctx.wbeta = hyper.beta * corpus.vocab_size;
  ctx.asum = hyper.alpha_sum();
  ctx.hyper = &hyper;
  ctx.num_docs = corpus.num_docs;
  ctx.word_topic.assign(static_cast<size_t>(corpus.vocab_size) * ctx.K, 0.0);
  ctx.topic_doc.assign(static_cast<size_t>(ctx.K) * corpus.num_docs, 0.0);
  ctx.topic.assign(ctx.K, 0.0);
  ctx.doc_seen.assign(corpus.num_docs, 0.0);
  return ctx;
}

void check_instance_size(size_t num_tokens, uint32_t K, double limit) {
  const double total = std::pow(static_cast<double>(K),
                                static_cast<double>(num_tokens));
  if (total > limit) {
    throw std::invalid_argument("enumeration: instance too large");
  }
}

// Depth-first over assignments, carrying the running log joint.
template <typename LeafFn>
void enumerate_leaves(EnumerationContext& ctx, size_t t, double log_prefix,
                      std::vector<uint32_t>& assignment, LeafFn&& leaf) {
  if (t == ctx.tokens.size()) {
    leaf(log_prefix, assignment);
    return;
  }
  for (uint32_t k = 0; k < ctx.K; ++k) {
    const double f = ctx.token_factor(t, k);
    assignment[t] = k;
    ctx.push(t, k);
    enumerate_leaves(ctx, t + 1, log_prefix + std::log(f), assignment, leaf);
    ctx.pop(t, k);
  }
}

}  // namespace

Enumeration enumerate_exact(const Corpus& corpus, const Hyperparams& hyper) {
  EnumerationContext ctx = make_context(corpus, hyper);
  check_instance_size(ctx.tokens.size(), ctx.K, 1e7);

  Enumeration result;
  result.num_tokens = ctx.tokens.size();
  result.num_topics = ctx.K;
  result.marginals.assign(ctx.tokens.size() * ctx.K, 0.0);
  if (ctx.tokens.empty()) {
    result.log_evidence = 0.0;
    return result;
  }

  std::vector<uint32_t> assignment(ctx.tokens.size(), 0);

  double max_log = -std::numeric_limits<double>::infinity();
  enumerate_leaves(ctx, 0, 0.0, assignment,
                   [&](double lp, const std::vector<uint32_t>&) {
                     if (lp > max_log) max_log = lp;
                   });

  double mass = 0.0;
  enumerate_leaves(ctx, 0, 0.0, assignment,
                   [&](double lp, const std::vector<uint32_t>& a) {
                     const double w = std::exp(lp - max_log);
                     mass += w;
                     for (size_t t = 0; t < a.size(); ++t) {
                       result.marginals[t * ctx.K + a[t]] += w;
                     }
                   });

  result.log_evidence = max_log + std::log(mass);
  for (double& m : result.marginals) m /= mass;
  return result;
}

std::vector<double> enumerate_assignment_log_joints(const Corpus& corpus,
                                                    const Hyperparams& hyper) {
  EnumerationContext ctx = make_context(corpus, hyper);
  check_instance_size(ctx.tokens.size(), ctx.K, 1e6);

  std::vector<double> log_joints;
  std::vector<uint32_t> assignment(ctx.tokens.size(), 0);
  enumerate_leaves(ctx, 0, 0.0, assignment,
                   [&](double lp, const std::vector<uint32_t>&) {
                     log_joints.push_back(lp);
                   });
  return log_joints;
}

}  // namespace hylda
