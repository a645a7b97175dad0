// Acceptance suite: one criterion per case, one PASS/FAIL line each.
// Run with a criterion number (1-8) or no argument for all.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <string>
#include <vector>

#include "hylda/algorithms.hpp"
#include "hylda/corpus.hpp"
#include "hylda/eval.hpp"
#include "hylda/experiment.hpp"
#include "hylda/numerics.hpp"
#include "test_util.hpp"

using namespace hylda;

namespace {

int failures = 0;

void expect(bool ok, const std::string& what) {
  if (!ok) {
    ++failures;
    std::printf("        FAILED: %s\n", what.c_str());
  }
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// 1. Exact-inference equivalence on the 16-assignment fixture.
// ---------------------------------------------------------------------------
void criterion_1() {
  const Corpus fixture = test_util::tiny_corpus();
  const Hyperparams hyper = test_util::symmetric_hyper(2, 0.1, 0.1);
  const Enumeration exact = enumerate_exact(fixture, hyper);

  // Gold value computed by this enumeration before any kernel was trusted.
  expect(std::fabs(exact.log_evidence - (-7.1304129980132389)) <= 1e-12,
         "enumerated log evidence drifted from its frozen value");

  // (a) Gibbs marginals against enumeration, 1e5 post-burn-in sweeps.
  const Partition part = partition_by_count(fixture, 0);
  RngHandle init_rng(2024);
  InferenceState state = init_state(part, hyper, init_rng);
  RngHandle sweep_rng(777);
  for (int i = 0; i < 2000; ++i) {
    cgs_sweep(part, state.counts, state.z, hyper, sweep_rng);
  }
  const int sweeps = 100000;
  std::vector<double> hits(exact.num_tokens * 2, 0.0);
  for (int i = 0; i < sweeps; ++i) {
    cgs_sweep(part, state.counts, state.z, hyper, sweep_rng);
    for (size_t t = 0; t < state.z.z.size(); ++t) {
      hits[t * 2 + state.z.z[t]] += 1.0;
    }
  }
  double worst = 0.0;
  for (size_t i = 0; i < hits.size(); ++i) {
    worst = std::max(worst, std::fabs(hits[i] / sweeps - exact.marginals[i]));
  }
  expect(worst <= 0.01, "Gibbs marginal error " + fmt(worst) + " > 0.01");

  // (b) The converged all-variational bound stays strictly below the
  // enumerated log evidence.
  const Partition vb_part = partition_by_count(fixture, kAllVariational);
  RngHandle vb_rng(99);
  InferenceState vb_state = init_state(vb_part, hyper, vb_rng);
  for (int i = 0; i < 200; ++i) {
    svb_sweep(vb_part, vb_state.counts, vb_state.q, hyper);
  }
  const double bound = svb_bound(vb_part, vb_state.q, vb_state.counts, hyper);
  expect(bound < exact.log_evidence,
         "variational bound " + fmt(bound) + " not strictly below evidence " +
             fmt(exact.log_evidence));

  // (c) The sampler's conditional from blended counts equals the plain
  // conditional with effective hyperparameters, to 1e-12.
  const std::vector<double> galpha(2, 0.3);
  const Corpus mixed = generate_synthetic(6, 10, 2, 24, galpha, 0.4, 4242);
  Hyperparams asym;
  asym.alpha = {0.1, 0.35};
  asym.beta = 0.15;
  const Partition mixed_part = partition_by_count(mixed, 1);
  RngHandle mixed_rng(11);
  const InferenceState mixed_state = init_state(mixed_part, asym, mixed_rng);
  const EffectiveHyperparams eff =
      materialize_effective_hyperparams(mixed_part, mixed_state.q, asym);

  VariationalPosterior no_q;
  no_q.num_topics = 2;
  Partition gibbs_only = mixed_part;
  gibbs_only.vb_pairs.clear();
  const CountState cg_counts =
      recompute_counts(gibbs_only, no_q, mixed_state.z, asym);
  std::vector<double> beta_col(2, 0.0);
  for (uint32_t k = 0; k < 2; ++k) {
    for (uint32_t w = 0; w < mixed_part.vocab_size; ++w) {
      beta_col[k] += eff.beta_prime[static_cast<size_t>(w) * 2 + k];
    }
  }
  double identity_err = 0.0;
  std::vector<double> weights(2);
  for (uint32_t w = 0; w < mixed_part.vocab_size; ++w) {
    for (uint32_t j = 0; j < mixed_part.num_docs; ++j) {
      cgs_conditional(mixed_state.counts, asym, w, j, std::nullopt, weights);
      for (uint32_t k = 0; k < 2; ++k) {
        const double reference =
            (cg_counts.wk(w, k) +
             eff.beta_prime[static_cast<size_t>(w) * 2 + k]) *
            (cg_counts.kj(k, j) +
             eff.alpha_prime[static_cast<size_t>(k) * mixed_part.num_docs +
                             j]) /
            (cg_counts.topic[k] + beta_col[k]);
        identity_err =
            std::max(identity_err, std::fabs(weights[k] - reference) /
                                       std::max(1.0, std::fabs(reference)));
      }
    }
  }
  expect(identity_err <= 1e-12,
         "conditional identity error " + fmt(identity_err) + " > 1e-12");
}

// ---------------------------------------------------------------------------
// 2. Degenerate partitions reduce the hybrid to its pure counterparts.
// ---------------------------------------------------------------------------
void criterion_2() {
  // Threshold 0: identical CSV trace to pure Gibbs under one seed.
  ExperimentConfig gibbs;
  gibbs.synth_docs = 40;
  gibbs.synth_vocab = 60;
  gibbs.synth_topics = 4;
  gibbs.synth_doc_length = 25;
  gibbs.algorithm = AlgorithmKind::kCgs;
  gibbs.topics = 4;
  gibbs.iterations = 60;
  gibbs.seed = 314159;
  ExperimentConfig hybrid = gibbs;
  hybrid.algorithm = AlgorithmKind::kHybridSvbCgs;
  hybrid.threshold = 0;

  std::ostringstream a, b;
  run_experiment(gibbs, &a);
  run_experiment(hybrid, &b);
  expect(a.str() == b.str() && !a.str().empty(),
         "threshold-0 hybrid CSV differs from pure Gibbs");

  // Every pair count above the threshold: responsibilities track pure
  // variational sweeps within 1e-10 per entry per iteration.
  const std::vector<double> galpha(3, 0.3);
  Corpus bulky = generate_synthetic(30, 40, 3, 60, galpha, 0.3, 2718);
  for (Pair& p : bulky.pairs) p.count = std::max(p.count, 2u);
  const Hyperparams hyper = test_util::symmetric_hyper(3, 0.1, 0.1);

  Trainer pure(bulky, AlgorithmKind::kSvb, hyper, 1, 1, RngHandle(5),
               RngHandle(6));
  Trainer mixed(bulky, AlgorithmKind::kHybridSvbCgs, hyper, 1, 1, RngHandle(5),
                RngHandle(6));
  expect(mixed.partition().cg_tokens.empty(),
         "corpus construction failed: sampled side not empty");
  double worst = 0.0;
  for (int iter = 0; iter < 80; ++iter) {
    pure.step();
    mixed.step();
    for (size_t i = 0; i < pure.q().rows.size(); ++i) {
      worst =
          std::max(worst, std::fabs(pure.q().rows[i] - mixed.q().rows[i]));
    }
  }
  expect(worst <= 1e-10,
         "hybrid-vs-variational trajectory gap " + fmt(worst) + " > 1e-10");
}

// ---------------------------------------------------------------------------
// 3. The variational bound never decreases across sweeps.
// ---------------------------------------------------------------------------
void criterion_3() {
  const std::vector<double> galpha(4, 0.2);
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    const Corpus c =
        generate_synthetic(40, 60, 4, 40, galpha, 0.25, 1000 + seed);
    const Hyperparams hyper = test_util::symmetric_hyper(4, 0.1, 0.1);
    const Partition part = partition_by_count(c, kAllVariational);
    RngHandle rng(seed);
    InferenceState state = init_state(part, hyper, rng);
    double bound = svb_bound(part, state.q, state.counts, hyper);
    double worst_drop = 0.0;
    for (int sweep = 0; sweep < 100; ++sweep) {
      svb_sweep(part, state.counts, state.q, hyper);
      const double fresh = svb_bound(part, state.q, state.counts, hyper);
      worst_drop = std::max(worst_drop, bound - fresh);
      bound = fresh;
    }
    expect(worst_drop <= 1e-9, "seed " + std::to_string(seed) +
                                   ": bound dropped by " + fmt(worst_drop));
  }
}

// ---------------------------------------------------------------------------
// 4. Incremental counts stay consistent over 300 iterations.
// ---------------------------------------------------------------------------
void criterion_4() {
  const std::vector<double> galpha(4, 0.2);
  const Corpus c = generate_synthetic(30, 50, 4, 25, galpha, 0.2, 5150);
  const Hyperparams hyper = test_util::symmetric_hyper(4, 0.1, 0.1);

  for (AlgorithmKind kind :
       {AlgorithmKind::kCgs, AlgorithmKind::kSvb, AlgorithmKind::kCvb,
        AlgorithmKind::kHybridSvbCgs, AlgorithmKind::kHybridCvbCgs}) {
    Trainer trainer(c, kind, hyper, 1, 1,
                    RngHandle(40 + static_cast<int>(kind)),
                    RngHandle(50 + static_cast<int>(kind)));
    for (int iter = 0; iter < 300; ++iter) trainer.step();
    const double drift =
        test_util::count_drift(trainer.partition(), trainer.q(), trainer.z(),
                               hyper, trainer.counts());
    expect(drift < 1e-6, std::string(algorithm_name(kind)) +
                             ": count drift " + fmt(drift) + " >= 1e-6");
    if (kind == AlgorithmKind::kCgs) {
      bool integral = true;
      for (double v : trainer.counts().word_topic) {
        if (v != std::nearbyint(v)) integral = false;
      }
      for (double v : trainer.counts().topic) {
        if (v != std::nearbyint(v)) integral = false;
      }
      expect(integral, "pure Gibbs counts are not exactly integral");
    }
  }
}

// ---------------------------------------------------------------------------
// 5. Qualitative perplexity ordering across the five algorithms.
// ---------------------------------------------------------------------------
double median_final_online(AlgorithmKind kind, int seeds) {
  std::vector<double> finals;
  for (int s = 1; s <= seeds; ++s) {
    ExperimentConfig cfg;
    cfg.synth_docs = 200;
    cfg.synth_vocab = 500;
    cfg.synth_topics = 10;
    cfg.synth_doc_length = 50;
    cfg.synth_alpha = 0.1;
    cfg.synth_beta = 0.1;
    cfg.algorithm = kind;
    cfg.topics = 10;
    cfg.alpha_scalar = 0.1;
    cfg.beta = 0.1;
    cfg.threshold = 1;
    cfg.iterations = 300;
    cfg.burn_in = 10;
    cfg.test_fraction = 0.1;
    cfg.seed = static_cast<uint64_t>(s);
    finals.push_back(run_experiment(cfg).final_online);
  }
  std::sort(finals.begin(), finals.end());
  return finals[finals.size() / 2];
}

void criterion_5() {
  const int seeds = 5;
  const double svb = median_final_online(AlgorithmKind::kSvb, seeds);
  const double cvb = median_final_online(AlgorithmKind::kCvb, seeds);
  const double svb_cgs =
      median_final_online(AlgorithmKind::kHybridSvbCgs, seeds);
  const double cvb_cgs =
      median_final_online(AlgorithmKind::kHybridCvbCgs, seeds);
  const double cgs = median_final_online(AlgorithmKind::kCgs, seeds);
  std::printf(
      "        medians: svb %.2f  cvb %.2f  svb/cgs %.2f  cvb/cgs %.2f  "
      "cgs %.2f\n",
      svb, cvb, svb_cgs, cvb_cgs, cgs);

  expect(svb >= cvb, "ordering violated: svb < cvb");
  expect(cvb >= svb_cgs, "ordering violated: cvb < svb/cgs");
  expect(svb_cgs >= cvb_cgs, "ordering violated: svb/cgs < cvb/cgs");
  expect(std::fabs(cvb_cgs - cgs) <= 0.02 * cgs,
         "cvb/cgs not within 2% of cgs");
  expect(svb >= 1.01 * cvb, "svb not at least 1% worse than the runner-up");
}

// ---------------------------------------------------------------------------
// 6. Removing training singletons collapses the hybrid-vs-variational gap.
// ---------------------------------------------------------------------------
void criterion_6() {
  auto run_one = [](AlgorithmKind kind, uint64_t seed, bool ablate) {
    ExperimentConfig cfg;
    cfg.synth_docs = 120;
    cfg.synth_vocab = 400;
    cfg.synth_topics = 8;
    cfg.synth_doc_length = 40;
    cfg.synth_alpha = 0.1;
    cfg.synth_beta = 0.1;
    cfg.algorithm = kind;
    cfg.topics = 8;
    cfg.alpha_scalar = 0.1;
    cfg.beta = 0.1;
    cfg.threshold = 1;
    cfg.iterations = 300;
    cfg.burn_in = 10;
    cfg.seed = seed;
    if (ablate) cfg.singleton_removal = SingletonMode::kTrainOnly;
    return run_experiment(cfg).final_metric;
  };

  // Precondition: the corpus is singleton-heavy.
  {
    const std::vector<double> galpha(8, 0.1);
    const Corpus c = generate_synthetic(120, 400, 8, 40, galpha, 0.1,
                                        RngHandle(1).derive(1).seed());
    const TokenSplit split =
        split_train_test(c, 0.1, RngHandle(1).derive(2).seed());
    size_t singles = 0;
    for (const Pair& p : split.train.pairs) {
      if (p.count == 1) ++singles;
    }
    const double fraction =
        static_cast<double>(singles) / split.train.pairs.size();
    expect(fraction >= 0.30, "corpus has only " + fmt(100 * fraction) +
                                 "% singleton pairs; need >= 30%");
  }

  std::vector<double> plain_gaps, ablated_gaps;
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    const double plain =
        std::fabs(run_one(AlgorithmKind::kSvb, seed, false) -
                  run_one(AlgorithmKind::kHybridSvbCgs, seed, false));
    const double ablated =
        std::fabs(run_one(AlgorithmKind::kSvb, seed, true) -
                  run_one(AlgorithmKind::kHybridSvbCgs, seed, true));
    plain_gaps.push_back(plain);
    ablated_gaps.push_back(ablated);
  }
  std::sort(plain_gaps.begin(), plain_gaps.end());
  std::sort(ablated_gaps.begin(), ablated_gaps.end());
  const double plain = plain_gaps[plain_gaps.size() / 2];
  const double ablated = ablated_gaps[ablated_gaps.size() / 2];
  std::printf("        median gap: unablated %.3f, singletons removed %.3f\n",
              plain, ablated);
  expect(ablated <= 0.5 * plain,
         "ablated gap " + fmt(ablated) + " not at most half of " + fmt(plain));
}

// ---------------------------------------------------------------------------
// 7. Special functions against the 50-digit reference; convexity probe.
// ---------------------------------------------------------------------------
#include "data/special_function_grid.inc"

void criterion_7() {
  double worst_psi = 0.0, worst_lg = 0.0;
  size_t rows = 0;
  for (const auto& row : kSpecialFunctionGrid) {
    worst_psi = std::max(worst_psi, std::fabs(digamma(row[0]) - row[1]));
    worst_lg = std::max(worst_lg, std::fabs(log_gamma(row[0]) - row[2]));
    ++rows;
  }
  expect(rows == 1000, "reference grid is not 1000 points");
  expect(worst_psi <= 1e-12,
         "digamma grid error " + fmt(worst_psi) + " > 1e-12");
  expect(worst_lg <= 1e-12,
         "log_gamma grid error " + fmt(worst_lg) + " > 1e-12");

  RngHandle rng(1234);
  double min_eig = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int dim = 3 + static_cast<int>(rng.next_below(4));
    std::vector<double> x(dim);
    for (double& v : x) v = 0.5 + 4.5 * rng.next_double();
    min_eig = std::min(min_eig, test_util::min_hessian_eigenvalue(x));
  }
  expect(min_eig >= -1e-8,
         "Hessian eigenvalue " + fmt(min_eig) + " below -1e-8");
}

// ---------------------------------------------------------------------------
// 8. Byte-identical CSV under a fixed config and seed.
// ---------------------------------------------------------------------------
void criterion_8() {
  for (AlgorithmKind kind :
       {AlgorithmKind::kCgs, AlgorithmKind::kSvb, AlgorithmKind::kCvb,
        AlgorithmKind::kHybridSvbCgs, AlgorithmKind::kHybridCvbCgs}) {
    ExperimentConfig cfg;
    cfg.synth_docs = 30;
    cfg.synth_vocab = 50;
    cfg.synth_topics = 4;
    cfg.synth_doc_length = 20;
    cfg.algorithm = kind;
    cfg.topics = 4;
    cfg.iterations = 50;
    cfg.seed = 8675309;
    std::ostringstream a, b;
    run_experiment(cfg, &a);
    run_experiment(cfg, &b);
    expect(a.str() == b.str() && !a.str().empty(),
           std::string(algorithm_name(kind)) + ": repeated run not identical");
  }
}

struct Criterion {
  int id;
  const char* name;
  void (*fn)();
};

const Criterion kCriteria[] = {
    {1, "exact-inference equivalence on the enumeration fixture", criterion_1},
    {2, "degenerate partitions reduce to the pure algorithms", criterion_2},
    {3, "variational bound monotonicity", criterion_3},
    {4, "count conservation over 300 iterations", criterion_4},
    {5, "qualitative perplexity ordering", criterion_5},
    {6, "singleton-removal ablation closes the gap", criterion_6},
    {7, "special functions and convexity probe", criterion_7},
    {8, "byte-identical reproducibility", criterion_8},
};

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  if (argc > 1) only = std::atoi(argv[1]);

  int total_failures = 0;
  for (const Criterion& criterion : kCriteria) {
    if (only != 0 && criterion.id != only) continue;
    failures = 0;
    criterion.fn();
    std::printf("%s  %d  %s\n", failures == 0 ? "PASS" : "FAIL", criterion.id,
                criterion.name);
    total_failures += failures;
  }
  return total_failures == 0 ? 0 : 1;
}
