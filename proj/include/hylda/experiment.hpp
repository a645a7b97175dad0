#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hylda/algorithms.hpp"
#include "hylda/corpus.hpp"
#include "hylda/eval.hpp"
#include "hylda/state.hpp"

namespace hylda {

// Everything a run needs, with the defaults used throughout: 300 iterations,
// burn-in 10, one sample per iteration, 10% held out, alpha_k = beta = 0.1,
// threshold 1. The master seed deterministically derives the sub-seeds for
// corpus synthesis, splitting, initialization and sweeping, so ablations on
// the same seed reuse identical splits.
struct ExperimentConfig {
  // Dataset: a docword file, or the synthetic sampler when the path is empty.
  std::string docword;
  std::string vocab;
  uint32_t synth_docs = 200;
  uint32_t synth_vocab = 500;
  uint32_t synth_topics = 10;
  uint32_t synth_doc_length = 50;
  double synth_alpha = 0.1;
  double synth_beta = 0.1;

  AlgorithmKind algorithm = AlgorithmKind::kCgs;
  uint32_t topics = 10;                   // K
  std::vector<double> alpha = {};         // empty: symmetric alpha_scalar
  double alpha_scalar = 0.1;
  double beta = 0.1;
  uint32_t threshold = 1;                 // r; ignored by the pure algorithms
  uint32_t iterations = 300;
  uint32_t burn_in = 10;
  uint32_t samples_per_iter = 1;
  double test_fraction = 0.1;
  uint64_t seed = 0;

  // Ablations.
  uint32_t prune_top = 0;  // 0 disables vocabulary pruning
  std::optional<SingletonMode> singleton_removal;

  std::string output;   // CSV path; empty writes to stdout
  bool timing = false;  // fill the elapsed_seconds column (non-reproducible)

  Hyperparams hyperparams() const;
  void validate() const;  // throws std::invalid_argument naming the field
};

// Flat key=value text format; unknown keys are rejected by name and
// serialization round-trips losslessly (doubles are printed with 17
// significant digits).
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config_file(const std::string& path);
void serialize_config(const ExperimentConfig& cfg, std::ostream& out);

// "0.1" sets the symmetric scalar, "0.1,0.2,..." the per-topic vector.
void apply_alpha_option(ExperimentConfig& cfg, const std::string& value);

// Owns one training trajectory: partition, state, optional variance and the
// sweep RNG. Pure algorithms force their partition (Gibbs: threshold 0,
// variational: everything above threshold); hybrids honor the configured
// threshold.
class Trainer {
 public:
  Trainer(const Corpus& train, AlgorithmKind kind, const Hyperparams& hyper,
          uint32_t threshold, uint32_t samples_per_iter, RngHandle init_rng,
          RngHandle sweep_rng);

  void step();  // one iteration (one sweep; hybrids: S Gibbs sweeps + 1 VB pass)

  uint32_t iteration() const { return iteration_; }
  const Partition& partition() const { return partition_; }
  const CountState& counts() const { return state_.counts; }
  const VariationalPosterior& q() const { return state_.q; }
  const TopicAssignments& z() const { return state_.z; }
  const VarianceState& variance() const { return variance_; }
  AlgorithmKind kind() const { return kind_; }

  double bound_estimate() const;

  Checkpoint make_checkpoint() const;
  void restore(const Checkpoint& ck);

 private:
  AlgorithmKind kind_;
  Hyperparams hyper_;
  uint32_t samples_per_iter_;
  Partition partition_;
  InferenceState state_;
  VarianceState variance_;
  RngHandle sweep_rng_;
  uint32_t iteration_ = 0;
};

struct IterationRecord {
  uint32_t iteration = 0;
  double point_perplexity = 0.0;
  std::optional<double> online_perplexity;  // absent during burn-in
  double bound = 0.0;
  double elapsed_seconds = 0.0;  // cumulative; only written when timing is on
};

struct RunResult {
  std::vector<IterationRecord> records;
  double final_point = 0.0;
  double final_online = 0.0;
  // The headline number: the online average for sampling algorithms
  // (Gibbs and hybrids), the point value for the pure variational ones.
  double final_metric = 0.0;
  size_t test_tokens = 0;
  double wall_seconds = 0.0;
};

// Loads or synthesizes the corpus, applies ablations, splits, trains with
// per-iteration evaluation and streams CSV rows to csv_out when given.
// Byte-identical output for identical config + seed (timing off).
RunResult run_experiment(const ExperimentConfig& cfg,
                         std::ostream* csv_out = nullptr);

struct SuiteRow {
  std::string label;
  AlgorithmKind algorithm = AlgorithmKind::kCgs;
  uint32_t runs = 0;
  uint32_t failures = 0;
  double mean_final = 0.0;
  double stderr_final = 0.0;  // sample stddev / sqrt(runs)
};

// Runs every config over the seed list (config seed replaced), aggregating
// the final perplexity per config. Per-run failures are counted and skipped
// rather than aborting the suite.
std::vector<SuiteRow> run_suite(std::span<const ExperimentConfig> configs,
                                std::span<const uint64_t> seeds,
                                std::ostream* summary_csv = nullptr,
                                std::ostream* diagnostics = nullptr);

// Shared CSV helpers (17 significant digits, locale-independent).
std::string format_double(double v);
void write_csv_header(std::ostream& out);
void write_csv_row(std::ostream& out, const IterationRecord& rec, bool timing);

}  // namespace hylda
