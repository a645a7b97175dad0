#include "hylda/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace hylda {

namespace {

// Named sub-streams derived from the master seed. Splitting and synthesis
// never depend on the algorithm, so ablations over the same seed reuse the
// same corpus and split.
constexpr uint64_t kSynthStream = 1;
constexpr uint64_t kSplitStream = 2;
constexpr uint64_t kInitStream = 3;
constexpr uint64_t kSweepStream = 4;

uint32_t effective_threshold(AlgorithmKind kind, uint32_t threshold) {
  switch (kind) {
    case AlgorithmKind::kCgs:
      return 0;
    case AlgorithmKind::kSvb:
    case AlgorithmKind::kCvb:
      return kAllVariational;
    default:
      return threshold;
  }
}

}  // namespace

Hyperparams ExperimentConfig::hyperparams() const {
  Hyperparams hyper;
  hyper.alpha = alpha.empty()
                    ? std::vector<double>(topics, alpha_scalar)
                    : alpha;
  hyper.beta = beta;
  return hyper;
}

void ExperimentConfig::validate() const {
  auto reject = [](const std::string& field, const std::string& why) {
    throw std::invalid_argument("config field '" + field + "': " + why);
  };
  if (topics < 1) reject("topics", "must be >= 1");
  if (!alpha.empty() && alpha.size() != topics) {
    reject("alpha", "needs exactly one entry per topic");
  }
  for (double a : alpha) {
    if (!(a > 0.0)) reject("alpha", "entries must be positive");
  }
  if (alpha.empty() && !(alpha_scalar > 0.0)) {
    reject("alpha", "must be positive");
  }
  if (!(beta > 0.0)) reject("beta", "must be positive");
  if (iterations < 1) reject("iterations", "must be >= 1");
  if (burn_in >= iterations) reject("burn_in", "must be below iterations");
  if (samples_per_iter < 1) reject("samples_per_iter", "must be >= 1");
  if (!(test_fraction > 0.0) || test_fraction >= 1.0) {
    reject("test_fraction", "must lie in (0, 1)");
  }
  if (docword.empty()) {
    if (synth_docs < 1) reject("synth_docs", "must be >= 1");
    if (synth_vocab < 1) reject("synth_vocab", "must be >= 1");
    if (synth_topics < 1) reject("synth_topics", "must be >= 1");
    if (synth_doc_length < 1) reject("synth_doc_length", "must be >= 1");
    if (!(synth_alpha > 0.0)) reject("synth_alpha", "must be positive");
    if (!(synth_beta > 0.0)) reject("synth_beta", "must be positive");
  }
}

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<double> parse_double_list(const std::string& value,
                                      const std::string& field) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &pos);
    } catch (const std::exception&) {
      throw std::invalid_argument("config field '" + field +
                                  "': not a number: " + item);
    }
    if (pos != item.size()) {
      throw std::invalid_argument("config field '" + field +
                                  "': trailing garbage: " + item);
    }
    out.push_back(v);
  }
  if (out.empty()) {
    throw std::invalid_argument("config field '" + field + "': empty value");
  }
  return out;
}

uint64_t parse_u64(const std::string& value, const std::string& field) {
  try {
    size_t pos = 0;
    unsigned long long v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("garbage");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config field '" + field +
                                "': not a nonnegative integer: " + value);
  }
}

bool parse_bool(const std::string& value, const std::string& field) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw std::invalid_argument("config field '" + field +
                              "': expected true/false: " + value);
}

}  // namespace

void apply_alpha_option(ExperimentConfig& cfg, const std::string& value) {
  const auto values = parse_double_list(value, "alpha");
  if (values.size() == 1) {
    cfg.alpha_scalar = values[0];
    cfg.alpha.clear();
  } else {
    cfg.alpha = values;
  }
}

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": expected key=value");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));

    if (key == "docword") {
      cfg.docword = value;
    } else if (key == "vocab") {
      cfg.vocab = value;
    } else if (key == "synth_docs") {
      cfg.synth_docs = static_cast<uint32_t>(parse_u64(value, key));
    } else if (key == "synth_vocab") {
      cfg.synth_vocab = static_cast<uint32_t>(parse_u64(value, key));
    } else if (key == "synth_topics") {
      cfg.synth_topics = static_cast<uint32_t>(parse_u64(value, key));
    } else if (key == "synth_doc_length") {
      cfg.synth_doc_length = static_cast<uint32_t>(parse_u64(value, key));
    } else if (key == "synth_alpha") {
      cfg.synth_alpha = parse_double_list(value, key)[0];
    } else if (key == "synth_beta") {
      cfg.synth_beta = parse_double_list(value, key)[0];
    } else if (key == "algorithm") {
      const auto kind = algorithm_from_name(value);
      if (!kind) {
        throw std::invalid_argument("config field 'algorithm': unknown name " +
                                    value);
      }
      cfg.algorithm = *kind;
    } else if (key == "topics") {
      cfg.topics = static_cast<uint32_t>(parse_u64(value, key));
    } else if (key == "alpha") {
      apply_alpha_option(cfg, value);
    } else if (key == "beta") {
      cfg.beta = parse_double_list(value, key)[0];
    } else if (key == "threshold") {
      cfg.threshold = static_cast<uint32_t>(parse_u64(value, key));
    } else if (key == "iterations") {
      cfg.iterations = static_cast<uint32_t>(parse_u64(value, key));
    } else if (key == "burn_in") {
      cfg.burn_in = static_cast<uint32_t>(parse_u64(value, key));
    } else if (key == "samples_per_iter") {
      cfg.samples_per_iter = static_cast<uint32_t>(parse_u64(value, key));
    } else if (key == "test_fraction") {
      cfg.test_fraction = parse_double_list(value, key)[0];
    } else if (key == "seed") {
      cfg.seed = parse_u64(value, key);
    } else if (key == "prune_top") {
      cfg.prune_top = static_cast<uint32_t>(parse_u64(value, key));
    } else if (key == "remove_singletons") {
      if (value == "none") {
        cfg.singleton_removal.reset();
      } else if (value == "train_only") {
        cfg.singleton_removal = SingletonMode::kTrainOnly;
      } else if (value == "both") {
        cfg.singleton_removal = SingletonMode::kBoth;
      } else {
        throw std::invalid_argument(
            "config field 'remove_singletons': expected none/train_only/both");
      }
    } else if (key == "output") {
      cfg.output = value;
    } else if (key == "timing") {
      cfg.timing = parse_bool(value, key);
    } else {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": unknown key '" + key + "'");
    }
  }
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open config file: " + path);
  }
  return parse_config(in);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void serialize_config(const ExperimentConfig& cfg, std::ostream& out) {
  out << "docword = " << cfg.docword << '\n';
  out << "vocab = " << cfg.vocab << '\n';
  out << "synth_docs = " << cfg.synth_docs << '\n';
  out << "synth_vocab = " << cfg.synth_vocab << '\n';
  out << "synth_topics = " << cfg.synth_topics << '\n';
  out << "synth_doc_length = " << cfg.synth_doc_length << '\n';
  out << "synth_alpha = " << format_double(cfg.synth_alpha) << '\n';
  out << "synth_beta = " << format_double(cfg.synth_beta) << '\n';
  out << "algorithm = " << algorithm_name(cfg.algorithm) << '\n';
  out << "topics = " << cfg.topics << '\n';
  out << "alpha = ";
  if (cfg.alpha.empty()) {
    out << format_double(cfg.alpha_scalar);
  } else {
    for (size_t i = 0; i < cfg.alpha.size(); ++i) {
      if (i > 0) out << ',';
      out << format_double(cfg.alpha[i]);
    }
  }
  out << '\n';
  out << "beta = " << format_double(cfg.beta) << '\n';
  out << "threshold = " << cfg.threshold << '\n';
  out << "iterations = " << cfg.iterations << '\n';
  out << "burn_in = " << cfg.burn_in << '\n';
  out << "samples_per_iter = " << cfg.samples_per_iter << '\n';
  out << "test_fraction = " << format_double(cfg.test_fraction) << '\n';
  out << "seed = " << cfg.seed << '\n';
  out << "prune_top = " << cfg.prune_top << '\n';
  out << "remove_singletons = ";
  if (!cfg.singleton_removal) {
    out << "none";
  } else if (*cfg.singleton_removal == SingletonMode::kTrainOnly) {
    out << "train_only";
  } else {
    out << "both";
  }
  out << '\n';
  out << "output = " << cfg.output << '\n';
  out << "timing = " << (cfg.timing ? "true" : "false") << '\n';
}

Trainer::Trainer(const Corpus& train, AlgorithmKind kind,
                 const Hyperparams& hyper, uint32_t threshold,
                 uint32_t samples_per_iter, RngHandle init_rng,
                 RngHandle sweep_rng)
    : kind_(kind),
      hyper_(hyper),
      samples_per_iter_(samples_per_iter),
      partition_(partition_by_count(train, effective_threshold(kind, threshold))),
      sweep_rng_(sweep_rng) {
  hyper_.validate();
  state_ = init_state(partition_, hyper_, init_rng);
  if (uses_variance(kind_)) {
    variance_ = recompute_variance(partition_, state_.q, hyper_);
  }
}

void Trainer::step() {
  switch (kind_) {
    case AlgorithmKind::kCgs:
      cgs_sweep(partition_, state_.counts, state_.z, hyper_, sweep_rng_);
      break;
    case AlgorithmKind::kSvb:
      svb_sweep(partition_, state_.counts, state_.q, hyper_);
      break;
    case AlgorithmKind::kCvb:
      cvb_sweep(partition_, state_.counts, variance_, state_.q, hyper_);
      break;
    case AlgorithmKind::kHybridSvbCgs:
    case AlgorithmKind::kHybridCvbCgs:
      hybrid_sweep(kind_, partition_, state_.counts, state_.q, state_.z,
                   uses_variance(kind_) ? &variance_ : nullptr, hyper_,
                   sweep_rng_, samples_per_iter_);
      break;
  }
  ++iteration_;
}

double Trainer::bound_estimate() const {
  return svb_bound(partition_, state_.q, state_.counts, hyper_);
}

Checkpoint Trainer::make_checkpoint() const {
  Checkpoint ck;
  ck.partition = partition_;
  ck.state = state_;
  ck.variance = variance_;
  ck.has_variance = uses_variance(kind_);
  ck.rng_seed = sweep_rng_.seed();
  ck.rng_state = sweep_rng_.raw_state();
  ck.iteration = iteration_;
  return ck;
}

void Trainer::restore(const Checkpoint& ck) {
  partition_ = ck.partition;
  state_ = ck.state;
  variance_ = ck.variance;
  sweep_rng_ = RngHandle(ck.rng_seed);
  sweep_rng_.set_raw_state(ck.rng_state);
  iteration_ = ck.iteration;
}

void write_csv_header(std::ostream& out) {
  out << "iteration,point_perplexity,online_perplexity,bound,elapsed_seconds\n";
}

void write_csv_row(std::ostream& out, const IterationRecord& rec,
                   bool timing) {
  out << rec.iteration << ',' << format_double(rec.point_perplexity) << ',';
  if (rec.online_perplexity) out << format_double(*rec.online_perplexity);
  out << ',' << format_double(rec.bound) << ',';
  if (timing) out << format_double(rec.elapsed_seconds);
  out << '\n';
}

RunResult run_experiment(const ExperimentConfig& cfg, std::ostream* csv_out) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const RngHandle master(cfg.seed);

  Corpus corpus;
  if (cfg.docword.empty()) {
    const std::vector<double> synth_alpha(cfg.synth_topics, cfg.synth_alpha);
    corpus = generate_synthetic(cfg.synth_docs, cfg.synth_vocab,
                                cfg.synth_topics, cfg.synth_doc_length,
                                synth_alpha, cfg.synth_beta,
                                master.derive(kSynthStream).seed());
  } else {
    std::ifstream docword(cfg.docword);
    if (!docword) {
      throw std::runtime_error("cannot open docword file: " + cfg.docword);
    }
    if (cfg.vocab.empty()) {
      corpus = parse_bow(docword);
    } else {
      std::ifstream vocab(cfg.vocab);
      if (!vocab) {
        throw std::runtime_error("cannot open vocab file: " + cfg.vocab);
      }
      corpus = parse_bow(docword, &vocab);
    }
  }

  if (cfg.prune_top > 0) {
    corpus = prune_vocabulary(corpus, cfg.prune_top);
  }
  TokenSplit split = split_train_test(corpus, cfg.test_fraction,
                                      master.derive(kSplitStream).seed());
  if (cfg.singleton_removal) {
    split = remove_singletons(split, *cfg.singleton_removal);
  }
  if (split.test.empty()) {
    throw std::runtime_error(
        "run_experiment: empty test set; corpus too small for the "
        "configured test_fraction");
  }

  const Hyperparams hyper = cfg.hyperparams();
  Trainer trainer(split.train, cfg.algorithm, hyper, cfg.threshold,
                  cfg.samples_per_iter, master.derive(kInitStream),
                  master.derive(kSweepStream));
  PredictiveAverager averager(split.test.size(), cfg.burn_in);

  RunResult result;
  result.test_tokens = split.test.size();
  result.records.reserve(cfg.iterations);
  if (csv_out != nullptr) write_csv_header(*csv_out);

  for (uint32_t iter = 1; iter <= cfg.iterations; ++iter) {
    trainer.step();
    IterationRecord rec;
    rec.iteration = iter;
    rec.point_perplexity =
        perplexity_point(trainer.counts(), hyper, split.test);
    rec.online_perplexity =
        averager.observe(trainer.counts(), hyper, split.test, iter);
    rec.bound = trainer.bound_estimate();
    rec.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    if (csv_out != nullptr) write_csv_row(*csv_out, rec, cfg.timing);
    result.records.push_back(std::move(rec));
  }

  const IterationRecord& last = result.records.back();
  result.final_point = last.point_perplexity;
  result.final_online = last.online_perplexity.value_or(
      std::numeric_limits<double>::quiet_NaN());
  const bool sampling_kind =
      cfg.algorithm == AlgorithmKind::kCgs || is_hybrid(cfg.algorithm);
  result.final_metric = sampling_kind ? result.final_online
                                      : result.final_point;
  result.wall_seconds = last.elapsed_seconds;
  return result;
}

std::vector<SuiteRow> run_suite(std::span<const ExperimentConfig> configs,
                                std::span<const uint64_t> seeds,
                                std::ostream* summary_csv,
                                std::ostream* diagnostics) {
  if (configs.empty() || seeds.empty()) {
    throw std::invalid_argument("run_suite: needs at least one config and seed");
  }
  std::vector<SuiteRow> rows;
  rows.reserve(configs.size());
  for (size_t c = 0; c < configs.size(); ++c) {
    SuiteRow row;
    row.label = "config" + std::to_string(c);
    row.algorithm = configs[c].algorithm;
    std::vector<double> finals;
    for (uint64_t seed : seeds) {
      ExperimentConfig cfg = configs[c];
      cfg.seed = seed;
      try {
        finals.push_back(run_experiment(cfg).final_metric);
        ++row.runs;
      } catch (const std::exception& e) {
        ++row.failures;
        if (diagnostics != nullptr) {
          *diagnostics << "run failed (" << algorithm_name(cfg.algorithm)
                       << ", seed " << seed << "): " << e.what() << '\n';
        }
      }
    }
    double mean = 0.0;
    for (double v : finals) mean += v;
    if (!finals.empty()) mean /= static_cast<double>(finals.size());
    double var = 0.0;
    for (double v : finals) var += (v - mean) * (v - mean);
    if (finals.size() > 1) {
      var /= static_cast<double>(finals.size() - 1);
      row.stderr_final = std::sqrt(var / static_cast<double>(finals.size()));
    }
    row.mean_final = mean;
    rows.push_back(std::move(row));
  }
  if (summary_csv != nullptr) {
    *summary_csv
        << "config,algorithm,runs,failures,mean_final_perplexity,"
           "stderr_final_perplexity\n";
    for (const SuiteRow& row : rows) {
      *summary_csv << row.label << ',' << algorithm_name(row.algorithm) << ','
                   << row.runs << ',' << row.failures << ','
                   << format_double(row.mean_final) << ','
                   << format_double(row.stderr_final) << '\n';
    }
  }
  return rows;
}

}  // namespace hylda
