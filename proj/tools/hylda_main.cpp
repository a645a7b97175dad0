// Command line front end: `run` trains one configuration with per-iteration
// CSV output, `suite` aggregates final perplexities over configs and seeds,
// `synth` emits a sampled corpus in the bag-of-words file format, and
// `oracle` prints exact enumeration results for a tiny corpus (optionally
// checking a Gibbs chain against them).

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hylda/algorithms.hpp"
#include "hylda/corpus.hpp"
#include "hylda/eval.hpp"
#include "hylda/experiment.hpp"

namespace {

using hylda::ExperimentConfig;

// Options given on the command line override values from --config.
struct RunFlags {
  std::string config_path;
  std::string docword, vocab, algorithm, alpha, remove_singletons, output;
  uint32_t synth_docs = 0, synth_vocab = 0, synth_topics = 0,
           synth_doc_length = 0;
  double synth_alpha = 0, synth_beta = 0, beta = 0, test_fraction = 0;
  uint32_t topics = 0, threshold = 0, iterations = 0, burn_in = 0,
           samples_per_iter = 0, prune_top = 0;
  uint64_t seed = 0;
  bool timing = false;
};

void add_run_options(CLI::App* cmd, RunFlags& flags) {
  cmd->add_option("--config", flags.config_path,
                  "config file (flat key=value lines)");
  cmd->add_option("--docword", flags.docword, "bag-of-words docword file");
  cmd->add_option("--vocab", flags.vocab, "vocabulary file");
  cmd->add_option("--synth-docs", flags.synth_docs, "synthetic corpus: documents");
  cmd->add_option("--synth-vocab", flags.synth_vocab, "synthetic corpus: vocabulary size");
  cmd->add_option("--synth-topics", flags.synth_topics, "synthetic corpus: generator topics");
  cmd->add_option("--synth-doc-length", flags.synth_doc_length, "synthetic corpus: tokens per document");
  cmd->add_option("--synth-alpha", flags.synth_alpha, "synthetic corpus: generator alpha");
  cmd->add_option("--synth-beta", flags.synth_beta, "synthetic corpus: generator beta");
  cmd->add_option("--algorithm", flags.algorithm,
                  "cgs, svb, cvb, hybrid_svb_cgs or hybrid_cvb_cgs");
  cmd->add_option("--topics", flags.topics, "number of topics K");
  cmd->add_option("--alpha", flags.alpha,
                  "document-side strength: scalar or comma list of K values");
  cmd->add_option("--beta", flags.beta, "word-side strength (symmetric)");
  cmd->add_option("--threshold", flags.threshold,
                  "pair-count threshold r for the hybrids");
  cmd->add_option("--iterations", flags.iterations, "training iterations");
  cmd->add_option("--burn-in", flags.burn_in,
                  "iterations excluded from the online average");
  cmd->add_option("--samples-per-iter", flags.samples_per_iter,
                  "Gibbs sweeps per hybrid iteration");
  cmd->add_option("--test-fraction", flags.test_fraction,
                  "held-out token fraction");
  cmd->add_option("--prune-top", flags.prune_top,
                  "keep only the N most frequent words (0 = off)");
  cmd->add_option("--remove-singletons", flags.remove_singletons,
                  "none, train_only or both");
  cmd->add_option("--output", flags.output, "CSV output path (default stdout)");
  cmd->add_flag("--timing", flags.timing,
                "fill the elapsed_seconds column (breaks byte reproducibility)");
}

ExperimentConfig build_config(const CLI::App* cmd, const RunFlags& flags) {
  ExperimentConfig cfg;
  if (!flags.config_path.empty()) {
    cfg = hylda::load_config_file(flags.config_path);
  }
  auto given = [cmd](const std::string& name) {
    return cmd->count(name) > 0;
  };
  if (given("--docword")) cfg.docword = flags.docword;
  if (given("--vocab")) cfg.vocab = flags.vocab;
  if (given("--synth-docs")) cfg.synth_docs = flags.synth_docs;
  if (given("--synth-vocab")) cfg.synth_vocab = flags.synth_vocab;
  if (given("--synth-topics")) cfg.synth_topics = flags.synth_topics;
  if (given("--synth-doc-length")) cfg.synth_doc_length = flags.synth_doc_length;
  if (given("--synth-alpha")) cfg.synth_alpha = flags.synth_alpha;
  if (given("--synth-beta")) cfg.synth_beta = flags.synth_beta;
  if (given("--algorithm")) {
    const auto kind = hylda::algorithm_from_name(flags.algorithm);
    if (!kind) {
      throw CLI::ValidationError("--algorithm",
                                 "unknown algorithm: " + flags.algorithm);
    }
    cfg.algorithm = *kind;
  }
  if (given("--topics")) cfg.topics = flags.topics;
  if (given("--alpha")) hylda::apply_alpha_option(cfg, flags.alpha);
  if (given("--beta")) cfg.beta = flags.beta;
  if (given("--threshold")) cfg.threshold = flags.threshold;
  if (given("--iterations")) cfg.iterations = flags.iterations;
  if (given("--burn-in")) cfg.burn_in = flags.burn_in;
  if (given("--samples-per-iter")) cfg.samples_per_iter = flags.samples_per_iter;
  if (given("--test-fraction")) cfg.test_fraction = flags.test_fraction;
  if (given("--prune-top")) cfg.prune_top = flags.prune_top;
  if (given("--remove-singletons")) {
    if (flags.remove_singletons == "none") {
      cfg.singleton_removal.reset();
    } else if (flags.remove_singletons == "train_only") {
      cfg.singleton_removal = hylda::SingletonMode::kTrainOnly;
    } else if (flags.remove_singletons == "both") {
      cfg.singleton_removal = hylda::SingletonMode::kBoth;
    } else {
      throw CLI::ValidationError("--remove-singletons",
                                 "expected none, train_only or both");
    }
  }
  if (given("--output")) cfg.output = flags.output;
  if (given("--timing")) cfg.timing = flags.timing;
  return cfg;
}

std::vector<uint64_t> parse_seed_list(const std::string& value) {
  std::vector<uint64_t> seeds;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    seeds.push_back(std::stoull(item));
  }
  return seeds;
}

int do_run(ExperimentConfig cfg, uint64_t seed) {
  cfg.seed = seed;
  hylda::RunResult result;
  if (cfg.output.empty()) {
    result = hylda::run_experiment(cfg, &std::cout);
  } else {
    std::ofstream out(cfg.output);
    if (!out) {
      std::cerr << "cannot open output file: " << cfg.output << '\n';
      return 1;
    }
    result = hylda::run_experiment(cfg, &out);
  }
  std::cerr << "final point perplexity  " << result.final_point << '\n'
            << "final online perplexity " << result.final_online << '\n'
            << "wall seconds            " << result.wall_seconds << '\n';
  return 0;
}

int do_oracle(const std::string& docword_path, uint32_t topics, double alpha,
              double beta, uint32_t cgs_sweeps, uint32_t cgs_burn_in,
              uint64_t seed) {
  std::ifstream in(docword_path);
  if (!in) {
    std::cerr << "cannot open docword file: " << docword_path << '\n';
    return 1;
  }
  const hylda::Corpus corpus = hylda::parse_bow(in);
  hylda::Hyperparams hyper;
  hyper.alpha.assign(topics, alpha);
  hyper.beta = beta;

  const hylda::Enumeration exact = hylda::enumerate_exact(corpus, hyper);
  std::cout << "tokens " << exact.num_tokens << "  topics "
            << exact.num_topics << '\n';
  std::cout << "log_evidence " << hylda::format_double(exact.log_evidence)
            << '\n';
  const auto tokens = hylda::corpus_tokens(corpus);
  for (size_t t = 0; t < exact.num_tokens; ++t) {
    std::cout << "token " << t << " (word " << tokens[t].first << ", doc "
              << tokens[t].second << "):";
    for (uint32_t k = 0; k < exact.num_topics; ++k) {
      std::cout << ' ' << hylda::format_double(exact.marginal(t, k));
    }
    std::cout << '\n';
  }

  if (cgs_sweeps > 0) {
    hylda::RngHandle master(seed);
    hylda::Trainer trainer(corpus, hylda::AlgorithmKind::kCgs, hyper, 0, 1,
                           master.derive(1), master.derive(2));
    for (uint32_t i = 0; i < cgs_burn_in; ++i) trainer.step();
    std::vector<double> hits(exact.num_tokens * exact.num_topics, 0.0);
    for (uint32_t i = 0; i < cgs_sweeps; ++i) {
      trainer.step();
      const auto& z = trainer.z().z;
      for (size_t t = 0; t < z.size(); ++t) {
        hits[t * exact.num_topics + z[t]] += 1.0;
      }
    }
    double max_err = 0.0;
    for (size_t i = 0; i < hits.size(); ++i) {
      max_err = std::max(max_err,
                         std::abs(hits[i] / cgs_sweeps - exact.marginals[i]));
    }
    std::cout << "cgs_marginal_max_abs_error " << max_err << "  (sweeps "
              << cgs_sweeps << ", burn-in " << cgs_burn_in << ")\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Collapsed topic-model inference: Gibbs, variational and "
               "hybrid kernels over one count state"};
  app.require_subcommand(1);

  // run
  auto* run_cmd = app.add_subcommand("run", "train one configuration");
  RunFlags run_flags;
  add_run_options(run_cmd, run_flags);
  uint64_t run_seed = 0;
  run_cmd->add_option("--seed", run_seed, "master seed (required)")
      ->required();

  // suite
  auto* suite_cmd =
      app.add_subcommand("suite", "aggregate runs over configs and seeds");
  std::vector<std::string> suite_configs;
  std::string suite_seeds = "1,2,3,4,5";
  std::string suite_output;
  suite_cmd->add_option("--config", suite_configs, "config file (repeatable)")
      ->required();
  suite_cmd->add_option("--seeds", suite_seeds, "comma-separated seed list");
  suite_cmd->add_option("--output", suite_output,
                        "summary CSV path (default stdout)");

  // synth
  auto* synth_cmd =
      app.add_subcommand("synth", "emit a synthetic corpus in UCI format");
  uint32_t sy_docs = 200, sy_vocab = 500, sy_topics = 10, sy_len = 50;
  double sy_alpha = 0.1, sy_beta = 0.1;
  uint64_t sy_seed = 0;
  std::string sy_out, sy_vocab_out;
  synth_cmd->add_option("--docs", sy_docs, "documents");
  synth_cmd->add_option("--vocab", sy_vocab, "vocabulary size");
  synth_cmd->add_option("--topics", sy_topics, "generator topics");
  synth_cmd->add_option("--doc-length", sy_len, "tokens per document");
  synth_cmd->add_option("--alpha", sy_alpha, "generator alpha");
  synth_cmd->add_option("--beta", sy_beta, "generator beta");
  synth_cmd->add_option("--seed", sy_seed, "generator seed")->required();
  synth_cmd->add_option("--output", sy_out, "docword output path")->required();
  synth_cmd->add_option("--vocab-out", sy_vocab_out,
                        "write placeholder word names here");

  // oracle
  auto* oracle_cmd = app.add_subcommand(
      "oracle", "exact enumeration checks on a tiny corpus");
  std::string or_docword;
  uint32_t or_topics = 2, or_sweeps = 0, or_burn = 100;
  double or_alpha = 0.1, or_beta = 0.1;
  uint64_t or_seed = 1;
  oracle_cmd->add_option("--docword", or_docword, "tiny corpus file")
      ->required();
  oracle_cmd->add_option("--topics", or_topics, "number of topics K");
  oracle_cmd->add_option("--alpha", or_alpha, "symmetric alpha");
  oracle_cmd->add_option("--beta", or_beta, "beta");
  oracle_cmd->add_option("--cgs-sweeps", or_sweeps,
                         "compare a Gibbs chain of this many sweeps");
  oracle_cmd->add_option("--cgs-burn-in", or_burn, "chain burn-in sweeps");
  oracle_cmd->add_option("--seed", or_seed, "chain seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      return do_run(build_config(run_cmd, run_flags), run_seed);
    }
    if (suite_cmd->parsed()) {
      std::vector<ExperimentConfig> configs;
      for (const std::string& path : suite_configs) {
        configs.push_back(hylda::load_config_file(path));
      }
      const std::vector<uint64_t> seeds = parse_seed_list(suite_seeds);
      if (seeds.empty()) {
        std::cerr << "--seeds produced an empty list\n";
        return 1;
      }
      if (suite_output.empty()) {
        hylda::run_suite(configs, seeds, &std::cout, &std::cerr);
      } else {
        std::ofstream out(suite_output);
        if (!out) {
          std::cerr << "cannot open output file: " << suite_output << '\n';
          return 1;
        }
        hylda::run_suite(configs, seeds, &out, &std::cerr);
      }
      return 0;
    }
    if (synth_cmd->parsed()) {
      const std::vector<double> alpha(sy_topics, sy_alpha);
      const hylda::Corpus corpus = hylda::generate_synthetic(
          sy_docs, sy_vocab, sy_topics, sy_len, alpha, sy_beta, sy_seed);
      std::ofstream out(sy_out);
      if (!out) {
        std::cerr << "cannot open output file: " << sy_out << '\n';
        return 1;
      }
      if (sy_vocab_out.empty()) {
        hylda::serialize_bow(corpus, out);
      } else {
        hylda::Corpus named = corpus;
        named.vocab.reserve(sy_vocab);
        for (uint32_t w = 0; w < sy_vocab; ++w) {
          named.vocab.push_back("word" + std::to_string(w));
        }
        std::ofstream vocab_out(sy_vocab_out);
        if (!vocab_out) {
          std::cerr << "cannot open vocab output: " << sy_vocab_out << '\n';
          return 1;
        }
        hylda::serialize_bow(named, out, &vocab_out);
      }
      std::cerr << "wrote " << corpus.unique_pairs() << " pairs, "
                << corpus.total_tokens() << " tokens\n";
      return 0;
    }
    if (oracle_cmd->parsed()) {
      return do_oracle(or_docword, or_topics, or_alpha, or_beta, or_sweeps,
                       or_burn, or_seed);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
