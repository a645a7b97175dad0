#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hylda/rng.hpp"

namespace hylda {

// One unique word/document combination and its observed token count.
struct Pair {
  uint32_t word = 0;
  uint32_t doc = 0;
  uint32_t count = 0;

  friend bool operator==(const Pair&, const Pair&) = default;
};

// Sparse bag-of-words corpus. Ids are 0-based internally; the UCI file
// format is 1-based and converted on parse/serialize.
struct Corpus {
  uint32_t num_docs = 0;    // J
  uint32_t vocab_size = 0;  // W
  std::vector<Pair> pairs;  // unique (word, doc), counts >= 1
  std::vector<std::string> vocab;  // empty or exactly vocab_size entries

  uint64_t total_tokens() const;                // N
  size_t unique_pairs() const { return pairs.size(); }  // M
};

// Flat token list (word, doc), document-major then word-ascending, each pair
// expanded by its count. This is the canonical token ordering used by the
// exact enumeration and by Gibbs sweeps.
std::vector<std::pair<uint32_t, uint32_t>> corpus_tokens(const Corpus& corpus);

struct TokenSplit {
  Corpus train;
  std::vector<std::pair<uint32_t, uint32_t>> test;  // tokens with multiplicity
  uint64_t split_seed = 0;
  double fraction = 0.0;
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Reads the UCI bag-of-words layout: three integer header lines (D, W, NNZ)
// followed by NNZ lines "docID wordID count" with 1-based ids. A vocab
// stream, when given, supplies one word per line, W lines total.
// Malformed headers, out-of-range ids, nonpositive counts and duplicate
// pairs are rejected with the offending line number.
Corpus parse_bow(std::istream& docword, std::istream* vocab = nullptr);

// Inverse of parse_bow; pairs are emitted in (doc, word) order so output is
// canonical for a given corpus.
void serialize_bow(const Corpus& corpus, std::ostream& docword,
                   std::ostream* vocab = nullptr);

// Assigns each token independently to the test side with probability
// `fraction` (per-token Bernoulli draw, seeded). Per pair, train count plus
// test multiplicity always equals the original count.
TokenSplit split_train_test(const Corpus& corpus, double fraction,
                            uint64_t seed);

// Keeps the top_v most frequent word types (ties go to the lower original
// id), drops all pairs of removed words and remaps ids densely in original
// id order. Applied before splitting, so the reduced corpus is a dataset in
// its own right.
Corpus prune_vocabulary(const Corpus& corpus, uint32_t top_v);

enum class SingletonMode { kTrainOnly, kBoth };

// Drops training pairs whose (post-split) count is 1. kBoth additionally
// drops test tokens whose pair count in the original corpus was 1, i.e.
// fully withheld singleton pairs.
TokenSplit remove_singletons(const TokenSplit& split, SingletonMode mode);

// Samples a corpus from the generative chain: per-topic word distributions
// from a symmetric Dirichlet(beta), per-document topic proportions from
// Dirichlet(alpha), then tokens_per_doc tokens per document.
Corpus generate_synthetic(uint32_t num_docs, uint32_t vocab_size,
                          uint32_t num_topics, uint32_t tokens_per_doc,
                          std::span<const double> alpha, double beta,
                          uint64_t seed);

}  // namespace hylda
