#include "hylda/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <string>
#include <unordered_map>
#include <unordered_set>

namespace hylda {

namespace {

uint64_t pair_key(uint32_t word, uint32_t doc) {
  return (static_cast<uint64_t>(doc) << 32) | word;
}

// Splits a line into whitespace-separated fields and parses each as int64.
bool parse_fields(const std::string& line, std::span<int64_t> out,
                  size_t* parsed) {
  size_t n = 0;
  const char* p = line.data();
  const char* end = p + line.size();
  while (p < end) {
    while (p < end && (*p == ' ' || *p == '\t' || *p == '\r')) ++p;
    if (p == end) break;
    if (n == out.size()) return false;  // too many fields
    int64_t value = 0;
    auto [next, ec] = std::from_chars(p, end, value);
    if (ec != std::errc() || (next < end && *next != ' ' && *next != '\t' &&
                              *next != '\r')) {
      return false;
    }
    out[n++] = value;
    p = next;
  }
  *parsed = n;
  return true;
}

[[noreturn]] void fail(size_t line_no, const std::string& what) {
  throw ParseError("docword line " + std::to_string(line_no) + ": " + what);
}

int64_t read_header_value(std::istream& in, size_t line_no, const char* name) {
  std::string line;
  if (!std::getline(in, line)) {
    fail(line_no, std::string("missing header value ") + name);
  }
  int64_t fields[1];
  size_t n = 0;
  if (!parse_fields(line, fields, &n) || n != 1 || fields[0] < 0 ||
      fields[0] > 2000000000) {
    fail(line_no, std::string("malformed header value ") + name);
  }
  return fields[0];
}

void sort_doc_major(std::vector<Pair>& pairs) {
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    return a.doc != b.doc ? a.doc < b.doc : a.word < b.word;
  });
}

}  // namespace

uint64_t Corpus::total_tokens() const {
  uint64_t n = 0;
  for (const Pair& p : pairs) n += p.count;
  return n;
}

std::vector<std::pair<uint32_t, uint32_t>> corpus_tokens(const Corpus& corpus) {
  std::vector<Pair> sorted = corpus.pairs;
  sort_doc_major(sorted);
  std::vector<std::pair<uint32_t, uint32_t>> tokens;
  tokens.reserve(corpus.total_tokens());
  for (const Pair& p : sorted) {
    for (uint32_t t = 0; t < p.count; ++t) tokens.emplace_back(p.word, p.doc);
  }
  return tokens;
}

Corpus parse_bow(std::istream& docword, std::istream* vocab) {
  Corpus corpus;
  const int64_t num_docs = read_header_value(docword, 1, "D");
  const int64_t vocab_size = read_header_value(docword, 2, "W");
  const int64_t nnz = read_header_value(docword, 3, "NNZ");

  corpus.num_docs = static_cast<uint32_t>(num_docs);
  corpus.vocab_size = static_cast<uint32_t>(vocab_size);
  corpus.pairs.reserve(static_cast<size_t>(nnz));

  std::unordered_set<uint64_t> seen;
  seen.reserve(static_cast<size_t>(nnz) * 2);

  std::string line;
  size_t line_no = 3;
  int64_t remaining = nnz;
  while (remaining > 0) {
    if (!std::getline(docword, line)) {
      fail(line_no + 1, "unexpected end of stream, " +
                            std::to_string(remaining) + " entries missing");
    }
    ++line_no;
    int64_t fields[3];
    size_t n = 0;
    if (!parse_fields(line, fields, &n)) fail(line_no, "malformed entry");
    if (n == 0) continue;  // tolerate blank lines
    if (n != 3) fail(line_no, "expected 'docID wordID count'");
    const int64_t doc = fields[0], word = fields[1], count = fields[2];
    if (doc < 1 || doc > num_docs) {
      fail(line_no, "docID " + std::to_string(doc) + " outside [1, " +
                        std::to_string(num_docs) + "]");
    }
    if (word < 1 || word > vocab_size) {
      fail(line_no, "wordID " + std::to_string(word) + " outside [1, " +
                        std::to_string(vocab_size) + "]");
    }
    if (count < 1) fail(line_no, "nonpositive count");
    if (count > 2000000000) fail(line_no, "count out of range");
    const uint32_t w = static_cast<uint32_t>(word - 1);
    const uint32_t j = static_cast<uint32_t>(doc - 1);
    if (!seen.insert(pair_key(w, j)).second) {
      fail(line_no, "duplicate (docID, wordID) pair");
    }
    corpus.pairs.push_back({w, j, static_cast<uint32_t>(count)});
    --remaining;
  }
  // Anything left must be whitespace.
  while (std::getline(docword, line)) {
    ++line_no;
    int64_t fields[3];
    size_t n = 0;
    if (!parse_fields(line, fields, &n) || n != 0) {
      fail(line_no, "trailing content after declared NNZ entries");
    }
  }

  if (vocab != nullptr) {
    corpus.vocab.reserve(corpus.vocab_size);
    std::string word;
    size_t vocab_line = 0;
    while (std::getline(*vocab, word)) {
      ++vocab_line;
      while (!word.empty() && (word.back() == '\r' || word.back() == ' ' ||
                               word.back() == '\t')) {
        word.pop_back();
      }
      if (word.empty()) continue;
      if (corpus.vocab.size() == corpus.vocab_size) {
        throw ParseError("vocab line " + std::to_string(vocab_line) +
                         ": more entries than declared vocabulary size");
      }
      corpus.vocab.push_back(word);
    }
    if (corpus.vocab.size() != corpus.vocab_size) {
      throw ParseError("vocab stream ended after " +
                       std::to_string(corpus.vocab.size()) + " of " +
                       std::to_string(corpus.vocab_size) + " entries");
    }
  }
  return corpus;
}

void serialize_bow(const Corpus& corpus, std::ostream& docword,
                   std::ostream* vocab) {
  std::vector<Pair> sorted = corpus.pairs;
  sort_doc_major(sorted);
  docword << corpus.num_docs << '\n'
          << corpus.vocab_size << '\n'
          << sorted.size() << '\n';
  for (const Pair& p : sorted) {
    docword << (p.doc + 1) << ' ' << (p.word + 1) << ' ' << p.count << '\n';
  }
  if (vocab != nullptr) {
    for (const std::string& word : corpus.vocab) *vocab << word << '\n';
  }
}

TokenSplit split_train_test(const Corpus& corpus, double fraction,
                            uint64_t seed) {
  if (!(fraction >= 0.0) || fraction >= 1.0) {
    throw std::invalid_argument("split_train_test: fraction outside [0, 1)");
  }
  RngHandle rng(seed);
  TokenSplit split;
  split.split_seed = seed;
  split.fraction = fraction;
  split.train.num_docs = corpus.num_docs;
  split.train.vocab_size = corpus.vocab_size;
  split.train.vocab = corpus.vocab;
  split.train.pairs.reserve(corpus.pairs.size());
  for (const Pair& p : corpus.pairs) {
    uint32_t test_mult = 0;
    for (uint32_t t = 0; t < p.count; ++t) {
      if (rng.next_double() < fraction) ++test_mult;
    }
    if (test_mult < p.count) {
      split.train.pairs.push_back({p.word, p.doc, p.count - test_mult});
    }
    for (uint32_t t = 0; t < test_mult; ++t) {
      split.test.emplace_back(p.word, p.doc);
    }
  }
  return split;
}

Corpus prune_vocabulary(const Corpus& corpus, uint32_t top_v) {
  if (top_v < 1 || top_v > corpus.vocab_size) {
    throw std::invalid_argument("prune_vocabulary: top_v out of range");
  }
  std::vector<uint64_t> freq(corpus.vocab_size, 0);
  for (const Pair& p : corpus.pairs) freq[p.word] += p.count;

  std::vector<uint32_t> order(corpus.vocab_size);
  for (uint32_t w = 0; w < corpus.vocab_size; ++w) order[w] = w;
  std::stable_sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) {
    return freq[a] != freq[b] ? freq[a] > freq[b] : a < b;
  });

  // Kept words are renumbered densely in original id order.
  std::vector<uint32_t> kept(order.begin(), order.begin() + top_v);
  std::sort(kept.begin(), kept.end());
  constexpr uint32_t kDropped = UINT32_MAX;
  std::vector<uint32_t> remap(corpus.vocab_size, kDropped);
  for (uint32_t i = 0; i < kept.size(); ++i) remap[kept[i]] = i;

  Corpus pruned;
  pruned.num_docs = corpus.num_docs;
  pruned.vocab_size = top_v;
  for (const Pair& p : corpus.pairs) {
    if (remap[p.word] != kDropped) {
      pruned.pairs.push_back({remap[p.word], p.doc, p.count});
    }
  }
  if (!corpus.vocab.empty()) {
    pruned.vocab.reserve(top_v);
    for (uint32_t w : kept) pruned.vocab.push_back(corpus.vocab[w]);
  }
  return pruned;
}

TokenSplit remove_singletons(const TokenSplit& split, SingletonMode mode) {
  TokenSplit out;
  out.split_seed = split.split_seed;
  out.fraction = split.fraction;
  out.train.num_docs = split.train.num_docs;
  out.train.vocab_size = split.train.vocab_size;
  out.train.vocab = split.train.vocab;
  for (const Pair& p : split.train.pairs) {
    if (p.count != 1) out.train.pairs.push_back(p);
  }
  if (mode == SingletonMode::kTrainOnly) {
    out.test = split.test;
    return out;
  }
  // Conservation gives back the pre-split count: train count + test
  // multiplicity per pair.
  std::unordered_map<uint64_t, uint32_t> original;
  for (const Pair& p : split.train.pairs) {
    original[pair_key(p.word, p.doc)] += p.count;
  }
  for (const auto& [w, j] : split.test) original[pair_key(w, j)] += 1;
  for (const auto& [w, j] : split.test) {
    if (original[pair_key(w, j)] != 1) out.test.emplace_back(w, j);
  }
  return out;
}

Corpus generate_synthetic(uint32_t num_docs, uint32_t vocab_size,
                          uint32_t num_topics, uint32_t tokens_per_doc,
                          std::span<const double> alpha, double beta,
                          uint64_t seed) {
  if (num_docs < 1 || vocab_size < 1 || num_topics < 1 || tokens_per_doc < 1) {
    throw std::invalid_argument("generate_synthetic: dimensions must be >= 1");
  }
  if (alpha.size() != num_topics) {
    throw std::invalid_argument("generate_synthetic: alpha size != K");
  }
  if (!(beta > 0.0)) {
    throw std::invalid_argument("generate_synthetic: beta must be positive");
  }
  RngHandle rng(seed);

  std::vector<double> word_dist(static_cast<size_t>(num_topics) * vocab_size);
  std::vector<double> beta_vec(vocab_size, beta);
  for (uint32_t k = 0; k < num_topics; ++k) {
    sample_dirichlet(beta_vec, rng,
                     {word_dist.data() + static_cast<size_t>(k) * vocab_size,
                      vocab_size});
  }

  Corpus corpus;
  corpus.num_docs = num_docs;
  corpus.vocab_size = vocab_size;
  std::vector<double> theta(num_topics);
  std::vector<uint32_t> doc_counts(vocab_size);
  for (uint32_t j = 0; j < num_docs; ++j) {
    sample_dirichlet(alpha, rng, theta);
    std::fill(doc_counts.begin(), doc_counts.end(), 0u);
    for (uint32_t t = 0; t < tokens_per_doc; ++t) {
      const size_t k = sample_categorical(theta, rng);
      const size_t w = sample_categorical(
          {word_dist.data() + k * vocab_size, vocab_size}, rng);
      ++doc_counts[w];
    }
    for (uint32_t w = 0; w < vocab_size; ++w) {
      if (doc_counts[w] > 0) corpus.pairs.push_back({w, j, doc_counts[w]});
    }
  }
  return corpus;
}

}  // namespace hylda
