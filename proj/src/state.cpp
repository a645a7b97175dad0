#include "hylda/state.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace hylda {

double Hyperparams::alpha_sum() const {
  double s = 0.0;
  for (double a : alpha) s += a;
  return s;
}

void Hyperparams::validate() const {
  if (alpha.empty()) {
    throw std::invalid_argument("hyperparams: alpha must have K >= 1 entries");
  }
  for (double a : alpha) {
    if (!(a > 0.0)) {
      throw std::invalid_argument("hyperparams: alpha entries must be positive");
    }
  }
  if (!(beta > 0.0)) {
    throw std::invalid_argument("hyperparams: beta must be positive");
  }
}

uint64_t Partition::vb_tokens() const {
  uint64_t n = 0;
  for (const Pair& p : vb_pairs) n += p.count;
  return n;
}

Partition partition_by_count(const Corpus& train, uint32_t threshold) {
  Partition part;
  part.num_docs = train.num_docs;
  part.vocab_size = train.vocab_size;
  part.threshold = threshold;

  std::vector<Pair> sorted = train.pairs;
  std::sort(sorted.begin(), sorted.end(), [](const Pair& a, const Pair& b) {
    return a.doc != b.doc ? a.doc < b.doc : a.word < b.word;
  });
  for (const Pair& p : sorted) {
    const bool variational =
        threshold == kAllVariational || (threshold > 0 && p.count > threshold);
    if (variational) {
      part.vb_pairs.push_back(p);
    } else {
      for (uint32_t t = 0; t < p.count; ++t) {
        part.cg_tokens.emplace_back(p.word, p.doc);
      }
    }
  }
  return part;
}

InferenceState init_state(const Partition& partition, const Hyperparams& hyper,
                          RngHandle& rng) {
  hyper.validate();
  const uint32_t K = hyper.num_topics();

  InferenceState state;
  state.q.num_topics = K;
  state.q.rows.resize(partition.vb_pairs.size() * K);
  const double jitter = 0.01 / K;
  for (size_t p = 0; p < partition.vb_pairs.size(); ++p) {
    auto row = state.q.row(p);
    double total = 0.0;
    for (uint32_t k = 0; k < K; ++k) {
      row[k] = 1.0 / K + jitter * rng.next_double();
      total += row[k];
    }
    for (uint32_t k = 0; k < K; ++k) row[k] /= total;
  }

  state.z.z.reserve(partition.cg_tokens.size());
  for (size_t t = 0; t < partition.cg_tokens.size(); ++t) {
    state.z.z.push_back(rng.next_below(K));
  }

  state.counts = recompute_counts(partition, state.q, state.z, hyper);
  return state;
}

CountState recompute_counts(const Partition& partition,
                            const VariationalPosterior& q,
                            const TopicAssignments& z,
                            const Hyperparams& hyper) {
  const uint32_t K = hyper.num_topics();
  CountState counts;
  counts.vocab_size = partition.vocab_size;
  counts.num_docs = partition.num_docs;
  counts.num_topics = K;
  counts.word_topic.assign(
      static_cast<size_t>(partition.vocab_size) * K, 0.0);
  counts.topic_doc.assign(static_cast<size_t>(K) * partition.num_docs, 0.0);
  counts.topic.assign(K, 0.0);
  counts.doc_len.assign(partition.num_docs, 0.0);

  for (size_t p = 0; p < partition.vb_pairs.size(); ++p) {
    const Pair& pair = partition.vb_pairs[p];
    const auto row = q.row(p);
    counts.doc_len[pair.doc] += pair.count;
    for (uint32_t k = 0; k < K; ++k) {
      const double mass = pair.count * row[k];
      counts.wk(pair.word, k) += mass;
      counts.kj(k, pair.doc) += mass;
      counts.topic[k] += mass;
    }
  }
  for (size_t t = 0; t < partition.cg_tokens.size(); ++t) {
    const auto [w, j] = partition.cg_tokens[t];
    const uint32_t k = z.z[t];
    counts.doc_len[j] += 1.0;
    counts.wk(w, k) += 1.0;
    counts.kj(k, j) += 1.0;
    counts.topic[k] += 1.0;
  }
  return counts;
}

VarianceState recompute_variance(const Partition& partition,
                                 const VariationalPosterior& q,
                                 const Hyperparams& hyper) {
  const uint32_t K = hyper.num_topics();
  VarianceState var;
  var.word_topic.assign(static_cast<size_t>(partition.vocab_size) * K, 0.0);
  var.topic_doc.assign(static_cast<size_t>(K) * partition.num_docs, 0.0);
  var.topic.assign(K, 0.0);
  for (size_t p = 0; p < partition.vb_pairs.size(); ++p) {
    const Pair& pair = partition.vb_pairs[p];
    const auto row = q.row(p);
    for (uint32_t k = 0; k < K; ++k) {
      const double v = pair.count * row[k] * (1.0 - row[k]);
      var.word_topic[static_cast<size_t>(pair.word) * K + k] += v;
      var.topic_doc[static_cast<size_t>(k) * partition.num_docs + pair.doc] += v;
      var.topic[k] += v;
    }
  }
  return var;
}

EffectiveHyperparams materialize_effective_hyperparams(
    const Partition& partition, const VariationalPosterior& q,
    const Hyperparams& hyper) {
  const uint32_t K = hyper.num_topics();
  EffectiveHyperparams eff;
  eff.alpha_prime.resize(static_cast<size_t>(K) * partition.num_docs);
  for (uint32_t k = 0; k < K; ++k) {
    for (uint32_t j = 0; j < partition.num_docs; ++j) {
      eff.alpha_prime[static_cast<size_t>(k) * partition.num_docs + j] =
          hyper.alpha[k];
    }
  }
  eff.beta_prime.assign(static_cast<size_t>(partition.vocab_size) * K,
                        hyper.beta);
  for (size_t p = 0; p < partition.vb_pairs.size(); ++p) {
    const Pair& pair = partition.vb_pairs[p];
    const auto row = q.row(p);
    for (uint32_t k = 0; k < K; ++k) {
      const double mass = pair.count * row[k];
      eff.alpha_prime[static_cast<size_t>(k) * partition.num_docs + pair.doc] +=
          mass;
      eff.beta_prime[static_cast<size_t>(pair.word) * K + k] += mass;
    }
  }
  return eff;
}

namespace {

void write_hex(std::ostream& out, std::span<const double> values) {
  char buf[40];
  for (double v : values) {
    std::snprintf(buf, sizeof(buf), "%a", v);
    out << buf << '\n';
  }
}

std::string next_line(std::istream& in, const char* section) {
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error(std::string("checkpoint: truncated in ") +
                             section);
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

void read_hex(std::istream& in, std::span<double> values, const char* section) {
  for (double& v : values) {
    const std::string line = next_line(in, section);
    char* end = nullptr;
    v = std::strtod(line.c_str(), &end);
    if (end == line.c_str()) {
      throw std::runtime_error(std::string("checkpoint: bad value in ") +
                               section);
    }
  }
}

uint64_t read_u64(std::istream& in, const char* section) {
  const std::string line = next_line(in, section);
  return std::strtoull(line.c_str(), nullptr, 10);
}

}  // namespace

void save_checkpoint(std::ostream& out, const Checkpoint& ck) {
  const Partition& part = ck.partition;
  out << "hylda-checkpoint 1\n";
  out << "dims " << part.num_docs << ' ' << part.vocab_size << ' '
      << ck.state.counts.num_topics << ' ' << part.threshold << '\n';
  out << "iteration " << ck.iteration << '\n';
  out << "rng " << ck.rng_seed << ' ' << ck.rng_state << '\n';

  out << "vb_pairs " << part.vb_pairs.size() << '\n';
  for (const Pair& p : part.vb_pairs) {
    out << p.word << ' ' << p.doc << ' ' << p.count << '\n';
  }
  out << "cg_tokens " << part.cg_tokens.size() << '\n';
  for (const auto& [w, j] : part.cg_tokens) out << w << ' ' << j << '\n';

  out << "q " << ck.state.q.rows.size() << '\n';
  write_hex(out, ck.state.q.rows);
  out << "z " << ck.state.z.z.size() << '\n';
  for (uint32_t zi : ck.state.z.z) out << zi << '\n';

  out << "counts\n";
  write_hex(out, ck.state.counts.word_topic);
  write_hex(out, ck.state.counts.topic_doc);
  write_hex(out, ck.state.counts.topic);
  write_hex(out, ck.state.counts.doc_len);

  out << "variance " << (ck.has_variance ? 1 : 0) << '\n';
  if (ck.has_variance) {
    write_hex(out, ck.variance.word_topic);
    write_hex(out, ck.variance.topic_doc);
    write_hex(out, ck.variance.topic);
  }
}

Checkpoint load_checkpoint(std::istream& in) {
  Checkpoint ck;
  if (next_line(in, "magic") != "hylda-checkpoint 1") {
    throw std::runtime_error("checkpoint: unrecognized header");
  }

  auto expect = [&](const char* tag) {
    const std::string line = next_line(in, tag);
    if (line.rfind(tag, 0) != 0) {
      throw std::runtime_error(std::string("checkpoint: expected section ") +
                               tag);
    }
    return line.substr(std::strlen(tag));
  };

  {
    const std::string rest = expect("dims ");
    unsigned long long j = 0, w = 0, k = 0, r = 0;
    if (std::sscanf(rest.c_str(), "%llu %llu %llu %llu", &j, &w, &k, &r) != 4) {
      throw std::runtime_error("checkpoint: malformed dims");
    }
    ck.partition.num_docs = static_cast<uint32_t>(j);
    ck.partition.vocab_size = static_cast<uint32_t>(w);
    ck.state.counts.num_topics = static_cast<uint32_t>(k);
    ck.partition.threshold = static_cast<uint32_t>(r);
  }
  ck.iteration = static_cast<uint32_t>(std::strtoull(
      expect("iteration ").c_str(), nullptr, 10));
  {
    const std::string rest = expect("rng ");
    unsigned long long seed = 0, state = 0;
    if (std::sscanf(rest.c_str(), "%llu %llu", &seed, &state) != 2) {
      throw std::runtime_error("checkpoint: malformed rng line");
    }
    ck.rng_seed = seed;
    ck.rng_state = state;
  }

  const uint64_t num_pairs =
      std::strtoull(expect("vb_pairs ").c_str(), nullptr, 10);
  ck.partition.vb_pairs.resize(num_pairs);
  for (Pair& p : ck.partition.vb_pairs) {
    const std::string line = next_line(in, "vb_pairs");
    unsigned long long w = 0, j = 0, c = 0;
    if (std::sscanf(line.c_str(), "%llu %llu %llu", &w, &j, &c) != 3) {
      throw std::runtime_error("checkpoint: malformed pair");
    }
    p = {static_cast<uint32_t>(w), static_cast<uint32_t>(j),
         static_cast<uint32_t>(c)};
  }
  const uint64_t num_tokens =
      std::strtoull(expect("cg_tokens ").c_str(), nullptr, 10);
  ck.partition.cg_tokens.resize(num_tokens);
  for (auto& token : ck.partition.cg_tokens) {
    const std::string line = next_line(in, "cg_tokens");
    unsigned long long w = 0, j = 0;
    if (std::sscanf(line.c_str(), "%llu %llu", &w, &j) != 2) {
      throw std::runtime_error("checkpoint: malformed token");
    }
    token = {static_cast<uint32_t>(w), static_cast<uint32_t>(j)};
  }

  const uint32_t K = ck.state.counts.num_topics;
  const uint64_t q_len = std::strtoull(expect("q ").c_str(), nullptr, 10);
  if (q_len != num_pairs * K) {
    throw std::runtime_error("checkpoint: q length does not match partition");
  }
  ck.state.q.num_topics = K;
  ck.state.q.rows.resize(q_len);
  read_hex(in, ck.state.q.rows, "q");

  const uint64_t z_len = std::strtoull(expect("z ").c_str(), nullptr, 10);
  if (z_len != num_tokens) {
    throw std::runtime_error("checkpoint: z length does not match partition");
  }
  ck.state.z.z.resize(z_len);
  for (uint32_t& zi : ck.state.z.z) {
    zi = static_cast<uint32_t>(read_u64(in, "z"));
    if (zi >= K) throw std::runtime_error("checkpoint: topic index out of range");
  }

  expect("counts");
  CountState& counts = ck.state.counts;
  counts.vocab_size = ck.partition.vocab_size;
  counts.num_docs = ck.partition.num_docs;
  counts.word_topic.resize(static_cast<size_t>(counts.vocab_size) * K);
  counts.topic_doc.resize(static_cast<size_t>(K) * counts.num_docs);
  counts.topic.resize(K);
  counts.doc_len.resize(counts.num_docs);
  read_hex(in, counts.word_topic, "counts");
  read_hex(in, counts.topic_doc, "counts");
  read_hex(in, counts.topic, "counts");
  read_hex(in, counts.doc_len, "counts");

  ck.has_variance =
      std::strtoull(expect("variance ").c_str(), nullptr, 10) != 0;
  if (ck.has_variance) {
    ck.variance.word_topic.resize(counts.word_topic.size());
    ck.variance.topic_doc.resize(counts.topic_doc.size());
    ck.variance.topic.resize(K);
    read_hex(in, ck.variance.word_topic, "variance");
    read_hex(in, ck.variance.topic_doc, "variance");
    read_hex(in, ck.variance.topic, "variance");
  }
  return ck;
}

}  // namespace hylda
