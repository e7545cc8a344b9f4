#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "sentigen/model.hpp"
#include "sentigen/tensor.hpp"

namespace sentigen {

// lowercase + whitespace split; no subword units
std::vector<std::string> tokenize(const std::string& text);
std::string detokenize(std::span<const std::string> words);

// Token <-> id bijection with reserved ids 0..3 = <pad>, <bos>, <eos>, <unk>.
class Vocabulary {
 public:
  Vocabulary();

  // Frequency >= min_count, ids assigned by (frequency desc, token asc).
  static Vocabulary build(std::span<const std::string> captions, int min_count);

  // Restores a vocabulary from an id-ordered token list (checkpoint load).
  static Vocabulary from_token_list(std::vector<std::string> tokens);

  int id(const std::string& token) const;  // <unk> for unknown tokens
  const std::string& token(int id) const;
  int size() const { return static_cast<int>(id_to_token_.size()); }
  const std::vector<std::string>& token_list() const { return id_to_token_; }

  // <bos> words <eos>
  std::vector<int> encode(const std::string& caption) const;
  // drops <bos>/<eos>/<pad>
  std::vector<std::string> decode(std::span<const int> ids) const;

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, int> token_to_id_;
};

// One dataset line before vocabulary encoding.
struct RawRecord {
  std::string image_id;
  std::string caption;
  Sentiment label = Sentiment::kNeutral;
  Tensor feature;
};

// One training/eval example.
struct CaptionRecord {
  std::string image_id;
  Tensor feature;
  std::vector<int> tokens;  // <bos> ... <eos>
  Sentiment label = Sentiment::kNeutral;
};

CaptionRecord encode_record(const RawRecord& raw, const Vocabulary& vocab);
std::vector<CaptionRecord> encode_corpus(std::span<const RawRecord> raw, const Vocabulary& vocab);

// JSON-lines dataset files: {"image_id":..., "caption":..., "label":"neg|neu|pos",
// "feature":[...]} per line, UTF-8.
std::vector<RawRecord> load_dataset(const std::string& path);
void save_dataset(const std::string& path, std::span<const RawRecord> records);

// One word per line.
std::vector<std::string> load_lexicon(const std::string& path);
void save_lexicon(const std::string& path, std::span<const std::string> words);

// Factual records are relabeled neutral; sentiment records keep their labels;
// nothing is dropped or rebalanced.
std::vector<RawRecord> merge_corpora(std::span<const RawRecord> factual,
                                     std::span<const RawRecord> positive,
                                     std::span<const RawRecord> negative);

struct Scene {
  std::string noun, verb, place;
};

struct SyntheticCorpusSpec {
  std::vector<Scene> scenes;
  std::vector<std::string> positive_adjectives;
  std::vector<std::string> negative_adjectives;
  int train_per_pair = 10;  // captions per (scene, label) per split
  int val_per_pair = 1;
  int test_per_pair = 1;
  double noise_prob = 0.0;
  uint64_t seed = 42;
  int feature_dim = 0;  // 0 -> number of scenes

  static SyntheticCorpusSpec default_spec();
  static SyntheticCorpusSpec from_json_file(const std::string& path);
  void validate() const;
  int effective_feature_dim() const;
};

struct SyntheticCorpus {
  std::vector<RawRecord> train, val, test;
};

// Deterministic templated corpus. Neutral captions carry no lexicon
// adjective; pos/neg captions carry exactly one, from the matching lexicon,
// in front of the noun. Every record of a scene shares that scene's feature
// vector (one-hot over scenes plus small seeded jitter).
SyntheticCorpus generate_synthetic(const SyntheticCorpusSpec& spec);

struct Batch {
  Tensor features;                      // B x feature_dim
  std::vector<std::vector<int>> tokens; // padded to the batch max length
  std::vector<int> lengths;             // pre-padding token counts
  std::vector<Sentiment> labels;

  int size() const { return static_cast<int>(lengths.size()); }
  Tensor feature_row(int i) const;
};

// Seeded shuffle, fixed-size chunks, final partial batch kept.
std::vector<Batch> make_batches(std::span<const CaptionRecord> corpus, int batch_size,
                                uint64_t shuffle_seed);

}  // namespace sentigen
