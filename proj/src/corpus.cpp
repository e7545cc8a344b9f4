#include "sentigen/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace sentigen {

using nlohmann::json;

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!cur.empty()) {
        out.push_back(cur);
        cur.clear();
      }
    } else {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::string detokenize(std::span<const std::string> words) {
  std::string out;
  for (size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

Vocabulary::Vocabulary() {
  id_to_token_ = {"<pad>", "<bos>", "<eos>", "<unk>"};
  for (int i = 0; i < kNumReservedTokens; ++i) token_to_id_[id_to_token_[static_cast<size_t>(i)]] = i;
}

Vocabulary Vocabulary::build(std::span<const std::string> captions, int min_count) {
  if (captions.empty()) throw std::invalid_argument("build_vocab: empty corpus");
  std::map<std::string, int> freq;  // ordered map keeps ties lexicographic
  for (const std::string& caption : captions)
    for (const std::string& tok : tokenize(caption)) ++freq[tok];

  std::vector<std::pair<std::string, int>> kept;
  for (const auto& [tok, count] : freq)
    if (count >= min_count) kept.emplace_back(tok, count);
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  Vocabulary v;
  for (auto& [tok, count] : kept) {
    v.token_to_id_[tok] = v.size();
    v.id_to_token_.push_back(tok);
  }
  return v;
}

Vocabulary Vocabulary::from_token_list(std::vector<std::string> tokens) {
  if (tokens.size() < kNumReservedTokens || tokens[0] != "<pad>" || tokens[1] != "<bos>" ||
      tokens[2] != "<eos>" || tokens[3] != "<unk>")
    throw std::invalid_argument("vocabulary: token list lacks the reserved prefix");
  Vocabulary v;
  v.id_to_token_ = std::move(tokens);
  v.token_to_id_.clear();
  for (int i = 0; i < v.size(); ++i) v.token_to_id_[v.id_to_token_[static_cast<size_t>(i)]] = i;
  if (v.token_to_id_.size() != v.id_to_token_.size())
    throw std::invalid_argument("vocabulary: duplicate token in list");
  return v;
}

int Vocabulary::id(const std::string& token) const {
  auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? kUnkId : it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || id >= size()) throw std::out_of_range("vocabulary: id " + std::to_string(id));
  return id_to_token_[static_cast<size_t>(id)];
}

std::vector<int> Vocabulary::encode(const std::string& caption) const {
  std::vector<int> ids;
  ids.push_back(kBosId);
  for (const std::string& tok : tokenize(caption)) ids.push_back(id(tok));
  ids.push_back(kEosId);
  return ids;
}

std::vector<std::string> Vocabulary::decode(std::span<const int> ids) const {
  std::vector<std::string> words;
  for (int i : ids) {
    if (i == kBosId || i == kEosId || i == kPadId) continue;
    words.push_back(token(i));
  }
  return words;
}

CaptionRecord encode_record(const RawRecord& raw, const Vocabulary& vocab) {
  CaptionRecord r;
  r.image_id = raw.image_id;
  r.feature = raw.feature;
  r.tokens = vocab.encode(raw.caption);
  r.label = raw.label;
  return r;
}

std::vector<CaptionRecord> encode_corpus(std::span<const RawRecord> raw, const Vocabulary& vocab) {
  std::vector<CaptionRecord> out;
  out.reserve(raw.size());
  for (const RawRecord& r : raw) out.push_back(encode_record(r, vocab));
  return out;
}

std::vector<RawRecord> load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file " + path);
  std::vector<RawRecord> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    RawRecord r;
    try {
      r.image_id = j.at("image_id").get<std::string>();
      r.caption = j.at("caption").get<std::string>();
      r.label = sentiment_from_name(j.at("label").get<std::string>());
      std::vector<double> f = j.at("feature").get<std::vector<double>>();
      const int fdim = static_cast<int>(f.size());
      r.feature = Tensor({fdim}, std::move(f));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    out.push_back(std::move(r));
  }
  return out;
}

void save_dataset(const std::string& path, std::span<const RawRecord> records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dataset file " + path);
  for (const RawRecord& r : records) {
    json j;
    j["image_id"] = r.image_id;
    j["caption"] = r.caption;
    j["label"] = sentiment_name(r.label);
    j["feature"] = r.feature.values();
    out << j.dump() << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + path);
}

std::vector<std::string> load_lexicon(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open lexicon file " + path);
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> toks = tokenize(line);
    if (!toks.empty()) words.push_back(toks[0]);
  }
  return words;
}

void save_lexicon(const std::string& path, std::span<const std::string> words) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write lexicon file " + path);
  for (const std::string& w : words) out << w << '\n';
}

std::vector<RawRecord> merge_corpora(std::span<const RawRecord> factual,
                                     std::span<const RawRecord> positive,
                                     std::span<const RawRecord> negative) {
  std::vector<RawRecord> merged;
  merged.reserve(factual.size() + positive.size() + negative.size());
  for (const RawRecord& r : factual) {
    merged.push_back(r);
    merged.back().label = Sentiment::kNeutral;
  }
  for (const RawRecord& r : positive) {
    merged.push_back(r);
    merged.back().label = Sentiment::kPositive;
  }
  for (const RawRecord& r : negative) {
    merged.push_back(r);
    merged.back().label = Sentiment::kNegative;
  }
  return merged;
}

SyntheticCorpusSpec SyntheticCorpusSpec::default_spec() {
  SyntheticCorpusSpec spec;
  spec.scenes = {
      {"dog", "sitting", "park"},       {"cat", "sleeping", "kitchen"},
      {"bird", "flying", "sky"},        {"horse", "grazing", "field"},
      {"boat", "floating", "harbor"},   {"train", "waiting", "station"},
      {"bus", "driving", "street"},     {"child", "playing", "playground"},
      {"man", "standing", "beach"},     {"woman", "walking", "market"},
      {"elephant", "bathing", "river"}, {"monkey", "climbing", "forest"},
      {"duck", "swimming", "pond"},     {"sheep", "resting", "meadow"},
      {"tiger", "prowling", "jungle"},  {"rabbit", "hopping", "garden"},
      {"bear", "fishing", "stream"},    {"goat", "standing", "hill"},
      {"deer", "grazing", "clearing"},  {"owl", "perching", "barn"},
  };
  spec.positive_adjectives = {"nice", "beautiful", "adorable", "wonderful",
                              "lovely", "happy", "amazing", "great"};
  spec.negative_adjectives = {"bad", "terrible", "ugly", "lonely",
                              "crappy", "scary", "sad", "awful"};
  return spec;
}

void SyntheticCorpusSpec::validate() const {
  if (scenes.empty()) throw std::invalid_argument("corpus spec: 'scenes' inventory is empty");
  if (positive_adjectives.empty())
    throw std::invalid_argument("corpus spec: 'positive_adjectives' inventory is empty");
  if (negative_adjectives.empty())
    throw std::invalid_argument("corpus spec: 'negative_adjectives' inventory is empty");
  for (const std::string& w : positive_adjectives)
    if (std::find(negative_adjectives.begin(), negative_adjectives.end(), w) !=
        negative_adjectives.end())
      throw std::invalid_argument("corpus spec: lexicons overlap on '" + w + "'");
  if (train_per_pair < 0 || val_per_pair < 0 || test_per_pair < 0)
    throw std::invalid_argument("corpus spec: negative per-pair count");
  if (noise_prob < 0.0 || noise_prob > 1.0)
    throw std::invalid_argument("corpus spec: 'noise_prob' must lie in [0, 1]");
  if (feature_dim != 0 && feature_dim < static_cast<int>(scenes.size()))
    throw std::invalid_argument("corpus spec: 'feature_dim' smaller than the scene count");
}

int SyntheticCorpusSpec::effective_feature_dim() const {
  return feature_dim > 0 ? feature_dim : static_cast<int>(scenes.size());
}

SyntheticCorpusSpec SyntheticCorpusSpec::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus spec " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("corpus spec: ") + e.what());
  }
  SyntheticCorpusSpec spec;
  spec.scenes.clear();
  if (!j.contains("scenes")) throw std::invalid_argument("corpus spec: missing 'scenes'");
  for (const json& js : j.at("scenes")) {
    Scene s;
    s.noun = js.at("noun").get<std::string>();
    s.verb = js.at("verb").get<std::string>();
    s.place = js.at("place").get<std::string>();
    spec.scenes.push_back(std::move(s));
  }
  if (!j.contains("positive_adjectives"))
    throw std::invalid_argument("corpus spec: missing 'positive_adjectives'");
  if (!j.contains("negative_adjectives"))
    throw std::invalid_argument("corpus spec: missing 'negative_adjectives'");
  spec.positive_adjectives = j.at("positive_adjectives").get<std::vector<std::string>>();
  spec.negative_adjectives = j.at("negative_adjectives").get<std::vector<std::string>>();
  spec.train_per_pair = j.value("train_per_pair", spec.train_per_pair);
  spec.val_per_pair = j.value("val_per_pair", spec.val_per_pair);
  spec.test_per_pair = j.value("test_per_pair", spec.test_per_pair);
  spec.noise_prob = j.value("noise_prob", spec.noise_prob);
  spec.seed = j.value("seed", spec.seed);
  spec.feature_dim = j.value("feature_dim", spec.feature_dim);
  spec.validate();
  return spec;
}

namespace {

// caption surface templates; {adj} collapses for neutral records
const char* kTemplates[][6] = {
    {"a", "{adj}", "{noun}", "{verb}", "in the", "{place}"},
    {"a", "{adj}", "{noun}", "{verb}", "near the", "{place}"},
    {"the", "{adj}", "{noun}", "{verb}", "in the", "{place}"},
    {"a", "{adj}", "{noun}", "{verb}", "at the", "{place}"},
    {"one", "{adj}", "{noun}", "{verb}", "by the", "{place}"},
};
constexpr int kNumTemplates = 5;

const char* kFillers[] = {"today", "outside", "quietly", "nearby"};
constexpr int kNumFillers = 4;

std::string render_caption(const Scene& scene, const std::string* adjective, int template_idx,
                           const std::string* filler) {
  std::string out;
  for (const char* piece : kTemplates[template_idx]) {
    std::string p(piece);
    if (p == "{adj}") {
      if (!adjective) continue;
      p = *adjective;
    } else if (p == "{noun}") {
      p = scene.noun;
    } else if (p == "{verb}") {
      p = scene.verb;
    } else if (p == "{place}") {
      p = scene.place;
    }
    if (!out.empty()) out += ' ';
    out += p;
  }
  if (filler) out += ' ' + *filler;
  return out;
}

}  // namespace

SyntheticCorpus generate_synthetic(const SyntheticCorpusSpec& spec) {
  spec.validate();
  const int n_scenes = static_cast<int>(spec.scenes.size());
  const int fdim = spec.effective_feature_dim();

  std::vector<Tensor> scene_features;
  scene_features.reserve(static_cast<size_t>(n_scenes));
  for (int s = 0; s < n_scenes; ++s) {
    Rng rng = Rng(spec.seed).fork(0x5eedULL + static_cast<uint64_t>(s));
    Tensor f({fdim});
    for (int i = 0; i < fdim; ++i) f[static_cast<size_t>(i)] = rng.uniform(-0.05, 0.05);
    f[static_cast<size_t>(s)] += 1.0;
    scene_features.push_back(std::move(f));
  }

  const Sentiment kLabels[] = {Sentiment::kNegative, Sentiment::kNeutral, Sentiment::kPositive};
  const int per_pair = spec.train_per_pair + spec.val_per_pair + spec.test_per_pair;

  SyntheticCorpus corpus;
  for (int s = 0; s < n_scenes; ++s) {
    for (Sentiment label : kLabels) {
      const std::vector<std::string>* lexicon = nullptr;
      if (label == Sentiment::kPositive) lexicon = &spec.positive_adjectives;
      if (label == Sentiment::kNegative) lexicon = &spec.negative_adjectives;
      for (int j = 0; j < per_pair; ++j) {
        Rng rng = Rng(spec.seed).fork(
            (static_cast<uint64_t>(s) * 3ULL + static_cast<uint64_t>(sentiment_index(label))) *
                1000003ULL +
            static_cast<uint64_t>(j));
        const std::string* adjective = nullptr;
        if (lexicon)
          adjective = &(*lexicon)[static_cast<size_t>((s + j) % static_cast<int>(lexicon->size()))];
        // fillers are neutral words, so label/adjective agreement survives noise
        const std::string* filler = nullptr;
        std::string filler_word;
        if (rng.next_double() < spec.noise_prob) {
          filler_word = kFillers[rng.next_index(kNumFillers)];
          filler = &filler_word;
        }

        RawRecord r;
        r.image_id = "scene" + std::string(s < 10 ? "0" : "") + std::to_string(s);
        r.caption = render_caption(spec.scenes[static_cast<size_t>(s)], adjective,
                                   j % kNumTemplates, filler);
        r.label = label;
        r.feature = scene_features[static_cast<size_t>(s)];

        if (j < spec.train_per_pair) {
          corpus.train.push_back(std::move(r));
        } else if (j < spec.train_per_pair + spec.val_per_pair) {
          corpus.val.push_back(std::move(r));
        } else {
          corpus.test.push_back(std::move(r));
        }
      }
    }
  }
  return corpus;
}

Tensor Batch::feature_row(int i) const {
  int fdim = features.dim(1);
  Tensor f({fdim});
  for (int k = 0; k < fdim; ++k) f[static_cast<size_t>(k)] = features.at2(i, k);
  return f;
}

std::vector<Batch> make_batches(std::span<const CaptionRecord> corpus, int batch_size,
                                uint64_t shuffle_seed) {
  if (batch_size < 1) throw std::invalid_argument("make_batches: batch_size must be >= 1");
  if (corpus.empty()) return {};
  std::vector<size_t> order(corpus.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(shuffle_seed);
  rng.shuffle(order);

  const int fdim = corpus[0].feature.dim(0);
  std::vector<Batch> batches;
  for (size_t start = 0; start < order.size(); start += static_cast<size_t>(batch_size)) {
    size_t end = std::min(order.size(), start + static_cast<size_t>(batch_size));
    Batch b;
    int n = static_cast<int>(end - start);
    b.features = Tensor({n, fdim});
    size_t max_len = 0;
    for (size_t k = start; k < end; ++k)
      max_len = std::max(max_len, corpus[order[k]].tokens.size());
    for (size_t k = start; k < end; ++k) {
      const CaptionRecord& r = corpus[order[k]];
      int row = static_cast<int>(k - start);
      if (r.feature.dim(0) != fdim)
        throw std::invalid_argument("make_batches: inconsistent feature dims");
      for (int c = 0; c < fdim; ++c) b.features.at2(row, c) = r.feature[static_cast<size_t>(c)];
      std::vector<int> padded = r.tokens;
      padded.resize(max_len, kPadId);
      b.tokens.push_back(std::move(padded));
      b.lengths.push_back(static_cast<int>(r.tokens.size()));
      b.labels.push_back(r.label);
    }
    batches.push_back(std::move(b));
  }
  return batches;
}

}  // namespace sentigen
