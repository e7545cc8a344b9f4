#pragma once

#include <algorithm>
#include <functional>
#include <optional>
#include <span>
#include <string>

#include "sentigen/autodiff.hpp"
#include "sentigen/tensor.hpp"

namespace sentigen {

// Reserved vocabulary ids, fixed across every dataset and checkpoint.
constexpr int kPadId = 0;
constexpr int kBosId = 1;
constexpr int kEosId = 2;
constexpr int kUnkId = 3;
constexpr int kNumReservedTokens = 4;

// Ternary conditioning signal.
enum class Sentiment { kNegative, kNeutral, kPositive };

constexpr int kNumSentimentClasses = 3;

inline double sentiment_scalar(Sentiment s) {
  switch (s) {
    case Sentiment::kNegative: return -1.0;
    case Sentiment::kNeutral: return 0.0;
    case Sentiment::kPositive: return 1.0;
  }
  return 0.0;
}

inline int sentiment_index(Sentiment s) {
  switch (s) {
    case Sentiment::kNegative: return 0;
    case Sentiment::kNeutral: return 1;
    case Sentiment::kPositive: return 2;
  }
  return 1;
}

Sentiment sentiment_flip(Sentiment s);  // POS <-> NEG; throws on NEU
std::string sentiment_name(Sentiment s);
Sentiment sentiment_from_name(const std::string& name);

enum class Variant { kBaseline, kDirect, kFlow };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);

struct ModelConfig {
  Variant variant = Variant::kBaseline;
  int vocab_size = 0;
  int embed_dim = 256;
  int hidden_dim = 512;
  int sentiment_embed_dim = 16;
  int feature_dim = 0;
  int classifier_hidden = 0;  // 0 -> hidden_dim / 4

  // DIRECT widens every recurrent input by the sentiment unit.
  int step_input_dim() const {
    return embed_dim + (variant == Variant::kDirect ? 1 : 0);
  }
  bool has_sentiment_cell() const { return variant == Variant::kFlow; }
  bool has_classifier() const { return variant != Variant::kBaseline; }
  int classifier_width() const {
    return classifier_hidden > 0 ? classifier_hidden : std::max(1, hidden_dim / 4);
  }
};

// Stacked gate weights; rows are four contiguous blocks in order i, f, o, g.
struct LSTMParams {
  Tensor W;  // 4h x d_in
  Tensor U;  // 4h x h
  Tensor b;  // 4h
};

struct SentimentCellParams {
  Tensor Wxs;  // h x d_in
  Tensor Whs;  // h x h
  Tensor bs;   // h
  Tensor Ws;   // h x e_s
  Tensor b0;   // h
  Tensor E;    // 3 x e_s, one row per sentiment class
};

// Two-layer tanh MLP over a state vector, 3-way softmax head.
struct SentimentClassifierParams {
  Tensor W1;  // m x h
  Tensor b1;  // m
  Tensor W2;  // 3 x m
  Tensor b2;  // 3
};

struct ModelParams {
  ModelConfig config;
  Tensor embed;     // V x e
  Tensor img_proj;  // e x feature_dim
  LSTMParams lstm;
  SentimentCellParams scell;       // FLOW only
  SentimentClassifierParams clf;   // DIRECT and FLOW
  Tensor out_w;  // V x h
  Tensor out_b;  // V

  // uniform(-0.08, 0.08) weights, zero biases, forget-gate bias +1
  static ModelParams init(const ModelConfig& config, uint64_t seed);

  // Visits every live parameter in a fixed order (drives the optimizer,
  // gradient collection and the checkpoint layout).
  void for_each(const std::function<void(const std::string&, Tensor&)>& fn);
  void for_each(const std::function<void(const std::string&, const Tensor&)>& fn) const;
};

// Tape bindings for one forward pass.
struct LSTMVars {
  Var W, U, b;
};
struct SentimentCellVars {
  Var Wxs, Whs, bs, Ws, b0, E;
};
struct SentimentClassifierVars {
  Var W1, b1, W2, b2;
};
struct ModelVars {
  const ModelConfig* config = nullptr;
  Var embed, img_proj;
  LSTMVars lstm;
  SentimentCellVars scell;
  SentimentClassifierVars clf;
  Var out_w, out_b;
};

// Leafs every parameter onto the tape. When `named` is given it receives
// (parameter name, leaf) pairs in for_each order, for gradient collection.
ModelVars bind_model(Tape& tape, const ModelParams& params,
                     std::vector<std::pair<std::string, Var>>* named = nullptr);

// Recurrent state; s is present only for the FLOW variant.
struct StepVars {
  Var h, c;
  std::optional<Var> s;
};

StepVars lstm_step(Tape& tape, const LSTMVars& p, Var x, const StepVars& prev);

// Appends label scalar as a constant final coordinate; no gradient into it.
Var direct_injection_input(Tape& tape, Var word_embedding, Sentiment label);

// s0 = tanh(Ws * E[label] + b0)
Var init_sentiment_state(Tape& tape, const SentimentCellVars& p, Sentiment label);

StepVars sentiment_flow_step(Tape& tape, const LSTMVars& p, const SentimentCellVars& sp, Var x,
                             const StepVars& prev);

// Variant dispatch over the two step kinds.
StepVars model_step(Tape& tape, const ModelVars& m, Var x, const StepVars& prev);

struct ImageInit {
  StepVars state;   // h0 = c0 = 0, s0 from the label for FLOW
  Var first_input;  // projected feature, consumed before <bos>
};

ImageInit init_from_image(Tape& tape, const ModelVars& m, const Tensor& feature, Sentiment label);

struct ForwardResult {
  std::vector<Var> logits;       // one per prediction step
  std::vector<StepVars> states;  // state that produced each logit
};

// Teacher-forced pass over [<bos>, w1..wn, <eos>]: the image step is consumed
// first, then the embedding of token t predicts token t+1.
ForwardResult forward_sequence(Tape& tape, const ModelVars& m, const Tensor& feature,
                               std::span<const int> tokens, Sentiment label);

}  // namespace sentigen
