#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "sentigen/model.hpp"

namespace sentigen {

// Raw state values carried between decode steps.
struct DecodeState {
  Tensor h, c;
  std::optional<Tensor> s;
};

// A partial or complete caption. `tokens` holds emitted words only (never
// <bos>/<eos>/<pad>); `score` is the cumulative negative log-probability of
// every emitted symbol including the terminating <eos> when finished is set.
struct Hypothesis {
  std::vector<int> tokens;
  double score = 0.0;
  DecodeState state;
  bool finished = false;
};

// State after consuming the projected image feature (before <bos>).
DecodeState decode_image_step(const ModelParams& params, const Tensor& feature, Sentiment label);

// One recurrent step: consumes `token`, returns the next state and the
// log-softmax over the vocabulary.
std::pair<DecodeState, Tensor> decode_token_step(const ModelParams& params,
                                                 const DecodeState& prev, int token,
                                                 Sentiment label);

// Breadth-limited best-first search keeping the beam_size lowest-score
// expansions per step. Finished hypotheses leave the beam for a completed
// pool; actives left at max_len are force-completed. Result is sorted by
// ascending score (ties by token sequence) and holds at most beam_size
// entries. Scores are raw cumulative -log p, no length normalization.
std::vector<Hypothesis> beam_search(const ModelParams& params, const Tensor& feature,
                                    Sentiment label, int beam_size, int max_len);

// argmax token per step until <eos> or max_len
std::vector<int> greedy_decode(const ModelParams& params, const Tensor& feature, Sentiment label,
                               int max_len);

struct FlipResult {
  Hypothesis original;
  Hypothesis flipped;
};

// Decodes once with `label` and once with the opposite polarity, everything
// else identical. Throws for the neutral label.
FlipResult generate_with_flip(const ModelParams& params, const Tensor& feature, Sentiment label,
                              int beam_size, int max_len);

}  // namespace sentigen
