#pragma once

#include <optional>
#include <span>

#include "sentigen/model.hpp"

namespace sentigen {

// Values of the training objective for one record (or one batch mean).
// total is always word_loss + lambda * sentiment_loss, computed in that
// exact expression shape so the identity holds at the bit level.
struct LossBreakdown {
  double word_loss = 0.0;
  double sentiment_loss = 0.0;
  double total = 0.0;
  double lambda = 1.0;
};

// Tape handles for the same quantities, for backprop composition.
struct TotalLossVars {
  Var word;
  std::optional<Var> sentiment;
  Var total;
};

// Mean of scalar tape values. Throws on an empty sequence.
Var mean_of(Tape& tape, std::span<const Var> scalars);

// MLP head: W2 * tanh(W1 * state + b1) + b2
Var classifier_logits(Tape& tape, const SentimentClassifierVars& clf, Var state);

// Mean over gold tokens of -log softmax(logits_t)[gold_t]; <pad> positions
// are skipped. golds run from the token after <bos> through <eos>.
Var word_loss(Tape& tape, std::span<const Var> logits, std::span<const int> golds);

// Mean over all steps of -log p(label | h_t).
Var stepwise_sentiment_loss(Tape& tape, const SentimentClassifierVars& clf,
                            std::span<const StepVars> states, Sentiment label);

// -log p(label | s_final), classifier applied to the sentiment cell state.
Var terminal_sentiment_loss(Tape& tape, const SentimentClassifierVars& clf, Var final_s,
                            Sentiment label);

// Variant dispatch: BASELINE word only, DIRECT word + lambda*stepwise,
// FLOW word + lambda*terminal.
TotalLossVars total_loss(Tape& tape, const ModelVars& m, const ForwardResult& fwd,
                         std::span<const int> tokens, Sentiment label, double lambda);

LossBreakdown read_breakdown(const Tape& tape, const TotalLossVars& vars, double lambda);

}  // namespace sentigen
