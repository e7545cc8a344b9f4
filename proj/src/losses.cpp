#include "sentigen/losses.hpp"

#include <stdexcept>

namespace sentigen {

Var mean_of(Tape& tape, std::span<const Var> scalars) {
  if (scalars.empty()) throw std::invalid_argument("mean_of: empty sequence");
  Var acc = scalars[0];
  for (size_t i = 1; i < scalars.size(); ++i) acc = tape.add(acc, scalars[i]);
  return tape.scale(acc, 1.0 / static_cast<double>(scalars.size()));
}

Var classifier_logits(Tape& tape, const SentimentClassifierVars& clf, Var state) {
  Var hidden = tape.tanh(tape.add(tape.matmul(clf.W1, state), clf.b1));
  return tape.add(tape.matmul(clf.W2, hidden), clf.b2);
}

Var word_loss(Tape& tape, std::span<const Var> logits, std::span<const int> golds) {
  if (logits.size() != golds.size())
    throw std::invalid_argument("word_loss: " + std::to_string(logits.size()) + " logit rows vs " +
                                std::to_string(golds.size()) + " gold tokens");
  std::vector<Var> steps;
  steps.reserve(golds.size());
  for (size_t t = 0; t < golds.size(); ++t) {
    if (golds[t] == kPadId) continue;
    steps.push_back(tape.softmax_cross_entropy(logits[t], golds[t]));
  }
  if (steps.empty()) throw std::invalid_argument("word_loss: all positions are padding");
  return mean_of(tape, steps);
}

Var stepwise_sentiment_loss(Tape& tape, const SentimentClassifierVars& clf,
                            std::span<const StepVars> states, Sentiment label) {
  if (states.empty()) throw std::invalid_argument("stepwise_sentiment_loss: empty state sequence");
  std::vector<Var> steps;
  steps.reserve(states.size());
  for (const StepVars& st : states)
    steps.push_back(
        tape.softmax_cross_entropy(classifier_logits(tape, clf, st.h), sentiment_index(label)));
  return mean_of(tape, steps);
}

Var terminal_sentiment_loss(Tape& tape, const SentimentClassifierVars& clf, Var final_s,
                            Sentiment label) {
  return tape.softmax_cross_entropy(classifier_logits(tape, clf, final_s),
                                    sentiment_index(label));
}

TotalLossVars total_loss(Tape& tape, const ModelVars& m, const ForwardResult& fwd,
                         std::span<const int> tokens, Sentiment label, double lambda) {
  std::span<const int> golds = tokens.subspan(1);  // predictions start after <bos>
  TotalLossVars out;
  out.word = word_loss(tape, fwd.logits, golds);
  switch (m.config->variant) {
    case Variant::kBaseline:
      out.total = out.word;
      break;
    case Variant::kDirect:
      out.sentiment = stepwise_sentiment_loss(tape, m.clf, fwd.states, label);
      out.total = tape.add(out.word, tape.scale(*out.sentiment, lambda));
      break;
    case Variant::kFlow: {
      if (fwd.states.empty() || !fwd.states.back().s)
        throw std::invalid_argument("total_loss: flow variant requires a final sentiment state");
      out.sentiment = terminal_sentiment_loss(tape, m.clf, *fwd.states.back().s, label);
      out.total = tape.add(out.word, tape.scale(*out.sentiment, lambda));
      break;
    }
  }
  return out;
}

LossBreakdown read_breakdown(const Tape& tape, const TotalLossVars& vars, double lambda) {
  LossBreakdown b;
  b.lambda = lambda;
  b.word_loss = tape.value(vars.word)[0];
  b.sentiment_loss = vars.sentiment ? tape.value(*vars.sentiment)[0] : 0.0;
  b.total = tape.value(vars.total)[0];
  return b;
}

}  // namespace sentigen
