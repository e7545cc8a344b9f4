#include "sentigen/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sentigen {

namespace {

DecodeState snapshot(const Tape& tape, const StepVars& state) {
  DecodeState out;
  out.h = tape.value(state.h);
  out.c = tape.value(state.c);
  if (state.s) out.s = tape.value(*state.s);
  return out;
}

StepVars restore(Tape& tape, const DecodeState& state) {
  StepVars vars;
  vars.h = tape.constant(state.h);
  vars.c = tape.constant(state.c);
  if (state.s) vars.s = tape.constant(*state.s);
  return vars;
}

Tensor log_softmax(const Tensor& logits) {
  double mx = logits[0];
  for (size_t i = 1; i < logits.size(); ++i) mx = std::max(mx, logits[i]);
  double denom = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) denom += std::exp(logits[i] - mx);
  const double lse = mx + std::log(denom);
  Tensor out(logits.shape());
  for (size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
  return out;
}

// ranking order: score, then token sequence, finished first on a full tie
bool hyp_less(const Hypothesis& a, const Hypothesis& b) {
  if (a.score != b.score) return a.score < b.score;
  if (a.tokens != b.tokens) return a.tokens < b.tokens;
  return a.finished && !b.finished;
}

}  // namespace

DecodeState decode_image_step(const ModelParams& params, const Tensor& feature, Sentiment label) {
  Tape tape;
  ModelVars m = bind_model(tape, params);
  ImageInit init = init_from_image(tape, m, feature, label);
  StepVars state = model_step(tape, m, init.first_input, init.state);
  return snapshot(tape, state);
}

std::pair<DecodeState, Tensor> decode_token_step(const ModelParams& params,
                                                 const DecodeState& prev, int token,
                                                 Sentiment label) {
  if (token < 0 || token >= params.config.vocab_size)
    throw std::out_of_range("decode_token_step: unknown token id " + std::to_string(token));
  Tape tape;
  ModelVars m = bind_model(tape, params);
  Var x = tape.lookup(m.embed, token);
  if (params.config.variant == Variant::kDirect) x = direct_injection_input(tape, x, label);
  StepVars state = model_step(tape, m, x, restore(tape, prev));
  Var logits = tape.add(tape.matmul(m.out_w, state.h), m.out_b);
  return {snapshot(tape, state), log_softmax(tape.value(logits))};
}

std::vector<Hypothesis> beam_search(const ModelParams& params, const Tensor& feature,
                                    Sentiment label, int beam_size, int max_len) {
  if (beam_size < 1) throw std::invalid_argument("beam_search: beam_size must be >= 1");
  if (max_len < 1) throw std::invalid_argument("beam_search: max_len must be >= 1");
  const int vocab = params.config.vocab_size;

  Hypothesis root;
  root.state = decode_image_step(params, feature, label);
  std::vector<Hypothesis> active{std::move(root)};
  std::vector<Hypothesis> pool;

  for (int step = 0; step < max_len && !active.empty(); ++step) {
    std::vector<Hypothesis> expansions;
    expansions.reserve(active.size() * static_cast<size_t>(vocab));
    for (const Hypothesis& hyp : active) {
      const int input = hyp.tokens.empty() ? kBosId : hyp.tokens.back();
      auto [next_state, logprobs] = decode_token_step(params, hyp.state, input, label);
      for (int tok = 0; tok < vocab; ++tok) {
        if (tok == kPadId || tok == kBosId) continue;  // never emitted
        Hypothesis cand;
        cand.tokens = hyp.tokens;
        cand.score = hyp.score - logprobs[static_cast<size_t>(tok)];
        if (tok == kEosId) {
          cand.finished = true;
        } else {
          cand.tokens.push_back(tok);
          cand.state = next_state;
        }
        expansions.push_back(std::move(cand));
      }
    }
    // finished and unfinished compete for the beam_size slots; selected
    // finished candidates retire into the pool
    std::sort(expansions.begin(), expansions.end(), hyp_less);
    if (static_cast<int>(expansions.size()) > beam_size) expansions.resize(static_cast<size_t>(beam_size));
    active.clear();
    for (Hypothesis& cand : expansions) {
      if (cand.finished)
        pool.push_back(std::move(cand));
      else
        active.push_back(std::move(cand));
    }
  }
  // hit the length limit: force-complete whatever is still alive
  for (Hypothesis& hyp : active) pool.push_back(std::move(hyp));

  std::sort(pool.begin(), pool.end(), hyp_less);
  if (static_cast<int>(pool.size()) > beam_size) pool.resize(static_cast<size_t>(beam_size));
  return pool;
}

std::vector<int> greedy_decode(const ModelParams& params, const Tensor& feature, Sentiment label,
                               int max_len) {
  if (max_len < 1) throw std::invalid_argument("greedy_decode: max_len must be >= 1");
  DecodeState state = decode_image_step(params, feature, label);
  std::vector<int> tokens;
  int input = kBosId;
  for (int step = 0; step < max_len; ++step) {
    auto [next_state, logprobs] = decode_token_step(params, state, input, label);
    int best = -1;
    for (int tok = 0; tok < params.config.vocab_size; ++tok) {
      if (tok == kPadId || tok == kBosId) continue;
      if (best < 0 || logprobs[static_cast<size_t>(tok)] > logprobs[static_cast<size_t>(best)])
        best = tok;
    }
    if (best == kEosId) break;
    tokens.push_back(best);
    state = std::move(next_state);
    input = best;
  }
  return tokens;
}

FlipResult generate_with_flip(const ModelParams& params, const Tensor& feature, Sentiment label,
                              int beam_size, int max_len) {
  Sentiment flipped = sentiment_flip(label);  // throws on NEU
  std::vector<Hypothesis> a = beam_search(params, feature, label, beam_size, max_len);
  std::vector<Hypothesis> b = beam_search(params, feature, flipped, beam_size, max_len);
  if (a.empty() || b.empty()) throw std::logic_error("generate_with_flip: empty beam result");
  return {a.front(), b.front()};
}

}  // namespace sentigen
