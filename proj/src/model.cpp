#include "sentigen/model.hpp"

#include <stdexcept>

namespace sentigen {

Sentiment sentiment_flip(Sentiment s) {
  switch (s) {
    case Sentiment::kNegative: return Sentiment::kPositive;
    case Sentiment::kPositive: return Sentiment::kNegative;
    case Sentiment::kNeutral: break;
  }
  throw std::invalid_argument("flip is undefined for the neutral label");
}

std::string sentiment_name(Sentiment s) {
  switch (s) {
    case Sentiment::kNegative: return "neg";
    case Sentiment::kNeutral: return "neu";
    case Sentiment::kPositive: return "pos";
  }
  return "neu";
}

Sentiment sentiment_from_name(const std::string& name) {
  if (name == "neg") return Sentiment::kNegative;
  if (name == "neu") return Sentiment::kNeutral;
  if (name == "pos") return Sentiment::kPositive;
  throw std::invalid_argument("unknown sentiment label '" + name + "' (want neg|neu|pos)");
}

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::kBaseline: return "baseline";
    case Variant::kDirect: return "direct";
    case Variant::kFlow: return "flow";
  }
  return "baseline";
}

Variant variant_from_name(const std::string& name) {
  if (name == "baseline") return Variant::kBaseline;
  if (name == "direct") return Variant::kDirect;
  if (name == "flow") return Variant::kFlow;
  throw std::invalid_argument("unknown variant '" + name + "' (want baseline|direct|flow)");
}

namespace {

Tensor uniform_tensor(std::vector<int> shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-0.08, 0.08);
  return t;
}

}  // namespace

ModelParams ModelParams::init(const ModelConfig& config, uint64_t seed) {
  if (config.vocab_size <= 0 || config.embed_dim <= 0 || config.hidden_dim <= 0 ||
      config.feature_dim <= 0)
    throw std::invalid_argument("model config: vocab/embed/hidden/feature dims must be positive");
  Rng rng(seed);
  ModelParams p;
  p.config = config;
  const int v = config.vocab_size;
  const int e = config.embed_dim;
  const int h = config.hidden_dim;
  const int din = config.step_input_dim();

  p.embed = uniform_tensor({v, e}, rng);
  p.img_proj = uniform_tensor({e, config.feature_dim}, rng);
  p.lstm.W = uniform_tensor({4 * h, din}, rng);
  p.lstm.U = uniform_tensor({4 * h, h}, rng);
  p.lstm.b = Tensor({4 * h});
  for (int i = h; i < 2 * h; ++i) p.lstm.b[static_cast<size_t>(i)] = 1.0;  // forget-gate bias

  if (config.has_sentiment_cell()) {
    const int es = config.sentiment_embed_dim;
    p.scell.Wxs = uniform_tensor({h, din}, rng);
    p.scell.Whs = uniform_tensor({h, h}, rng);
    p.scell.bs = Tensor({h});
    p.scell.Ws = uniform_tensor({h, es}, rng);
    p.scell.b0 = Tensor({h});
    p.scell.E = uniform_tensor({kNumSentimentClasses, es}, rng);
  }
  if (config.has_classifier()) {
    const int m = config.classifier_width();
    p.clf.W1 = uniform_tensor({m, h}, rng);
    p.clf.b1 = Tensor({m});
    p.clf.W2 = uniform_tensor({kNumSentimentClasses, m}, rng);
    p.clf.b2 = Tensor({kNumSentimentClasses});
  }
  p.out_w = uniform_tensor({v, h}, rng);
  p.out_b = Tensor({v});
  return p;
}

void ModelParams::for_each(const std::function<void(const std::string&, Tensor&)>& fn) {
  fn("embed", embed);
  fn("img_proj", img_proj);
  fn("lstm.W", lstm.W);
  fn("lstm.U", lstm.U);
  fn("lstm.b", lstm.b);
  if (config.has_sentiment_cell()) {
    fn("scell.Wxs", scell.Wxs);
    fn("scell.Whs", scell.Whs);
    fn("scell.bs", scell.bs);
    fn("scell.Ws", scell.Ws);
    fn("scell.b0", scell.b0);
    fn("scell.E", scell.E);
  }
  if (config.has_classifier()) {
    fn("clf.W1", clf.W1);
    fn("clf.b1", clf.b1);
    fn("clf.W2", clf.W2);
    fn("clf.b2", clf.b2);
  }
  fn("out_w", out_w);
  fn("out_b", out_b);
}

void ModelParams::for_each(const std::function<void(const std::string&, const Tensor&)>& fn) const {
  const_cast<ModelParams*>(this)->for_each(
      [&](const std::string& name, Tensor& t) { fn(name, t); });
}

ModelVars bind_model(Tape& tape, const ModelParams& p,
                     std::vector<std::pair<std::string, Var>>* named) {
  ModelVars m;
  m.config = &p.config;
  auto bind_one = [&](const char* name, const Tensor& t) {
    Var v = tape.leaf(t);
    if (named) named->emplace_back(name, v);
    return v;
  };
  m.embed = bind_one("embed", p.embed);
  m.img_proj = bind_one("img_proj", p.img_proj);
  m.lstm = {bind_one("lstm.W", p.lstm.W), bind_one("lstm.U", p.lstm.U),
            bind_one("lstm.b", p.lstm.b)};
  if (p.config.has_sentiment_cell()) {
    m.scell = {bind_one("scell.Wxs", p.scell.Wxs), bind_one("scell.Whs", p.scell.Whs),
               bind_one("scell.bs", p.scell.bs),   bind_one("scell.Ws", p.scell.Ws),
               bind_one("scell.b0", p.scell.b0),   bind_one("scell.E", p.scell.E)};
  }
  if (p.config.has_classifier()) {
    m.clf = {bind_one("clf.W1", p.clf.W1), bind_one("clf.b1", p.clf.b1),
             bind_one("clf.W2", p.clf.W2), bind_one("clf.b2", p.clf.b2)};
  }
  m.out_w = bind_one("out_w", p.out_w);
  m.out_b = bind_one("out_b", p.out_b);
  return m;
}

namespace {

struct Gates {
  Var i, f, o, g;
  Var c_next;
};

Gates gate_block(Tape& tape, const LSTMVars& p, Var x, const StepVars& prev) {
  Var pre = tape.add(tape.add(tape.matmul(p.W, x), tape.matmul(p.U, prev.h)), p.b);
  const int h = tape.value(prev.h).dim(0);
  Gates gs;
  gs.i = tape.sigmoid(tape.slice(pre, 0, h));
  gs.f = tape.sigmoid(tape.slice(pre, h, h));
  gs.o = tape.sigmoid(tape.slice(pre, 2 * h, h));
  gs.g = tape.tanh(tape.slice(pre, 3 * h, h));
  gs.c_next = tape.add(tape.mul(gs.f, prev.c), tape.mul(gs.i, gs.g));
  return gs;
}

}  // namespace

StepVars lstm_step(Tape& tape, const LSTMVars& p, Var x, const StepVars& prev) {
  Gates gs = gate_block(tape, p, x, prev);
  StepVars next;
  next.c = gs.c_next;
  next.h = tape.mul(gs.o, tape.tanh(gs.c_next));
  return next;
}

Var direct_injection_input(Tape& tape, Var word_embedding, Sentiment label) {
  Var unit = tape.constant(Tensor::scalar(sentiment_scalar(label)));
  return tape.concat(word_embedding, unit, 0);
}

Var init_sentiment_state(Tape& tape, const SentimentCellVars& p, Sentiment label) {
  Var e = tape.lookup(p.E, sentiment_index(label));
  return tape.tanh(tape.add(tape.matmul(p.Ws, e), p.b0));
}

StepVars sentiment_flow_step(Tape& tape, const LSTMVars& p, const SentimentCellVars& sp, Var x,
                             const StepVars& prev) {
  if (!prev.s) throw std::invalid_argument("sentiment_flow_step: previous state has no sentiment cell");
  Gates gs = gate_block(tape, p, x, prev);
  Var cand = tape.tanh(
      tape.add(tape.add(tape.matmul(sp.Wxs, x), tape.matmul(sp.Whs, prev.h)), sp.bs));
  StepVars next;
  next.c = gs.c_next;
  next.s = tape.add(tape.mul(gs.f, *prev.s), tape.mul(gs.i, cand));
  next.h = tape.mul(gs.o, tape.add(tape.tanh(gs.c_next), tape.tanh(*next.s)));
  return next;
}

StepVars model_step(Tape& tape, const ModelVars& m, Var x, const StepVars& prev) {
  if (m.config->has_sentiment_cell()) return sentiment_flow_step(tape, m.lstm, m.scell, x, prev);
  return lstm_step(tape, m.lstm, x, prev);
}

ImageInit init_from_image(Tape& tape, const ModelVars& m, const Tensor& feature, Sentiment label) {
  const ModelConfig& cfg = *m.config;
  if (feature.rank() != 1 || feature.dim(0) != cfg.feature_dim)
    throw std::invalid_argument("init_from_image: feature shape " + feature.shape_string() +
                                " does not match feature_dim " + std::to_string(cfg.feature_dim));
  ImageInit init;
  Tensor zeros({cfg.hidden_dim});
  init.state.h = tape.constant(zeros);
  init.state.c = tape.constant(zeros);
  if (cfg.has_sentiment_cell()) init.state.s = init_sentiment_state(tape, m.scell, label);
  Var x = tape.matmul(m.img_proj, tape.constant(feature));
  if (cfg.variant == Variant::kDirect) x = direct_injection_input(tape, x, label);
  init.first_input = x;
  return init;
}

ForwardResult forward_sequence(Tape& tape, const ModelVars& m, const Tensor& feature,
                               std::span<const int> tokens, Sentiment label) {
  const ModelConfig& cfg = *m.config;
  if (tokens.size() < 2 || tokens.front() != kBosId || tokens.back() != kEosId)
    throw std::invalid_argument("forward_sequence: tokens must run <bos> ... <eos>");
  for (int t : tokens)
    if (t < 0 || t >= cfg.vocab_size)
      throw std::out_of_range("forward_sequence: unknown token id " + std::to_string(t));

  ImageInit init = init_from_image(tape, m, feature, label);
  StepVars state = model_step(tape, m, init.first_input, init.state);

  ForwardResult out;
  const size_t steps = tokens.size() - 1;  // <eos> is predicted, never consumed
  out.logits.reserve(steps);
  out.states.reserve(steps);
  for (size_t t = 0; t < steps; ++t) {
    Var x = tape.lookup(m.embed, tokens[t]);
    if (cfg.variant == Variant::kDirect) x = direct_injection_input(tape, x, label);
    state = model_step(tape, m, x, state);
    out.states.push_back(state);
    out.logits.push_back(tape.add(tape.matmul(m.out_w, state.h), m.out_b));
  }
  return out;
}

}  // namespace sentigen
