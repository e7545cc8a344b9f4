#include "sentigen/trainer.hpp"

#include <cmath>

namespace sentigen {

void adam_update(ModelParams& params, const GradMap& grads, AdamState& state, double lr) {
  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  params.for_each([&](const std::string& name, Tensor& theta) {
    auto git = grads.find(name);
    if (git == grads.end())
      throw std::invalid_argument("adam_update: no gradient for parameter '" + name + "'");
    const Tensor& g = git->second;
    if (!g.same_shape(theta))
      throw std::invalid_argument("adam_update: gradient shape mismatch for '" + name + "'");
    Tensor& m = state.m.try_emplace(name, Tensor(theta.shape())).first->second;
    Tensor& v = state.v.try_emplace(name, Tensor(theta.shape())).first->second;
    for (size_t i = 0; i < theta.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      theta[i] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  });
}

double clip_global_norm(GradMap& grads, double threshold) {
  double sq = 0.0;
  for (const auto& [name, g] : grads)
    for (size_t i = 0; i < g.size(); ++i) sq += g[i] * g[i];
  const double norm = std::sqrt(sq);
  if (threshold > 0.0 && norm > threshold) {
    const double scale = threshold / norm;
    for (auto& [name, g] : grads)
      for (size_t i = 0; i < g.size(); ++i) g[i] *= scale;
  }
  return norm;
}

LossBreakdown batch_loss_and_grads(const ModelParams& params, const Batch& batch, double lambda,
                                   GradMap* grads) {
  Tape tape;
  std::vector<std::pair<std::string, Var>> named;
  ModelVars m = bind_model(tape, params, grads ? &named : nullptr);

  std::vector<Var> word_terms, senti_terms;
  for (int r = 0; r < batch.size(); ++r) {
    std::span<const int> tokens(batch.tokens[static_cast<size_t>(r)].data(),
                                static_cast<size_t>(batch.lengths[static_cast<size_t>(r)]));
    ForwardResult fwd = forward_sequence(tape, m, batch.feature_row(r), tokens,
                                         batch.labels[static_cast<size_t>(r)]);
    TotalLossVars rec = total_loss(tape, m, fwd, tokens, batch.labels[static_cast<size_t>(r)],
                                   lambda);
    word_terms.push_back(rec.word);
    if (rec.sentiment) senti_terms.push_back(*rec.sentiment);
  }

  TotalLossVars batch_vars;
  batch_vars.word = mean_of(tape, word_terms);
  if (!senti_terms.empty()) {
    batch_vars.sentiment = mean_of(tape, senti_terms);
    batch_vars.total = tape.add(batch_vars.word, tape.scale(*batch_vars.sentiment, lambda));
  } else {
    batch_vars.total = batch_vars.word;
  }

  if (grads) {
    tape.backward(batch_vars.total);
    grads->clear();
    for (const auto& [name, var] : named) (*grads)[name] = tape.grad(var);
  }
  return read_breakdown(tape, batch_vars, lambda);
}

std::vector<EpochStats> train(ModelParams& params, std::span<const CaptionRecord> corpus,
                              const TrainConfig& config,
                              const std::function<void(const EpochStats&)>& on_epoch) {
  if (corpus.empty()) throw std::invalid_argument("train: empty corpus");
  if (config.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (config.learning_rate < 0.0) throw std::invalid_argument("train: negative learning rate");

  AdamState adam;
  std::vector<EpochStats> log;
  log.reserve(static_cast<size_t>(config.epochs));
  Rng seeder(config.seed);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const uint64_t shuffle_seed = seeder.fork(static_cast<uint64_t>(epoch)).next_u64();
    std::vector<Batch> batches = make_batches(corpus, config.batch_size, shuffle_seed);

    double word_sum = 0.0, senti_sum = 0.0;
    size_t n_records = 0;
    GradMap grads;
    for (size_t bi = 0; bi < batches.size(); ++bi) {
      const Batch& batch = batches[bi];
      LossBreakdown loss = batch_loss_and_grads(params, batch, config.lambda, &grads);
      if (!std::isfinite(loss.total))
        throw TrainDivergence("non-finite loss in epoch " + std::to_string(epoch) + ", batch " +
                              std::to_string(bi) + " of " + std::to_string(batches.size()));
      clip_global_norm(grads, config.clip_norm);
      adam_update(params, grads, adam, config.learning_rate);
      word_sum += loss.word_loss * batch.size();
      senti_sum += loss.sentiment_loss * batch.size();
      n_records += static_cast<size_t>(batch.size());
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.word_loss = word_sum / static_cast<double>(n_records);
    stats.sentiment_loss = senti_sum / static_cast<double>(n_records);
    stats.total = stats.word_loss + config.lambda * stats.sentiment_loss;
    log.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  return log;
}

}  // namespace sentigen
