#include "sentigen/gradcheck.hpp"

#include <cmath>

#include "sentigen/trainer.hpp"

namespace sentigen {

namespace {

Batch single_record_batch(const CaptionRecord& record) {
  Batch b;
  const int fdim = record.feature.dim(0);
  b.features = Tensor({1, fdim});
  for (int i = 0; i < fdim; ++i) b.features.at2(0, i) = record.feature[static_cast<size_t>(i)];
  b.tokens.push_back(record.tokens);
  b.lengths.push_back(static_cast<int>(record.tokens.size()));
  b.labels.push_back(record.label);
  return b;
}

}  // namespace

GradCheckReport gradcheck_model(const ModelParams& params, const CaptionRecord& record,
                                double lambda, double eps) {
  Batch batch = single_record_batch(record);

  GradMap analytic;
  batch_loss_and_grads(params, batch, lambda, &analytic);

  ModelParams probe = params;
  GradCheckReport report;
  probe.for_each([&](const std::string& name, Tensor& theta) {
    const Tensor& grad = analytic.at(name);
    for (size_t i = 0; i < theta.size(); ++i) {
      const double saved = theta[i];
      theta[i] = saved + eps;
      const double up = batch_loss_and_grads(probe, batch, lambda, nullptr).total;
      theta[i] = saved - eps;
      const double down = batch_loss_and_grads(probe, batch, lambda, nullptr).total;
      theta[i] = saved;

      const double numeric = (up - down) / (2.0 * eps);
      const double denom =
          kGradAbsFloor / kGradRelTol + std::max(std::abs(numeric), std::abs(grad[i]));
      const double rel = std::abs(numeric - grad[i]) / denom;
      ++report.n_checked;
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_param = name;
        report.worst_index = i;
      }
    }
  });
  return report;
}

CaptionRecord make_random_record(const ModelConfig& config, uint64_t seed, int n_words) {
  if (config.vocab_size <= kNumReservedTokens)
    throw std::invalid_argument("make_random_record: vocabulary has no open tokens");
  Rng rng(seed);
  CaptionRecord record;
  record.image_id = "random" + std::to_string(seed);
  record.feature = Tensor({config.feature_dim});
  for (size_t i = 0; i < record.feature.size(); ++i) record.feature[i] = rng.uniform(-1.0, 1.0);
  record.tokens.push_back(kBosId);
  for (int i = 0; i < n_words; ++i)
    record.tokens.push_back(
        kNumReservedTokens +
        static_cast<int>(rng.next_index(static_cast<size_t>(config.vocab_size - kNumReservedTokens))));
  record.tokens.push_back(kEosId);
  const Sentiment labels[] = {Sentiment::kNegative, Sentiment::kNeutral, Sentiment::kPositive};
  record.label = labels[rng.next_index(3)];
  return record;
}

}  // namespace sentigen
