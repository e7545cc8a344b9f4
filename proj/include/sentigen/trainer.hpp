#pragma once

#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sentigen/corpus.hpp"
#include "sentigen/losses.hpp"
#include "sentigen/model.hpp"

namespace sentigen {

using GradMap = std::map<std::string, Tensor>;

// First/second moment accumulators, keyed like the parameters.
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int64_t step = 0;
  std::map<std::string, Tensor> m, v;
};

// theta <- theta - lr * m_hat / (sqrt(v_hat) + eps), bias-corrected.
// Moment tensors are created lazily on the first update.
void adam_update(ModelParams& params, const GradMap& grads, AdamState& state, double lr);

// Scales all gradients by threshold/norm when the global norm exceeds the
// threshold; direction is preserved. Returns the pre-clip norm.
double clip_global_norm(GradMap& grads, double threshold);

struct TrainConfig {
  double learning_rate = 0.001;
  int batch_size = 16;
  int epochs = 30;
  double lambda = 1.0;  // sentiment-loss weight
  uint64_t seed = 1;
  double clip_norm = 5.0;
};

struct EpochStats {
  int epoch = 0;  // 1-based
  double word_loss = 0.0;
  double sentiment_loss = 0.0;
  double total = 0.0;
};

// Raised when a batch produces a non-finite loss.
class TrainDivergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Mini-batch training over the corpus: shuffle, batch, forward, mean batch
// loss, backward, clip, Adam. Fully reproducible given config.seed.
std::vector<EpochStats> train(ModelParams& params, std::span<const CaptionRecord> corpus,
                              const TrainConfig& config,
                              const std::function<void(const EpochStats&)>& on_epoch = nullptr);

// Forward/backward for one batch; returns the batch-mean breakdown and fills
// `grads` with d(batch total)/d(parameter). Shared by train() and the
// finite-difference checker.
LossBreakdown batch_loss_and_grads(const ModelParams& params, const Batch& batch, double lambda,
                                   GradMap* grads);

}  // namespace sentigen
