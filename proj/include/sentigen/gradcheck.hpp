#pragma once

#include <string>

#include "sentigen/corpus.hpp"
#include "sentigen/model.hpp"

namespace sentigen {

// Element error is |analytic - numeric| / (kAbsFloor/kRelTol + scale), so an
// element passes the kRelTol bound exactly when
// |analytic - numeric| <= kAbsFloor + kRelTol * scale. Central differences in
// 64-bit carry ~1e-11 of roundoff noise, which the absolute floor absorbs for
// near-zero gradients while real defects still surface as O(1) errors.
constexpr double kGradRelTol = 1e-5;
constexpr double kGradAbsFloor = 1e-8;

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  size_t worst_index = 0;
  size_t n_checked = 0;

  bool pass(double tolerance = kGradRelTol) const { return max_rel_err < tolerance; }
};

// Compares the backward pass of the full training objective against central
// finite differences (loss recomputed by forward evaluation only) for every
// element of every parameter.
GradCheckReport gradcheck_model(const ModelParams& params, const CaptionRecord& record,
                                double lambda, double eps = 1e-5);

// Random record for a model: <bos>, n_words drawn from the open vocabulary,
// <eos>, and a uniform feature vector.
CaptionRecord make_random_record(const ModelConfig& config, uint64_t seed, int n_words);

}  // namespace sentigen
