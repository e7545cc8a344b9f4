#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "sentigen/corpus.hpp"
#include "sentigen/model.hpp"

namespace sentigen {

using TokenSeq = std::vector<std::string>;
using RefSet = std::vector<TokenSeq>;

// Corpus-level BLEU-n: modified n-gram precision clipped against the max
// reference count, geometric mean over orders 1..n, brevity penalty
// exp(1 - r/c) when c < r with r the closest reference length (ties to the
// shorter). No smoothing: a zero precision at any order zeroes the score.
double bleu(std::span<const TokenSeq> candidates, std::span<const RefSet> references, int n);

// beta^2 weighting of recall in the LCS F-measure.
constexpr double kRougeBetaSq = 1.2;

// Per-candidate LCS F-measure against the best reference, corpus mean.
double rouge_l(std::span<const TokenSeq> candidates, std::span<const RefSet> references,
               double beta_sq = kRougeBetaSq);

// One generated caption and the sentiment it was asked for.
struct SentimentRequest {
  TokenSeq tokens;
  Sentiment requested = Sentiment::kNeutral;
};

// Percentages over the pos/neg requests (neutral requests carry no target
// lexicon and are left out of both denominators).
struct SentimentStats {
  double total_pct = 0.0;    // captions containing any lexicon word
  double matched_pct = 0.0;  // captions containing a word of the requested polarity
  int considered = 0;
};

SentimentStats sentiment_stats(std::span<const SentimentRequest> requests,
                               std::span<const std::string> pos_lexicon,
                               std::span<const std::string> neg_lexicon);

struct EvalConfig {
  int beam_size = 5;
  int max_len = 20;
};

struct EvalReport {
  double bleu_n[4] = {0, 0, 0, 0};
  double rouge = 0.0;
  SentimentStats stats;          // requested labels
  SentimentStats stats_flipped;  // after flipping pos/neg requests
  int n_candidates = 0;
};

// Decodes every test record with its own label (and, for pos/neg records,
// the flipped label), then scores captions against the references grouped by
// (image_id, label).
EvalReport evaluate(const ModelParams& params, const Vocabulary& vocab,
                    std::span<const RawRecord> test, std::span<const std::string> pos_lexicon,
                    std::span<const std::string> neg_lexicon, const EvalConfig& config);

// metric = value lines
void print_report_kv(std::ostream& os, const EvalReport& report);
// benchmark-style tables
void print_report_tables(std::ostream& os, const EvalReport& report);

}  // namespace sentigen
