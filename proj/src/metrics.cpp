#include "sentigen/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include "sentigen/decoder.hpp"

namespace sentigen {

namespace {

// n-gram keys as '\x1f'-joined tokens
std::unordered_map<std::string, int> ngram_counts(const TokenSeq& tokens, int n) {
  std::unordered_map<std::string, int> counts;
  if (static_cast<int>(tokens.size()) < n) return counts;
  for (size_t i = 0; i + static_cast<size_t>(n) <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (int k = 1; k < n; ++k) {
      key += '\x1f';
      key += tokens[i + static_cast<size_t>(k)];
    }
    ++counts[key];
  }
  return counts;
}

void check_pairing(std::span<const TokenSeq> candidates, std::span<const RefSet> references) {
  if (candidates.empty()) throw std::invalid_argument("metrics: empty candidate corpus");
  if (candidates.size() != references.size())
    throw std::invalid_argument("metrics: candidate/reference count mismatch");
  for (const RefSet& refs : references)
    if (refs.empty()) throw std::invalid_argument("metrics: record without references");
}

size_t lcs_length(const TokenSeq& a, const TokenSeq& b) {
  const size_t n = a.size(), m = b.size();
  if (n == 0 || m == 0) return 0;
  std::vector<size_t> prev(m + 1, 0), cur(m + 1, 0);
  for (size_t i = 1; i <= n; ++i) {
    for (size_t j = 1; j <= m; ++j) {
      if (a[i - 1] == b[j - 1])
        cur[j] = prev[j - 1] + 1;
      else
        cur[j] = std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

}  // namespace

double bleu(std::span<const TokenSeq> candidates, std::span<const RefSet> references, int n) {
  if (n < 1 || n > 4) throw std::invalid_argument("bleu: order must lie in 1..4");
  check_pairing(candidates, references);

  std::vector<long long> matched(static_cast<size_t>(n), 0);
  std::vector<long long> total(static_cast<size_t>(n), 0);
  long long cand_len = 0, ref_len = 0;

  for (size_t i = 0; i < candidates.size(); ++i) {
    const TokenSeq& cand = candidates[i];
    const RefSet& refs = references[i];
    cand_len += static_cast<long long>(cand.size());

    // closest reference length, ties to the shorter
    long long best_ref = static_cast<long long>(refs[0].size());
    for (const TokenSeq& ref : refs) {
      long long len = static_cast<long long>(ref.size());
      long long cur_diff = std::llabs(best_ref - static_cast<long long>(cand.size()));
      long long new_diff = std::llabs(len - static_cast<long long>(cand.size()));
      if (new_diff < cur_diff || (new_diff == cur_diff && len < best_ref)) best_ref = len;
    }
    ref_len += best_ref;

    for (int order = 1; order <= n; ++order) {
      auto cand_counts = ngram_counts(cand, order);
      std::unordered_map<std::string, int> max_ref_counts;
      for (const TokenSeq& ref : refs)
        for (const auto& [gram, count] : ngram_counts(ref, order)) {
          int& slot = max_ref_counts[gram];
          slot = std::max(slot, count);
        }
      for (const auto& [gram, count] : cand_counts) {
        auto it = max_ref_counts.find(gram);
        if (it != max_ref_counts.end())
          matched[static_cast<size_t>(order - 1)] += std::min(count, it->second);
      }
      long long positions = static_cast<long long>(cand.size()) - order + 1;
      if (positions > 0) total[static_cast<size_t>(order - 1)] += positions;
    }
  }

  double log_precision_sum = 0.0;
  for (int order = 0; order < n; ++order) {
    if (total[static_cast<size_t>(order)] == 0 || matched[static_cast<size_t>(order)] == 0)
      return 0.0;
    log_precision_sum += std::log(static_cast<double>(matched[static_cast<size_t>(order)]) /
                                  static_cast<double>(total[static_cast<size_t>(order)]));
  }
  if (cand_len == 0) return 0.0;
  double bp = 1.0;
  if (cand_len < ref_len)
    bp = std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(cand_len));
  return bp * std::exp(log_precision_sum / n);
}

double rouge_l(std::span<const TokenSeq> candidates, std::span<const RefSet> references,
               double beta_sq) {
  check_pairing(candidates, references);
  double sum = 0.0;
  for (size_t i = 0; i < candidates.size(); ++i) {
    const TokenSeq& cand = candidates[i];
    double best_f = 0.0;
    for (const TokenSeq& ref : references[i]) {
      size_t lcs = lcs_length(cand, ref);
      if (lcs == 0 || cand.empty() || ref.empty()) continue;
      double p = static_cast<double>(lcs) / static_cast<double>(cand.size());
      double r = static_cast<double>(lcs) / static_cast<double>(ref.size());
      double f = (1.0 + beta_sq) * p * r / (r + beta_sq * p);
      best_f = std::max(best_f, f);
    }
    sum += best_f;
  }
  return sum / static_cast<double>(candidates.size());
}

SentimentStats sentiment_stats(std::span<const SentimentRequest> requests,
                               std::span<const std::string> pos_lexicon,
                               std::span<const std::string> neg_lexicon) {
  std::set<std::string> pos(pos_lexicon.begin(), pos_lexicon.end());
  std::set<std::string> neg(neg_lexicon.begin(), neg_lexicon.end());
  for (const std::string& w : pos)
    if (neg.count(w))
      throw std::invalid_argument("sentiment_stats: lexicons overlap on '" + w + "'");

  int considered = 0, total = 0, matched = 0;
  for (const SentimentRequest& req : requests) {
    if (req.requested == Sentiment::kNeutral) continue;
    ++considered;
    bool any = false, match = false;
    const std::set<std::string>& want = req.requested == Sentiment::kPositive ? pos : neg;
    for (const std::string& tok : req.tokens) {
      bool in_pos = pos.count(tok) > 0;
      bool in_neg = neg.count(tok) > 0;
      if (in_pos || in_neg) any = true;
      if (want.count(tok)) match = true;
    }
    if (any) ++total;
    if (match) ++matched;
  }
  SentimentStats stats;
  stats.considered = considered;
  if (considered > 0) {
    stats.total_pct = 100.0 * total / considered;
    stats.matched_pct = 100.0 * matched / considered;
  }
  return stats;
}

EvalReport evaluate(const ModelParams& params, const Vocabulary& vocab,
                    std::span<const RawRecord> test, std::span<const std::string> pos_lexicon,
                    std::span<const std::string> neg_lexicon, const EvalConfig& config) {
  if (test.empty()) throw std::invalid_argument("evaluate: empty test corpus");

  // references grouped by (image_id, label)
  std::map<std::string, RefSet> ref_groups;
  for (const RawRecord& r : test)
    ref_groups[r.image_id + '\x1f' + sentiment_name(r.label)].push_back(tokenize(r.caption));

  std::vector<TokenSeq> candidates;
  std::vector<RefSet> references;
  std::vector<SentimentRequest> requests, flipped_requests;

  auto words_of = [&](const Hypothesis& hyp) {
    TokenSeq words;
    words.reserve(hyp.tokens.size());
    for (int id : hyp.tokens) words.push_back(vocab.token(id));
    return words;
  };

  for (const RawRecord& r : test) {
    TokenSeq cand_words;
    if (r.label == Sentiment::kNeutral) {
      std::vector<Hypothesis> ranked =
          beam_search(params, r.feature, r.label, config.beam_size, config.max_len);
      cand_words = words_of(ranked.front());
    } else {
      FlipResult flip =
          generate_with_flip(params, r.feature, r.label, config.beam_size, config.max_len);
      cand_words = words_of(flip.original);
      requests.push_back({cand_words, r.label});
      flipped_requests.push_back({words_of(flip.flipped), sentiment_flip(r.label)});
    }
    candidates.push_back(cand_words);
    references.push_back(ref_groups.at(r.image_id + '\x1f' + sentiment_name(r.label)));
  }

  EvalReport report;
  report.n_candidates = static_cast<int>(candidates.size());
  for (int n = 1; n <= 4; ++n)
    report.bleu_n[n - 1] = bleu(candidates, references, n);
  report.rouge = rouge_l(candidates, references);
  report.stats = sentiment_stats(requests, pos_lexicon, neg_lexicon);
  report.stats_flipped = sentiment_stats(flipped_requests, pos_lexicon, neg_lexicon);
  return report;
}

void print_report_kv(std::ostream& os, const EvalReport& report) {
  os << std::fixed << std::setprecision(6);
  for (int n = 0; n < 4; ++n) os << "bleu" << n + 1 << " = " << report.bleu_n[n] << "\n";
  os << "rouge_l = " << report.rouge << "\n";
  os << std::setprecision(2);
  os << "total_pct = " << report.stats.total_pct << "\n";
  os << "matched_pct = " << report.stats.matched_pct << "\n";
  os << "total_flipped_pct = " << report.stats_flipped.total_pct << "\n";
  os << "matched_flipped_pct = " << report.stats_flipped.matched_pct << "\n";
  os << "candidates = " << report.n_candidates << "\n";
  os << "sentiment_requests = " << report.stats.considered << "\n";
}

void print_report_tables(std::ostream& os, const EvalReport& report) {
  os << std::fixed << std::setprecision(3);
  os << "  B-1     B-2     B-3     B-4     ROUGE-L\n";
  for (int n = 0; n < 4; ++n) os << "  " << report.bleu_n[n] << " ";
  os << "  " << report.rouge << "\n\n";
  os << std::setprecision(1);
  os << "  Total    Matched  Total(F)  Matched(F)\n";
  os << "  " << std::setw(5) << report.stats.total_pct << "%   " << std::setw(5)
     << report.stats.matched_pct << "%   " << std::setw(5) << report.stats_flipped.total_pct
     << "%    " << std::setw(5) << report.stats_flipped.matched_pct << "%\n";
}

}  // namespace sentigen
