#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "oracle_metrics.hpp"
#include "sentigen/metrics.hpp"

using namespace sentigen;

namespace {

TokenSeq words(const std::string& text) { return tokenize(text); }

// varied lengths, repeats, multiple references, brevity-penalty cases
struct Fixture {
  std::vector<TokenSeq> candidates;
  std::vector<RefSet> references;
};

Fixture twenty_pairs() {
  Fixture f;
  auto add = [&](const std::string& cand, std::vector<std::string> refs) {
    f.candidates.push_back(words(cand));
    RefSet rs;
    for (const std::string& r : refs) rs.push_back(words(r));
    f.references.push_back(rs);
  };
  add("a dog sitting in the park", {"a dog sitting in the park"});
  add("a dog in the park", {"a dog sitting in the park", "the dog sits in a park"});
  add("the the the", {"the cat"});
  add("a nice cat sleeping on a mat", {"a cat sleeping on the mat"});
  add("one bird flying high in the sky", {"a bird flying in the sky"});
  add("a b c d e", {"a b c d e f g"});
  add("x y z", {"totally different words here"});
  add("the quick brown fox jumps", {"the quick brown fox jumps over the lazy dog"});
  add("a man rides a horse", {"a man riding a horse", "a person rides a horse"});
  add("two dogs two dogs", {"two dogs playing with two dogs"});
  add("a", {"a"});
  add("a boat on the water", {"a boat floating on the water", "boats on water"});
  add("children playing in the playground today", {"children playing in the playground"});
  add("the train waits at the station", {"a train waiting at the station"});
  add("an elephant bathing in a river", {"an elephant bathing in the river"});
  add("a lonely goat", {"a lonely goat standing on the hill"});
  add("sheep resting in a wide green meadow", {"sheep resting in the meadow"});
  add("a terrible storm over the harbor", {"a storm over the harbor", "clouds over a harbor"});
  add("owls perch in barns", {"an owl perching in the barn"});
  add("a happy child", {"a happy child playing", "the happy child"});
  return f;
}

}  // namespace

TEST_CASE("bleu identity fixture scores exactly one") {
  Fixture f;
  f.candidates = {words("a dog in the park"), words("one bird in the sky")};
  f.references = {{words("a dog in the park")}, {words("one bird in the sky")}};
  for (int n = 1; n <= 4; ++n) CHECK(bleu(f.candidates, f.references, n) == 1.0);
  CHECK(rouge_l(f.candidates, f.references) == 1.0);
}

TEST_CASE("bleu with no unigram overlap is zero") {
  std::vector<TokenSeq> cands{words("x y z")};
  std::vector<RefSet> refs{{words("a b c")}};
  for (int n = 1; n <= 4; ++n) CHECK(bleu(cands, refs, n) == 0.0);
}

TEST_CASE("clipping: the the the vs the cat") {
  std::vector<TokenSeq> cands{words("the the the")};
  std::vector<RefSet> refs{{words("the cat")}};
  double impl = bleu(cands, refs, 1);
  double orac = oracle::bleu(cands, refs, 1);
  CHECK(impl == doctest::Approx(orac).epsilon(1e-12));
  // candidate is longer than the reference, so no brevity penalty applies:
  // clipped precision 1/3 stands alone
  CHECK(impl == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("brevity penalty fires for short candidates") {
  std::vector<TokenSeq> cands{words("a b")};
  std::vector<RefSet> refs{{words("a b c d")}};
  double impl = bleu(cands, refs, 1);
  CHECK(impl == doctest::Approx(std::exp(1.0 - 4.0 / 2.0)).epsilon(1e-12));
  CHECK(impl == doctest::Approx(oracle::bleu(cands, refs, 1)).epsilon(1e-12));
}

TEST_CASE("twenty-pair fixture matches the independent oracle within 1e-6") {
  Fixture f = twenty_pairs();
  for (int n = 1; n <= 4; ++n) {
    double impl = bleu(f.candidates, f.references, n);
    double orac = oracle::bleu(f.candidates, f.references, n);
    INFO("order ", n);
    CHECK(std::abs(impl - orac) < 1e-6);
  }
  CHECK(std::abs(rouge_l(f.candidates, f.references) -
                 oracle::rouge_l(f.candidates, f.references)) < 1e-6);
}

TEST_CASE("bleu is monotonically non-increasing in n on a healthy fixture") {
  std::vector<TokenSeq> cands{words("a dog sitting in the park today"),
                              words("a cat sleeping on the mat")};
  std::vector<RefSet> refs{{words("a dog sitting in the park")},
                           {words("a cat sleeping on the mat quietly")}};
  double prev = 2.0;
  for (int n = 1; n <= 4; ++n) {
    double score = bleu(cands, refs, n);
    CHECK(score > 0.0);
    CHECK(score <= prev);
    prev = score;
  }
}

TEST_CASE("metrics are invariant under consistent token relabeling") {
  Fixture f = twenty_pairs();
  std::map<std::string, std::string> rename;
  auto relabel = [&](const TokenSeq& seq) {
    TokenSeq out;
    for (const std::string& tok : seq) {
      auto it = rename.find(tok);
      if (it == rename.end())
        it = rename.emplace(tok, "tok" + std::to_string(rename.size())).first;
      out.push_back(it->second);
    }
    return out;
  };
  Fixture g;
  for (const TokenSeq& c : f.candidates) g.candidates.push_back(relabel(c));
  for (const RefSet& rs : f.references) {
    RefSet out;
    for (const TokenSeq& r : rs) out.push_back(relabel(r));
    g.references.push_back(out);
  }
  for (int n = 1; n <= 4; ++n)
    CHECK(bleu(f.candidates, f.references, n) ==
          doctest::Approx(bleu(g.candidates, g.references, n)).epsilon(1e-12));
  CHECK(rouge_l(f.candidates, f.references) ==
        doctest::Approx(rouge_l(g.candidates, g.references)).epsilon(1e-12));
}

TEST_CASE("rouge_l hand example: a b c d vs a c d") {
  std::vector<TokenSeq> cands{words("a b c d")};
  std::vector<RefSet> refs{{words("a c d")}};
  // LCS 3 -> P = 3/4, R = 1; F = 2.2 * 0.75 / (1 + 1.2 * 0.75)
  double expect = 2.2 * 0.75 / (1.0 + 1.2 * 0.75);
  double impl = rouge_l(cands, refs);
  CHECK(impl == doctest::Approx(expect).epsilon(1e-12));
  CHECK(impl == doctest::Approx(oracle::rouge_l(cands, refs)).epsilon(1e-12));
}

TEST_CASE("rouge_l with disjoint tokens is zero") {
  std::vector<TokenSeq> cands{words("x y z")};
  std::vector<RefSet> refs{{words("a b c")}};
  CHECK(rouge_l(cands, refs) == 0.0);
}

TEST_CASE("empty corpora and missing references are rejected") {
  std::vector<TokenSeq> none;
  std::vector<RefSet> refs;
  CHECK_THROWS_AS(bleu(none, refs, 1), std::invalid_argument);
  CHECK_THROWS_AS(rouge_l(none, refs), std::invalid_argument);
  std::vector<TokenSeq> one{words("a b")};
  std::vector<RefSet> empty_refs{{}};
  CHECK_THROWS_AS(bleu(one, empty_refs, 1), std::invalid_argument);
}

TEST_CASE("sentiment statistics") {
  std::vector<std::string> pos{"nice", "beautiful"};
  std::vector<std::string> neg{"bad", "ugly"};

  SUBCASE("matching caption counts in total and matched") {
    std::vector<SentimentRequest> reqs{{words("a nice dog"), Sentiment::kPositive}};
    SentimentStats s = sentiment_stats(reqs, pos, neg);
    CHECK(s.total_pct == 100.0);
    CHECK(s.matched_pct == 100.0);
  }

  SUBCASE("plain caption counts in neither") {
    std::vector<SentimentRequest> reqs{{words("a dog runs"), Sentiment::kPositive}};
    SentimentStats s = sentiment_stats(reqs, pos, neg);
    CHECK(s.total_pct == 0.0);
    CHECK(s.matched_pct == 0.0);
  }

  SUBCASE("wrong-polarity word counts in total only") {
    std::vector<SentimentRequest> reqs{{words("a bad dog"), Sentiment::kPositive}};
    SentimentStats s = sentiment_stats(reqs, pos, neg);
    CHECK(s.total_pct == 100.0);
    CHECK(s.matched_pct == 0.0);
  }

  SUBCASE("both-polarity caption matches when any word agrees") {
    std::vector<SentimentRequest> reqs{{words("a nice but ugly dog"), Sentiment::kPositive}};
    SentimentStats s = sentiment_stats(reqs, pos, neg);
    CHECK(s.total_pct == 100.0);
    CHECK(s.matched_pct == 100.0);
  }

  SUBCASE("neutral requests stay out of the denominators") {
    std::vector<SentimentRequest> reqs{{words("a nice dog"), Sentiment::kPositive},
                                       {words("a plain dog"), Sentiment::kNeutral}};
    SentimentStats s = sentiment_stats(reqs, pos, neg);
    CHECK(s.considered == 1);
    CHECK(s.total_pct == 100.0);
  }

  SUBCASE("matched never exceeds total") {
    Rng rng(8);
    std::vector<std::string> these{"nice", "bad", "dog", "cat", "runs"};
    std::vector<SentimentRequest> reqs;
    for (int i = 0; i < 50; ++i) {
      SentimentRequest r;
      r.requested = i % 2 ? Sentiment::kPositive : Sentiment::kNegative;
      for (int k = 0; k < 4; ++k) r.tokens.push_back(these[rng.next_index(these.size())]);
      reqs.push_back(r);
    }
    SentimentStats s = sentiment_stats(reqs, pos, neg);
    CHECK(s.matched_pct <= s.total_pct);
  }

  SUBCASE("overlapping lexicons are rejected") {
    std::vector<std::string> bad_neg{"bad", "nice"};
    std::vector<SentimentRequest> reqs{{words("a dog"), Sentiment::kPositive}};
    CHECK_THROWS_AS(sentiment_stats(reqs, pos, bad_neg), std::invalid_argument);
  }
}

TEST_CASE("a decoder that reproduces the references scores exactly one") {
  // constant logits make every decode a run of the dominant token; with the
  // references set to that exact caption, candidates equal references
  std::vector<std::string> caps{"wag wag wag wag"};
  Vocabulary vocab = Vocabulary::build(caps, 1);
  const int w = vocab.id("wag");

  ModelConfig cfg;
  cfg.variant = Variant::kBaseline;
  cfg.vocab_size = vocab.size();
  cfg.embed_dim = 4;
  cfg.hidden_dim = 5;
  cfg.feature_dim = 2;
  ModelParams params = ModelParams::init(cfg, 3);
  params.out_w.fill(0.0);
  params.out_b.fill(-30.0);
  params.out_b[static_cast<size_t>(w)] = 0.0;

  std::vector<RawRecord> test;
  for (int i = 0; i < 3; ++i) {
    RawRecord r;
    r.image_id = "img" + std::to_string(i);
    r.caption = "wag wag wag wag";
    r.label = Sentiment::kNeutral;
    r.feature = Tensor({2}, {1.0 * i, 0.5});
    test.push_back(std::move(r));
  }

  EvalConfig ec;
  ec.beam_size = 2;
  ec.max_len = 4;  // four tokens so 4-grams exist
  EvalReport report = evaluate(params, vocab, test, {}, {}, ec);
  for (int n = 0; n < 4; ++n) CHECK(report.bleu_n[n] == 1.0);
  CHECK(report.rouge == 1.0);
}

TEST_CASE("evaluate is deterministic end to end") {
  SyntheticCorpusSpec spec = SyntheticCorpusSpec::default_spec();
  spec.scenes.resize(4);
  spec.train_per_pair = 1;
  SyntheticCorpus corpus = generate_synthetic(spec);
  std::vector<std::string> caps;
  for (const RawRecord& r : corpus.train) caps.push_back(r.caption);
  Vocabulary vocab = Vocabulary::build(caps, 1);

  ModelConfig cfg;
  cfg.variant = Variant::kDirect;
  cfg.vocab_size = vocab.size();
  cfg.embed_dim = 6;
  cfg.hidden_dim = 8;
  cfg.sentiment_embed_dim = 4;
  cfg.feature_dim = spec.effective_feature_dim();
  ModelParams params = ModelParams::init(cfg, 33);

  EvalConfig ec;
  ec.beam_size = 2;
  ec.max_len = 8;
  EvalReport a = evaluate(params, vocab, corpus.test, spec.positive_adjectives,
                          spec.negative_adjectives, ec);
  EvalReport b = evaluate(params, vocab, corpus.test, spec.positive_adjectives,
                          spec.negative_adjectives, ec);
  for (int n = 0; n < 4; ++n) CHECK(a.bleu_n[n] == b.bleu_n[n]);
  CHECK(a.rouge == b.rouge);
  CHECK(a.stats.total_pct == b.stats.total_pct);
  CHECK(a.stats_flipped.matched_pct == b.stats_flipped.matched_pct);
  CHECK(a.n_candidates == 12);
  CHECK(a.stats.considered == 8);

  std::ostringstream kv;
  print_report_kv(kv, a);
  CHECK(kv.str().find("bleu1 = ") != std::string::npos);
  CHECK(kv.str().find("matched_flipped_pct = ") != std::string::npos);
  std::ostringstream tab;
  print_report_tables(tab, a);
  CHECK(tab.str().find("ROUGE-L") != std::string::npos);
  CHECK(tab.str().find("Matched(F)") != std::string::npos);
}
