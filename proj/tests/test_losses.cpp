#include <doctest.h>

#include <cmath>
#include <vector>

#include "sentigen/losses.hpp"
#include "sentigen/model.hpp"

using namespace sentigen;

namespace {

SentimentClassifierVars uniform_classifier(Tape& tape, int h, int m) {
  // zero output layer -> equal logits -> uniform distribution
  SentimentClassifierVars clf;
  Rng rng(17);
  Tensor w1({m, h});
  for (size_t i = 0; i < w1.size(); ++i) w1[i] = rng.uniform(-1, 1);
  clf.W1 = tape.leaf(w1);
  clf.b1 = tape.leaf(Tensor({m}));
  clf.W2 = tape.leaf(Tensor({3, m}));
  clf.b2 = tape.leaf(Tensor({3}));
  return clf;
}

SentimentClassifierVars saturated_classifier(Tape& tape, int h, int m, Sentiment gold) {
  SentimentClassifierVars clf;
  clf.W1 = tape.leaf(Tensor({m, h}));
  clf.b1 = tape.leaf(Tensor({m}));
  clf.W2 = tape.leaf(Tensor({3, m}));
  Tensor b2({3});
  b2[static_cast<size_t>(sentiment_index(gold))] = 1000.0;
  clf.b2 = tape.leaf(b2);
  return clf;
}

StepVars state_of(Tape& tape, std::initializer_list<double> h) {
  StepVars st;
  st.h = tape.constant(Tensor::vector(h));
  st.c = tape.constant(Tensor({static_cast<int>(h.size())}));
  return st;
}

}  // namespace

TEST_CASE("word_loss") {
  SUBCASE("saturated gold logits cost nothing") {
    Tape tape;
    Tensor logits({4});
    logits[2] = 1000.0;
    std::vector<Var> rows{tape.constant(logits)};
    std::vector<int> golds{2};
    CHECK(tape.value(word_loss(tape, rows, golds))[0] < 1e-12);
  }

  SUBCASE("uniform logits over V=5 cost ln 5") {
    Tape tape;
    std::vector<Var> rows{tape.constant(Tensor({5}))};
    std::vector<int> golds{4};
    CHECK(tape.value(word_loss(tape, rows, golds))[0] ==
          doctest::Approx(std::log(5.0)).epsilon(1e-12));
  }

  SUBCASE("two steps average to the hand-computed value") {
    Tape tape;
    std::vector<Var> rows{tape.constant(Tensor::vector({1, 2, 3})),
                          tape.constant(Tensor::vector({0, 0, 0}))};
    std::vector<int> golds{2, 1};
    // (0.407606 + ln 3) / 2
    CHECK(tape.value(word_loss(tape, rows, golds))[0] ==
          doctest::Approx(0.753109).epsilon(1e-6));
  }

  SUBCASE("padding positions are excluded") {
    Tape tape;
    std::vector<Var> rows{tape.constant(Tensor::vector({1, 2, 3})),
                          tape.constant(Tensor::vector({50, 0, 0}))};
    std::vector<int> golds{2, kPadId};
    CHECK(tape.value(word_loss(tape, rows, golds))[0] ==
          doctest::Approx(0.407606).epsilon(1e-6));
  }

  SUBCASE("length mismatch is rejected") {
    Tape tape;
    std::vector<Var> rows{tape.constant(Tensor::vector({1, 2, 3}))};
    std::vector<int> golds{2, 1};
    CHECK_THROWS_AS(word_loss(tape, rows, golds), std::invalid_argument);
  }
}

TEST_CASE("stepwise sentiment loss") {
  SUBCASE("uniform classifier costs ln 3 at every step") {
    Tape tape;
    SentimentClassifierVars clf = uniform_classifier(tape, 2, 2);
    std::vector<StepVars> states{state_of(tape, {0.3, -0.8}), state_of(tape, {-1.0, 0.4})};
    CHECK(tape.value(stepwise_sentiment_loss(tape, clf, states, Sentiment::kPositive))[0] ==
          doctest::Approx(std::log(3.0)).epsilon(1e-12));
  }

  SUBCASE("saturated classifier costs nothing") {
    Tape tape;
    SentimentClassifierVars clf = saturated_classifier(tape, 2, 2, Sentiment::kNegative);
    std::vector<StepVars> states{state_of(tape, {0.3, -0.8})};
    CHECK(tape.value(stepwise_sentiment_loss(tape, clf, states, Sentiment::kNegative))[0] <
          1e-12);
  }

  SUBCASE("two steps match a scalar recomputation") {
    Rng rng(3);
    Tensor w1({2, 2}), b1({2}), w2({3, 2}), b2({3});
    for (size_t i = 0; i < w1.size(); ++i) w1[i] = rng.uniform(-1, 1);
    for (size_t i = 0; i < b1.size(); ++i) b1[i] = rng.uniform(-1, 1);
    for (size_t i = 0; i < w2.size(); ++i) w2[i] = rng.uniform(-1, 1);
    for (size_t i = 0; i < b2.size(); ++i) b2[i] = rng.uniform(-1, 1);
    std::vector<std::vector<double>> hs{{0.3, -0.8}, {-1.0, 0.4}};

    Tape tape;
    SentimentClassifierVars clf{tape.leaf(w1), tape.leaf(b1), tape.leaf(w2), tape.leaf(b2)};
    std::vector<StepVars> states{state_of(tape, {0.3, -0.8}), state_of(tape, {-1.0, 0.4})};
    double actual =
        tape.value(stepwise_sentiment_loss(tape, clf, states, Sentiment::kNeutral))[0];

    double expect = 0.0;
    for (const auto& h : hs) {
      double hid[2];
      for (int j = 0; j < 2; ++j)
        hid[j] = std::tanh(w1.at2(j, 0) * h[0] + w1.at2(j, 1) * h[1] + b1[static_cast<size_t>(j)]);
      double logits[3];
      double mx = -1e30;
      for (int k = 0; k < 3; ++k) {
        logits[k] = w2.at2(k, 0) * hid[0] + w2.at2(k, 1) * hid[1] + b2[static_cast<size_t>(k)];
        mx = std::max(mx, logits[k]);
      }
      double denom = 0.0;
      for (double l : logits) denom += std::exp(l - mx);
      expect += (mx + std::log(denom)) - logits[sentiment_index(Sentiment::kNeutral)];
    }
    expect /= 2.0;
    CHECK(actual == doctest::Approx(expect).epsilon(1e-12));
  }

  SUBCASE("empty state sequence is rejected") {
    Tape tape;
    SentimentClassifierVars clf = uniform_classifier(tape, 2, 2);
    std::vector<StepVars> states;
    CHECK_THROWS_AS(stepwise_sentiment_loss(tape, clf, states, Sentiment::kPositive),
                    std::invalid_argument);
  }
}

TEST_CASE("terminal sentiment loss") {
  Tape tape;
  SentimentClassifierVars uniform = uniform_classifier(tape, 3, 2);
  Var s = tape.constant(Tensor::vector({0.2, -0.5, 0.9}));
  CHECK(tape.value(terminal_sentiment_loss(tape, uniform, s, Sentiment::kPositive))[0] ==
        doctest::Approx(std::log(3.0)).epsilon(1e-12));

  SentimentClassifierVars sat = saturated_classifier(tape, 3, 2, Sentiment::kPositive);
  CHECK(tape.value(terminal_sentiment_loss(tape, sat, s, Sentiment::kPositive))[0] < 1e-12);
}

TEST_CASE("terminal sentiment loss matches a scalar recomputation") {
  Rng rng(41);
  Tensor w1({2, 3}), b1({2}), w2({3, 2}), b2({3});
  for (size_t i = 0; i < w1.size(); ++i) w1[i] = rng.uniform(-1, 1);
  for (size_t i = 0; i < b1.size(); ++i) b1[i] = rng.uniform(-1, 1);
  for (size_t i = 0; i < w2.size(); ++i) w2[i] = rng.uniform(-1, 1);
  for (size_t i = 0; i < b2.size(); ++i) b2[i] = rng.uniform(-1, 1);
  const double sv[3] = {0.2, -0.5, 0.9};

  Tape tape;
  SentimentClassifierVars clf{tape.leaf(w1), tape.leaf(b1), tape.leaf(w2), tape.leaf(b2)};
  Var s = tape.constant(Tensor::vector({sv[0], sv[1], sv[2]}));
  double actual = tape.value(terminal_sentiment_loss(tape, clf, s, Sentiment::kNegative))[0];

  double hid[2];
  for (int j = 0; j < 2; ++j)
    hid[j] = std::tanh(w1.at2(j, 0) * sv[0] + w1.at2(j, 1) * sv[1] + w1.at2(j, 2) * sv[2] +
                       b1[static_cast<size_t>(j)]);
  double logits[3];
  double mx = -1e30;
  for (int k = 0; k < 3; ++k) {
    logits[k] = w2.at2(k, 0) * hid[0] + w2.at2(k, 1) * hid[1] + b2[static_cast<size_t>(k)];
    mx = std::max(mx, logits[k]);
  }
  double denom = 0.0;
  for (double l : logits) denom += std::exp(l - mx);
  double expect = (mx + std::log(denom)) - logits[sentiment_index(Sentiment::kNegative)];
  CHECK(actual == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("stepwise over one step equals terminal applied to that state") {
  Tape tape;
  Rng rng(9);
  Tensor w1({2, 2}), w2({3, 2});
  for (size_t i = 0; i < w1.size(); ++i) w1[i] = rng.uniform(-1, 1);
  for (size_t i = 0; i < w2.size(); ++i) w2[i] = rng.uniform(-1, 1);
  SentimentClassifierVars clf{tape.leaf(w1), tape.leaf(Tensor({2})), tape.leaf(w2),
                              tape.leaf(Tensor({3}))};
  std::vector<StepVars> states{state_of(tape, {0.7, -0.2})};
  double stepwise =
      tape.value(stepwise_sentiment_loss(tape, clf, states, Sentiment::kNegative))[0];
  double terminal =
      tape.value(terminal_sentiment_loss(tape, clf, states[0].h, Sentiment::kNegative))[0];
  CHECK(stepwise == doctest::Approx(terminal).epsilon(1e-15));
}

TEST_CASE("composed objective equals the sum of its parts") {
  // word 0.753109 (hand-derived above) + ln 3 from a uniform classifier
  Tape tape;
  std::vector<Var> rows{tape.constant(Tensor::vector({1, 2, 3})),
                        tape.constant(Tensor::vector({0, 0, 0}))};
  std::vector<int> golds{2, 1};
  Var word = word_loss(tape, rows, golds);
  SentimentClassifierVars clf = uniform_classifier(tape, 2, 2);
  std::vector<StepVars> states{state_of(tape, {0.1, 0.2}), state_of(tape, {0.3, 0.4})};
  Var senti = stepwise_sentiment_loss(tape, clf, states, Sentiment::kPositive);
  Var total = tape.add(word, tape.scale(senti, 1.0));
  CHECK(tape.value(total)[0] == doctest::Approx(1.851721).epsilon(1e-6));
}

TEST_CASE("total_loss per variant") {
  auto run_variant = [&](Variant variant, double lambda) {
    ModelConfig cfg;
    cfg.variant = variant;
    cfg.vocab_size = 9;
    cfg.embed_dim = 4;
    cfg.hidden_dim = 4;
    cfg.sentiment_embed_dim = 3;
    cfg.feature_dim = 3;
    ModelParams params = ModelParams::init(cfg, 37);
    Rng rng(5);
    Tensor feature({3});
    for (size_t i = 0; i < 3; ++i) feature[i] = rng.uniform(-1, 1);
    std::vector<int> tokens{kBosId, 6, 7, kEosId};

    Tape tape;
    ModelVars m = bind_model(tape, params);
    ForwardResult fwd = forward_sequence(tape, m, feature, tokens, Sentiment::kNegative);
    TotalLossVars vars = total_loss(tape, m, fwd, tokens, Sentiment::kNegative, lambda);
    return read_breakdown(tape, vars, lambda);
  };

  SUBCASE("baseline has no sentiment term") {
    LossBreakdown b = run_variant(Variant::kBaseline, 1.0);
    CHECK(b.sentiment_loss == 0.0);
    CHECK(b.total == b.word_loss);
  }

  SUBCASE("lambda zero annihilates the sentiment term in the total") {
    for (Variant v : {Variant::kDirect, Variant::kFlow}) {
      LossBreakdown b = run_variant(v, 0.0);
      CHECK(b.sentiment_loss > 0.0);
      CHECK(b.total == b.word_loss);
    }
  }

  SUBCASE("total is exactly word + lambda * sentiment, all parts finite and nonnegative") {
    for (Variant v : {Variant::kDirect, Variant::kFlow}) {
      for (double lambda : {0.25, 1.0, 2.0}) {
        LossBreakdown b = run_variant(v, lambda);
        CHECK(b.word_loss >= 0.0);
        CHECK(b.sentiment_loss >= 0.0);
        CHECK(std::isfinite(b.total));
        CHECK(b.total == b.word_loss + lambda * b.sentiment_loss);  // bit-level
      }
    }
  }
}
