#include <cmath>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "petwell/sentiment.hpp"
#include "sentiment_cases.hpp"
#include "support.hpp"

using namespace petwell;
using testsupport::analyzer;

using namespace sentiment_cases;

TEST(Tokenize, Examples) {
  EXPECT_EQ(tokenize(""), Strings{});
  EXPECT_EQ(tokenize("I love my dog :)"), (Strings{"I", "love", "my", "dog", ":)"}));
  EXPECT_EQ(tokenize("sux lol"), (Strings{"sux", "lol"}));
  EXPECT_EQ(tokenize("  great!!!  day,  "), (Strings{"great", "day"}));
  EXPECT_EQ(tokenize("ok :D"), (Strings{"ok", ":D"}));
}

TEST(Sentiment, Examples) {
  EXPECT_EQ(analyzer().compound(""), 0.0);
  EXPECT_EQ(analyzer().score("").neutral, 1.0);
  EXPECT_EQ(analyzer().compound("the of and"), 0.0);
  ASSERT_EQ(analyzer().lexicon().at("love"), 3.2);
  const double want = 3.2 / std::sqrt(3.2 * 3.2 + 15.0);
  EXPECT_NEAR(analyzer().compound("I love my dog"), want, 1e-4);
  EXPECT_NEAR(want, 0.637, 5e-4);
  EXPECT_GT(analyzer().compound("I love my dog!!"), analyzer().compound("I love my dog"));
}

TEST(Sentiment, SlangFromLexicon) {
  EXPECT_LT(analyzer().compound("sux"), 0.0);
  EXPECT_GT(analyzer().compound("lol"), 0.0);
  EXPECT_GT(analyzer().compound(":)"), 0.0);
}

TEST(Sentiment, NormalizationIsStrictlyIncreasingAndBounded) {
  double prev = -2;
  for (double s = -60; s <= 60; s += 0.01) {
    const double n = analyzer().normalize(s);
    ASSERT_GT(n, prev);
    ASSERT_GT(n, -1.0);
    ASSERT_LT(n, 1.0);
    ASSERT_EQ(n > 0, s > 1e-12);
    prev = n;
  }
  EXPECT_EQ(analyzer().normalize(0), 0.0);
}

TEST(Sentiment, AgreesWithReferenceGoldenFile) {
  const auto r = check_golden(PETWELL_TEST_DATA_DIR "/sentiment_golden.tsv");
  EXPECT_EQ(r.rows, 200);
  EXPECT_EQ(r.sign_agree, r.rows);
  EXPECT_EQ(r.within_tolerance, r.rows);
  for (const auto& f : r.failures) ADD_FAILURE() << f;
  RecordProperty("max_abs_diff", std::to_string(r.max_abs_diff));
}

TEST(SentimentProperty, CompoundInsideUnitIntervalWithSignOfSum) {
  std::mt19937_64 gen(101);
  for (int i = 0; i < 1000; ++i) {
    const auto caption = random_caption(gen);
    const auto s = analyzer().score(caption);
    ASSERT_GT(s.compound, -1.0) << caption;
    ASSERT_LT(s.compound, 1.0) << caption;
    ASSERT_NEAR(s.positive + s.negative + s.neutral, 1.0, 1e-3) << caption;
  }
}

TEST(SentimentProperty, AppendingPositiveNeverDecreases) {
  std::mt19937_64 gen(202);
  const auto& p = pools();
  for (int i = 0; i < 1000; ++i) {
    const auto caption = random_caption(gen);
    const auto word = p.positive[gen() % p.positive.size()];
    const auto longer = insert_before_punct(caption, word);
    ASSERT_GE(analyzer().compound(longer), analyzer().compound(caption)) << caption << " + " << word;
  }
}

TEST(SentimentProperty, AppendingNegativeNeverIncreases) {
  std::mt19937_64 gen(303);
  const auto& p = pools();
  for (int i = 0; i < 1000; ++i) {
    const auto caption = random_caption(gen);
    const auto word = p.negative[gen() % p.negative.size()];
    const auto longer = insert_before_punct(caption, word);
    ASSERT_LE(analyzer().compound(longer), analyzer().compound(caption)) << caption << " + " << word;
  }
}

TEST(SentimentProperty, NegationFlipsSinglePositiveToken) {
  std::mt19937_64 gen(404);
  const auto& p = pools();
  for (int i = 0; i < 1000; ++i) {
    const auto& word = p.positive[gen() % p.positive.size()];
    const double plain = analyzer().compound(word);
    ASSERT_GT(plain, 0.0) << word;
    ASSERT_LT(analyzer().compound("not " + word), 0.0) << word;
  }
}

TEST(SentimentProperty, NegativeMirror) {
  std::mt19937_64 gen(505);
  const auto& p = pools();
  for (int i = 0; i < 1000; ++i) {
    const auto& word = p.negative[gen() % p.negative.size()];
    ASSERT_LT(analyzer().compound(word), 0.0) << word;
    ASSERT_GT(analyzer().compound("not " + word), 0.0) << word;
  }
}

TEST(RuleConstants, ParseAndReject) {
  std::istringstream ok("# comment\nnormalization_alpha = 20\n\nnegation_scalar=-0.5 # trailing\n");
  const auto c = RuleConstants::parse(ok);
  EXPECT_EQ(c.normalization_alpha, 20);
  EXPECT_EQ(c.negation_scalar, -0.5);
  EXPECT_EQ(c.booster_increment, 0.293);
  std::istringstream unknown("bogus = 1\n");
  EXPECT_THROW(RuleConstants::parse(unknown), std::runtime_error);
  std::istringstream bad_alpha("normalization_alpha = 0\n");
  EXPECT_THROW(RuleConstants::parse(bad_alpha), std::runtime_error);
}
