#include <algorithm>
#include <atomic>
#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "http_fixture.hpp"
#include "petwell/petclass.hpp"
#include "support.hpp"

using namespace petwell;
using testsupport::week_day;

namespace {

struct Timed {
  Timeline timeline;
  std::map<std::string, PetPrediction> predictions;
};

Timed timeline_of(const std::vector<std::pair<int, PetLabel>>& week_labels) {
  Timed t;
  t.timeline.user_id = "u1";
  for (std::size_t i = 0; i < week_labels.size(); ++i) {
    const auto id = "p" + std::to_string(i);
    t.timeline.posts.push_back(testsupport::post(id, week_day(week_labels[i].first, static_cast<int>(i % 7))));
    t.predictions[id] = PetPrediction::one_hot(week_labels[i].second);
  }
  std::stable_sort(t.timeline.posts.begin(), t.timeline.posts.end(),
                   [](const Post& a, const Post& b) { return a.timestamp < b.timestamp; });
  return t;
}

OwnershipLabel owner(const std::vector<std::pair<int, PetLabel>>& week_labels) {
  const auto t = timeline_of(week_labels);
  return identify_pet_owner(t.timeline, t.predictions);
}

}  // namespace

TEST(PetPrediction, ArgmaxAndNormalization) {
  EXPECT_EQ((PetPrediction{0.2, 0.3, 0.5}).label(), PetLabel::other);
  EXPECT_EQ((PetPrediction{0.5, 0.5, 0.0}).label(), PetLabel::dog);
  EXPECT_EQ((PetPrediction{0.0, 0.5, 0.5}).label(), PetLabel::cat);
  const auto p = PetPrediction::normalized(2, 1, 1);
  EXPECT_DOUBLE_EQ(p.dog, 0.5);
  EXPECT_DOUBLE_EQ(p.dog + p.cat + p.other, 1.0);
  EXPECT_THROW(PetPrediction::normalized(0, 0, 0), BackendError);
  EXPECT_THROW(PetPrediction::normalized(-1, 1, 1), BackendError);
}

TEST(MockClassifier, NoiselessReturnsSidecarLabel) {
  std::istringstream sidecar("# comment\nimg/a.jpg\tdog\nimg/b.jpg\tcat\r\nimg/c.jpg\tother\n");
  MockClassifier mock(read_label_sidecar(sidecar));
  const auto a = classify_image("img/a.jpg", mock);
  EXPECT_EQ(a.dog, 1.0);
  EXPECT_EQ(a.cat, 0.0);
  EXPECT_EQ(a.other, 0.0);
  EXPECT_EQ(classify_image("img/b.jpg", mock).label(), PetLabel::cat);
  EXPECT_EQ(classify_image("img/c.jpg", mock).label(), PetLabel::other);
  EXPECT_EQ(mock.unknown_images(), 0u);
}

TEST(MockClassifier, UnknownImageIsOtherAndCounted) {
  MockClassifier mock({{"x", PetLabel::dog}});
  const auto p = classify_image("missing.jpg", mock);
  EXPECT_EQ(p.other, 1.0);
  classify_image("missing2.jpg", mock);
  EXPECT_EQ(mock.unknown_images(), 2u);
}

TEST(MockClassifier, BadSidecarLineThrows) {
  std::istringstream bad("img/a.jpg\tdog\nimg/b.jpg horse\n");
  EXPECT_THROW(read_label_sidecar(bad), std::runtime_error);
}

TEST(MockClassifier, NoisyFrequencyMatchesReportedRate) {
  std::unordered_map<std::string, PetLabel> labels;
  for (int i = 0; i < 10000; ++i) labels["cat/" + std::to_string(i)] = PetLabel::cat;
  MockClassifier mock(labels, reported_classifier_noise(), 2017);
  std::size_t hits = 0;
  for (const auto& [ref, _] : labels) hits += classify_image(ref, mock).label() == PetLabel::cat;
  EXPECT_NEAR(static_cast<double>(hits) / 10000.0, 0.964, 0.01);
}

TEST(MockClassifier, NoisyIsDeterministicPerImage) {
  std::unordered_map<std::string, PetLabel> labels;
  for (int i = 0; i < 500; ++i) labels["img" + std::to_string(i)] = PetLabel::dog;
  MockClassifier a(labels, reported_classifier_noise(), 5), b(labels, reported_classifier_noise(), 5);
  for (const auto& [ref, _] : labels) {
    EXPECT_EQ(a.classify(ref).label(), a.classify(ref).label());
    EXPECT_EQ(a.classify(ref).label(), b.classify(ref).label());
  }
}

TEST(MockClassifier, RejectsNonStochasticNoise) {
  NoiseMatrix m = reported_classifier_noise();
  m[1][1] += 0.1;
  EXPECT_THROW(MockClassifier({}, m), std::invalid_argument);
}

TEST(Ownership, TwoWeeksMakeAnOwner) {
  // ISO weeks (2017,1) and (2017,3)
  EXPECT_EQ(owner({{0, PetLabel::dog}, {2, PetLabel::dog}, {1, PetLabel::other}}), OwnershipLabel::dog_owner);
}

TEST(Ownership, ManyPostsInOneWeekAreNotEnough) {
  std::vector<std::pair<int, PetLabel>> posts(9, {4, PetLabel::dog});
  posts.push_back({6, PetLabel::other});
  EXPECT_EQ(owner(posts), OwnershipLabel::none);
}

TEST(Ownership, NoPetPostsMeansNone) {
  EXPECT_EQ(owner({{0, PetLabel::other}, {3, PetLabel::other}}), OwnershipLabel::none);
  EXPECT_EQ(owner({}), OwnershipLabel::none);
}

TEST(Ownership, BothSpeciesTieBreaks) {
  // more windows wins
  EXPECT_EQ(owner({{0, PetLabel::dog}, {1, PetLabel::dog}, {2, PetLabel::cat}, {3, PetLabel::cat}, {4, PetLabel::cat}}),
            OwnershipLabel::cat_owner);
  // equal windows: more posts wins
  EXPECT_EQ(owner({{0, PetLabel::dog}, {1, PetLabel::dog}, {2, PetLabel::cat}, {3, PetLabel::cat}, {3, PetLabel::cat}}),
            OwnershipLabel::cat_owner);
  // full tie: dog by default, configurable
  const auto t = timeline_of({{0, PetLabel::dog}, {1, PetLabel::dog}, {2, PetLabel::cat}, {3, PetLabel::cat}});
  EXPECT_EQ(identify_pet_owner(t.timeline, t.predictions), OwnershipLabel::dog_owner);
  OwnershipRules rules;
  rules.tie_winner = PetLabel::cat;
  EXPECT_EQ(identify_pet_owner(t.timeline, t.predictions, rules), OwnershipLabel::cat_owner);
}

TEST(Ownership, MissingPredictionIsFatal) {
  auto t = timeline_of({{0, PetLabel::dog}, {1, PetLabel::dog}});
  t.predictions.erase("p1");
  EXPECT_THROW(identify_pet_owner(t.timeline, t.predictions), MissingPrediction);
}

TEST(Ownership, OptionalConfidenceThreshold) {
  auto t = timeline_of({{0, PetLabel::dog}, {1, PetLabel::dog}});
  t.predictions["p1"] = {0.5, 0.3, 0.2};
  EXPECT_EQ(identify_pet_owner(t.timeline, t.predictions), OwnershipLabel::dog_owner);
  OwnershipRules rules;
  rules.min_confidence = 0.6;
  EXPECT_EQ(identify_pet_owner(t.timeline, t.predictions, rules), OwnershipLabel::none);
}

// Brute force over species-week sets, using the generator's own week index
// instead of the calendar code.
TEST(Ownership, MatchesBruteForceOracleAndInvariants) {
  std::mt19937_64 gen(99);
  const std::array<PetLabel, 3> labels{PetLabel::dog, PetLabel::cat, PetLabel::other};
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = static_cast<int>(gen() % 12);
    std::vector<std::pair<int, PetLabel>> posts;
    for (int i = 0; i < n; ++i) posts.push_back({static_cast<int>(gen() % 6), labels[gen() % 3]});

    std::set<int> dog_weeks, cat_weeks;
    int dog_posts = 0, cat_posts = 0;
    for (auto [w, l] : posts) {
      if (l == PetLabel::dog) dog_weeks.insert(w), ++dog_posts;
      if (l == PetLabel::cat) cat_weeks.insert(w), ++cat_posts;
    }
    const bool d = dog_weeks.size() >= 2, c = cat_weeks.size() >= 2;
    OwnershipLabel expected = OwnershipLabel::none;
    if (d && c) {
      const auto key_d = std::make_tuple(dog_weeks.size(), dog_posts, 1);
      const auto key_c = std::make_tuple(cat_weeks.size(), cat_posts, 0);
      expected = key_d > key_c ? OwnershipLabel::dog_owner : OwnershipLabel::cat_owner;
    } else if (d) {
      expected = OwnershipLabel::dog_owner;
    } else if (c) {
      expected = OwnershipLabel::cat_owner;
    }
    ASSERT_EQ(owner(posts), expected) << "trial " << trial;

    auto shuffled = posts;
    std::shuffle(shuffled.begin(), shuffled.end(), gen);
    auto t = timeline_of(shuffled);
    std::reverse(t.timeline.posts.begin(), t.timeline.posts.end());
    ASSERT_EQ(identify_pet_owner(t.timeline, t.predictions), expected);

    auto padded = posts;
    for (int k = 0; k < 3; ++k) padded.push_back({static_cast<int>(gen() % 6), PetLabel::other});
    ASSERT_EQ(owner(padded), expected);
  }
}

TEST(ValidateBackend, NoiselessIsIdentity) {
  std::vector<std::pair<std::string, PetLabel>> set;
  std::unordered_map<std::string, PetLabel> labels;
  for (int i = 0; i < 30; ++i) {
    const auto l = static_cast<PetLabel>(i % 3);
    set.emplace_back("i" + std::to_string(i), l);
    labels["i" + std::to_string(i)] = l;
  }
  MockClassifier mock(labels);
  const auto m = validate_backend(set, mock);
  for (auto t : kPetLabels) {
    EXPECT_EQ(m.accuracy(t), 1.0);
    EXPECT_EQ(m.row_total(t), 10u);
  }
  EXPECT_EQ(m.total(), 30u);
}

TEST(ValidateBackend, SingleSampleAndEmpty) {
  MockClassifier mock({{"a", PetLabel::cat}});
  std::vector<std::pair<std::string, PetLabel>> one{{"a", PetLabel::cat}};
  const auto m = validate_backend(one, mock);
  EXPECT_EQ(m.counts[1][1], 1u);
  EXPECT_EQ(m.total(), 1u);
  EXPECT_TRUE(std::isnan(m.accuracy(PetLabel::dog)));
  EXPECT_THROW(validate_backend(std::span<const std::pair<std::string, PetLabel>>{}, mock), std::invalid_argument);
}

TEST(ValidateBackend, NoisyMockWithinOnePercentPerClass) {
  std::vector<std::pair<std::string, PetLabel>> set;
  std::unordered_map<std::string, PetLabel> labels;
  for (auto l : kPetLabels)
    for (int i = 0; i < 1500; ++i) {
      const auto ref = std::string(to_string(l)) + "/" + std::to_string(i) + ".jpg";
      set.emplace_back(ref, l);
      labels[ref] = l;
    }
  MockClassifier mock(labels, reported_classifier_noise(), 2017);
  const auto m = validate_backend(set, mock);
  EXPECT_NEAR(m.accuracy(PetLabel::dog), 0.990, 0.01);
  EXPECT_NEAR(m.accuracy(PetLabel::cat), 0.964, 0.01);
  EXPECT_NEAR(m.accuracy(PetLabel::other), 0.985, 0.01);
}

class HttpClassifierTest : public ::testing::Test {
 protected:
  testsupport::LocalServer srv;
  std::atomic<int> calls{0};
  int fail_first = 0;
  int fail_status = 503;

  void SetUp() override {
    srv.server().Post("/classify", [this](const httplib::Request& req, httplib::Response& res) {
      const int n = ++calls;
      if (n <= fail_first) {
        res.status = fail_status;
        return;
      }
      const auto body = nlohmann::json::parse(req.body);
      const auto ref = body.at("image_ref").get<std::string>();
      nlohmann::json scores = ref == "bad" ? nlohmann::json{{"dog", "x"}} : nlohmann::json{{"dog", 0.2}, {"cat", 0.6}, {"other", 0.2}};
      res.set_content(nlohmann::json{{"scores", scores}}.dump(), "application/json");
    });
    srv.start();
  }

  RetryPolicy fast() {
    RetryPolicy p;
    p.timeout = std::chrono::milliseconds(2000);
    return p;
  }
};

TEST_F(HttpClassifierTest, ParsesScores) {
  HttpClassifier c(srv.url(), fast(), [](auto) {});
  const auto p = classify_image("img/1.jpg", c);
  EXPECT_EQ(p.label(), PetLabel::cat);
  EXPECT_NEAR(p.cat, 0.6, 1e-12);
}

TEST_F(HttpClassifierTest, RetriesTransientFailuresWithBackoff) {
  fail_first = 2;
  std::vector<long long> waits;
  HttpClassifier c(srv.url(), fast(), [&](std::chrono::milliseconds d) { waits.push_back(d.count()); });
  EXPECT_EQ(classify_image("img/1.jpg", c).label(), PetLabel::cat);
  EXPECT_EQ(calls.load(), 3);
  EXPECT_EQ(waits, (std::vector<long long>{100, 200}));
}

TEST_F(HttpClassifierTest, GivesUpAfterThreeAttempts) {
  fail_first = 10;
  HttpClassifier c(srv.url(), fast(), [](auto) {});
  try {
    classify_image("img/1.jpg", c);
    FAIL() << "expected BackendError";
  } catch (const BackendError& e) {
    EXPECT_TRUE(e.retryable());
  }
  EXPECT_EQ(calls.load(), 3);
}

TEST_F(HttpClassifierTest, ClientErrorsAreNotRetried) {
  fail_first = 10;
  fail_status = 400;
  HttpClassifier c(srv.url(), fast(), [](auto) {});
  EXPECT_THROW(classify_image("img/1.jpg", c), BackendError);
  EXPECT_EQ(calls.load(), 1);
}

TEST_F(HttpClassifierTest, MalformedResponseIsNotRetried) {
  HttpClassifier c(srv.url(), fast(), [](auto) {});
  try {
    classify_image("bad", c);
    FAIL() << "expected BackendError";
  } catch (const BackendError& e) {
    EXPECT_FALSE(e.retryable());
  }
  EXPECT_EQ(calls.load(), 1);
}

TEST(HttpClassifier, UnreachableIsRetryable) {
  RetryPolicy p;
  p.timeout = std::chrono::milliseconds(300);
  int sleeps = 0;
  HttpClassifier c(testsupport::dead_url(), p, [&](auto) { ++sleeps; });
  try {
    c.classify("img/1.jpg");
    FAIL() << "expected BackendError";
  } catch (const BackendError& e) {
    EXPECT_TRUE(e.retryable());
  }
  EXPECT_EQ(sleeps, 2);
}

TEST(RetryPolicy, BackoffIsCapped) {
  RetryPolicy p;
  p.max_attempts = 10;
  EXPECT_EQ(p.backoff_before(2).count(), 100);
  EXPECT_EQ(p.backoff_before(3).count(), 200);
  EXPECT_EQ(p.backoff_before(6).count(), 1600);
  EXPECT_EQ(p.backoff_before(7).count(), 2000);
  EXPECT_EQ(p.backoff_before(9).count(), 2000);
}
