#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "harness.hpp"
#include "support.hpp"

using namespace petwell;
using namespace petwell::synth;
using testsupport::analyzer;

namespace {

const SynthCorpus& default_corpus() {
  static const SynthCorpus c = generate_corpus(SynthConfig{}, analyzer());
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

UserProfile perfect_profile(const UserTruth& t) {
  UserProfile p;
  p.user_id = t.user_id;
  p.demographics = t.demographics;
  p.ownership = t.ownership;
  p.has_partner = t.has_partner;
  p.has_child = t.has_child;
  p.visual_happiness = t.smile_mean;
  p.textual_happiness = t.caption_mean;
  return p;
}

}  // namespace

TEST(SynthConfig, InfeasibleConfigsThrow) {
  auto bad = [](auto mutate) {
    SynthConfig c;
    mutate(c);
    return c;
  };
  const std::vector<SynthConfig> cases{
      bad([](SynthConfig& c) { c.pet_fraction = 1.2; }),
      bad([](SynthConfig& c) { c.partner_fraction = -0.1; }),
      bad([](SynthConfig& c) { c.race_mix = {0.5, 0.5, 0.5}; }),
      bad([](SynthConfig& c) { c.caption_positive_owner = 0.8, c.caption_negative_owner = 0.3; }),
      bad([](SynthConfig& c) { c.n_users = 0; }),
      bad([](SynthConfig& c) { c.posts_min = 10; }),
      bad([](SynthConfig& c) { c.posts_max = 26, c.posts_min = 30; }),
      bad([](SynthConfig& c) { c.weeks_span = 1; }),
      bad([](SynthConfig& c) { c.adult_age_min = 12; }),
      bad([](SynthConfig& c) { c.smile_face_sd = 0; }),
      bad([](SynthConfig& c) { c.start = "yesterday"; }),
  };
  for (const auto& c : cases) EXPECT_THROW(c.validate(), std::invalid_argument);
  EXPECT_NO_THROW(SynthConfig{}.validate());
}

TEST(SynthConfig, JsonMerge) {
  SynthConfig c;
  c.merge_json({{"n_users", 40}, {"seed", 9}});
  EXPECT_EQ(c.n_users, 40u);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.pet_fraction, 0.5);
  EXPECT_THROW(c.merge_json({{"n_user", 4}}), std::invalid_argument);
  SynthConfig back;
  back.merge_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
}

TEST(Synth, SameSeedSameBytes) {
  SynthConfig cfg;
  cfg.n_users = 60;
  testsupport::TempDir a("synth-a"), b("synth-b");
  write_corpus_files(a.path(), generate_corpus(cfg, analyzer()), cfg);
  write_corpus_files(b.path(), generate_corpus(cfg, analyzer()), cfg);
  for (const char* f : {"corpus.ndjson", "labels.tsv", "faces.ndjson", "truth.ndjson", "synth_config.json"})
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  cfg.seed = 2018;
  testsupport::TempDir c("synth-c");
  write_corpus_files(c.path(), generate_corpus(cfg, analyzer()), cfg);
  EXPECT_NE(slurp(a / "corpus.ndjson"), slurp(c / "corpus.ndjson"));
}

TEST(Synth, ExactPlanting) {
  SynthConfig cfg;
  cfg.n_users = 100;
  for (std::uint64_t seed : {1, 2, 3}) {
    cfg.seed = seed;
    const auto c = generate_corpus(cfg, analyzer());
    std::size_t eligible = 0, owners = 0, dogs = 0, partners = 0, children = 0;
    for (const auto& u : c.truth.users) {
      if (!u.eligible) continue;
      ++eligible;
      owners += u.ownership != OwnershipLabel::none;
      dogs += u.ownership == OwnershipLabel::dog_owner;
      partners += u.has_partner;
      children += u.has_child;
    }
    EXPECT_EQ(eligible, 100u);
    EXPECT_EQ(owners, 50u);
    EXPECT_EQ(dogs, 25u);
    EXPECT_EQ(partners, 50u);
    EXPECT_EQ(children, 25u);
    EXPECT_EQ(c.truth.users.size(), 100u + cfg.decoy_users);
  }
}

TEST(Synth, IngestRoundTripAndEligibilityDesign) {
  const auto& c = default_corpus();
  std::stringstream ss;
  for (const auto& p : c.posts) ss << post_to_json(p).dump() << '\n';
  const auto ingest = ingest_corpus(ss);
  EXPECT_EQ(ingest.report.malformed, 0u);
  EXPECT_EQ(ingest.report.duplicates, 0u);
  EXPECT_EQ(ingest.timelines, make_timelines(c.posts));
  for (const auto& u : c.truth.users) {
    const auto& tl = ingest.timelines.at(u.user_id);
    if (u.drop_reason == DropReason::too_few_posts) EXPECT_LT(tl.size(), 25u) << u.user_id;
    else EXPECT_GE(tl.size(), 25u) << u.user_id;
  }
}

TEST(Synth, EveryTrapKindPresent) {
  std::map<Trap, std::size_t> seen;
  for (const auto& u : default_corpus().truth.users)
    for (auto t : u.traps) ++seen[t];
  for (Trap t : {Trap::single_week_pet, Trap::partner_gap5, Trap::single_week_friend, Trap::child_gap18,
                 Trap::minor_with_young, Trap::tied_groups})
    EXPECT_GT(seen[t], 0u) << to_string(t);
}

TEST(Synth, OwnersPostPetsInTwoWeeksTrapsInOne) {
  const auto& c = default_corpus();
  const auto labels = c.label_map();
  for (const auto& [id, tl] : make_timelines(c.posts)) {
    const auto* t = c.truth.find(id);
    ASSERT_NE(t, nullptr);
    if (!t->eligible) continue;
    std::array<std::set<WindowId>, 2> weeks;
    for (const auto& p : tl.posts) {
      const auto l = labels.at(p.image_ref);
      if (l != PetLabel::other) weeks[static_cast<std::size_t>(l)].insert(iso_week_of(p.timestamp));
    }
    const bool single = std::count(t->traps.begin(), t->traps.end(), Trap::single_week_pet) > 0;
    if (t->ownership == OwnershipLabel::dog_owner) EXPECT_GE(weeks[0].size(), 2u) << id;
    if (t->ownership == OwnershipLabel::cat_owner) EXPECT_GE(weeks[1].size(), 2u) << id;
    if (t->ownership == OwnershipLabel::none) {
      EXPECT_LE(weeks[0].size(), 1u) << id;
      EXPECT_LE(weeks[1].size(), 1u) << id;
      if (single) EXPECT_EQ(weeks[0].size() + weeks[1].size(), 1u) << id;
    }
  }
}

TEST(Synth, StratumSmileMeansMatchPlantedTargets) {
  SynthConfig cfg;
  cfg.smile_dog_effect = 11.0;  // owner mean 60
  cfg.smile_cat_effect = 11.0;
  const auto c = generate_corpus(cfg, analyzer());
  std::map<std::string, std::pair<double, std::size_t>> by_user;
  for (const auto& [ref, faces] : c.faces)
    for (const auto& f : faces) {
      const auto slash = f.token.find('/');
      if (f.token.substr(slash) != "/self") continue;
      auto& acc = by_user[f.token.substr(0, slash)];
      acc.first += f.smiling;
      ++acc.second;
    }
  // planted: face-weighted mean of per-user targets; empirical: mean of drawn faces
  double sum[2] = {}, target[2] = {};
  std::size_t n[2] = {}, users[2] = {};
  for (const auto& u : c.truth.users) {
    if (!u.eligible) continue;
    const auto& [s, k] = by_user.at(u.user_id);
    const int g = u.ownership == OwnershipLabel::none ? 1 : 0;
    sum[g] += s;
    n[g] += k;
    target[g] += u.smile_mean * static_cast<double>(k);
    ++users[g];
  }
  for (int g = 0; g < 2; ++g) {
    EXPECT_GT(n[g] / users[g], 10u);
    EXPECT_NEAR(sum[g] / static_cast<double>(n[g]), target[g] / static_cast<double>(n[g]), 1.0) << g;
  }
  // and the per-user targets centre on the stratum means
  EXPECT_NEAR(target[0] / static_cast<double>(n[0]), 60.0, 2.0);
  EXPECT_NEAR(target[1] / static_cast<double>(n[1]), 49.0, 2.0);
  EXPECT_EQ(c.truth.planted.smile_dog, 60.0);
  EXPECT_EQ(c.truth.planted.smile_none, 49.0);
}

TEST(Synth, TruthFileRoundTrip) {
  SynthConfig cfg;
  cfg.n_users = 30;
  const auto c = generate_corpus(cfg, analyzer());
  testsupport::TempDir dir("truth");
  write_corpus_files(dir.path(), c, cfg);
  std::ifstream in(dir / "truth.ndjson");
  const auto back = read_truth(in);
  ASSERT_EQ(back.users.size(), c.truth.users.size());
  for (std::size_t i = 0; i < back.users.size(); ++i) {
    EXPECT_EQ(back.users[i].user_id, c.truth.users[i].user_id);
    EXPECT_EQ(back.users[i].ownership, c.truth.users[i].ownership);
    EXPECT_EQ(back.users[i].demographics, c.truth.users[i].demographics);
    EXPECT_EQ(back.users[i].smile_mean, c.truth.users[i].smile_mean);
  }
  EXPECT_EQ(back.planted.smile_cat, c.truth.planted.smile_cat);
}

TEST(Evaluate, PerfectPredictions) {
  std::vector<UserProfile> ps;
  for (const auto& u : default_corpus().truth.users)
    if (u.eligible) ps.push_back(perfect_profile(u));
  const auto r = evaluate_pipeline(ps, default_corpus().truth);
  EXPECT_EQ(r.users, 1000u);
  EXPECT_EQ(r.ownership_accuracy, 1.0);
  for (const auto* b : {&r.dog_owner, &r.cat_owner, &r.any_owner, &r.partner, &r.child}) EXPECT_EQ(b->f1(), 1.0);
  EXPECT_EQ(r.age_mae, 0.0);
  EXPECT_EQ(r.visual_mae, 0.0);
}

TEST(Evaluate, AllNoneBaseline) {
  std::vector<UserProfile> ps;
  for (const auto& u : default_corpus().truth.users)
    if (u.eligible) {
      ps.push_back(perfect_profile(u));
      ps.back().ownership = OwnershipLabel::none;
    }
  const auto r = evaluate_pipeline(ps, default_corpus().truth);
  EXPECT_EQ(r.ownership_accuracy, 0.5);
  EXPECT_EQ(r.any_owner.recall(), 0.0);
  EXPECT_EQ(r.any_owner.f1(), 0.0);
}

TEST(Evaluate, IdMismatchAndMissing) {
  const auto& truth = default_corpus().truth;
  std::vector<UserProfile> ps;
  for (const auto& u : truth.users)
    if (u.eligible) ps.push_back(perfect_profile(u));
  auto stranger = ps;
  stranger.back().user_id = "nobody";
  EXPECT_THROW(evaluate_pipeline(stranger, truth), EvaluationError);
  auto dup = ps;
  dup.push_back(ps.front());
  EXPECT_THROW(evaluate_pipeline(dup, truth), EvaluationError);
  auto fewer = ps;
  fewer.pop_back();
  EXPECT_THROW(evaluate_pipeline(fewer, truth), EvaluationError);
  const auto lenient = evaluate_pipeline(fewer, truth, false);
  EXPECT_EQ(lenient.missing, 1u);
  EXPECT_EQ(lenient.users, 999u);
  for (const auto& u : truth.users)
    if (!u.eligible) {
      auto with_decoy = ps;
      with_decoy.push_back(perfect_profile(u));
      EXPECT_THROW(evaluate_pipeline(with_decoy, truth), EvaluationError);
      break;
    }
}

TEST(Evaluate, NoiselessPipelineRecoversTruth) {
  const auto run = testsupport::run_mock(default_corpus(), analyzer());
  const auto r = evaluate_pipeline(run.profiles, default_corpus().truth);
  EXPECT_EQ(r.users, 1000u);
  EXPECT_EQ(r.dog_owner.f1(), 1.0);
  EXPECT_EQ(r.cat_owner.f1(), 1.0);
  EXPECT_EQ(r.partner.f1(), 1.0);
  EXPECT_EQ(r.child.f1(), 1.0);
  EXPECT_EQ(r.gender_accuracy, 1.0);
  EXPECT_EQ(r.race_accuracy, 1.0);
  EXPECT_EQ(r.age_mae, 0.0);
  // every decoy is dropped for the planted reason
  for (const auto& res : run.results) {
    const auto* t = default_corpus().truth.find(res.user_id);
    ASSERT_NE(t, nullptr);
    EXPECT_EQ(res.eligibility.reason, t->drop_reason) << res.user_id;
  }
}
