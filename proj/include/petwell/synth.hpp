#pragma once

// Synthetic timelines with planted ground truth. Every eligible user is
// generated so that the ownership, partner and child rules have a known
// answer, including boundary cases that sit exactly on the rule thresholds.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <nlohmann/json.hpp>

#include "petwell/corpus.hpp"
#include "petwell/faceclient.hpp"
#include "petwell/inference.hpp"
#include "petwell/petclass.hpp"
#include "petwell/rng.hpp"
#include "petwell/sentiment.hpp"
#include "petwell/stats.hpp"

namespace petwell::synth {

struct SynthConfig {
  std::uint64_t seed = 2017;
  std::size_t n_users = 1000;
  std::size_t decoy_users = 20;  // ineligible users (too few posts or faces)

  double pet_fraction = 0.5;
  double dog_share = 0.5;  // of pet owners
  double partner_fraction = 0.5;
  double child_fraction = 0.25;

  double female_fraction = 0.69;
  std::array<double, 3> race_mix{0.21, 0.065, 0.725};  // asian, african_american, caucasian
  double minor_fraction = 0.03;                         // ages 15-17, never parents
  int adult_age_min = 19;
  int adult_age_max = 55;

  double single_week_pet_fraction = 0.1;  // of non-owners
  double relation_trap_fraction = 0.2;
  double tied_groups_fraction = 0.3;  // of users with both partner and child

  std::size_t posts_min = 25;
  std::size_t posts_max = 45;
  int weeks_span = 52;
  std::string start = "2017-01-02T00:00:00Z";  // a Monday, ISO 2017-W01

  double smile_none = 49.0;
  double smile_dog_effect = 12.6;
  double smile_cat_effect = 9.29;
  double smile_female_effect = 0.0;
  double smile_partner_effect = 0.0;
  double smile_child_effect = 0.0;
  double smile_user_sd = 15.0;  // between users
  double smile_face_sd = 20.0;  // between faces of one user

  double caption_positive_none = 0.40;
  double caption_negative_none = 0.12;
  double caption_positive_owner = 0.46;
  double caption_negative_owner = 0.09;
  double empty_caption_fraction = 0.05;

  void validate() const {
    auto frac = [](double v, const char* name) {
      if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument(std::string("synth config: ") + name + " must be in [0, 1]");
    };
    frac(pet_fraction, "pet_fraction");
    frac(dog_share, "dog_share");
    frac(partner_fraction, "partner_fraction");
    frac(child_fraction, "child_fraction");
    frac(female_fraction, "female_fraction");
    frac(minor_fraction, "minor_fraction");
    frac(single_week_pet_fraction, "single_week_pet_fraction");
    frac(relation_trap_fraction, "relation_trap_fraction");
    frac(tied_groups_fraction, "tied_groups_fraction");
    frac(empty_caption_fraction, "empty_caption_fraction");
    for (double r : race_mix) frac(r, "race_mix");
    if (std::abs(race_mix[0] + race_mix[1] + race_mix[2] - 1.0) > 1e-9)
      throw std::invalid_argument("synth config: race_mix must sum to 1");
    if (caption_positive_none + caption_negative_none > 1.0 || caption_positive_owner + caption_negative_owner > 1.0)
      throw std::invalid_argument("synth config: caption probabilities exceed 1");
    frac(caption_positive_none, "caption_positive_none");
    frac(caption_negative_none, "caption_negative_none");
    frac(caption_positive_owner, "caption_positive_owner");
    frac(caption_negative_owner, "caption_negative_owner");
    if (n_users == 0) throw std::invalid_argument("synth config: n_users must be positive");
    if (posts_min < 25) throw std::invalid_argument("synth config: posts_min must be >= 25 for eligible users");
    if (posts_max < posts_min) throw std::invalid_argument("synth config: posts_max < posts_min");
    if (weeks_span < 2) throw std::invalid_argument("synth config: weeks_span must be >= 2");
    if (adult_age_min < 19 || adult_age_max < std::max(adult_age_min, 36))
      throw std::invalid_argument("synth config: adult ages must start >= 19 and reach at least 36");
    if (!(smile_user_sd >= 0.0) || !(smile_face_sd > 0.0))
      throw std::invalid_argument("synth config: smile standard deviations must be positive");
    if (!parse_rfc3339(start)) throw std::invalid_argument("synth config: start is not RFC 3339");
  }

  nlohmann::json to_json() const {
    return {{"seed", seed},
            {"n_users", n_users},
            {"decoy_users", decoy_users},
            {"pet_fraction", pet_fraction},
            {"dog_share", dog_share},
            {"partner_fraction", partner_fraction},
            {"child_fraction", child_fraction},
            {"female_fraction", female_fraction},
            {"race_mix", race_mix},
            {"minor_fraction", minor_fraction},
            {"adult_age_min", adult_age_min},
            {"adult_age_max", adult_age_max},
            {"single_week_pet_fraction", single_week_pet_fraction},
            {"relation_trap_fraction", relation_trap_fraction},
            {"tied_groups_fraction", tied_groups_fraction},
            {"posts_min", posts_min},
            {"posts_max", posts_max},
            {"weeks_span", weeks_span},
            {"start", start},
            {"smile_none", smile_none},
            {"smile_dog_effect", smile_dog_effect},
            {"smile_cat_effect", smile_cat_effect},
            {"smile_female_effect", smile_female_effect},
            {"smile_partner_effect", smile_partner_effect},
            {"smile_child_effect", smile_child_effect},
            {"smile_user_sd", smile_user_sd},
            {"smile_face_sd", smile_face_sd},
            {"caption_positive_none", caption_positive_none},
            {"caption_negative_none", caption_negative_none},
            {"caption_positive_owner", caption_positive_owner},
            {"caption_negative_owner", caption_negative_owner},
            {"empty_caption_fraction", empty_caption_fraction}};
  }

  /// Keys missing from `j` keep their current values; unknown keys are rejected.
  void merge_json(const nlohmann::json& j) {
    const auto known = to_json();
    for (const auto& [key, _] : j.items())
      if (!known.contains(key)) throw std::invalid_argument("synth config: unknown key '" + key + "'");
    auto get = [&](const char* key, auto& field) {
      if (auto it = j.find(key); it != j.end()) it->get_to(field);
    };
    get("seed", seed);
    get("n_users", n_users);
    get("decoy_users", decoy_users);
    get("pet_fraction", pet_fraction);
    get("dog_share", dog_share);
    get("partner_fraction", partner_fraction);
    get("child_fraction", child_fraction);
    get("female_fraction", female_fraction);
    get("race_mix", race_mix);
    get("minor_fraction", minor_fraction);
    get("adult_age_min", adult_age_min);
    get("adult_age_max", adult_age_max);
    get("single_week_pet_fraction", single_week_pet_fraction);
    get("relation_trap_fraction", relation_trap_fraction);
    get("tied_groups_fraction", tied_groups_fraction);
    get("posts_min", posts_min);
    get("posts_max", posts_max);
    get("weeks_span", weeks_span);
    get("start", start);
    get("smile_none", smile_none);
    get("smile_dog_effect", smile_dog_effect);
    get("smile_cat_effect", smile_cat_effect);
    get("smile_female_effect", smile_female_effect);
    get("smile_partner_effect", smile_partner_effect);
    get("smile_child_effect", smile_child_effect);
    get("smile_user_sd", smile_user_sd);
    get("smile_face_sd", smile_face_sd);
    get("caption_positive_none", caption_positive_none);
    get("caption_negative_none", caption_negative_none);
    get("caption_positive_owner", caption_positive_owner);
    get("caption_negative_owner", caption_negative_owner);
    get("empty_caption_fraction", empty_caption_fraction);
  }
};

enum class Trap {
  none,
  single_week_pet,     // non-owner posting pet images inside one ISO week
  partner_gap5,        // recurring face exactly 5 years apart
  single_week_friend,  // close-in-age face seen in one week only
  child_gap18,         // recurring face exactly 18 years younger
  minor_with_young,    // user aged 15-17 with a recurring young face
  tied_groups,         // partner and child face sets of equal size
};

inline const char* to_string(Trap t) {
  switch (t) {
    case Trap::none: return "none";
    case Trap::single_week_pet: return "single_week_pet";
    case Trap::partner_gap5: return "partner_gap5";
    case Trap::single_week_friend: return "single_week_friend";
    case Trap::child_gap18: return "child_gap18";
    case Trap::minor_with_young: return "minor_with_young";
    case Trap::tied_groups: return "tied_groups";
  }
  return "?";
}

struct UserTruth {
  std::string user_id;
  bool eligible = true;
  DropReason drop_reason = DropReason::none;
  OwnershipLabel ownership = OwnershipLabel::none;
  bool has_partner = false;
  bool has_child = false;
  Demographics demographics;
  double smile_mean = 0.0;    // planted per-user expected smiling
  double caption_mean = 0.0;  // expected caption compound
  std::vector<Trap> traps;
};

struct StratumMeans {
  double smile_dog = 0.0, smile_cat = 0.0, smile_none = 0.0;
  double caption_owner = 0.0, caption_none = 0.0;
};

struct GroundTruth {
  std::vector<UserTruth> users;
  StratumMeans planted;

  const UserTruth* find(const std::string& id) const {
    auto it = std::lower_bound(users.begin(), users.end(), id,
                               [](const UserTruth& u, const std::string& k) { return u.user_id < k; });
    return it != users.end() && it->user_id == id ? &*it : nullptr;
  }
};

struct SynthCorpus {
  std::vector<Post> posts;
  std::vector<std::pair<std::string, PetLabel>> labels;              // image_ref -> true label
  std::vector<std::pair<std::string, std::vector<DetectedFace>>> faces;  // image_ref -> annotated faces
  GroundTruth truth;

  std::unordered_map<std::string, PetLabel> label_map() const { return {labels.begin(), labels.end()}; }
  FaceAnnotations annotation_map() const { return {faces.begin(), faces.end()}; }
};

/// Caption templates by polarity. Their compound scores are computed with
/// the analyzer handed to the generator.
struct CaptionPools {
  std::vector<std::string> positive{"Best day ever :)",
                                    "Love this little guy so much!",
                                    "So happy right now",
                                    "Sunday funday with the crew lol",
                                    "Feeling blessed and grateful",
                                    "Beautiful morning walk :D",
                                    "This made me smile",
                                    "Great times with great people!!",
                                    "Cuddles are the best <3",
                                    "Good vibes only",
                                    "Yay weekend!",
                                    "Awesome trip with my favorite people"};
  std::vector<std::string> neutral{"Throwback",     "Monday again",          "On the way to work", "Lunch",
                                   "New haircut",   "At the park",           "Rainy day in the city",
                                   "Saturday morning"};
  std::vector<std::string> negative{"Ugh, so tired today",     "Missing summer already :(",
                                    "Worst traffic ever",      "Feeling sick and bored",
                                    "Sad day",                 "Why is everything so hard",
                                    "Can't sleep again...",    "Lost my keys, terrible morning",
                                    "Not a good week",         "So lonely tonight"};
};

namespace detail {

inline double mean_compound(const std::vector<std::string>& pool, const SentimentAnalyzer& a) {
  double s = 0.0;
  for (const auto& c : pool) s += a.compound(c);
  return s / static_cast<double>(pool.size());
}

/// Mean of N(loc, sd) truncated to [0, 100].
inline double truncated_mean(double loc, double sd) {
  const double a = (0.0 - loc) / sd, b = (100.0 - loc) / sd;
  const double z = stats::normal_cdf(b) - stats::normal_cdf(a);
  return loc + sd * (stats::normal_pdf(a) - stats::normal_pdf(b)) / z;
}

/// Location whose [0, 100]-truncated mean equals target.
inline double truncated_location(double target, double sd) {
  double lo = -300.0, hi = 400.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (truncated_mean(mid, sd) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline double sample_truncated(Rng& rng, double loc, double sd) {
  const boost::math::normal_distribution<double> n(loc, sd);
  const double pa = boost::math::cdf(n, 0.0), pb = boost::math::cdf(n, 100.0);
  double u = pa + (pb - pa) * rng.uniform();
  u = std::clamp(u, std::nextafter(pa, 1.0), std::nextafter(pb, 0.0));
  return std::clamp(boost::math::quantile(n, u), 0.0, 100.0);
}

inline double round2(double v) { return std::round(v * 100.0) / 100.0; }

inline std::string padded(const char* prefix, std::size_t v, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, v);
  return buf;
}

struct Person {
  std::string token;
  double age = 0;
  Gender gender = Gender::female;
  Race race = Race::caucasian;
};

enum class WeekMode { any, multi, single };

struct Slot {
  int week = -1;
  PetLabel pet = PetLabel::other;
  std::vector<std::size_t> persons;  // indexes into the user's Person list
};

/// Chooses `k` distinct slots from `pool` and removes them from it.
inline std::vector<std::size_t> take_slots(Rng& rng, std::vector<std::size_t>& pool, std::size_t k) {
  if (k > pool.size()) throw std::logic_error("synth: not enough free posts");
  rng.shuffle(pool);
  std::vector<std::size_t> out(pool.end() - static_cast<std::ptrdiff_t>(k), pool.end());
  pool.resize(pool.size() - k);
  std::sort(out.begin(), out.end());
  return out;
}

inline void assign_weeks(Rng& rng, std::vector<Slot>& slots, const std::vector<std::size_t>& chosen, WeekMode mode,
                         int span) {
  if (chosen.empty()) return;
  const int w0 = static_cast<int>(rng.uniform_int(0, span - 1));
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    int w = w0;
    if (mode == WeekMode::single) {
      w = w0;
    } else if (i == 1 && mode == WeekMode::multi) {
      w = static_cast<int>(rng.uniform_int(0, span - 2));
      if (w >= w0) ++w;
    } else if (i > 0) {
      w = static_cast<int>(rng.uniform_int(0, span - 1));
    }
    slots[chosen[i]].week = w;
  }
}

struct UserPlan {
  std::string user_id;
  OwnershipLabel ownership = OwnershipLabel::none;
  bool has_partner = false;
  bool has_child = false;
  Trap pet_trap = Trap::none;
  Trap relation_trap = Trap::none;
  bool tied = false;
  DropReason decoy = DropReason::none;
};

/// Exact-count planting: the first `count` shuffled indexes get the flag.
inline std::vector<bool> plant(Rng& rng, std::size_t n, std::size_t count) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  rng.shuffle(idx);
  std::vector<bool> out(n, false);
  for (std::size_t i = 0; i < std::min(count, n); ++i) out[idx[i]] = true;
  return out;
}

inline std::size_t planted_count(std::size_t n, double fraction) {
  return static_cast<std::size_t>(std::llround(static_cast<double>(n) * fraction));
}

}  // namespace detail

class Generator {
 public:
  Generator(SynthConfig config, const SentimentAnalyzer& analyzer, CaptionPools pools = {})
      : cfg_(std::move(config)), analyzer_(analyzer), pools_(std::move(pools)) {
    cfg_.validate();
    pos_mean_ = detail::mean_compound(pools_.positive, analyzer_);
    neu_mean_ = detail::mean_compound(pools_.neutral, analyzer_);
    neg_mean_ = detail::mean_compound(pools_.negative, analyzer_);
    start_ = *parse_rfc3339(cfg_.start);
  }

  double expected_caption(bool owner) const {
    const double p = owner ? cfg_.caption_positive_owner : cfg_.caption_positive_none;
    const double n = owner ? cfg_.caption_negative_owner : cfg_.caption_negative_none;
    return (1.0 - cfg_.empty_caption_fraction) * (p * pos_mean_ + n * neg_mean_ + (1.0 - p - n) * neu_mean_);
  }

  double stratum_smile(OwnershipLabel o) const {
    return cfg_.smile_none + (o == OwnershipLabel::dog_owner   ? cfg_.smile_dog_effect
                              : o == OwnershipLabel::cat_owner ? cfg_.smile_cat_effect
                                                               : 0.0);
  }

  SynthCorpus generate() const {
    Rng rng(cfg_.seed);
    const auto plans = plan_users(rng);
    SynthCorpus out;
    out.truth.planted = {stratum_smile(OwnershipLabel::dog_owner), stratum_smile(OwnershipLabel::cat_owner),
                         stratum_smile(OwnershipLabel::none), expected_caption(true), expected_caption(false)};
    for (std::size_t i = 0; i < plans.size(); ++i) {
      Rng user_rng(mix64(cfg_.seed) ^ mix64(i + 1));
      generate_user(user_rng, plans[i], out);
    }
    std::sort(out.truth.users.begin(), out.truth.users.end(),
              [](const UserTruth& a, const UserTruth& b) { return a.user_id < b.user_id; });
    return out;
  }

 private:
  std::vector<detail::UserPlan> plan_users(Rng& rng) const {
    const std::size_t n = cfg_.n_users;
    const std::size_t width = std::to_string(n + cfg_.decoy_users).size() < 5 ? 5 : std::to_string(n + cfg_.decoy_users).size();
    std::vector<detail::UserPlan> plans(n + cfg_.decoy_users);
    for (std::size_t i = 0; i < plans.size(); ++i) plans[i].user_id = detail::padded("u", i, static_cast<int>(width));

    const std::size_t n_pet = detail::planted_count(n, cfg_.pet_fraction);
    const std::size_t n_dog = detail::planted_count(n_pet, cfg_.dog_share);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    for (std::size_t r = 0; r < n; ++r)
      plans[order[r]].ownership = r < n_dog ? OwnershipLabel::dog_owner
                                  : r < n_pet ? OwnershipLabel::cat_owner
                                              : OwnershipLabel::none;
    const auto partner = detail::plant(rng, n, detail::planted_count(n, cfg_.partner_fraction));
    const auto child = detail::plant(rng, n, detail::planted_count(n, cfg_.child_fraction));
    for (std::size_t i = 0; i < n; ++i) {
      plans[i].has_partner = partner[i];
      plans[i].has_child = child[i];
    }

    // single-week pet posters among non-owners; at least one when any non-owner exists
    std::vector<std::size_t> non_owners;
    for (std::size_t i = 0; i < n; ++i)
      if (plans[i].ownership == OwnershipLabel::none) non_owners.push_back(i);
    rng.shuffle(non_owners);
    for (std::size_t r = 0; r < non_owners.size(); ++r)
      if (r == 0 || rng.bernoulli(cfg_.single_week_pet_fraction)) plans[non_owners[r]].pet_trap = Trap::single_week_pet;

    // relation traps go to users lacking at least one relation, so the trap
    // face never pushes a real partner or child out of the candidate ranks
    std::vector<std::size_t> open;
    for (std::size_t i = 0; i < n; ++i)
      if (!(plans[i].has_partner && plans[i].has_child)) open.push_back(i);
    rng.shuffle(open);
    const std::array<Trap, 4> forced{Trap::partner_gap5, Trap::single_week_friend, Trap::child_gap18,
                                     Trap::minor_with_young};
    for (std::size_t r = 0; r < open.size(); ++r) {
      auto& p = plans[open[r]];
      if (r < forced.size()) {
        p.relation_trap = forced[r];
      } else if (rng.bernoulli(cfg_.relation_trap_fraction)) {
        const std::array<Trap, 3> kinds{Trap::partner_gap5, Trap::single_week_friend, Trap::child_gap18};
        p.relation_trap = kinds[static_cast<std::size_t>(rng.uniform_int(0, 2))];
      }
      if (p.relation_trap == Trap::minor_with_young) p.has_child = false;
    }

    std::vector<std::size_t> both;
    for (std::size_t i = 0; i < n; ++i)
      if (plans[i].has_partner && plans[i].has_child) both.push_back(i);
    for (std::size_t r = 0; r < both.size(); ++r)
      if (r == 0 || rng.bernoulli(cfg_.tied_groups_fraction)) plans[both[r]].tied = true;

    for (std::size_t d = 0; d < cfg_.decoy_users; ++d)
      plans[n + d].decoy = d % 2 == 0 ? DropReason::too_few_posts : DropReason::too_few_faces;
    return plans;
  }

  void generate_user(Rng& rng, const detail::UserPlan& plan, SynthCorpus& out) const {
    using detail::Person;
    using detail::WeekMode;
    const bool decoy = plan.decoy != DropReason::none;
    const bool owner = plan.ownership != OwnershipLabel::none;

    Person self{plan.user_id + "/self", 0, rng.bernoulli(cfg_.female_fraction) ? Gender::female : Gender::male,
                draw_race(rng)};
    const bool minor = plan.relation_trap == Trap::minor_with_young ||
                       (!decoy && !plan.has_child && plan.relation_trap == Trap::none && rng.bernoulli(cfg_.minor_fraction));
    if (minor) {
      self.age = static_cast<double>(rng.uniform_int(15, 17));
    } else if (plan.has_child || plan.relation_trap == Trap::child_gap18) {
      self.age = static_cast<double>(rng.uniform_int(std::max(cfg_.adult_age_min, 36), cfg_.adult_age_max));
    } else {
      self.age = static_cast<double>(rng.uniform_int(cfg_.adult_age_min, cfg_.adult_age_max));
    }

    std::size_t n_posts;
    if (plan.decoy == DropReason::too_few_posts) {
      n_posts = static_cast<std::size_t>(rng.uniform_int(10, 24));
    } else {
      n_posts = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(cfg_.posts_min),
                                                         static_cast<std::int64_t>(cfg_.posts_max)));
    }
    std::vector<detail::Slot> slots(n_posts);
    std::vector<std::size_t> free(n_posts);
    std::iota(free.begin(), free.end(), 0);

    // pet images
    if (!decoy && owner) {
      const auto species = plan.ownership == OwnershipLabel::dog_owner ? PetLabel::dog : PetLabel::cat;
      const auto chosen = detail::take_slots(rng, free, static_cast<std::size_t>(rng.uniform_int(2, 6)));
      detail::assign_weeks(rng, slots, chosen, WeekMode::multi, cfg_.weeks_span);
      for (auto s : chosen) slots[s].pet = species;
      if (rng.bernoulli(0.2)) {
        const auto stray = detail::take_slots(rng, free, 1);
        detail::assign_weeks(rng, slots, stray, WeekMode::single, cfg_.weeks_span);
        slots[stray[0]].pet = species == PetLabel::dog ? PetLabel::cat : PetLabel::dog;
      }
    } else if (!decoy && plan.pet_trap == Trap::single_week_pet) {
      const auto species = rng.bernoulli(0.5) ? PetLabel::dog : PetLabel::cat;
      const auto chosen = detail::take_slots(rng, free, static_cast<std::size_t>(rng.uniform_int(2, 5)));
      detail::assign_weeks(rng, slots, chosen, WeekMode::single, cfg_.weeks_span);
      for (auto s : chosen) slots[s].pet = species;
    }

    std::vector<Person> people{self};
    std::size_t max_other = 0;
    auto add_person = [&](const char* role, double age, std::size_t count, WeekMode mode) {
      people.push_back({plan.user_id + "/" + role, std::max(0.0, age),
                        rng.bernoulli(0.5) ? Gender::female : Gender::male, draw_race(rng)});
      const auto chosen = detail::take_slots(rng, free, count);
      detail::assign_weeks(rng, slots, chosen, mode, cfg_.weeks_span);
      for (auto s : chosen) slots[s].persons.push_back(people.size() - 1);
      max_other = std::max(max_other, count);
    };

    if (!decoy) {
      std::size_t partner_count = static_cast<std::size_t>(rng.uniform_int(2, 6));
      std::size_t child_count = static_cast<std::size_t>(rng.uniform_int(2, 6));
      if (plan.tied) child_count = partner_count;
      if (plan.has_partner) {
        const double gap = static_cast<double>(rng.uniform_int(-4, 4));
        add_person("partner", self.age + (self.age + gap < 15 ? std::abs(gap) : gap), partner_count, WeekMode::multi);
      }
      if (plan.has_child) {
        const auto gap = rng.uniform_int(19, std::min<std::int64_t>(35, static_cast<std::int64_t>(self.age)));
        add_person("child", self.age - static_cast<double>(gap), child_count, WeekMode::multi);
      }
      const auto trap_count = static_cast<std::size_t>(rng.uniform_int(2, 3));
      switch (plan.relation_trap) {
        case Trap::partner_gap5:
          add_person("friend", self.age + (rng.bernoulli(0.5) || self.age < 20 ? 5.0 : -5.0), trap_count,
                     WeekMode::multi);
          break;
        case Trap::single_week_friend:
          add_person("friend", self.age + static_cast<double>(rng.uniform_int(0, 4)), trap_count, WeekMode::single);
          break;
        case Trap::child_gap18:
          add_person("relative", self.age - 18.0, trap_count, WeekMode::multi);
          break;
        case Trap::minor_with_young:
          add_person("sibling", 1.0, trap_count, WeekMode::multi);
          break;
        default:
          break;
      }
    }

    // the account holder: strictly the most frequent face
    std::size_t user_faces;
    if (plan.decoy == DropReason::too_few_faces) {
      user_faces = static_cast<std::size_t>(rng.uniform_int(1, 4));
    } else if (plan.decoy == DropReason::too_few_posts) {
      user_faces = static_cast<std::size_t>(rng.uniform_int(5, static_cast<std::int64_t>(n_posts)));
    } else {
      const auto lo = std::max<std::size_t>(6, max_other + 1);
      const auto hi = std::max(lo, n_posts * 6 / 10);
      user_faces = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(lo), static_cast<std::int64_t>(hi)));
    }
    {
      std::vector<std::size_t> all(n_posts);
      std::iota(all.begin(), all.end(), 0);
      for (auto s : detail::take_slots(rng, all, user_faces)) slots[s].persons.push_back(0);
    }
    // one-off strangers
    const auto strangers = rng.uniform_int(0, plan.decoy == DropReason::too_few_faces ? 0 : 3);
    for (std::int64_t k = 0; k < strangers; ++k) {
      people.push_back({plan.user_id + "/stranger" + std::to_string(k),
                        static_cast<double>(rng.uniform_int(5, 70)),
                        rng.bernoulli(0.5) ? Gender::female : Gender::male, draw_race(rng)});
      slots[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n_posts) - 1))].persons.push_back(
          people.size() - 1);
    }

    for (auto& s : slots)
      if (s.week < 0) s.week = static_cast<int>(rng.uniform_int(0, cfg_.weeks_span - 1));

    // happiness
    double smile_target = stratum_smile(plan.ownership);
    if (self.gender == Gender::female) smile_target += cfg_.smile_female_effect;
    if (plan.has_partner) smile_target += cfg_.smile_partner_effect;
    if (plan.has_child) smile_target += cfg_.smile_child_effect;
    smile_target = std::clamp(smile_target + rng.normal(0.0, cfg_.smile_user_sd), 5.0, 95.0);
    const double smile_loc = detail::truncated_location(smile_target, cfg_.smile_face_sd);

    const double p_pos = owner ? cfg_.caption_positive_owner : cfg_.caption_positive_none;
    const double p_neg = owner ? cfg_.caption_negative_owner : cfg_.caption_negative_none;

    // timestamps, then ids in time order
    std::vector<Instant> times(n_posts);
    for (std::size_t s = 0; s < n_posts; ++s)
      times[s] = start_ + std::chrono::days(7 * slots[s].week) +
                 std::chrono::seconds(rng.uniform_int(0, 7 * 86400 - 1));
    std::vector<std::size_t> order(n_posts);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return times[a] < times[b]; });

    for (std::size_t rank = 0; rank < n_posts; ++rank) {
      const auto& slot = slots[order[rank]];
      Post post;
      post.post_id = plan.user_id + "-" + detail::padded("p", rank, 3);
      post.user_id = plan.user_id;
      post.timestamp = times[order[rank]];
      post.image_ref = "img/" + plan.user_id + "/" + detail::padded("", rank, 3) + ".jpg";
      post.caption = draw_caption(rng, p_pos, p_neg);
      if (slot.pet == PetLabel::dog) post.hashtags = {"dogsofinstagram", "mydog"};
      if (slot.pet == PetLabel::cat) post.hashtags = {"catsofinstagram", "mycat"};
      if (rng.bernoulli(0.3)) post.hashtags.insert(rng.bernoulli(0.5) ? "tbt" : "weekend");

      std::vector<DetectedFace> faces;
      for (auto pi : slot.persons) {
        const auto& who = people[pi];
        DetectedFace f;
        f.bbox = {static_cast<int>(rng.uniform_int(0, 600)), static_cast<int>(rng.uniform_int(0, 600)),
                  static_cast<int>(rng.uniform_int(40, 200)), 0};
        f.bbox.h = f.bbox.w;
        f.age = who.age;
        f.gender = who.gender;
        f.race = who.race;
        f.smiling = pi == 0 ? detail::round2(detail::sample_truncated(rng, smile_loc, cfg_.smile_face_sd))
                            : detail::round2(rng.uniform(0.0, 100.0));
        f.token = who.token;
        faces.push_back(std::move(f));
      }
      rng.shuffle(faces);
      out.labels.emplace_back(post.image_ref, slot.pet);
      out.faces.emplace_back(post.image_ref, std::move(faces));
      out.posts.push_back(std::move(post));
    }

    UserTruth t;
    t.user_id = plan.user_id;
    t.eligible = !decoy;
    t.drop_reason = plan.decoy;
    t.ownership = plan.ownership;
    t.has_partner = plan.has_partner;
    t.has_child = plan.has_child;
    t.demographics = {self.age, self.gender, self.race};
    t.smile_mean = smile_target;
    t.caption_mean = expected_caption(owner);
    if (plan.pet_trap != Trap::none) t.traps.push_back(plan.pet_trap);
    if (plan.relation_trap != Trap::none) t.traps.push_back(plan.relation_trap);
    if (plan.tied) t.traps.push_back(Trap::tied_groups);
    out.truth.users.push_back(std::move(t));
  }

  Race draw_race(Rng& rng) const {
    const double u = rng.uniform();
    if (u < cfg_.race_mix[0]) return Race::asian;
    if (u < cfg_.race_mix[0] + cfg_.race_mix[1]) return Race::african_american;
    return Race::caucasian;
  }

  std::string draw_caption(Rng& rng, double p_pos, double p_neg) const {
    if (rng.bernoulli(cfg_.empty_caption_fraction)) return {};
    const double u = rng.uniform();
    const auto& pool = u < p_pos ? pools_.positive : u < p_pos + p_neg ? pools_.negative : pools_.neutral;
    return pool[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(pool.size()) - 1))];
  }

  SynthConfig cfg_;
  const SentimentAnalyzer& analyzer_;
  CaptionPools pools_;
  double pos_mean_ = 0, neu_mean_ = 0, neg_mean_ = 0;
  Instant start_{};
};

inline SynthCorpus generate_corpus(const SynthConfig& config, const SentimentAnalyzer& analyzer) {
  return Generator(config, analyzer).generate();
}

inline nlohmann::json truth_to_json(const UserTruth& t) {
  auto traps = nlohmann::json::array();
  for (auto tr : t.traps) traps.push_back(to_string(tr));
  return {{"user_id", t.user_id},
          {"eligible", t.eligible},
          {"drop_reason", to_string(t.drop_reason)},
          {"ownership", to_string(t.ownership)},
          {"has_partner", t.has_partner},
          {"has_child", t.has_child},
          {"age", t.demographics.age},
          {"gender", to_string(t.demographics.gender)},
          {"race", to_string(t.demographics.race)},
          {"smile_mean", t.smile_mean},
          {"caption_mean", t.caption_mean},
          {"traps", std::move(traps)}};
}

inline UserTruth truth_from_json(const nlohmann::json& j) {
  UserTruth t;
  t.user_id = j.at("user_id").get<std::string>();
  t.eligible = j.at("eligible").get<bool>();
  const auto reason = j.at("drop_reason").get<std::string>();
  t.drop_reason = reason == "too_few_posts"   ? DropReason::too_few_posts
                  : reason == "too_few_faces" ? DropReason::too_few_faces
                                              : DropReason::none;
  auto o = parse_ownership(j.at("ownership").get<std::string>());
  auto g = parse_gender(j.at("gender").get<std::string>());
  auto r = parse_race(j.at("race").get<std::string>());
  if (!o || !g || !r) throw std::runtime_error("truth record " + t.user_id + ": bad enum value");
  t.ownership = *o;
  t.has_partner = j.at("has_partner").get<bool>();
  t.has_child = j.at("has_child").get<bool>();
  t.demographics = {j.at("age").get<double>(), *g, *r};
  t.smile_mean = j.at("smile_mean").get<double>();
  t.caption_mean = j.at("caption_mean").get<double>();
  return t;
}

inline GroundTruth read_truth(std::istream& in) {
  GroundTruth g;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto j = nlohmann::json::parse(line);
    if (j.contains("planted")) {
      const auto& p = j.at("planted");
      g.planted = {p.at("smile_dog").get<double>(), p.at("smile_cat").get<double>(), p.at("smile_none").get<double>(),
                   p.at("caption_owner").get<double>(), p.at("caption_none").get<double>()};
    } else {
      g.users.push_back(truth_from_json(j));
    }
  }
  std::sort(g.users.begin(), g.users.end(), [](const auto& a, const auto& b) { return a.user_id < b.user_id; });
  return g;
}

/// Writes corpus.ndjson, labels.tsv, faces.ndjson, truth.ndjson and synth_config.json.
inline void write_corpus_files(const std::filesystem::path& dir, const SynthCorpus& c, const SynthConfig& cfg) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
    return f;
  };
  {
    auto f = open("corpus.ndjson");
    for (const auto& p : c.posts) f << post_to_json(p).dump() << '\n';
  }
  {
    auto f = open("labels.tsv");
    for (const auto& [ref, label] : c.labels) f << ref << '\t' << to_string(label) << '\n';
  }
  {
    auto f = open("faces.ndjson");
    for (const auto& [ref, faces] : c.faces) f << annotation_record(ref, faces).dump() << '\n';
  }
  {
    auto f = open("truth.ndjson");
    const auto& p = c.truth.planted;
    f << nlohmann::json{{"planted",
                         {{"smile_dog", p.smile_dog},
                          {"smile_cat", p.smile_cat},
                          {"smile_none", p.smile_none},
                          {"caption_owner", p.caption_owner},
                          {"caption_none", p.caption_none}}}}
             .dump()
      << '\n';
    for (const auto& u : c.truth.users) f << truth_to_json(u).dump() << '\n';
  }
  {
    auto f = open("synth_config.json");
    f << cfg.to_json().dump(2) << '\n';
  }
}

struct BinaryScore {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;

  void add(bool truth, bool predicted) {
    if (truth && predicted) ++tp;
    else if (!truth && predicted) ++fp;
    else if (truth && !predicted) ++fn;
    else ++tn;
  }
  /// With no positives on either side every score is 1.
  double precision() const { return tp + fp == 0 ? (fn == 0 ? 1.0 : 0.0) : static_cast<double>(tp) / static_cast<double>(tp + fp); }
  double recall() const { return tp + fn == 0 ? (fp == 0 ? 1.0 : 0.0) : static_cast<double>(tp) / static_cast<double>(tp + fn); }
  double f1() const {
    const double p = precision(), r = recall();
    return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
  }
};

struct EvaluationReport {
  std::size_t users = 0;
  std::size_t missing = 0;  // eligible in truth but without a profile (lenient mode only)
  double ownership_accuracy = 0.0;
  BinaryScore dog_owner, cat_owner, any_owner, partner, child;
  double age_mae = 0.0;
  double gender_accuracy = 0.0;
  double race_accuracy = 0.0;
  double visual_mae = 0.0;
  double textual_mae = 0.0;

  double ownership_macro_f1() const { return (dog_owner.f1() + cat_owner.f1()) / 2.0; }
};

class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Compares profiles with planted truth. No profile may belong to an unknown
/// or ineligible user. In strict mode every eligible truth user must have a
/// profile; otherwise users the pipeline dropped are counted as missing and
/// left out of the scores.
inline EvaluationReport evaluate_pipeline(std::span<const UserProfile> profiles, const GroundTruth& truth,
                                          bool strict = true) {
  std::map<std::string, const UserProfile*> by_id;
  for (const auto& p : profiles) {
    const auto* t = truth.find(p.user_id);
    if (!t) throw EvaluationError("profile for unknown user " + p.user_id);
    if (!t->eligible) throw EvaluationError("profile for ineligible user " + p.user_id);
    if (!by_id.emplace(p.user_id, &p).second) throw EvaluationError("duplicate profile for " + p.user_id);
  }
  EvaluationReport r;
  std::size_t own_ok = 0, gender_ok = 0, race_ok = 0;
  for (const auto& t : truth.users) {
    if (!t.eligible) continue;
    auto it = by_id.find(t.user_id);
    if (it == by_id.end()) {
      if (strict) throw EvaluationError("no profile for eligible user " + t.user_id);
      ++r.missing;
      continue;
    }
    const auto& p = *it->second;
    ++r.users;
    own_ok += p.ownership == t.ownership;
    r.dog_owner.add(t.ownership == OwnershipLabel::dog_owner, p.ownership == OwnershipLabel::dog_owner);
    r.cat_owner.add(t.ownership == OwnershipLabel::cat_owner, p.ownership == OwnershipLabel::cat_owner);
    r.any_owner.add(t.ownership != OwnershipLabel::none, p.ownership != OwnershipLabel::none);
    r.partner.add(t.has_partner, p.has_partner);
    r.child.add(t.has_child, p.has_child);
    r.age_mae += std::abs(p.demographics.age - t.demographics.age);
    gender_ok += p.demographics.gender == t.demographics.gender;
    race_ok += p.demographics.race == t.demographics.race;
    r.visual_mae += std::abs(p.visual_happiness - t.smile_mean);
    r.textual_mae += std::abs(p.textual_happiness - t.caption_mean);
  }
  if (r.users > 0) {
    const auto n = static_cast<double>(r.users);
    r.ownership_accuracy = static_cast<double>(own_ok) / n;
    r.gender_accuracy = static_cast<double>(gender_ok) / n;
    r.race_accuracy = static_cast<double>(race_ok) / n;
    r.age_mae /= n;
    r.visual_mae /= n;
    r.textual_mae /= n;
  }
  return r;
}

inline nlohmann::json evaluation_json(const EvaluationReport& r) {
  auto bin = [](const BinaryScore& b) {
    return nlohmann::json{{"tp", b.tp},
                          {"fp", b.fp},
                          {"fn", b.fn},
                          {"tn", b.tn},
                          {"precision", b.precision()},
                          {"recall", b.recall()},
                          {"f1", b.f1()}};
  };
  return {{"users", r.users},
          {"missing", r.missing},
          {"ownership_accuracy", r.ownership_accuracy},
          {"ownership_macro_f1", r.ownership_macro_f1()},
          {"dog_owner", bin(r.dog_owner)},
          {"cat_owner", bin(r.cat_owner)},
          {"any_owner", bin(r.any_owner)},
          {"partner", bin(r.partner)},
          {"child", bin(r.child)},
          {"age_mae", r.age_mae},
          {"gender_accuracy", r.gender_accuracy},
          {"race_accuracy", r.race_accuracy},
          {"visual_mae", r.visual_mae},
          {"textual_mae", r.textual_mae}};
}

}  // namespace petwell::synth
