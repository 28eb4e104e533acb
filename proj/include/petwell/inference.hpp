#pragma once

// Identity and relationship inference from face groups: the account holder
// is the most frequent face; partner and child status follow from how often
// another face recurs and its age relative to the user.

#include <algorithm>
#include <array>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "petwell/corpus.hpp"
#include "petwell/faceclient.hpp"
#include "petwell/petclass.hpp"

namespace petwell {

struct Demographics {
  double age = 0.0;
  Gender gender = Gender::female;
  Race race = Race::caucasian;

  bool operator==(const Demographics&) const = default;
};

inline double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of empty sequence");
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return (lower + upper) / 2.0;
}

namespace detail {

/// Most frequent value; ties go to the value of the earliest member.
template <typename T, std::size_t N, typename Get>
T plurality(const std::vector<FaceObservation>& members, Get get) {
  std::array<std::size_t, N> counts{};
  for (const auto& m : members) ++counts[static_cast<std::size_t>(get(m))];
  const auto top = *std::max_element(counts.begin(), counts.end());
  for (const auto& m : members)
    if (counts[static_cast<std::size_t>(get(m))] == top) return get(m);
  return get(members.front());
}

}  // namespace detail

inline double group_age(const FaceGroup& group) {
  if (group.members.empty()) throw std::invalid_argument("face group is empty");
  std::vector<double> ages;
  ages.reserve(group.members.size());
  for (const auto& m : group.members) ages.push_back(m.age);
  return median(std::move(ages));
}

/// Median age, plurality gender and race.
inline Demographics group_demographics(const FaceGroup& group) {
  if (group.members.empty()) throw std::invalid_argument("face group is empty");
  return {group_age(group),
          detail::plurality<Gender, 2>(group.members, [](const FaceObservation& o) { return o.gender; }),
          detail::plurality<Race, 3>(group.members, [](const FaceObservation& o) { return o.race; })};
}

/// Index of the account holder's group: the largest, ties to the earliest
/// first appearance.
inline std::size_t identify_user_index(std::span<const FaceGroup> groups) {
  std::size_t best = groups.size();
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const auto& g = groups[i];
    if (g.members.empty()) continue;
    if (best == groups.size() || g.size() > groups[best].size() ||
        (g.size() == groups[best].size() && g.first_seen() < groups[best].first_seen()))
      best = i;
  }
  if (best == groups.size()) throw std::invalid_argument("no non-empty face group to identify the user");
  return best;
}

inline const FaceGroup& identify_user(std::span<const FaceGroup> groups) {
  return groups[identify_user_index(groups)];
}

struct RelationRules {
  std::size_t min_windows = 2;
  double partner_max_age_gap = 5.0;  // strict: gap < this
  double adult_age = 18.0;           // strict: user age > this
  double child_min_age_gap = 18.0;   // strict: user age - other age > this
  /// How many of the next most frequent faces are considered (0 = all).
  std::size_t max_candidates = 2;
};

/// The non-user groups, largest first, cut to the candidate limit.
inline std::vector<FaceGroup> relation_candidates(std::span<const FaceGroup> groups,
                                                  std::size_t user_index, const RelationRules& rules) {
  std::vector<FaceGroup> others;
  for (std::size_t i = 0; i < groups.size(); ++i)
    if (i != user_index && !groups[i].members.empty()) others.push_back(groups[i]);
  std::stable_sort(others.begin(), others.end(), [](const FaceGroup& a, const FaceGroup& b) {
    if (a.size() != b.size()) return a.size() > b.size();
    return a.first_seen() < b.first_seen();
  });
  if (rules.max_candidates > 0 && others.size() > rules.max_candidates) others.resize(rules.max_candidates);
  return others;
}

inline bool recurs(const FaceGroup& g, const RelationRules& rules) {
  return week_windows(g.timestamps()).size() >= rules.min_windows;
}

/// `others` is taken as given; use relation_candidates() to apply the rank limit.
inline bool infer_partner(const FaceGroup& user, std::span<const FaceGroup> others,
                          const RelationRules& rules = {}) {
  const double user_age = group_age(user);
  return std::any_of(others.begin(), others.end(), [&](const FaceGroup& g) {
    return recurs(g, rules) && std::abs(group_age(g) - user_age) < rules.partner_max_age_gap;
  });
}

/// The other person must be younger than the user by more than the gap.
inline bool infer_child(const FaceGroup& user, std::span<const FaceGroup> others,
                        const RelationRules& rules = {}) {
  const double user_age = group_age(user);
  if (!(user_age > rules.adult_age)) return false;
  return std::any_of(others.begin(), others.end(), [&](const FaceGroup& g) {
    return recurs(g, rules) && user_age - group_age(g) > rules.child_min_age_gap;
  });
}

struct UserProfile {
  std::string user_id;
  Demographics demographics;
  OwnershipLabel ownership = OwnershipLabel::none;
  bool has_partner = false;
  bool has_child = false;
  double visual_happiness = 0.0;   // H_t, [0, 100]
  double textual_happiness = 0.0;  // C_t, [-1, 1]
  std::size_t face_count = 0;
  std::size_t post_count = 0;

  bool operator==(const UserProfile&) const = default;
};

inline nlohmann::json profile_to_json(const UserProfile& p) {
  return {{"user_id", p.user_id},
          {"age", p.demographics.age},
          {"gender", to_string(p.demographics.gender)},
          {"race", to_string(p.demographics.race)},
          {"ownership", to_string(p.ownership)},
          {"has_partner", p.has_partner},
          {"has_child", p.has_child},
          {"visual_happiness", p.visual_happiness},
          {"textual_happiness", p.textual_happiness},
          {"face_count", p.face_count},
          {"post_count", p.post_count}};
}

inline UserProfile profile_from_json(const nlohmann::json& j) {
  UserProfile p;
  p.user_id = j.at("user_id").get<std::string>();
  p.demographics.age = j.at("age").get<double>();
  auto g = parse_gender(j.at("gender").get<std::string>());
  auto r = parse_race(j.at("race").get<std::string>());
  auto o = parse_ownership(j.at("ownership").get<std::string>());
  if (!g || !r || !o) throw std::runtime_error("profile " + p.user_id + ": bad enum value");
  p.demographics.gender = *g;
  p.demographics.race = *r;
  p.ownership = *o;
  p.has_partner = j.at("has_partner").get<bool>();
  p.has_child = j.at("has_child").get<bool>();
  p.visual_happiness = j.at("visual_happiness").get<double>();
  p.textual_happiness = j.at("textual_happiness").get<double>();
  p.face_count = j.at("face_count").get<std::size_t>();
  p.post_count = j.at("post_count").get<std::size_t>();
  return p;
}

inline void write_profiles(std::ostream& out, std::span<const UserProfile> profiles) {
  for (const auto& p : profiles) out << profile_to_json(p).dump() << '\n';
}

inline std::vector<UserProfile> read_profiles(std::istream& in) {
  std::vector<UserProfile> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(profile_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error("profiles line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace petwell
