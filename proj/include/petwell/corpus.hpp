#pragma once

// Timeline data model, newline-delimited corpus ingestion, ISO-week windowing
// and the per-user eligibility filter.

#include <algorithm>
#include <cctype>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "petwell/timeutil.hpp"

namespace petwell {

struct Post {
  std::string post_id;
  std::string user_id;
  Instant timestamp{};
  std::string image_ref;
  std::string caption;
  std::set<std::string> hashtags;  // lowercase, no leading '#'

  bool operator==(const Post&) const = default;
};

struct Timeline {
  std::string user_id;
  std::vector<Post> posts;  // ascending by timestamp

  std::size_t size() const { return posts.size(); }
  bool operator==(const Timeline&) const = default;
};

using TimelineMap = std::map<std::string, Timeline>;

struct UserIngestCounts {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
};

struct IngestReport {
  std::size_t lines = 0;
  std::size_t accepted = 0;
  std::size_t malformed = 0;
  std::size_t duplicates = 0;
  std::map<std::string, UserIngestCounts> per_user;

  std::size_t rejected() const { return malformed + duplicates; }
};

struct IngestResult {
  TimelineMap timelines;
  IngestReport report;
};

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string normalize_hashtag(std::string_view tag) {
  while (!tag.empty() && tag.front() == '#') tag.remove_prefix(1);
  std::string out(tag);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

inline nlohmann::json post_to_json(const Post& p) {
  return {{"post_id", p.post_id},     {"user_id", p.user_id},
          {"timestamp", format_rfc3339(p.timestamp)},
          {"image_ref", p.image_ref}, {"caption", p.caption},
          {"hashtags", p.hashtags}};
}

/// Parses one corpus record. Returns nullopt when a required field is missing
/// or has the wrong type, or the timestamp is not RFC 3339.
inline std::optional<Post> post_from_json(const nlohmann::json& j) {
  if (!j.is_object()) return std::nullopt;
  auto str = [&](const char* key) -> const std::string* {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) return nullptr;
    return it->get_ptr<const std::string*>();
  };
  const auto* post_id = str("post_id");
  const auto* user_id = str("user_id");
  const auto* ts = str("timestamp");
  const auto* image_ref = str("image_ref");
  if (!post_id || !user_id || !ts || !image_ref || post_id->empty() || user_id->empty())
    return std::nullopt;
  auto instant = parse_rfc3339(*ts);
  if (!instant) return std::nullopt;

  Post p{*post_id, *user_id, *instant, *image_ref, {}, {}};
  if (auto it = j.find("caption"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) return std::nullopt;
    p.caption = it->get<std::string>();
  }
  if (auto it = j.find("hashtags"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) return std::nullopt;
    for (const auto& tag : *it) {
      if (!tag.is_string()) return std::nullopt;
      auto norm = normalize_hashtag(tag.get<std::string>());
      if (!norm.empty()) p.hashtags.insert(std::move(norm));
    }
  }
  return p;
}

/// Groups records into per-user timelines sorted by timestamp. Malformed
/// records and repeated post_ids (first occurrence wins) are counted, not fatal.
inline IngestResult ingest_corpus(std::span<const nlohmann::json> records) {
  IngestResult out;
  std::unordered_set<std::string> seen;
  for (const auto& rec : records) {
    ++out.report.lines;
    auto post = post_from_json(rec);
    if (!post) {
      ++out.report.malformed;
      if (rec.is_object() && rec.contains("user_id") && rec["user_id"].is_string())
        ++out.report.per_user[rec["user_id"].get<std::string>()].rejected;
      continue;
    }
    auto& counts = out.report.per_user[post->user_id];
    if (!seen.insert(post->post_id).second) {
      ++out.report.duplicates;
      ++counts.rejected;
      continue;
    }
    ++counts.accepted;
    ++out.report.accepted;
    auto& tl = out.timelines[post->user_id];
    tl.user_id = post->user_id;
    tl.posts.push_back(std::move(*post));
  }
  for (auto& [_, tl] : out.timelines) {
    std::stable_sort(tl.posts.begin(), tl.posts.end(),
                     [](const Post& a, const Post& b) { return a.timestamp < b.timestamp; });
  }
  return out;
}

/// Reads newline-delimited JSON. Blank lines are ignored; lines that fail to
/// parse count as malformed.
inline IngestResult ingest_corpus(std::istream& in) {
  if (!in) throw CorpusError("corpus stream is not readable");
  std::vector<nlohmann::json> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    records.push_back(nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false));
  }
  if (in.bad()) throw CorpusError("I/O error while reading corpus");
  return ingest_corpus(records);
}

/// Builds timelines from already-validated posts (no dedup).
inline TimelineMap make_timelines(std::vector<Post> posts) {
  TimelineMap out;
  for (auto& p : posts) {
    auto& tl = out[p.user_id];
    tl.user_id = p.user_id;
    tl.posts.push_back(std::move(p));
  }
  for (auto& [_, tl] : out) {
    std::stable_sort(tl.posts.begin(), tl.posts.end(),
                     [](const Post& a, const Post& b) { return a.timestamp < b.timestamp; });
  }
  return out;
}

inline void write_corpus(std::ostream& out, const TimelineMap& timelines) {
  for (const auto& [_, tl] : timelines)
    for (const auto& p : tl.posts) out << post_to_json(p).dump() << '\n';
}

inline void write_ingest_report(std::ostream& out, const IngestReport& r) {
  out << "lines=" << r.lines << '\n'
      << "accepted=" << r.accepted << '\n'
      << "malformed=" << r.malformed << '\n'
      << "duplicates=" << r.duplicates << '\n'
      << "rejected=" << r.rejected() << '\n'
      << "users=" << r.per_user.size() << '\n';
  for (const auto& [user, c] : r.per_user) {
    out << "user." << user << ".accepted=" << c.accepted << '\n'
        << "user." << user << ".rejected=" << c.rejected << '\n';
  }
}

inline std::set<WindowId> week_windows(std::span<const Instant> timestamps) {
  std::set<WindowId> out;
  for (auto t : timestamps) out.insert(iso_week_of(t));
  return out;
}

inline std::set<WindowId> week_windows(const std::vector<Instant>& timestamps) {
  return week_windows(std::span<const Instant>(timestamps));
}

struct EligibilityThresholds {
  std::size_t min_posts = 25;
  std::size_t min_user_faces = 5;
};

enum class DropReason { none, too_few_posts, too_few_faces };

struct Eligibility {
  bool keep = true;
  DropReason reason = DropReason::none;

  bool operator==(const Eligibility&) const = default;
};

inline const char* to_string(DropReason r) {
  switch (r) {
    case DropReason::none: return "none";
    case DropReason::too_few_posts: return "too_few_posts";
    case DropReason::too_few_faces: return "too_few_faces";
  }
  return "?";
}

/// Post count is checked before face count; both thresholds are inclusive.
inline Eligibility filter_eligible(std::size_t post_count, std::size_t user_face_count,
                                   const EligibilityThresholds& th = {}) {
  if (post_count < th.min_posts) return {false, DropReason::too_few_posts};
  if (user_face_count < th.min_user_faces) return {false, DropReason::too_few_faces};
  return {};
}

inline Eligibility filter_eligible(const Timeline& timeline, std::size_t user_face_count,
                                   const EligibilityThresholds& th = {}) {
  return filter_eligible(timeline.size(), user_face_count, th);
}

}  // namespace petwell
