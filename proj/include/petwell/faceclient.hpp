#pragma once

// Face engine backends (detect + compare) and greedy similarity grouping of a
// user's faces into per-person sets.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "petwell/backend.hpp"
#include "petwell/corpus.hpp"
#include "petwell/rng.hpp"

namespace petwell {

enum class Gender { male, female };
enum class Race { asian, african_american, caucasian };

inline const char* to_string(Gender g) { return g == Gender::male ? "male" : "female"; }

inline const char* to_string(Race r) {
  switch (r) {
    case Race::asian: return "asian";
    case Race::african_american: return "african_american";
    case Race::caucasian: return "caucasian";
  }
  return "?";
}

inline std::optional<Gender> parse_gender(std::string_view s) {
  if (s == "male" || s == "Male") return Gender::male;
  if (s == "female" || s == "Female") return Gender::female;
  return std::nullopt;
}

/// Accepts the face engine's own spellings (Asian/Black/White) as well.
inline std::optional<Race> parse_race(std::string_view s) {
  if (s == "asian" || s == "Asian") return Race::asian;
  if (s == "african_american" || s == "black" || s == "Black") return Race::african_american;
  if (s == "caucasian" || s == "white" || s == "White") return Race::caucasian;
  return std::nullopt;
}

struct BBox {
  int x = 0, y = 0, w = 1, h = 1;
  bool operator==(const BBox&) const = default;
};

/// Attributes reported by a face engine for one detection.
struct DetectedFace {
  BBox bbox;
  double age = 0.0;
  Gender gender = Gender::female;
  Race race = Race::caucasian;
  double smiling = 0.0;  // [0, 100]
  std::string token;     // backend comparison handle (mock: person_id)
};

struct FaceObservation {
  std::string face_id;
  std::string post_id;
  Instant timestamp{};
  BBox bbox;
  double age = 0.0;
  Gender gender = Gender::female;
  Race race = Race::caucasian;
  double smiling = 0.0;
  std::string token;
};

class FaceBackend {
 public:
  virtual ~FaceBackend() = default;
  virtual std::vector<DetectedFace> detect(const std::string& image_ref) = 0;
  /// Similarity in [0, 1].
  virtual double compare(const FaceObservation& a, const FaceObservation& b) = 0;
};

inline void validate_face(const DetectedFace& f) {
  if (!(f.smiling >= 0.0 && f.smiling <= 100.0))
    throw BackendError("face smiling score outside [0, 100]", false);
  if (f.bbox.w <= 0 || f.bbox.h <= 0) throw BackendError("face bbox has non-positive size", false);
  if (!(f.age >= 0.0) || !std::isfinite(f.age)) throw BackendError("face age is negative", false);
}

namespace detail {

inline DetectedFace face_from_json(const nlohmann::json& j, const char* token_key) {
  DetectedFace f;
  const auto& b = j.at("bbox");
  if (b.is_array()) {
    f.bbox = {b.at(0).get<int>(), b.at(1).get<int>(), b.at(2).get<int>(), b.at(3).get<int>()};
  } else {
    f.bbox = {b.at("x").get<int>(), b.at("y").get<int>(), b.at("w").get<int>(), b.at("h").get<int>()};
  }
  f.age = j.at("age").get<double>();
  auto g = parse_gender(j.at("gender").get<std::string>());
  auto r = parse_race(j.at("race").get<std::string>());
  if (!g || !r) throw BackendError("unknown gender or race value", false);
  f.gender = *g;
  f.race = *r;
  f.smiling = j.at("smiling").get<double>();
  if (auto it = j.find(token_key); it != j.end()) f.token = it->get<std::string>();
  validate_face(f);
  return f;
}

inline nlohmann::json bbox_to_json(const BBox& b) {
  return {{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}};
}

}  // namespace detail

/// image_ref -> annotated faces; each face's person_id becomes its token.
using FaceAnnotations = std::unordered_map<std::string, std::vector<DetectedFace>>;

/// Reads newline-delimited {image_ref, faces: [{person_id, bbox, age, gender, race, smiling}]}.
inline FaceAnnotations read_face_annotations(std::istream& in) {
  FaceAnnotations out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      auto& faces = out[j.at("image_ref").get<std::string>()];
      for (const auto& f : j.at("faces")) faces.push_back(detail::face_from_json(f, "person_id"));
    } catch (const std::exception& e) {
      throw std::runtime_error("face annotations line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

inline nlohmann::json annotation_record(const std::string& image_ref,
                                        std::span<const DetectedFace> faces) {
  auto arr = nlohmann::json::array();
  for (const auto& f : faces) {
    arr.push_back({{"person_id", f.token}, {"bbox", detail::bbox_to_json(f.bbox)}, {"age", f.age},
                   {"gender", to_string(f.gender)}, {"race", to_string(f.race)},
                   {"smiling", f.smiling}});
  }
  return {{"image_ref", image_ref}, {"faces", std::move(arr)}};
}

/// Annotation-file backend. compare() is 1 for equal person ids and 0
/// otherwise; with sigma > 0 a Gaussian perturbation (cut at 3 sigma, keyed
/// on the unordered face-id pair so it is symmetric and order independent)
/// is added and the result clamped to [0, 1].
class MockFaceBackend final : public FaceBackend {
 public:
  explicit MockFaceBackend(FaceAnnotations annotations, double sigma = 0.0, std::uint64_t seed = 0)
      : annotations_(std::move(annotations)), sigma_(sigma), seed_(seed) {
    if (!(sigma_ >= 0.0)) throw std::invalid_argument("similarity noise sigma must be >= 0");
  }

  std::vector<DetectedFace> detect(const std::string& image_ref) override {
    auto it = annotations_.find(image_ref);
    if (it == annotations_.end()) {
      missing_.fetch_add(1, std::memory_order_relaxed);
      return {};
    }
    return it->second;
  }

  double compare(const FaceObservation& a, const FaceObservation& b) override {
    if (a.face_id == b.face_id) return 1.0;
    const double base = a.token == b.token ? 1.0 : 0.0;
    if (sigma_ == 0.0) return base;
    const auto& lo = std::min(a.face_id, b.face_id);
    const auto& hi = std::max(a.face_id, b.face_id);
    const double z = std::clamp(hashed_normal(fnv1a(hi, fnv1a(lo, mix64(seed_)) ^ 0x1f)), -3.0, 3.0);
    return std::clamp(base + sigma_ * z, 0.0, 1.0);
  }

  std::size_t missing_images() const { return missing_.load(); }

 private:
  FaceAnnotations annotations_;
  double sigma_;
  std::uint64_t seed_;
  std::atomic<std::size_t> missing_{0};
};

/// POST {base}/detect {"image_ref"} -> {"faces": [{bbox, age, gender, race, smiling, face_token}]}
/// POST {base}/compare {"token_a", "token_b"} -> {"similarity"}
class HttpFaceBackend final : public FaceBackend {
 public:
  HttpFaceBackend(std::string base_url, RetryPolicy policy = {}, Sleeper sleep = default_sleep)
      : base_url_(std::move(base_url)), policy_(policy), sleep_(std::move(sleep)) {}

  std::vector<DetectedFace> detect(const std::string& image_ref) override {
    return with_retry(
        policy_,
        [&] {
          auto res = post_json(base_url_, "/detect", {{"image_ref", image_ref}}, policy_.timeout);
          try {
            std::vector<DetectedFace> out;
            for (const auto& f : res.at("faces")) out.push_back(detail::face_from_json(f, "face_token"));
            return out;
          } catch (const nlohmann::json::exception& e) {
            throw BackendError(std::string("malformed detect response: ") + e.what(), false);
          }
        },
        sleep_);
  }

  double compare(const FaceObservation& a, const FaceObservation& b) override {
    return with_retry(
        policy_,
        [&] {
          auto res = post_json(base_url_, "/compare", {{"token_a", a.token}, {"token_b", b.token}},
                               policy_.timeout);
          double s;
          try {
            s = res.at("similarity").get<double>();
          } catch (const nlohmann::json::exception& e) {
            throw BackendError(std::string("malformed compare response: ") + e.what(), false);
          }
          if (!(s >= 0.0 && s <= 1.0)) throw BackendError("similarity outside [0, 1]", false);
          return s;
        },
        sleep_);
  }

 private:
  std::string base_url_;
  RetryPolicy policy_;
  Sleeper sleep_;
};

/// Runs detection on one post's image. Face ids are "<post_id>#<index>".
/// Remote detections without a token use the face id as their token.
inline std::vector<FaceObservation> detect_faces(const Post& post, FaceBackend& backend) {
  std::vector<FaceObservation> out;
  auto faces = backend.detect(post.image_ref);
  out.reserve(faces.size());
  for (std::size_t i = 0; i < faces.size(); ++i) {
    auto& f = faces[i];
    validate_face(f);
    FaceObservation o{post.post_id + "#" + std::to_string(i), post.post_id, post.timestamp,
                      f.bbox, f.age, f.gender, f.race, f.smiling, std::move(f.token)};
    if (o.token.empty()) o.token = o.face_id;
    out.push_back(std::move(o));
  }
  return out;
}

struct FaceGroup {
  std::string group_id;
  std::vector<FaceObservation> members;  // members.front() is the representative

  std::size_t size() const { return members.size(); }
  const FaceObservation& representative() const { return members.front(); }
  Instant first_seen() const { return members.front().timestamp; }

  std::vector<Instant> timestamps() const {
    std::vector<Instant> t;
    t.reserve(members.size());
    for (const auto& m : members) t.push_back(m.timestamp);
    return t;
  }
};

/// Greedy clustering in timestamp order: a face joins the group whose
/// representative is most similar if that similarity reaches tau, else it
/// founds a new group. Output is sorted by size (descending), then by first
/// appearance.
inline std::vector<FaceGroup> group_faces(std::span<const FaceObservation> observations,
                                          FaceBackend& backend, double tau = 0.75) {
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("grouping threshold must be in (0, 1)");
  std::vector<const FaceObservation*> order;
  order.reserve(observations.size());
  for (const auto& o : observations) order.push_back(&o);
  std::stable_sort(order.begin(), order.end(),
                   [](auto* a, auto* b) { return a->timestamp < b->timestamp; });

  std::vector<FaceGroup> groups;
  for (const auto* face : order) {
    std::size_t best = groups.size();
    double best_sim = -1.0;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      const double s = backend.compare(*face, groups[g].representative());
      if (s > best_sim) {
        best_sim = s;
        best = g;
      }
    }
    if (best < groups.size() && best_sim >= tau) {
      groups[best].members.push_back(*face);
    } else {
      groups.push_back({"g" + std::to_string(groups.size()), {*face}});
    }
  }
  // Founding order already follows first appearance, so a stable sort on size suffices.
  std::stable_sort(groups.begin(), groups.end(),
                   [](const FaceGroup& a, const FaceGroup& b) { return a.size() > b.size(); });
  return groups;
}

/// One record of the released-face-library shape.
inline nlohmann::json face_export_record(const FaceObservation& f) {
  return {{"face_id", f.face_id},
          {"post_id", f.post_id},
          {"timestamp", format_rfc3339(f.timestamp)},
          {"bbox", detail::bbox_to_json(f.bbox)},
          {"age", f.age},
          {"gender", to_string(f.gender)},
          {"race", to_string(f.race)},
          {"smiling", f.smiling},
          {"token", f.token}};
}

inline void write_face_export(std::ostream& out, std::span<const FaceObservation> faces) {
  for (const auto& f : faces) out << face_export_record(f).dump() << '\n';
}

}  // namespace petwell
