#pragma once

// Per-user happiness: H_t is the mean smiling confidence over the user's own
// faces in period t, C_t the mean caption compound score over all captions in t.

#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "petwell/corpus.hpp"
#include "petwell/faceclient.hpp"
#include "petwell/sentiment.hpp"

namespace petwell {

class UndefinedScore : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Half-open [start, end). The default covers every instant.
struct Period {
  Instant start = Instant::min();
  Instant end = Instant::max();

  bool contains(Instant t) const { return t >= start && t < end; }
};

inline double mean_of(std::span<const double> values) {
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

inline double visual_happiness(std::span<const double> smiling) {
  if (smiling.empty()) throw UndefinedScore("visual happiness needs at least one user face");
  return mean_of(smiling);
}

/// Mean smiling of the given user faces that fall in the period. Each face
/// is one term, so a post with two detections of the user counts twice.
inline double visual_happiness(std::span<const FaceObservation> user_faces, const Period& period = {}) {
  std::vector<double> s;
  s.reserve(user_faces.size());
  for (const auto& f : user_faces)
    if (period.contains(f.timestamp)) s.push_back(f.smiling);
  return visual_happiness(std::span<const double>(s));
}

inline double textual_happiness(std::span<const std::string> captions, const SentimentAnalyzer& analyzer) {
  if (captions.empty()) throw UndefinedScore("textual happiness needs at least one caption");
  double sum = 0.0;
  for (const auto& c : captions) sum += analyzer.compound(c);
  return sum / static_cast<double>(captions.size());
}

/// All captions of the timeline in the period, empty ones included.
inline double textual_happiness(const Timeline& timeline, const SentimentAnalyzer& analyzer,
                                const Period& period = {}) {
  std::vector<std::string> captions;
  for (const auto& p : timeline.posts)
    if (period.contains(p.timestamp)) captions.push_back(p.caption);
  return textual_happiness(std::span<const std::string>(captions), analyzer);
}

}  // namespace petwell
