#pragma once

// Pet-content classification behind a backend interface, plus the
// time-window rule that decides whether a user owns a dog or a cat.

#include <array>
#include <atomic>
#include <cmath>
#include <limits>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "petwell/backend.hpp"
#include "petwell/corpus.hpp"
#include "petwell/rng.hpp"

namespace petwell {

enum class PetLabel { dog = 0, cat = 1, other = 2 };

inline constexpr std::array<PetLabel, 3> kPetLabels{PetLabel::dog, PetLabel::cat, PetLabel::other};

inline const char* to_string(PetLabel l) {
  switch (l) {
    case PetLabel::dog: return "dog";
    case PetLabel::cat: return "cat";
    case PetLabel::other: return "other";
  }
  return "?";
}

inline std::optional<PetLabel> parse_pet_label(std::string_view s) {
  if (s == "dog") return PetLabel::dog;
  if (s == "cat") return PetLabel::cat;
  if (s == "other" || s == "others") return PetLabel::other;
  return std::nullopt;
}

struct PetPrediction {
  double dog = 0.0;
  double cat = 0.0;
  double other = 1.0;

  double operator[](PetLabel l) const {
    return l == PetLabel::dog ? dog : l == PetLabel::cat ? cat : other;
  }

  /// Argmax; ties resolve in the order dog, cat, other.
  PetLabel label() const {
    if (dog >= cat && dog >= other) return PetLabel::dog;
    if (cat >= other) return PetLabel::cat;
    return PetLabel::other;
  }

  static PetPrediction one_hot(PetLabel l) {
    return {l == PetLabel::dog ? 1.0 : 0.0, l == PetLabel::cat ? 1.0 : 0.0,
            l == PetLabel::other ? 1.0 : 0.0};
  }

  /// Rescales to sum 1. Rejects negative, non-finite or all-zero scores.
  static PetPrediction normalized(double dog, double cat, double other) {
    for (double v : {dog, cat, other})
      if (!std::isfinite(v) || v < 0.0)
        throw BackendError("classifier returned an invalid score", false);
    const double sum = dog + cat + other;
    if (sum <= 0.0) throw BackendError("classifier returned all-zero scores", false);
    return {dog / sum, cat / sum, other / sum};
  }
};

class ClassifierBackend {
 public:
  virtual ~ClassifierBackend() = default;
  virtual PetPrediction classify(const std::string& image_ref) = 0;
};

/// Row-stochastic 3x3 matrix: row = true label, column = predicted label.
using NoiseMatrix = std::array<std::array<double, 3>, 3>;

/// Per-class accuracies 99.0% (dog), 96.4% (cat), 98.5% (other); the
/// remaining mass is split evenly between the two wrong classes.
inline NoiseMatrix reported_classifier_noise() {
  auto row = [](int correct, double acc) {
    std::array<double, 3> r{};
    for (int c = 0; c < 3; ++c) r[static_cast<std::size_t>(c)] = c == correct ? acc : (1.0 - acc) / 2.0;
    return r;
  };
  return {row(0, 0.990), row(1, 0.964), row(2, 0.985)};
}

inline void check_row_stochastic(const NoiseMatrix& m) {
  for (const auto& row : m) {
    double sum = 0.0;
    for (double v : row) {
      if (!(v >= 0.0)) throw std::invalid_argument("noise matrix entries must be non-negative");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("noise matrix rows must sum to 1");
  }
}

/// Image labels from a sidecar file. Without noise, returns one-hot on the
/// true label. With noise, the predicted label is drawn from the true label's
/// row of the matrix using a hash of (seed, image_ref), so each image always
/// receives the same prediction regardless of call order.
class MockClassifier final : public ClassifierBackend {
 public:
  explicit MockClassifier(std::unordered_map<std::string, PetLabel> labels,
                          std::optional<NoiseMatrix> noise = std::nullopt, std::uint64_t seed = 0)
      : labels_(std::move(labels)), noise_(noise), seed_(seed) {
    if (noise_) check_row_stochastic(*noise_);
  }

  PetPrediction classify(const std::string& image_ref) override {
    auto it = labels_.find(image_ref);
    if (it == labels_.end()) {
      unknown_.fetch_add(1, std::memory_order_relaxed);
      return PetPrediction::one_hot(PetLabel::other);
    }
    if (!noise_) return PetPrediction::one_hot(it->second);
    const auto& row = (*noise_)[static_cast<std::size_t>(it->second)];
    const double u = unit_double(mix64(fnv1a(image_ref, mix64(seed_))));
    double acc = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
      acc += row[c];
      if (u < acc) return PetPrediction::one_hot(static_cast<PetLabel>(c));
    }
    return PetPrediction::one_hot(PetLabel::other);
  }

  std::size_t unknown_images() const { return unknown_.load(); }

 private:
  std::unordered_map<std::string, PetLabel> labels_;
  std::optional<NoiseMatrix> noise_;
  std::uint64_t seed_;
  std::atomic<std::size_t> unknown_{0};
};

/// Reads "image_ref<TAB>label" lines. Lines starting with '#' are comments.
inline std::unordered_map<std::string, PetLabel> read_label_sidecar(std::istream& in) {
  std::unordered_map<std::string, PetLabel> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    auto label = tab == std::string::npos ? std::nullopt : parse_pet_label(line.substr(tab + 1));
    if (!label)
      throw std::runtime_error("label sidecar line " + std::to_string(lineno) + ": expected image_ref<TAB>dog|cat|other");
    out[line.substr(0, tab)] = *label;
  }
  return out;
}

/// POST {base}/classify {"image_ref": ...} -> {"scores": {"dog", "cat", "other"}}.
class HttpClassifier final : public ClassifierBackend {
 public:
  HttpClassifier(std::string base_url, RetryPolicy policy = {}, Sleeper sleep = default_sleep)
      : base_url_(std::move(base_url)), policy_(policy), sleep_(std::move(sleep)) {}

  PetPrediction classify(const std::string& image_ref) override {
    return with_retry(
        policy_,
        [&] {
          auto res = post_json(base_url_, "/classify", {{"image_ref", image_ref}}, policy_.timeout);
          try {
            const auto& s = res.at("scores");
            return PetPrediction::normalized(s.at("dog").get<double>(), s.at("cat").get<double>(),
                                             s.at("other").get<double>());
          } catch (const nlohmann::json::exception& e) {
            throw BackendError(std::string("malformed classify response: ") + e.what(), false);
          }
        },
        sleep_);
  }

 private:
  std::string base_url_;
  RetryPolicy policy_;
  Sleeper sleep_;
};

inline PetPrediction classify_image(const std::string& image_ref, ClassifierBackend& backend) {
  auto p = backend.classify(image_ref);
  return PetPrediction::normalized(p.dog, p.cat, p.other);
}

enum class OwnershipLabel { dog_owner, cat_owner, none };

inline const char* to_string(OwnershipLabel o) {
  switch (o) {
    case OwnershipLabel::dog_owner: return "dog_owner";
    case OwnershipLabel::cat_owner: return "cat_owner";
    case OwnershipLabel::none: return "none";
  }
  return "?";
}

inline std::optional<OwnershipLabel> parse_ownership(std::string_view s) {
  if (s == "dog_owner") return OwnershipLabel::dog_owner;
  if (s == "cat_owner") return OwnershipLabel::cat_owner;
  if (s == "none") return OwnershipLabel::none;
  return std::nullopt;
}

struct OwnershipRules {
  /// A species qualifies with at least this many distinct ISO weeks.
  std::size_t min_windows = 2;
  /// When set, an image counts as pet content only if its top score reaches this value.
  std::optional<double> min_confidence;
  /// Winner when both species tie on window count and post count.
  PetLabel tie_winner = PetLabel::dog;
};

class MissingPrediction : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline PetLabel image_label(const PetPrediction& p, const OwnershipRules& rules) {
  const PetLabel l = p.label();
  if (rules.min_confidence && p[l] < *rules.min_confidence) return PetLabel::other;
  return l;
}

/// A user owns species s when posts labelled s span >= min_windows ISO weeks.
/// If both species qualify: more windows, then more posts, then tie_winner.
inline OwnershipLabel identify_pet_owner(const Timeline& timeline,
                                         const std::map<std::string, PetPrediction>& predictions,
                                         const OwnershipRules& rules = {}) {
  std::array<std::set<WindowId>, 2> windows;
  std::array<std::size_t, 2> posts{};
  for (const auto& post : timeline.posts) {
    auto it = predictions.find(post.post_id);
    if (it == predictions.end())
      throw MissingPrediction("no prediction for post " + post.post_id + " of user " + timeline.user_id);
    const PetLabel l = image_label(it->second, rules);
    if (l == PetLabel::other) continue;
    const auto s = static_cast<std::size_t>(l);
    windows[s].insert(iso_week_of(post.timestamp));
    ++posts[s];
  }
  const bool dog = windows[0].size() >= rules.min_windows;
  const bool cat = windows[1].size() >= rules.min_windows;
  if (dog && cat) {
    if (windows[0].size() != windows[1].size())
      return windows[0].size() > windows[1].size() ? OwnershipLabel::dog_owner : OwnershipLabel::cat_owner;
    if (posts[0] != posts[1])
      return posts[0] > posts[1] ? OwnershipLabel::dog_owner : OwnershipLabel::cat_owner;
    return rules.tie_winner == PetLabel::cat ? OwnershipLabel::cat_owner : OwnershipLabel::dog_owner;
  }
  if (dog) return OwnershipLabel::dog_owner;
  if (cat) return OwnershipLabel::cat_owner;
  return OwnershipLabel::none;
}

struct ConfusionMatrix {
  std::array<std::array<std::size_t, 3>, 3> counts{};  // [true][predicted]

  std::size_t row_total(PetLabel truth) const {
    std::size_t n = 0;
    for (auto c : counts[static_cast<std::size_t>(truth)]) n += c;
    return n;
  }

  std::size_t total() const {
    std::size_t n = 0;
    for (auto l : kPetLabels) n += row_total(l);
    return n;
  }

  /// Diagonal over row sum; NaN for a class with no samples.
  double accuracy(PetLabel truth) const {
    const auto n = row_total(truth);
    const auto i = static_cast<std::size_t>(truth);
    return n == 0 ? std::numeric_limits<double>::quiet_NaN()
                  : static_cast<double>(counts[i][i]) / static_cast<double>(n);
  }
};

inline ConfusionMatrix validate_backend(std::span<const std::pair<std::string, PetLabel>> labeled,
                                        ClassifierBackend& backend) {
  if (labeled.empty()) throw std::invalid_argument("validate_backend: labeled set is empty");
  ConfusionMatrix m;
  for (const auto& [ref, truth] : labeled) {
    const PetLabel predicted = classify_image(ref, backend).label();
    ++m.counts[static_cast<std::size_t>(truth)][static_cast<std::size_t>(predicted)];
  }
  return m;
}

}  // namespace petwell
