#pragma once

#include <chrono>
#include <filesystem>
#include <random>
#include <string>

#include "petwell/corpus.hpp"
#include "petwell/faceclient.hpp"
#include "petwell/sentiment.hpp"

namespace testsupport {

inline const petwell::SentimentAnalyzer& analyzer() {
  static const auto a = petwell::SentimentAnalyzer::from_directory(PETWELL_DATA_DIR);
  return a;
}

inline petwell::Instant at(const char* rfc3339) {
  auto t = petwell::parse_rfc3339(rfc3339);
  if (!t) throw std::invalid_argument(std::string("bad test timestamp ") + rfc3339);
  return *t;
}

/// Monday 2017-01-02 plus whole weeks and days.
inline petwell::Instant week_day(int week, int day = 0, int hour = 12) {
  return at("2017-01-02T00:00:00Z") + std::chrono::days(7 * week + day) + std::chrono::hours(hour);
}

inline petwell::Post post(std::string id, petwell::Instant t, std::string caption = {}, std::string user = "u1") {
  return {id, user, t, "img/" + id, std::move(caption), {}};
}

inline petwell::FaceObservation face(std::string id, std::string person, petwell::Instant t, double age = 30,
                                     double smiling = 50, petwell::Gender g = petwell::Gender::female,
                                     petwell::Race r = petwell::Race::caucasian) {
  return {id, "p-" + id, t, {0, 0, 50, 50}, age, g, r, smiling, std::move(person)};
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("petwell-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace testsupport
