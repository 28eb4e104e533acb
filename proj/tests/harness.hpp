#pragma once

// In-process synth + pipeline runs with mock backends, no files involved.

#include "petwell/pipeline.hpp"
#include "petwell/synth.hpp"

namespace testsupport {

struct MockRun {
  std::vector<petwell::UserResult> results;
  std::vector<petwell::UserProfile> profiles;
};

inline MockRun run_mock(const petwell::synth::SynthCorpus& corpus, const petwell::SentimentAnalyzer& analyzer,
                        bool classifier_noise = false, double face_sigma = 0.0, std::uint64_t seed = 2017,
                        petwell::PipelineOptions opt = {}) {
  using namespace petwell;
  auto noise = classifier_noise ? std::optional<NoiseMatrix>(reported_classifier_noise()) : std::nullopt;
  MockClassifier classifier(corpus.label_map(), noise, seed);
  MockFaceBackend faces(corpus.annotation_map(), face_sigma, seed);
  MockRun run;
  run.results = run_users(make_timelines(corpus.posts), classifier, faces, analyzer, opt);
  for (const auto& r : run.results)
    if (r.profile) run.profiles.push_back(*r.profile);
  return run;
}

}  // namespace testsupport
