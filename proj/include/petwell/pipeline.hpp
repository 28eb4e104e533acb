#pragma once

// End-to-end driver: ingest, per-user fan-out over the classifier and face
// backends, profile inference, and the report artifacts of a run.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "petwell/backend.hpp"
#include "petwell/corpus.hpp"
#include "petwell/faceclient.hpp"
#include "petwell/happiness.hpp"
#include "petwell/inference.hpp"
#include "petwell/petclass.hpp"
#include "petwell/report.hpp"
#include "petwell/rng.hpp"
#include "petwell/sentiment.hpp"
#include "petwell/synth.hpp"
#include "petwell/version.hpp"

namespace petwell {

struct PipelineOptions {
  EligibilityThresholds eligibility;
  OwnershipRules ownership;
  RelationRules relations;
  double tau = 0.75;
  std::size_t concurrency = 8;
};

struct UserResult {
  std::string user_id;
  Eligibility eligibility;
  std::optional<UserProfile> profile;
  std::vector<FaceObservation> faces;  // every detection in the timeline
};

/// Runs one timeline through detection, grouping, identification, the
/// eligibility filter, classification and the relation rules. Users with
/// too few posts never reach a backend.
inline UserResult process_user(const Timeline& timeline, ClassifierBackend& classifier, FaceBackend& faces,
                               const SentimentAnalyzer& analyzer, const PipelineOptions& opt) {
  UserResult r{timeline.user_id, {}, std::nullopt, {}};
  r.eligibility = filter_eligible(timeline.size(), std::numeric_limits<std::size_t>::max(), opt.eligibility);
  if (!r.eligibility.keep) return r;

  for (const auto& post : timeline.posts) {
    auto found = detect_faces(post, faces);
    r.faces.insert(r.faces.end(), std::make_move_iterator(found.begin()), std::make_move_iterator(found.end()));
  }
  const auto groups = group_faces(r.faces, faces, opt.tau);
  const std::size_t user_index = groups.empty() ? 0 : identify_user_index(groups);
  const std::size_t user_faces = groups.empty() ? 0 : groups[user_index].members.size();
  r.eligibility = filter_eligible(timeline.size(), user_faces, opt.eligibility);
  if (!r.eligibility.keep) return r;
  const auto& user = groups[user_index];

  std::map<std::string, PetPrediction> predictions;
  for (const auto& post : timeline.posts) predictions.emplace(post.post_id, classify_image(post.image_ref, classifier));

  const auto candidates = relation_candidates(groups, user_index, opt.relations);
  UserProfile p;
  p.user_id = timeline.user_id;
  p.demographics = group_demographics(user);
  p.ownership = identify_pet_owner(timeline, predictions, opt.ownership);
  p.has_partner = infer_partner(user, candidates, opt.relations);
  p.has_child = infer_child(user, candidates, opt.relations);
  p.visual_happiness = visual_happiness(std::span<const FaceObservation>(user.members));
  p.textual_happiness = textual_happiness(timeline, analyzer);
  p.face_count = user.members.size();
  p.post_count = timeline.size();
  r.profile = std::move(p);
  return r;
}

class PartialRunError : public std::runtime_error {
 public:
  PartialRunError(const std::string& what, std::size_t completed, std::size_t remaining,
                  std::filesystem::path checkpoint)
      : std::runtime_error(what), completed_(completed), remaining_(remaining), checkpoint_(std::move(checkpoint)) {}

  std::size_t completed() const { return completed_; }
  std::size_t remaining() const { return remaining_; }
  const std::filesystem::path& checkpoint() const { return checkpoint_; }

 private:
  std::size_t completed_;
  std::size_t remaining_;
  std::filesystem::path checkpoint_;
};

inline nlohmann::json checkpoint_record(const UserResult& r, bool with_faces) {
  nlohmann::json j{{"user_id", r.user_id},
                   {"keep", r.eligibility.keep},
                   {"reason", to_string(r.eligibility.reason)}};
  if (r.profile) j["profile"] = profile_to_json(*r.profile);
  if (with_faces) {
    auto arr = nlohmann::json::array();
    for (const auto& f : r.faces) arr.push_back(face_export_record(f));
    j["faces"] = std::move(arr);
  }
  return j;
}

inline FaceObservation face_from_export(const nlohmann::json& j) {
  FaceObservation f;
  f.face_id = j.at("face_id").get<std::string>();
  f.post_id = j.at("post_id").get<std::string>();
  auto ts = parse_rfc3339(j.at("timestamp").get<std::string>());
  if (!ts) throw std::runtime_error("bad face timestamp in checkpoint");
  f.timestamp = *ts;
  const auto d = detail::face_from_json(j, "token");
  f.bbox = d.bbox;
  f.age = d.age;
  f.gender = d.gender;
  f.race = d.race;
  f.smiling = d.smiling;
  f.token = d.token;
  return f;
}

inline UserResult result_from_checkpoint(const nlohmann::json& j) {
  UserResult r;
  r.user_id = j.at("user_id").get<std::string>();
  r.eligibility.keep = j.at("keep").get<bool>();
  const auto reason = j.at("reason").get<std::string>();
  r.eligibility.reason = reason == "too_few_posts"   ? DropReason::too_few_posts
                         : reason == "too_few_faces" ? DropReason::too_few_faces
                                                     : DropReason::none;
  if (auto it = j.find("profile"); it != j.end()) r.profile = profile_from_json(*it);
  if (auto it = j.find("faces"); it != j.end())
    for (const auto& f : *it) r.faces.push_back(face_from_export(f));
  return r;
}

/// Reads a checkpoint log. A torn final line (crash mid-write) is ignored.
inline std::map<std::string, UserResult> read_checkpoint(const std::filesystem::path& path) {
  std::map<std::string, UserResult> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) continue;
    auto r = result_from_checkpoint(j);
    out.insert_or_assign(r.user_id, std::move(r));
  }
  return out;
}

struct FanOutStats {
  std::size_t processed = 0;
  std::size_t resumed = 0;
};

/// Processes every timeline with at most `opt.concurrency` users in flight.
/// Each finished user is appended to the checkpoint (when a path is given)
/// before the next one starts, so an aborted run can resume. A backend
/// failure stops new work, lets in-flight users finish, and throws
/// PartialRunError. Results come back sorted by user_id.
inline std::vector<UserResult> run_users(const TimelineMap& timelines, ClassifierBackend& classifier,
                                         FaceBackend& faces, const SentimentAnalyzer& analyzer,
                                         const PipelineOptions& opt,
                                         const std::optional<std::filesystem::path>& checkpoint = std::nullopt,
                                         bool checkpoint_faces = false, FanOutStats* stats = nullptr) {
  std::map<std::string, UserResult> done;
  if (checkpoint) done = read_checkpoint(*checkpoint);
  std::size_t resumed = 0;
  std::vector<const Timeline*> todo;
  for (const auto& [id, tl] : timelines) {
    if (done.count(id)) ++resumed;
    else todo.push_back(&tl);
  }
  for (auto it = done.begin(); it != done.end();)
    it = timelines.count(it->first) ? std::next(it) : done.erase(it);

  std::ofstream log;
  if (checkpoint) {
    bool torn = false;
    if (std::ifstream prev(*checkpoint, std::ios::binary | std::ios::ate); prev && prev.tellg() > 0) {
      prev.seekg(-1, std::ios::end);
      torn = prev.get() != '\n';
    }
    log.open(*checkpoint, std::ios::app | std::ios::binary);
    if (!log) throw std::runtime_error("cannot open checkpoint " + checkpoint->string());
    if (torn) log << '\n';
  }
  std::mutex mu;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::string first_error;
  std::size_t completed = 0;

  auto worker = [&] {
    while (!abort.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= todo.size()) return;
      try {
        auto r = process_user(*todo[i], classifier, faces, analyzer, opt);
        std::lock_guard lock(mu);
        if (log.is_open()) log << checkpoint_record(r, checkpoint_faces).dump() << '\n' << std::flush;
        done.insert_or_assign(r.user_id, std::move(r));
        ++completed;
      } catch (const std::exception& e) {
        std::lock_guard lock(mu);
        if (first_error.empty()) first_error = "user " + todo[i]->user_id + ": " + e.what();
        abort.store(true);
      }
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(opt.concurrency, 1, std::max<std::size_t>(todo.size(), 1));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  if (abort.load()) {
    const std::size_t finished = resumed + completed;
    throw PartialRunError("run aborted after " + std::to_string(finished) + " of " +
                              std::to_string(timelines.size()) + " users: " + first_error,
                          finished, timelines.size() - finished, checkpoint.value_or(""));
  }
  if (stats) *stats = {completed, resumed};
  std::vector<UserResult> out;
  out.reserve(done.size());
  for (auto& [_, r] : done) out.push_back(std::move(r));
  return out;
}

struct RunConfig {
  std::vector<std::filesystem::path> corpus;
  std::string classifier_backend = "mock";  // mock | http
  std::filesystem::path classifier_labels;
  std::string classifier_url;
  bool classifier_noise = false;  // mock only: apply the reported confusion rates
  std::string face_backend = "mock";  // mock | http
  std::filesystem::path face_annotations;
  std::string face_url;
  double face_sigma = 0.0;  // mock only: similarity noise
  PipelineOptions options;
  double alpha = 0.05;
  std::size_t min_cell = 2;
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 2017;
  std::optional<std::filesystem::path> truth;
  bool export_faces = false;
  int retry_attempts = 3;
  int timeout_ms = 5000;

  void validate() const {
    if (corpus.empty()) throw std::invalid_argument("run config: no corpus file given");
    for (const auto& c : corpus)
      if (!std::filesystem::exists(c)) throw std::invalid_argument("run config: corpus not found: " + c.string());
    if (classifier_backend == "mock") {
      if (!std::filesystem::exists(classifier_labels))
        throw std::invalid_argument("run config: classifier labels not found: " + classifier_labels.string());
    } else if (classifier_backend == "http") {
      if (classifier_url.empty()) throw std::invalid_argument("run config: classifier_url is required for http");
    } else {
      throw std::invalid_argument("run config: classifier_backend must be mock or http");
    }
    if (face_backend == "mock") {
      if (!std::filesystem::exists(face_annotations))
        throw std::invalid_argument("run config: face annotations not found: " + face_annotations.string());
    } else if (face_backend == "http") {
      if (face_url.empty()) throw std::invalid_argument("run config: face_url is required for http");
    } else {
      throw std::invalid_argument("run config: face_backend must be mock or http");
    }
    if (truth && !std::filesystem::exists(*truth))
      throw std::invalid_argument("run config: truth file not found: " + truth->string());
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("run config: alpha must be in (0, 1)");
    if (!(options.tau > 0.0 && options.tau < 1.0)) throw std::invalid_argument("run config: tau must be in (0, 1)");
    if (!(face_sigma >= 0.0)) throw std::invalid_argument("run config: face_sigma must be >= 0");
    if (options.concurrency == 0) throw std::invalid_argument("run config: concurrency must be >= 1");
    if (options.ownership.min_windows == 0 || options.relations.min_windows == 0)
      throw std::invalid_argument("run config: window thresholds must be >= 1");
    if (retry_attempts < 1 || timeout_ms < 1) throw std::invalid_argument("run config: bad retry settings");
  }

  nlohmann::json to_json() const {
    auto paths = nlohmann::json::array();
    for (const auto& c : corpus) paths.push_back(c.string());
    nlohmann::json j{{"corpus", paths},
                     {"classifier_backend", classifier_backend},
                     {"classifier_labels", classifier_labels.string()},
                     {"classifier_url", classifier_url},
                     {"classifier_noise", classifier_noise},
                     {"face_backend", face_backend},
                     {"face_annotations", face_annotations.string()},
                     {"face_url", face_url},
                     {"face_sigma", face_sigma},
                     {"tau", options.tau},
                     {"min_posts", options.eligibility.min_posts},
                     {"min_user_faces", options.eligibility.min_user_faces},
                     {"pet_min_windows", options.ownership.min_windows},
                     {"relation_min_windows", options.relations.min_windows},
                     {"max_candidates", options.relations.max_candidates},
                     {"concurrency", options.concurrency},
                     {"alpha", alpha},
                     {"min_cell", min_cell},
                     {"output_dir", output_dir.string()},
                     {"seed", seed},
                     {"export_faces", export_faces},
                     {"retry_attempts", retry_attempts},
                     {"timeout_ms", timeout_ms}};
    j["truth"] = truth ? nlohmann::json(truth->string()) : nlohmann::json(nullptr);
    return j;
  }

  /// Fields missing from `j` keep their current values.
  void merge_json(const nlohmann::json& j) {
    const auto known = to_json();
    for (const auto& [key, _] : j.items())
      if (!known.contains(key)) throw std::invalid_argument("run config: unknown key '" + key + "'");
    auto get = [&](const char* key, auto& field) {
      if (auto it = j.find(key); it != j.end() && !it->is_null()) it->get_to(field);
    };
    auto get_path = [&](const char* key, std::filesystem::path& field) {
      if (auto it = j.find(key); it != j.end() && !it->is_null()) field = it->get<std::string>();
    };
    if (auto it = j.find("corpus"); it != j.end()) {
      corpus.clear();
      if (it->is_string()) corpus.emplace_back(it->get<std::string>());
      else for (const auto& c : *it) corpus.emplace_back(c.get<std::string>());
    }
    get("classifier_backend", classifier_backend);
    get_path("classifier_labels", classifier_labels);
    get("classifier_url", classifier_url);
    get("classifier_noise", classifier_noise);
    get("face_backend", face_backend);
    get_path("face_annotations", face_annotations);
    get("face_url", face_url);
    get("face_sigma", face_sigma);
    get("tau", options.tau);
    get("min_posts", options.eligibility.min_posts);
    get("min_user_faces", options.eligibility.min_user_faces);
    get("pet_min_windows", options.ownership.min_windows);
    get("relation_min_windows", options.relations.min_windows);
    get("max_candidates", options.relations.max_candidates);
    get("concurrency", options.concurrency);
    get("alpha", alpha);
    get("min_cell", min_cell);
    get_path("output_dir", output_dir);
    get("seed", seed);
    get("export_faces", export_faces);
    get("retry_attempts", retry_attempts);
    get("timeout_ms", timeout_ms);
    if (auto it = j.find("truth"); it != j.end())
      truth = it->is_null() ? std::nullopt : std::optional<std::filesystem::path>(it->get<std::string>());
  }

  /// Hash of the settings that affect outputs (not the output directory).
  std::string hash() const {
    auto j = to_json();
    j.erase("output_dir");
    j.erase("concurrency");
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
    return buf;
  }
};

inline std::ifstream open_input(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  return in;
}

inline std::ofstream open_output(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

inline IngestResult ingest_files(const std::vector<std::filesystem::path>& paths) {
  std::vector<nlohmann::json> records;
  for (const auto& path : paths) {
    auto in = open_input(path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      records.push_back(nlohmann::json::parse(line, nullptr, false));
    }
  }
  return ingest_corpus(records);
}

struct Backends {
  std::unique_ptr<ClassifierBackend> classifier;
  std::unique_ptr<FaceBackend> faces;
  std::function<std::size_t()> unknown_images = [] { return std::size_t{0}; };
  std::function<std::size_t()> missing_images = [] { return std::size_t{0}; };
};

inline Backends make_backends(const RunConfig& cfg) {
  Backends b;
  RetryPolicy policy;
  policy.max_attempts = cfg.retry_attempts;
  policy.timeout = std::chrono::milliseconds(cfg.timeout_ms);
  if (cfg.classifier_backend == "mock") {
    auto in = open_input(cfg.classifier_labels);
    auto noise = cfg.classifier_noise ? std::optional<NoiseMatrix>(reported_classifier_noise()) : std::nullopt;
    auto mock = std::make_unique<MockClassifier>(read_label_sidecar(in), noise, cfg.seed);
    b.unknown_images = [p = mock.get()] { return p->unknown_images(); };
    b.classifier = std::move(mock);
  } else {
    b.classifier = std::make_unique<HttpClassifier>(cfg.classifier_url, policy);
  }
  if (cfg.face_backend == "mock") {
    auto in = open_input(cfg.face_annotations);
    auto mock = std::make_unique<MockFaceBackend>(read_face_annotations(in), cfg.face_sigma, cfg.seed);
    b.missing_images = [p = mock.get()] { return p->missing_images(); };
    b.faces = std::move(mock);
  } else {
    b.faces = std::make_unique<HttpFaceBackend>(cfg.face_url, policy);
  }
  return b;
}

struct RunSummary {
  IngestReport ingest;
  std::vector<UserProfile> profiles;
  std::size_t users = 0;
  std::size_t dropped_too_few_posts = 0;
  std::size_t dropped_too_few_faces = 0;
  std::size_t processed = 0;
  std::size_t resumed = 0;
  std::size_t unknown_images = 0;
  std::size_t missing_images = 0;
  std::optional<synth::EvaluationReport> evaluation;
};

inline std::string utc_now() {
  return format_rfc3339(std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now()));
}

/// Tables derived from profiles alone; shared by `run` and `report`.
inline std::vector<std::string> write_tables(const std::filesystem::path& dir, std::span<const UserProfile> profiles,
                                             double alpha, std::size_t min_cell) {
  std::filesystem::create_directories(dir);
  {
    auto out = open_output(dir / "demographics.tsv");
    write_demographic_tsv(out, demographic_table(profiles));
    open_output(dir / "demographics.json") << demographic_json(demographic_table(profiles)).dump(2) << '\n';
  }
  {
    auto out = open_output(dir / "distributions.tsv");
    write_distributions_tsv(out, distributions(profiles));
    open_output(dir / "distributions.json") << distributions_json(distributions(profiles)).dump(2) << '\n';
  }
  {
    auto tsv = open_output(dir / "comparisons.tsv");
    auto nd = open_output(dir / "comparisons.ndjson");
    bool first = true;
    for (Metric m : {Metric::visual, Metric::textual}) {
      std::vector<ComparisonTable> tables;
      tables.push_back(compare_subgroups(profiles, pet_factor(), m, Stratum::all, alpha, min_cell));
      tables.push_back(compare_subgroups(profiles, pet_combined_factor(), m, Stratum::all, alpha, min_cell));
      for (auto make : {gender_factor, race_factor, partner_factor, child_factor})
        for (Stratum s : {Stratum::pet_owners, Stratum::non_owners})
          tables.push_back(compare_subgroups(profiles, make(), m, s, alpha, min_cell));
      for (const auto& t : tables) {
        if (!first) tsv << '\n';
        first = false;
        write_comparison_tsv(tsv, t);
        nd << comparison_json(t).dump() << '\n';
      }
    }
  }
  {
    auto out = open_output(dir / "chart_data.tsv");
    write_chart_tsv_header(out);
    for (const auto& s : standard_chart_data(profiles)) write_chart_tsv(out, s);
  }
  return {"demographics.tsv", "demographics.json", "distributions.tsv", "distributions.json",
          "comparisons.tsv",  "comparisons.ndjson", "chart_data.tsv"};
}

inline void write_manifest(const std::filesystem::path& dir, const std::string& command, const nlohmann::json& config,
                           const std::string& config_hash, const std::vector<std::string>& outputs) {
  nlohmann::json modules;
  for (const auto& [name, version] : module_versions()) modules[std::string(name)] = std::string(version);
  nlohmann::json m{{"tool", "petwell"},         {"version", std::string(kVersion)},        {"command", command},
                   {"config_hash", config_hash}, {"modules", modules},         {"config", config},
                   {"outputs", outputs},         {"created_at", utc_now()}};
  open_output(dir / "manifest.json") << m.dump(2) << '\n';
}

inline void write_run_report(std::ostream& out, const RunSummary& s) {
  out << "users=" << s.users << '\n'
      << "eligible=" << s.profiles.size() << '\n'
      << "dropped_too_few_posts=" << s.dropped_too_few_posts << '\n'
      << "dropped_too_few_faces=" << s.dropped_too_few_faces << '\n'
      << "processed=" << s.processed << '\n'
      << "resumed=" << s.resumed << '\n'
      << "classifier_unknown_images=" << s.unknown_images << '\n'
      << "face_missing_images=" << s.missing_images << '\n';
}

/// Full run. The per-user checkpoint lives in the output directory while the
/// run is incomplete and is removed once every artifact has been written.
inline RunSummary run_pipeline(const RunConfig& cfg, const SentimentAnalyzer& analyzer, Backends backends) {
  cfg.validate();
  std::filesystem::create_directories(cfg.output_dir);
  RunSummary s;
  auto ingest = ingest_files(cfg.corpus);
  s.ingest = ingest.report;
  s.users = ingest.timelines.size();

  const auto checkpoint = cfg.output_dir / "checkpoint.ndjson";
  const auto checkpoint_hash = cfg.output_dir / "checkpoint.hash";
  if (std::filesystem::exists(checkpoint)) {
    std::string previous;
    if (std::ifstream h(checkpoint_hash); h) h >> previous;
    if (previous != cfg.hash())
      throw std::runtime_error("checkpoint in " + cfg.output_dir.string() +
                               " was written with a different configuration; remove it to start over");
  } else {
    open_output(checkpoint_hash) << cfg.hash() << '\n';
  }
  FanOutStats fan;
  auto results = run_users(ingest.timelines, *backends.classifier, *backends.faces, analyzer, cfg.options, checkpoint,
                           cfg.export_faces, &fan);
  s.processed = fan.processed;
  s.resumed = fan.resumed;
  s.unknown_images = backends.unknown_images();
  s.missing_images = backends.missing_images();

  std::vector<FaceObservation> all_faces;
  for (auto& r : results) {
    if (r.eligibility.reason == DropReason::too_few_posts) ++s.dropped_too_few_posts;
    if (r.eligibility.reason == DropReason::too_few_faces) ++s.dropped_too_few_faces;
    if (r.profile) s.profiles.push_back(*r.profile);
    if (cfg.export_faces) all_faces.insert(all_faces.end(), r.faces.begin(), r.faces.end());
  }

  const auto& dir = cfg.output_dir;
  std::vector<std::string> outputs{"profiles.ndjson", "ingest_report.txt", "run_report.txt"};
  {
    auto out = open_output(dir / "profiles.ndjson");
    write_profiles(out, s.profiles);
  }
  {
    auto out = open_output(dir / "ingest_report.txt");
    write_ingest_report(out, s.ingest);
  }
  for (auto& f : write_tables(dir, s.profiles, cfg.alpha, cfg.min_cell)) outputs.push_back(std::move(f));
  if (cfg.export_faces) {
    auto out = open_output(dir / "faces.ndjson");
    write_face_export(out, all_faces);
    outputs.push_back("faces.ndjson");
  }
  if (cfg.truth) {
    auto in = open_input(*cfg.truth);
    s.evaluation = synth::evaluate_pipeline(s.profiles, synth::read_truth(in), /*strict=*/false);
    open_output(dir / "evaluation.json") << synth::evaluation_json(*s.evaluation).dump(2) << '\n';
    outputs.push_back("evaluation.json");
  }
  {
    auto out = open_output(dir / "run_report.txt");
    write_run_report(out, s);
  }
  write_manifest(dir, "run", cfg.to_json(), cfg.hash(), outputs);
  std::filesystem::remove(checkpoint);
  std::filesystem::remove(checkpoint_hash);
  return s;
}

inline RunSummary run_pipeline(const RunConfig& cfg, const SentimentAnalyzer& analyzer) {
  cfg.validate();
  return run_pipeline(cfg, analyzer, make_backends(cfg));
}

}  // namespace petwell
