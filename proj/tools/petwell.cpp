#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "petwell/petwell.hpp"

#ifndef PETWELL_DATA_DIR
#define PETWELL_DATA_DIR "data"
#endif

namespace fs = std::filesystem;
using namespace petwell;

namespace {

fs::path data_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("PETWELL_DATA_DIR")) return env;
  return PETWELL_DATA_DIR;
}

nlohmann::json read_json_file(const fs::path& p) {
  auto in = open_input(p);
  return nlohmann::json::parse(in);
}

template <typename T>
void apply(const CLI::Option* opt, const T& value, T& field) {
  if (opt->count() > 0) field = value;
}

struct SynthArgs {
  std::string config, out = "synth_out";
  std::uint64_t seed = 0;
  std::size_t users = 0, decoys = 0;
  double pet_fraction = 0, dog_share = 0, partner_fraction = 0, child_fraction = 0;
  double smile_none = 0, dog_effect = 0, cat_effect = 0;
  std::string data;
};

int cmd_synth(const SynthArgs& a, CLI::App& app) {
  synth::SynthConfig cfg;
  if (!a.config.empty()) cfg.merge_json(read_json_file(a.config));
  apply(app.get_option("--seed"), a.seed, cfg.seed);
  apply(app.get_option("--users"), a.users, cfg.n_users);
  apply(app.get_option("--decoys"), a.decoys, cfg.decoy_users);
  apply(app.get_option("--pet-fraction"), a.pet_fraction, cfg.pet_fraction);
  apply(app.get_option("--dog-share"), a.dog_share, cfg.dog_share);
  apply(app.get_option("--partner-fraction"), a.partner_fraction, cfg.partner_fraction);
  apply(app.get_option("--child-fraction"), a.child_fraction, cfg.child_fraction);
  apply(app.get_option("--smile-none"), a.smile_none, cfg.smile_none);
  apply(app.get_option("--dog-effect"), a.dog_effect, cfg.smile_dog_effect);
  apply(app.get_option("--cat-effect"), a.cat_effect, cfg.smile_cat_effect);
  const auto analyzer = SentimentAnalyzer::from_directory(data_dir(a.data));
  const auto corpus = synth::generate_corpus(cfg, analyzer);
  synth::write_corpus_files(a.out, corpus, cfg);
  std::size_t eligible = 0;
  for (const auto& u : corpus.truth.users) eligible += u.eligible;
  std::cout << "wrote " << corpus.posts.size() << " posts for " << corpus.truth.users.size() << " users ("
            << eligible << " eligible) to " << a.out << '\n';
  return 0;
}

struct RunArgs {
  std::string config, data;
  std::vector<std::string> corpus;
  std::string labels, faces, classifier_url, face_url, out, truth;
  bool classifier_noise = false, export_faces = false;
  double face_sigma = 0, tau = 0, alpha = 0;
  std::size_t min_posts = 0, min_faces = 0, pet_windows = 0, relation_windows = 0, concurrency = 0, min_cell = 0;
  std::uint64_t seed = 0;
};

RunConfig build_run_config(const RunArgs& a, CLI::App& app) {
  RunConfig cfg;
  if (!a.config.empty()) cfg.merge_json(read_json_file(a.config));
  if (app.get_option("--corpus")->count() > 0) cfg.corpus.assign(a.corpus.begin(), a.corpus.end());
  if (app.get_option("--labels")->count() > 0) {
    cfg.classifier_backend = "mock";
    cfg.classifier_labels = a.labels;
  }
  if (app.get_option("--classifier-url")->count() > 0) {
    cfg.classifier_backend = "http";
    cfg.classifier_url = a.classifier_url;
  }
  if (app.get_option("--faces")->count() > 0) {
    cfg.face_backend = "mock";
    cfg.face_annotations = a.faces;
  }
  if (app.get_option("--face-url")->count() > 0) {
    cfg.face_backend = "http";
    cfg.face_url = a.face_url;
  }
  if (app.get_option("--classifier-noise")->count() > 0) cfg.classifier_noise = a.classifier_noise;
  if (app.get_option("--export-faces")->count() > 0) cfg.export_faces = a.export_faces;
  apply(app.get_option("--face-sigma"), a.face_sigma, cfg.face_sigma);
  apply(app.get_option("--tau"), a.tau, cfg.options.tau);
  apply(app.get_option("--alpha"), a.alpha, cfg.alpha);
  apply(app.get_option("--min-posts"), a.min_posts, cfg.options.eligibility.min_posts);
  apply(app.get_option("--min-faces"), a.min_faces, cfg.options.eligibility.min_user_faces);
  apply(app.get_option("--pet-windows"), a.pet_windows, cfg.options.ownership.min_windows);
  apply(app.get_option("--relation-windows"), a.relation_windows, cfg.options.relations.min_windows);
  apply(app.get_option("--concurrency"), a.concurrency, cfg.options.concurrency);
  apply(app.get_option("--min-cell"), a.min_cell, cfg.min_cell);
  apply(app.get_option("--seed"), a.seed, cfg.seed);
  if (app.get_option("--out")->count() > 0) cfg.output_dir = a.out;
  if (app.get_option("--truth")->count() > 0) cfg.truth = fs::path(a.truth);
  return cfg;
}

int cmd_run(const RunArgs& a, CLI::App& app) {
  const auto cfg = build_run_config(a, app);
  const auto analyzer = SentimentAnalyzer::from_directory(data_dir(a.data));
  try {
    const auto s = run_pipeline(cfg, analyzer);
    std::cout << "users=" << s.users << " eligible=" << s.profiles.size()
              << " dropped_too_few_posts=" << s.dropped_too_few_posts
              << " dropped_too_few_faces=" << s.dropped_too_few_faces << " resumed=" << s.resumed << '\n';
    if (s.evaluation) {
      const auto& e = *s.evaluation;
      std::cout << "ownership_accuracy=" << e.ownership_accuracy << " ownership_macro_f1=" << e.ownership_macro_f1()
                << " partner_f1=" << e.partner.f1() << " child_f1=" << e.child.f1() << " missing=" << e.missing << '\n';
    }
    std::cout << "outputs in " << cfg.output_dir.string() << '\n';
  } catch (const PartialRunError& e) {
    std::cerr << "error: " << e.what() << "\n"
              << "completed " << e.completed() << " users, " << e.remaining() << " remaining; rerun to resume from "
              << e.checkpoint().string() << '\n';
    return 3;
  }
  return 0;
}

struct ValidateArgs {
  std::string labels, classifier_url, out;
  bool noise = false;
  std::size_t per_class = 0;
  std::uint64_t seed = 2017;
};

int cmd_validate(const ValidateArgs& a) {
  auto in = open_input(a.labels);
  const auto sidecar = read_label_sidecar(in);
  std::vector<std::pair<std::string, PetLabel>> labeled(sidecar.begin(), sidecar.end());
  std::sort(labeled.begin(), labeled.end());
  if (a.per_class > 0) {
    std::array<std::size_t, 3> taken{};
    std::vector<std::pair<std::string, PetLabel>> kept;
    for (auto& item : labeled)
      if (taken[static_cast<std::size_t>(item.second)]++ < a.per_class) kept.push_back(item);
    labeled = std::move(kept);
  }
  std::unique_ptr<ClassifierBackend> backend;
  if (!a.classifier_url.empty()) {
    backend = std::make_unique<HttpClassifier>(a.classifier_url);
  } else {
    backend = std::make_unique<MockClassifier>(
        sidecar, a.noise ? std::optional<NoiseMatrix>(reported_classifier_noise()) : std::nullopt, a.seed);
  }
  const auto m = validate_backend(labeled, *backend);
  std::ostringstream tsv;
  tsv << "truth\\predicted\tdog\tcat\tother\taccuracy\n";
  nlohmann::json j{{"samples", m.total()}};
  for (auto t : kPetLabels) {
    tsv << to_string(t);
    for (auto p : kPetLabels) tsv << '\t' << m.counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
    tsv << '\t' << format_fixed4(m.accuracy(t)) << '\n';
    j["accuracy"][to_string(t)] = m.row_total(t) ? nlohmann::json(m.accuracy(t)) : nlohmann::json(nullptr);
    j["counts"][to_string(t)] = m.counts[static_cast<std::size_t>(t)];
  }
  std::cout << tsv.str();
  if (!a.out.empty()) {
    fs::create_directories(a.out);
    open_output(fs::path(a.out) / "confusion.tsv") << tsv.str();
    open_output(fs::path(a.out) / "confusion.json") << j.dump(2) << '\n';
  }
  return 0;
}

struct CompareArgs {
  std::string profiles, factor = "pet", metric = "H_t", stratum = "all", out;
  double alpha = 0.05;
  std::size_t min_cell = 2;
  bool json = false;
};

int cmd_compare(const CompareArgs& a) {
  auto in = open_input(a.profiles);
  const auto profiles = read_profiles(in);
  const auto metric = parse_metric(a.metric);
  const auto stratum = parse_stratum(a.stratum);
  if (!metric) throw std::invalid_argument("unknown metric '" + a.metric + "' (H_t or C_t)");
  if (!stratum) throw std::invalid_argument("unknown stratum '" + a.stratum + "'");
  const auto table = compare_subgroups(profiles, factor_by_name(a.factor), *metric, *stratum, a.alpha, a.min_cell);
  std::ostringstream text;
  if (a.json) text << comparison_json(table).dump(2) << '\n';
  else write_comparison_tsv(text, table);
  if (a.out.empty()) std::cout << text.str();
  else open_output(a.out) << text.str();
  return 0;
}

struct ReportArgs {
  std::string profiles, out = "report_out";
  double alpha = 0.05;
  std::size_t min_cell = 2;
};

int cmd_report(const ReportArgs& a) {
  auto in = open_input(a.profiles);
  const auto profiles = read_profiles(in);
  auto outputs = write_tables(a.out, profiles, a.alpha, a.min_cell);
  const nlohmann::json cfg{{"profiles", a.profiles}, {"alpha", a.alpha}, {"min_cell", a.min_cell}};
  char hash[24];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a(cfg.dump())));
  write_manifest(a.out, "report", cfg, hash, outputs);
  std::cout << "wrote " << outputs.size() << " tables for " << profiles.size() << " profiles to " << a.out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pet ownership and happiness analysis pipeline"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  SynthArgs sa;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic corpus with planted ground truth");
  synth_cmd->add_option("--config", sa.config, "JSON file with generator settings")->check(CLI::ExistingFile);
  synth_cmd->add_option("--out", sa.out, "Output directory")->capture_default_str();
  synth_cmd->add_option("--seed", sa.seed, "Random seed");
  synth_cmd->add_option("--users", sa.users, "Number of eligible users");
  synth_cmd->add_option("--decoys", sa.decoys, "Number of ineligible users");
  synth_cmd->add_option("--pet-fraction", sa.pet_fraction, "Fraction of pet owners");
  synth_cmd->add_option("--dog-share", sa.dog_share, "Share of dog owners among pet owners");
  synth_cmd->add_option("--partner-fraction", sa.partner_fraction, "Fraction with a partner");
  synth_cmd->add_option("--child-fraction", sa.child_fraction, "Fraction with a child");
  synth_cmd->add_option("--smile-none", sa.smile_none, "Mean smiling of non-owners");
  synth_cmd->add_option("--dog-effect", sa.dog_effect, "Smiling gap of dog owners over non-owners");
  synth_cmd->add_option("--cat-effect", sa.cat_effect, "Smiling gap of cat owners over non-owners");
  synth_cmd->add_option("--data-dir", sa.data, "Directory holding the sentiment lexicons");

  RunArgs ra;
  auto* run_cmd = app.add_subcommand("run", "Run the full pipeline over a corpus");
  run_cmd->add_option("--config", ra.config, "JSON run configuration; flags override it")->check(CLI::ExistingFile);
  run_cmd->add_option("--corpus", ra.corpus, "Corpus file(s), newline-delimited JSON");
  run_cmd->add_option("--labels", ra.labels, "Classifier mock: image label sidecar (TSV)");
  run_cmd->add_option("--classifier-url", ra.classifier_url, "Remote classifier base URL");
  run_cmd->add_option("--faces", ra.faces, "Face mock: annotation file (newline-delimited JSON)");
  run_cmd->add_option("--face-url", ra.face_url, "Remote face service base URL");
  run_cmd->add_flag("--classifier-noise", ra.classifier_noise, "Apply reported confusion rates to the mock");
  run_cmd->add_option("--face-sigma", ra.face_sigma, "Similarity noise of the face mock");
  run_cmd->add_option("--tau", ra.tau, "Face grouping threshold");
  run_cmd->add_option("--min-posts", ra.min_posts, "Minimum posts per user");
  run_cmd->add_option("--min-faces", ra.min_faces, "Minimum user faces");
  run_cmd->add_option("--pet-windows", ra.pet_windows, "Weeks required for pet ownership");
  run_cmd->add_option("--relation-windows", ra.relation_windows, "Weeks required for partner or child");
  run_cmd->add_option("--alpha", ra.alpha, "Significance level");
  run_cmd->add_option("--min-cell", ra.min_cell, "Minimum users per compared level");
  run_cmd->add_option("--concurrency", ra.concurrency, "Users processed in parallel");
  run_cmd->add_option("--seed", ra.seed, "Seed for noisy mocks");
  run_cmd->add_option("--out", ra.out, "Output directory");
  run_cmd->add_option("--truth", ra.truth, "Ground truth file; adds evaluation.json");
  run_cmd->add_flag("--export-faces", ra.export_faces, "Write every detected face to faces.ndjson");
  run_cmd->add_option("--data-dir", ra.data, "Directory holding the sentiment lexicons");

  ValidateArgs va;
  auto* val_cmd = app.add_subcommand("validate-backend", "Confusion matrix of a classifier against labeled images");
  val_cmd->add_option("--labels", va.labels, "Labeled images (TSV image_ref, label)")->required()->check(CLI::ExistingFile);
  val_cmd->add_option("--classifier-url", va.classifier_url, "Remote classifier; the mock is used when absent");
  val_cmd->add_flag("--noise", va.noise, "Apply reported confusion rates to the mock");
  val_cmd->add_option("--per-class", va.per_class, "Use at most this many images per class");
  val_cmd->add_option("--seed", va.seed, "Mock seed")->capture_default_str();
  val_cmd->add_option("--out", va.out, "Directory for confusion.tsv and confusion.json");

  CompareArgs ca;
  auto* cmp_cmd = app.add_subcommand("compare", "Pairwise comparison of one factor over existing profiles");
  cmp_cmd->add_option("--profiles", ca.profiles, "profiles.ndjson")->required()->check(CLI::ExistingFile);
  cmp_cmd->add_option("--factor", ca.factor, "pet, pet_combined, gender, race, partner or child")->capture_default_str();
  cmp_cmd->add_option("--metric", ca.metric, "H_t or C_t")->capture_default_str();
  cmp_cmd->add_option("--stratum", ca.stratum, "all, pet_owners or non_owners")->capture_default_str();
  cmp_cmd->add_option("--alpha", ca.alpha, "Significance level")->capture_default_str();
  cmp_cmd->add_option("--min-cell", ca.min_cell, "Minimum users per level")->capture_default_str();
  cmp_cmd->add_flag("--json", ca.json, "Emit JSON instead of TSV");
  cmp_cmd->add_option("--out", ca.out, "Output file; stdout when absent");

  ReportArgs rpa;
  auto* rep_cmd = app.add_subcommand("report", "Re-emit every table from existing profiles");
  rep_cmd->add_option("--profiles", rpa.profiles, "profiles.ndjson")->required()->check(CLI::ExistingFile);
  rep_cmd->add_option("--out", rpa.out, "Output directory")->capture_default_str();
  rep_cmd->add_option("--alpha", rpa.alpha, "Significance level")->capture_default_str();
  rep_cmd->add_option("--min-cell", rpa.min_cell, "Minimum users per level")->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*synth_cmd) return cmd_synth(sa, *synth_cmd);
    if (*run_cmd) return cmd_run(ra, *run_cmd);
    if (*val_cmd) return cmd_validate(va);
    if (*cmp_cmd) return cmd_compare(ca);
    if (*rep_cmd) return cmd_report(rpa);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
