#include "gafds/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#include "gafds/common.hpp"
#include "json.hpp"

namespace gafds {

using json = nlohmann::json;
namespace fs = std::filesystem;

StageSeeds stage_seeds(std::uint64_t master) {
  return {derive_seed(master, 10), derive_seed(master, 11), derive_seed(master, 12), derive_seed(master, 13),
          derive_seed(master, 14)};
}

namespace {

// ---- strict JSON readers -----------------------------------------------------

json parse_text(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, what + ": " + e.what());
  }
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) fail(ErrorKind::parse, where + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return it.key() == k; })) {
      std::string keys;
      for (const char* k : allowed) keys += std::string(keys.empty() ? "" : ", ") + k;
      fail(ErrorKind::invalid_argument, "unknown key '" + it.key() + "' in " + where + " (allowed: " + keys + ")");
    }
  }
}

void read(const json& j, const char* key, double& out, const std::string& where) {
  if (!j.contains(key)) return;
  if (!j[key].is_number()) fail(ErrorKind::parse, where + "." + key + " must be a number");
  out = j[key].get<double>();
}

void read(const json& j, const char* key, std::size_t& out, const std::string& where) {
  if (!j.contains(key)) return;
  if (!j[key].is_number_unsigned()) fail(ErrorKind::parse, where + "." + key + " must be a non-negative integer");
  out = j[key].get<std::size_t>();
}

void read(const json& j, const char* key, bool& out, const std::string& where) {
  if (!j.contains(key)) return;
  if (!j[key].is_boolean()) fail(ErrorKind::parse, where + "." + key + " must be true or false");
  out = j[key].get<bool>();
}

void read(const json& j, const char* key, std::string& out, const std::string& where) {
  if (!j.contains(key)) return;
  if (!j[key].is_string()) fail(ErrorKind::parse, where + "." + key + " must be a string");
  out = j[key].get<std::string>();
}

std::vector<std::size_t> read_counts(const json& j, const std::string& where) {
  if (!j.is_array()) fail(ErrorKind::parse, where + " must be an array of integers");
  std::vector<std::size_t> out;
  for (const auto& v : j) {
    if (!v.is_number_unsigned()) fail(ErrorKind::parse, where + " must be an array of non-negative integers");
    out.push_back(v.get<std::size_t>());
  }
  return out;
}

std::vector<std::string> read_strings(const json& j, const std::string& where) {
  if (!j.is_array()) fail(ErrorKind::parse, where + " must be an array of strings");
  std::vector<std::string> out;
  for (const auto& v : j) {
    if (!v.is_string()) fail(ErrorKind::parse, where + " must be an array of strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

GaConfig ga_from(const json& j, const std::string& where) {
  check_keys(j,
             {"population_size", "max_generations", "stagnation_generations", "crossover_prob", "mutation_prob",
              "mutation_sigma", "elitism_count", "penalty", "fitness_mode"},
             where);
  GaConfig c;
  read(j, "population_size", c.population_size, where);
  read(j, "max_generations", c.max_generations, where);
  read(j, "stagnation_generations", c.stagnation_generations, where);
  read(j, "crossover_prob", c.crossover_prob, where);
  read(j, "mutation_prob", c.mutation_prob, where);
  if (j.contains("mutation_sigma") && !j["mutation_sigma"].is_null()) {
    double s = 0.0;
    read(j, "mutation_sigma", s, where);
    c.mutation_sigma = s;
  }
  read(j, "elitism_count", c.elitism_count, where);
  read(j, "penalty", c.penalty, where);
  std::string mode = to_string(c.fitness_mode);
  read(j, "fitness_mode", mode, where);
  c.fitness_mode = fitness_mode_from_string(mode);
  c.validate();
  return c;
}

json ga_to(const GaConfig& c) {
  return {{"population_size", c.population_size},
          {"max_generations", c.max_generations},
          {"stagnation_generations", c.stagnation_generations},
          {"crossover_prob", c.crossover_prob},
          {"mutation_prob", c.mutation_prob},
          {"mutation_sigma", c.mutation_sigma ? json(*c.mutation_sigma) : json(nullptr)},
          {"elitism_count", c.elitism_count},
          {"penalty", c.penalty},
          {"fitness_mode", to_string(c.fitness_mode)}};
}

ClassifierSpec classifier_from(const json& j, const std::string& where) {
  ClassifierSpec s;
  if (j.is_string()) {
    s.kind = classifier_kind_from_string(j.get<std::string>());
    return s;
  }
  check_keys(j,
             {"kind", "k", "max_depth", "min_leaf", "rounds", "hidden_sizes", "epochs", "learning_rate", "ridge",
              "variance_floor"},
             where);
  if (!j.contains("kind")) fail(ErrorKind::invalid_argument, where + ".kind is required");
  std::string kind;
  read(j, "kind", kind, where);
  s.kind = classifier_kind_from_string(kind);
  read(j, "k", s.k, where);
  read(j, "max_depth", s.max_depth, where);
  read(j, "min_leaf", s.min_leaf, where);
  read(j, "rounds", s.rounds, where);
  if (j.contains("hidden_sizes")) s.hidden_sizes = read_counts(j["hidden_sizes"], where + ".hidden_sizes");
  read(j, "epochs", s.epochs, where);
  read(j, "learning_rate", s.learning_rate, where);
  read(j, "ridge", s.ridge, where);
  read(j, "variance_floor", s.variance_floor, where);
  s.validate();
  return s;
}

json classifier_to(const ClassifierSpec& s) {
  return {{"kind", to_string(s.kind)},   {"k", s.k},
          {"max_depth", s.max_depth},    {"min_leaf", s.min_leaf},
          {"rounds", s.rounds},          {"hidden_sizes", s.hidden_sizes},
          {"epochs", s.epochs},          {"learning_rate", s.learning_rate},
          {"ridge", s.ridge},            {"variance_floor", s.variance_floor}};
}

SelectionConfig selection_from(const json& j, const std::string& where, bool* enabled) {
  if (enabled) {
    check_keys(j,
               {"enabled", "population_size", "max_generations", "crossover_prob", "mutation_prob", "elitism_count",
                "objective", "wrapper"},
               where);
    read(j, "enabled", *enabled, where);
  } else {
    check_keys(j,
               {"population_size", "max_generations", "crossover_prob", "mutation_prob", "elitism_count",
                "objective", "wrapper"},
               where);
  }
  SelectionConfig c;
  read(j, "population_size", c.population_size, where);
  read(j, "max_generations", c.max_generations, where);
  read(j, "crossover_prob", c.crossover_prob, where);
  read(j, "mutation_prob", c.mutation_prob, where);
  read(j, "elitism_count", c.elitism_count, where);
  std::string obj = to_string(c.objective);
  read(j, "objective", obj, where);
  c.objective = subset_objective_from_string(obj);
  if (j.contains("wrapper")) c.wrapper = classifier_from(j["wrapper"], where + ".wrapper");
  c.validate();
  return c;
}

json selection_to(const SelectionConfig& c) {
  return {{"population_size", c.population_size}, {"max_generations", c.max_generations},
          {"crossover_prob", c.crossover_prob},   {"mutation_prob", c.mutation_prob},
          {"elitism_count", c.elitism_count},     {"objective", to_string(c.objective)},
          {"wrapper", classifier_to(c.wrapper)}};
}

NonlinearOptions nonlinear_from(const json& j, const std::string& where, bool* enabled) {
  if (enabled) {
    check_keys(j, {"enabled", "sampen", "lle_dfa_input"}, where);
    read(j, "enabled", *enabled, where);
  } else {
    check_keys(j, {"sampen", "lle_dfa_input"}, where);
  }
  NonlinearOptions o;
  if (j.contains("sampen")) {
    const auto& s = j["sampen"];
    const std::string w = where + ".sampen";
    check_keys(s, {"sn", "sm", "chi"}, w);
    read(s, "sn", o.sampen.sn, w);
    read(s, "sm", o.sampen.sm, w);
    read(s, "chi", o.sampen.chi, w);
    if (o.sampen.sm < 1 || !(o.sampen.chi > 0.0)) fail(ErrorKind::invalid_argument, w + ": need sm >= 1 and chi > 0");
  }
  std::string input = to_string(o.lle_dfa_input);
  read(j, "lle_dfa_input", input, where);
  o.lle_dfa_input = lle_dfa_input_from_string(input);
  return o;
}

json nonlinear_to(const NonlinearOptions& o) {
  return {{"sampen", {{"sn", o.sampen.sn}, {"sm", o.sampen.sm}, {"chi", o.sampen.chi}}},
          {"lle_dfa_input", to_string(o.lle_dfa_input)}};
}

SyntheticSpec synthetic_from(const json& j, const std::string& where) {
  check_keys(j, {"length", "sample_rate", "classes"}, where);
  SyntheticSpec s;
  read(j, "length", s.length, where);
  read(j, "sample_rate", s.sample_rate, where);
  if (!j.contains("classes") || !j["classes"].is_array() || j["classes"].empty()) {
    fail(ErrorKind::invalid_argument, where + ".classes must be a non-empty array");
  }
  for (std::size_t i = 0; i < j["classes"].size(); ++i) {
    const auto& c = j["classes"][i];
    const std::string w = where + ".classes[" + std::to_string(i) + "]";
    check_keys(c, {"label", "count", "noise_sigma", "tones"}, w);
    SyntheticClass sc;
    read(c, "label", sc.label, w);
    read(c, "count", sc.count, w);
    read(c, "noise_sigma", sc.noise_sigma, w);
    if (sc.label.empty()) fail(ErrorKind::invalid_argument, w + ".label is required");
    if (sc.count == 0) fail(ErrorKind::invalid_argument, w + ".count must be >= 1");
    if (c.contains("tones")) {
      if (!c["tones"].is_array()) fail(ErrorKind::parse, w + ".tones must be an array");
      for (const auto& t : c["tones"]) {
        check_keys(t, {"hz", "amplitude"}, w + ".tones[]");
        Tone tone;
        read(t, "hz", tone.frequency_hz, w + ".tones[]");
        read(t, "amplitude", tone.amplitude, w + ".tones[]");
        sc.tones.push_back(tone);
      }
    }
    s.classes.push_back(std::move(sc));
  }
  return s;
}

json synthetic_to(const SyntheticSpec& s) {
  json classes = json::array();
  for (const auto& c : s.classes) {
    json tones = json::array();
    for (const auto& t : c.tones) tones.push_back({{"hz", t.frequency_hz}, {"amplitude", t.amplitude}});
    classes.push_back({{"label", c.label}, {"count", c.count}, {"noise_sigma", c.noise_sigma}, {"tones", tones}});
  }
  return {{"length", s.length}, {"sample_rate", s.sample_rate}, {"classes", classes}};
}

LabelGroups groups_from(const json& j, const std::string& where) {
  if (!j.is_object()) fail(ErrorKind::parse, where + " must map group names to label arrays");
  LabelGroups g;
  for (auto it = j.begin(); it != j.end(); ++it) g.emplace_back(it.key(), read_strings(it.value(), where + "." + it.key()));
  return g;
}

json groups_to(const LabelGroups& g) {
  json j = json::object();
  for (const auto& [name, members] : g) j[name] = members;
  return j;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

GaConfig parse_ga_config(const std::string& text) { return ga_from(parse_text(text, "search options"), "search"); }

SelectionConfig parse_selection_config(const std::string& text) {
  return selection_from(parse_text(text, "selection options"), "selection", nullptr);
}

ClassifierSpec parse_classifier_spec(const std::string& text) {
  return classifier_from(parse_text(text, "classifier spec"), "classifier");
}

NonlinearOptions parse_nonlinear_options(const std::string& text) {
  return nonlinear_from(parse_text(text, "nonlinear options"), "nonlinear", nullptr);
}

SyntheticSpec parse_synthetic_spec(const std::string& text) {
  return synthetic_from(parse_text(text, "synthetic spec"), "synthetic");
}

LabelGroups parse_label_groups(const std::string& text) { return groups_from(parse_text(text, "label groups"), "groups"); }

ExperimentConfig parse_experiment_config(const std::string& text) {
  const json j = parse_text(text, "config");
  check_keys(j,
             {"task", "dataset", "spectrum_source", "alpha", "search", "nonlinear", "selection", "classifiers", "folds",
              "normalize", "ratio_features", "seed", "output_dir"},
             "config");
  ExperimentConfig c;

  if (j.contains("task")) {
    const auto& t = j["task"];
    check_keys(t, {"name", "groups"}, "config.task");
    read(t, "name", c.task, "config.task");
    if (t.contains("groups")) c.groups = groups_from(t["groups"], "config.task.groups");
  }

  if (!j.contains("dataset")) fail(ErrorKind::invalid_argument, "config.dataset is required");
  const auto& d = j["dataset"];
  check_keys(d, {"synthetic", "bonn", "csv", "sample_rate"}, "config.dataset");
  const int sources = static_cast<int>(d.contains("synthetic")) + static_cast<int>(d.contains("bonn")) +
                      static_cast<int>(d.contains("csv"));
  if (sources != 1) fail(ErrorKind::invalid_argument, "config.dataset needs exactly one of synthetic, bonn, csv");
  if (d.contains("synthetic")) c.synthetic = synthetic_from(d["synthetic"], "config.dataset.synthetic");
  if (d.contains("bonn")) {
    if (!d["bonn"].is_object() || d["bonn"].empty()) {
      fail(ErrorKind::parse, "config.dataset.bonn must map labels to directories");
    }
    for (auto it = d["bonn"].begin(); it != d["bonn"].end(); ++it) {
      if (!it.value().is_string()) fail(ErrorKind::parse, "config.dataset.bonn." + it.key() + " must be a path");
      c.bonn.emplace_back(it.key(), it.value().get<std::string>());
    }
  }
  read(d, "csv", c.dataset_csv, "config.dataset");
  read(d, "sample_rate", c.sample_rate, "config.dataset");
  if (!(c.sample_rate > 0.0)) fail(ErrorKind::invalid_argument, "config.dataset.sample_rate must be positive");

  std::string source = to_string(c.spectrum_source);
  read(j, "spectrum_source", source, "config");
  c.spectrum_source = spectrum_source_from_string(source);
  read(j, "alpha", c.alpha, "config");
  if (c.alpha == 0) fail(ErrorKind::invalid_argument, "config.alpha must be >= 1");
  if (j.contains("search")) c.search = ga_from(j["search"], "config.search");
  if (j.contains("nonlinear")) c.nonlinear_options = nonlinear_from(j["nonlinear"], "config.nonlinear", &c.nonlinear);
  if (j.contains("selection")) c.selection_config = selection_from(j["selection"], "config.selection", &c.selection);
  if (j.contains("classifiers")) {
    if (!j["classifiers"].is_array() || j["classifiers"].empty()) {
      fail(ErrorKind::invalid_argument, "config.classifiers must be a non-empty array");
    }
    c.classifiers.clear();
    for (std::size_t i = 0; i < j["classifiers"].size(); ++i) {
      c.classifiers.push_back(classifier_from(j["classifiers"][i], "config.classifiers[" + std::to_string(i) + "]"));
    }
  }
  if (j.contains("folds")) c.folds = read_counts(j["folds"], "config.folds");
  if (c.folds.empty()) fail(ErrorKind::invalid_argument, "config.folds must not be empty");
  for (auto k : c.folds) {
    if (k < 2) fail(ErrorKind::invalid_argument, "config.folds entries must be >= 2");
  }
  read(j, "normalize", c.normalize, "config");
  if (j.contains("ratio_features")) c.ratio_features = read_strings(j["ratio_features"], "config.ratio_features");
  std::size_t seed = 0;
  read(j, "seed", seed, "config");
  c.seed = seed;
  read(j, "output_dir", c.output_dir, "config");
  return c;
}

std::string experiment_config_to_json(const ExperimentConfig& c) {
  json dataset = json::object();
  if (c.synthetic) dataset["synthetic"] = synthetic_to(*c.synthetic);
  if (!c.bonn.empty()) {
    json b = json::object();
    for (const auto& [label, dir] : c.bonn) b[label] = dir;
    dataset["bonn"] = b;
    dataset["sample_rate"] = c.sample_rate;
  }
  if (!c.dataset_csv.empty()) dataset["csv"] = c.dataset_csv;

  json classifiers = json::array();
  for (const auto& s : c.classifiers) classifiers.push_back(classifier_to(s));
  json nonlinear = nonlinear_to(c.nonlinear_options);
  nonlinear["enabled"] = c.nonlinear;
  json selection = selection_to(c.selection_config);
  selection["enabled"] = c.selection;

  json j = {{"task", {{"name", c.task}, {"groups", groups_to(c.groups)}}},
            {"dataset", dataset},
            {"spectrum_source", to_string(c.spectrum_source)},
            {"alpha", c.alpha},
            {"search", ga_to(c.search)},
            {"nonlinear", nonlinear},
            {"selection", selection},
            {"classifiers", classifiers},
            {"folds", c.folds},
            {"normalize", c.normalize},
            {"ratio_features", c.ratio_features},
            {"seed", c.seed}};
  return j.dump(2);
}

LabeledDataset load_dataset(const ExperimentConfig& cfg) {
  LabeledDataset ds;
  if (cfg.synthetic) {
    ds = synthesize_dataset(*cfg.synthetic, stage_seeds(cfg.seed).synth);
  } else if (!cfg.bonn.empty()) {
    for (const auto& [label, dir] : cfg.bonn) ds.append(load_bonn_directory(dir, label, cfg.sample_rate));
  } else if (!cfg.dataset_csv.empty()) {
    std::ifstream in(cfg.dataset_csv);
    if (!in) fail(ErrorKind::io, "cannot open dataset csv " + cfg.dataset_csv);
    ds = read_dataset_csv(in);
  } else {
    fail(ErrorKind::invalid_argument, "no dataset source configured");
  }
  return cfg.groups.empty() ? ds : apply_groups(ds, cfg.groups);
}

SearchResult search_stage(const LabeledDataset& ds, std::size_t alpha, SpectrumSource source, GaConfig ga,
                          std::uint64_t master_seed, unsigned threads) {
  ga.seed = stage_seeds(master_seed).search;
  ga.threads = threads;
  const auto spectra = compute_spectra(ds, source, threads);
  return run_search(spectra, ds.labels(), alpha, ga);
}

FeatureMatrix extract_stage(const LabeledDataset& ds, const SearchResult& search, bool nonlinear,
                            NonlinearOptions opt, unsigned threads) {
  const auto spectra = compute_spectra(ds, search.source, threads);
  auto features = extract_gafds_features(search, spectra, ds);
  if (nonlinear) {
    opt.first_index = search.best_genome.alpha() + 1;
    opt.threads = threads;
    features = features.hconcat(extract_nonlinear(ds, opt));
  }
  if (features.cols() == 0) fail(ErrorKind::numeric, "no usable features: every searched interval is invalid");
  return features;
}

SelectionResult selection_stage(const FeatureMatrix& features, SelectionConfig cfg, std::uint64_t master_seed,
                                unsigned threads) {
  cfg.seed = stage_seeds(master_seed).selection;
  cfg.threads = threads;
  return run_selection(features, cfg);
}

EvaluationReport evaluation_stage(const FeatureMatrix& features, const std::string& task,
                                  std::vector<ClassifierSpec> classifiers, std::vector<std::size_t> folds,
                                  bool normalize, std::uint64_t master_seed, unsigned threads) {
  const auto seeds = stage_seeds(master_seed);
  for (auto& s : classifiers) s.seed = seeds.mlp;
  EvaluationOptions opt;
  opt.task = task;
  opt.classifiers = std::move(classifiers);
  opt.fold_counts = std::move(folds);
  opt.fold_seed = seeds.folds;
  opt.normalize = normalize;
  opt.threads = threads;
  return evaluate(features, opt);
}

std::string run_pipeline(const ExperimentConfig& cfg, const fs::path& out_dir, unsigned threads) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) fail(ErrorKind::io, "cannot create output directory " + out_dir.string() + ": " + ec.message());
  std::ofstream log(out_dir / "pipeline.log");
  if (!log) fail(ErrorKind::io, "cannot write " + (out_dir / "pipeline.log").string());
  auto note = [&](const std::string& stage, const std::string& msg) {
    log << utc_timestamp() << " stage=" << stage << ' ' << msg << '\n';
    log.flush();
  };

  const std::string canonical = experiment_config_to_json(cfg);
  const auto seeds = stage_seeds(cfg.seed);
  json manifest = {{"tool", "gafds"},
                   {"config_hash", "fnv1a64:" + hex64(fnv1a64(canonical))},
                   {"seed", cfg.seed},
                   {"stage_seeds",
                    {{"synth", seeds.synth},
                     {"search", seeds.search},
                     {"selection", seeds.selection},
                     {"folds", seeds.folds},
                     {"mlp", seeds.mlp}}},
                   {"artifacts", json::object()},
                   {"stages", json::array()}};

  auto write_artifact = [&](const std::string& name, const std::string& content) {
    std::ofstream f(out_dir / name, std::ios::binary);
    if (!f) fail(ErrorKind::io, "cannot write " + (out_dir / name).string());
    f << content;
    if (!f) fail(ErrorKind::io, "failed writing " + (out_dir / name).string());
    manifest["artifacts"][name] = "fnv1a64:" + hex64(fnv1a64(content));
  };
  auto finish_manifest = [&] {
    std::ofstream f(out_dir / "manifest.json", std::ios::binary);
    f << manifest.dump(2) << '\n';
  };

  std::string stage = "config";
  try {
    write_artifact("config.json", canonical + "\n");

    stage = "ingest";
    note(stage, "status=start");
    const auto ds = load_dataset(cfg);
    const auto classes = ds.class_labels();
    note(stage, "status=done records=" + std::to_string(ds.size()) + " classes=" + std::to_string(classes.size()));
    manifest["stages"].push_back(stage);

    stage = "search";
    note(stage, "status=start alpha=" + std::to_string(cfg.alpha) + " spectrum=" + to_string(cfg.spectrum_source));
    const auto search = search_stage(ds, cfg.alpha, cfg.spectrum_source, cfg.search, cfg.seed, threads);
    write_artifact("search.json", search_result_to_json(search) + "\n");
    note(stage, "status=done best_fitness=" + format_double(search.best_fitness) +
                    " generations=" + std::to_string(search.generations) +
                    " resolved=" + std::to_string(search.resolved_intervals.size()));
    manifest["stages"].push_back(stage);

    stage = "extract";
    note(stage, std::string("status=start nonlinear=") + (cfg.nonlinear ? "true" : "false"));
    const auto features = extract_stage(ds, search, cfg.nonlinear, cfg.nonlinear_options, threads);
    std::ostringstream fcsv;
    write_features_csv(features, fcsv);
    write_artifact("features.csv", fcsv.str());
    note(stage, "status=done features=" + std::to_string(features.cols()));
    manifest["stages"].push_back(stage);

    FeatureMatrix chosen = features;
    if (cfg.selection && features.cols() >= 2) {
      stage = "select";
      note(stage, "status=start");
      const auto sel = selection_stage(features, cfg.selection_config, cfg.seed, threads);
      write_artifact("mask.json", selection_to_json(sel) + "\n");
      const auto names = selected_names(sel);
      chosen = features.select_columns(names);
      std::string joined;
      for (const auto& n : names) joined += (joined.empty() ? "" : ",") + n;
      note(stage, "status=done objective=" + format_double(sel.best_objective) + " selected=" + joined);
      manifest["stages"].push_back(stage);
    } else {
      note("select", "status=skipped");
    }

    stage = "evaluate";
    note(stage, "status=start");
    const auto report =
        evaluation_stage(chosen, cfg.task, cfg.classifiers, cfg.folds, cfg.normalize, cfg.seed, threads);
    std::ostringstream rcsv;
    write_report_csv(report, rcsv);
    write_artifact("report.csv", rcsv.str());
    write_artifact("report.json", report_to_json(report) + "\n");
    note(stage, "status=done results=" + std::to_string(report.results.size()));
    manifest["stages"].push_back(stage);

    stage = "ratios";
    std::vector<std::string> subset = cfg.ratio_features;
    if (subset.empty()) {
      for (auto k : search.resolved_pairs) subset.push_back("f_" + std::to_string(k + 1));
    }
    if (subset.empty()) {
      note(stage, "status=skipped reason=no_interval_features");
    } else {
      note(stage, "status=start");
      std::ostringstream tcsv;
      write_ratio_csv(distance_ratio_table(features, subset), tcsv);
      write_artifact("ratios.csv", tcsv.str());
      note(stage, "status=done");
      manifest["stages"].push_back(stage);
    }
  } catch (const Error& e) {
    manifest["status"] = "failed";
    manifest["failed_stage"] = stage;
    manifest["error"] = e.what();
    note(stage, std::string("status=failed error=\"") + e.what() + "\"");
    finish_manifest();
    throw Error(e.kind(), "stage " + stage + ": " + e.what());
  }
  manifest["status"] = "ok";
  finish_manifest();
  note("run", "status=done");
  return manifest.dump(2);
}

}  // namespace gafds
