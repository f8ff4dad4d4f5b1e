// gafds command line: one subcommand per pipeline stage plus `run`.
//
// Every subcommand accepts the same experiment config (--config) and picks the
// block it needs, so chaining the stages with one config and seed reproduces
// `run` exactly. Failures print {"error": {...}} on stderr and exit nonzero.
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gafds/gafds.h"
#include "json.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// Thrown for failures of the library (carries its status) or of the CLI itself.
struct CliError : std::runtime_error {
  gafds_status status;
  CliError(gafds_status s, const std::string& msg) : std::runtime_error(msg), status(s) {}
};

void check(gafds_status s) {
  if (s != GAFDS_OK) throw CliError(s, gafds_last_error());
}

struct DatasetFree {
  void operator()(gafds_dataset* d) const { gafds_dataset_free(d); }
};
struct FeaturesFree {
  void operator()(gafds_features* f) const { gafds_features_free(f); }
};
using Dataset = std::unique_ptr<gafds_dataset, DatasetFree>;
using Features = std::unique_ptr<gafds_features, FeaturesFree>;

// Takes ownership of a library string.
std::string take(char* s) {
  std::string out = s ? s : "";
  gafds_string_free(s);
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError(GAFDS_IO, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw CliError(GAFDS_PARSE, what + ": " + e.what());
  }
}

struct Common {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  unsigned threads = 0;

  // The experiment config, or {} when none was given. An argument starting
  // with '{' is taken as inline JSON.
  json load_config() const {
    if (config.empty()) return json::object();
    const std::string text = config.front() == '{' ? config : read_file(config);
    json j = parse_json(text, "config");
    if (!j.is_object()) throw CliError(GAFDS_PARSE, "config must be a JSON object");
    // Blocks are checked by the library when a stage consumes them; the top
    // level is checked here so a typo never goes unnoticed.
    static const char* const known[] = {"task",        "dataset",   "spectrum_source", "alpha",
                                        "search",      "nonlinear", "selection",       "classifiers",
                                        "folds",       "normalize", "ratio_features",  "seed",
                                        "output_dir"};
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (std::find(std::begin(known), std::end(known), it.key()) == std::end(known)) {
        throw CliError(GAFDS_INVALID_ARGUMENT, "unknown key '" + it.key() + "' in config");
      }
    }
    return j;
  }

  std::uint64_t resolve_seed(const json& cfg) const {
    if (seed_set) return seed;
    if (cfg.contains("seed") && cfg["seed"].is_number_unsigned()) return cfg["seed"].get<std::uint64_t>();
    return 0;
  }

  // Writes to <out>/<name>, or to stdout when --out was not given.
  void emit(const std::string& name, const std::string& content) const {
    if (out.empty()) {
      std::cout << content;
      if (!content.empty() && content.back() != '\n') std::cout << '\n';
      return;
    }
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw CliError(GAFDS_IO, "cannot create " + out + ": " + ec.message());
    const fs::path p = fs::path(out) / name;
    std::ofstream f(p, std::ios::binary);
    if (!f) throw CliError(GAFDS_IO, "cannot write " + p.string());
    f << content;
    if (!content.empty() && content.back() != '\n') f << '\n';
  }
};

// `block` of the config with the pipeline-only "enabled" switch removed.
json sub_block(const json& cfg, const char* block, bool* enabled = nullptr) {
  if (!cfg.contains(block)) return json::object();
  json b = cfg[block];
  if (b.is_object() && b.contains("enabled")) {
    if (enabled && b["enabled"].is_boolean()) *enabled = b["enabled"].get<bool>();
    b.erase("enabled");
  }
  return b;
}

json task_groups(const json& cfg) {
  if (cfg.contains("task") && cfg["task"].is_object() && cfg["task"].contains("groups")) return cfg["task"]["groups"];
  return json::object();
}

Dataset regroup(Dataset ds, const json& groups) {
  if (!groups.is_object() || groups.empty()) return ds;
  gafds_dataset* out = nullptr;
  check(gafds_dataset_regroup(ds.get(), groups.dump().c_str(), &out));
  return Dataset(out);
}

Dataset load_dataset(const std::string& path) {
  gafds_dataset* d = nullptr;
  check(gafds_dataset_load_csv(path.c_str(), &d));
  return Dataset(d);
}

Features load_features(const std::string& path) {
  gafds_features* f = nullptr;
  check(gafds_features_load_csv(path.c_str(), &f));
  return Features(f);
}

std::string dataset_csv(const gafds_dataset* ds) {
  char* text = nullptr;
  check(gafds_dataset_csv(ds, &text));
  return take(text);
}

std::vector<std::size_t> parse_counts(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      const auto v = std::stoul(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      out.push_back(v);
    } catch (const std::exception&) {
      throw CliError(GAFDS_INVALID_ARGUMENT, "bad fold count '" + tok + "'");
    }
  }
  return out;
}

std::vector<std::string> parse_names(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(tok);
  }
  return out;
}

int report_error(gafds_status status, const std::string& msg) {
  const json err = {{"error", {{"status", gafds_status_name(status)}, {"code", static_cast<int>(status)}, {"message", msg}}}};
  std::cerr << err.dump() << '\n';
  return static_cast<int>(status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gafds: GA frequency-interval features, nonlinear features and EEG classification"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(gafds_version()));

  Common c;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", c.config, "experiment config (JSON file or inline object)");
    sub->add_option("--out", c.out, "output directory (default: stdout)");
    sub->add_option("--seed", c.seed, "master seed (overrides the config)")->each([&](const std::string&) {
      c.seed_set = true;
    });
    sub->add_option("--threads", c.threads, "worker threads, 0 = all cores; never changes results");
  };

  std::string dataset_path, features_path, search_path, mask_path, record, source, folds_arg, classifiers_arg,
      subset_arg, groups_arg;
  std::vector<std::string> bonn_args;
  double sample_rate = 0.0;
  std::size_t alpha = 0;
  bool no_nonlinear = false, mfdfa = false, normalize = false, normalized = false;

  auto* import = app.add_subcommand("import", "read Bonn directories into a dataset CSV");
  add_common(import);
  import->add_option("--bonn", bonn_args, "LABEL=DIR, repeatable (default: config dataset.bonn)");
  import->add_option("--sample-rate", sample_rate, "Hz (default 173.61)");
  import->add_option("--groups", groups_arg, "label grouping JSON, e.g. {\"CD\":[\"C\",\"D\"],\"E\":[\"E\"]}");

  auto* synth = app.add_subcommand("synth", "generate the synthetic dataset of the config");
  add_common(synth);
  synth->add_option("--groups", groups_arg, "label grouping JSON");

  auto* spectrum = app.add_subcommand("spectrum", "spectrum (or MFDFA spectrum) of one record");
  add_common(spectrum);
  spectrum->add_option("--dataset", dataset_path, "dataset CSV")->required();
  spectrum->add_option("--record", record, "record id")->required();
  spectrum->add_option("--source", source, "fourier | hilbert_envelope");
  spectrum->add_flag("--mfdfa", mfdfa, "emit q,h_q,D_q instead");

  auto* search = app.add_subcommand("search", "GA search for frequency intervals");
  add_common(search);
  search->add_option("--dataset", dataset_path, "dataset CSV")->required();
  search->add_option("--alpha", alpha, "number of intervals (default: config alpha or 4)");
  search->add_option("--source", source, "fourier | hilbert_envelope");

  auto* extract = app.add_subcommand("extract", "feature CSV from a search result");
  add_common(extract);
  extract->add_option("--dataset", dataset_path, "dataset CSV")->required();
  extract->add_option("--search", search_path, "search JSON")->required();
  extract->add_flag("--no-nonlinear", no_nonlinear, "frequency-interval features only");

  auto* select = app.add_subcommand("select", "GA feature-subset selection");
  add_common(select);
  select->add_option("--features", features_path, "feature CSV")->required();

  auto* evaluate = app.add_subcommand("evaluate", "k-fold cross-validation report");
  add_common(evaluate);
  evaluate->add_option("--features", features_path, "feature CSV")->required();
  evaluate->add_option("--mask", mask_path, "selection JSON; keeps only its selected features");
  evaluate->add_option("--folds", folds_arg, "comma-separated fold counts, e.g. 2,5,10");
  evaluate->add_option("--classifiers", classifiers_arg, "comma-separated kinds with default settings");
  evaluate->add_flag("--normalize", normalize, "min-max normalize on each training fold");

  auto* ratios = app.add_subcommand("ratios", "inter/intra class distance ratios");
  add_common(ratios);
  ratios->add_option("--features", features_path, "feature CSV")->required();
  ratios->add_option("--subset", subset_arg, "comma-separated feature names");
  ratios->add_option("--search", search_path, "search JSON; default subset = its resolved intervals");
  ratios->add_flag("--normalized", normalized, "min-max normalize first");

  auto* run = app.add_subcommand("run", "full pipeline");
  add_common(run);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error(GAFDS_INVALID_ARGUMENT, e.what());
  }

  try {
    const json cfg = c.load_config();
    const std::uint64_t seed = c.resolve_seed(cfg);
    json groups = task_groups(cfg);
    if (!groups_arg.empty()) groups = parse_json(groups_arg, "--groups");

    if (*import) {
      std::vector<std::pair<std::string, std::string>> dirs;
      for (const auto& a : bonn_args) {
        const auto eq = a.find('=');
        if (eq == std::string::npos || eq == 0) throw CliError(GAFDS_INVALID_ARGUMENT, "--bonn expects LABEL=DIR");
        dirs.emplace_back(a.substr(0, eq), a.substr(eq + 1));
      }
      double rate = sample_rate;
      if (dirs.empty() && cfg.contains("dataset") && cfg["dataset"].contains("bonn")) {
        for (auto it = cfg["dataset"]["bonn"].begin(); it != cfg["dataset"]["bonn"].end(); ++it) {
          dirs.emplace_back(it.key(), it.value().get<std::string>());
        }
        if (rate <= 0.0 && cfg["dataset"].contains("sample_rate")) rate = cfg["dataset"]["sample_rate"].get<double>();
      }
      if (dirs.empty()) throw CliError(GAFDS_INVALID_ARGUMENT, "no Bonn directories given (--bonn LABEL=DIR)");
      Dataset all;
      for (const auto& [label, dir] : dirs) {
        gafds_dataset* d = nullptr;
        check(gafds_dataset_load_bonn(dir.c_str(), label.c_str(), rate, &d));
        Dataset part(d);
        if (!all) {
          all = std::move(part);
        } else {
          check(gafds_dataset_append(all.get(), part.get()));
        }
      }
      all = regroup(std::move(all), groups);
      c.emit("dataset.csv", dataset_csv(all.get()));
    } else if (*synth) {
      if (!cfg.contains("dataset") || !cfg["dataset"].contains("synthetic")) {
        throw CliError(GAFDS_INVALID_ARGUMENT, "synth needs a config with dataset.synthetic");
      }
      gafds_dataset* d = nullptr;
      check(gafds_dataset_synthesize(cfg["dataset"]["synthetic"].dump().c_str(), seed, &d));
      Dataset ds = regroup(Dataset(d), groups);
      c.emit("dataset.csv", dataset_csv(ds.get()));
    } else if (*spectrum) {
      Dataset ds = load_dataset(dataset_path);
      if (source.empty()) source = cfg.value("spectrum_source", std::string("fourier"));
      char* text = nullptr;
      if (mfdfa) {
        check(gafds_mfdfa_csv(ds.get(), record.c_str(), &text));
        c.emit("mfdfa_" + record + ".csv", take(text));
      } else {
        check(gafds_spectrum_csv(ds.get(), record.c_str(), source.c_str(), &text));
        c.emit("spectrum_" + record + ".csv", take(text));
      }
    } else if (*search) {
      Dataset ds = load_dataset(dataset_path);
      json opt = {{"alpha", alpha ? alpha : cfg.value("alpha", std::size_t{4})},
                  {"spectrum_source", source.empty() ? cfg.value("spectrum_source", std::string("fourier")) : source},
                  {"seed", seed},
                  {"threads", c.threads},
                  {"ga", sub_block(cfg, "search")}};
      char* out = nullptr;
      check(gafds_search(ds.get(), opt.dump().c_str(), &out));
      c.emit("search.json", take(out));
    } else if (*extract) {
      Dataset ds = load_dataset(dataset_path);
      bool enabled = true;
      json nl = sub_block(cfg, "nonlinear", &enabled);
      json opt = {{"nonlinear", enabled && !no_nonlinear}, {"nonlinear_options", nl}, {"threads", c.threads}};
      gafds_features* f = nullptr;
      check(gafds_extract(ds.get(), read_file(search_path).c_str(), opt.dump().c_str(), &f));
      Features feats(f);
      char* text = nullptr;
      check(gafds_features_csv(feats.get(), &text));
      c.emit("features.csv", take(text));
    } else if (*select) {
      Features feats = load_features(features_path);
      json opt = {{"seed", seed}, {"threads", c.threads}, {"selection", sub_block(cfg, "selection")}};
      char* out = nullptr;
      check(gafds_select(feats.get(), opt.dump().c_str(), &out));
      c.emit("mask.json", take(out));
    } else if (*evaluate) {
      Features feats = load_features(features_path);
      if (!mask_path.empty()) {
        const json mask = parse_json(read_file(mask_path), "mask");
        if (!mask.contains("selected")) throw CliError(GAFDS_PARSE, "mask JSON has no 'selected' list");
        gafds_features* f = nullptr;
        check(gafds_features_select(feats.get(), mask["selected"].dump().c_str(), &f));
        feats.reset(f);
      }
      json opt = {{"seed", seed}, {"threads", c.threads}};
      if (cfg.contains("task") && cfg["task"].contains("name")) opt["task"] = cfg["task"]["name"];
      if (cfg.contains("classifiers")) opt["classifiers"] = cfg["classifiers"];
      if (cfg.contains("folds")) opt["folds"] = cfg["folds"];
      if (cfg.contains("normalize")) opt["normalize"] = cfg["normalize"];
      if (!folds_arg.empty()) opt["folds"] = parse_counts(folds_arg);
      if (!classifiers_arg.empty()) opt["classifiers"] = parse_names(classifiers_arg);
      if (normalize) opt["normalize"] = true;
      char* report_json = nullptr;
      char* report_csv = nullptr;
      check(gafds_evaluate(feats.get(), opt.dump().c_str(), &report_json, &report_csv));
      const std::string js = take(report_json);
      const std::string csv = take(report_csv);
      if (c.out.empty()) {
        std::cout << csv;
      } else {
        c.emit("report.csv", csv);
        c.emit("report.json", js);
      }
    } else if (*ratios) {
      Features feats = load_features(features_path);
      std::vector<std::string> subset = parse_names(subset_arg);
      if (subset.empty() && cfg.contains("ratio_features")) subset = cfg["ratio_features"].get<std::vector<std::string>>();
      if (subset.empty() && !search_path.empty()) {
        const json s = parse_json(read_file(search_path), "search");
        for (const auto& iv : s.at("resolved_intervals")) {
          subset.push_back("f_" + std::to_string(iv.at("pair").get<std::size_t>() + 1));
        }
      }
      char* text = nullptr;
      const std::string subset_json = subset.empty() ? std::string() : json(subset).dump();
      check(gafds_ratios_csv(feats.get(), subset_json.empty() ? nullptr : subset_json.c_str(), normalized ? 1 : 0, &text));
      c.emit("ratios.csv", take(text));
    } else if (*run) {
      if (c.config.empty()) throw CliError(GAFDS_INVALID_ARGUMENT, "run needs --config");
      json full = cfg;
      if (c.seed_set) full["seed"] = c.seed;
      std::string out_dir = c.out;
      if (out_dir.empty() && full.contains("output_dir")) out_dir = full["output_dir"].get<std::string>();
      if (out_dir.empty()) throw CliError(GAFDS_INVALID_ARGUMENT, "run needs --out or output_dir in the config");
      char* manifest = nullptr;
      check(gafds_run_pipeline(full.dump().c_str(), out_dir.c_str(), c.threads, &manifest));
      std::cout << take(manifest) << '\n';
    }
  } catch (const CliError& e) {
    return report_error(e.status, e.what());
  } catch (const json::exception& e) {
    return report_error(GAFDS_PARSE, std::string("config: ") + e.what());
  } catch (const std::exception& e) {
    return report_error(GAFDS_INTERNAL, e.what());
  }
  return 0;
}
