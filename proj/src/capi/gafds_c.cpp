// extern "C" surface over the C++ core. Every entry point funnels through
// guard() so no exception crosses the boundary.
#include "gafds/gafds.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <new>
#include <sstream>
#include <string>

#include "gafds/pipeline.hpp"
#include "json.hpp"

struct gafds_dataset {
  gafds::LabeledDataset ds;
};

struct gafds_features {
  gafds::FeatureMatrix m;
};

namespace {

using json = nlohmann::json;
using gafds::ErrorKind;
using gafds::fail;

thread_local std::string g_last_error;

gafds_status status_of(ErrorKind k) {
  switch (k) {
    case ErrorKind::invalid_argument: return GAFDS_INVALID_ARGUMENT;
    case ErrorKind::io: return GAFDS_IO;
    case ErrorKind::parse: return GAFDS_PARSE;
    case ErrorKind::numeric: return GAFDS_NUMERIC;
  }
  return GAFDS_INTERNAL;
}

template <class F>
gafds_status guard(F&& fn) {
  try {
    fn();
    g_last_error.clear();
    return GAFDS_OK;
  } catch (const gafds::Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return GAFDS_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return GAFDS_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return GAFDS_INTERNAL;
  }
}

void need(const void* p, const char* name) {
  if (!p) fail(ErrorKind::invalid_argument, std::string(name) + " must not be NULL");
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

json parse_options(const char* text, const char* what) {
  if (!text || !*text) return json::object();
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, std::string(what) + ": " + e.what());
  }
  if (!j.is_object()) fail(ErrorKind::parse, std::string(what) + " must be a JSON object");
  return j;
}

void allow_keys(const json& j, std::initializer_list<const char*> keys, const char* what) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : keys) ok = ok || it.key() == k;
    if (!ok) fail(ErrorKind::invalid_argument, "unknown key '" + it.key() + "' in " + what);
  }
}

template <class T>
T get(const json& j, const char* key, T fallback, const char* what) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    fail(ErrorKind::parse, std::string(what) + "." + key + " has the wrong type");
  }
}

std::uint64_t get_seed(const json& j, const char* what) {
  if (!j.contains("seed")) return 0;
  if (!j["seed"].is_number_unsigned()) fail(ErrorKind::parse, std::string(what) + ".seed must be a non-negative integer");
  return j["seed"].get<std::uint64_t>();
}

std::vector<std::string> name_list(const char* text, const char* what) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, std::string(what) + ": " + e.what());
  }
  if (!j.is_array()) fail(ErrorKind::parse, std::string(what) + " must be an array of strings");
  std::vector<std::string> out;
  for (const auto& v : j) {
    if (!v.is_string()) fail(ErrorKind::parse, std::string(what) + " must be an array of strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

const gafds::Record& find_record(const gafds::LabeledDataset& ds, const char* id) {
  for (const auto& r : ds.records()) {
    if (r.id == id) return r;
  }
  fail(ErrorKind::invalid_argument, std::string("no record with id '") + id + "'");
}

}  // namespace

extern "C" {

const char* gafds_version(void) { return "0.1.0"; }

const char* gafds_status_name(gafds_status status) {
  switch (status) {
    case GAFDS_OK: return "ok";
    case GAFDS_INVALID_ARGUMENT: return "invalid_argument";
    case GAFDS_IO: return "io";
    case GAFDS_PARSE: return "parse";
    case GAFDS_NUMERIC: return "numeric";
    case GAFDS_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* gafds_last_error(void) { return g_last_error.c_str(); }

void gafds_string_free(char* s) { std::free(s); }

// ---- datasets ---------------------------------------------------------------

gafds_status gafds_dataset_load_bonn(const char* dir, const char* label, double sample_rate, gafds_dataset** out) {
  return guard([&] {
    need(dir, "dir");
    need(label, "label");
    need(out, "out");
    const double rate = sample_rate > 0.0 ? sample_rate : gafds::kBonnSampleRate;
    *out = new gafds_dataset{gafds::load_bonn_directory(dir, label, rate)};
  });
}

gafds_status gafds_dataset_load_csv(const char* path, gafds_dataset** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    std::ifstream in(path);
    if (!in) fail(ErrorKind::io, std::string("cannot open ") + path);
    *out = new gafds_dataset{gafds::read_dataset_csv(in)};
  });
}

gafds_status gafds_dataset_save_csv(const gafds_dataset* ds, const char* path) {
  return guard([&] {
    need(ds, "ds");
    need(path, "path");
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(ErrorKind::io, std::string("cannot write ") + path);
    gafds::write_dataset_csv(ds->ds, f);
    if (!f) fail(ErrorKind::io, std::string("failed writing ") + path);
  });
}

gafds_status gafds_dataset_csv(const gafds_dataset* ds, char** csv) {
  return guard([&] {
    need(ds, "ds");
    need(csv, "csv");
    std::ostringstream os;
    gafds::write_dataset_csv(ds->ds, os);
    *csv = dup(os.str());
  });
}

gafds_status gafds_dataset_append(gafds_dataset* dst, const gafds_dataset* src) {
  return guard([&] {
    need(dst, "dst");
    need(src, "src");
    dst->ds.append(src->ds);
  });
}

gafds_status gafds_dataset_synthesize(const char* spec_json, uint64_t seed, gafds_dataset** out) {
  return guard([&] {
    need(spec_json, "spec_json");
    need(out, "out");
    const auto spec = gafds::parse_synthetic_spec(spec_json);
    *out = new gafds_dataset{gafds::synthesize_dataset(spec, gafds::stage_seeds(seed).synth)};
  });
}

gafds_status gafds_dataset_regroup(const gafds_dataset* ds, const char* groups_json, gafds_dataset** out) {
  return guard([&] {
    need(ds, "ds");
    need(groups_json, "groups_json");
    need(out, "out");
    *out = new gafds_dataset{gafds::apply_groups(ds->ds, gafds::parse_label_groups(groups_json))};
  });
}

gafds_status gafds_dataset_size(const gafds_dataset* ds, size_t* records) {
  return guard([&] {
    need(ds, "ds");
    need(records, "records");
    *records = ds->ds.size();
  });
}

void gafds_dataset_free(gafds_dataset* ds) { delete ds; }

// ---- spectra ----------------------------------------------------------------

gafds_status gafds_spectrum_csv(const gafds_dataset* ds, const char* record_id, const char* source, char** csv) {
  return guard([&] {
    need(ds, "ds");
    need(record_id, "record_id");
    need(csv, "csv");
    const auto src = gafds::spectrum_source_from_string(source && *source ? source : "fourier");
    const auto y = gafds::compute_spectrum(find_record(ds->ds, record_id).series, src);
    std::ostringstream os;
    gafds::write_spectrum_csv(y, os);
    *csv = dup(os.str());
  });
}

gafds_status gafds_mfdfa_csv(const gafds_dataset* ds, const char* record_id, char** csv) {
  return guard([&] {
    need(ds, "ds");
    need(record_id, "record_id");
    need(csv, "csv");
    const auto s = gafds::mfdfa(find_record(ds->ds, record_id).series.samples());
    std::ostringstream os;
    gafds::write_mfdfa_csv(s, os);
    *csv = dup(os.str());
  });
}

// ---- search and extraction ----------------------------------------------------

gafds_status gafds_search(const gafds_dataset* ds, const char* options_json, char** result_json) {
  return guard([&] {
    need(ds, "ds");
    need(result_json, "result_json");
    const json o = parse_options(options_json, "search options");
    allow_keys(o, {"alpha", "spectrum_source", "seed", "threads", "ga"}, "search options");
    const auto alpha = get<std::size_t>(o, "alpha", 4, "search options");
    if (alpha == 0) fail(ErrorKind::invalid_argument, "alpha must be >= 1");
    const auto source = gafds::spectrum_source_from_string(get<std::string>(o, "spectrum_source", "fourier", "search options"));
    const auto threads = get<unsigned>(o, "threads", 0, "search options");
    const gafds::GaConfig ga = o.contains("ga") ? gafds::parse_ga_config(o["ga"].dump()) : gafds::GaConfig{};
    const auto r = gafds::search_stage(ds->ds, alpha, source, ga, get_seed(o, "search options"), threads);
    *result_json = dup(gafds::search_result_to_json(r));
  });
}

gafds_status gafds_extract(const gafds_dataset* ds, const char* search_json, const char* options_json,
                           gafds_features** out) {
  return guard([&] {
    need(ds, "ds");
    need(search_json, "search_json");
    need(out, "out");
    const json o = parse_options(options_json, "extract options");
    allow_keys(o, {"nonlinear", "nonlinear_options", "threads"}, "extract options");
    const bool nonlinear = get<bool>(o, "nonlinear", true, "extract options");
    const auto opt = o.contains("nonlinear_options") ? gafds::parse_nonlinear_options(o["nonlinear_options"].dump())
                                                     : gafds::NonlinearOptions{};
    const auto threads = get<unsigned>(o, "threads", 0, "extract options");
    const auto search = gafds::search_result_from_json(search_json);
    *out = new gafds_features{gafds::extract_stage(ds->ds, search, nonlinear, opt, threads)};
  });
}

gafds_status gafds_features_load_csv(const char* path, gafds_features** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    std::ifstream in(path);
    if (!in) fail(ErrorKind::io, std::string("cannot open ") + path);
    *out = new gafds_features{gafds::read_features_csv(in)};
  });
}

gafds_status gafds_features_save_csv(const gafds_features* f, const char* path) {
  return guard([&] {
    need(f, "f");
    need(path, "path");
    std::ofstream os(path, std::ios::binary);
    if (!os) fail(ErrorKind::io, std::string("cannot write ") + path);
    gafds::write_features_csv(f->m, os);
    if (!os) fail(ErrorKind::io, std::string("failed writing ") + path);
  });
}

gafds_status gafds_features_csv(const gafds_features* f, char** csv) {
  return guard([&] {
    need(f, "f");
    need(csv, "csv");
    std::ostringstream os;
    gafds::write_features_csv(f->m, os);
    *csv = dup(os.str());
  });
}

gafds_status gafds_features_shape(const gafds_features* f, size_t* rows, size_t* cols) {
  return guard([&] {
    need(f, "f");
    if (rows) *rows = f->m.rows();
    if (cols) *cols = f->m.cols();
  });
}

gafds_status gafds_features_select(const gafds_features* f, const char* names_json, gafds_features** out) {
  return guard([&] {
    need(f, "f");
    need(names_json, "names_json");
    need(out, "out");
    const auto names = name_list(names_json, "column names");
    if (names.empty()) fail(ErrorKind::invalid_argument, "select at least one column");
    *out = new gafds_features{f->m.select_columns(names)};
  });
}

void gafds_features_free(gafds_features* f) { delete f; }

// ---- selection, evaluation, ratios ---------------------------------------------

gafds_status gafds_select(const gafds_features* f, const char* options_json, char** mask_json) {
  return guard([&] {
    need(f, "f");
    need(mask_json, "mask_json");
    const json o = parse_options(options_json, "selection options");
    allow_keys(o, {"seed", "threads", "selection"}, "selection options");
    const auto cfg = o.contains("selection") ? gafds::parse_selection_config(o["selection"].dump())
                                             : gafds::SelectionConfig{};
    const auto threads = get<unsigned>(o, "threads", 0, "selection options");
    const auto r = gafds::selection_stage(f->m, cfg, get_seed(o, "selection options"), threads);
    *mask_json = dup(gafds::selection_to_json(r));
  });
}

gafds_status gafds_evaluate(const gafds_features* f, const char* options_json, char** report_json,
                            char** report_csv) {
  return guard([&] {
    need(f, "f");
    const json o = parse_options(options_json, "evaluation options");
    allow_keys(o, {"task", "seed", "threads", "folds", "classifiers", "normalize"}, "evaluation options");
    std::vector<gafds::ClassifierSpec> classifiers = gafds::default_classifiers();
    if (o.contains("classifiers")) {
      if (!o["classifiers"].is_array() || o["classifiers"].empty()) {
        fail(ErrorKind::invalid_argument, "classifiers must be a non-empty array");
      }
      classifiers.clear();
      for (const auto& c : o["classifiers"]) classifiers.push_back(gafds::parse_classifier_spec(c.dump()));
    }
    const auto folds = get<std::vector<std::size_t>>(o, "folds", {2, 5, 10}, "evaluation options");
    const auto report = gafds::evaluation_stage(
        f->m, get<std::string>(o, "task", "task", "evaluation options"), classifiers, folds,
        get<bool>(o, "normalize", false, "evaluation options"), get_seed(o, "evaluation options"),
        get<unsigned>(o, "threads", 0, "evaluation options"));
    std::string js = gafds::report_to_json(report);
    std::ostringstream os;
    gafds::write_report_csv(report, os);
    // Allocate both before handing either out so a failure leaks nothing.
    char* a = report_json ? dup(js) : nullptr;
    char* b = nullptr;
    try {
      b = report_csv ? dup(os.str()) : nullptr;
    } catch (...) {
      std::free(a);
      throw;
    }
    if (report_json) *report_json = a;
    if (report_csv) *report_csv = b;
  });
}

gafds_status gafds_ratios_csv(const gafds_features* f, const char* subset_json, int normalized, char** csv) {
  return guard([&] {
    need(f, "f");
    need(csv, "csv");
    const auto subset = subset_json && *subset_json ? name_list(subset_json, "ratio subset") : f->m.names();
    std::ostringstream os;
    gafds::write_ratio_csv(gafds::distance_ratio_table(f->m, subset, normalized != 0), os);
    *csv = dup(os.str());
  });
}

// ---- pipeline -----------------------------------------------------------------

gafds_status gafds_run_pipeline(const char* config_json, const char* out_dir, unsigned threads,
                                char** manifest_json) {
  return guard([&] {
    need(config_json, "config_json");
    const auto cfg = gafds::parse_experiment_config(config_json);
    std::string dir = out_dir && *out_dir ? out_dir : cfg.output_dir;
    if (dir.empty()) fail(ErrorKind::invalid_argument, "no output directory given");
    const auto manifest = gafds::run_pipeline(cfg, dir, threads);
    if (manifest_json) *manifest_json = dup(manifest);
  });
}

}  // extern "C"
