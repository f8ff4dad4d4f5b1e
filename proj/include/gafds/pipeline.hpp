#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gafds/classifiers.hpp"
#include "gafds/dataset.hpp"
#include "gafds/evaluation.hpp"
#include "gafds/frequency_search.hpp"
#include "gafds/nonlinear.hpp"
#include "gafds/selection.hpp"
#include "gafds/spectrum.hpp"

namespace gafds {

// Every stage draws from its own stream of the master seed, so a stage run on
// its own (CLI subcommand, C API) reproduces the same stage inside `run`.
struct StageSeeds {
  std::uint64_t synth = 0;
  std::uint64_t search = 0;
  std::uint64_t selection = 0;
  std::uint64_t folds = 0;
  std::uint64_t mlp = 0;
};
StageSeeds stage_seeds(std::uint64_t master);

// ---- JSON option blocks (unknown keys are errors) --------------------------

GaConfig parse_ga_config(const std::string& json);
SelectionConfig parse_selection_config(const std::string& json);
ClassifierSpec parse_classifier_spec(const std::string& json);  // object or bare kind string
NonlinearOptions parse_nonlinear_options(const std::string& json);
SyntheticSpec parse_synthetic_spec(const std::string& json);
LabelGroups parse_label_groups(const std::string& json);

struct ExperimentConfig {
  std::string task = "task";
  // Exactly one dataset source.
  std::optional<SyntheticSpec> synthetic;
  std::vector<std::pair<std::string, std::string>> bonn;  // label -> directory
  std::string dataset_csv;
  double sample_rate = kBonnSampleRate;  // Bonn directories only
  LabelGroups groups;                    // empty: labels used as-is

  SpectrumSource spectrum_source = SpectrumSource::fourier;
  std::size_t alpha = 4;
  GaConfig search;
  bool nonlinear = true;
  NonlinearOptions nonlinear_options;
  bool selection = true;
  SelectionConfig selection_config;
  std::vector<ClassifierSpec> classifiers = default_classifiers();
  std::vector<std::size_t> folds{2, 5, 10};
  bool normalize = false;
  std::vector<std::string> ratio_features;  // empty: the frequency-interval features
  std::uint64_t seed = 0;
  std::string output_dir;
};

ExperimentConfig parse_experiment_config(const std::string& json);
// Canonical form with every default spelled out; its hash goes in the manifest.
std::string experiment_config_to_json(const ExperimentConfig& cfg);

// ---- stages shared by the pipeline, the C API and the CLI -------------------

LabeledDataset load_dataset(const ExperimentConfig& cfg);

SearchResult search_stage(const LabeledDataset& ds, std::size_t alpha, SpectrumSource source, GaConfig ga,
                          std::uint64_t master_seed, unsigned threads);

// Frequency-interval columns from the resolved intervals, then (optionally) the
// nine nonlinear columns numbered after the genome's alpha.
FeatureMatrix extract_stage(const LabeledDataset& ds, const SearchResult& search, bool nonlinear,
                            NonlinearOptions opt, unsigned threads);

SelectionResult selection_stage(const FeatureMatrix& features, SelectionConfig cfg, std::uint64_t master_seed,
                                unsigned threads);

EvaluationReport evaluation_stage(const FeatureMatrix& features, const std::string& task,
                                  std::vector<ClassifierSpec> classifiers, std::vector<std::size_t> folds,
                                  bool normalize, std::uint64_t master_seed, unsigned threads);

// Runs ingest -> spectrum -> search -> extraction -> selection -> evaluation ->
// ratios, writing every artifact into `out_dir`. Returns the manifest JSON.
// On failure the manifest records the failed stage and the error is rethrown.
std::string run_pipeline(const ExperimentConfig& cfg, const std::filesystem::path& out_dir, unsigned threads = 0);

}  // namespace gafds
