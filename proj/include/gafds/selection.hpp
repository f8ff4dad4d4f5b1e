#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "gafds/classifiers.hpp"
#include "gafds/features.hpp"

namespace gafds {

// corrected: FPR + (1 - TPR). literal: FPR - (1 - TPR) as printed.
enum class SubsetObjective { corrected, literal };

std::string to_string(SubsetObjective o);
SubsetObjective subset_objective_from_string(const std::string& s);

struct SelectionConfig {
  std::size_t population_size = 50;
  std::size_t max_generations = 60;  // includes the initial population
  double crossover_prob = 0.8;       // uniform crossover
  double mutation_prob = 0.0;        // per bit; 0 means 1/d
  std::size_t elitism_count = 1;
  std::uint64_t seed = 0;
  SubsetObjective objective = SubsetObjective::corrected;
  ClassifierSpec wrapper{ClassifierKind::lda};
  unsigned threads = 0;

  void validate() const;
};

using Mask = std::vector<std::uint8_t>;

// Objective to minimise from a stratified 2-fold split (seeded by `fold_seed`)
// of the wrapper classifier on the masked columns; rates are taken from the
// confusion matrix pooled over both folds. An all-zero mask is +inf.
double subset_objective(const Mask& mask, const FeatureMatrix& features, std::uint64_t fold_seed,
                        SubsetObjective objective = SubsetObjective::corrected,
                        const ClassifierSpec& wrapper = ClassifierSpec{ClassifierKind::lda});

struct SelectionResult {
  std::vector<std::string> feature_names;
  Mask best_mask;
  double best_objective = 0.0;
  std::vector<double> objective_history;  // best objective of each generation's population
  std::size_t evaluations = 0;            // distinct masks scored
};

SelectionResult run_selection(const FeatureMatrix& features, const SelectionConfig& cfg);

std::vector<std::string> selected_names(const SelectionResult& r);

std::string selection_to_json(const SelectionResult& r);
SelectionResult selection_from_json(const std::string& text);

}  // namespace gafds
