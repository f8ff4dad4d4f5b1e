#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gafds/common.hpp"
#include "gafds/features.hpp"
#include "gafds/spectrum.hpp"

namespace gafds {

// How the LDA term of the fitness is scored.
enum class FitnessMode {
  split_accuracy,  // seeded stratified 2-fold split, mean test accuracy
  resubstitution,  // fit and score on all records
};

std::string to_string(FitnessMode m);
FitnessMode fitness_mode_from_string(const std::string& s);

struct GaConfig {
  std::size_t population_size = 100;
  std::size_t max_generations = 100;  // includes the initial population
  std::size_t stagnation_generations = 25;  // 0 disables the early stop
  double crossover_prob = 0.8;
  double mutation_prob = 0.1;             // per gene
  std::optional<double> mutation_sigma;   // Hz; unset means 5% of Nyquist
  std::size_t elitism_count = 1;
  double penalty = 1.0;
  std::uint64_t seed = 0;
  FitnessMode fitness_mode = FitnessMode::split_accuracy;
  unsigned threads = 0;  // fitness workers; never affects the result

  void validate() const;
};

// 2*alpha frequency bounds in Hz; pair k is (bounds[2k], bounds[2k+1]).
struct IntervalGenome {
  std::vector<double> bounds;

  std::size_t alpha() const { return bounds.size() / 2; }
  FrequencyInterval interval(std::size_t k) const { return {bounds[2 * k], bounds[2 * k + 1]}; }
  bool operator==(const IntervalGenome&) const = default;
};

struct SearchResult {
  IntervalGenome best_genome;
  double best_fitness = 0.0;
  std::vector<double> fitness_history;  // best fitness of each generation's population
  std::vector<std::size_t> resolved_pairs;  // genome pair index of each resolved interval
  std::vector<FrequencyInterval> resolved_intervals;  // valid intervals only, genome order
  double nyquist_hz = 0.0;
  std::size_t generations = 0;
  SpectrumSource source = SpectrumSource::fourier;  // spectra the search ran on
};

// Precomputed per-record interval means plus the internal fold split, so one
// genome evaluation costs O(records * alpha) plus an LDA fit.
class FitnessEvaluator {
 public:
  FitnessEvaluator(std::span<const Spectrum> spectra, std::span<const std::string> labels, double penalty,
                   FitnessMode mode, std::uint64_t split_seed);

  double operator()(const IntervalGenome& g) const;

  // A pair is usable only when it maps to a valid bin range in every spectrum.
  bool pair_valid(const IntervalGenome& g, std::size_t k) const;
  double nyquist_hz() const { return nyquist_hz_; }

 private:
  std::vector<const Spectrum*> spectra_;
  std::vector<IntervalMeans> means_;
  std::vector<std::string> labels_;
  std::vector<std::string> class_labels_;
  std::vector<std::vector<std::size_t>> train_;
  std::vector<std::vector<std::size_t>> test_;
  double penalty_;
  FitnessMode mode_;
  double nyquist_hz_;
};

// LDA score on the valid pairs minus penalty * (number of invalid pairs).
double evaluate_fitness(const IntervalGenome& g, std::span<const Spectrum> spectra,
                        std::span<const std::string> labels, const GaConfig& cfg);

IntervalGenome random_genome(std::size_t alpha, double nyquist_hz, Rng& rng);

// Two-point crossover with cut points 0 <= c1 <= c2 <= 2*alpha: child 1 takes
// a outside [c1, c2) and b inside; child 2 the reverse.
std::pair<IntervalGenome, IntervalGenome> crossover(const IntervalGenome& a, const IntervalGenome& b,
                                                    std::size_t c1, std::size_t c2);
std::pair<IntervalGenome, IntervalGenome> crossover(const IntervalGenome& a, const IntervalGenome& b, Rng& rng);

IntervalGenome mutate(const IntervalGenome& g, double mutation_prob, double sigma_hz, double nyquist_hz, Rng& rng);

// Roulette weights: f - min + eps with eps = 1e-6 * (max - min + 1). Entries of
// -inf get weight 0; if nothing is finite every weight is 1.
std::vector<double> roulette_weights(std::span<const double> fitness);
// `count` indices drawn with replacement proportionally to `weights`.
std::vector<std::size_t> sample_by_weight(std::span<const double> weights, std::size_t count, Rng& rng);
std::vector<std::size_t> roulette_select(std::span<const double> fitness, std::size_t count, Rng& rng);

SearchResult run_search(std::span<const Spectrum> spectra, std::span<const std::string> labels, std::size_t alpha,
                        const GaConfig& cfg);

std::vector<Spectrum> compute_spectra(const LabeledDataset& dataset, SpectrumSource source, unsigned threads = 0);

// Columns f_1..f_alpha in genome order; throws if any pair is invalid.
FeatureMatrix extract_gafds_features(const IntervalGenome& g, std::span<const Spectrum> spectra,
                                     const LabeledDataset& dataset);
// Columns for the resolved intervals, named f_<pair index + 1>.
FeatureMatrix extract_gafds_features(const SearchResult& result, std::span<const Spectrum> spectra,
                                     const LabeledDataset& dataset);

std::string search_result_to_json(const SearchResult& r);
SearchResult search_result_from_json(const std::string& text);

}  // namespace gafds
