#include "gafds/frequency_search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "gafds/classifiers.hpp"
#include "json.hpp"

namespace gafds {

using json = nlohmann::json;

std::string to_string(FitnessMode m) {
  return m == FitnessMode::split_accuracy ? "split_accuracy" : "resubstitution";
}

FitnessMode fitness_mode_from_string(const std::string& s) {
  if (s == "split_accuracy") return FitnessMode::split_accuracy;
  if (s == "resubstitution") return FitnessMode::resubstitution;
  fail(ErrorKind::invalid_argument, "unknown fitness_mode '" + s + "' (split_accuracy | resubstitution)");
}

void GaConfig::validate() const {
  if (population_size < 2) fail(ErrorKind::invalid_argument, "population_size must be >= 2");
  if (max_generations < 1) fail(ErrorKind::invalid_argument, "max_generations must be >= 1");
  if (elitism_count >= population_size) fail(ErrorKind::invalid_argument, "elitism_count must be < population_size");
  if (!(crossover_prob >= 0.0 && crossover_prob <= 1.0)) fail(ErrorKind::invalid_argument, "crossover_prob must be in [0, 1]");
  if (!(mutation_prob >= 0.0 && mutation_prob <= 1.0)) fail(ErrorKind::invalid_argument, "mutation_prob must be in [0, 1]");
  if (mutation_sigma && !(*mutation_sigma >= 0.0 && std::isfinite(*mutation_sigma))) {
    fail(ErrorKind::invalid_argument, "mutation_sigma must be a finite value >= 0");
  }
  if (!(penalty > 0.0 && std::isfinite(penalty))) fail(ErrorKind::invalid_argument, "penalty must be positive");
}

FitnessEvaluator::FitnessEvaluator(std::span<const Spectrum> spectra, std::span<const std::string> labels,
                                   double penalty, FitnessMode mode, std::uint64_t split_seed)
    : labels_(labels.begin(), labels.end()), penalty_(penalty), mode_(mode) {
  if (spectra.size() != labels.size()) fail(ErrorKind::invalid_argument, "spectra and labels differ in count");
  if (spectra.empty()) fail(ErrorKind::invalid_argument, "no spectra to search");
  class_labels_ = labels_;
  std::sort(class_labels_.begin(), class_labels_.end());
  class_labels_.erase(std::unique(class_labels_.begin(), class_labels_.end()), class_labels_.end());
  if (class_labels_.size() < 2) fail(ErrorKind::invalid_argument, "fitness needs at least 2 classes");
  for (const auto& c : class_labels_) {
    if (std::count(labels_.begin(), labels_.end(), c) < 2) {
      fail(ErrorKind::invalid_argument, "fitness needs >= 2 records of class " + c);
    }
  }

  nyquist_hz_ = std::numeric_limits<double>::infinity();
  for (const auto& s : spectra) {
    spectra_.push_back(&s);
    means_.emplace_back(s);
    nyquist_hz_ = std::min(nyquist_hz_, s.nyquist_hz());
  }

  if (mode_ == FitnessMode::split_accuracy) {
    const auto plan = make_folds(labels, 2, split_seed);
    for (std::size_t f = 0; f < 2; ++f) {
      train_.push_back(plan.train_indices(f));
      test_.push_back(plan.test_indices(f));
    }
  } else {
    std::vector<std::size_t> all(labels_.size());
    std::iota(all.begin(), all.end(), 0);
    train_.push_back(all);
    test_.push_back(all);
  }
}

bool FitnessEvaluator::pair_valid(const IntervalGenome& g, std::size_t k) const {
  const auto iv = g.interval(k);
  return std::all_of(spectra_.begin(), spectra_.end(),
                     [&](const Spectrum* s) { return interval_bins(*s, iv).has_value(); });
}

double FitnessEvaluator::operator()(const IntervalGenome& g) const {
  if (g.bounds.size() % 2 != 0 || g.bounds.empty()) fail(ErrorKind::invalid_argument, "genome must hold 2*alpha bounds");
  std::vector<std::size_t> valid;
  for (std::size_t k = 0; k < g.alpha(); ++k) {
    if (pair_valid(g, k)) valid.push_back(k);
  }
  const double slack = penalty_ * static_cast<double>(g.alpha() - valid.size());
  if (valid.empty()) return -slack;

  const std::size_t n = labels_.size();
  const auto d = static_cast<Eigen::Index>(valid.size());
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), d);
  std::vector<int> y(n);
  for (std::size_t r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < d; ++c) {
      const auto bins = interval_bins(*spectra_[r], g.interval(valid[static_cast<std::size_t>(c)]));
      x(static_cast<Eigen::Index>(r), c) = means_[r].mean(*bins);
    }
    y[r] = static_cast<int>(std::lower_bound(class_labels_.begin(), class_labels_.end(), labels_[r]) -
                            class_labels_.begin());
  }

  double score = 0.0;
  for (std::size_t f = 0; f < train_.size(); ++f) {
    LabeledMatrix data;
    data.classes = class_labels_.size();
    data.x.resize(static_cast<Eigen::Index>(train_[f].size()), d);
    for (std::size_t i = 0; i < train_[f].size(); ++i) {
      data.x.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(train_[f][i]));
      data.y.push_back(y[train_[f][i]]);
    }
    try {
      const auto model = fit_lda(data, ClassifierSpec{}.ridge);
      std::size_t correct = 0;
      for (auto i : test_[f]) {
        if (predict_index(model, x.row(static_cast<Eigen::Index>(i)).transpose()) == y[i]) ++correct;
      }
      score += static_cast<double>(correct) / static_cast<double>(test_[f].size());
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::numeric) throw;  // a degenerate fold simply scores 0
    }
  }
  return score / static_cast<double>(train_.size()) - slack;
}

double evaluate_fitness(const IntervalGenome& g, std::span<const Spectrum> spectra,
                        std::span<const std::string> labels, const GaConfig& cfg) {
  cfg.validate();
  const FitnessEvaluator eval(spectra, labels, cfg.penalty, cfg.fitness_mode, derive_seed(cfg.seed, 1));
  return eval(g);
}

IntervalGenome random_genome(std::size_t alpha, double nyquist_hz, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, nyquist_hz);
  IntervalGenome g;
  g.bounds.resize(2 * alpha);
  for (auto& b : g.bounds) b = u(rng);
  return g;
}

std::pair<IntervalGenome, IntervalGenome> crossover(const IntervalGenome& a, const IntervalGenome& b,
                                                    std::size_t c1, std::size_t c2) {
  if (a.bounds.size() != b.bounds.size()) fail(ErrorKind::invalid_argument, "crossover: parents differ in alpha");
  if (c1 > c2 || c2 > a.bounds.size()) fail(ErrorKind::invalid_argument, "crossover: bad cut points");
  IntervalGenome x = a;
  IntervalGenome y = b;
  for (std::size_t i = c1; i < c2; ++i) std::swap(x.bounds[i], y.bounds[i]);
  return {std::move(x), std::move(y)};
}

std::pair<IntervalGenome, IntervalGenome> crossover(const IntervalGenome& a, const IntervalGenome& b, Rng& rng) {
  std::uniform_int_distribution<std::size_t> cut(0, a.bounds.size());
  std::size_t c1 = cut(rng);
  std::size_t c2 = cut(rng);
  if (c1 > c2) std::swap(c1, c2);
  return crossover(a, b, c1, c2);
}

IntervalGenome mutate(const IntervalGenome& g, double mutation_prob, double sigma_hz, double nyquist_hz, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  IntervalGenome out = g;
  for (auto& b : out.bounds) {
    if (u(rng) < mutation_prob) b = std::clamp(b + sigma_hz * noise(rng), 0.0, nyquist_hz);
  }
  return out;
}

std::vector<double> roulette_weights(std::span<const double> fitness) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (double f : fitness) {
    if (std::isfinite(f)) {
      lo = std::min(lo, f);
      hi = std::max(hi, f);
    }
  }
  std::vector<double> w(fitness.size(), 1.0);
  if (!std::isfinite(lo)) return w;
  const double eps = 1e-6 * (hi - lo + 1.0);
  for (std::size_t i = 0; i < fitness.size(); ++i) w[i] = std::isfinite(fitness[i]) ? fitness[i] - lo + eps : 0.0;
  return w;
}

std::vector<std::size_t> sample_by_weight(std::span<const double> weights, std::size_t count, Rng& rng) {
  if (weights.empty()) fail(ErrorKind::invalid_argument, "cannot select from an empty population");
  std::vector<double> cum(weights.size());
  std::partial_sum(weights.begin(), weights.end(), cum.begin());
  const double total = cum.back();
  if (!(total > 0.0)) fail(ErrorKind::invalid_argument, "roulette weights sum to zero");
  std::uniform_real_distribution<double> u(0.0, total);
  std::vector<std::size_t> out(count);
  for (auto& o : out) {
    const double r = u(rng);
    auto it = std::upper_bound(cum.begin(), cum.end(), r);
    if (it == cum.end()) --it;
    // Skip zero-weight slots that share a cumulative value with their predecessor.
    while (weights[static_cast<std::size_t>(it - cum.begin())] <= 0.0 && it != cum.begin()) --it;
    o = static_cast<std::size_t>(it - cum.begin());
  }
  return out;
}

std::vector<std::size_t> roulette_select(std::span<const double> fitness, std::size_t count, Rng& rng) {
  const auto w = roulette_weights(fitness);
  return sample_by_weight(w, count, rng);
}

namespace {

// Indices of the `count` fittest individuals; earlier index wins ties.
std::vector<std::size_t> elite_indices(std::span<const double> fitness, std::size_t count) {
  std::vector<std::size_t> idx(fitness.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return fitness[a] > fitness[b]; });
  idx.resize(std::min(count, idx.size()));
  return idx;
}

}  // namespace

SearchResult run_search(std::span<const Spectrum> spectra, std::span<const std::string> labels, std::size_t alpha,
                        const GaConfig& cfg) {
  cfg.validate();
  if (alpha == 0) fail(ErrorKind::invalid_argument, "alpha must be >= 1");
  const FitnessEvaluator eval(spectra, labels, cfg.penalty, cfg.fitness_mode, derive_seed(cfg.seed, 1));
  const double nyq = eval.nyquist_hz();
  const double sigma = cfg.mutation_sigma.value_or(0.05 * nyq);
  Rng rng(derive_seed(cfg.seed, 2));

  const std::size_t m = cfg.population_size;
  std::vector<IntervalGenome> pop;
  for (std::size_t i = 0; i < m; ++i) pop.push_back(random_genome(alpha, nyq, rng));
  std::vector<double> fit(m);
  parallel_for(m, cfg.threads, [&](std::size_t i) { fit[i] = eval(pop[i]); });

  SearchResult result;
  result.nyquist_hz = nyq;
  result.source = spectra.front().source();
  auto best = elite_indices(fit, 1).front();
  result.best_genome = pop[best];
  result.best_fitness = fit[best];
  result.fitness_history.push_back(fit[best]);

  std::size_t stagnant = 0;
  for (std::size_t gen = 1; gen < cfg.max_generations; ++gen) {
    std::vector<IntervalGenome> next;
    std::vector<double> next_fit;
    for (auto e : elite_indices(fit, cfg.elitism_count)) {
      next.push_back(pop[e]);
      next_fit.push_back(fit[e]);
    }
    const std::size_t first_child = next.size();
    const auto weights = roulette_weights(fit);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    while (next.size() < m) {
      const auto parents = sample_by_weight(weights, 2, rng);
      auto children = u(rng) < cfg.crossover_prob ? crossover(pop[parents[0]], pop[parents[1]], rng)
                                                  : std::pair{pop[parents[0]], pop[parents[1]]};
      next.push_back(mutate(children.first, cfg.mutation_prob, sigma, nyq, rng));
      if (next.size() < m) next.push_back(mutate(children.second, cfg.mutation_prob, sigma, nyq, rng));
    }
    next_fit.resize(m);
    parallel_for(m - first_child, cfg.threads,
                 [&](std::size_t i) { next_fit[first_child + i] = eval(next[first_child + i]); });
    pop = std::move(next);
    fit = std::move(next_fit);

    best = elite_indices(fit, 1).front();
    result.fitness_history.push_back(fit[best]);
    if (fit[best] > result.best_fitness) {
      result.best_fitness = fit[best];
      result.best_genome = pop[best];
      stagnant = 0;
    } else if (cfg.stagnation_generations > 0 && ++stagnant >= cfg.stagnation_generations) {
      break;
    }
  }
  result.generations = result.fitness_history.size();

  for (std::size_t k = 0; k < alpha; ++k) {
    if (eval.pair_valid(result.best_genome, k)) {
      result.resolved_pairs.push_back(k);
      result.resolved_intervals.push_back(result.best_genome.interval(k));
    }
  }
  return result;
}

std::vector<Spectrum> compute_spectra(const LabeledDataset& dataset, SpectrumSource source, unsigned threads) {
  std::vector<std::optional<Spectrum>> tmp(dataset.size());
  parallel_for(dataset.size(), threads,
               [&](std::size_t i) { tmp[i].emplace(compute_spectrum(dataset.records()[i].series, source)); });
  std::vector<Spectrum> out;
  out.reserve(tmp.size());
  for (auto& s : tmp) out.push_back(std::move(*s));
  return out;
}

namespace {

FeatureMatrix interval_columns(std::span<const FrequencyInterval> intervals, std::vector<std::string> names,
                               std::span<const Spectrum> spectra, const LabeledDataset& dataset) {
  if (spectra.size() != dataset.size()) fail(ErrorKind::invalid_argument, "spectra and dataset differ in size");
  std::vector<double> values;
  values.reserve(spectra.size() * intervals.size());
  std::vector<std::string> ids;
  for (std::size_t r = 0; r < spectra.size(); ++r) {
    for (const auto& iv : intervals) values.push_back(interval_feature(spectra[r], iv));
    ids.push_back(dataset.records()[r].id);
  }
  return FeatureMatrix(std::move(names), std::move(ids), dataset.labels(), std::move(values));
}

}  // namespace

FeatureMatrix extract_gafds_features(const IntervalGenome& g, std::span<const Spectrum> spectra,
                                     const LabeledDataset& dataset) {
  std::vector<FrequencyInterval> ivs;
  std::vector<std::string> names;
  for (std::size_t k = 0; k < g.alpha(); ++k) {
    ivs.push_back(g.interval(k));
    names.push_back("f_" + std::to_string(k + 1));
  }
  return interval_columns(ivs, std::move(names), spectra, dataset);
}

FeatureMatrix extract_gafds_features(const SearchResult& result, std::span<const Spectrum> spectra,
                                     const LabeledDataset& dataset) {
  std::vector<std::string> names;
  for (auto k : result.resolved_pairs) names.push_back("f_" + std::to_string(k + 1));
  return interval_columns(result.resolved_intervals, std::move(names), spectra, dataset);
}

std::string search_result_to_json(const SearchResult& r) {
  json ivs = json::array();
  for (std::size_t i = 0; i < r.resolved_intervals.size(); ++i) {
    ivs.push_back({{"pair", r.resolved_pairs[i]},
                   {"lo_hz", r.resolved_intervals[i].lo_hz},
                   {"hi_hz", r.resolved_intervals[i].hi_hz}});
  }
  const json j = {{"alpha", r.best_genome.alpha()},
                  {"spectrum_source", to_string(r.source)},
                  {"nyquist_hz", r.nyquist_hz},
                  {"genome_hz", r.best_genome.bounds},
                  {"best_fitness", r.best_fitness},
                  {"generations", r.generations},
                  {"fitness_history", r.fitness_history},
                  {"resolved_intervals", std::move(ivs)}};
  return j.dump(2);
}

SearchResult search_result_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    SearchResult r;
    r.best_genome.bounds = j.at("genome_hz").get<std::vector<double>>();
    if (r.best_genome.bounds.size() != 2 * j.at("alpha").get<std::size_t>()) {
      fail(ErrorKind::parse, "search result: genome length does not match alpha");
    }
    r.nyquist_hz = j.at("nyquist_hz").get<double>();
    r.source = spectrum_source_from_string(j.value("spectrum_source", std::string("fourier")));
    r.best_fitness = j.at("best_fitness").get<double>();
    r.generations = j.at("generations").get<std::size_t>();
    r.fitness_history = j.at("fitness_history").get<std::vector<double>>();
    for (const auto& iv : j.at("resolved_intervals")) {
      r.resolved_pairs.push_back(iv.at("pair").get<std::size_t>());
      r.resolved_intervals.push_back({iv.at("lo_hz").get<double>(), iv.at("hi_hz").get<double>()});
    }
    return r;
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, std::string("search result json: ") + e.what());
  }
}

}  // namespace gafds
