#include "gafds/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include "gafds/common.hpp"
#include "gafds/evaluation.hpp"
#include "gafds/frequency_search.hpp"
#include "json.hpp"

namespace gafds {

using json = nlohmann::json;

std::string to_string(SubsetObjective o) { return o == SubsetObjective::corrected ? "corrected" : "literal"; }

SubsetObjective subset_objective_from_string(const std::string& s) {
  if (s == "corrected") return SubsetObjective::corrected;
  if (s == "literal") return SubsetObjective::literal;
  fail(ErrorKind::invalid_argument, "unknown objective '" + s + "' (corrected | literal)");
}

void SelectionConfig::validate() const {
  if (population_size < 2) fail(ErrorKind::invalid_argument, "selection population_size must be >= 2");
  if (max_generations < 1) fail(ErrorKind::invalid_argument, "selection max_generations must be >= 1");
  if (elitism_count >= population_size) fail(ErrorKind::invalid_argument, "selection elitism_count must be < population_size");
  if (!(crossover_prob >= 0.0 && crossover_prob <= 1.0)) fail(ErrorKind::invalid_argument, "crossover_prob must be in [0, 1]");
  if (!(mutation_prob >= 0.0 && mutation_prob <= 1.0)) fail(ErrorKind::invalid_argument, "mutation_prob must be in [0, 1]");
  wrapper.validate();
}

double subset_objective(const Mask& mask, const FeatureMatrix& features, std::uint64_t fold_seed,
                        SubsetObjective objective, const ClassifierSpec& wrapper) {
  if (mask.size() != features.cols()) fail(ErrorKind::invalid_argument, "mask length differs from feature count");
  std::vector<std::size_t> cols;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) cols.push_back(i);
  }
  if (cols.empty()) return std::numeric_limits<double>::infinity();
  if (features.class_labels().size() < 2) fail(ErrorKind::invalid_argument, "selection needs at least 2 classes");

  const auto sub = features.select_columns(cols);
  const auto plan = make_folds(sub.labels(), 2, fold_seed);
  CvResult cv;
  try {
    cv = cross_validate(wrapper, sub, plan, CvOptions{false, 1});
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::numeric) return std::numeric_limits<double>::infinity();
    throw;
  }
  const double miss = 1.0 - cv.rates.tpr;
  return objective == SubsetObjective::corrected ? cv.rates.fpr + miss : cv.rates.fpr - miss;
}

namespace {

std::vector<std::size_t> best_first(std::span<const double> objective, std::size_t count) {
  std::vector<std::size_t> idx(objective.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return objective[a] < objective[b]; });
  idx.resize(std::min(count, idx.size()));
  return idx;
}

}  // namespace

SelectionResult run_selection(const FeatureMatrix& features, const SelectionConfig& cfg) {
  cfg.validate();
  const std::size_t d = features.cols();
  if (d < 2) fail(ErrorKind::invalid_argument, "selection needs at least 2 features");
  const double pm = cfg.mutation_prob > 0.0 ? cfg.mutation_prob : 1.0 / static_cast<double>(d);
  const std::uint64_t fold_seed = derive_seed(cfg.seed, 1);
  Rng rng(derive_seed(cfg.seed, 2));
  std::bernoulli_distribution coin(0.5);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  std::map<Mask, double> cache;
  // Scores every mask not yet cached, concurrently, then reads them back in order.
  auto score = [&](const std::vector<Mask>& pop) {
    std::vector<Mask> fresh;
    for (const auto& m : pop) {
      if (!cache.contains(m) && std::find(fresh.begin(), fresh.end(), m) == fresh.end()) fresh.push_back(m);
    }
    std::vector<double> vals(fresh.size());
    parallel_for(fresh.size(), cfg.threads, [&](std::size_t i) {
      vals[i] = subset_objective(fresh[i], features, fold_seed, cfg.objective, cfg.wrapper);
    });
    for (std::size_t i = 0; i < fresh.size(); ++i) cache.emplace(fresh[i], vals[i]);
    std::vector<double> out;
    for (const auto& m : pop) out.push_back(cache.at(m));
    return out;
  };

  std::vector<Mask> pop(cfg.population_size, Mask(d, 0));
  for (auto& m : pop) {
    for (auto& b : m) b = coin(rng) ? 1 : 0;
  }
  auto obj = score(pop);

  SelectionResult res;
  res.feature_names = features.names();
  auto best = best_first(obj, 1).front();
  res.best_mask = pop[best];
  res.best_objective = obj[best];
  res.objective_history.push_back(obj[best]);

  for (std::size_t gen = 1; gen < cfg.max_generations; ++gen) {
    std::vector<Mask> next;
    for (auto e : best_first(obj, cfg.elitism_count)) next.push_back(pop[e]);
    std::vector<double> fitness(obj.size());
    for (std::size_t i = 0; i < obj.size(); ++i) fitness[i] = -obj[i];
    const auto weights = roulette_weights(fitness);
    while (next.size() < cfg.population_size) {
      const auto parents = sample_by_weight(weights, 2, rng);
      Mask a = pop[parents[0]];
      Mask b = pop[parents[1]];
      if (u(rng) < cfg.crossover_prob) {
        for (std::size_t i = 0; i < d; ++i) {
          if (coin(rng)) std::swap(a[i], b[i]);
        }
      }
      for (auto* child : {&a, &b}) {
        for (auto& bit : *child) {
          if (u(rng) < pm) bit ^= 1;
        }
      }
      next.push_back(std::move(a));
      if (next.size() < cfg.population_size) next.push_back(std::move(b));
    }
    pop = std::move(next);
    obj = score(pop);
    best = best_first(obj, 1).front();
    res.objective_history.push_back(obj[best]);
    if (obj[best] < res.best_objective) {
      res.best_objective = obj[best];
      res.best_mask = pop[best];
    }
  }
  res.evaluations = cache.size();
  if (!std::isfinite(res.best_objective)) fail(ErrorKind::numeric, "selection found no scorable feature subset");
  return res;
}

std::vector<std::string> selected_names(const SelectionResult& r) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < r.best_mask.size(); ++i) {
    if (r.best_mask[i]) out.push_back(r.feature_names[i]);
  }
  return out;
}

std::string selection_to_json(const SelectionResult& r) {
  std::vector<int> bits(r.best_mask.begin(), r.best_mask.end());
  const json j = {{"features", r.feature_names},
                  {"mask", bits},
                  {"selected", selected_names(r)},
                  {"objective", r.best_objective},
                  {"objective_history", r.objective_history},
                  {"evaluations", r.evaluations}};
  return j.dump(2);
}

SelectionResult selection_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    SelectionResult r;
    r.feature_names = j.at("features").get<std::vector<std::string>>();
    for (int b : j.at("mask").get<std::vector<int>>()) {
      if (b != 0 && b != 1) fail(ErrorKind::parse, "mask entries must be 0 or 1");
      r.best_mask.push_back(static_cast<std::uint8_t>(b));
    }
    if (r.best_mask.size() != r.feature_names.size()) fail(ErrorKind::parse, "mask and feature list differ in length");
    r.best_objective = j.at("objective").get<double>();
    r.objective_history = j.value("objective_history", std::vector<double>{});
    r.evaluations = j.value("evaluations", std::size_t{0});
    return r;
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, std::string("mask json: ") + e.what());
  }
}

}  // namespace gafds
