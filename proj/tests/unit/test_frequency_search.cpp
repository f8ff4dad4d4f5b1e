#include <gtest/gtest.h>

#include <cmath>

#include "gafds/common.hpp"

#include <algorithm>
#include <cmath>

#include "gafds/classifiers.hpp"
#include "gafds/frequency_search.hpp"

using namespace gafds;

namespace {

LabeledDataset tone_dataset(std::size_t per_class = 50, std::uint64_t seed = 1) {
  SyntheticSpec spec;
  spec.classes = {{"A", {{10.0, 1.0}}, 0.5, per_class}, {"B", {{30.0, 1.0}}, 0.5, per_class}};
  return synthesize_dataset(spec, seed);
}

struct Fixture {
  LabeledDataset ds = tone_dataset();
  std::vector<Spectrum> spectra = compute_spectra(ds, SpectrumSource::fourier, 1);
  std::vector<std::string> labels = ds.labels();
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

IntervalGenome genome(std::vector<double> b) { return IntervalGenome{std::move(b)}; }

}  // namespace

TEST(GaConfig, Validation) {
  GaConfig c;
  EXPECT_NO_THROW(c.validate());
  c.population_size = 1;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.elitism_count = c.population_size;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.penalty = 0.0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Fitness, AllPairsInvalid) {
  const auto& f = fixture();
  GaConfig cfg;
  cfg.penalty = 1.5;
  const auto g = genome({20.0, 10.0, 5.0, 5.0, 63.0, 1.0});
  EXPECT_DOUBLE_EQ(evaluate_fitness(g, f.spectra, f.labels, cfg), -4.5);
}

TEST(Fitness, IntervalAroundToneIsPerfect) {
  const auto& f = fixture();
  const auto g = genome({9.0, 11.0});
  EXPECT_DOUBLE_EQ(evaluate_fitness(g, f.spectra, f.labels, GaConfig{}), 1.0);

  // Direct check: the band feature alone separates the classes, so any
  // threshold classifier (and LDA) is perfect on every split.
  double min_a = 1e300, max_b = 0.0;
  for (std::size_t i = 0; i < f.spectra.size(); ++i) {
    const double v = interval_feature(f.spectra[i], {9.0, 11.0});
    if (f.labels[i] == "A") min_a = std::min(min_a, v);
    else max_b = std::max(max_b, v);
  }
  EXPECT_GT(min_a, max_b);
}

TEST(Fitness, InvalidPairIsExcludedAndPenalised) {
  const auto& f = fixture();
  const GaConfig cfg;
  const double valid_only = evaluate_fitness(genome({9.0, 11.0}), f.spectra, f.labels, cfg);
  const double mixed = evaluate_fitness(genome({9.0, 11.0, 40.0, 12.0}), f.spectra, f.labels, cfg);
  EXPECT_DOUBLE_EQ(mixed, valid_only - cfg.penalty);
}

TEST(Fitness, PenaltyDominance) {
  const auto& f = fixture();
  const GaConfig cfg;
  Rng rng(3);
  for (int t = 0; t < 40; ++t) {
    auto g = random_genome(3, 64.0, rng);
    std::size_t invalid = 0;
    for (std::size_t k = 0; k < 3; ++k) {
      if (!interval_bins(f.spectra[0], g.interval(k))) ++invalid;
    }
    const double fit = evaluate_fitness(g, f.spectra, f.labels, cfg);
    EXPECT_LE(fit, 1.0 - static_cast<double>(invalid) * cfg.penalty + 1e-12);
    if (invalid > 0) {
      EXPECT_LT(fit, 0.0 + 1e-12);
    }
  }
}

TEST(Fitness, InvariantUnderLabelRenaming) {
  const auto& f = fixture();
  std::vector<std::string> renamed;
  for (const auto& l : f.labels) renamed.push_back(l == "A" ? "zeta" : "alpha");
  Rng rng(8);
  for (int t = 0; t < 10; ++t) {
    const auto g = random_genome(2, 64.0, rng);
    EXPECT_DOUBLE_EQ(evaluate_fitness(g, f.spectra, f.labels, GaConfig{}),
                     evaluate_fitness(g, f.spectra, renamed, GaConfig{}));
  }
}

TEST(Fitness, NeedsTwoClasses) {
  const auto& f = fixture();
  std::vector<std::string> one(f.labels.size(), "A");
  EXPECT_THROW(evaluate_fitness(genome({9.0, 11.0}), f.spectra, one, GaConfig{}), Error);
}

TEST(Crossover, FullCutSwapsParents) {
  const auto a = genome({1, 2, 3, 4}), b = genome({5, 6, 7, 8});
  const auto [c1, c2] = crossover(a, b, 0, 4);
  EXPECT_EQ(c1, b);
  EXPECT_EQ(c2, a);
}

TEST(Crossover, IdenticalParents) {
  const auto a = genome({1, 2, 3, 4});
  Rng rng(1);
  for (int t = 0; t < 10; ++t) {
    const auto [c1, c2] = crossover(a, a, rng);
    EXPECT_EQ(c1, a);
    EXPECT_EQ(c2, a);
  }
}

TEST(Crossover, CutPointsOneThree) {
  const auto a = genome({10, 11, 12, 13}), b = genome({20, 21, 22, 23});
  const auto [c1, c2] = crossover(a, b, 1, 3);
  EXPECT_EQ(c1, genome({10, 21, 22, 13}));
  EXPECT_EQ(c2, genome({20, 11, 12, 23}));
}

TEST(Crossover, MismatchedAlpha) {
  Rng rng(1);
  EXPECT_THROW(crossover(genome({1, 2}), genome({1, 2, 3, 4}), rng), Error);
}

TEST(Crossover, ChildrenStayInRange) {
  Rng rng(4);
  for (int t = 0; t < 100; ++t) {
    const auto a = random_genome(3, 50.0, rng), b = random_genome(3, 50.0, rng);
    const auto [c1, c2] = crossover(a, b, rng);
    for (double v : c1.bounds) EXPECT_TRUE(v >= 0.0 && v <= 50.0);
    for (double v : c2.bounds) EXPECT_TRUE(v >= 0.0 && v <= 50.0);
  }
}

TEST(Mutation, ZeroProbabilityOrSigmaIsIdentity) {
  Rng rng(2);
  const auto g = genome({1.0, 5.0, 64.0, 0.0});
  EXPECT_EQ(mutate(g, 0.0, 5.0, 64.0, rng), g);
  EXPECT_EQ(mutate(g, 1.0, 0.0, 64.0, rng), g);
}

TEST(Mutation, ClampsToNyquist) {
  Rng rng(2);
  const auto g = genome({64.0, 0.0});
  for (int t = 0; t < 200; ++t) {
    const auto m = mutate(g, 1.0, 10.0, 64.0, rng);
    EXPECT_LE(m.bounds[0], 64.0);
    EXPECT_GE(m.bounds[1], 0.0);
  }
}

TEST(Roulette, EqualFitnessUniform) {
  Rng rng(1);
  const std::vector<double> fit(4, 0.3);
  std::vector<int> count(4, 0);
  for (auto i : roulette_select(fit, 40000, rng)) ++count[i];
  for (int c : count) EXPECT_NEAR(c / 40000.0, 0.25, 0.01);
}

TEST(Roulette, AllMassOnOne) {
  Rng rng(1);
  const std::vector<double> w{0.0, 0.0, 5.0, 0.0};
  for (auto i : sample_by_weight(w, 1000, rng)) EXPECT_EQ(i, 2u);
  // -inf individuals never get picked.
  const std::vector<double> fit{-std::numeric_limits<double>::infinity(), 0.5};
  for (auto i : roulette_select(fit, 1000, rng)) EXPECT_EQ(i, 1u);
}

TEST(Roulette, OneToThreeRatio) {
  Rng rng(12345);
  const std::vector<double> w{1.0, 3.0};
  std::size_t ones = 0;
  const std::size_t draws = 100000;
  for (auto i : sample_by_weight(w, draws, rng)) ones += i;
  const double ratio = static_cast<double>(draws - ones) / static_cast<double>(ones);
  EXPECT_NEAR(ratio, 1.0 / 3.0, 0.02 / 3.0);
}

TEST(Roulette, ShiftedWeights) {
  const std::vector<double> fit{-2.0, 0.0, 1.0};
  const auto w = roulette_weights(fit);
  const double eps = 1e-6 * 4.0;
  EXPECT_DOUBLE_EQ(w[0], eps);
  EXPECT_DOUBLE_EQ(w[1], 2.0 + eps);
  EXPECT_DOUBLE_EQ(w[2], 3.0 + eps);
}

TEST(Search, FindsToneBands) {
  const auto& f = fixture();
  GaConfig cfg;
  cfg.seed = 21;
  const auto r = run_search(f.spectra, f.labels, 2, cfg);
  EXPECT_GE(r.best_fitness, 0.95);
  ASSERT_FALSE(r.resolved_intervals.empty());
  bool covers = false;
  for (const auto& iv : r.resolved_intervals) {
    covers = covers || (iv.lo_hz <= 10.0 && iv.hi_hz >= 10.0) || (iv.lo_hz <= 30.0 && iv.hi_hz >= 30.0);
  }
  EXPECT_TRUE(covers);
  EXPECT_EQ(r.generations, r.fitness_history.size());
  EXPECT_TRUE(std::is_sorted(r.fitness_history.begin(), r.fitness_history.end()));
}

TEST(Search, SingleGenerationIsBestOfInitial) {
  const auto& f = fixture();
  GaConfig cfg;
  cfg.population_size = 2;
  cfg.max_generations = 1;
  cfg.seed = 77;
  const auto r = run_search(f.spectra, f.labels, 2, cfg);
  Rng rng(derive_seed(cfg.seed, 2));
  const auto g0 = random_genome(2, 64.0, rng);
  const auto g1 = random_genome(2, 64.0, rng);
  const double f0 = evaluate_fitness(g0, f.spectra, f.labels, cfg);
  const double f1 = evaluate_fitness(g1, f.spectra, f.labels, cfg);
  EXPECT_EQ(r.generations, 1u);
  EXPECT_EQ(r.best_fitness, std::max(f0, f1));
  EXPECT_EQ(r.best_genome, f1 > f0 ? g1 : g0);
}

TEST(Search, DeterministicAcrossThreadCounts) {
  const auto& f = fixture();
  GaConfig cfg;
  cfg.seed = 5;
  cfg.population_size = 30;
  cfg.max_generations = 15;
  cfg.threads = 1;
  const auto a = run_search(f.spectra, f.labels, 3, cfg);
  cfg.threads = 4;
  const auto b = run_search(f.spectra, f.labels, 3, cfg);
  EXPECT_EQ(search_result_to_json(a), search_result_to_json(b));
  cfg.seed = 6;
  EXPECT_NE(search_result_to_json(run_search(f.spectra, f.labels, 3, cfg)), search_result_to_json(a));
}

TEST(Search, ElitismHistoryNonDecreasingOnHardTask) {
  // Noisy, overlapping classes keep the GA from saturating at 1.
  SyntheticSpec spec;
  spec.classes = {{"A", {{10.0, 0.3}}, 2.0, 20}, {"B", {{10.5, 0.3}}, 2.0, 20}};
  const auto ds = synthesize_dataset(spec, 4);
  const auto spectra = compute_spectra(ds, SpectrumSource::fourier, 1);
  GaConfig cfg;
  cfg.population_size = 20;
  cfg.max_generations = 30;
  cfg.stagnation_generations = 0;
  cfg.seed = 9;
  const auto r = run_search(spectra, ds.labels(), 2, cfg);
  EXPECT_EQ(r.fitness_history.size(), 30u);
  for (std::size_t i = 1; i < r.fitness_history.size(); ++i) {
    EXPECT_GE(r.fitness_history[i], r.fitness_history[i - 1]);
  }
  EXPECT_EQ(r.best_fitness, r.fitness_history.back());
}

TEST(Extract, FlatSpectrumGivesConstantColumn) {
  LabeledDataset ds;
  std::vector<Spectrum> spectra;
  for (int i = 0; i < 3; ++i) {
    ds.add({"r" + std::to_string(i), i < 2 ? "A" : "B", TimeSeries({0.0, 0.0, 0.0, 0.0}, 4.0)});
    spectra.emplace_back(std::vector<double>(3, 2.5), 1.0, 4, SpectrumSource::fourier);
  }
  const auto m = extract_gafds_features(genome({0.0, 2.0}), spectra, ds);
  ASSERT_EQ(m.cols(), 1u);
  EXPECT_EQ(m.names()[0], "f_1");
  for (std::size_t r = 0; r < 3; ++r) EXPECT_DOUBLE_EQ(m.at(r, 0), 2.5);
  EXPECT_THROW(extract_gafds_features(genome({2.0, 0.0}), spectra, ds), Error);
}

TEST(Extract, ColumnsEqualIntervalFeature) {
  const auto& f = fixture();
  const auto g = genome({1.0, 12.0, 28.0, 33.0, 40.0, 60.0, 2.0, 3.0});
  const auto m = extract_gafds_features(g, f.spectra, f.ds);
  ASSERT_EQ(m.cols(), 4u);
  ASSERT_EQ(m.rows(), f.ds.size());
  EXPECT_EQ(m.names(), (std::vector<std::string>{"f_1", "f_2", "f_3", "f_4"}));
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(m.at(r, k), interval_feature(f.spectra[r], g.interval(k)));
  }
}

TEST(Extract, ResolvedIntervalsKeepPairNames) {
  const auto& f = fixture();
  SearchResult r;
  r.best_genome = genome({40.0, 12.0, 28.0, 33.0});
  r.resolved_pairs = {1};
  r.resolved_intervals = {{28.0, 33.0}};
  const auto m = extract_gafds_features(r, f.spectra, f.ds);
  EXPECT_EQ(m.names(), std::vector<std::string>{"f_2"});
}

TEST(SearchJson, RoundTrip) {
  const auto& f = fixture();
  GaConfig cfg;
  cfg.population_size = 10;
  cfg.max_generations = 3;
  const auto r = run_search(f.spectra, f.labels, 2, cfg);
  const auto back = search_result_from_json(search_result_to_json(r));
  EXPECT_EQ(back.best_genome, r.best_genome);
  EXPECT_EQ(back.fitness_history, r.fitness_history);
  EXPECT_EQ(back.resolved_pairs, r.resolved_pairs);
  EXPECT_EQ(search_result_to_json(back), search_result_to_json(r));
  EXPECT_THROW(search_result_from_json("{\"alpha\": 2}"), Error);
}
