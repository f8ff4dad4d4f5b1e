// Acceptance run: one PASS / FAIL / SKIP line per criterion.
// Bonn-dependent criteria read GAFDS_BONN_DIR (subdirectories A..E or Z,O,N,F,S).
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gafds/pipeline.hpp"
#include "oracles.hpp"

using namespace gafds;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  enum { pass, fail, skip } status = pass;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& what) {
    notes.push_back(std::string(ok ? "  ok   " : "  FAIL ") + what);
    if (!ok) status = fail;
  }
  void note(const std::string& what) { notes.push_back("       " + what); }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const std::vector<ClassifierSpec>& all_classifiers() {
  static const auto c = default_classifiers();
  return c;
}

double accuracy_of(const EvaluationReport& r, ClassifierKind k, std::size_t folds) {
  for (const auto& c : r.results) {
    if (c.spec.kind == k && c.k == folds) return c.mean_accuracy;
  }
  return NAN;
}

// ---- 1: oracle equivalence ---------------------------------------------------------

Verdict oracle_equivalence() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();

  std::size_t mismatches = 0, cases = 0;
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    for (std::size_t n : {300u, 1000u, 2000u}) {
      auto x = oracle::white_noise(n, seed);
      if (seed % 2 == 0) x = oracle::cumsum(x);
      for (std::size_t m : {1u, 2u, 3u}) {
        ++cases;
        if (sample_entropy(x, {0, m, 0.2}) != oracle::sample_entropy(x, m, 0.2)) ++mismatches;
      }
    }
  }
  v.check(mismatches == 0, "sample entropy == brute-force count: " + std::to_string(cases - mismatches) + "/" +
                               std::to_string(cases) + " exact (n <= 2000)");

  std::mt19937_64 rng(99);
  std::normal_distribution<double> g(0.0, 1.0);
  auto rows = [&](std::size_t n, std::size_t d, double shift) {
    oracle::Rows r(n, std::vector<double>(d));
    for (auto& row : r)
      for (auto& x : row) x = g(rng) + shift;
    return r;
  };
  auto to_eigen = [](const oracle::Rows& r) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(r[0].size()));
    for (std::size_t i = 0; i < r.size(); ++i)
      for (std::size_t j = 0; j < r[i].size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r[i][j];
    return m;
  };
  mismatches = cases = 0;
  for (std::size_t n : {2u, 17u, 100u, 200u}) {
    for (std::size_t d : {1u, 4u, 13u}) {
      const auto a = rows(n, d, 0.0), b = rows(200 - n + 2, d, 1.0);
      cases += 2;
      if (intra_class_distance(to_eigen(a)) != oracle::dist1(a)) ++mismatches;
      if (inter_class_distance(to_eigen(a), to_eigen(b)) != oracle::dist2(a, b)) ++mismatches;
    }
  }
  v.check(mismatches == 0, "dist1/dist2 == double loop: " + std::to_string(cases - mismatches) + "/" +
                               std::to_string(cases) + " exact (<= 200 vectors)");

  mismatches = cases = 0;
  std::uniform_int_distribution<std::size_t> pick(0, 512);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const TimeSeries x(oracle::white_noise(1024, 500 + s), 128.0);
    const auto y = fft_magnitude(x);
    for (int t = 0; t < 25; ++t) {
      std::size_t i = pick(rng), j = pick(rng);
      if (i == j) continue;
      if (i > j) std::swap(i, j);
      double sum = 0.0;
      for (std::size_t k = i; k <= j; ++k) sum += y.magnitudes()[k];
      const double want = sum / static_cast<double>(j - i + 1);
      ++cases;
      if (interval_feature(y, {0.125 * static_cast<double>(i), 0.125 * static_cast<double>(j)}) != want) ++mismatches;
    }
  }
  v.check(mismatches == 0, "interval_feature == direct mean: " + std::to_string(cases - mismatches) + "/" +
                               std::to_string(cases) + " exact");

  mismatches = cases = 0;
  for (std::size_t d = 2; d <= 6; ++d) {
    std::vector<std::string> names, ids, labels;
    std::vector<double> vals;
    for (std::size_t j = 0; j < d; ++j) names.push_back("f_" + std::to_string(j + 1));
    for (std::size_t i = 0; i < 80; ++i) {
      const bool b = i % 2;
      ids.push_back("r" + std::to_string(i));
      labels.push_back(b ? "B" : "A");
      for (std::size_t j = 0; j < d; ++j) vals.push_back(g(rng) + (b ? 1.5 / static_cast<double>(j + 1) : 0.0));
    }
    const FeatureMatrix f(names, ids, labels, vals);
    SelectionConfig cfg;
    cfg.seed = d;
    cfg.threads = 1;
    const auto r = run_selection(f, cfg);
    const auto fold_seed = derive_seed(cfg.seed, 1);
    double best = INFINITY;
    for (std::size_t bits = 1; bits < (1u << d); ++bits) {
      Mask m(d);
      for (std::size_t j = 0; j < d; ++j) m[j] = (bits >> j) & 1u;
      best = std::min(best, subset_objective(m, f, fold_seed));
    }
    ++cases;
    if (r.best_objective != best) {
      ++mismatches;
      v.note("d=" + std::to_string(d) + ": GA " + fmt("%.6f", r.best_objective) + " vs exhaustive " + fmt("%.6f", best));
    }
  }
  v.check(mismatches == 0, "subset GA == exhaustive optimum: " + std::to_string(cases - mismatches) + "/" +
                               std::to_string(cases) + " (d = 2..6)");

  const double secs = seconds_since(t0);
  v.check(secs < 120.0, "runtime " + fmt("%.1f", secs) + " s < 120 s");
  return v;
}

// ---- 2: analytic values ------------------------------------------------------------

Verdict analytic_values() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  constexpr std::size_t kSeeds = 50;
  constexpr std::size_t kLength = 4096;

  struct Stat {
    double sum = 0.0, lo = INFINITY, hi = -INFINITY;
    std::size_t outside = 0;
    void add(double x, double target, double tol) {
      sum += x;
      lo = std::min(lo, x);
      hi = std::max(hi, x);
      if (std::abs(x - target) > tol) ++outside;
    }
    double mean(std::size_t n) const { return sum / static_cast<double>(n); }
    std::string describe(std::size_t n) const {
      return "mean " + fmt("%.4f", sum / static_cast<double>(n)) + ", range [" + fmt("%.4f", lo) + ", " +
             fmt("%.4f", hi) + "], " + std::to_string(outside) + "/" + std::to_string(n) + " seeds outside";
    }
  };
  Stat dfa_wn, dfa_rw, hurst_wn, dmax;
  for (std::size_t s = 0; s < kSeeds; ++s) {
    const auto x = oracle::white_noise(kLength, 1000 + s);
    dfa_wn.add(dfa(x), 0.5, 0.1);
    dfa_rw.add(dfa(oracle::cumsum(x)), 1.5, 0.1);
    hurst_wn.add(hurst_exponent(x), 0.5, 0.1);
    dmax.add(mfdfa_features(mfdfa(x)).d_max, 1.0, 0.05);
  }
  // Tolerances apply to the 50-seed mean; the per-seed spread is reported alongside.
  v.check(std::abs(dfa_wn.mean(kSeeds) - 0.5) <= 0.1, "DFA(white noise) = 0.5 +- 0.1: " + dfa_wn.describe(kSeeds));
  v.check(std::abs(dfa_rw.mean(kSeeds) - 1.5) <= 0.1, "DFA(random walk) = 1.5 +- 0.1: " + dfa_rw.describe(kSeeds));
  v.check(std::abs(hurst_wn.mean(kSeeds) - 0.5) <= 0.1, "Hurst(white noise) = 0.5 +- 0.1: " + hurst_wn.describe(kSeeds));

  const double lle = largest_lyapunov(oracle::logistic_map(5000));
  v.check(std::abs(lle - std::log(2.0)) <= 0.05, "LLE(logistic, r = 4) = " + fmt("%.4f", lle) + " (ln 2 +- 0.05)");

  // Stated for any valid input, so every seed must hold.
  v.check(dmax.outside == 0, "MFDFA max D_q = 1 +- 0.05 on every white-noise seed: " + dmax.describe(kSeeds));
  Stat dmax_cascade;
  for (double p : {0.6, 0.7, 0.75}) dmax_cascade.add(mfdfa_features(mfdfa(oracle::binomial_cascade(12, p))).d_max, 1.0, 0.05);
  v.check(dmax_cascade.outside == 0, "MFDFA max D_q = 1 +- 0.05 (binomial cascades p = 0.6, 0.7, 0.75): " +
                                         dmax_cascade.describe(3));

  // MLP backprop against central differences.
  std::mt19937_64 rng(77);
  std::normal_distribution<double> g(0.0, 0.5);
  std::vector<DenseLayer> layers(3);
  const int sizes[] = {4, 6, 5, 3};
  for (int l = 0; l < 3; ++l) {
    layers[l].weights = Eigen::MatrixXd(sizes[l + 1], sizes[l]);
    layers[l].bias = Eigen::VectorXd(sizes[l + 1]);
    for (Eigen::Index i = 0; i < layers[l].weights.size(); ++i) layers[l].weights.data()[i] = g(rng);
    for (Eigen::Index i = 0; i < layers[l].bias.size(); ++i) layers[l].bias[i] = g(rng);
  }
  Eigen::MatrixXd x(8, 4);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = 2.0 * g(rng);
  const std::vector<int> y{0, 1, 2, 2, 1, 0, 0, 1};
  const auto grad = mlp_gradient(layers, x, y);
  double worst = 0.0;
  const double h = 1e-6;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Eigen::Index nw = layers[l].weights.size();
    for (Eigen::Index i = 0; i < nw + layers[l].bias.size(); ++i) {
      auto slot = [&](std::vector<DenseLayer>& ls) -> double& {
        return i < nw ? ls[l].weights.data()[i] : ls[l].bias.data()[i - nw];
      };
      auto plus = layers, minus = layers, copy = grad;
      slot(plus) += h;
      slot(minus) -= h;
      const double num = (mlp_loss(plus, x, y) - mlp_loss(minus, x, y)) / (2.0 * h);
      const double ana = slot(copy);
      // floor keeps near-zero entries from dividing difference noise by ~0
      worst = std::max(worst, std::abs(num - ana) / std::max({std::abs(num), std::abs(ana), 1e-6}));
    }
  }
  v.check(worst <= 1e-4, "MLP gradient vs central differences: max relative error " + fmt("%.2e", worst));

  const double secs = seconds_since(t0);
  v.check(secs < 300.0, "runtime " + fmt("%.1f", secs) + " s < 300 s");
  return v;
}

// ---- 3 and 6: synthetic end-to-end ----------------------------------------------------

const char* kSynthetic = R"({"task": {"name": "tones"},
  "dataset": {"synthetic": {"length": 1024, "sample_rate": 128, "classes": [
    {"label": "A", "count": 50, "noise_sigma": 0.5, "tones": [{"hz": 10, "amplitude": 1}]},
    {"label": "B", "count": 50, "noise_sigma": 0.5, "tones": [{"hz": 30, "amplitude": 1}]}]}},
  "alpha": 2, "folds": [5], "seed": 7})";

struct SyntheticRun {
  SearchResult search;
  FeatureMatrix features;
};

const SyntheticRun& synthetic_run() {
  static const SyntheticRun run = [] {
    const auto cfg = parse_experiment_config(kSynthetic);
    const auto ds = load_dataset(cfg);
    SyntheticRun r;
    r.search = search_stage(ds, cfg.alpha, cfg.spectrum_source, cfg.search, cfg.seed, 0);
    r.features = extract_stage(ds, r.search, false, cfg.nonlinear_options, 0);
    return r;
  }();
  return run;
}

Verdict synthetic_end_to_end() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  const auto& run = synthetic_run();
  const auto report = evaluation_stage(run.features, "tones", all_classifiers(), {5}, false, 7, 0);
  std::string bands;
  for (const auto& iv : run.search.resolved_intervals) bands += " [" + fmt("%.2f", iv.lo_hz) + ", " + fmt("%.2f", iv.hi_hz) + "]";
  v.note("resolved intervals (Hz):" + bands + ", best fitness " + fmt("%.4f", run.search.best_fitness));
  for (auto k : {ClassifierKind::knn, ClassifierKind::lda, ClassifierKind::dtree}) {
    const double acc = accuracy_of(report, k, 5);
    v.check(acc >= 0.95, to_string(k) + " 5-fold accuracy " + fmt("%.3f", acc) + " >= 0.95");
  }
  const auto& h = run.search.fitness_history;
  bool monotone = !h.empty();
  for (std::size_t i = 1; i < h.size(); ++i) monotone = monotone && h[i] >= h[i - 1];
  v.check(monotone, "best-fitness history non-decreasing over " + std::to_string(h.size()) + " generations");
  const double secs = seconds_since(t0);
  v.check(secs < 180.0, "runtime " + fmt("%.1f", secs) + " s < 180 s");
  return v;
}

Verdict normalization_property() {
  Verdict v;
  const auto& run = synthetic_run();
  const auto raw = evaluation_stage(run.features, "tones", all_classifiers(), {5}, false, 7, 0);
  const auto norm = evaluation_stage(run.features, "tones", all_classifiers(), {5}, true, 7, 0);
  for (const auto& spec : all_classifiers()) {
    if (spec.kind == ClassifierKind::adaboost) continue;
    const double a = accuracy_of(raw, spec.kind, 5), b = accuracy_of(norm, spec.kind, 5);
    if (spec.kind == ClassifierKind::dtree) {
      v.check(a == b, "dtree " + fmt("%.3f", a) + " -> " + fmt("%.3f", b) + " (identical)");
    } else {
      v.check(std::abs(a - b) <= 0.02, to_string(spec.kind) + " " + fmt("%.3f", a) + " -> " + fmt("%.3f", b) +
                                           " (|change| <= 0.02)");
    }
  }
  v.note("adaboost " + fmt("%.3f", accuracy_of(raw, ClassifierKind::adaboost, 5)) + " -> " +
         fmt("%.3f", accuracy_of(norm, ClassifierKind::adaboost, 5)) + " (not constrained)");
  return v;
}

// ---- 4 and 5: Bonn ------------------------------------------------------------------------

std::optional<LabeledDataset> load_bonn() {
  const char* root = std::getenv("GAFDS_BONN_DIR");
  if (!root || !*root) return std::nullopt;
  const std::pair<const char*, const char*> sets[] = {{"A", "Z"}, {"B", "O"}, {"C", "N"}, {"D", "F"}, {"E", "S"}};
  LabeledDataset all;
  for (const auto& [label, alt] : sets) {
    std::optional<fs::path> dir;
    for (const std::string& name : {std::string(label), std::string(alt), std::string(1, static_cast<char>(std::tolower(*label))),
                                   std::string(1, static_cast<char>(std::tolower(*alt)))}) {
      if (fs::is_directory(fs::path(root) / name)) {
        dir = fs::path(root) / name;
        break;
      }
    }
    if (!dir) return std::nullopt;
    all.append(load_bonn_directory(*dir, label));
  }
  return all;
}

const std::optional<LabeledDataset>& bonn() {
  static const auto ds = load_bonn();
  return ds;
}

struct TaskRun {
  SearchResult search;
  FeatureMatrix features;  // interval features, plus nonlinear when requested
};

TaskRun bonn_task(const LabelGroups& groups, bool nonlinear) {
  const auto ds = apply_groups(*bonn(), groups);
  TaskRun t;
  t.search = search_stage(ds, 4, SpectrumSource::fourier, GaConfig{}, 1, 0);
  t.features = extract_stage(ds, t.search, nonlinear, NonlinearOptions{}, 0);
  return t;
}

Verdict bonn_classification() {
  Verdict v;
  if (!bonn()) {
    v.status = Verdict::skip;
    v.note("GAFDS_BONN_DIR not set or incomplete");
    return v;
  }
  {
    const auto t = bonn_task({{"A", {"A"}}, {"E", {"E"}}}, false);
    const auto r = evaluation_stage(t.features, "A,E", all_classifiers(), {5}, false, 1, 0);
    for (auto k : {ClassifierKind::knn, ClassifierKind::dtree, ClassifierKind::mlp, ClassifierKind::nb}) {
      const double a = accuracy_of(r, k, 5);
      v.check(a >= 0.97, "A,E " + to_string(k) + " on f_1..f_4: " + fmt("%.3f", a) + " >= 0.97");
    }
  }
  auto selected_task = [&](const LabelGroups& groups, const std::string& name, std::vector<ClassifierKind> kinds,
                           double floor) {
    const auto t = bonn_task(groups, true);
    const auto sel = selection_stage(t.features, SelectionConfig{}, 1, 0);
    const auto names = selected_names(sel);
    std::string joined;
    for (const auto& n : names) joined += (joined.empty() ? "" : ",") + n;
    v.note(name + " selected: " + joined);
    const auto r = evaluation_stage(t.features.select_columns(names), name, all_classifiers(), {5}, false, 1, 0);
    for (auto k : kinds) {
      const double a = accuracy_of(r, k, 5);
      v.check(a >= floor, name + " " + to_string(k) + " (selected): " + fmt("%.3f", a) + " >= " + fmt("%.2f", floor));
    }
  };
  selected_task({{"CD", {"C", "D"}}, {"E", {"E"}}}, "CD,E",
                {ClassifierKind::knn, ClassifierKind::lda, ClassifierKind::dtree, ClassifierKind::adaboost,
                 ClassifierKind::mlp, ClassifierKind::nb},
                0.95);
  selected_task({{"A", {"A"}}, {"D", {"D"}}, {"E", {"E"}}}, "A,D,E", {ClassifierKind::knn, ClassifierKind::lda}, 0.90);
  return v;
}

Verdict bonn_ratios() {
  Verdict v;
  if (!bonn()) {
    v.status = Verdict::skip;
    v.note("GAFDS_BONN_DIR not set or incomplete");
    return v;
  }
  const auto t = bonn_task({}, false);
  const auto table = distance_ratio_table(t.features, t.features.names());
  const auto& r = table.ratios;
  bool diag = true;
  for (Eigen::Index i = 0; i < r.rows(); ++i) diag = diag && r(i, i) == 1.0;
  v.check(diag, "diagonal exactly 1");
  auto idx = [&](const std::string& c) {
    return static_cast<Eigen::Index>(std::find(table.class_labels.begin(), table.class_labels.end(), c) -
                                     table.class_labels.begin());
  };
  const double ed = r(idx("E"), idx("D")), ea = r(idx("E"), idx("A"));
  v.check(ed == r.maxCoeff(), "r(E, D) = " + fmt("%.3f", ed) + " is the table maximum (" + fmt("%.3f", r.maxCoeff()) + ")");
  v.check(ea > 3.0, "r(E, A) = " + fmt("%.3f", ea) + " > 3");
  return v;
}

// ---- 7: determinism ---------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Verdict determinism() {
  Verdict v;
  const auto cfg = parse_experiment_config(kSynthetic);
  const auto base = fs::temp_directory_path() / ("gafds_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(base);
  const std::pair<std::string, unsigned> runs[] = {{"t1", 1}, {"t1_again", 1}, {"t2", 2}, {"t8", 8}};
  std::vector<std::string> manifests;
  for (const auto& [name, threads] : runs) manifests.push_back(run_pipeline(cfg, base / name, threads));
  const char* artifacts[] = {"config.json", "search.json", "features.csv", "mask.json",
                             "report.csv",  "report.json", "ratios.csv",   "manifest.json"};
  for (const char* a : artifacts) {
    const auto ref = slurp(base / "t1" / a);
    bool same = !ref.empty();
    for (std::size_t i = 1; i < std::size(runs); ++i) same = same && slurp(base / runs[i].first / a) == ref;
    v.check(same, std::string(a) + " byte-identical across reruns and 1/2/8 threads");
  }
  fs::remove_all(base);
  return v;
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Verdict()>> criteria[] = {
      {"oracle equivalence", oracle_equivalence},
      {"analytic values", analytic_values},
      {"synthetic end-to-end", synthetic_end_to_end},
      {"Bonn classification", bonn_classification},
      {"Bonn distance ratios", bonn_ratios},
      {"normalization invariance", normalization_property},
      {"determinism", determinism},
  };
  int failed = 0;
  int n = 0;
  for (const auto& [name, fn] : criteria) {
    ++n;
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v.status = Verdict::fail;
      v.note(std::string("error: ") + e.what());
    }
    const char* tag = v.status == Verdict::pass ? "PASS" : v.status == Verdict::fail ? "FAIL" : "SKIP";
    std::printf("criterion %d: %s  %s\n", n, tag, name);
    for (const auto& line : v.notes) std::printf("%s\n", line.c_str());
    std::fflush(stdout);
    failed += v.status == Verdict::fail;
  }
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
