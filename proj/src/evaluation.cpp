#include "gafds/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "gafds/common.hpp"
#include "json.hpp"

namespace gafds {

using json = nlohmann::json;

double inter_class_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() == 0 || b.rows() == 0) fail(ErrorKind::invalid_argument, "distance over an empty class");
  if (a.cols() != b.cols()) fail(ErrorKind::invalid_argument, "distance between vectors of different length");
  double sum = 0.0;
  // Squared distance per pair, pairs summed in (i, j) order.
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      double d2 = 0.0;
      for (Eigen::Index k = 0; k < a.cols(); ++k) {
        const double d = a(i, k) - b(j, k);
        d2 += d * d;
      }
      sum += d2;
    }
  }
  return sum / (static_cast<double>(a.rows()) * static_cast<double>(b.rows()));
}

double intra_class_distance(const Eigen::MatrixXd& a) {
  if (a.rows() < 2) fail(ErrorKind::invalid_argument, "intra-class distance needs at least 2 vectors");
  return inter_class_distance(a, a);
}

namespace {

Eigen::MatrixXd class_rows(const FeatureMatrix& f, const std::string& label) {
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < f.rows(); ++r) {
    if (f.labels()[r] == label) rows.push_back(r);
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(f.cols()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t c = 0; c < f.cols(); ++c) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = f.at(rows[i], c);
  }
  return m;
}

}  // namespace

DistanceRatioTable distance_ratio_table(const FeatureMatrix& features, std::span<const std::string> subset,
                                        bool normalized) {
  if (subset.empty()) fail(ErrorKind::invalid_argument, "distance ratios need at least one feature");
  FeatureMatrix f = features.select_columns(subset);
  if (normalized) f = minmax_normalize(f);

  DistanceRatioTable t;
  t.class_labels = f.class_labels();
  t.feature_names = f.names();
  std::vector<Eigen::MatrixXd> groups;
  std::vector<double> intra;
  for (const auto& c : t.class_labels) {
    groups.push_back(class_rows(f, c));
    if (groups.back().rows() < 2) fail(ErrorKind::invalid_argument, "class " + c + " has fewer than 2 records");
    intra.push_back(intra_class_distance(groups.back()));
    if (!(intra.back() > 0.0)) fail(ErrorKind::numeric, "class " + c + " has zero intra-class distance");
  }
  const auto k = static_cast<Eigen::Index>(groups.size());
  t.ratios.resize(k, k);
  for (Eigen::Index x = 0; x < k; ++x) {
    for (Eigen::Index y = 0; y < k; ++y) {
      const double inter = x == y ? intra[static_cast<std::size_t>(x)]
                                  : inter_class_distance(groups[static_cast<std::size_t>(x)],
                                                         groups[static_cast<std::size_t>(y)]);
      t.ratios(x, y) = inter / intra[static_cast<std::size_t>(x)];
    }
  }
  return t;
}

void write_ratio_csv(const DistanceRatioTable& t, std::ostream& out) {
  out << "class";
  for (const auto& c : t.class_labels) out << ',' << c;
  out << '\n';
  for (Eigen::Index x = 0; x < t.ratios.rows(); ++x) {
    out << t.class_labels[static_cast<std::size_t>(x)];
    for (Eigen::Index y = 0; y < t.ratios.cols(); ++y) out << ',' << format_double(t.ratios(x, y));
    out << '\n';
  }
}

MinMaxScaler MinMaxScaler::fit(const FeatureMatrix& features, std::span<const std::size_t> rows) {
  if (rows.empty()) fail(ErrorKind::invalid_argument, "min-max fit needs at least one row");
  MinMaxScaler s;
  s.min.assign(features.cols(), std::numeric_limits<double>::infinity());
  s.max.assign(features.cols(), -std::numeric_limits<double>::infinity());
  for (auto r : rows) {
    if (r >= features.rows()) fail(ErrorKind::invalid_argument, "min-max fit row out of range");
    for (std::size_t c = 0; c < features.cols(); ++c) {
      s.min[c] = std::min(s.min[c], features.at(r, c));
      s.max[c] = std::max(s.max[c], features.at(r, c));
    }
  }
  return s;
}

FeatureMatrix MinMaxScaler::apply(const FeatureMatrix& features) const {
  if (features.cols() != min.size()) fail(ErrorKind::invalid_argument, "min-max scaler fitted on a different width");
  std::vector<double> v(features.values().begin(), features.values().end());
  for (std::size_t r = 0; r < features.rows(); ++r) {
    for (std::size_t c = 0; c < features.cols(); ++c) {
      auto& x = v[r * features.cols() + c];
      x = max[c] > min[c] ? (x - min[c]) / (max[c] - min[c]) : 0.5;
    }
  }
  return features.with_values(std::move(v));
}

FeatureMatrix minmax_normalize(const FeatureMatrix& features, std::span<const std::size_t> fit_rows) {
  return MinMaxScaler::fit(features, fit_rows).apply(features);
}

FeatureMatrix minmax_normalize(const FeatureMatrix& features) {
  std::vector<std::size_t> all(features.rows());
  std::iota(all.begin(), all.end(), 0);
  return minmax_normalize(features, all);
}

RateSummary fpr_tpr(const Confusion& c) {
  const std::size_t k = c.size();
  if (k < 2) fail(ErrorKind::invalid_argument, "confusion matrix needs at least 2 classes");
  for (const auto& row : c) {
    if (row.size() != k) fail(ErrorKind::invalid_argument, "confusion matrix must be square");
  }
  std::vector<double> rows(k, 0.0);
  std::vector<double> cols(k, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      rows[i] += static_cast<double>(c[i][j]);
      cols[j] += static_cast<double>(c[i][j]);
      total += static_cast<double>(c[i][j]);
    }
  }
  if (total == 0.0) fail(ErrorKind::invalid_argument, "confusion matrix is empty");

  RateSummary s;
  if (k == 2) {
    if (rows[0] == 0.0 || rows[1] == 0.0) fail(ErrorKind::numeric, "binary rates need instances of both classes");
    s.tpr = static_cast<double>(c[1][1]) / rows[1];
    s.fpr = static_cast<double>(c[0][1]) / rows[0];
    return s;
  }
  std::size_t used = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double tp = static_cast<double>(c[i][i]);
    const double negatives = total - rows[i];
    if (rows[i] == 0.0 || negatives == 0.0) {
      s.excluded_classes.push_back(i);
      continue;
    }
    s.tpr += tp / rows[i];
    s.fpr += (cols[i] - tp) / negatives;
    ++used;
  }
  if (used == 0) fail(ErrorKind::numeric, "no class has test instances");
  s.tpr /= static_cast<double>(used);
  s.fpr /= static_cast<double>(used);
  return s;
}

CvResult cross_validate(const ClassifierSpec& spec, const FeatureMatrix& features, const FoldPlan& folds,
                        const CvOptions& opt) {
  if (folds.assignments.size() != features.rows()) {
    fail(ErrorKind::invalid_argument, "fold plan does not match the feature matrix");
  }
  const auto classes = features.class_labels();
  const std::size_t nc = classes.size();
  CvResult res;
  res.spec = spec;
  res.k = folds.k;
  res.fold_accuracy.assign(folds.k, 0.0);
  std::vector<Confusion> per_fold(folds.k, Confusion(nc, std::vector<std::size_t>(nc, 0)));

  parallel_for(folds.k, opt.threads, [&](std::size_t f) {
    const auto tr = folds.train_indices(f);
    const auto te = folds.test_indices(f);
    if (te.empty()) fail(ErrorKind::invalid_argument, "fold " + std::to_string(f) + " has no test records");
    const FeatureMatrix data = opt.normalize ? minmax_normalize(features, tr) : features;
    const auto model = train(spec, data.select_rows(tr));
    std::size_t correct = 0;
    for (auto r : te) {
      const auto& predicted = model.predict(data.row(r));
      const auto truth = static_cast<std::size_t>(
          std::lower_bound(classes.begin(), classes.end(), data.labels()[r]) - classes.begin());
      const auto guess = static_cast<std::size_t>(
          std::lower_bound(classes.begin(), classes.end(), predicted) - classes.begin());
      ++per_fold[f][truth][guess];
      if (truth == guess) ++correct;
    }
    res.fold_accuracy[f] = static_cast<double>(correct) / static_cast<double>(te.size());
  });

  res.confusion.assign(nc, std::vector<std::size_t>(nc, 0));
  for (const auto& c : per_fold) {
    for (std::size_t i = 0; i < nc; ++i) {
      for (std::size_t j = 0; j < nc; ++j) res.confusion[i][j] += c[i][j];
    }
  }
  res.mean_accuracy = mean(res.fold_accuracy);
  res.rates = fpr_tpr(res.confusion);
  return res;
}

std::vector<ClassifierSpec> default_classifiers() {
  std::vector<ClassifierSpec> out;
  for (auto k : {ClassifierKind::knn, ClassifierKind::lda, ClassifierKind::dtree, ClassifierKind::adaboost,
                 ClassifierKind::mlp, ClassifierKind::nb}) {
    ClassifierSpec s;
    s.kind = k;
    out.push_back(s);
  }
  return out;
}

EvaluationReport evaluate(const FeatureMatrix& features, const EvaluationOptions& opt) {
  if (opt.fold_counts.empty()) fail(ErrorKind::invalid_argument, "no fold counts requested");
  EvaluationReport r;
  r.task = opt.task;
  r.fold_seed = opt.fold_seed;
  r.normalized = opt.normalize;
  r.class_labels = features.class_labels();
  r.feature_names = features.names();
  r.fold_counts = opt.fold_counts;
  const auto specs = opt.classifiers.empty() ? default_classifiers() : opt.classifiers;
  std::vector<FoldPlan> plans;
  for (auto k : opt.fold_counts) plans.push_back(make_folds(features.labels(), k, opt.fold_seed));
  for (const auto& spec : specs) {
    for (const auto& plan : plans) {
      r.results.push_back(cross_validate(spec, features, plan, CvOptions{opt.normalize, opt.threads}));
    }
  }
  return r;
}

void write_report_csv(const EvaluationReport& r, std::ostream& out) {
  out << "classifier";
  for (auto k : r.fold_counts) out << ',' << k << "-fold";
  out << '\n';
  const std::size_t nk = r.fold_counts.size();
  for (std::size_t i = 0; i < r.results.size(); i += nk) {
    out << to_string(r.results[i].spec.kind);
    for (std::size_t j = 0; j < nk; ++j) out << ',' << format_double(r.results[i + j].mean_accuracy);
    out << '\n';
  }
}

std::string report_to_json(const EvaluationReport& r) {
  json results = json::array();
  for (const auto& c : r.results) {
    results.push_back({{"classifier", to_string(c.spec.kind)},
                       {"folds", c.k},
                       {"mean_accuracy", c.mean_accuracy},
                       {"fold_accuracy", c.fold_accuracy},
                       {"confusion", c.confusion},
                       {"fpr", c.rates.fpr},
                       {"tpr", c.rates.tpr}});
  }
  const json j = {{"task", r.task},
                  {"fold_seed", r.fold_seed},
                  {"normalized", r.normalized},
                  {"class_labels", r.class_labels},
                  {"feature_names", r.feature_names},
                  {"fold_counts", r.fold_counts},
                  {"results", std::move(results)}};
  return j.dump(2);
}

}  // namespace gafds
