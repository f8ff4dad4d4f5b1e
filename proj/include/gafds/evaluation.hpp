#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "gafds/classifiers.hpp"
#include "gafds/dataset.hpp"
#include "gafds/features.hpp"

namespace gafds {

// Mean squared Euclidean distance over all ordered pairs (rows are vectors).
// intra includes the n zero self-pairs and needs n >= 2.
double intra_class_distance(const Eigen::MatrixXd& a);
double inter_class_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

struct DistanceRatioTable {
  std::vector<std::string> class_labels;
  std::vector<std::string> feature_names;
  Eigen::MatrixXd ratios;  // ratios(x, y) = inter(x, y) / intra(x)
};

// `normalized` min-max scales every column over all rows first.
DistanceRatioTable distance_ratio_table(const FeatureMatrix& features, std::span<const std::string> subset,
                                        bool normalized = false);
void write_ratio_csv(const DistanceRatioTable& t, std::ostream& out);

struct MinMaxScaler {
  std::vector<double> min;
  std::vector<double> max;

  static MinMaxScaler fit(const FeatureMatrix& features, std::span<const std::size_t> rows);
  // (x - min) / (max - min); constant columns map to 0.5. No clamping.
  FeatureMatrix apply(const FeatureMatrix& features) const;
};

FeatureMatrix minmax_normalize(const FeatureMatrix& features, std::span<const std::size_t> fit_rows);
FeatureMatrix minmax_normalize(const FeatureMatrix& features);

// Square matrix, rows = true class, columns = predicted class.
using Confusion = std::vector<std::vector<std::size_t>>;

struct RateSummary {
  double fpr = 0.0;
  double tpr = 0.0;
  std::vector<std::size_t> excluded_classes;  // classes with no test instances
};

// Binary: the second class (lexicographically greater label) is positive.
// Otherwise macro-averaged one-vs-rest.
RateSummary fpr_tpr(const Confusion& c);

struct CvResult {
  ClassifierSpec spec;
  std::size_t k = 0;
  std::vector<double> fold_accuracy;
  double mean_accuracy = 0.0;
  Confusion confusion;  // pooled over folds
  RateSummary rates;
};

struct CvOptions {
  bool normalize = false;  // min-max fit on each training fold
  unsigned threads = 0;
};

CvResult cross_validate(const ClassifierSpec& spec, const FeatureMatrix& features, const FoldPlan& folds,
                        const CvOptions& opt = {});

struct EvaluationReport {
  std::string task;
  std::uint64_t fold_seed = 0;
  bool normalized = false;
  std::vector<std::string> class_labels;
  std::vector<std::string> feature_names;
  std::vector<std::size_t> fold_counts;
  std::vector<CvResult> results;  // classifier-major, then fold count
};

struct EvaluationOptions {
  std::string task = "task";
  std::vector<ClassifierSpec> classifiers;
  std::vector<std::size_t> fold_counts{2, 5, 10};
  std::uint64_t fold_seed = 0;
  bool normalize = false;
  unsigned threads = 0;
};

EvaluationReport evaluate(const FeatureMatrix& features, const EvaluationOptions& opt);

// One row per classifier, one column per fold count ("5-fold"), mean accuracy.
void write_report_csv(const EvaluationReport& r, std::ostream& out);
std::string report_to_json(const EvaluationReport& r);

std::vector<ClassifierSpec> default_classifiers();

}  // namespace gafds
