#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "gafds/features.hpp"

namespace gafds {

enum class ClassifierKind { knn, lda, dtree, adaboost, mlp, nb };

std::string to_string(ClassifierKind kind);
ClassifierKind classifier_kind_from_string(const std::string& s);

// Hyperparameters for every kind; fields that do not apply to `kind` are ignored.
struct ClassifierSpec {
  ClassifierKind kind = ClassifierKind::knn;
  std::size_t k = 5;                        // knn
  std::size_t max_depth = 10;               // dtree
  std::size_t min_leaf = 2;                 // dtree
  std::size_t rounds = 50;                  // adaboost
  std::vector<std::size_t> hidden_sizes{16};  // mlp
  std::size_t epochs = 500;                 // mlp
  double learning_rate = 0.05;              // mlp
  std::uint64_t seed = 0;                   // mlp
  double ridge = 1e-6;                      // lda, relative to mean covariance diagonal
  double variance_floor = 1e-9;             // nb

  void validate() const;
};

// Dense training data: one row per sample, class indices in [0, classes).
struct LabeledMatrix {
  Eigen::MatrixXd x;
  std::vector<int> y;
  std::size_t classes = 0;
};

struct KnnModel {
  Eigen::MatrixXd x;
  std::vector<int> y;
  std::size_t k = 5;
};

// Shared-covariance Gaussian discriminant: score_c(x) = w_c . x + b_c.
struct LdaModel {
  Eigen::MatrixXd coefficients;  // classes x d, rows are Sigma^-1 mu_c
  Eigen::VectorXd intercepts;    // -1/2 mu_c' Sigma^-1 mu_c + ln prior_c
};

struct TreeNode {
  bool leaf = true;
  int label = 0;           // majority class at this node
  std::size_t feature = 0;
  double threshold = 0.0;  // go left when x[feature] <= threshold
  std::size_t left = 0;
  std::size_t right = 0;
};

struct TreeModel {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
};

struct Stump {
  std::size_t feature = 0;
  double threshold = std::numeric_limits<double>::infinity();
  int left_label = 0;   // x[feature] <= threshold
  int right_label = 0;
};

struct AdaBoostModel {
  std::vector<Stump> stumps;
  std::vector<double> alphas;
  std::size_t classes = 0;
};

struct DenseLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;
};

// tanh hidden layers, softmax output. Inputs are standardised with the
// training-set mean and scale before the first layer.
struct MlpModel {
  Eigen::VectorXd input_mean;
  Eigen::VectorXd input_scale;
  std::vector<DenseLayer> layers;
};

struct NbModel {
  Eigen::MatrixXd means;      // classes x d
  Eigen::MatrixXd variances;  // classes x d, floored
  Eigen::VectorXd log_priors;
};

using ModelParameters = std::variant<KnnModel, LdaModel, TreeModel, AdaBoostModel, MlpModel, NbModel>;

class TrainedModel {
 public:
  TrainedModel(ClassifierKind kind, std::vector<std::string> class_labels, std::vector<std::string> feature_names,
               ModelParameters params);

  ClassifierKind kind() const { return kind_; }
  const std::vector<std::string>& class_labels() const { return class_labels_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  const ModelParameters& parameters() const { return params_; }

  // Throws on arity mismatch or non-finite input.
  std::size_t predict_index(std::span<const double> x) const;
  const std::string& predict(std::span<const double> x) const;

 private:
  ClassifierKind kind_;
  std::vector<std::string> class_labels_;
  std::vector<std::string> feature_names_;
  ModelParameters params_;
};

// Class indices follow lexicographic label order, so "lowest index" tie
// breaking means "lexicographically smallest label".
LabeledMatrix to_labeled_matrix(const FeatureMatrix& features, const std::vector<std::string>& class_labels);

TrainedModel train(const ClassifierSpec& spec, const FeatureMatrix& features);

KnnModel fit_knn(const LabeledMatrix& data, std::size_t k);
LdaModel fit_lda(const LabeledMatrix& data, double ridge);
TreeModel fit_tree(const LabeledMatrix& data, std::size_t max_depth, std::size_t min_leaf);
AdaBoostModel fit_adaboost(const LabeledMatrix& data, std::size_t rounds);
MlpModel fit_mlp(const LabeledMatrix& data, std::span<const std::size_t> hidden_sizes, std::size_t epochs,
                 double learning_rate, std::uint64_t seed);
NbModel fit_nb(const LabeledMatrix& data, double variance_floor);

int predict_index(const KnnModel& m, const Eigen::Ref<const Eigen::VectorXd>& x);
int predict_index(const LdaModel& m, const Eigen::Ref<const Eigen::VectorXd>& x);
int predict_index(const TreeModel& m, const Eigen::Ref<const Eigen::VectorXd>& x);
int predict_index(const AdaBoostModel& m, const Eigen::Ref<const Eigen::VectorXd>& x);
int predict_index(const MlpModel& m, const Eigen::Ref<const Eigen::VectorXd>& x);
int predict_index(const NbModel& m, const Eigen::Ref<const Eigen::VectorXd>& x);

// Ensemble vote using only the first `rounds` stumps.
int predict_index_staged(const AdaBoostModel& m, const Eigen::Ref<const Eigen::VectorXd>& x, std::size_t rounds);

// Normalised class posteriors P(c | x) of the Gaussian naive Bayes model.
Eigen::VectorXd nb_posterior(const NbModel& m, const Eigen::Ref<const Eigen::VectorXd>& x);

// Two-class discriminant direction w_1 - w_0 (proportional to Sw^-1 (mu_1 - mu_0)).
Eigen::VectorXd lda_direction(const LdaModel& m);

// Mean cross-entropy of the network on standardised inputs, and its gradient
// with respect to every weight and bias (same layout as `layers`).
double mlp_loss(const std::vector<DenseLayer>& layers, const Eigen::MatrixXd& x, std::span<const int> y);
std::vector<DenseLayer> mlp_gradient(const std::vector<DenseLayer>& layers, const Eigen::MatrixXd& x,
                                     std::span<const int> y);

std::string model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const std::string& json);

}  // namespace gafds
