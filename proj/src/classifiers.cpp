#include "gafds/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "gafds/common.hpp"
#include "json.hpp"

namespace gafds {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using json = nlohmann::json;

namespace {

int argmax_lowest(const VectorXd& scores) {
  int best = 0;
  for (int c = 1; c < scores.size(); ++c) {
    if (scores[c] > scores[best]) best = c;
  }
  return best;
}

std::vector<std::size_t> class_counts(const LabeledMatrix& data) {
  std::vector<std::size_t> counts(data.classes, 0);
  for (int c : data.y) ++counts[static_cast<std::size_t>(c)];
  return counts;
}

void check_training_data(const LabeledMatrix& data) {
  if (data.x.rows() == 0) fail(ErrorKind::invalid_argument, "training set is empty");
  if (static_cast<std::size_t>(data.x.rows()) != data.y.size()) {
    fail(ErrorKind::invalid_argument, "training rows and labels differ in count");
  }
  if (data.classes < 2) fail(ErrorKind::invalid_argument, "training needs at least 2 classes");
  for (int c : data.y) {
    if (c < 0 || static_cast<std::size_t>(c) >= data.classes) {
      fail(ErrorKind::invalid_argument, "class index out of range");
    }
  }
}

// Midpoint between consecutive distinct values a < b that still separates them.
double midpoint(double a, double b) {
  const double m = a + (b - a) / 2.0;
  return m < b ? m : a;
}

// ---- decision tree --------------------------------------------------------

double gini(const std::vector<double>& counts, double total) {
  if (total <= 0.0) return 0.0;
  double s = 0.0;
  for (double c : counts) s += (c / total) * (c / total);
  return 1.0 - s;
}

int majority(const std::vector<double>& counts) {
  int best = 0;
  for (std::size_t c = 1; c < counts.size(); ++c) {
    if (counts[c] > counts[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
  }
  return best;
}

struct TreeBuilder {
  const LabeledMatrix& data;
  std::size_t max_depth;
  std::size_t min_leaf;
  TreeModel model;

  std::size_t build(std::vector<std::size_t> idx, std::size_t depth) {
    std::vector<double> counts(data.classes, 0.0);
    for (auto i : idx) counts[static_cast<std::size_t>(data.y[i])] += 1.0;
    const double n = static_cast<double>(idx.size());

    const std::size_t node_id = model.nodes.size();
    model.nodes.push_back(TreeNode{true, majority(counts), 0, 0.0, 0, 0});

    const double parent_gini = gini(counts, n);
    if (depth >= max_depth || parent_gini <= 0.0 || idx.size() < 2 * min_leaf) return node_id;

    double best_gain = 0.0;
    std::size_t best_feature = 0;
    double best_threshold = 0.0;
    bool found = false;

    std::vector<std::size_t> order = idx;
    for (Eigen::Index f = 0; f < data.x.cols(); ++f) {
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return data.x(a, f) < data.x(b, f); });
      std::vector<double> left(data.classes, 0.0);
      std::vector<double> right = counts;
      for (std::size_t p = 0; p + 1 < order.size(); ++p) {
        const auto c = static_cast<std::size_t>(data.y[order[p]]);
        left[c] += 1.0;
        right[c] -= 1.0;
        const double a = data.x(order[p], f);
        const double b = data.x(order[p + 1], f);
        if (!(a < b)) continue;
        const std::size_t nl = p + 1;
        const std::size_t nr = order.size() - nl;
        if (nl < min_leaf || nr < min_leaf) continue;
        const double wl = static_cast<double>(nl) / n;
        const double wr = static_cast<double>(nr) / n;
        const double gain =
            parent_gini - wl * gini(left, static_cast<double>(nl)) - wr * gini(right, static_cast<double>(nr));
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<std::size_t>(f);
          best_threshold = midpoint(a, b);
          found = true;
        }
      }
    }
    if (!found) return node_id;

    std::vector<std::size_t> li;
    std::vector<std::size_t> ri;
    for (auto i : idx) {
      (data.x(i, static_cast<Eigen::Index>(best_feature)) <= best_threshold ? li : ri).push_back(i);
    }
    const std::size_t l = build(std::move(li), depth + 1);
    const std::size_t r = build(std::move(ri), depth + 1);
    auto& node = model.nodes[node_id];
    node.leaf = false;
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = l;
    node.right = r;
    return node_id;
  }
};

// ---- AdaBoost stumps ------------------------------------------------------

Stump fit_stump(const LabeledMatrix& data, const std::vector<double>& w, double& weighted_error) {
  const std::size_t n = data.y.size();
  std::vector<double> total(data.classes, 0.0);
  for (std::size_t i = 0; i < n; ++i) total[static_cast<std::size_t>(data.y[i])] += w[i];
  const double mass = std::accumulate(total.begin(), total.end(), 0.0);

  Stump best;
  best.left_label = best.right_label = majority(total);
  double best_err = mass - total[static_cast<std::size_t>(best.left_label)];

  std::vector<std::size_t> order(n);
  for (Eigen::Index f = 0; f < data.x.cols(); ++f) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return data.x(a, f) < data.x(b, f); });
    std::vector<double> left(data.classes, 0.0);
    for (std::size_t p = 0; p + 1 < n; ++p) {
      left[static_cast<std::size_t>(data.y[order[p]])] += w[order[p]];
      const double a = data.x(order[p], f);
      const double b = data.x(order[p + 1], f);
      if (!(a < b)) continue;
      std::vector<double> right(data.classes);
      for (std::size_t c = 0; c < data.classes; ++c) right[c] = total[c] - left[c];
      const int lc = majority(left);
      const int rc = majority(right);
      const double err = mass - left[static_cast<std::size_t>(lc)] - right[static_cast<std::size_t>(rc)];
      if (err < best_err) {
        best_err = err;
        best = Stump{static_cast<std::size_t>(f), midpoint(a, b), lc, rc};
      }
    }
  }
  weighted_error = mass > 0.0 ? std::max(0.0, best_err / mass) : 0.0;
  return best;
}

int stump_predict(const Stump& s, const Eigen::Ref<const VectorXd>& x) {
  return x[static_cast<Eigen::Index>(s.feature)] <= s.threshold ? s.left_label : s.right_label;
}

// ---- MLP -----------------------------------------------------------------

struct Forward {
  std::vector<MatrixXd> activations;  // activations[0] = input (d x n), last = softmax probs
};

Forward forward(const std::vector<DenseLayer>& layers, const MatrixXd& x_rows) {
  Forward fw;
  fw.activations.push_back(x_rows.transpose());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    MatrixXd z = layers[l].weights * fw.activations.back();
    z.colwise() += layers[l].bias;
    if (l + 1 < layers.size()) {
      fw.activations.push_back(z.array().tanh().matrix());
    } else {
      for (Eigen::Index j = 0; j < z.cols(); ++j) {
        const double mx = z.col(j).maxCoeff();
        z.col(j) = (z.col(j).array() - mx).exp().matrix();
        z.col(j) /= z.col(j).sum();
      }
      fw.activations.push_back(std::move(z));
    }
  }
  return fw;
}

MatrixXd standardise(const MlpModel& m, const MatrixXd& x) {
  MatrixXd out = x;
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    out.col(c) = ((x.col(c).array() - m.input_mean[c]) / m.input_scale[c]).matrix();
  }
  return out;
}

// ---- JSON helpers ---------------------------------------------------------

json matrix_json(const MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(rows)}};
}

MatrixXd matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  MatrixXd m(rows, cols);
  const auto& data = j.at("data");
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data.at(r).at(c).get<double>();
  }
  return m;
}

json vector_json(const VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

VectorXd vector_from_json(const json& j) {
  VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = j.at(i).get<double>();
  return v;
}

}  // namespace

std::string to_string(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::knn: return "knn";
    case ClassifierKind::lda: return "lda";
    case ClassifierKind::dtree: return "dtree";
    case ClassifierKind::adaboost: return "adaboost";
    case ClassifierKind::mlp: return "mlp";
    case ClassifierKind::nb: return "nb";
  }
  return "unknown";
}

ClassifierKind classifier_kind_from_string(const std::string& s) {
  for (auto k : {ClassifierKind::knn, ClassifierKind::lda, ClassifierKind::dtree, ClassifierKind::adaboost,
                 ClassifierKind::mlp, ClassifierKind::nb}) {
    if (to_string(k) == s) return k;
  }
  fail(ErrorKind::invalid_argument, "unknown classifier '" + s + "' (knn | lda | dtree | adaboost | mlp | nb)");
}

void ClassifierSpec::validate() const {
  auto positive = [](bool ok, const char* what) {
    if (!ok) fail(ErrorKind::invalid_argument, std::string("classifier hyperparameter must be positive: ") + what);
  };
  positive(k > 0, "k");
  positive(max_depth > 0, "max_depth");
  positive(min_leaf > 0, "min_leaf");
  positive(rounds > 0, "rounds");
  positive(epochs > 0, "epochs");
  positive(learning_rate > 0.0, "learning_rate");
  positive(ridge > 0.0, "ridge");
  positive(variance_floor > 0.0, "variance_floor");
  for (auto h : hidden_sizes) positive(h > 0, "hidden_sizes");
}

TrainedModel::TrainedModel(ClassifierKind kind, std::vector<std::string> class_labels,
                           std::vector<std::string> feature_names, ModelParameters params)
    : kind_(kind),
      class_labels_(std::move(class_labels)),
      feature_names_(std::move(feature_names)),
      params_(std::move(params)) {}

std::size_t TrainedModel::predict_index(std::span<const double> x) const {
  if (x.size() != feature_names_.size()) {
    fail(ErrorKind::invalid_argument, "feature vector has " + std::to_string(x.size()) + " values, model expects " +
                                          std::to_string(feature_names_.size()));
  }
  for (double v : x) {
    if (!std::isfinite(v)) fail(ErrorKind::numeric, "feature vector contains a non-finite value");
  }
  const Eigen::Map<const VectorXd> v(x.data(), static_cast<Eigen::Index>(x.size()));
  const int c = std::visit([&](const auto& m) { return gafds::predict_index(m, v); }, params_);
  return static_cast<std::size_t>(c);
}

const std::string& TrainedModel::predict(std::span<const double> x) const {
  return class_labels_[predict_index(x)];
}

LabeledMatrix to_labeled_matrix(const FeatureMatrix& features, const std::vector<std::string>& class_labels) {
  LabeledMatrix data;
  data.classes = class_labels.size();
  data.x.resize(static_cast<Eigen::Index>(features.rows()), static_cast<Eigen::Index>(features.cols()));
  data.y.resize(features.rows());
  for (std::size_t r = 0; r < features.rows(); ++r) {
    for (std::size_t c = 0; c < features.cols(); ++c) {
      data.x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = features.at(r, c);
    }
    const auto it = std::lower_bound(class_labels.begin(), class_labels.end(), features.labels()[r]);
    if (it == class_labels.end() || *it != features.labels()[r]) {
      fail(ErrorKind::invalid_argument, "label " + features.labels()[r] + " is not a known class");
    }
    data.y[r] = static_cast<int>(it - class_labels.begin());
  }
  return data;
}

TrainedModel train(const ClassifierSpec& spec, const FeatureMatrix& features) {
  spec.validate();
  if (features.cols() == 0) fail(ErrorKind::invalid_argument, "cannot train on zero features");
  auto classes = features.class_labels();
  const auto data = to_labeled_matrix(features, classes);
  check_training_data(data);
  if (spec.kind == ClassifierKind::lda || spec.kind == ClassifierKind::nb) {
    const auto counts = class_counts(data);
    for (std::size_t c = 0; c < counts.size(); ++c) {
      if (counts[c] < 2) {
        fail(ErrorKind::invalid_argument, to_string(spec.kind) + " needs >= 2 records of class " + classes[c]);
      }
    }
  }

  ModelParameters params = [&]() -> ModelParameters {
    switch (spec.kind) {
      case ClassifierKind::knn: return fit_knn(data, spec.k);
      case ClassifierKind::lda: return fit_lda(data, spec.ridge);
      case ClassifierKind::dtree: return fit_tree(data, spec.max_depth, spec.min_leaf);
      case ClassifierKind::adaboost: return fit_adaboost(data, spec.rounds);
      case ClassifierKind::mlp:
        return fit_mlp(data, spec.hidden_sizes, spec.epochs, spec.learning_rate, spec.seed);
      case ClassifierKind::nb: return fit_nb(data, spec.variance_floor);
    }
    fail(ErrorKind::invalid_argument, "unknown classifier kind");
  }();
  return TrainedModel(spec.kind, std::move(classes), features.names(), std::move(params));
}

// ---- k-NN -----------------------------------------------------------------

KnnModel fit_knn(const LabeledMatrix& data, std::size_t k) {
  check_training_data(data);
  if (k == 0) fail(ErrorKind::invalid_argument, "knn needs k >= 1");
  return KnnModel{data.x, data.y, k};
}

int predict_index(const KnnModel& m, const Eigen::Ref<const VectorXd>& x) {
  const auto n = static_cast<std::size_t>(m.x.rows());
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    dist[i] = {(m.x.row(static_cast<Eigen::Index>(i)).transpose() - x).squaredNorm(), i};
  }
  const std::size_t k = std::min(m.k, n);
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  int classes = 0;
  for (int c : m.y) classes = std::max(classes, c + 1);
  VectorXd votes = VectorXd::Zero(classes);
  for (std::size_t i = 0; i < k; ++i) votes[m.y[dist[i].second]] += 1.0;
  return argmax_lowest(votes);
}

// ---- LDA ------------------------------------------------------------------

LdaModel fit_lda(const LabeledMatrix& data, double ridge) {
  check_training_data(data);
  const Eigen::Index d = data.x.cols();
  const auto k = static_cast<Eigen::Index>(data.classes);
  const auto counts = class_counts(data);
  const auto n = static_cast<double>(data.y.size());

  MatrixXd means = MatrixXd::Zero(k, d);
  for (std::size_t i = 0; i < data.y.size(); ++i) means.row(data.y[i]) += data.x.row(static_cast<Eigen::Index>(i));
  for (Eigen::Index c = 0; c < k; ++c) {
    if (counts[static_cast<std::size_t>(c)] > 0) means.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
  }

  MatrixXd cov = MatrixXd::Zero(d, d);
  for (std::size_t i = 0; i < data.y.size(); ++i) {
    const VectorXd diff = data.x.row(static_cast<Eigen::Index>(i)).transpose() - means.row(data.y[i]).transpose();
    cov.noalias() += diff * diff.transpose();
  }
  const double dof = n - static_cast<double>(k);
  cov /= dof > 0.0 ? dof : n;

  // Ridge relative to the average variance keeps the regulariser scale-free.
  const double avg_var = cov.trace() / static_cast<double>(d);
  const double lambda = avg_var > 0.0 ? ridge * avg_var : ridge;
  cov.diagonal().array() += lambda;

  const Eigen::LDLT<MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) fail(ErrorKind::numeric, "lda: covariance factorisation failed");

  LdaModel m;
  m.coefficients.resize(k, d);
  m.intercepts.resize(k);
  for (Eigen::Index c = 0; c < k; ++c) {
    const VectorXd mu = means.row(c).transpose();
    const VectorXd w = solver.solve(mu);
    m.coefficients.row(c) = w.transpose();
    const double prior = static_cast<double>(counts[static_cast<std::size_t>(c)]) / n;
    m.intercepts[c] = -0.5 * mu.dot(w) + (prior > 0.0 ? std::log(prior) : -std::numeric_limits<double>::infinity());
  }
  if (!m.coefficients.allFinite()) fail(ErrorKind::numeric, "lda: singular within-class covariance");
  return m;
}

int predict_index(const LdaModel& m, const Eigen::Ref<const VectorXd>& x) {
  const VectorXd scores = m.coefficients * x + m.intercepts;
  return argmax_lowest(scores);
}

Eigen::VectorXd lda_direction(const LdaModel& m) {
  if (m.coefficients.rows() != 2) fail(ErrorKind::invalid_argument, "lda_direction needs a two-class model");
  return (m.coefficients.row(1) - m.coefficients.row(0)).transpose();
}

// ---- decision tree ----------------------------------------------------------

TreeModel fit_tree(const LabeledMatrix& data, std::size_t max_depth, std::size_t min_leaf) {
  check_training_data(data);
  TreeBuilder b{data, max_depth, std::max<std::size_t>(min_leaf, 1), {}};
  std::vector<std::size_t> idx(data.y.size());
  std::iota(idx.begin(), idx.end(), 0);
  b.build(std::move(idx), 0);
  return std::move(b.model);
}

int predict_index(const TreeModel& m, const Eigen::Ref<const VectorXd>& x) {
  std::size_t node = 0;
  while (!m.nodes[node].leaf) {
    const auto& n = m.nodes[node];
    node = x[static_cast<Eigen::Index>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return m.nodes[node].label;
}

// ---- AdaBoost (SAMME) -------------------------------------------------------

AdaBoostModel fit_adaboost(const LabeledMatrix& data, std::size_t rounds) {
  check_training_data(data);
  const std::size_t n = data.y.size();
  const auto k = static_cast<double>(data.classes);
  AdaBoostModel m;
  m.classes = data.classes;
  std::vector<double> w(n, 1.0 / static_cast<double>(n));

  for (std::size_t t = 0; t < rounds; ++t) {
    double err = 0.0;
    const Stump s = fit_stump(data, w, err);
    if (err >= 1.0 - 1.0 / k) {
      // No better than chance: keep one stump so the model can still vote.
      if (m.stumps.empty()) {
        m.stumps.push_back(s);
        m.alphas.push_back(1.0);
      }
      break;
    }
    constexpr double kMinError = 1e-10;
    const double e = std::max(err, kMinError);
    const double alpha = std::log((1.0 - e) / e) + std::log(k - 1.0);
    m.stumps.push_back(s);
    m.alphas.push_back(alpha);
    if (err <= kMinError) break;

    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (stump_predict(s, data.x.row(static_cast<Eigen::Index>(i)).transpose()) != data.y[i]) w[i] *= std::exp(alpha);
      total += w[i];
    }
    for (auto& wi : w) wi /= total;
  }
  return m;
}

int predict_index_staged(const AdaBoostModel& m, const Eigen::Ref<const VectorXd>& x, std::size_t rounds) {
  VectorXd votes = VectorXd::Zero(static_cast<Eigen::Index>(m.classes));
  const std::size_t r = std::min(rounds, m.stumps.size());
  for (std::size_t t = 0; t < r; ++t) votes[stump_predict(m.stumps[t], x)] += m.alphas[t];
  return argmax_lowest(votes);
}

int predict_index(const AdaBoostModel& m, const Eigen::Ref<const VectorXd>& x) {
  return predict_index_staged(m, x, m.stumps.size());
}

// ---- MLP -----------------------------------------------------------------------

double mlp_loss(const std::vector<DenseLayer>& layers, const MatrixXd& x, std::span<const int> y) {
  const auto fw = forward(layers, x);
  const MatrixXd& p = fw.activations.back();
  double loss = 0.0;
  for (Eigen::Index j = 0; j < p.cols(); ++j) loss -= std::log(std::max(p(y[static_cast<std::size_t>(j)], j), 1e-300));
  return loss / static_cast<double>(p.cols());
}

std::vector<DenseLayer> mlp_gradient(const std::vector<DenseLayer>& layers, const MatrixXd& x,
                                     std::span<const int> y) {
  const auto fw = forward(layers, x);
  const auto n = static_cast<double>(x.rows());
  MatrixXd delta = fw.activations.back();
  for (Eigen::Index j = 0; j < delta.cols(); ++j) delta(y[static_cast<std::size_t>(j)], j) -= 1.0;
  delta /= n;

  std::vector<DenseLayer> grad(layers.size());
  for (std::size_t l = layers.size(); l-- > 0;) {
    const MatrixXd& a_prev = fw.activations[l];
    grad[l].weights = delta * a_prev.transpose();
    grad[l].bias = delta.rowwise().sum();
    if (l > 0) {
      MatrixXd back = layers[l].weights.transpose() * delta;
      delta = (back.array() * (1.0 - a_prev.array().square())).matrix();
    }
  }
  return grad;
}

MlpModel fit_mlp(const LabeledMatrix& data, std::span<const std::size_t> hidden_sizes, std::size_t epochs,
                 double learning_rate, std::uint64_t seed) {
  check_training_data(data);
  const Eigen::Index d = data.x.cols();
  MlpModel m;
  m.input_mean = data.x.colwise().mean().transpose();
  m.input_scale.resize(d);
  for (Eigen::Index c = 0; c < d; ++c) {
    const double sd = std::sqrt((data.x.col(c).array() - m.input_mean[c]).square().mean());
    m.input_scale[c] = sd > 0.0 ? sd : 1.0;
  }
  const MatrixXd xs = standardise(m, data.x);

  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::size_t> sizes{static_cast<std::size_t>(d)};
  sizes.insert(sizes.end(), hidden_sizes.begin(), hidden_sizes.end());
  sizes.push_back(data.classes);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    DenseLayer layer;
    const auto in = static_cast<Eigen::Index>(sizes[l]);
    const auto out = static_cast<Eigen::Index>(sizes[l + 1]);
    const double scale = 1.0 / std::sqrt(static_cast<double>(in));
    layer.weights.resize(out, in);
    for (Eigen::Index r = 0; r < out; ++r) {
      for (Eigen::Index c = 0; c < in; ++c) layer.weights(r, c) = normal(rng) * scale;
    }
    layer.bias = VectorXd::Zero(out);
    m.layers.push_back(std::move(layer));
  }

  for (std::size_t e = 0; e < epochs; ++e) {
    const auto grad = mlp_gradient(m.layers, xs, data.y);
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
      m.layers[l].weights -= learning_rate * grad[l].weights;
      m.layers[l].bias -= learning_rate * grad[l].bias;
    }
  }
  for (const auto& layer : m.layers) {
    if (!layer.weights.allFinite() || !layer.bias.allFinite()) fail(ErrorKind::numeric, "mlp training diverged");
  }
  return m;
}

int predict_index(const MlpModel& m, const Eigen::Ref<const VectorXd>& x) {
  const MatrixXd row = standardise(m, x.transpose());
  const auto fw = forward(m.layers, row);
  return argmax_lowest(fw.activations.back().col(0));
}

// ---- Gaussian naive Bayes --------------------------------------------------------

NbModel fit_nb(const LabeledMatrix& data, double variance_floor) {
  check_training_data(data);
  const Eigen::Index d = data.x.cols();
  const auto k = static_cast<Eigen::Index>(data.classes);
  const auto counts = class_counts(data);
  NbModel m;
  m.means = MatrixXd::Zero(k, d);
  m.variances = MatrixXd::Zero(k, d);
  m.log_priors.resize(k);
  for (std::size_t i = 0; i < data.y.size(); ++i) m.means.row(data.y[i]) += data.x.row(static_cast<Eigen::Index>(i));
  for (Eigen::Index c = 0; c < k; ++c) {
    const auto nc = static_cast<double>(counts[static_cast<std::size_t>(c)]);
    if (nc > 0) m.means.row(c) /= nc;
  }
  for (std::size_t i = 0; i < data.y.size(); ++i) {
    const auto diff = data.x.row(static_cast<Eigen::Index>(i)) - m.means.row(data.y[i]);
    m.variances.row(data.y[i]) += diff.array().square().matrix();
  }
  const auto n = static_cast<double>(data.y.size());
  for (Eigen::Index c = 0; c < k; ++c) {
    const auto nc = static_cast<double>(counts[static_cast<std::size_t>(c)]);
    if (nc > 0) m.variances.row(c) /= nc;
    m.log_priors[c] = nc > 0 ? std::log(nc / n) : -std::numeric_limits<double>::infinity();
  }
  m.variances = m.variances.cwiseMax(variance_floor);
  return m;
}

namespace {
VectorXd nb_log_joint(const NbModel& m, const Eigen::Ref<const VectorXd>& x) {
  VectorXd s = m.log_priors;
  for (Eigen::Index c = 0; c < m.means.rows(); ++c) {
    for (Eigen::Index f = 0; f < m.means.cols(); ++f) {
      const double var = m.variances(c, f);
      const double diff = x[f] - m.means(c, f);
      s[c] += -0.5 * std::log(2.0 * M_PI * var) - diff * diff / (2.0 * var);
    }
  }
  return s;
}
}  // namespace

int predict_index(const NbModel& m, const Eigen::Ref<const VectorXd>& x) { return argmax_lowest(nb_log_joint(m, x)); }

Eigen::VectorXd nb_posterior(const NbModel& m, const Eigen::Ref<const VectorXd>& x) {
  const VectorXd s = nb_log_joint(m, x);
  const double mx = s.maxCoeff();
  VectorXd p = (s.array() - mx).exp().matrix();
  return p / p.sum();
}

// ---- serialisation ------------------------------------------------------------------

std::string model_to_json(const TrainedModel& model) {
  json j;
  j["kind"] = to_string(model.kind());
  j["class_labels"] = model.class_labels();
  j["feature_names"] = model.feature_names();
  json p;
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, KnnModel>) {
          p = {{"k", m.k}, {"x", matrix_json(m.x)}, {"y", m.y}};
        } else if constexpr (std::is_same_v<T, LdaModel>) {
          p = {{"coefficients", matrix_json(m.coefficients)}, {"intercepts", vector_json(m.intercepts)}};
        } else if constexpr (std::is_same_v<T, TreeModel>) {
          json nodes = json::array();
          for (const auto& n : m.nodes) {
            nodes.push_back({{"leaf", n.leaf}, {"label", n.label}, {"feature", n.feature},
                             {"threshold", n.threshold}, {"left", n.left}, {"right", n.right}});
          }
          p = {{"nodes", std::move(nodes)}};
        } else if constexpr (std::is_same_v<T, AdaBoostModel>) {
          json stumps = json::array();
          for (const auto& s : m.stumps) {
            stumps.push_back({{"feature", s.feature},
                              {"threshold", std::isinf(s.threshold) ? json(nullptr) : json(s.threshold)},
                              {"left", s.left_label},
                              {"right", s.right_label}});
          }
          p = {{"classes", m.classes}, {"stumps", std::move(stumps)}, {"alphas", m.alphas}};
        } else if constexpr (std::is_same_v<T, MlpModel>) {
          json layers = json::array();
          for (const auto& l : m.layers) {
            layers.push_back({{"weights", matrix_json(l.weights)}, {"bias", vector_json(l.bias)}});
          }
          p = {{"input_mean", vector_json(m.input_mean)},
               {"input_scale", vector_json(m.input_scale)},
               {"layers", std::move(layers)}};
        } else {
          p = {{"means", matrix_json(m.means)},
               {"variances", matrix_json(m.variances)},
               {"log_priors", vector_json(m.log_priors)}};
        }
      },
      model.parameters());
  j["parameters"] = std::move(p);
  return j.dump(2);
}

TrainedModel model_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    const auto kind = classifier_kind_from_string(j.at("kind").get<std::string>());
    const auto& p = j.at("parameters");
    ModelParameters params = [&]() -> ModelParameters {
      switch (kind) {
        case ClassifierKind::knn:
          return KnnModel{matrix_from_json(p.at("x")), p.at("y").get<std::vector<int>>(), p.at("k").get<std::size_t>()};
        case ClassifierKind::lda:
          return LdaModel{matrix_from_json(p.at("coefficients")), vector_from_json(p.at("intercepts"))};
        case ClassifierKind::dtree: {
          TreeModel t;
          for (const auto& n : p.at("nodes")) {
            t.nodes.push_back(TreeNode{n.at("leaf").get<bool>(), n.at("label").get<int>(),
                                       n.at("feature").get<std::size_t>(), n.at("threshold").get<double>(),
                                       n.at("left").get<std::size_t>(), n.at("right").get<std::size_t>()});
          }
          return t;
        }
        case ClassifierKind::adaboost: {
          AdaBoostModel a;
          a.classes = p.at("classes").get<std::size_t>();
          for (const auto& s : p.at("stumps")) {
            const auto& th = s.at("threshold");
            a.stumps.push_back(Stump{s.at("feature").get<std::size_t>(),
                                     th.is_null() ? std::numeric_limits<double>::infinity() : th.get<double>(),
                                     s.at("left").get<int>(), s.at("right").get<int>()});
          }
          a.alphas = p.at("alphas").get<std::vector<double>>();
          return a;
        }
        case ClassifierKind::mlp: {
          MlpModel m;
          m.input_mean = vector_from_json(p.at("input_mean"));
          m.input_scale = vector_from_json(p.at("input_scale"));
          for (const auto& l : p.at("layers")) {
            m.layers.push_back(DenseLayer{matrix_from_json(l.at("weights")), vector_from_json(l.at("bias"))});
          }
          return m;
        }
        case ClassifierKind::nb:
          return NbModel{matrix_from_json(p.at("means")), matrix_from_json(p.at("variances")),
                         vector_from_json(p.at("log_priors"))};
      }
      fail(ErrorKind::parse, "unknown model kind");
    }();
    return TrainedModel(kind, j.at("class_labels").get<std::vector<std::string>>(),
                        j.at("feature_names").get<std::vector<std::string>>(), std::move(params));
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, std::string("model json: ") + e.what());
  }
}

}  // namespace gafds
