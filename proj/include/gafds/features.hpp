#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace gafds {

// Records x named features, row-major, with one class label per row.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::vector<std::string> names, std::vector<std::string> record_ids,
                std::vector<std::string> labels, std::vector<double> values);

  std::size_t rows() const { return labels_.size(); }
  std::size_t cols() const { return names_.size(); }

  double at(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols(), cols()}; }
  std::vector<double> column(std::size_t c) const;
  std::span<const double> values() const { return values_; }

  const std::vector<std::string>& names() const { return names_; }
  const std::vector<std::string>& record_ids() const { return record_ids_; }
  const std::vector<std::string>& labels() const { return labels_; }
  std::vector<std::string> class_labels() const;

  std::size_t column_index(const std::string& name) const;

  FeatureMatrix select_columns(std::span<const std::size_t> cols) const;
  FeatureMatrix select_columns(std::span<const std::string> names) const;
  FeatureMatrix select_rows(std::span<const std::size_t> rows) const;
  // Same rows (ids and labels must match), columns of `other` appended.
  FeatureMatrix hconcat(const FeatureMatrix& other) const;
  FeatureMatrix with_values(std::vector<double> values) const;

 private:
  std::vector<std::string> names_;
  std::vector<std::string> record_ids_;
  std::vector<std::string> labels_;
  std::vector<double> values_;
};

// Header `record_id,label,<feature names...>`; values in shortest round-trip form.
void write_features_csv(const FeatureMatrix& m, std::ostream& out);
FeatureMatrix read_features_csv(std::istream& in);

}  // namespace gafds
