#include "gafds/features.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>

#include "gafds/common.hpp"

namespace gafds {

FeatureMatrix::FeatureMatrix(std::vector<std::string> names, std::vector<std::string> record_ids,
                             std::vector<std::string> labels, std::vector<double> values)
    : names_(std::move(names)),
      record_ids_(std::move(record_ids)),
      labels_(std::move(labels)),
      values_(std::move(values)) {
  if (record_ids_.size() != labels_.size()) {
    fail(ErrorKind::invalid_argument, "feature matrix: record id and label counts differ");
  }
  if (values_.size() != labels_.size() * names_.size()) {
    fail(ErrorKind::invalid_argument, "feature matrix: value count does not match rows x cols");
  }
  std::set<std::string> seen;
  for (const auto& n : names_) {
    if (!seen.insert(n).second) fail(ErrorKind::invalid_argument, "duplicate feature name " + n);
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      const std::size_t r = i / names_.size();
      fail(ErrorKind::numeric, "feature " + names_[i % names_.size()] + " of record " + record_ids_[r] +
                                   " is not finite");
    }
  }
}

std::vector<double> FeatureMatrix::column(std::size_t c) const {
  std::vector<double> out(rows());
  for (std::size_t r = 0; r < rows(); ++r) out[r] = at(r, c);
  return out;
}

std::vector<std::string> FeatureMatrix::class_labels() const {
  std::set<std::string> s(labels_.begin(), labels_.end());
  return {s.begin(), s.end()};
}

std::size_t FeatureMatrix::column_index(const std::string& name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) fail(ErrorKind::invalid_argument, "unknown feature " + name);
  return static_cast<std::size_t>(it - names_.begin());
}

FeatureMatrix FeatureMatrix::select_columns(std::span<const std::size_t> cols) const {
  std::vector<std::string> names;
  for (auto c : cols) {
    if (c >= this->cols()) fail(ErrorKind::invalid_argument, "feature column out of range");
    names.push_back(names_[c]);
  }
  std::vector<double> v;
  v.reserve(rows() * cols.size());
  for (std::size_t r = 0; r < rows(); ++r) {
    for (auto c : cols) v.push_back(at(r, c));
  }
  return FeatureMatrix(std::move(names), record_ids_, labels_, std::move(v));
}

FeatureMatrix FeatureMatrix::select_columns(std::span<const std::string> names) const {
  std::vector<std::size_t> idx;
  for (const auto& n : names) idx.push_back(column_index(n));
  return select_columns(idx);
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> rows) const {
  std::vector<std::string> ids;
  std::vector<std::string> labels;
  std::vector<double> v;
  v.reserve(rows.size() * cols());
  for (auto r : rows) {
    if (r >= this->rows()) fail(ErrorKind::invalid_argument, "feature row out of range");
    ids.push_back(record_ids_[r]);
    labels.push_back(labels_[r]);
    const auto src = row(r);
    v.insert(v.end(), src.begin(), src.end());
  }
  return FeatureMatrix(names_, std::move(ids), std::move(labels), std::move(v));
}

FeatureMatrix FeatureMatrix::hconcat(const FeatureMatrix& other) const {
  if (other.record_ids_ != record_ids_ || other.labels_ != labels_) {
    fail(ErrorKind::invalid_argument, "hconcat: row identities differ");
  }
  auto names = names_;
  names.insert(names.end(), other.names_.begin(), other.names_.end());
  std::vector<double> v;
  v.reserve(rows() * names.size());
  for (std::size_t r = 0; r < rows(); ++r) {
    const auto a = row(r);
    const auto b = other.row(r);
    v.insert(v.end(), a.begin(), a.end());
    v.insert(v.end(), b.begin(), b.end());
  }
  return FeatureMatrix(std::move(names), record_ids_, labels_, std::move(v));
}

FeatureMatrix FeatureMatrix::with_values(std::vector<double> values) const {
  return FeatureMatrix(names_, record_ids_, labels_, std::move(values));
}

void write_features_csv(const FeatureMatrix& m, std::ostream& out) {
  out << "record_id,label";
  for (const auto& n : m.names()) out << ',' << n;
  out << '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    out << m.record_ids()[r] << ',' << m.labels()[r];
    for (std::size_t c = 0; c < m.cols(); ++c) out << ',' << format_double(m.at(r, c));
    out << '\n';
  }
}

FeatureMatrix read_features_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> names;
  bool header_seen = false;
  std::vector<std::string> ids;
  std::vector<std::string> labels;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.starts_with("#")) continue;
    auto cols = split(t, ',');
    if (!header_seen) {
      if (cols.size() < 2 || cols[0] != "record_id" || cols[1] != "label") {
        fail(ErrorKind::parse, "features csv: header must start with record_id,label");
      }
      names.assign(cols.begin() + 2, cols.end());
      header_seen = true;
      continue;
    }
    if (cols.size() != names.size() + 2) {
      fail(ErrorKind::parse, "features csv line " + std::to_string(line_no) + ": wrong column count");
    }
    ids.push_back(cols[0]);
    labels.push_back(cols[1]);
    for (std::size_t c = 2; c < cols.size(); ++c) {
      double v = 0.0;
      if (!parse_double(cols[c], v)) {
        fail(ErrorKind::parse, "features csv line " + std::to_string(line_no) + ": bad number '" + cols[c] + "'");
      }
      values.push_back(v);
    }
  }
  if (!header_seen) fail(ErrorKind::parse, "features csv: missing header");
  return FeatureMatrix(std::move(names), std::move(ids), std::move(labels), std::move(values));
}

}  // namespace gafds
