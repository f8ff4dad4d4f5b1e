#include "gafds/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>

#include "gafds/common.hpp"

namespace gafds {

namespace fs = std::filesystem;

TimeSeries::TimeSeries(std::vector<double> samples, double sample_rate)
    : samples_(std::move(samples)), sample_rate_(sample_rate) {
  if (samples_.size() < 2) fail(ErrorKind::invalid_argument, "time series needs at least 2 samples");
  if (!(sample_rate_ > 0.0) || !std::isfinite(sample_rate_)) {
    fail(ErrorKind::invalid_argument, "sample rate must be positive and finite");
  }
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (!std::isfinite(samples_[i])) {
      fail(ErrorKind::numeric, "time series sample " + std::to_string(i) + " is not finite");
    }
  }
}

LabeledDataset::LabeledDataset(std::vector<Record> records) {
  for (auto& r : records) add(std::move(r));
}

void LabeledDataset::add(Record record) {
  if (record.label.empty()) fail(ErrorKind::invalid_argument, "record label must not be empty");
  records_.push_back(std::move(record));
}

void LabeledDataset::append(const LabeledDataset& other) {
  records_.insert(records_.end(), other.records_.begin(), other.records_.end());
}

std::vector<std::string> LabeledDataset::class_labels() const {
  std::set<std::string> s;
  for (const auto& r : records_) s.insert(r.label);
  return {s.begin(), s.end()};
}

std::vector<std::string> LabeledDataset::labels() const {
  std::vector<std::string> out;
  out.reserve(records_.size());
  for (const auto& r : records_) out.push_back(r.label);
  return out;
}

namespace {

std::vector<double> read_value_file(const fs::path& file) {
  std::ifstream in(file);
  if (!in) fail(ErrorKind::io, "cannot open " + file.string());
  std::vector<double> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    double v = 0.0;
    if (!parse_double(line, v) || !std::isfinite(v)) {
      fail(ErrorKind::parse, file.string() + ":" + std::to_string(line_no) + ": not a number: '" + trim(line) + "'");
    }
    values.push_back(v);
  }
  if (values.empty()) fail(ErrorKind::parse, file.string() + ": empty file");
  return values;
}

void check_csv_token(const std::string& s, const char* what) {
  if (s.find_first_of(",\n\r\"") != std::string::npos) {
    fail(ErrorKind::invalid_argument, std::string(what) + " '" + s + "' contains a CSV delimiter");
  }
}

}  // namespace

LabeledDataset load_bonn_directory(const fs::path& dir, const std::string& label, double sample_rate) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) fail(ErrorKind::io, "not a directory: " + dir.string());

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    if (entry.path().filename().string().starts_with(".")) continue;
    files.push_back(entry.path());
  }
  if (files.empty()) fail(ErrorKind::io, "no records in " + dir.string());
  std::sort(files.begin(), files.end());

  LabeledDataset ds;
  for (const auto& f : files) {
    auto values = read_value_file(f);
    if (values.size() < 2) fail(ErrorKind::parse, f.string() + ": fewer than 2 samples");
    ds.add(Record{f.stem().string(), label, TimeSeries(std::move(values), sample_rate)});
  }
  return ds;
}

TimeSeries synthesize_class(std::span<const Tone> tones, double noise_sigma, std::size_t length,
                            double sample_rate, std::uint64_t seed) {
  if (length < 2) fail(ErrorKind::invalid_argument, "synthetic length must be >= 2");
  if (!(sample_rate > 0.0)) fail(ErrorKind::invalid_argument, "sample rate must be positive");
  if (noise_sigma < 0.0) fail(ErrorKind::invalid_argument, "noise sigma must be >= 0");
  for (const auto& t : tones) {
    if (t.frequency_hz < 0.0 || t.frequency_hz >= sample_rate / 2.0) {
      fail(ErrorKind::invalid_argument,
           "tone frequency " + format_double(t.frequency_hz) + " Hz is at or above Nyquist");
    }
  }

  Rng rng(seed);
  std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi);
  std::vector<double> phases;
  for (std::size_t i = 0; i < tones.size(); ++i) phases.push_back(phase_dist(rng));

  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> x(length);
  for (std::size_t n = 0; n < length; ++n) {
    const double t = static_cast<double>(n) / sample_rate;
    double v = 0.0;
    for (std::size_t i = 0; i < tones.size(); ++i) {
      v += tones[i].amplitude * std::sin(2.0 * std::numbers::pi * tones[i].frequency_hz * t + phases[i]);
    }
    if (noise_sigma > 0.0) v += noise_sigma * noise(rng);
    x[n] = v;
  }
  return TimeSeries(std::move(x), sample_rate);
}

LabeledDataset synthesize_dataset(const SyntheticSpec& spec, std::uint64_t seed) {
  LabeledDataset ds;
  std::uint64_t stream = 0;
  for (const auto& cls : spec.classes) {
    for (std::size_t i = 0; i < cls.count; ++i) {
      char id[32];
      std::snprintf(id, sizeof(id), "_%03zu", i);
      ds.add(Record{cls.label + id, cls.label,
                    synthesize_class(cls.tones, cls.noise_sigma, spec.length, spec.sample_rate,
                                     derive_seed(seed, stream++))});
    }
  }
  return ds;
}

LabeledDataset apply_groups(const LabeledDataset& dataset, const LabelGroups& groups) {
  if (groups.empty()) fail(ErrorKind::invalid_argument, "label grouping is empty");
  const auto present = dataset.class_labels();
  std::map<std::string, std::string> mapping;
  std::set<std::string> group_names;
  for (const auto& [name, members] : groups) {
    if (name.empty()) fail(ErrorKind::invalid_argument, "group name must not be empty");
    if (!group_names.insert(name).second) fail(ErrorKind::invalid_argument, "duplicate group " + name);
    if (members.empty()) fail(ErrorKind::invalid_argument, "group " + name + " is empty");
    for (const auto& m : members) {
      if (!std::binary_search(present.begin(), present.end(), m)) {
        fail(ErrorKind::invalid_argument, "group " + name + " references unknown label " + m);
      }
      if (!mapping.emplace(m, name).second) {
        fail(ErrorKind::invalid_argument, "label " + m + " appears in more than one group");
      }
    }
  }
  LabeledDataset out;
  for (const auto& r : dataset.records()) {
    auto it = mapping.find(r.label);
    if (it == mapping.end()) continue;
    out.add(Record{r.id, it->second, r.series});
  }
  return out;
}

void write_dataset_csv(const LabeledDataset& dataset, std::ostream& out) {
  if (dataset.empty()) fail(ErrorKind::invalid_argument, "dataset is empty");
  const double rate = dataset.records().front().series.sample_rate();
  for (const auto& r : dataset.records()) {
    if (r.series.sample_rate() != rate) {
      fail(ErrorKind::invalid_argument, "CSV export needs one sample rate for all records");
    }
    check_csv_token(r.id, "record id");
    check_csv_token(r.label, "label");
  }
  out << "# sample_rate=" << format_double(rate) << "\n";
  out << "record_id,label,sample_index,value\n";
  for (const auto& r : dataset.records()) {
    const auto s = r.series.samples();
    for (std::size_t i = 0; i < s.size(); ++i) {
      out << r.id << ',' << r.label << ',' << i << ',' << format_double(s[i]) << '\n';
    }
  }
}

LabeledDataset read_dataset_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  double rate = 0.0;
  bool header_seen = false;

  struct Pending {
    std::string id;
    std::string label;
    std::vector<double> values;
  };
  std::vector<Pending> pending;

  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t.starts_with("#")) {
      const std::string key = "# sample_rate=";
      if (t.starts_with(key) && !parse_double(t.substr(key.size()), rate)) {
        fail(ErrorKind::parse, "dataset csv line " + std::to_string(line_no) + ": bad sample rate");
      }
      continue;
    }
    if (!header_seen) {
      if (t != "record_id,label,sample_index,value") {
        fail(ErrorKind::parse, "dataset csv: unexpected header '" + t + "'");
      }
      header_seen = true;
      continue;
    }
    const auto cols = split(t, ',');
    double index = 0.0;
    double value = 0.0;
    if (cols.size() != 4 || !parse_double(cols[2], index) || !parse_double(cols[3], value)) {
      fail(ErrorKind::parse, "dataset csv line " + std::to_string(line_no) + ": malformed row");
    }
    if (pending.empty() || pending.back().id != cols[0] || pending.back().label != cols[1]) {
      pending.push_back({cols[0], cols[1], {}});
    }
    if (static_cast<std::size_t>(index) != pending.back().values.size()) {
      fail(ErrorKind::parse, "dataset csv line " + std::to_string(line_no) + ": sample index out of order");
    }
    pending.back().values.push_back(value);
  }
  if (!header_seen) fail(ErrorKind::parse, "dataset csv: missing header");
  if (!(rate > 0.0)) fail(ErrorKind::parse, "dataset csv: missing '# sample_rate=' line");
  if (pending.empty()) fail(ErrorKind::parse, "dataset csv: no records");

  LabeledDataset ds;
  for (auto& p : pending) ds.add(Record{p.id, p.label, TimeSeries(std::move(p.values), rate)});
  return ds;
}

std::vector<std::size_t> FoldPlan::test_indices(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] == fold) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FoldPlan::train_indices(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] != fold) out.push_back(i);
  }
  return out;
}

FoldPlan make_folds(std::span<const std::string> labels, std::size_t k, std::uint64_t seed) {
  if (k < 2) fail(ErrorKind::invalid_argument, "fold count must be >= 2");

  std::vector<std::string> order;
  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [it, inserted] = members.try_emplace(labels[i]);
    if (inserted) order.push_back(labels[i]);
    it->second.push_back(i);
  }
  for (const auto& label : order) {
    if (members[label].size() < k) {
      fail(ErrorKind::invalid_argument, "class " + label + " has " + std::to_string(members[label].size()) +
                                            " records, fewer than k=" + std::to_string(k));
    }
  }

  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.assignments.assign(labels.size(), 0);
  Rng rng(seed);
  // Every class is dealt from fold 0, so per-fold class counts depend only on
  // class sizes, never on record order.
  for (const auto& label : order) {
    auto idx = members[label];
    // Fisher-Yates with an explicit draw so the permutation is identical across
    // standard library implementations.
    for (std::size_t i = idx.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(rng() % i);
      std::swap(idx[i - 1], idx[j]);
    }
    for (std::size_t p = 0; p < idx.size(); ++p) plan.assignments[idx[p]] = p % k;
  }
  return plan;
}

FoldPlan make_folds(const LabeledDataset& dataset, std::size_t k, std::uint64_t seed) {
  const auto labels = dataset.labels();
  return make_folds(labels, k, seed);
}

}  // namespace gafds
