#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace gafds {

inline constexpr double kBonnSampleRate = 173.61;

// Uniformly sampled real-valued signal. Length >= 2, finite values, rate > 0.
class TimeSeries {
 public:
  TimeSeries(std::vector<double> samples, double sample_rate);

  std::span<const double> samples() const { return samples_; }
  double sample_rate() const { return sample_rate_; }
  std::size_t size() const { return samples_.size(); }

 private:
  std::vector<double> samples_;
  double sample_rate_;
};

struct Record {
  std::string id;
  std::string label;
  TimeSeries series;
};

class LabeledDataset {
 public:
  LabeledDataset() = default;
  explicit LabeledDataset(std::vector<Record> records);

  void add(Record record);
  void append(const LabeledDataset& other);

  const std::vector<Record>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  // Distinct labels in lexicographic order.
  std::vector<std::string> class_labels() const;
  // Per-record labels in record order.
  std::vector<std::string> labels() const;

 private:
  std::vector<Record> records_;
};

// Reads every regular file of `dir` (sorted by file name) as one record.
// Each non-blank line must hold a single number.
LabeledDataset load_bonn_directory(const std::filesystem::path& dir, const std::string& label,
                                   double sample_rate = kBonnSampleRate);

struct Tone {
  double frequency_hz = 0.0;
  double amplitude = 0.0;
};

// Sum of sinusoids with uniformly random phases plus white Gaussian noise.
TimeSeries synthesize_class(std::span<const Tone> tones, double noise_sigma, std::size_t length,
                            double sample_rate, std::uint64_t seed);

struct SyntheticClass {
  std::string label;
  std::vector<Tone> tones;
  double noise_sigma = 0.0;
  std::size_t count = 0;
};

struct SyntheticSpec {
  std::vector<SyntheticClass> classes;
  std::size_t length = 1024;
  double sample_rate = 128.0;
};

// Records are named "<label>_<index>", each drawn with its own derived seed.
LabeledDataset synthesize_dataset(const SyntheticSpec& spec, std::uint64_t seed);

// Task-level label grouping, e.g. {"CD": {"C", "D"}, "E": {"E"}}. Records whose
// label belongs to no group are dropped. Groups must be disjoint, nonempty and
// reference existing labels.
using LabelGroups = std::vector<std::pair<std::string, std::vector<std::string>>>;
LabeledDataset apply_groups(const LabeledDataset& dataset, const LabelGroups& groups);

// CSV layout: a "# sample_rate=<hz>" line, then `record_id,label,sample_index,value`.
void write_dataset_csv(const LabeledDataset& dataset, std::ostream& out);
LabeledDataset read_dataset_csv(std::istream& in);

// Stratified k-fold assignment of records to folds.
struct FoldPlan {
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> assignments;  // record index -> fold index

  std::vector<std::size_t> test_indices(std::size_t fold) const;
  std::vector<std::size_t> train_indices(std::size_t fold) const;
};

// Classes are visited in order of first appearance, so renaming labels does not
// change the plan. Within a class, members are shuffled and dealt round-robin
// starting at fold 0; shuffling the records keeps every fold's label counts.
FoldPlan make_folds(std::span<const std::string> labels, std::size_t k, std::uint64_t seed);
FoldPlan make_folds(const LabeledDataset& dataset, std::size_t k, std::uint64_t seed);

}  // namespace gafds
