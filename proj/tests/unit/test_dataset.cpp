#include <gtest/gtest.h>

#include <cmath>

#include "gafds/common.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "gafds/dataset.hpp"
#include "gafds/spectrum.hpp"

using namespace gafds;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("gafds_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream f(p, std::ios::binary);
  f << s;
}

LabeledDataset two_class(std::size_t a, std::size_t e) {
  LabeledDataset ds;
  for (std::size_t i = 0; i < a; ++i) ds.add({"A" + std::to_string(i), "A", TimeSeries({0.0, 1.0, 2.0}, 1.0)});
  for (std::size_t i = 0; i < e; ++i) ds.add({"E" + std::to_string(i), "E", TimeSeries({0.0, 1.0, 2.0}, 1.0)});
  return ds;
}

}  // namespace

TEST(TimeSeries, RejectsBadInput) {
  EXPECT_THROW(TimeSeries({1.0}, 1.0), Error);
  EXPECT_THROW(TimeSeries({1.0, 2.0}, 0.0), Error);
  EXPECT_THROW(TimeSeries({1.0, std::nan("")}, 1.0), Error);
}

TEST(BonnLoader, ReadsSortedFilesAtDefaultRate) {
  const auto dir = scratch_dir("bonn_ok");
  write_text(dir / "Z002.txt", "4\n5\n6\n");
  write_text(dir / "Z001.txt", "1\n-2\n3.5\n\n");
  const auto ds = load_bonn_directory(dir, "A");
  ASSERT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds.records()[0].id, "Z001");
  EXPECT_EQ(ds.records()[0].label, "A");
  EXPECT_DOUBLE_EQ(ds.records()[0].series.sample_rate(), 173.61);
  const std::vector<double> want{1.0, -2.0, 3.5};
  EXPECT_TRUE(std::equal(want.begin(), want.end(), ds.records()[0].series.samples().begin()));
}

TEST(BonnLoader, EmptyDirectoryIsNoRecords) {
  const auto dir = scratch_dir("bonn_empty");
  try {
    load_bonn_directory(dir, "A");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("no records"), std::string::npos);
  }
}

TEST(BonnLoader, BadLineReportsLineNumber) {
  const auto dir = scratch_dir("bonn_bad");
  write_text(dir / "f.txt", "1\n2\nx\n");
  try {
    load_bonn_directory(dir, "A");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::parse);
    EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
  }
}

TEST(BonnLoader, MissingDirectoryAndEmptyFile) {
  EXPECT_THROW(load_bonn_directory("/nonexistent/gafds", "A"), Error);
  const auto dir = scratch_dir("bonn_emptyfile");
  write_text(dir / "f.txt", "");
  EXPECT_THROW(load_bonn_directory(dir, "A"), Error);
}

TEST(BonnLoader, ValuesRoundTripThroughCsv) {
  const auto dir = scratch_dir("bonn_rt");
  write_text(dir / "a.txt", "12\n-7\n0.125\n1e3\n");
  write_text(dir / "b.txt", "3\n4\n");
  const auto ds = load_bonn_directory(dir, "E");
  std::stringstream ss;
  write_dataset_csv(ds, ss);
  const auto back = read_dataset_csv(ss);
  ASSERT_EQ(back.size(), ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    EXPECT_EQ(back.records()[i].id, ds.records()[i].id);
    EXPECT_EQ(back.records()[i].label, ds.records()[i].label);
    EXPECT_DOUBLE_EQ(back.records()[i].series.sample_rate(), 173.61);
    const auto a = ds.records()[i].series.samples();
    const auto b = back.records()[i].series.samples();
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(a[k], b[k]);
  }
}

TEST(Synthesize, SingleTonePeaksAtNearestBin) {
  const std::vector<Tone> tones{{10.0, 1.0}};
  const auto x = synthesize_class(tones, 0.0, 1024, 128.0, 3);
  const auto y = fft_magnitude(x);
  const auto m = y.magnitudes();
  const auto peak = std::max_element(m.begin() + 1, m.end()) - m.begin();
  EXPECT_EQ(peak, 80);
}

TEST(Synthesize, PeakAtNearestBinForOffGridTones) {
  for (double hz : {3.3, 17.81, 41.0, 60.2}) {
    const std::vector<Tone> tones{{hz, 2.0}};
    const auto x = synthesize_class(tones, 0.0, 1000, 128.0, 11);
    const auto y = fft_magnitude(x);
    const auto m = y.magnitudes();
    const auto peak = std::max_element(m.begin(), m.end()) - m.begin();
    EXPECT_EQ(peak, std::lround(hz / y.bin_hz())) << hz;
  }
}

TEST(Synthesize, NoTonesIsNoise) {
  const auto x = synthesize_class({}, 1.0, 4096, 128.0, 5);
  double s = 0.0, s2 = 0.0;
  for (double v : x.samples()) {
    s += v;
    s2 += v * v;
  }
  EXPECT_NEAR(s / 4096.0, 0.0, 0.06);
  EXPECT_NEAR(s2 / 4096.0, 1.0, 0.08);
}

TEST(Synthesize, SeedDeterminesSeries) {
  const std::vector<Tone> tones{{5.0, 1.0}};
  const auto a = synthesize_class(tones, 0.5, 256, 64.0, 9);
  const auto b = synthesize_class(tones, 0.5, 256, 64.0, 9);
  const auto c = synthesize_class(tones, 0.5, 256, 64.0, 10);
  EXPECT_TRUE(std::equal(a.samples().begin(), a.samples().end(), b.samples().begin()));
  EXPECT_FALSE(std::equal(a.samples().begin(), a.samples().end(), c.samples().begin()));
}

TEST(Synthesize, ToneAtNyquistRejected) {
  const std::vector<Tone> tones{{64.0, 1.0}};
  EXPECT_THROW(synthesize_class(tones, 0.0, 256, 128.0, 1), Error);
}

TEST(Synthesize, DatasetNamesAndCounts) {
  SyntheticSpec spec;
  spec.classes = {{"A", {{10.0, 1.0}}, 0.5, 3}, {"B", {{30.0, 1.0}}, 0.5, 2}};
  const auto ds = synthesize_dataset(spec, 1);
  ASSERT_EQ(ds.size(), 5u);
  EXPECT_EQ(ds.records()[0].id, "A_000");
  EXPECT_EQ(ds.records()[4].id, "B_001");
  EXPECT_EQ(ds.class_labels(), (std::vector<std::string>{"A", "B"}));
}

TEST(Groups, MergeAndDrop) {
  LabeledDataset ds;
  for (const char* l : {"A", "C", "D", "E"}) ds.add({std::string(l) + "1", l, TimeSeries({1.0, 2.0}, 1.0)});
  const auto g = apply_groups(ds, {{"CD", {"C", "D"}}, {"E", {"E"}}});
  ASSERT_EQ(g.size(), 3u);
  EXPECT_EQ(g.class_labels(), (std::vector<std::string>{"CD", "E"}));
  EXPECT_EQ(g.records()[0].id, "C1");
  EXPECT_THROW(apply_groups(ds, {{"X", {"C"}}, {"Y", {"C"}}}), Error);
  EXPECT_THROW(apply_groups(ds, {{"X", {"Q"}}}), Error);
  EXPECT_THROW(apply_groups(ds, {{"X", {}}}), Error);
}

TEST(Folds, StratifiedFiveFold) {
  const auto ds = two_class(100, 100);
  const auto plan = make_folds(ds, 5, 17);
  for (std::size_t f = 0; f < 5; ++f) {
    std::map<std::string, int> count;
    for (auto i : plan.test_indices(f)) ++count[ds.records()[i].label];
    EXPECT_EQ(count["A"], 20);
    EXPECT_EQ(count["E"], 20);
  }
}

TEST(Folds, OnePerFold) {
  const auto ds = two_class(10, 10);
  const auto plan = make_folds(ds, 10, 3);
  for (std::size_t f = 0; f < 10; ++f) EXPECT_EQ(plan.test_indices(f).size(), 2u);
}

TEST(Folds, TooFewMembers) {
  EXPECT_THROW(make_folds(two_class(3, 10), 5, 1), Error);
  EXPECT_THROW(make_folds(two_class(10, 10), 1, 1), Error);
}

// Property: partition, stratification within 1, determinism, for many shapes.
TEST(Folds, PartitionProperty) {
  for (std::size_t a : {5u, 7u, 13u}) {
    for (std::size_t e : {5u, 9u, 20u}) {
      for (std::size_t k : {2u, 3u, 5u}) {
        const auto ds = two_class(a, e);
        const auto plan = make_folds(ds, k, a * 100 + e);
        ASSERT_EQ(plan.assignments.size(), ds.size());
        std::vector<int> seen(ds.size(), 0);
        for (std::size_t f = 0; f < k; ++f) {
          const auto te = plan.test_indices(f);
          const auto tr = plan.train_indices(f);
          EXPECT_EQ(te.size() + tr.size(), ds.size());
          for (auto i : te) ++seen[i];
        }
        for (int s : seen) EXPECT_EQ(s, 1);
        for (const char* label : {"A", "E"}) {
          std::vector<int> per(k, 0);
          for (std::size_t i = 0; i < ds.size(); ++i) {
            if (ds.records()[i].label == label) ++per[plan.assignments[i]];
          }
          EXPECT_LE(*std::max_element(per.begin(), per.end()) - *std::min_element(per.begin(), per.end()), 1);
        }
        EXPECT_EQ(make_folds(ds, k, a * 100 + e).assignments, plan.assignments);
      }
    }
  }
}

TEST(Folds, RenamingLabelsKeepsPlan) {
  std::vector<std::string> l1{"A", "E", "A", "E", "A", "E", "A", "E"};
  std::vector<std::string> l2{"z", "b", "z", "b", "z", "b", "z", "b"};
  EXPECT_EQ(make_folds(l1, 2, 5).assignments, make_folds(l2, 2, 5).assignments);
}
