#include <gtest/gtest.h>

#include <cmath>

#include "gafds/common.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <sstream>

#include "gafds/spectrum.hpp"
#include "oracles.hpp"

using namespace gafds;

namespace {

std::vector<double> naive_dft_magnitude(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<double> out(n / 2 + 1);
  for (std::size_t k = 0; k <= n / 2; ++k) {
    std::complex<double> s = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      s += x[t] * std::polar(1.0, -2.0 * M_PI * static_cast<double>(k * t) / static_cast<double>(n));
    }
    out[k] = std::abs(s);
  }
  return out;
}

Spectrum make_spectrum(std::vector<double> m, double bin_hz = 1.0) {
  const std::size_t n = 2 * (m.size() - 1);
  return Spectrum(std::move(m), bin_hz, n, SpectrumSource::fourier);
}

}  // namespace

TEST(Fft, ConstantSeriesIsDcOnly) {
  const TimeSeries x(std::vector<double>(100, 2.5), 10.0);
  const auto y = fft_magnitude(x);
  ASSERT_EQ(y.size(), 51u);
  EXPECT_NEAR(y.magnitudes()[0], 250.0, 1e-9);
  for (std::size_t k = 1; k < y.size(); ++k) EXPECT_NEAR(y.magnitudes()[k], 0.0, 1e-9);
}

TEST(Fft, SinusoidPeakBin) {
  const TimeSeries x(oracle::sine(1024, 10.0, 128.0), 128.0);
  const auto y = fft_magnitude(x);
  const auto m = y.magnitudes();
  EXPECT_EQ(std::max_element(m.begin(), m.end()) - m.begin(), 80);
  EXPECT_DOUBLE_EQ(y.bin_hz(), 0.125);
  EXPECT_DOUBLE_EQ(y.nyquist_hz(), 64.0);
}

TEST(Fft, OddLengthShapeAndReferenceDft) {
  const auto noise = oracle::white_noise(4097, 1);
  const auto y = fft_magnitude(TimeSeries(noise, 173.61));
  EXPECT_EQ(y.size(), 2049u);
  EXPECT_DOUBLE_EQ(y.bin_hz(), 173.61 / 4097.0);

  for (std::size_t n : {64u, 63u}) {
    std::vector<double> prefix(noise.begin(), noise.begin() + static_cast<long>(n));
    const auto ref = naive_dft_magnitude(prefix);
    const auto got = fft_magnitude(TimeSeries(prefix, 173.61));
    ASSERT_EQ(got.size(), ref.size());
    for (std::size_t k = 0; k < ref.size(); ++k) EXPECT_NEAR(got.magnitudes()[k], ref[k], 1e-9);
  }
}

TEST(Fft, RejectsNonFinite) {
  // TimeSeries already refuses NaN; the raw envelope path checks too.
  std::vector<double> x{1.0, 2.0, std::numeric_limits<double>::infinity(), 0.0};
  EXPECT_THROW(analytic_envelope(x), Error);
}

TEST(Fft, PureToneEnergyConcentrated) {
  for (double hz : {10.0, 13.37, 29.9}) {
    const auto y = fft_magnitude(TimeSeries(oracle::sine(1024, hz, 128.0), 128.0));
    const auto m = y.magnitudes();
    const auto peak = static_cast<std::size_t>(std::max_element(m.begin() + 1, m.end()) - m.begin());
    double total = 0.0, near = 0.0;
    for (std::size_t k = 1; k < m.size(); ++k) {
      total += m[k] * m[k];
      if (k + 1 >= peak && k <= peak + 1) near += m[k] * m[k];
    }
    // Off-grid tones leak; the 3-bin share is still dominant.
    if (std::abs(hz * 8.0 - std::round(hz * 8.0)) < 1e-9) {
      EXPECT_GE(near / total, 0.95) << hz;
    }
    EXPECT_GE(near / total, 0.80) << hz;
  }
}

TEST(Fft, Deterministic) {
  const TimeSeries x(oracle::white_noise(777, 2), 50.0);
  const auto a = fft_magnitude(x);
  const auto b = fft_magnitude(x);
  EXPECT_TRUE(std::equal(a.magnitudes().begin(), a.magnitudes().end(), b.magnitudes().begin()));
}

TEST(Hilbert, AmCarrierEnvelopePeak) {
  const double rate = 1000.0;
  const std::size_t n = 2000;
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / rate;
    x[i] = (1.0 + 0.5 * std::cos(2 * M_PI * 5.0 * t)) * std::cos(2 * M_PI * 100.0 * t);
  }
  const auto y = hilbert_envelope_spectrum(TimeSeries(x, rate));
  EXPECT_EQ(y.source(), SpectrumSource::hilbert_envelope);
  const auto m = y.magnitudes();
  const auto peak = std::max_element(m.begin() + 1, m.end()) - m.begin();

  // Oracle: full-wave rectify, moving-average low-pass over one carrier period.
  std::vector<double> rect(n);
  const std::size_t w = 10;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    std::size_t c = 0;
    for (std::size_t j = (i >= w / 2 ? i - w / 2 : 0); j < std::min(n, i + w / 2); ++j, ++c) s += std::abs(x[j]);
    rect[i] = s / static_cast<double>(c);
  }
  const auto ref = naive_dft_magnitude(rect);
  const auto ref_peak = std::max_element(ref.begin() + 1, ref.end()) - ref.begin();
  EXPECT_EQ(peak, ref_peak);
  EXPECT_NEAR(static_cast<double>(peak) * y.bin_hz(), 5.0, y.bin_hz());
}

TEST(Hilbert, ConstantSeries) {
  const auto env = analytic_envelope(std::vector<double>(64, 3.0));
  for (double v : env) EXPECT_NEAR(v, 3.0, 1e-12);
  const auto y = hilbert_envelope_spectrum(TimeSeries(std::vector<double>(64, 3.0), 1.0));
  EXPECT_NEAR(y.magnitudes()[0], 192.0, 1e-9);
  for (std::size_t k = 1; k < y.size(); ++k) EXPECT_NEAR(y.magnitudes()[k], 0.0, 1e-9);
}

TEST(Hilbert, SinusoidEnvelopeMatchesAnalyticSignal) {
  // 128 samples, whole number of cycles: the analytic signal of A sin(wt) is
  // -i A e^{iwt}, so the envelope is exactly A.
  const auto x = oracle::sine(128, 8.0, 128.0, 1.7, 0.3);
  const auto env = analytic_envelope(x);
  for (double v : env) EXPECT_NEAR(v, 1.7, 1e-10);
  const auto y = hilbert_envelope_spectrum(TimeSeries(x, 128.0));
  const auto m = y.magnitudes();
  for (std::size_t k = 1; k < m.size(); ++k) EXPECT_LT(m[k], 1e-6 * m[0]);
}

TEST(Hilbert, TooShort) { EXPECT_THROW(hilbert_envelope_spectrum(TimeSeries({1.0, 2.0, 3.0}, 1.0)), Error); }

TEST(Interval, WholeSpectrumMean) {
  const auto y = make_spectrum({2.0, 4.0, 6.0});
  EXPECT_DOUBLE_EQ(interval_feature(y, {0.0, 2.0}), 4.0);
}

TEST(Interval, AdjacentPair) {
  const auto y = make_spectrum({1.0, 3.0, 8.0, 5.0, 0.5});
  EXPECT_DOUBLE_EQ(interval_feature(y, {2.0, 3.0}), 6.5);
}

TEST(Interval, BinMappingRoundsAndClamps) {
  const auto y = make_spectrum({1, 2, 3, 4, 5}, 0.5);  // bins at 0, .5, 1, 1.5, 2 Hz; nyquist 2
  auto b = interval_bins(y, {0.3, 1.2});
  ASSERT_TRUE(b);
  EXPECT_EQ(b->first, 1u);
  EXPECT_EQ(b->last, 2u);
  b = interval_bins(y, {0.0, 50.0});
  ASSERT_TRUE(b);
  EXPECT_EQ(b->last, 4u);
  EXPECT_FALSE(interval_bins(y, {1.0, 1.1}));   // same bin
  EXPECT_FALSE(interval_bins(y, {1.5, 0.5}));   // reversed
  EXPECT_FALSE(interval_bins(y, {-0.5, 1.0}));  // negative lo
  EXPECT_THROW(interval_feature(y, {1.5, 0.5}), Error);
}

TEST(Interval, MatchesDirectSummation) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> m(128);
    for (auto& v : m) v = u(rng);
    const auto y = make_spectrum(m, 0.25);
    std::uniform_int_distribution<std::size_t> pick(0, 127);
    std::size_t i = pick(rng), j = pick(rng);
    if (i == j) continue;
    if (i > j) std::swap(i, j);
    double s = 0.0;
    for (std::size_t k = i; k <= j; ++k) s += m[k];
    const double want = s / static_cast<double>(j - i + 1);
    EXPECT_EQ(interval_feature(y, {0.25 * static_cast<double>(i), 0.25 * static_cast<double>(j)}), want);
  }
}

TEST(Interval, ScalesWithSpectrum) {
  std::vector<double> m{1, 4, 9, 16, 25, 36};
  std::vector<double> m3;
  for (double v : m) m3.push_back(3.0 * v);
  const auto a = make_spectrum(m), b = make_spectrum(m3);
  EXPECT_NEAR(interval_feature(b, {1, 4}), 3.0 * interval_feature(a, {1, 4}), 1e-12);
}

TEST(Interval, PrefixMeansAgree) {
  const auto y = make_spectrum({3, 1, 4, 1, 5, 9, 2, 6});
  const IntervalMeans pm(y);
  EXPECT_NEAR(pm.mean({2, 5}), interval_feature(y, {2, 5}), 1e-12);
}

TEST(SpectrumCsv, Layout) {
  const auto y = make_spectrum({1.0, 0.5}, 2.0);
  std::ostringstream os;
  write_spectrum_csv(y, os);
  EXPECT_EQ(os.str(), "bin,hz,magnitude\n0,0,1\n1,2,0.5\n");
}
