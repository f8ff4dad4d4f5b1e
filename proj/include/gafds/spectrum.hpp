#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gafds/dataset.hpp"

namespace gafds {

enum class SpectrumSource { fourier, hilbert_envelope };

std::string to_string(SpectrumSource s);
SpectrumSource spectrum_source_from_string(const std::string& s);

// One-sided magnitude spectrum, DC..Nyquist, of a length-n real signal.
// m = n/2 + 1 bins, bin k sits at k * bin_hz with bin_hz = rate / n.
class Spectrum {
 public:
  Spectrum(std::vector<double> magnitudes, double bin_hz, std::size_t signal_length, SpectrumSource source);

  std::span<const double> magnitudes() const { return magnitudes_; }
  std::size_t size() const { return magnitudes_.size(); }
  double bin_hz() const { return bin_hz_; }
  std::size_t signal_length() const { return signal_length_; }
  SpectrumSource source() const { return source_; }
  double nyquist_hz() const { return bin_hz_ * static_cast<double>(signal_length_) / 2.0; }

 private:
  std::vector<double> magnitudes_;
  double bin_hz_;
  std::size_t signal_length_;
  SpectrumSource source_;
};

// Unnormalised |DFT| with a rectangular window; any n >= 2.
Spectrum fft_magnitude(const TimeSeries& x);
// |DFT| of the analytic-signal envelope |x + i*H[x]|. Needs n >= 4.
Spectrum hilbert_envelope_spectrum(const TimeSeries& x);
Spectrum compute_spectrum(const TimeSeries& x, SpectrumSource source);

// Envelope |x + i*H[x]| computed with the FFT method.
std::vector<double> analytic_envelope(std::span<const double> x);

struct FrequencyInterval {
  double lo_hz = 0.0;
  double hi_hz = 0.0;
};

struct BinRange {
  std::size_t first = 0;
  std::size_t last = 0;  // inclusive
};

// Maps an interval to bins by rounding to the nearest bin (hi clamped to
// Nyquist, indices clamped to [0, m-1]). nullopt when the mapped interval is
// empty or reversed (first >= last) or lo is negative.
std::optional<BinRange> interval_bins(const Spectrum& y, FrequencyInterval iv);

// Mean magnitude over the mapped bins, inclusive. Throws on an invalid interval.
double interval_feature(const Spectrum& y, FrequencyInterval iv);

// Prefix sums over magnitudes for O(1) interval means.
class IntervalMeans {
 public:
  explicit IntervalMeans(const Spectrum& y);
  double mean(BinRange r) const {
    return (prefix_[r.last + 1] - prefix_[r.first]) / static_cast<double>(r.last - r.first + 1);
  }

 private:
  std::vector<double> prefix_;
};

// `bin,hz,magnitude`
void write_spectrum_csv(const Spectrum& y, std::ostream& out);

}  // namespace gafds
