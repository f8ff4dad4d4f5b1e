#include "gafds/spectrum.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <ostream>

#include "gafds/common.hpp"

namespace gafds {

namespace {

// The FFTW planner is not thread-safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwDeleter {
  void operator()(void* p) const { fftw_free(p); }
};

template <typename T>
std::unique_ptr<T[], FftwDeleter> fftw_buffer(std::size_t n) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * n));
  if (p == nullptr) throw std::bad_alloc();
  return std::unique_ptr<T[], FftwDeleter>(p);
}

class Plan {
 public:
  explicit Plan(fftw_plan p) : plan_(p) {
    if (plan_ == nullptr) fail(ErrorKind::numeric, "FFTW failed to create a plan");
  }
  Plan(const Plan&) = delete;
  Plan& operator=(const Plan&) = delete;
  ~Plan() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_);
  }
  void execute() const { fftw_execute(plan_); }

 private:
  fftw_plan plan_;
};

std::vector<double> real_fft_magnitude(std::span<const double> x) {
  const std::size_t n = x.size();
  const std::size_t m = n / 2 + 1;
  auto in = fftw_buffer<double>(n);
  auto out = fftw_buffer<fftw_complex>(m);
  std::unique_ptr<Plan> plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = std::make_unique<Plan>(
        fftw_plan_dft_r2c_1d(static_cast<int>(n), in.get(), out.get(), FFTW_ESTIMATE));
  }
  for (std::size_t i = 0; i < n; ++i) in[i] = x[i];
  plan->execute();
  std::vector<double> mag(m);
  for (std::size_t k = 0; k < m; ++k) mag[k] = std::hypot(out[k][0], out[k][1]);
  return mag;
}

void check_finite(std::span<const double> x) {
  for (double v : x) {
    if (!std::isfinite(v)) fail(ErrorKind::numeric, "spectrum input contains a non-finite value");
  }
}

}  // namespace

std::string to_string(SpectrumSource s) {
  return s == SpectrumSource::fourier ? "fourier" : "hilbert_envelope";
}

SpectrumSource spectrum_source_from_string(const std::string& s) {
  if (s == "fourier") return SpectrumSource::fourier;
  if (s == "hilbert_envelope") return SpectrumSource::hilbert_envelope;
  fail(ErrorKind::invalid_argument, "unknown spectrum source '" + s + "' (fourier | hilbert_envelope)");
}

Spectrum::Spectrum(std::vector<double> magnitudes, double bin_hz, std::size_t signal_length,
                   SpectrumSource source)
    : magnitudes_(std::move(magnitudes)), bin_hz_(bin_hz), signal_length_(signal_length), source_(source) {
  if (magnitudes_.size() < 2) fail(ErrorKind::invalid_argument, "spectrum needs at least 2 bins");
  if (!(bin_hz_ > 0.0)) fail(ErrorKind::invalid_argument, "bin width must be positive");
  for (double v : magnitudes_) {
    if (!(v >= 0.0) || !std::isfinite(v)) fail(ErrorKind::numeric, "spectrum magnitude is negative or non-finite");
  }
}

Spectrum fft_magnitude(const TimeSeries& x) {
  check_finite(x.samples());
  const double bin_hz = x.sample_rate() / static_cast<double>(x.size());
  return Spectrum(real_fft_magnitude(x.samples()), bin_hz, x.size(), SpectrumSource::fourier);
}

std::vector<double> analytic_envelope(std::span<const double> x) {
  check_finite(x);
  const std::size_t n = x.size();
  auto buf = fftw_buffer<fftw_complex>(n);
  std::unique_ptr<Plan> forward;
  std::unique_ptr<Plan> backward;
  {
    std::lock_guard lock(planner_mutex());
    forward = std::make_unique<Plan>(
        fftw_plan_dft_1d(static_cast<int>(n), buf.get(), buf.get(), FFTW_FORWARD, FFTW_ESTIMATE));
    backward = std::make_unique<Plan>(
        fftw_plan_dft_1d(static_cast<int>(n), buf.get(), buf.get(), FFTW_BACKWARD, FFTW_ESTIMATE));
  }
  for (std::size_t i = 0; i < n; ++i) {
    buf[i][0] = x[i];
    buf[i][1] = 0.0;
  }
  forward->execute();
  // Analytic signal: keep DC (and Nyquist for even n), double positive
  // frequencies, zero negative frequencies.
  const std::size_t half = n / 2;
  for (std::size_t k = 1; k < n; ++k) {
    double h = 0.0;
    if (n % 2 == 0) {
      h = k < half ? 2.0 : (k == half ? 1.0 : 0.0);
    } else {
      h = k <= half ? 2.0 : 0.0;
    }
    buf[k][0] *= h;
    buf[k][1] *= h;
  }
  backward->execute();
  std::vector<double> env(n);
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) env[i] = std::hypot(buf[i][0], buf[i][1]) * scale;
  return env;
}

Spectrum hilbert_envelope_spectrum(const TimeSeries& x) {
  if (x.size() < 4) fail(ErrorKind::invalid_argument, "Hilbert envelope needs at least 4 samples");
  const auto env = analytic_envelope(x.samples());
  const double bin_hz = x.sample_rate() / static_cast<double>(x.size());
  return Spectrum(real_fft_magnitude(env), bin_hz, x.size(), SpectrumSource::hilbert_envelope);
}

Spectrum compute_spectrum(const TimeSeries& x, SpectrumSource source) {
  return source == SpectrumSource::fourier ? fft_magnitude(x) : hilbert_envelope_spectrum(x);
}

std::optional<BinRange> interval_bins(const Spectrum& y, FrequencyInterval iv) {
  if (!(iv.lo_hz >= 0.0) || !std::isfinite(iv.hi_hz)) return std::nullopt;
  const double last_bin = static_cast<double>(y.size() - 1);
  const double hi = std::min(iv.hi_hz, y.nyquist_hz());
  const double i = std::clamp(std::round(iv.lo_hz / y.bin_hz()), 0.0, last_bin);
  const double j = std::clamp(std::round(hi / y.bin_hz()), 0.0, last_bin);
  if (i >= j) return std::nullopt;
  return BinRange{static_cast<std::size_t>(i), static_cast<std::size_t>(j)};
}

double interval_feature(const Spectrum& y, FrequencyInterval iv) {
  const auto bins = interval_bins(y, iv);
  if (!bins) {
    fail(ErrorKind::invalid_argument, "invalid frequency interval [" + format_double(iv.lo_hz) + ", " +
                                          format_double(iv.hi_hz) + "] Hz");
  }
  const auto mags = y.magnitudes();
  double sum = 0.0;
  for (std::size_t k = bins->first; k <= bins->last; ++k) sum += mags[k];
  return sum / static_cast<double>(bins->last - bins->first + 1);
}

IntervalMeans::IntervalMeans(const Spectrum& y) : prefix_(y.size() + 1, 0.0) {
  const auto mags = y.magnitudes();
  for (std::size_t k = 0; k < mags.size(); ++k) prefix_[k + 1] = prefix_[k] + mags[k];
}

void write_spectrum_csv(const Spectrum& y, std::ostream& out) {
  out << "bin,hz,magnitude\n";
  const auto mags = y.magnitudes();
  for (std::size_t k = 0; k < mags.size(); ++k) {
    out << k << ',' << format_double(static_cast<double>(k) * y.bin_hz()) << ',' << format_double(mags[k])
        << '\n';
  }
}

}  // namespace gafds
