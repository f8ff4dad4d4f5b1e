#include "gafds/nonlinear.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>

#include "gafds/common.hpp"
#include "gafds/spectrum.hpp"

namespace gafds {

namespace {

// Per-segment variance of the order-1 detrended profile segment [start, start + s).
double detrended_variance(std::span<const double> profile, std::size_t start, std::size_t s) {
  const double sd = static_cast<double>(s);
  const double t_mean = (sd - 1.0) / 2.0;
  double y_mean = 0.0;
  for (std::size_t t = 0; t < s; ++t) y_mean += profile[start + t];
  y_mean /= sd;
  double sty = 0.0;
  double stt = 0.0;
  for (std::size_t t = 0; t < s; ++t) {
    const double dt = static_cast<double>(t) - t_mean;
    sty += dt * (profile[start + t] - y_mean);
    stt += dt * dt;
  }
  const double b = sty / stt;
  double ss = 0.0;
  for (std::size_t t = 0; t < s; ++t) {
    const double r = profile[start + t] - y_mean - b * (static_cast<double>(t) - t_mean);
    ss += r * r;
  }
  return ss / sd;
}

std::vector<double> profile_of(std::span<const double> x) {
  const double mu = mean(x);
  std::vector<double> y(x.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    acc += x[i] - mu;
    y[i] = acc;
  }
  return y;
}

// Segment variances at scale s: floor(n/s) segments from the start and as many
// from the end, so the tail is not discarded.
std::vector<double> segment_variances(std::span<const double> profile, std::size_t s) {
  const std::size_t n = profile.size();
  const std::size_t ns = n / s;
  std::vector<double> out;
  out.reserve(2 * ns);
  for (std::size_t v = 0; v < ns; ++v) out.push_back(detrended_variance(profile, v * s, s));
  for (std::size_t v = 0; v < ns; ++v) out.push_back(detrended_variance(profile, n - (v + 1) * s, s));
  return out;
}

void require_finite(std::span<const double> x, const char* what) {
  for (double v : x) {
    if (!std::isfinite(v)) fail(ErrorKind::numeric, std::string(what) + ": input contains a non-finite value");
  }
}

double checked(double v, const char* what) {
  if (!std::isfinite(v)) fail(ErrorKind::numeric, std::string(what) + " is not finite");
  return v;
}

}  // namespace

double sample_entropy(std::span<const double> x, const SampEnParams& p) {
  if (p.sm < 1) fail(ErrorKind::invalid_argument, "sample entropy: sm must be >= 1");
  if (!(p.chi > 0.0)) fail(ErrorKind::invalid_argument, "sample entropy: chi must be positive");
  if (p.sn > x.size()) fail(ErrorKind::invalid_argument, "sample entropy: sn exceeds the series length");
  const auto data = x.first(p.sn == 0 ? x.size() : p.sn);
  const std::size_t n = data.size();
  const std::size_t m = p.sm;
  if (n < m + 2) fail(ErrorKind::invalid_argument, "sample entropy: series shorter than sm + 2");
  require_finite(data, "sample entropy");

  const double sd = stddev(data);
  if (sd == 0.0) return 0.0;
  const double r = p.chi * sd;

  // Both counts use the same N - m templates.
  const std::size_t templates = n - m;
  std::uint64_t b = 0;
  std::uint64_t a = 0;
  for (std::size_t i = 0; i + 1 < templates; ++i) {
    for (std::size_t j = i + 1; j < templates; ++j) {
      std::size_t k = 0;
      while (k < m && std::abs(data[i + k] - data[j + k]) <= r) ++k;
      if (k < m) continue;
      ++b;
      if (std::abs(data[i + m] - data[j + m]) <= r) ++a;
    }
  }
  if (b == 0) fail(ErrorKind::numeric, "sample entropy: insufficient matches (no template pairs at length sm)");
  if (a == 0) fail(ErrorKind::numeric, "sample entropy: insufficient matches (no template pairs at length sm + 1)");
  return -std::log(static_cast<double>(a) / static_cast<double>(b));
}

double hurst_exponent(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 64) fail(ErrorKind::invalid_argument, "hurst exponent needs at least 64 samples");
  require_finite(x, "hurst exponent");
  if (stddev(x) == 0.0) fail(ErrorKind::numeric, "hurst exponent: zero-variance series");

  std::vector<double> lw;
  std::vector<double> lrs;
  for (std::size_t w = 8; w <= n / 4; w *= 2) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t start = 0; start + w <= n; start += w) {
      const auto seg = x.subspan(start, w);
      const double mu = mean(seg);
      double z = 0.0;
      double zmax = 0.0;
      double zmin = 0.0;
      double ss = 0.0;
      for (double v : seg) {
        z += v - mu;
        zmax = std::max(zmax, z);
        zmin = std::min(zmin, z);
        ss += (v - mu) * (v - mu);
      }
      const double s = std::sqrt(ss / static_cast<double>(w));
      if (s > 0.0) {
        sum += (zmax - zmin) / s;
        ++count;
      }
    }
    if (count > 0 && sum > 0.0) {
      lw.push_back(std::log(static_cast<double>(w)));
      lrs.push_back(std::log(sum / static_cast<double>(count)));
    }
  }
  if (lw.size() < 2) fail(ErrorKind::numeric, "hurst exponent: fewer than two usable window sizes");
  return checked(fit_line(lw, lrs).slope, "hurst exponent");
}

std::size_t autocorrelation_lag(std::span<const double> x) {
  const std::size_t n = x.size();
  const double mu = mean(x);
  double c0 = 0.0;
  for (double v : x) c0 += (v - mu) * (v - mu);
  if (c0 == 0.0) return 1;
  // An estimate inside the 95% band of an uncorrelated series counts as zero;
  // sampling noise alone otherwise delays the crossing by several lags.
  const double band = 1.96 / std::sqrt(static_cast<double>(n));
  for (std::size_t tau = 1; tau < n / 2; ++tau) {
    double c = 0.0;
    for (std::size_t i = 0; i + tau < n; ++i) c += (x[i] - mu) * (x[i + tau] - mu);
    if (c / c0 <= band) return tau;
  }
  return 1;
}

std::size_t mean_period(std::span<const double> x) {
  const TimeSeries ts(std::vector<double>(x.begin(), x.end()), 1.0);
  const auto spec = fft_magnitude(ts);
  const auto mags = spec.magnitudes();
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 1; k < mags.size(); ++k) {
    const double pw = mags[k] * mags[k];
    num += static_cast<double>(k) * pw;
    den += pw;
  }
  if (!(den > 0.0) || !(num > 0.0)) return 1;
  const double period = static_cast<double>(x.size()) * den / num;
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(period)));
}

double largest_lyapunov(std::span<const double> x, const LyapunovParams& p) {
  const std::size_t n = x.size();
  if (n < 500) fail(ErrorKind::invalid_argument, "largest Lyapunov exponent needs at least 500 samples");
  if (p.dimension < 1) fail(ErrorKind::invalid_argument, "embedding dimension must be >= 1");
  require_finite(x, "largest Lyapunov exponent");
  const double sd = stddev(x);
  if (sd == 0.0) fail(ErrorKind::numeric, "largest Lyapunov exponent: zero-variance series");

  const std::size_t lag = p.lag > 0 ? p.lag : autocorrelation_lag(x);
  const std::size_t span_len = (p.dimension - 1) * lag;
  if (span_len + 2 >= n) fail(ErrorKind::invalid_argument, "series too short for the delay embedding");
  const std::size_t m = n - span_len;  // embedded points
  std::size_t w = p.theiler > 0 ? p.theiler : mean_period(x);
  w = std::min(w, m / 4);
  if (m < 2 * w + 10) fail(ErrorKind::invalid_argument, "series too short for the delay embedding");

  const std::size_t dim = p.dimension;
  auto dist2 = [&](std::size_t i, std::size_t j, double bound) {
    double s = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
      const double d = x[i + k * lag] - x[j + k * lag];
      s += d * d;
      if (s >= bound) break;
    }
    return s;
  };
  const double eps2 = (1e-10 * sd) * (1e-10 * sd);

  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i + 1 < m; ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t nn = m;
    for (std::size_t j = 0; j + 1 < m; ++j) {
      if ((i > j ? i - j : j - i) <= w) continue;
      const double d = dist2(i, j, best);
      if (d < best && d > eps2) {
        best = d;
        nn = j;
      }
    }
    if (nn == m) continue;
    const double d1 = dist2(i + 1, nn + 1, std::numeric_limits<double>::infinity());
    if (!(d1 > eps2)) continue;
    sum += 0.5 * std::log(d1 / best);
    ++count;
  }
  if (count == 0) fail(ErrorKind::numeric, "largest Lyapunov exponent: no usable neighbour pairs");
  return checked(sum / static_cast<double>(count), "largest Lyapunov exponent");
}

std::vector<std::size_t> fluctuation_scales(std::size_t n) {
  const double lo = 16.0;
  const double hi = static_cast<double>(n / 8);
  if (hi < lo) fail(ErrorKind::invalid_argument, "series too short for fluctuation analysis (need n >= 128)");
  std::vector<std::size_t> out;
  constexpr int kScales = 16;
  for (int i = 0; i < kScales; ++i) {
    const double t = static_cast<double>(i) / (kScales - 1);
    const auto s = static_cast<std::size_t>(std::lround(std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo)))));
    if (out.empty() || out.back() != s) out.push_back(s);
  }
  return out;
}

double dfa(std::span<const double> x) {
  if (x.size() < 256) fail(ErrorKind::invalid_argument, "DFA needs at least 256 samples");
  require_finite(x, "DFA");
  const auto profile = profile_of(x);
  std::vector<double> ls;
  std::vector<double> lf;
  for (auto s : fluctuation_scales(x.size())) {
    const auto v = segment_variances(profile, s);
    const double f2 = mean(v);
    if (!(f2 > 0.0)) fail(ErrorKind::numeric, "DFA: zero fluctuation at scale " + std::to_string(s));
    ls.push_back(std::log(static_cast<double>(s)));
    lf.push_back(0.5 * std::log(f2));
  }
  if (ls.size() < 2) fail(ErrorKind::numeric, "DFA: fewer than two scales");
  return checked(fit_line(ls, lf).slope, "DFA exponent");
}

MultifractalSpectrum mfdfa(std::span<const double> x) {
  if (x.size() < 256) fail(ErrorKind::invalid_argument, "MFDFA needs at least 256 samples");
  require_finite(x, "MFDFA");
  MultifractalSpectrum out;
  for (int q = -8; q <= 8; q += 2) out.q_orders.push_back(q);
  const std::size_t nq = out.q_orders.size();

  const auto profile = profile_of(x);
  const auto scales = fluctuation_scales(x.size());
  std::vector<double> ls;
  std::vector<std::vector<double>> lfq(nq);
  for (auto s : scales) {
    auto v = segment_variances(profile, s);
    // Perfectly linear segments carry no fluctuation and would send the
    // negative moments to infinity.
    std::erase_if(v, [](double e) { return !(e > 0.0); });
    if (v.empty()) fail(ErrorKind::numeric, "MFDFA: zero fluctuation at scale " + std::to_string(s));
    std::vector<double> logv(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) logv[i] = std::log(v[i]);
    ls.push_back(std::log(static_cast<double>(s)));
    for (std::size_t iq = 0; iq < nq; ++iq) {
      const double q = out.q_orders[iq];
      if (q == 0.0) {
        lfq[iq].push_back(0.5 * mean(logv));
        continue;
      }
      // log F_q = (1/q) log mean exp((q/2) log v), evaluated stably.
      double mx = -std::numeric_limits<double>::infinity();
      for (double lv : logv) mx = std::max(mx, 0.5 * q * lv);
      double acc = 0.0;
      for (double lv : logv) acc += std::exp(0.5 * q * lv - mx);
      lfq[iq].push_back((mx + std::log(acc / static_cast<double>(logv.size()))) / q);
    }
  }
  if (ls.size() < 2) fail(ErrorKind::numeric, "MFDFA: fewer than two scales");

  for (std::size_t iq = 0; iq < nq; ++iq) {
    const double h = fit_line(ls, lfq[iq]).slope;
    out.h.push_back(h);
    out.tau.push_back(out.q_orders[iq] * h - 1.0);
  }
  for (std::size_t iq = 0; iq < nq; ++iq) {
    const std::size_t a = iq == 0 ? 0 : iq - 1;
    const std::size_t b = iq + 1 == nq ? iq : iq + 1;
    const double alpha = (out.tau[b] - out.tau[a]) / (out.q_orders[b] - out.q_orders[a]);
    out.alpha.push_back(alpha);
    out.f.push_back(out.q_orders[iq] * alpha - out.tau[iq]);
  }
  for (std::size_t iq = 0; iq < nq; ++iq) {
    if (!std::isfinite(out.h[iq]) || !std::isfinite(out.alpha[iq]) || !std::isfinite(out.f[iq])) {
      fail(ErrorKind::numeric, "MFDFA: multifractal spectrum is not finite");
    }
  }
  return out;
}

MultifractalFeatures mfdfa_features(const MultifractalSpectrum& s) {
  if (s.alpha.empty() || s.alpha.size() != s.f.size()) fail(ErrorKind::invalid_argument, "MFDFA: empty spectrum");
  const auto lo = static_cast<std::size_t>(std::min_element(s.alpha.begin(), s.alpha.end()) - s.alpha.begin());
  const auto hi = static_cast<std::size_t>(std::max_element(s.alpha.begin(), s.alpha.end()) - s.alpha.begin());
  const auto top = static_cast<std::size_t>(std::max_element(s.f.begin(), s.f.end()) - s.f.begin());
  return {s.alpha[lo], s.f[lo], s.alpha[hi], s.f[hi], s.alpha[top], s.f[top]};
}

void write_mfdfa_csv(const MultifractalSpectrum& s, std::ostream& out) {
  out << "q,h_q,D_q\n";
  for (std::size_t i = 0; i < s.q_orders.size(); ++i) {
    out << format_double(s.q_orders[i]) << ',' << format_double(s.alpha[i]) << ',' << format_double(s.f[i]) << '\n';
  }
}

std::string to_string(LleDfaInput v) { return v == LleDfaInput::time ? "time" : "spectrum"; }

LleDfaInput lle_dfa_input_from_string(const std::string& s) {
  if (s == "time") return LleDfaInput::time;
  if (s == "spectrum") return LleDfaInput::spectrum;
  fail(ErrorKind::invalid_argument, "unknown lle_dfa_input '" + s + "' (time | spectrum)");
}

std::vector<double> nonlinear_row(const TimeSeries& x, const NonlinearOptions& opt) {
  const auto mf = mfdfa_features(mfdfa(x.samples()));
  std::vector<double> lle_dfa_source;
  std::span<const double> ld = x.samples();
  if (opt.lle_dfa_input == LleDfaInput::spectrum) {
    const auto spec = fft_magnitude(x);
    lle_dfa_source.assign(spec.magnitudes().begin(), spec.magnitudes().end());
    ld = lle_dfa_source;
  }
  std::vector<double> row{mf.alpha_min,
                          mf.d_at_alpha_min,
                          mf.alpha_max,
                          mf.d_at_alpha_max,
                          mf.alpha_at_d_max,
                          sample_entropy(x.samples(), opt.sampen),
                          hurst_exponent(x.samples()),
                          largest_lyapunov(ld),
                          dfa(ld)};
  for (double v : row) checked(v, "nonlinear feature");
  return row;
}

FeatureMatrix extract_nonlinear(const LabeledDataset& dataset, const NonlinearOptions& opt) {
  const auto& recs = dataset.records();
  std::vector<std::vector<double>> rows(recs.size());
  parallel_for(recs.size(), opt.threads, [&](std::size_t i) {
    try {
      rows[i] = nonlinear_row(recs[i].series, opt);
    } catch (const Error& e) {
      throw Error(e.kind(), "record " + recs[i].id + ": " + e.what());
    }
  });
  std::vector<std::string> names;
  for (std::size_t k = 0; k < kNonlinearFeatureCount; ++k) names.push_back("f_" + std::to_string(opt.first_index + k));
  std::vector<std::string> ids;
  std::vector<double> values;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    ids.push_back(recs[i].id);
    values.insert(values.end(), rows[i].begin(), rows[i].end());
  }
  return FeatureMatrix(std::move(names), std::move(ids), dataset.labels(), std::move(values));
}

}  // namespace gafds
