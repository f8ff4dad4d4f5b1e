#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "gafds/dataset.hpp"
#include "gafds/features.hpp"

namespace gafds {

struct SampEnParams {
  std::size_t sn = 0;  // samples used from the start; 0 = whole series
  std::size_t sm = 2;  // template length
  double chi = 0.2;    // tolerance r = chi * std of the used samples
};

// -ln(A/B): B counts template pairs (i < j, i, j < N - sm) within Chebyshev
// distance r at length sm, A the same pairs at length sm + 1. A constant
// series returns 0; B == 0 or A == 0 is an error.
double sample_entropy(std::span<const double> x, const SampEnParams& p = {});

// Rescaled-range estimate over dyadic windows 8 .. n/4.
double hurst_exponent(std::span<const double> x);

struct LyapunovParams {
  std::size_t dimension = 5;
  std::size_t lag = 0;           // 0 = first lag whose autocorrelation reaches zero
  std::size_t theiler = 0;       // 0 = mean period from the spectrum's mean frequency
};

// Largest Lyapunov exponent in nats per sample: nearest-neighbour divergence
// over one-sample evolution, the neighbour re-chosen at every step.
double largest_lyapunov(std::span<const double> x, const LyapunovParams& p = {});

// First lag whose sample autocorrelation falls to within the 95% noise band
// (1.96 / sqrt(n)) of zero; 1 if it never does.
std::size_t autocorrelation_lag(std::span<const double> x);
std::size_t mean_period(std::span<const double> x);

// 16 log-spaced integer scales in [16, n/8], duplicates removed.
std::vector<std::size_t> fluctuation_scales(std::size_t n);

// Order-1 DFA scaling exponent.
double dfa(std::span<const double> x);

struct MultifractalSpectrum {
  std::vector<double> q_orders;
  std::vector<double> h;      // generalized Hurst exponent h(q)
  std::vector<double> tau;    // q h(q) - 1
  std::vector<double> alpha;  // singularity strength, d tau / d q
  std::vector<double> f;      // D_q = q alpha - tau
};

struct MultifractalFeatures {
  double alpha_min = 0.0;     // p1 abscissa
  double d_at_alpha_min = 0.0;
  double alpha_max = 0.0;     // p2 abscissa
  double d_at_alpha_max = 0.0;
  double alpha_at_d_max = 0.0;  // p3 abscissa
  double d_max = 0.0;           // always ~1; not a feature
};

MultifractalSpectrum mfdfa(std::span<const double> x);
MultifractalFeatures mfdfa_features(const MultifractalSpectrum& s);

// `q,h_q,D_q` with h_q the singularity strength.
void write_mfdfa_csv(const MultifractalSpectrum& s, std::ostream& out);

enum class LleDfaInput { time, spectrum };
std::string to_string(LleDfaInput v);
LleDfaInput lle_dfa_input_from_string(const std::string& s);

struct NonlinearOptions {
  SampEnParams sampen;
  LleDfaInput lle_dfa_input = LleDfaInput::time;
  std::size_t first_index = 5;  // column names f_<first_index> .. f_<first_index + 8>
  unsigned threads = 0;
};

inline constexpr std::size_t kNonlinearFeatureCount = 9;

// Columns in order: MFDFA p1 (alpha, D), p2 (alpha, D), p3 alpha, sample
// entropy, Hurst, LLE, DFA.
std::vector<double> nonlinear_row(const TimeSeries& x, const NonlinearOptions& opt);
FeatureMatrix extract_nonlinear(const LabeledDataset& dataset, const NonlinearOptions& opt = {});

}  // namespace gafds
