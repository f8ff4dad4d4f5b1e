#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gafds {

enum class ErrorKind {
  invalid_argument,
  io,
  parse,
  numeric,
};

// All library failures are reported through this exception. The C API maps
// `kind()` onto its status codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

using Rng = std::mt19937_64;

// Mixes a master seed with a stream id so independent stages draw from
// decorrelated generators (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

// Runs fn(i) for i in [0, n). Results must be written by index so the outcome
// does not depend on `threads`. threads == 0 means hardware concurrency.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

unsigned resolve_threads(unsigned threads);

double mean(std::span<const double> x);
// Population standard deviation (divides by n).
double stddev(std::span<const double> x);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};
// Ordinary least squares y = slope * x + intercept. Needs at least two distinct x.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

// Shortest decimal text that parses back to the identical double.
std::string format_double(double v);
// Strict parse of a whole token; returns false on trailing garbage or empty input.
bool parse_double(std::string_view text, double& out);

std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char delim);

// 64-bit FNV-1a, used for config fingerprints in run manifests.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace gafds
