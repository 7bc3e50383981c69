#pragma once

#include <cmath>
#include <cstdint>

namespace hermval {

// Monte-Carlo value with standard error.  samples == 0 marks an exact result
// (std_error must then be 0).
struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  long long samples = 0;
  std::uint64_t seed = 0;

  static Estimate exact(double v, std::uint64_t seed = 0) {
    return Estimate{v, 0.0, 0, seed};
  }

  bool is_exact() const { return samples == 0; }

  Estimate scaled(double c) const {
    return Estimate{c * value, std::abs(c) * std_error, samples, seed};
  }
};

// Combined error of independent estimates, sum_i c_i * e_i.
inline Estimate combine(std::initializer_list<std::pair<double, Estimate>> terms) {
  Estimate out;
  double var = 0.0;
  long long n = 0;
  for (const auto& [c, e] : terms) {
    out.value += c * e.value;
    var += c * c * e.std_error * e.std_error;
    n = std::max(n, e.samples);
    out.seed = e.seed;
  }
  out.std_error = std::sqrt(var);
  out.samples = n;
  return out;
}

}  // namespace hermval
