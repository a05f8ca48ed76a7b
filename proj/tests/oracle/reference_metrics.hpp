#pragma once

// Brute-force reference evaluator for the scoring formulas, written straight
// from their definitions in extended precision. Shares no code with the
// library.

#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

inline constexpr long double kDelta = 1e-7L;

struct Row {
  double e, e_hat, l, r;
};

struct Size {
  double n, count, value;
};

inline double enormse(const std::vector<Row>& rows) {
  long double s = 0;
  for (const Row& x : rows) {
    long double q = 1.0L - ((long double)x.e_hat + kDelta) /
                               ((long double)x.e + kDelta);
    s += q * q;
  }
  return (double)std::sqrt(s / rows.size());
}

// instances[j] is a list of (true effect, estimated effect) per individual.
inline double enormse_individual(
    const std::vector<std::vector<std::pair<double, double>>>& instances) {
  long double outer = 0;
  for (const auto& inst : instances) {
    long double inner = 0;
    for (const auto& [t, h] : inst) {
      long double q = 1.0L - ((long double)h + kDelta) / ((long double)t + kDelta);
      inner += q * q;
    }
    outer += inner / inst.size();
  }
  return (double)std::sqrt(outer / instances.size());
}

inline double rmse(const std::vector<Row>& rows) {
  long double s = 0;
  for (const Row& x : rows) {
    long double d = (long double)x.e_hat - x.e;
    s += d * d;
  }
  return (double)std::sqrt(s / rows.size());
}

inline double bias(const std::vector<Row>& rows) {
  long double s = 0;
  for (const Row& x : rows) s += (long double)x.e_hat - x.e;
  return (double)(s / rows.size());
}

inline double coverage(const std::vector<Row>& rows) {
  long double hits = 0;
  for (const Row& x : rows) {
    if (x.l <= x.e && x.e <= x.r) hits += 1;
  }
  return (double)(hits / rows.size());
}

inline double cic(const std::vector<Row>& rows) {
  long double s = 0;
  for (const Row& x : rows) {
    long double width = (long double)x.r - x.l + kDelta;
    s += std::fabs((long double)x.e_hat - x.e) / width;
  }
  return (double)(s / rows.size());
}

inline double encis(const std::vector<Row>& rows) {
  long double s = 0;
  for (const Row& x : rows) {
    s += ((long double)x.r - x.l + kDelta) / (std::fabs((long double)x.e) + kDelta);
  }
  return (double)(s / rows.size());
}

inline double aggregate_quadratic(const std::vector<Size>& sizes) {
  long double num = 0, den = 0;
  for (const Size& s : sizes) {
    long double w = (long double)s.n * s.count;
    num += w * (long double)s.value * s.value;
    den += w;
  }
  return (double)std::sqrt(num / den);
}

inline double aggregate_linear(const std::vector<Size>& sizes) {
  long double num = 0, den = 0;
  for (const Size& s : sizes) {
    long double w = (long double)s.n * s.count;
    num += w * s.value;
    den += w;
  }
  return (double)(num / den);
}

}  // namespace oracle
