/* Copyright 2026 The Firewatch Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace firewatch::detail {

// Shortest decimal text that parses back to exactly `v`, never in exponent
// notation.
inline std::string shortest_fixed(double v) {
  char buf[512];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed);
  if (ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buf, end);
}

inline std::string fixed(double v, int decimals) {
  char buf[512];
  auto [end, ec] =
      std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, decimals);
  if (ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buf, end);
}

// Parses a plain decimal number: optional sign, digits, optional fraction.
// Exponents, hex, inf and nan are rejected.
inline bool parse_plain_decimal(std::string_view text, double& out) {
  if (text.empty()) return false;
  for (char c : text) {
    if (!((c >= '0' && c <= '9') || c == '.' || c == '-' || c == '+')) return false;
  }
  std::size_t start = (text.front() == '+') ? 1 : 0;
  auto [ptr, ec] = std::from_chars(text.data() + start, text.data() + text.size(), out,
                                   std::chars_format::fixed);
  return ec == std::errc() && ptr == text.data() + text.size();
}

inline bool parse_int(std::string_view text, long long& out) {
  if (text.empty()) return false;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

// Exact floating-point summation (Shewchuk). `partials` holds a
// non-overlapping expansion whose exact sum equals the sum of all inputs.
class ExactSum {
 public:
  void add(double x) {
    std::size_t i = 0;
    for (double y : partials_) {
      if (std::fabs(x) < std::fabs(y)) std::swap(x, y);
      const double hi = x + y;
      const double lo = y - (hi - x);
      if (lo != 0.0) partials_[i++] = lo;
      x = hi;
    }
    partials_.resize(i);
    partials_.push_back(x);
  }

  // Correctly rounded value of the exact sum.
  double value() const {
    if (partials_.empty()) return 0.0;
    std::size_t n = partials_.size();
    double hi = partials_[--n];
    double lo = 0.0;
    while (n > 0) {
      const double x = hi;
      const double y = partials_[--n];
      hi = x + y;
      const double yr = hi - x;
      lo = y - yr;
      if (lo != 0.0) break;
    }
    // Round-half-even correction when the remaining tail pushes past a tie.
    if (n > 0 && ((lo < 0.0 && partials_[n - 1] < 0.0) ||
                  (lo > 0.0 && partials_[n - 1] > 0.0))) {
      const double y = lo * 2.0;
      const double x = hi + y;
      if (y == x - hi) hi = x;
    }
    return hi;
  }

  const std::vector<double>& partials() const { return partials_; }

 private:
  std::vector<double> partials_;
};

// Mean of `values` over `count` slots (missing slots count as zero), rounded
// from the exact sum. When every value equals c and count == values.size(),
// the result is exactly c.
inline double exact_mean(std::span<const double> values, std::size_t count) {
  if (count == 0) return 0.0;
  ExactSum sum;
  for (double v : values) sum.add(v);
  const double n = static_cast<double>(count);
  const double q0 = sum.value() / n;
  // residual = exact_sum - q0 * n, evaluated exactly
  ExactSum residual;
  for (double p : sum.partials()) residual.add(p);
  const double prod = q0 * n;
  const double prod_err = std::fma(q0, n, -prod);
  residual.add(-prod);
  residual.add(-prod_err);
  return q0 + residual.value() / n;
}

}  // namespace firewatch::detail
