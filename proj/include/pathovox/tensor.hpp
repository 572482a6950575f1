#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "pathovox/errors.hpp"

namespace pathovox {

/// Dense row-major tensor of 64-bit reals.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> values;

  Tensor() = default;
  Tensor(std::vector<std::size_t> shape_, std::vector<double> values_)
      : shape(std::move(shape_)), values(std::move(values_)) {
    if (element_count(shape) != values.size())
      throw ShapeMismatch("tensor values do not match shape");
  }

  static Tensor zeros(std::vector<std::size_t> shape) {
    std::size_t n = element_count(shape);
    return Tensor{std::move(shape), std::vector<double>(n, 0.0)};
  }

  std::size_t size() const { return values.size(); }
  double* data() { return values.data(); }
  const double* data() const { return values.data(); }

  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }

  void fill(double v) { std::fill(values.begin(), values.end(), v); }

  static std::size_t element_count(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return shape.empty() ? 0 : n;
  }
};

inline bool all_finite(const double* v, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(v[i])) return false;
  return true;
}

/// Throws NonFinite naming `where` if any entry is NaN or infinite.
inline void require_finite(const double* v, std::size_t n, const char* where) {
  if (!all_finite(v, n)) throw NonFinite(std::string("non-finite values at ") + where);
}

inline void require_finite(const Tensor& t, const char* where) {
  require_finite(t.data(), t.size(), where);
}

}  // namespace pathovox
