#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace marl {

// Dense row-major container of 64-bit reals. Most ops treat it as a 2-D
// matrix: the last dimension is the column count, everything before it is
// flattened into rows.
struct Array {
  std::vector<int> shape;
  std::vector<double> data;

  Array() = default;
  Array(std::vector<int> s, double fill = 0.0) : shape(std::move(s)) {
    data.assign(count(shape), fill);
  }
  Array(std::vector<int> s, std::vector<double> d)
      : shape(std::move(s)), data(std::move(d)) {
    if (data.size() != count(shape))
      throw std::invalid_argument("Array: data length does not match shape");
  }

  static std::size_t count(const std::vector<int>& s) {
    std::size_t n = 1;
    for (int d : s) {
      if (d <= 0) throw std::invalid_argument("Array: non-positive dimension");
      n *= static_cast<std::size_t>(d);
    }
    return n;
  }

  static Array zeros(std::vector<int> s) { return Array(std::move(s), 0.0); }
  static Array full(std::vector<int> s, double v) { return Array(std::move(s), v); }
  static Array scalar(double v) { return Array({1}, std::vector<double>{v}); }

  std::size_t size() const { return data.size(); }
  int cols() const { return shape.empty() ? 1 : shape.back(); }
  int rows() const {
    int r = 1;
    for (std::size_t i = 0; i + 1 < shape.size(); ++i) r *= shape[i];
    return r;
  }

  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols() + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols() + c]; }

  bool same_shape(const Array& o) const { return shape == o.shape; }

  bool finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

inline std::string shape_str(const std::vector<int>& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

}  // namespace marl
