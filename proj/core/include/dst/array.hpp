#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace dst {

// Dense row-major array of doubles. Rank 0 (scalar), 1 or 2 in practice.
struct Array {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Array() = default;
  explicit Array(std::vector<std::size_t> s);

  static Array zeros(std::vector<std::size_t> s) { return Array(std::move(s)); }
  static Array scalar(double v);
  static Array vec(std::initializer_list<double> xs);

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  double& at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

  bool same_shape(const Array& o) const { return shape == o.shape; }
  bool all_finite() const;
  void fill(double v);

  std::string shape_str() const;
};

std::size_t shape_product(const std::vector<std::size_t>& s);

}  // namespace dst
