#include "dst/array.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace dst {

std::size_t shape_product(const std::vector<std::size_t>& s) {
  std::size_t n = 1;
  for (std::size_t d : s) n *= d;
  return n;
}

Array::Array(std::vector<std::size_t> s) : shape(std::move(s)) {
  for (std::size_t d : shape)
    if (d == 0) throw std::invalid_argument("Array: zero dimension in shape");
  data.assign(shape_product(shape), 0.0);
}

Array Array::scalar(double v) {
  Array a;
  a.data.assign(1, v);
  return a;
}

Array Array::vec(std::initializer_list<double> xs) {
  Array a(std::vector<std::size_t>{xs.size()});
  std::size_t i = 0;
  for (double x : xs) a.data[i++] = x;
  return a;
}

std::size_t Array::rows() const {
  if (rank() == 2) return shape[0];
  if (rank() == 1) return shape[0];
  return 1;
}

std::size_t Array::cols() const {
  if (rank() == 2) return shape[1];
  return 1;
}

bool Array::all_finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

void Array::fill(double v) {
  for (double& x : data) x = v;
}

std::string Array::shape_str() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

}  // namespace dst
