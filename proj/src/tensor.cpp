#include "insert/tensor.hpp"

#include <cmath>
#include <sstream>

#include "insert/errors.hpp"

namespace insert {

namespace {
Precision g_precision = Precision::f64;
}

void set_precision(Precision p) { g_precision = p; }
Precision precision() { return g_precision; }

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t s : shape) n *= s;
  return n;
}

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0) {
  if (shape_.empty()) throw DimensionError("tensor shape must be non-empty");
  for (std::size_t s : shape_) {
    if (s == 0) throw DimensionError("tensor shape entries must be positive, got " + shape_str());
  }
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_.empty()) throw DimensionError("tensor shape must be non-empty");
  if (shape_product(shape_) != data_.size()) {
    throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_str());
  }
}

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void Tensor::fill(double v) {
  for (double& x : data_) x = v;
}

void Tensor::quantize() {
  if (g_precision == Precision::f32) {
    for (double& x : data_) x = static_cast<double>(static_cast<float>(x));
  }
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) os << " x ";
    os << shape_[i];
  }
  os << "]";
  return os.str();
}

}  // namespace insert
