#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace insert {

// Global float mode. f64 is the default (tests and gradient checks rely on
// it); f32 rounds every op result through single precision.
enum class Precision { f64, f32 };

void set_precision(Precision p);
Precision precision();

// Dense row-major tensor of doubles. Shape entries are positive; a scalar is
// shape {1}. product(shape) == data.size() always holds.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape);
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static Tensor scalar(double v) { return Tensor({1}, {v}); }
  static Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  std::size_t ndim() const { return shape_.size(); }

  // 2-D helpers
  std::size_t rows() const { return shape_[0]; }
  std::size_t cols() const { return shape_.size() > 1 ? shape_[1] : 1; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool is_scalar() const { return data_.size() == 1; }

  bool all_finite() const;
  void fill(double v);

  // Rounds entries through float when the global mode is f32; no-op in f64.
  void quantize();

  std::string shape_str() const;  // e.g. "[2 x 3]"

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

std::size_t shape_product(const std::vector<std::size_t>& shape);

}  // namespace insert
