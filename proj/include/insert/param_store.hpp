#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "insert/tensor.hpp"

namespace insert {

// Named trainable tensors with their gradient buffers. Entry indices are
// stable (insertion order), which fixes checkpoint layout and optimizer
// iteration order.
class ParameterStore {
 public:
  struct Entry {
    std::string name;
    Tensor value;
    Tensor grad;  // same shape as value
  };

  int add(const std::string& name, Tensor init);

  int index_of(const std::string& name) const;  // -1 if absent
  bool has(const std::string& name) const { return index_of(name) >= 0; }

  Entry& entry(int index) { return entries_[static_cast<std::size_t>(index)]; }
  const Entry& entry(int index) const { return entries_[static_cast<std::size_t>(index)]; }

  Tensor& value(const std::string& name);
  const Tensor& value(const std::string& name) const;
  Tensor& grad(const std::string& name);
  const Tensor& grad(const std::string& name) const;

  std::size_t count() const { return entries_.size(); }

  void zero_grads();

  // sqrt of the sum of squared gradient entries over all parameters
  double grad_norm() const;

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, int> by_name_;
};

}  // namespace insert
