#include "insert/param_store.hpp"

#include <cmath>

#include "insert/errors.hpp"

namespace insert {

int ParameterStore::add(const std::string& name, Tensor init) {
  if (has(name)) throw UsageError("parameter '" + name + "' already exists");
  int index = static_cast<int>(entries_.size());
  Tensor grad(init.shape());
  entries_.push_back(Entry{name, std::move(init), std::move(grad)});
  by_name_[name] = index;
  return index;
}

int ParameterStore::index_of(const std::string& name) const {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? -1 : it->second;
}

Tensor& ParameterStore::value(const std::string& name) {
  int i = index_of(name);
  if (i < 0) throw UsageError("unknown parameter '" + name + "'");
  return entries_[static_cast<std::size_t>(i)].value;
}

const Tensor& ParameterStore::value(const std::string& name) const {
  int i = index_of(name);
  if (i < 0) throw UsageError("unknown parameter '" + name + "'");
  return entries_[static_cast<std::size_t>(i)].value;
}

Tensor& ParameterStore::grad(const std::string& name) {
  int i = index_of(name);
  if (i < 0) throw UsageError("unknown parameter '" + name + "'");
  return entries_[static_cast<std::size_t>(i)].grad;
}

const Tensor& ParameterStore::grad(const std::string& name) const {
  int i = index_of(name);
  if (i < 0) throw UsageError("unknown parameter '" + name + "'");
  return entries_[static_cast<std::size_t>(i)].grad;
}

void ParameterStore::zero_grads() {
  for (Entry& e : entries_) e.grad.fill(0.0);
}

double ParameterStore::grad_norm() const {
  double sq = 0.0;
  for (const Entry& e : entries_) {
    for (std::size_t i = 0; i < e.grad.size(); ++i) sq += e.grad[i] * e.grad[i];
  }
  return std::sqrt(sq);
}

}  // namespace insert
