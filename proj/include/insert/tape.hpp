#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "insert/param_store.hpp"
#include "insert/tensor.hpp"

namespace insert {

// Toggle the NaN/Inf check run after every op (default on).
void set_finite_checks(bool enabled);
bool finite_checks();

// Reverse-mode differentiation record for one forward pass. Ops append nodes
// in topological order and compute values eagerly; backward() sweeps the
// record once in reverse and accumulates parameter gradients into the bound
// ParameterStore. A tape never shares gradient state with another tape.
class Tape {
 public:
  using ValueId = int;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  ValueId constant(Tensor t);
  ValueId scalar(double v) { return constant(Tensor::scalar(v)); }

  // Leaf bound to a store entry; memoized per name within one tape.
  ValueId param(ParameterStore& store, const std::string& name);

  // (m x k)·(k x n) -> (m x n); (m x k)·(k) -> (m).
  // Backward: dA += dC·Bᵀ, dB += Aᵀ·dC.
  ValueId matmul(ValueId a, ValueId b);

  // Elementwise; equal shapes or scalar-vs-tensor broadcast.
  ValueId add(ValueId a, ValueId b);
  ValueId mul(ValueId a, ValueId b);

  // k*x + c elementwise with constant coefficients.
  ValueId affine(ValueId a, double k, double c);
  ValueId scale(ValueId a, double k) { return affine(a, k, 0.0); }

  ValueId sigmoid(ValueId a);
  ValueId tanh(ValueId a);
  ValueId reciprocal(ValueId a);

  // 1-D only.
  ValueId concat(const std::vector<ValueId>& parts);
  ValueId slice(ValueId a, std::size_t offset, std::size_t len);

  // Row gather from a 2-D tensor (embedding lookup).
  ValueId row(ValueId matrix, std::size_t r);

  ValueId dot(ValueId a, ValueId b);

  // Max over a 1-D tensor; gradient flows to the argmax element only,
  // first index on ties.
  ValueId max(ValueId a);

  ValueId sum(ValueId a);

  // Softmax over a 1-D tensor (fused, numerically stable).
  ValueId softmax_vec(ValueId a);

  // -log softmax(logits)[target]; backward is softmax(logits) - onehot.
  ValueId softmax_cross_entropy(ValueId logits, std::size_t target);

  // -[log p(target) + sum over others of log(1 - p)], p = softmax(logits)
  // clamped to [eps, 1-eps], eps = 1e-12.
  ValueId softmax_one_vs_rest(ValueId logits, std::size_t target);

  const Tensor& value(ValueId id) const;
  std::size_t argmax(ValueId max_node) const;  // introspection for max nodes

  // Accumulates d(loss)/d(param) into the bound store. The loss must be a
  // scalar node on this tape. Repeated calls accumulate additively.
  void backward(ValueId loss);

  std::size_t node_count() const { return nodes_.size(); }

 private:
  enum class Op : std::uint8_t {
    kConst,
    kParam,
    kMatmul,
    kAdd,
    kMul,
    kAffine,
    kSigmoid,
    kTanh,
    kReciprocal,
    kConcat,
    kSlice,
    kRow,
    kDot,
    kMax,
    kSum,
    kSoftmaxVec,
    kSoftmaxCE,
    kSoftmaxOvR,
  };

  struct Node {
    Op op;
    int a = -1;
    int b = -1;
    std::vector<int> inputs;  // concat operands
    Tensor value;
    double k = 1.0, c = 0.0;     // affine coefficients
    std::size_t index = 0;       // slice offset / row index / target index
    std::size_t extent = 0;      // slice length
    std::size_t arg = 0;         // argmax position
    int param = -1;              // ParameterStore entry index for kParam
    Tensor cache;                // softmax probabilities
  };

  ValueId push(Node n);
  const Node& node(ValueId id) const;
  void check_id(ValueId id) const;
  static const char* op_name(Op op);

  std::vector<Node> nodes_;
  ParameterStore* store_ = nullptr;
  std::vector<int> param_node_by_entry_;  // memo: entry index -> node id
};

// Softmax of a 1-D tensor, numerically stable. Shared by the tape ops and
// the evaluation path.
Tensor softmax(const Tensor& logits);

}  // namespace insert
