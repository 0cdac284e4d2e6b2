#include "insert/tape.hpp"

#include <algorithm>
#include <cmath>

#include "insert/errors.hpp"

namespace insert {

namespace {
bool g_finite_checks = true;

constexpr double kOvrClamp = 1e-12;
}  // namespace

void set_finite_checks(bool enabled) { g_finite_checks = enabled; }
bool finite_checks() { return g_finite_checks; }

Tensor softmax(const Tensor& logits) {
  Tensor p(logits.shape());
  double max = logits[0];
  for (std::size_t i = 1; i < logits.size(); ++i) max = std::max(max, logits[i]);
  double denom = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - max);
    denom += p[i];
  }
  for (std::size_t i = 0; i < p.size(); ++i) p[i] /= denom;
  return p;
}

const char* Tape::op_name(Op op) {
  switch (op) {
    case Op::kConst: return "constant";
    case Op::kParam: return "param";
    case Op::kMatmul: return "matmul";
    case Op::kAdd: return "add";
    case Op::kMul: return "mul";
    case Op::kAffine: return "affine";
    case Op::kSigmoid: return "sigmoid";
    case Op::kTanh: return "tanh";
    case Op::kReciprocal: return "reciprocal";
    case Op::kConcat: return "concat";
    case Op::kSlice: return "slice";
    case Op::kRow: return "row";
    case Op::kDot: return "dot";
    case Op::kMax: return "max";
    case Op::kSum: return "sum";
    case Op::kSoftmaxVec: return "softmax_vec";
    case Op::kSoftmaxCE: return "softmax_cross_entropy";
    case Op::kSoftmaxOvR: return "softmax_one_vs_rest";
  }
  return "?";
}

Tape::ValueId Tape::push(Node n) {
  n.value.quantize();
  if (g_finite_checks && !n.value.all_finite()) {
    throw NumericError(std::string("non-finite value produced by ") + op_name(n.op));
  }
  nodes_.push_back(std::move(n));
  return static_cast<ValueId>(nodes_.size()) - 1;
}

void Tape::check_id(ValueId id) const {
  if (id < 0 || id >= static_cast<ValueId>(nodes_.size())) {
    throw UsageError("value id " + std::to_string(id) + " is not on this tape");
  }
}

const Tape::Node& Tape::node(ValueId id) const {
  check_id(id);
  return nodes_[static_cast<std::size_t>(id)];
}

const Tensor& Tape::value(ValueId id) const { return node(id).value; }

std::size_t Tape::argmax(ValueId max_node) const {
  const Node& n = node(max_node);
  if (n.op != Op::kMax) throw UsageError("argmax queried on a non-max node");
  return n.arg;
}

Tape::ValueId Tape::constant(Tensor t) {
  Node n;
  n.op = Op::kConst;
  n.value = std::move(t);
  return push(std::move(n));
}

Tape::ValueId Tape::param(ParameterStore& store, const std::string& name) {
  if (store_ && store_ != &store) {
    throw UsageError("tape is already bound to a different ParameterStore");
  }
  store_ = &store;
  int entry = store.index_of(name);
  if (entry < 0) throw UsageError("unknown parameter '" + name + "'");
  param_node_by_entry_.resize(std::max(param_node_by_entry_.size(), store.count()), -1);
  if (param_node_by_entry_[static_cast<std::size_t>(entry)] >= 0) {
    return param_node_by_entry_[static_cast<std::size_t>(entry)];
  }
  Node n;
  n.op = Op::kParam;
  n.param = entry;
  n.value = store.entry(entry).value;
  ValueId id = push(std::move(n));
  param_node_by_entry_[static_cast<std::size_t>(entry)] = id;
  return id;
}

Tape::ValueId Tape::matmul(ValueId a, ValueId b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  if (A.ndim() != 2 || B.ndim() > 2 || A.shape()[1] != B.shape()[0]) {
    throw DimensionError("matmul shape mismatch: " + A.shape_str() + " vs " + B.shape_str());
  }
  const std::size_t m = A.rows(), k = A.cols(), ncols = B.ndim() == 2 ? B.shape()[1] : 1;
  Tensor C(B.ndim() == 2 ? std::vector<std::size_t>{m, ncols} : std::vector<std::size_t>{m});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < ncols; ++j) {
      double acc = 0.0;
      for (std::size_t t = 0; t < k; ++t) acc += A.data()[i * k + t] * B.data()[t * ncols + j];
      C.data()[i * ncols + j] = acc;
    }
  }
  Node n;
  n.op = Op::kMatmul;
  n.a = a;
  n.b = b;
  n.value = std::move(C);
  return push(std::move(n));
}

Tape::ValueId Tape::add(ValueId a, ValueId b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  Node n;
  n.op = Op::kAdd;
  n.a = a;
  n.b = b;
  if (A.same_shape(B)) {
    Tensor C(A.shape());
    for (std::size_t i = 0; i < C.size(); ++i) C[i] = A[i] + B[i];
    n.value = std::move(C);
  } else if (A.is_scalar() || B.is_scalar()) {
    const Tensor& big = A.is_scalar() ? B : A;
    double s = (A.is_scalar() ? A : B)[0];
    Tensor C(big.shape());
    for (std::size_t i = 0; i < C.size(); ++i) C[i] = big[i] + s;
    n.value = std::move(C);
  } else {
    throw DimensionError("add shape mismatch: " + A.shape_str() + " vs " + B.shape_str());
  }
  return push(std::move(n));
}

Tape::ValueId Tape::mul(ValueId a, ValueId b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  Node n;
  n.op = Op::kMul;
  n.a = a;
  n.b = b;
  if (A.same_shape(B)) {
    Tensor C(A.shape());
    for (std::size_t i = 0; i < C.size(); ++i) C[i] = A[i] * B[i];
    n.value = std::move(C);
  } else if (A.is_scalar() || B.is_scalar()) {
    const Tensor& big = A.is_scalar() ? B : A;
    double s = (A.is_scalar() ? A : B)[0];
    Tensor C(big.shape());
    for (std::size_t i = 0; i < C.size(); ++i) C[i] = big[i] * s;
    n.value = std::move(C);
  } else {
    throw DimensionError("mul shape mismatch: " + A.shape_str() + " vs " + B.shape_str());
  }
  return push(std::move(n));
}

Tape::ValueId Tape::affine(ValueId a, double k, double c) {
  const Tensor& A = value(a);
  Tensor C(A.shape());
  for (std::size_t i = 0; i < C.size(); ++i) C[i] = k * A[i] + c;
  Node n;
  n.op = Op::kAffine;
  n.a = a;
  n.k = k;
  n.c = c;
  n.value = std::move(C);
  return push(std::move(n));
}

Tape::ValueId Tape::sigmoid(ValueId a) {
  const Tensor& A = value(a);
  Tensor C(A.shape());
  for (std::size_t i = 0; i < C.size(); ++i) C[i] = 1.0 / (1.0 + std::exp(-A[i]));
  Node n;
  n.op = Op::kSigmoid;
  n.a = a;
  n.value = std::move(C);
  return push(std::move(n));
}

Tape::ValueId Tape::tanh(ValueId a) {
  const Tensor& A = value(a);
  Tensor C(A.shape());
  for (std::size_t i = 0; i < C.size(); ++i) C[i] = std::tanh(A[i]);
  Node n;
  n.op = Op::kTanh;
  n.a = a;
  n.value = std::move(C);
  return push(std::move(n));
}

Tape::ValueId Tape::reciprocal(ValueId a) {
  const Tensor& A = value(a);
  Tensor C(A.shape());
  for (std::size_t i = 0; i < C.size(); ++i) C[i] = 1.0 / A[i];
  Node n;
  n.op = Op::kReciprocal;
  n.a = a;
  n.value = std::move(C);
  return push(std::move(n));
}

Tape::ValueId Tape::concat(const std::vector<ValueId>& parts) {
  if (parts.empty()) throw UsageError("concat of zero tensors");
  std::size_t total = 0;
  for (ValueId id : parts) {
    const Tensor& t = value(id);
    if (t.ndim() != 1) throw DimensionError("concat expects 1-D tensors, got " + t.shape_str());
    total += t.size();
  }
  Tensor C({total});
  std::size_t off = 0;
  for (ValueId id : parts) {
    const Tensor& t = value(id);
    for (std::size_t i = 0; i < t.size(); ++i) C[off + i] = t[i];
    off += t.size();
  }
  Node n;
  n.op = Op::kConcat;
  n.inputs = parts;
  n.value = std::move(C);
  return push(std::move(n));
}

Tape::ValueId Tape::slice(ValueId a, std::size_t offset, std::size_t len) {
  const Tensor& A = value(a);
  if (A.ndim() != 1) throw DimensionError("slice expects a 1-D tensor, got " + A.shape_str());
  if (len == 0 || offset + len > A.size()) {
    throw DimensionError("slice [" + std::to_string(offset) + ", " + std::to_string(offset + len) +
                         ") out of range for " + A.shape_str());
  }
  Tensor C({len});
  for (std::size_t i = 0; i < len; ++i) C[i] = A[offset + i];
  Node n;
  n.op = Op::kSlice;
  n.a = a;
  n.index = offset;
  n.extent = len;
  n.value = std::move(C);
  return push(std::move(n));
}

Tape::ValueId Tape::row(ValueId matrix, std::size_t r) {
  const Tensor& A = value(matrix);
  if (A.ndim() != 2) throw DimensionError("row gather expects a 2-D tensor, got " + A.shape_str());
  if (r >= A.rows()) {
    throw UsageError("row " + std::to_string(r) + " out of range for " + A.shape_str());
  }
  const std::size_t d = A.cols();
  Tensor C({d});
  for (std::size_t i = 0; i < d; ++i) C[i] = A.data()[r * d + i];
  Node n;
  n.op = Op::kRow;
  n.a = matrix;
  n.index = r;
  n.value = std::move(C);
  return push(std::move(n));
}

Tape::ValueId Tape::dot(ValueId a, ValueId b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  if (A.ndim() != 1 || !A.same_shape(B)) {
    throw DimensionError("dot shape mismatch: " + A.shape_str() + " vs " + B.shape_str());
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < A.size(); ++i) acc += A[i] * B[i];
  Node n;
  n.op = Op::kDot;
  n.a = a;
  n.b = b;
  n.value = Tensor::scalar(acc);
  return push(std::move(n));
}

Tape::ValueId Tape::max(ValueId a) {
  const Tensor& A = value(a);
  if (A.ndim() != 1 || A.size() == 0) {
    throw DimensionError("max expects a non-empty 1-D tensor, got " + A.shape_str());
  }
  std::size_t arg = 0;
  for (std::size_t i = 1; i < A.size(); ++i) {
    if (A[i] > A[arg]) arg = i;  // strict: first index wins ties
  }
  Node n;
  n.op = Op::kMax;
  n.a = a;
  n.arg = arg;
  n.value = Tensor::scalar(A[arg]);
  return push(std::move(n));
}

Tape::ValueId Tape::sum(ValueId a) {
  const Tensor& A = value(a);
  double acc = 0.0;
  for (std::size_t i = 0; i < A.size(); ++i) acc += A[i];
  Node n;
  n.op = Op::kSum;
  n.a = a;
  n.value = Tensor::scalar(acc);
  return push(std::move(n));
}

Tape::ValueId Tape::softmax_vec(ValueId a) {
  const Tensor& A = value(a);
  if (A.ndim() != 1) throw DimensionError("softmax_vec expects a 1-D tensor, got " + A.shape_str());
  Node n;
  n.op = Op::kSoftmaxVec;
  n.a = a;
  n.value = softmax(A);
  return push(std::move(n));
}

Tape::ValueId Tape::softmax_cross_entropy(ValueId logits, std::size_t target) {
  const Tensor& Z = value(logits);
  if (Z.ndim() != 1) throw DimensionError("logits must be 1-D, got " + Z.shape_str());
  if (target >= Z.size()) {
    throw UsageError("target index " + std::to_string(target) + " out of range for " +
                     std::to_string(Z.size()) + " logits");
  }
  // loss = (max - z_t) + log1p(sum over non-argmax of exp(z - max))
  std::size_t arg = 0;
  for (std::size_t i = 1; i < Z.size(); ++i) {
    if (Z[i] > Z[arg]) arg = i;
  }
  double rest = 0.0;
  for (std::size_t i = 0; i < Z.size(); ++i) {
    if (i != arg) rest += std::exp(Z[i] - Z[arg]);
  }
  double loss = (Z[arg] - Z[target]) + std::log1p(rest);
  Node n;
  n.op = Op::kSoftmaxCE;
  n.a = logits;
  n.index = target;
  n.cache = softmax(Z);
  n.value = Tensor::scalar(loss);
  return push(std::move(n));
}

Tape::ValueId Tape::softmax_one_vs_rest(ValueId logits, std::size_t target) {
  const Tensor& Z = value(logits);
  if (Z.ndim() != 1) throw DimensionError("logits must be 1-D, got " + Z.shape_str());
  if (target >= Z.size()) {
    throw UsageError("target index " + std::to_string(target) + " out of range for " +
                     std::to_string(Z.size()) + " logits");
  }
  Tensor p = softmax(Z);
  double loss = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    double pc = std::min(1.0 - kOvrClamp, std::max(kOvrClamp, p[i]));
    loss -= (i == target) ? std::log(pc) : std::log(1.0 - pc);
  }
  Node n;
  n.op = Op::kSoftmaxOvR;
  n.a = logits;
  n.index = target;
  n.cache = std::move(p);
  n.value = Tensor::scalar(loss);
  return push(std::move(n));
}

void Tape::backward(ValueId loss) {
  const Node& top = node(loss);
  if (!top.value.is_scalar()) {
    throw UsageError("backward requires a scalar loss, got " + top.value.shape_str());
  }
  std::vector<Tensor> grads(static_cast<std::size_t>(loss) + 1);
  grads[static_cast<std::size_t>(loss)] = Tensor::scalar(1.0);

  auto grad_of = [&](int id) -> Tensor& {
    Tensor& g = grads[static_cast<std::size_t>(id)];
    if (g.size() == 0) g = Tensor(nodes_[static_cast<std::size_t>(id)].value.shape());
    return g;
  };

  for (int i = loss; i >= 0; --i) {
    Tensor& g = grads[static_cast<std::size_t>(i)];
    if (g.size() == 0) continue;  // node does not feed the loss
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    switch (n.op) {
      case Op::kConst:
        break;
      case Op::kParam: {
        Tensor& pg = store_->entry(n.param).grad;
        for (std::size_t t = 0; t < pg.size(); ++t) pg[t] += g[t];
        pg.quantize();
        break;
      }
      case Op::kMatmul: {
        const Tensor& A = nodes_[static_cast<std::size_t>(n.a)].value;
        const Tensor& B = nodes_[static_cast<std::size_t>(n.b)].value;
        const std::size_t m = A.rows(), k = A.cols();
        const std::size_t ncols = B.ndim() == 2 ? B.shape()[1] : 1;
        Tensor& ga = grad_of(n.a);
        Tensor& gb = grad_of(n.b);
        // dA += dC·Bᵀ
        for (std::size_t r = 0; r < m; ++r) {
          for (std::size_t t = 0; t < k; ++t) {
            double acc = 0.0;
            for (std::size_t j = 0; j < ncols; ++j) {
              acc += g.data()[r * ncols + j] * B.data()[t * ncols + j];
            }
            ga.data()[r * k + t] += acc;
          }
        }
        // dB += Aᵀ·dC
        for (std::size_t t = 0; t < k; ++t) {
          for (std::size_t j = 0; j < ncols; ++j) {
            double acc = 0.0;
            for (std::size_t r = 0; r < m; ++r) {
              acc += A.data()[r * k + t] * g.data()[r * ncols + j];
            }
            gb.data()[t * ncols + j] += acc;
          }
        }
        break;
      }
      case Op::kAdd: {
        const Tensor& A = nodes_[static_cast<std::size_t>(n.a)].value;
        const Tensor& B = nodes_[static_cast<std::size_t>(n.b)].value;
        Tensor& ga = grad_of(n.a);
        Tensor& gb = grad_of(n.b);
        if (A.same_shape(B)) {
          for (std::size_t t = 0; t < g.size(); ++t) {
            ga[t] += g[t];
            gb[t] += g[t];
          }
        } else {
          Tensor& gbig = A.is_scalar() ? gb : ga;
          Tensor& gsmall = A.is_scalar() ? ga : gb;
          for (std::size_t t = 0; t < g.size(); ++t) {
            gbig[t] += g[t];
            gsmall[0] += g[t];
          }
        }
        break;
      }
      case Op::kMul: {
        const Tensor& A = nodes_[static_cast<std::size_t>(n.a)].value;
        const Tensor& B = nodes_[static_cast<std::size_t>(n.b)].value;
        Tensor& ga = grad_of(n.a);
        Tensor& gb = grad_of(n.b);
        if (A.same_shape(B)) {
          for (std::size_t t = 0; t < g.size(); ++t) {
            ga[t] += g[t] * B[t];
            gb[t] += g[t] * A[t];
          }
        } else {
          const bool a_small = A.is_scalar();
          const Tensor& big = a_small ? B : A;
          double s = (a_small ? A : B)[0];
          Tensor& gbig = a_small ? gb : ga;
          Tensor& gsmall = a_small ? ga : gb;
          for (std::size_t t = 0; t < g.size(); ++t) {
            gbig[t] += g[t] * s;
            gsmall[0] += g[t] * big[t];
          }
        }
        break;
      }
      case Op::kAffine: {
        Tensor& ga = grad_of(n.a);
        for (std::size_t t = 0; t < g.size(); ++t) ga[t] += n.k * g[t];
        break;
      }
      case Op::kSigmoid: {
        Tensor& ga = grad_of(n.a);
        for (std::size_t t = 0; t < g.size(); ++t) {
          double y = n.value[t];
          ga[t] += g[t] * y * (1.0 - y);
        }
        break;
      }
      case Op::kTanh: {
        Tensor& ga = grad_of(n.a);
        for (std::size_t t = 0; t < g.size(); ++t) {
          double y = n.value[t];
          ga[t] += g[t] * (1.0 - y * y);
        }
        break;
      }
      case Op::kReciprocal: {
        Tensor& ga = grad_of(n.a);
        for (std::size_t t = 0; t < g.size(); ++t) {
          double y = n.value[t];
          ga[t] -= g[t] * y * y;
        }
        break;
      }
      case Op::kConcat: {
        std::size_t off = 0;
        for (int part : n.inputs) {
          Tensor& gp = grad_of(part);
          for (std::size_t t = 0; t < gp.size(); ++t) gp[t] += g[off + t];
          off += gp.size();
        }
        break;
      }
      case Op::kSlice: {
        Tensor& ga = grad_of(n.a);
        for (std::size_t t = 0; t < n.extent; ++t) ga[n.index + t] += g[t];
        break;
      }
      case Op::kRow: {
        const Node& src = nodes_[static_cast<std::size_t>(n.a)];
        const std::size_t d = src.value.cols();
        if (src.op == Op::kParam) {
          // write straight into the store; keeps embedding tables sparse
          Tensor& pg = store_->entry(src.param).grad;
          for (std::size_t t = 0; t < d; ++t) pg[n.index * d + t] += g[t];
          pg.quantize();
        } else {
          Tensor& ga = grad_of(n.a);
          for (std::size_t t = 0; t < d; ++t) ga[n.index * d + t] += g[t];
        }
        break;
      }
      case Op::kDot: {
        const Tensor& A = nodes_[static_cast<std::size_t>(n.a)].value;
        const Tensor& B = nodes_[static_cast<std::size_t>(n.b)].value;
        Tensor& ga = grad_of(n.a);
        Tensor& gb = grad_of(n.b);
        for (std::size_t t = 0; t < A.size(); ++t) {
          ga[t] += g[0] * B[t];
          gb[t] += g[0] * A[t];
        }
        break;
      }
      case Op::kMax: {
        Tensor& ga = grad_of(n.a);
        ga[n.arg] += g[0];
        break;
      }
      case Op::kSum: {
        Tensor& ga = grad_of(n.a);
        for (std::size_t t = 0; t < ga.size(); ++t) ga[t] += g[0];
        break;
      }
      case Op::kSoftmaxVec: {
        // da_i += p_i (g_i - sum_j g_j p_j)
        Tensor& ga = grad_of(n.a);
        const Tensor& p = n.value;
        double inner = 0.0;
        for (std::size_t t = 0; t < p.size(); ++t) inner += g[t] * p[t];
        for (std::size_t t = 0; t < p.size(); ++t) ga[t] += p[t] * (g[t] - inner);
        break;
      }
      case Op::kSoftmaxCE: {
        Tensor& ga = grad_of(n.a);
        const Tensor& p = n.cache;
        for (std::size_t t = 0; t < p.size(); ++t) {
          ga[t] += g[0] * (p[t] - (t == n.index ? 1.0 : 0.0));
        }
        break;
      }
      case Op::kSoftmaxOvR: {
        // dL/dp_t = -1/p_t; dL/dp_i = 1/(1-p_i); zero where the clamp is
        // active. dL/dz_j = p_j (s_j - sum_i s_i p_i).
        Tensor& ga = grad_of(n.a);
        const Tensor& p = n.cache;
        std::vector<double> s(p.size());
        double inner = 0.0;
        for (std::size_t t = 0; t < p.size(); ++t) {
          if (p[t] < kOvrClamp || p[t] > 1.0 - kOvrClamp) {
            s[t] = 0.0;
          } else {
            s[t] = (t == n.index) ? -1.0 / p[t] : 1.0 / (1.0 - p[t]);
          }
          inner += s[t] * p[t];
        }
        for (std::size_t t = 0; t < p.size(); ++t) {
          ga[t] += g[0] * p[t] * (s[t] - inner);
        }
        break;
      }
    }
    if (g_finite_checks && n.op != Op::kConst && n.op != Op::kParam) {
      if (n.a >= 0 && grads[static_cast<std::size_t>(n.a)].size() > 0 &&
          !grads[static_cast<std::size_t>(n.a)].all_finite()) {
        throw NumericError(std::string("non-finite gradient out of ") + op_name(n.op));
      }
    }
  }
}

}  // namespace insert
