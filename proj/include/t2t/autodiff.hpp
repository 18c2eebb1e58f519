#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "t2t/error.hpp"

namespace t2t::ad {

// Dense row-major tensor of 64-bit floats. Rank 1 (vector) and rank 2
// (matrix) cover the whole model; scalars are shape {1}.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;
  bool requires_grad = false;

  Tensor() = default;
  Tensor(std::vector<int> shape_in, std::vector<double> data_in, bool grad = false);

  static Tensor zeros(std::vector<int> shape, bool grad = false);
  static Tensor scalar(double v, bool grad = false);
  static Tensor from_vector(std::vector<double> v, bool grad = false);
  static Tensor matrix(int rows, int cols, std::vector<double> v, bool grad = false);

  int size() const { return static_cast<int>(data.size()); }
  int rank() const { return static_cast<int>(shape.size()); }
  int rows() const;
  int cols() const;
  bool all_finite() const;
  std::string shape_str() const;
};

enum class OpKind : std::uint8_t {
  kLeaf,
  kAdd,
  kSub,
  kMul,         // elementwise
  kScale,       // tensor * compile-time scalar
  kScalarMul,   // tensor * scalar tensor {1}
  kDivScalar,   // tensor / scalar tensor {1}
  kMatMul,      // {r,c}x{c}->{r} or {r,c}x{c,p}->{r,p}
  kTanh,
  kSigmoid,
  kSoftmax,     // over a vector, max-subtracted
  kLogSoftmax,
  kConcat,
  kDot,
  kSum,
  kSlice,
  kRow,         // matrix row as vector
  kGather,      // vector gathered by index list
};

const char* op_name(OpKind kind);

using NodeId = std::int32_t;

class Tape;

// Lightweight handle to a node on a tape.
struct Var {
  Tape* tape = nullptr;
  NodeId id = -1;

  bool valid() const { return tape != nullptr && id >= 0; }
  const Tensor& value() const;
};

// Gradients keyed by node id, produced by Tape::backward. Nodes that were
// never reached hold no entry; requires-grad leaves always do (zero when the
// loss does not depend on them).
class Gradients {
 public:
  explicit Gradients(std::size_t nodes) : grads_(nodes), present_(nodes, 0) {}

  bool has(NodeId id) const;
  const Tensor& at(NodeId id) const;
  const Tensor& at(Var v) const { return at(v.id); }

 private:
  friend class Tape;
  Tensor& slot(NodeId id, const std::vector<int>& shape);

  std::vector<Tensor> grads_;
  std::vector<char> present_;
};

// Per-op payload that is not a tensor: scale factor, slice window, row
// index, gather indices.
struct OpAttrs {
  double factor = 0.0;
  int offset = 0;
  int length = 0;
  int row = 0;
  std::vector<int> indices;
};

// Records ops in the order they execute; node ids are append order, so every
// op's inputs precede it and a single reverse sweep visits each node once.
class Tape {
 public:
  Var leaf(Tensor t);

  // Generic entry point: validates shapes, computes the forward value and
  // records the node. The typed wrappers below are the everyday API.
  Var forward_eval(OpKind kind, std::span<const Var> inputs, OpAttrs attrs = {});

  // Reverse sweep from a scalar loss. Gradient contributions sum where a
  // node feeds several consumers. A loss detached from every grad-requiring
  // leaf yields all-zero gradients and a warning on stderr.
  Gradients backward(Var loss) const;

  const Tensor& value(NodeId id) const;
  bool requires_grad(NodeId id) const;
  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }
  void reserve(std::size_t n) { nodes_.reserve(n); }

 private:
  struct Node {
    OpKind kind;
    std::vector<NodeId> inputs;
    OpAttrs attrs;
    Tensor value;  // saved forward value; requires_grad rides along
  };

  const Node& node(NodeId id) const;
  void backward_node(NodeId id, const Tensor& grad_out, Gradients& grads) const;

  std::vector<Node> nodes_;
};

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
Var scalar_mul(Var t, Var s);
Var div_scalar(Var t, Var s);
Var matmul(Var m, Var x);
Var tanh(Var a);
Var sigmoid(Var a);
Var softmax(Var a);
Var log_softmax(Var a);
Var concat(std::span<const Var> parts);
Var concat(std::initializer_list<Var> parts);
Var dot(Var a, Var b);
Var sum(Var a);
Var slice(Var a, int offset, int length);
Var row(Var m, int r);
Var gather(Var v, std::span<const int> indices);

// Weighted sum of equally shaped vectors: sum_i weights[i] * vectors[i].
Var weighted_sum(Var weights, std::span<const Var> vectors);

// A scalar-valued function of one tensor, built on a caller-provided tape.
using TensorFn = std::function<Var(Tape&, Var)>;

// Max over selected coordinates of the relative error between the analytic
// gradient of f at `point` and a central finite difference with step eps.
// f must be smooth near the point: kinks (|x| at 0 and friends) make the
// central difference meaningless and are not a supported input class.
double finite_diff_check(const TensorFn& f, const Tensor& point, double eps,
                         std::span<const int> coords);
double finite_diff_check(const TensorFn& f, const Tensor& point, double eps);

}  // namespace t2t::ad
