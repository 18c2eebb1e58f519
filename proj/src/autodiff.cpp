#include "t2t/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace t2t::ad {

namespace {

int shape_product(const std::vector<int>& shape) {
  int n = 1;
  for (int d : shape) n *= d;
  return n;
}

std::string shape_to_string(const std::vector<int>& shape) {
  std::ostringstream os;
  os << '{';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << '}';
  return os.str();
}

double stable_sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Tensor::Tensor(std::vector<int> shape_in, std::vector<double> data_in, bool grad)
    : shape(std::move(shape_in)), data(std::move(data_in)), requires_grad(grad) {
  for (int d : shape) {
    if (d <= 0) throw ShapeError("tensor: non-positive dim in shape " + shape_to_string(shape));
  }
  if (shape.empty()) throw ShapeError("tensor: empty shape (scalars are shape {1})");
  if (shape_product(shape) != static_cast<int>(data.size())) {
    throw ShapeError("tensor: data length " + std::to_string(data.size()) +
                     " does not match shape " + shape_to_string(shape));
  }
}

Tensor Tensor::zeros(std::vector<int> shape, bool grad) {
  const int n = shape_product(shape);
  return Tensor(std::move(shape), std::vector<double>(static_cast<std::size_t>(n), 0.0), grad);
}

Tensor Tensor::scalar(double v, bool grad) { return Tensor({1}, {v}, grad); }

Tensor Tensor::from_vector(std::vector<double> v, bool grad) {
  const int n = static_cast<int>(v.size());
  return Tensor({n}, std::move(v), grad);
}

Tensor Tensor::matrix(int rows, int cols, std::vector<double> v, bool grad) {
  return Tensor({rows, cols}, std::move(v), grad);
}

int Tensor::rows() const {
  if (rank() != 2) throw ShapeError("rows(): tensor has shape " + shape_str());
  return shape[0];
}

int Tensor::cols() const {
  if (rank() != 2) throw ShapeError("cols(): tensor has shape " + shape_str());
  return shape[1];
}

bool Tensor::all_finite() const {
  for (double v : data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string Tensor::shape_str() const { return shape_to_string(shape); }

const char* op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kLeaf: return "leaf";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kScale: return "scale";
    case OpKind::kScalarMul: return "scalar_mul";
    case OpKind::kDivScalar: return "div_scalar";
    case OpKind::kMatMul: return "matmul";
    case OpKind::kTanh: return "tanh";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kSoftmax: return "softmax";
    case OpKind::kLogSoftmax: return "log_softmax";
    case OpKind::kConcat: return "concat";
    case OpKind::kDot: return "dot";
    case OpKind::kSum: return "sum";
    case OpKind::kSlice: return "slice";
    case OpKind::kRow: return "row";
    case OpKind::kGather: return "gather";
  }
  return "?";
}

const Tensor& Var::value() const {
  if (!valid()) throw Error("Var::value: invalid handle");
  return tape->value(id);
}

bool Gradients::has(NodeId id) const {
  return id >= 0 && static_cast<std::size_t>(id) < present_.size() && present_[static_cast<std::size_t>(id)];
}

const Tensor& Gradients::at(NodeId id) const {
  if (!has(id)) throw Error("Gradients::at: no gradient recorded for node " + std::to_string(id));
  return grads_[static_cast<std::size_t>(id)];
}

Tensor& Gradients::slot(NodeId id, const std::vector<int>& shape) {
  auto idx = static_cast<std::size_t>(id);
  if (!present_[idx]) {
    grads_[idx] = Tensor::zeros(shape);
    present_[idx] = 1;
  }
  return grads_[idx];
}

Var Tape::leaf(Tensor t) {
  Node n;
  n.kind = OpKind::kLeaf;
  n.value = std::move(t);
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<NodeId>(nodes_.size() - 1)};
}

const Tape::Node& Tape::node(NodeId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size()) {
    throw Error("tape: node id " + std::to_string(id) + " out of range");
  }
  return nodes_[static_cast<std::size_t>(id)];
}

const Tensor& Tape::value(NodeId id) const { return node(id).value; }

bool Tape::requires_grad(NodeId id) const { return node(id).value.requires_grad; }

namespace {

[[noreturn]] void shape_fail(OpKind kind, const std::string& detail) {
  throw ShapeError(std::string(op_name(kind)) + ": " + detail);
}

void require_same_shape(OpKind kind, const Tensor& a, const Tensor& b) {
  if (a.shape != b.shape) {
    shape_fail(kind, "shape mismatch " + a.shape_str() + " vs " + b.shape_str());
  }
}

void require_scalar(OpKind kind, const Tensor& s, const char* role) {
  if (s.size() != 1) {
    shape_fail(kind, std::string(role) + " must be a scalar {1}, got " + s.shape_str());
  }
}

void require_vector(OpKind kind, const Tensor& v) {
  if (v.rank() != 1) shape_fail(kind, "expected a vector, got " + v.shape_str());
}

}  // namespace

Var Tape::forward_eval(OpKind kind, std::span<const Var> inputs, OpAttrs attrs) {
  for (const Var& in : inputs) {
    if (in.tape != this) throw Error(std::string(op_name(kind)) + ": input from a different tape");
    node(in.id);  // range check
  }

  Node n;
  n.kind = kind;
  n.inputs.reserve(inputs.size());
  for (const Var& in : inputs) n.inputs.push_back(in.id);

  bool grad = false;
  for (const Var& in : inputs) grad = grad || requires_grad(in.id);

  auto arity = [&](std::size_t want) {
    if (inputs.size() != want) {
      shape_fail(kind, "expected " + std::to_string(want) + " inputs, got " + std::to_string(inputs.size()));
    }
  };

  switch (kind) {
    case OpKind::kLeaf:
      throw Error("forward_eval: use Tape::leaf for leaves");

    case OpKind::kAdd:
    case OpKind::kSub:
    case OpKind::kMul: {
      arity(2);
      const Tensor& a = value(inputs[0].id);
      const Tensor& b = value(inputs[1].id);
      require_same_shape(kind, a, b);
      Tensor out = Tensor::zeros(a.shape, grad);
      const int m = a.size();
      for (int i = 0; i < m; ++i) {
        const double x = a.data[static_cast<std::size_t>(i)];
        const double y = b.data[static_cast<std::size_t>(i)];
        out.data[static_cast<std::size_t>(i)] =
            kind == OpKind::kAdd ? x + y : (kind == OpKind::kSub ? x - y : x * y);
      }
      n.value = std::move(out);
      break;
    }

    case OpKind::kScale: {
      arity(1);
      const Tensor& a = value(inputs[0].id);
      Tensor out = a;
      out.requires_grad = grad;
      for (double& v : out.data) v *= attrs.factor;
      n.value = std::move(out);
      break;
    }

    case OpKind::kScalarMul:
    case OpKind::kDivScalar: {
      arity(2);
      const Tensor& a = value(inputs[0].id);
      const Tensor& s = value(inputs[1].id);
      require_scalar(kind, s, "second input");
      const double k = kind == OpKind::kScalarMul ? s.data[0] : 1.0 / s.data[0];
      Tensor out = a;
      out.requires_grad = grad;
      for (double& v : out.data) v *= k;
      n.value = std::move(out);
      break;
    }

    case OpKind::kMatMul: {
      arity(2);
      const Tensor& m = value(inputs[0].id);
      const Tensor& x = value(inputs[1].id);
      if (m.rank() != 2) shape_fail(kind, "left input must be a matrix, got " + m.shape_str());
      const int r = m.shape[0];
      const int c = m.shape[1];
      if (x.rank() == 1) {
        if (x.shape[0] != c) {
          shape_fail(kind, "incompatible shapes " + m.shape_str() + " and " + x.shape_str());
        }
        Tensor out = Tensor::zeros({r}, grad);
        for (int i = 0; i < r; ++i) {
          const double* mrow = m.data.data() + static_cast<std::size_t>(i) * c;
          double acc = 0.0;
          for (int j = 0; j < c; ++j) acc += mrow[j] * x.data[static_cast<std::size_t>(j)];
          out.data[static_cast<std::size_t>(i)] = acc;
        }
        n.value = std::move(out);
      } else if (x.rank() == 2) {
        if (x.shape[0] != c) {
          shape_fail(kind, "incompatible shapes " + m.shape_str() + " and " + x.shape_str());
        }
        const int p = x.shape[1];
        Tensor out = Tensor::zeros({r, p}, grad);
        for (int i = 0; i < r; ++i) {
          for (int k = 0; k < c; ++k) {
            const double a = m.data[static_cast<std::size_t>(i) * c + k];
            if (a == 0.0) continue;
            const double* brow = x.data.data() + static_cast<std::size_t>(k) * p;
            double* orow = out.data.data() + static_cast<std::size_t>(i) * p;
            for (int j = 0; j < p; ++j) orow[j] += a * brow[j];
          }
        }
        n.value = std::move(out);
      } else {
        shape_fail(kind, "right input must be rank 1 or 2, got " + x.shape_str());
      }
      break;
    }

    case OpKind::kTanh:
    case OpKind::kSigmoid: {
      arity(1);
      const Tensor& a = value(inputs[0].id);
      Tensor out = a;
      out.requires_grad = grad;
      for (double& v : out.data) v = kind == OpKind::kTanh ? std::tanh(v) : stable_sigmoid(v);
      n.value = std::move(out);
      break;
    }

    case OpKind::kSoftmax:
    case OpKind::kLogSoftmax: {
      arity(1);
      const Tensor& a = value(inputs[0].id);
      require_vector(kind, a);
      const int m = a.size();
      double mx = a.data[0];
      for (int i = 1; i < m; ++i) mx = std::max(mx, a.data[static_cast<std::size_t>(i)]);
      Tensor out = Tensor::zeros(a.shape, grad);
      double z = 0.0;
      for (int i = 0; i < m; ++i) {
        const double e = std::exp(a.data[static_cast<std::size_t>(i)] - mx);
        out.data[static_cast<std::size_t>(i)] = e;
        z += e;
      }
      if (kind == OpKind::kSoftmax) {
        const double inv = 1.0 / z;
        for (double& v : out.data) v *= inv;
      } else {
        const double lse = mx + std::log(z);
        for (int i = 0; i < m; ++i) {
          out.data[static_cast<std::size_t>(i)] = a.data[static_cast<std::size_t>(i)] - lse;
        }
      }
      n.value = std::move(out);
      break;
    }

    case OpKind::kConcat: {
      if (inputs.empty()) shape_fail(kind, "needs at least one input");
      int total = 0;
      for (const Var& in : inputs) {
        const Tensor& t = value(in.id);
        require_vector(kind, t);
        total += t.size();
      }
      Tensor out = Tensor::zeros({total}, grad);
      int at = 0;
      for (const Var& in : inputs) {
        const Tensor& t = value(in.id);
        std::copy(t.data.begin(), t.data.end(), out.data.begin() + at);
        at += t.size();
      }
      n.value = std::move(out);
      break;
    }

    case OpKind::kDot: {
      arity(2);
      const Tensor& a = value(inputs[0].id);
      const Tensor& b = value(inputs[1].id);
      require_vector(kind, a);
      require_same_shape(kind, a, b);
      double acc = 0.0;
      for (int i = 0; i < a.size(); ++i) {
        acc += a.data[static_cast<std::size_t>(i)] * b.data[static_cast<std::size_t>(i)];
      }
      n.value = Tensor::scalar(acc, grad);
      break;
    }

    case OpKind::kSum: {
      arity(1);
      const Tensor& a = value(inputs[0].id);
      double acc = std::accumulate(a.data.begin(), a.data.end(), 0.0);
      n.value = Tensor::scalar(acc, grad);
      break;
    }

    case OpKind::kSlice: {
      arity(1);
      const Tensor& a = value(inputs[0].id);
      require_vector(kind, a);
      if (attrs.offset < 0 || attrs.length <= 0 || attrs.offset + attrs.length > a.size()) {
        shape_fail(kind, "window [" + std::to_string(attrs.offset) + "," +
                             std::to_string(attrs.offset + attrs.length) + ") out of range for " +
                             a.shape_str());
      }
      Tensor out = Tensor::zeros({attrs.length}, grad);
      std::copy(a.data.begin() + attrs.offset, a.data.begin() + attrs.offset + attrs.length,
                out.data.begin());
      n.value = std::move(out);
      break;
    }

    case OpKind::kRow: {
      arity(1);
      const Tensor& m = value(inputs[0].id);
      if (m.rank() != 2) shape_fail(kind, "expected a matrix, got " + m.shape_str());
      if (attrs.row < 0 || attrs.row >= m.shape[0]) {
        shape_fail(kind, "row " + std::to_string(attrs.row) + " out of range for " + m.shape_str());
      }
      const int c = m.shape[1];
      Tensor out = Tensor::zeros({c}, grad);
      const double* src = m.data.data() + static_cast<std::size_t>(attrs.row) * c;
      std::copy(src, src + c, out.data.begin());
      n.value = std::move(out);
      break;
    }

    case OpKind::kGather: {
      arity(1);
      const Tensor& a = value(inputs[0].id);
      require_vector(kind, a);
      if (attrs.indices.empty()) shape_fail(kind, "empty index list");
      Tensor out = Tensor::zeros({static_cast<int>(attrs.indices.size())}, grad);
      for (std::size_t i = 0; i < attrs.indices.size(); ++i) {
        const int idx = attrs.indices[i];
        if (idx < 0 || idx >= a.size()) {
          shape_fail(kind, "index " + std::to_string(idx) + " out of range for " + a.shape_str());
        }
        out.data[i] = a.data[static_cast<std::size_t>(idx)];
      }
      n.value = std::move(out);
      break;
    }
  }

  n.attrs = std::move(attrs);
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<NodeId>(nodes_.size() - 1)};
}

void Tape::backward_node(NodeId id, const Tensor& g, Gradients& grads) const {
  const Node& n = node(id);
  auto in_value = [&](std::size_t i) -> const Tensor& { return value(n.inputs[i]); };
  auto in_grad = [&](std::size_t i) -> Tensor& {
    return grads.slot(n.inputs[i], in_value(i).shape);
  };
  auto wants = [&](std::size_t i) { return requires_grad(n.inputs[i]); };

  switch (n.kind) {
    case OpKind::kLeaf:
      break;

    case OpKind::kAdd:
      for (std::size_t k = 0; k < 2; ++k) {
        if (!wants(k)) continue;
        Tensor& gi = in_grad(k);
        for (int i = 0; i < g.size(); ++i) gi.data[static_cast<std::size_t>(i)] += g.data[static_cast<std::size_t>(i)];
      }
      break;

    case OpKind::kSub:
      if (wants(0)) {
        Tensor& ga = in_grad(0);
        for (int i = 0; i < g.size(); ++i) ga.data[static_cast<std::size_t>(i)] += g.data[static_cast<std::size_t>(i)];
      }
      if (wants(1)) {
        Tensor& gb = in_grad(1);
        for (int i = 0; i < g.size(); ++i) gb.data[static_cast<std::size_t>(i)] -= g.data[static_cast<std::size_t>(i)];
      }
      break;

    case OpKind::kMul: {
      const Tensor& a = in_value(0);
      const Tensor& b = in_value(1);
      if (wants(0)) {
        Tensor& ga = in_grad(0);
        for (int i = 0; i < g.size(); ++i) {
          ga.data[static_cast<std::size_t>(i)] +=
              g.data[static_cast<std::size_t>(i)] * b.data[static_cast<std::size_t>(i)];
        }
      }
      if (wants(1)) {
        Tensor& gb = in_grad(1);
        for (int i = 0; i < g.size(); ++i) {
          gb.data[static_cast<std::size_t>(i)] +=
              g.data[static_cast<std::size_t>(i)] * a.data[static_cast<std::size_t>(i)];
        }
      }
      break;
    }

    case OpKind::kScale:
      if (wants(0)) {
        Tensor& ga = in_grad(0);
        for (int i = 0; i < g.size(); ++i) {
          ga.data[static_cast<std::size_t>(i)] += n.attrs.factor * g.data[static_cast<std::size_t>(i)];
        }
      }
      break;

    case OpKind::kScalarMul: {
      const Tensor& a = in_value(0);
      const double s = in_value(1).data[0];
      if (wants(0)) {
        Tensor& ga = in_grad(0);
        for (int i = 0; i < g.size(); ++i) ga.data[static_cast<std::size_t>(i)] += s * g.data[static_cast<std::size_t>(i)];
      }
      if (wants(1)) {
        double acc = 0.0;
        for (int i = 0; i < g.size(); ++i) {
          acc += g.data[static_cast<std::size_t>(i)] * a.data[static_cast<std::size_t>(i)];
        }
        in_grad(1).data[0] += acc;
      }
      break;
    }

    case OpKind::kDivScalar: {
      const Tensor& a = in_value(0);
      const double s = in_value(1).data[0];
      if (wants(0)) {
        Tensor& ga = in_grad(0);
        const double inv = 1.0 / s;
        for (int i = 0; i < g.size(); ++i) ga.data[static_cast<std::size_t>(i)] += inv * g.data[static_cast<std::size_t>(i)];
      }
      if (wants(1)) {
        double acc = 0.0;
        for (int i = 0; i < g.size(); ++i) {
          acc += g.data[static_cast<std::size_t>(i)] * a.data[static_cast<std::size_t>(i)];
        }
        in_grad(1).data[0] -= acc / (s * s);
      }
      break;
    }

    case OpKind::kMatMul: {
      const Tensor& m = in_value(0);
      const Tensor& x = in_value(1);
      const int r = m.shape[0];
      const int c = m.shape[1];
      if (x.rank() == 1) {
        if (wants(0)) {
          Tensor& gm = in_grad(0);
          for (int i = 0; i < r; ++i) {
            const double gi = g.data[static_cast<std::size_t>(i)];
            if (gi == 0.0) continue;
            double* grow = gm.data.data() + static_cast<std::size_t>(i) * c;
            for (int j = 0; j < c; ++j) grow[j] += gi * x.data[static_cast<std::size_t>(j)];
          }
        }
        if (wants(1)) {
          Tensor& gx = in_grad(1);
          for (int i = 0; i < r; ++i) {
            const double gi = g.data[static_cast<std::size_t>(i)];
            if (gi == 0.0) continue;
            const double* mrow = m.data.data() + static_cast<std::size_t>(i) * c;
            for (int j = 0; j < c; ++j) gx.data[static_cast<std::size_t>(j)] += gi * mrow[j];
          }
        }
      } else {
        const int p = x.shape[1];
        if (wants(0)) {
          Tensor& gm = in_grad(0);
          for (int i = 0; i < r; ++i) {
            for (int k = 0; k < c; ++k) {
              const double* grow = g.data.data() + static_cast<std::size_t>(i) * p;
              const double* brow = x.data.data() + static_cast<std::size_t>(k) * p;
              double acc = 0.0;
              for (int j = 0; j < p; ++j) acc += grow[j] * brow[j];
              gm.data[static_cast<std::size_t>(i) * c + k] += acc;
            }
          }
        }
        if (wants(1)) {
          Tensor& gx = in_grad(1);
          for (int k = 0; k < c; ++k) {
            for (int i = 0; i < r; ++i) {
              const double a = m.data[static_cast<std::size_t>(i) * c + k];
              if (a == 0.0) continue;
              const double* grow = g.data.data() + static_cast<std::size_t>(i) * p;
              double* xrow = gx.data.data() + static_cast<std::size_t>(k) * p;
              for (int j = 0; j < p; ++j) xrow[j] += a * grow[j];
            }
          }
        }
      }
      break;
    }

    case OpKind::kTanh: {
      if (!wants(0)) break;
      Tensor& ga = in_grad(0);
      for (int i = 0; i < g.size(); ++i) {
        const double y = n.value.data[static_cast<std::size_t>(i)];
        ga.data[static_cast<std::size_t>(i)] += (1.0 - y * y) * g.data[static_cast<std::size_t>(i)];
      }
      break;
    }

    case OpKind::kSigmoid: {
      if (!wants(0)) break;
      Tensor& ga = in_grad(0);
      for (int i = 0; i < g.size(); ++i) {
        const double y = n.value.data[static_cast<std::size_t>(i)];
        ga.data[static_cast<std::size_t>(i)] += y * (1.0 - y) * g.data[static_cast<std::size_t>(i)];
      }
      break;
    }

    case OpKind::kSoftmax: {
      if (!wants(0)) break;
      Tensor& ga = in_grad(0);
      double dotgp = 0.0;
      for (int i = 0; i < g.size(); ++i) {
        dotgp += g.data[static_cast<std::size_t>(i)] * n.value.data[static_cast<std::size_t>(i)];
      }
      for (int i = 0; i < g.size(); ++i) {
        const double p = n.value.data[static_cast<std::size_t>(i)];
        ga.data[static_cast<std::size_t>(i)] += p * (g.data[static_cast<std::size_t>(i)] - dotgp);
      }
      break;
    }

    case OpKind::kLogSoftmax: {
      if (!wants(0)) break;
      Tensor& ga = in_grad(0);
      double gsum = 0.0;
      for (int i = 0; i < g.size(); ++i) gsum += g.data[static_cast<std::size_t>(i)];
      for (int i = 0; i < g.size(); ++i) {
        const double p = std::exp(n.value.data[static_cast<std::size_t>(i)]);
        ga.data[static_cast<std::size_t>(i)] += g.data[static_cast<std::size_t>(i)] - p * gsum;
      }
      break;
    }

    case OpKind::kConcat: {
      int at = 0;
      for (std::size_t k = 0; k < n.inputs.size(); ++k) {
        const int len = in_value(k).size();
        if (wants(k)) {
          Tensor& gk = in_grad(k);
          for (int i = 0; i < len; ++i) {
            gk.data[static_cast<std::size_t>(i)] += g.data[static_cast<std::size_t>(at + i)];
          }
        }
        at += len;
      }
      break;
    }

    case OpKind::kDot: {
      const Tensor& a = in_value(0);
      const Tensor& b = in_value(1);
      const double g0 = g.data[0];
      if (wants(0)) {
        Tensor& ga = in_grad(0);
        for (int i = 0; i < a.size(); ++i) ga.data[static_cast<std::size_t>(i)] += g0 * b.data[static_cast<std::size_t>(i)];
      }
      if (wants(1)) {
        Tensor& gb = in_grad(1);
        for (int i = 0; i < b.size(); ++i) gb.data[static_cast<std::size_t>(i)] += g0 * a.data[static_cast<std::size_t>(i)];
      }
      break;
    }

    case OpKind::kSum: {
      if (!wants(0)) break;
      Tensor& ga = in_grad(0);
      const double g0 = g.data[0];
      for (double& v : ga.data) v += g0;
      break;
    }

    case OpKind::kSlice: {
      if (!wants(0)) break;
      Tensor& ga = in_grad(0);
      for (int i = 0; i < n.attrs.length; ++i) {
        ga.data[static_cast<std::size_t>(n.attrs.offset + i)] += g.data[static_cast<std::size_t>(i)];
      }
      break;
    }

    case OpKind::kRow: {
      if (!wants(0)) break;
      Tensor& gm = in_grad(0);
      const int c = in_value(0).shape[1];
      double* grow = gm.data.data() + static_cast<std::size_t>(n.attrs.row) * c;
      for (int j = 0; j < c; ++j) grow[j] += g.data[static_cast<std::size_t>(j)];
      break;
    }

    case OpKind::kGather: {
      if (!wants(0)) break;
      Tensor& ga = in_grad(0);
      for (std::size_t i = 0; i < n.attrs.indices.size(); ++i) {
        ga.data[static_cast<std::size_t>(n.attrs.indices[i])] += g.data[i];
      }
      break;
    }
  }
}

Gradients Tape::backward(Var loss) const {
  if (loss.tape != this) throw Error("backward: loss from a different tape");
  const Tensor& lv = value(loss.id);
  if (lv.size() != 1) {
    throw ShapeError("backward: loss must be a scalar, got " + lv.shape_str());
  }

  Gradients grads(nodes_.size());

  if (!lv.requires_grad) {
    std::fprintf(stderr,
                 "warning: backward on a loss detached from all gradient-requiring inputs; "
                 "gradients are zero\n");
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const Node& n = nodes_[i];
      if (n.kind == OpKind::kLeaf && n.value.requires_grad) {
        grads.slot(static_cast<NodeId>(i), n.value.shape);
      }
    }
    return grads;
  }

  // Mark the grad-requiring subgraph under the loss.
  std::vector<char> needed(nodes_.size(), 0);
  needed[static_cast<std::size_t>(loss.id)] = 1;
  for (NodeId id = loss.id; id >= 0; --id) {
    if (!needed[static_cast<std::size_t>(id)]) continue;
    for (NodeId in : nodes_[static_cast<std::size_t>(id)].inputs) {
      if (nodes_[static_cast<std::size_t>(in)].value.requires_grad) needed[static_cast<std::size_t>(in)] = 1;
    }
  }

  grads.slot(loss.id, lv.shape).data[0] = 1.0;
  for (NodeId id = loss.id; id >= 0; --id) {
    if (!needed[static_cast<std::size_t>(id)] || !grads.has(id)) continue;
    backward_node(id, grads.at(id), grads);
  }

  // Every requires-grad leaf gets an entry even when unreachable.
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    if (n.kind == OpKind::kLeaf && n.value.requires_grad) {
      grads.slot(static_cast<NodeId>(i), n.value.shape);
    }
  }
  return grads;
}

namespace {

Tape& tape_of(std::span<const Var> vars, const char* op) {
  if (vars.empty() || !vars[0].valid()) throw Error(std::string(op) + ": invalid input var");
  return *vars[0].tape;
}

}  // namespace

Var add(Var a, Var b) { return tape_of({{a, b}}, "add").forward_eval(OpKind::kAdd, {{a, b}}); }
Var sub(Var a, Var b) { return tape_of({{a, b}}, "sub").forward_eval(OpKind::kSub, {{a, b}}); }
Var mul(Var a, Var b) { return tape_of({{a, b}}, "mul").forward_eval(OpKind::kMul, {{a, b}}); }

Var scale(Var a, double factor) {
  OpAttrs attrs;
  attrs.factor = factor;
  return tape_of({{a}}, "scale").forward_eval(OpKind::kScale, {{a}}, std::move(attrs));
}

Var scalar_mul(Var t, Var s) {
  return tape_of({{t, s}}, "scalar_mul").forward_eval(OpKind::kScalarMul, {{t, s}});
}

Var div_scalar(Var t, Var s) {
  return tape_of({{t, s}}, "div_scalar").forward_eval(OpKind::kDivScalar, {{t, s}});
}

Var matmul(Var m, Var x) { return tape_of({{m, x}}, "matmul").forward_eval(OpKind::kMatMul, {{m, x}}); }
Var tanh(Var a) { return tape_of({{a}}, "tanh").forward_eval(OpKind::kTanh, {{a}}); }
Var sigmoid(Var a) { return tape_of({{a}}, "sigmoid").forward_eval(OpKind::kSigmoid, {{a}}); }
Var softmax(Var a) { return tape_of({{a}}, "softmax").forward_eval(OpKind::kSoftmax, {{a}}); }
Var log_softmax(Var a) { return tape_of({{a}}, "log_softmax").forward_eval(OpKind::kLogSoftmax, {{a}}); }

Var concat(std::span<const Var> parts) {
  return tape_of(parts, "concat").forward_eval(OpKind::kConcat, parts);
}

Var concat(std::initializer_list<Var> parts) {
  return concat(std::span<const Var>(parts.begin(), parts.size()));
}

Var dot(Var a, Var b) { return tape_of({{a, b}}, "dot").forward_eval(OpKind::kDot, {{a, b}}); }
Var sum(Var a) { return tape_of({{a}}, "sum").forward_eval(OpKind::kSum, {{a}}); }

Var slice(Var a, int offset, int length) {
  OpAttrs attrs;
  attrs.offset = offset;
  attrs.length = length;
  return tape_of({{a}}, "slice").forward_eval(OpKind::kSlice, {{a}}, std::move(attrs));
}

Var row(Var m, int r) {
  OpAttrs attrs;
  attrs.row = r;
  return tape_of({{m}}, "row").forward_eval(OpKind::kRow, {{m}}, std::move(attrs));
}

Var gather(Var v, std::span<const int> indices) {
  OpAttrs attrs;
  attrs.indices.assign(indices.begin(), indices.end());
  return tape_of({{v}}, "gather").forward_eval(OpKind::kGather, {{v}}, std::move(attrs));
}

Var weighted_sum(Var weights, std::span<const Var> vectors) {
  const Tensor& w = weights.value();
  if (w.rank() != 1 || w.size() != static_cast<int>(vectors.size())) {
    throw ShapeError("weighted_sum: " + std::to_string(vectors.size()) + " vectors but weights " +
                     w.shape_str());
  }
  Var acc = scalar_mul(vectors[0], slice(weights, 0, 1));
  for (std::size_t i = 1; i < vectors.size(); ++i) {
    acc = add(acc, scalar_mul(vectors[i], slice(weights, static_cast<int>(i), 1)));
  }
  return acc;
}

double finite_diff_check(const TensorFn& f, const Tensor& point, double eps,
                         std::span<const int> coords) {
  if (!(eps >= 1e-6 && eps <= 1e-3)) {
    throw Error("finite_diff_check: eps must be in [1e-6, 1e-3]");
  }

  Tape tape;
  Tensor p = point;
  p.requires_grad = true;
  Var x = tape.leaf(std::move(p));
  Var y = f(tape, x);
  if (y.value().size() != 1) {
    throw ShapeError("finite_diff_check: f must be scalar-valued, got " + y.value().shape_str());
  }
  Gradients grads = tape.backward(y);
  const Tensor& analytic = grads.at(x);

  auto eval_at = [&](int coord, double delta) {
    Tape t;
    Tensor q = point;
    q.requires_grad = false;
    q.data[static_cast<std::size_t>(coord)] += delta;
    Var out = f(t, t.leaf(std::move(q)));
    const double v = out.value().data[0];
    if (!std::isfinite(v)) {
      throw NumericError("finite_diff_check: f is non-finite at a perturbed point");
    }
    return v;
  };

  double max_err = 0.0;
  for (int coord : coords) {
    if (coord < 0 || coord >= point.size()) {
      throw Error("finite_diff_check: coordinate " + std::to_string(coord) + " out of range");
    }
    const double cd = (eval_at(coord, eps) - eval_at(coord, -eps)) / (2.0 * eps);
    const double a = analytic.data[static_cast<std::size_t>(coord)];
    const double denom = std::max({std::abs(a), std::abs(cd), 1e-8});
    max_err = std::max(max_err, std::abs(a - cd) / denom);
  }
  return max_err;
}

double finite_diff_check(const TensorFn& f, const Tensor& point, double eps) {
  std::vector<int> coords(static_cast<std::size_t>(point.size()));
  std::iota(coords.begin(), coords.end(), 0);
  return finite_diff_check(f, point, eps, coords);
}

}  // namespace t2t::ad
