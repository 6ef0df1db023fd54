/*
 * Copyright 2026 The attrimix Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Dense reverse-mode automatic differentiation over row-major Eigen matrices.
//
// A BasicTape records every operation applied to BasicVar handles. Values are
// computed eagerly; BasicTape::backward walks the nodes in reverse creation
// order and accumulates adjoints by summation over every use of a node.
// A tape is meant to be built for a single minibatch and then discarded.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "attrimix/errors.hpp"

namespace attrimix {

template <typename Scalar>
using BasicTensor =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Tensor = BasicTensor<double>;
using Index = Eigen::Index;

template <typename Derived>
std::string shape_string(const Eigen::DenseBase<Derived>& m) {
  std::ostringstream out;
  out << "[" << m.rows() << "x" << m.cols() << "]";
  return out.str();
}

template <typename Scalar>
struct BasicParameter {
  std::string name;
  BasicTensor<Scalar> value;
  bool trainable = true;
};

using Parameter = BasicParameter<double>;

template <typename Scalar>
using BasicGradients = std::map<std::string, BasicTensor<Scalar>>;

using Gradients = BasicGradients<double>;

template <typename Scalar>
class BasicTape;

// Lightweight handle to a node of a tape. Copyable; only valid while the
// owning tape is alive.
template <typename Scalar>
class BasicVar {
 public:
  using TensorType = BasicTensor<Scalar>;

  BasicVar() = default;
  BasicVar(BasicTape<Scalar>* tape, std::size_t id) : tape_(tape), id_(id) {}

  const TensorType& value() const { return tape_->value(*this); }
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  bool requires_grad() const { return tape_->requires_grad(*this); }
  BasicTape<Scalar>& tape() const { return *tape_; }
  std::size_t id() const { return id_; }

 private:
  BasicTape<Scalar>* tape_ = nullptr;
  std::size_t id_ = 0;
};

template <typename Scalar>
class BasicTape {
 public:
  using TensorType = BasicTensor<Scalar>;
  using Var = BasicVar<Scalar>;
  using Backward = std::function<void(BasicTape&, const TensorType&)>;

  BasicTape() = default;
  BasicTape(const BasicTape&) = delete;
  BasicTape& operator=(const BasicTape&) = delete;

  Var constant(TensorType value) {
    return push(std::move(value), false, {}, nullptr);
  }

  // Leaf that receives an adjoint.
  Var variable(TensorType value) {
    return push(std::move(value), true, {}, nullptr);
  }

  // Leaf bound to a named parameter; its adjoint is reported by gradients().
  Var parameter(const BasicParameter<Scalar>& p) {
    Var v = push(p.value, p.trainable, {}, nullptr);
    if (p.trainable) bindings_.emplace_back(p.name, v.id());
    return v;
  }

  // Appends an operation node. The node requires a gradient iff one of its
  // inputs does; `backward` receives the node's adjoint.
  Var record(TensorType value, std::initializer_list<Var> inputs,
             Backward backward) {
    bool needs = false;
    std::vector<std::size_t> ids;
    ids.reserve(inputs.size());
    for (const Var& in : inputs) {
      check_owner(in);
      needs = needs || requires_grad(in);
      ids.push_back(in.id());
    }
    return push(std::move(value), needs, std::move(ids),
                needs ? std::move(backward) : Backward{});
  }

  Var record(TensorType value, std::span<const Var> inputs,
             Backward backward) {
    bool needs = false;
    std::vector<std::size_t> ids;
    ids.reserve(inputs.size());
    for (const Var& in : inputs) {
      check_owner(in);
      needs = needs || requires_grad(in);
      ids.push_back(in.id());
    }
    return push(std::move(value), needs, std::move(ids),
                needs ? std::move(backward) : Backward{});
  }

  const TensorType& value(const Var& v) const { return nodes_[v.id()].value; }
  bool requires_grad(const Var& v) const {
    return nodes_[v.id()].requires_grad;
  }

  // Adds `contribution` to the adjoint of `v` (no-op when v needs no grad).
  template <typename Derived>
  void accumulate(const Var& v, const Eigen::MatrixBase<Derived>& contribution) {
    Node& n = nodes_[v.id()];
    if (!n.requires_grad) return;
    if (!n.has_grad) {
      n.grad = contribution;
      n.has_grad = true;
    } else {
      n.grad += contribution;
    }
  }

  // Adjoint of v after backward(); zero if v was unreachable from the loss.
  TensorType grad(const Var& v) const {
    const Node& n = nodes_[v.id()];
    if (n.has_grad) return n.grad;
    return TensorType::Zero(n.value.rows(), n.value.cols());
  }

  void backward(const Var& loss) {
    check_owner(loss);
    const Node& root = nodes_[loss.id()];
    if (root.value.rows() != 1 || root.value.cols() != 1) {
      throw ContractError("backward() needs a scalar loss, got " +
                          shape_string(root.value));
    }
    if (backward_done_) {
      throw ContractError("backward() already ran on this tape");
    }
    backward_done_ = true;
    accumulate(loss, TensorType::Ones(1, 1));
    for (std::size_t id = loss.id() + 1; id-- > 0;) {
      Node& n = nodes_[id];
      if (!n.has_grad || !n.backward) continue;
      n.backward(*this, n.grad);
    }
  }

  // Adjoints of every trainable parameter bound to this tape.
  BasicGradients<Scalar> gradients() const {
    BasicGradients<Scalar> out;
    for (const auto& [name, id] : bindings_) {
      const Node& n = nodes_[id];
      TensorType g = n.has_grad
                         ? n.grad
                         : TensorType::Zero(n.value.rows(), n.value.cols());
      auto it = out.find(name);
      if (it == out.end()) {
        out.emplace(name, std::move(g));
      } else {
        it->second += g;
      }
    }
    return out;
  }

  std::size_t size() const { return nodes_.size(); }
  const std::vector<std::size_t>& inputs(const Var& v) const {
    return nodes_[v.id()].inputs;
  }

 private:
  struct Node {
    TensorType value;
    TensorType grad;
    bool requires_grad = false;
    bool has_grad = false;
    std::vector<std::size_t> inputs;
    Backward backward;
  };

  Var push(TensorType value, bool requires_grad, std::vector<std::size_t> ids,
           Backward backward) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    n.inputs = std::move(ids);
    n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return Var(this, nodes_.size() - 1);
  }

  void check_owner(const Var& v) const {
    if (&v.tape() != this || v.id() >= nodes_.size()) {
      throw ContractError("variable does not belong to this tape");
    }
  }

  std::vector<Node> nodes_;
  std::vector<std::pair<std::string, std::size_t>> bindings_;
  bool backward_done_ = false;
};

using Tape = BasicTape<double>;
using Var = BasicVar<double>;

namespace detail {

template <typename Scalar>
void require_same_shape(const char* op, const BasicVar<Scalar>& a,
                        const BasicVar<Scalar>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": shapes " +
                         shape_string(a.value()) + " and " +
                         shape_string(b.value()) + " differ");
  }
}

template <typename Scalar, typename ValueFn, typename DerivFn>
BasicVar<Scalar> unary(const BasicVar<Scalar>& a, ValueFn value_fn,
                       DerivFn deriv_fn) {
  using T = BasicTensor<Scalar>;
  T out = a.value().unaryExpr(value_fn);
  return a.tape().record(
      std::move(out), {a}, [a, deriv_fn](BasicTape<Scalar>& t, const T& g) {
        t.accumulate(a, g.cwiseProduct(a.value().unaryExpr(deriv_fn)));
      });
}

}  // namespace detail

// a(m x k) * b(k x p)
template <typename Scalar>
BasicVar<Scalar> matmul(const BasicVar<Scalar>& a, const BasicVar<Scalar>& b) {
  using T = BasicTensor<Scalar>;
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions of " +
                         shape_string(a.value()) + " and " +
                         shape_string(b.value()) + " disagree");
  }
  T out = a.value() * b.value();
  return a.tape().record(std::move(out), {a, b},
                         [a, b](BasicTape<Scalar>& t, const T& g) {
                           if (a.requires_grad())
                             t.accumulate(a, g * b.value().transpose());
                           if (b.requires_grad())
                             t.accumulate(b, a.value().transpose() * g);
                         });
}

// a(m x k) * b(p x k)^T, the natural layout for x * W^T.
template <typename Scalar>
BasicVar<Scalar> matmul_nt(const BasicVar<Scalar>& a,
                           const BasicVar<Scalar>& b) {
  using T = BasicTensor<Scalar>;
  if (a.cols() != b.cols()) {
    throw DimensionError("matmul_nt: inner dimensions of " +
                         shape_string(a.value()) + " and " +
                         shape_string(b.value()) + "^T disagree");
  }
  T out = a.value() * b.value().transpose();
  return a.tape().record(std::move(out), {a, b},
                         [a, b](BasicTape<Scalar>& t, const T& g) {
                           if (a.requires_grad()) t.accumulate(a, g * b.value());
                           if (b.requires_grad())
                             t.accumulate(b, g.transpose() * a.value());
                         });
}

template <typename Scalar>
BasicVar<Scalar> add(const BasicVar<Scalar>& a, const BasicVar<Scalar>& b) {
  using T = BasicTensor<Scalar>;
  detail::require_same_shape("add", a, b);
  T out = a.value() + b.value();
  return a.tape().record(std::move(out), {a, b},
                         [a, b](BasicTape<Scalar>& t, const T& g) {
                           t.accumulate(a, g);
                           t.accumulate(b, g);
                         });
}

template <typename Scalar>
BasicVar<Scalar> sub(const BasicVar<Scalar>& a, const BasicVar<Scalar>& b) {
  using T = BasicTensor<Scalar>;
  detail::require_same_shape("sub", a, b);
  T out = a.value() - b.value();
  return a.tape().record(std::move(out), {a, b},
                         [a, b](BasicTape<Scalar>& t, const T& g) {
                           t.accumulate(a, g);
                           t.accumulate(b, -g);
                         });
}

// Elementwise product.
template <typename Scalar>
BasicVar<Scalar> mul(const BasicVar<Scalar>& a, const BasicVar<Scalar>& b) {
  using T = BasicTensor<Scalar>;
  detail::require_same_shape("mul", a, b);
  T out = a.value().cwiseProduct(b.value());
  return a.tape().record(std::move(out), {a, b},
                         [a, b](BasicTape<Scalar>& t, const T& g) {
                           if (a.requires_grad())
                             t.accumulate(a, g.cwiseProduct(b.value()));
                           if (b.requires_grad())
                             t.accumulate(b, g.cwiseProduct(a.value()));
                         });
}

template <typename Scalar>
BasicVar<Scalar> scale(const BasicVar<Scalar>& a, Scalar factor) {
  using T = BasicTensor<Scalar>;
  T out = a.value() * factor;
  return a.tape().record(std::move(out), {a},
                         [a, factor](BasicTape<Scalar>& t, const T& g) {
                           t.accumulate(a, g * factor);
                         });
}

// a(m x n) + row(1 x n), row broadcast over the m rows.
template <typename Scalar>
BasicVar<Scalar> add_row(const BasicVar<Scalar>& a,
                         const BasicVar<Scalar>& row) {
  using T = BasicTensor<Scalar>;
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw DimensionError("add_row: cannot broadcast " +
                         shape_string(row.value()) + " over " +
                         shape_string(a.value()));
  }
  T out = a.value().rowwise() + row.value().row(0);
  return a.tape().record(std::move(out), {a, row},
                         [a, row](BasicTape<Scalar>& t, const T& g) {
                           t.accumulate(a, g);
                           if (row.requires_grad())
                             t.accumulate(row, g.colwise().sum());
                         });
}

template <typename Scalar>
BasicVar<Scalar> tanh(const BasicVar<Scalar>& a) {
  using T = BasicTensor<Scalar>;
  T out = a.value().array().tanh().matrix();
  const std::size_t self = a.tape().size();
  return a.tape().record(
      std::move(out), {a}, [a, self](BasicTape<Scalar>& t, const T& g) {
        const T& y = t.value(BasicVar<Scalar>(&t, self));
        t.accumulate(a, (g.array() * (Scalar(1) - y.array().square())).matrix());
      });
}

// Subgradient at 0 is 0.
template <typename Scalar>
BasicVar<Scalar> abs(const BasicVar<Scalar>& a) {
  return detail::unary(
      a, [](Scalar x) { return std::abs(x); },
      [](Scalar x) {
        return x > Scalar(0) ? Scalar(1) : (x < Scalar(0) ? Scalar(-1) : Scalar(0));
      });
}

template <typename Scalar>
BasicVar<Scalar> relu(const BasicVar<Scalar>& a) {
  return detail::unary(
      // NaN passes through so divergence stays visible.
      a, [](Scalar x) { return x < Scalar(0) ? Scalar(0) : x; },
      [](Scalar x) { return x > Scalar(0) ? Scalar(1) : Scalar(0); });
}

template <typename Scalar>
BasicVar<Scalar> square(const BasicVar<Scalar>& a) {
  return detail::unary(
      a, [](Scalar x) { return x * x; }, [](Scalar x) { return Scalar(2) * x; });
}

template <typename Scalar>
BasicVar<Scalar> log(const BasicVar<Scalar>& a) {
  return detail::unary(
      a, [](Scalar x) { return std::log(x); },
      [](Scalar x) { return Scalar(1) / x; });
}

// Gradient passes where lo <= x <= hi and is zero outside.
template <typename Scalar>
BasicVar<Scalar> clamp(const BasicVar<Scalar>& a, Scalar lo, Scalar hi) {
  return detail::unary(
      a, [lo, hi](Scalar x) { return std::clamp(x, lo, hi); },
      [lo, hi](Scalar x) {
        return (x >= lo && x <= hi) ? Scalar(1) : Scalar(0);
      });
}

// Forward identity; contributes no adjoint to its input.
template <typename Scalar>
BasicVar<Scalar> stop_gradient(const BasicVar<Scalar>& a) {
  return a.tape().constant(a.value());
}

template <typename Scalar>
BasicVar<Scalar> transpose(const BasicVar<Scalar>& a) {
  using T = BasicTensor<Scalar>;
  T out = a.value().transpose();
  return a.tape().record(std::move(out), {a},
                         [a](BasicTape<Scalar>& t, const T& g) {
                           t.accumulate(a, g.transpose());
                         });
}

template <typename Scalar>
BasicVar<Scalar> sum(const BasicVar<Scalar>& a) {
  using T = BasicTensor<Scalar>;
  T out(1, 1);
  out(0, 0) = a.value().sum();
  return a.tape().record(std::move(out), {a},
                         [a](BasicTape<Scalar>& t, const T& g) {
                           t.accumulate(a, T::Constant(a.rows(), a.cols(), g(0, 0)));
                         });
}

template <typename Scalar>
BasicVar<Scalar> mean(const BasicVar<Scalar>& a) {
  const auto n = static_cast<Scalar>(a.value().size());
  if (n == Scalar(0)) throw DimensionError("mean of an empty tensor");
  return scale(sum(a), Scalar(1) / n);
}

// m x n -> m x 1
template <typename Scalar>
BasicVar<Scalar> sum_cols(const BasicVar<Scalar>& a) {
  using T = BasicTensor<Scalar>;
  T out = a.value().rowwise().sum();
  return a.tape().record(std::move(out), {a},
                         [a](BasicTape<Scalar>& t, const T& g) {
                           t.accumulate(a, g.col(0).replicate(1, a.cols()));
                         });
}

template <typename Scalar>
BasicVar<Scalar> concat_rows(std::span<const BasicVar<Scalar>> parts) {
  using T = BasicTensor<Scalar>;
  if (parts.empty()) throw DimensionError("concat_rows of nothing");
  Index rows = 0;
  const Index cols = parts.front().cols();
  for (const auto& p : parts) {
    if (p.cols() != cols) {
      throw DimensionError("concat_rows: " + shape_string(parts.front().value()) +
                           " and " + shape_string(p.value()) +
                           " have different widths");
    }
    rows += p.rows();
  }
  T out(rows, cols);
  Index at = 0;
  for (const auto& p : parts) {
    out.middleRows(at, p.rows()) = p.value();
    at += p.rows();
  }
  std::vector<BasicVar<Scalar>> inputs(parts.begin(), parts.end());
  return parts.front().tape().record(
      std::move(out), std::span<const BasicVar<Scalar>>(inputs),
      [inputs](BasicTape<Scalar>& t, const T& g) {
        Index offset = 0;
        for (const auto& p : inputs) {
          t.accumulate(p, g.middleRows(offset, p.rows()));
          offset += p.rows();
        }
      });
}

template <typename Scalar>
BasicVar<Scalar> concat_rows(std::initializer_list<BasicVar<Scalar>> parts) {
  return concat_rows(std::span<const BasicVar<Scalar>>(parts.begin(), parts.size()));
}

template <typename Scalar>
BasicVar<Scalar> slice_rows(const BasicVar<Scalar>& a, Index begin,
                            Index count) {
  using T = BasicTensor<Scalar>;
  if (begin < 0 || count < 0 || begin + count > a.rows()) {
    throw DimensionError("slice_rows: [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") outside " +
                         shape_string(a.value()));
  }
  T out = a.value().middleRows(begin, count);
  return a.tape().record(std::move(out), {a},
                         [a, begin, count](BasicTape<Scalar>& t, const T& g) {
                           T full = T::Zero(a.rows(), a.cols());
                           full.middleRows(begin, count) = g;
                           t.accumulate(a, full);
                         });
}

template <typename Scalar>
BasicVar<Scalar> concat_cols(std::span<const BasicVar<Scalar>> parts) {
  using T = BasicTensor<Scalar>;
  if (parts.empty()) throw DimensionError("concat_cols of nothing");
  Index cols = 0;
  const Index rows = parts.front().rows();
  for (const auto& p : parts) {
    if (p.rows() != rows) {
      throw DimensionError("concat_cols: " + shape_string(parts.front().value()) +
                           " and " + shape_string(p.value()) +
                           " have different heights");
    }
    cols += p.cols();
  }
  T out(rows, cols);
  Index at = 0;
  for (const auto& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  std::vector<BasicVar<Scalar>> inputs(parts.begin(), parts.end());
  return parts.front().tape().record(
      std::move(out), std::span<const BasicVar<Scalar>>(inputs),
      [inputs](BasicTape<Scalar>& t, const T& g) {
        Index offset = 0;
        for (const auto& p : inputs) {
          t.accumulate(p, g.middleCols(offset, p.cols()));
          offset += p.cols();
        }
      });
}

template <typename Scalar>
BasicVar<Scalar> concat_cols(std::initializer_list<BasicVar<Scalar>> parts) {
  return concat_cols(std::span<const BasicVar<Scalar>>(parts.begin(), parts.size()));
}

template <typename Scalar>
BasicVar<Scalar> slice_cols(const BasicVar<Scalar>& a, Index begin,
                            Index count) {
  using T = BasicTensor<Scalar>;
  if (begin < 0 || count < 0 || begin + count > a.cols()) {
    throw DimensionError("slice_cols: [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") outside " +
                         shape_string(a.value()));
  }
  T out = a.value().middleCols(begin, count);
  return a.tape().record(std::move(out), {a},
                         [a, begin, count](BasicTape<Scalar>& t, const T& g) {
                           T full = T::Zero(a.rows(), a.cols());
                           full.middleCols(begin, count) = g;
                           t.accumulate(a, full);
                         });
}

// Row-wise softmax.
template <typename Scalar>
BasicVar<Scalar> softmax_rows(const BasicVar<Scalar>& a) {
  using T = BasicTensor<Scalar>;
  T out = a.value();
  for (Index r = 0; r < out.rows(); ++r) {
    const Scalar top = out.row(r).maxCoeff();
    out.row(r) = (out.row(r).array() - top).exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
  const std::size_t self = a.tape().size();
  return a.tape().record(
      std::move(out), {a}, [a, self](BasicTape<Scalar>& t, const T& g) {
        const T& y = t.value(BasicVar<Scalar>(&t, self));
        const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> dots =
            g.cwiseProduct(y).rowwise().sum();
        t.accumulate(a, (y.array() * (g.colwise() - dots).array()).matrix());
      });
}

// out.row(r) = table.row(indices[r]); adjoints scatter-add into the table.
template <typename Scalar>
BasicVar<Scalar> gather_rows(const BasicVar<Scalar>& table,
                             std::span<const std::size_t> indices) {
  using T = BasicTensor<Scalar>;
  T out(static_cast<Index>(indices.size()), table.cols());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= static_cast<std::size_t>(table.rows())) {
      throw DimensionError("gather_rows: index " + std::to_string(indices[r]) +
                           " outside " + shape_string(table.value()));
    }
    out.row(static_cast<Index>(r)) = table.value().row(static_cast<Index>(indices[r]));
  }
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  return table.tape().record(
      std::move(out), {table},
      [table, idx = std::move(idx)](BasicTape<Scalar>& t, const T& g) {
        T full = T::Zero(table.rows(), table.cols());
        for (std::size_t r = 0; r < idx.size(); ++r) {
          full.row(static_cast<Index>(idx[r])) += g.row(static_cast<Index>(r));
        }
        t.accumulate(table, full);
      });
}

// Adam with bias correction. Defaults follow the usual library defaults.
template <typename Scalar>
struct BasicAdamState {
  Scalar learning_rate = Scalar(1e-3);
  Scalar beta1 = Scalar(0.9);
  Scalar beta2 = Scalar(0.999);
  Scalar epsilon = Scalar(1e-8);
  std::int64_t step = 0;
  std::map<std::string, BasicTensor<Scalar>> first_moment;
  std::map<std::string, BasicTensor<Scalar>> second_moment;
};

using AdamState = BasicAdamState<double>;

template <typename Scalar>
void adam_step(std::span<BasicParameter<Scalar>* const> params,
               const BasicGradients<Scalar>& grads,
               BasicAdamState<Scalar>& state) {
  using T = BasicTensor<Scalar>;
  for (const auto* p : params) {
    if (p->trainable && !grads.contains(p->name)) {
      throw ContractError("adam_step: no gradient for parameter '" + p->name +
                          "'");
    }
  }
  ++state.step;
  const Scalar t = static_cast<Scalar>(state.step);
  const Scalar c1 = Scalar(1) - std::pow(state.beta1, t);
  const Scalar c2 = Scalar(1) - std::pow(state.beta2, t);
  for (auto* p : params) {
    if (!p->trainable) continue;
    const T& g = grads.at(p->name);
    if (g.rows() != p->value.rows() || g.cols() != p->value.cols()) {
      throw DimensionError("adam_step: gradient " + shape_string(g) +
                           " does not match parameter '" + p->name + "' " +
                           shape_string(p->value));
    }
    auto [m_it, m_new] = state.first_moment.try_emplace(
        p->name, T::Zero(p->value.rows(), p->value.cols()));
    auto [v_it, v_new] = state.second_moment.try_emplace(
        p->name, T::Zero(p->value.rows(), p->value.cols()));
    T& m = m_it->second;
    T& v = v_it->second;
    m = state.beta1 * m + (Scalar(1) - state.beta1) * g;
    v = state.beta2 * v + (Scalar(1) - state.beta2) * g.cwiseProduct(g);
    p->value.array() -= state.learning_rate * (m.array() / c1) /
                        ((v.array() / c2).sqrt() + state.epsilon);
  }
}

template <typename Scalar>
void adam_step(std::span<BasicParameter<Scalar>> params,
               const BasicGradients<Scalar>& grads,
               BasicAdamState<Scalar>& state) {
  std::vector<BasicParameter<Scalar>*> ptrs;
  ptrs.reserve(params.size());
  for (auto& p : params) ptrs.push_back(&p);
  adam_step(std::span<BasicParameter<Scalar>* const>(ptrs), grads, state);
}

}  // namespace attrimix
