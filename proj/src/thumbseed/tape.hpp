// Copyright 2026 The Thumbseed Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <deque>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "thumbseed/tensor.hpp"

namespace thumbseed {

template <typename T>
class Tape;

// Handle to a value recorded on a tape. Cheap to copy; valid while the tape lives.
template <typename T>
struct Var {
  Tape<T>* tape = nullptr;
  int id = -1;

  const BasicTensor<T>& value() const { return tape->value(*this); }
  const Shape& shape() const { return value().shape(); }
  std::size_t size() const { return value().size(); }
};

namespace debug {

// Test fixture hook: scales the incoming adjoint of every node recorded by
// the named op, which corrupts that op's backward rule. Empty name disables.
void set_backward_fault(std::string_view op, double scale);
const std::string& backward_fault_op();
double backward_fault_scale();

// While installed, every relu appends its input's sign pattern to
// `recorded`. With `replay` set, relu gates on the replayed pattern instead
// of the live signs, which freezes the active set for finite differences.
// Thread-local; pass nullptr to uninstall.
struct ActivationProbe {
  std::vector<bool> recorded;
  const std::vector<bool>* replay = nullptr;
};
void set_activation_probe(ActivationProbe* probe);
ActivationProbe* activation_probe();

}  // namespace debug

// Reverse-mode gradient tape. Nodes are appended in execution order, so a
// reverse sweep visits every node after all of its consumers.
template <typename T>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, int self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<T> leaf(BasicTensor<T> value, bool requires_grad = false) {
    nodes_.push_back(Node{std::move(value), {}, nullptr, "leaf", requires_grad, false});
    return Var<T>{this, static_cast<int>(nodes_.size()) - 1};
  }

  // Records an op output. The node needs a gradient iff any input does.
  Var<T> record(BasicTensor<T> value, std::initializer_list<Var<T>> inputs, const char* op,
                BackwardFn backward) {
    bool needs = false;
    for (const auto& in : inputs) {
      if (in.tape != this) throw InvalidArgument(std::string(op) + ": input from another tape");
      needs = needs || nodes_[in.id].requires_grad;
    }
    nodes_.push_back(Node{std::move(value), {}, needs ? std::move(backward) : nullptr, op, needs,
                          false});
    return Var<T>{this, static_cast<int>(nodes_.size()) - 1};
  }

  const BasicTensor<T>& value(Var<T> v) const { return nodes_.at(v.id).value; }
  const BasicTensor<T>& value(int id) const { return nodes_.at(id).value; }
  bool requires_grad(int id) const { return nodes_.at(id).requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  // Gradient of the last backward() target w.r.t. v; zeros when v was not reached.
  BasicTensor<T> grad(Var<T> v) const {
    const Node& n = nodes_.at(v.id);
    if (n.has_grad) return n.grad;
    return BasicTensor<T>(n.value.shape());
  }

  // Adjoint accumulator for node id, allocated as zeros on first use.
  BasicTensor<T>& grad_accum(int id) {
    Node& n = nodes_.at(id);
    if (!n.has_grad) {
      n.grad = BasicTensor<T>(n.value.shape());
      n.has_grad = true;
    }
    return n.grad;
  }

  const BasicTensor<T>& upstream(int id) const { return nodes_.at(id).grad; }

  void backward(Var<T> loss) {
    if (loss.tape != this) throw InvalidArgument("backward: loss from another tape");
    if (value(loss).size() != 1) {
      throw InvalidArgument("backward: loss must be a scalar, got shape " +
                            shape_str(value(loss).shape()));
    }
    for (auto& n : nodes_) {
      n.has_grad = false;
      n.grad = {};
    }
    grad_accum(loss.id).fill(T{1});
    const std::string& fault = debug::backward_fault_op();
    for (int id = loss.id; id >= 0; --id) {
      Node& n = nodes_[id];
      if (!n.has_grad || !n.backward) continue;
      if (!fault.empty() && fault == n.op) {
        const T s = static_cast<T>(debug::backward_fault_scale());
        for (auto& g : n.grad.data()) g *= s;
      }
      n.backward(*this, id);
    }
  }

 private:
  struct Node {
    BasicTensor<T> value;
    BasicTensor<T> grad;
    BackwardFn backward;
    const char* op;
    bool requires_grad;
    bool has_grad;
  };

  // deque keeps node references stable while ops append.
  std::deque<Node> nodes_;
};

}  // namespace thumbseed
