// Copyright 2026 The Thumbseed Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "thumbseed/tape.hpp"
#include "thumbseed/tensor.hpp"

namespace thumbseed {

// Insertion-ordered collection of uniquely named tensors.
template <typename T>
class NamedTensors {
 public:
  void add(const std::string& name, BasicTensor<T> tensor) {
    if (index_.count(name)) throw InvalidArgument("duplicate tensor name '" + name + "'");
    index_.emplace(name, tensors_.size());
    names_.push_back(name);
    tensors_.push_back(std::move(tensor));
  }

  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  const BasicTensor<T>& get(const std::string& name) const { return tensors_[lookup(name)]; }
  BasicTensor<T>& get(const std::string& name) { return tensors_[lookup(name)]; }

  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return tensors_.size(); }

  std::size_t total_elements() const {
    std::size_t n = 0;
    for (const auto& t : tensors_) n += t.size();
    return n;
  }

  template <typename U>
  NamedTensors<U> cast() const {
    NamedTensors<U> out;
    for (std::size_t i = 0; i < names_.size(); ++i) out.add(names_[i], tensors_[i].template cast<U>());
    return out;
  }

  bool operator==(const NamedTensors& other) const {
    return names_ == other.names_ && tensors_ == other.tensors_;
  }

 private:
  std::size_t lookup(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw InvalidArgument("unknown tensor '" + name + "'");
    return it->second;
  }

  std::vector<std::string> names_;
  std::vector<BasicTensor<T>> tensors_;
  std::unordered_map<std::string, std::size_t> index_;
};

using ParamStore = NamedTensors<float>;

// Tape leaves for every parameter of a store.
template <typename T>
class ParamVars {
 public:
  ParamVars() = default;

  template <typename U>
  ParamVars(Tape<T>& tape, const NamedTensors<U>& params, bool requires_grad = true) {
    for (const auto& name : params.names()) {
      vars_.emplace(name, tape.leaf(params.get(name).template cast<T>(), requires_grad));
      names_.push_back(name);
    }
  }

  Var<T> operator[](const std::string& name) const {
    auto it = vars_.find(name);
    if (it == vars_.end()) throw InvalidArgument("model parameter '" + name + "' is missing");
    return it->second;
  }

  const std::vector<std::string>& names() const { return names_; }

  // Gradients from the tape's last backward pass, one per parameter.
  NamedTensors<T> gradients() const {
    NamedTensors<T> out;
    for (const auto& name : names_) {
      const Var<T> v = vars_.at(name);
      out.add(name, v.tape->grad(v));
    }
    return out;
  }

 private:
  std::unordered_map<std::string, Var<T>> vars_;
  std::vector<std::string> names_;
};

}  // namespace thumbseed
