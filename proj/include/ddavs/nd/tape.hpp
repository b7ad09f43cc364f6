#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ddavs/nd/array.hpp"

namespace ddavs::nd {

/// A named trainable tensor together with its accumulated gradient.
struct Parameter {
  std::string name;
  Array value;
  Array grad;

  void zero_grad() { grad = Array(value.shape()); }
};

class Tape;

/// Handle to a DiffArray recorded on a tape: its value, and its gradient
/// once `Tape::backward` has run.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::int32_t id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  std::int32_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

  const Array& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  bool requires_grad() const;
  bool has_grad() const;
  const Array& grad() const;

  /// Value of a single-element array.
  double item() const;

 private:
  Tape* tape_ = nullptr;
  std::int32_t id_ = -1;
};

/// Reverse-mode computation record. Each primitive op appends one node
/// holding its forward value and a closure that propagates the node's
/// gradient into its inputs. Nodes whose inputs carry no gradient are
/// recorded as constants and get no closure.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::int32_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Array value);
  Var variable(Array value);
  /// Leaf bound to external parameter storage; repeated calls for the
  /// same parameter return the same node.
  Var parameter(Parameter& p);

  Var record(Array value, std::span<const Var> inputs, BackwardFn backward);
  Var record(Array value, std::initializer_list<Var> inputs, BackwardFn backward) {
    return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                  std::move(backward));
  }

  /// Seeds d(out)/d(out) = 1 and runs every closure in reverse order.
  void backward(Var out);

  /// Adds each parameter leaf's gradient into `Parameter::grad`.
  void accumulate_parameter_grads() const;

  const Array& value(std::int32_t id) const;
  bool requires_grad(std::int32_t id) const { return nodes_[id].requires_grad; }
  bool has_grad(std::int32_t id) const { return !nodes_[id].grad.empty(); }
  const Array& grad(std::int32_t id) const { return nodes_[id].grad; }
  /// Gradient buffer of `id`, zero-initialised on first access.
  Array& grad_mut(std::int32_t id);

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Array value;
    const Array* external = nullptr;
    Array grad;
    bool requires_grad = false;
    BackwardFn backward;
    Parameter* param = nullptr;
  };

  // deque keeps node addresses stable, so value()/grad() references survive
  // later recording.
  std::deque<Node> nodes_;
  std::unordered_map<const Parameter*, std::int32_t> param_ids_;
};

}  // namespace ddavs::nd
