#include "ddavs/nd/tape.hpp"

#include "ddavs/error.hpp"

namespace ddavs::nd {

const Array& Var::value() const { return tape_->value(id_); }
bool Var::requires_grad() const { return tape_->requires_grad(id_); }
bool Var::has_grad() const { return tape_->has_grad(id_); }
const Array& Var::grad() const { return tape_->grad(id_); }

double Var::item() const {
  const Array& v = value();
  if (v.size() != 1) {
    throw DimensionError("item() on array of shape " + shape_str(v.shape()));
  }
  return v[0];
}

Var Tape::constant(Array value) {
  nodes_.push_back(Node{std::move(value), nullptr, {}, false, {}, nullptr});
  return Var(this, static_cast<std::int32_t>(nodes_.size() - 1));
}

Var Tape::variable(Array value) {
  nodes_.push_back(Node{std::move(value), nullptr, {}, true, {}, nullptr});
  return Var(this, static_cast<std::int32_t>(nodes_.size() - 1));
}

Var Tape::parameter(Parameter& p) {
  if (auto it = param_ids_.find(&p); it != param_ids_.end()) {
    return Var(this, it->second);
  }
  nodes_.push_back(Node{{}, &p.value, {}, true, {}, &p});
  const auto id = static_cast<std::int32_t>(nodes_.size() - 1);
  param_ids_.emplace(&p, id);
  return Var(this, id);
}

Var Tape::record(Array value, std::span<const Var> inputs, BackwardFn backward) {
  bool needs_grad = false;
  for (const Var& in : inputs) {
    if (&in.tape() != this) throw Error("operands recorded on different tapes");
    needs_grad = needs_grad || nodes_[in.id()].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), nullptr, {}, needs_grad,
                        needs_grad ? std::move(backward) : BackwardFn{}, nullptr});
  return Var(this, static_cast<std::int32_t>(nodes_.size() - 1));
}

const Array& Tape::value(std::int32_t id) const {
  const Node& n = nodes_[id];
  return n.external ? *n.external : n.value;
}

Array& Tape::grad_mut(std::int32_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad = Array(value(id).shape());
  return n.grad;
}

void Tape::backward(Var out) {
  if (&out.tape() != this) throw Error("backward on a foreign tape");
  if (value(out.id()).size() != 1) {
    throw DimensionError("backward requires a scalar output, got " +
                         shape_str(value(out.id()).shape()));
  }
  if (!nodes_[out.id()].requires_grad) return;
  grad_mut(out.id())[0] += 1.0;
  for (auto id = out.id(); id >= 0; --id) {
    Node& n = nodes_[id];
    if (n.backward && !n.grad.empty()) n.backward(*this, id);
  }
}

void Tape::accumulate_parameter_grads() const {
  for (const auto& [key, id] : param_ids_) {
    const Node& n = nodes_[id];
    if (n.grad.empty()) continue;
    Parameter* param = n.param;
    if (param->grad.shape() != param->value.shape()) param->zero_grad();
    param->grad += n.grad;
  }
}

}  // namespace ddavs::nd
