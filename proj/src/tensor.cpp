#include "salguide/tensor.hpp"

#include <sstream>

#include "salguide/error.hpp"

namespace salguide {

namespace {
thread_local bool t_grad_enabled = true;
}

bool grad_enabled() { return t_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ',';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

namespace {

std::shared_ptr<detail::Node> new_leaf(Shape shape, std::vector<double> values,
                                       bool requires_grad) {
  if (shape_numel(shape) != values.size()) {
    throw InvalidShape("tensor shape " + shape_str(shape) + " does not hold " +
                       std::to_string(values.size()) + " values");
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->values = std::move(values);
  node->requires_grad = requires_grad;
  return node;
}

const detail::Node& checked(const std::shared_ptr<detail::Node>& node) {
  if (!node) throw ContractError("use of an undefined tensor");
  return *node;
}

}  // namespace

Tensor Tensor::constant(Shape shape, std::vector<double> values) {
  return Tensor(new_leaf(std::move(shape), std::move(values), false));
}

Tensor Tensor::parameter(Shape shape, std::vector<double> values) {
  return Tensor(new_leaf(std::move(shape), std::move(values), true));
}

Tensor Tensor::zeros(Shape shape) { return full(std::move(shape), 0.0); }

Tensor Tensor::full(Shape shape, double value) {
  const auto n = shape_numel(shape);
  return constant(std::move(shape), std::vector<double>(n, value));
}

Tensor Tensor::scalar(double value) { return constant({}, {value}); }

const Shape& Tensor::shape() const { return checked(node_).shape; }

std::size_t Tensor::dim(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) {
    throw InvalidShape("axis " + std::to_string(axis) + " out of range for " +
                       shape_str(s));
  }
  return s[axis];
}

std::size_t Tensor::numel() const { return checked(node_).values.size(); }

std::span<const double> Tensor::values() const { return checked(node_).values; }

double Tensor::item() const {
  const auto& n = checked(node_);
  if (n.values.size() != 1) {
    throw ContractError("item() on tensor of shape " + shape_str(n.shape));
  }
  return n.values[0];
}

bool Tensor::requires_grad() const { return checked(node_).requires_grad; }

bool Tensor::is_leaf() const { return !checked(node_).backward; }

const char* Tensor::op_name() const { return checked(node_).op; }

std::span<double> Tensor::mutable_values() {
  checked(node_);
  if (node_->backward) {
    throw ContractError("only leaf tensors may be modified in place");
  }
  return node_->values;
}

Tensor Tensor::detach() const {
  const auto& n = checked(node_);
  return constant(n.shape, n.values);
}

Tensor make_op(Shape shape, std::vector<double> values,
               std::vector<Tensor> inputs, BackwardFn backward,
               const char* op) {
  auto node = new_leaf(std::move(shape), std::move(values), false);
  node->op = op;
  if (grad_enabled()) {
    bool any = false;
    for (const auto& in : inputs) any = any || in.requires_grad();
    if (any) {
      node->requires_grad = true;
      node->inputs = std::move(inputs);
      node->backward = std::move(backward);
    }
  }
  return Tensor(std::move(node));
}

}  // namespace salguide
