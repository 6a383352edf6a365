#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace salguide {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

class Tensor;

// Computes the gradient contribution for each input of a node. `self` is the
// node's own output, `grad` the incoming gradient, and `needs[i]` says whether
// input i lies on a path to a requested parameter. Results must be built from
// differentiable ops so that higher-order passes can traverse them; entries
// for inputs that are not needed may be left undefined.
using BackwardFn = std::function<std::vector<Tensor>(
    const Tensor& self, const Tensor& grad, const std::vector<bool>& needs)>;

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> values;
  bool requires_grad = false;
  std::vector<Tensor> inputs;
  BackwardFn backward;
  const char* op = "leaf";
};

}  // namespace detail

// Whether newly created ops record graph edges on the calling thread.
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Shared handle to an immutable dense float64 array in row-major order.
// Copies alias the same node; only leaf parameters may be mutated, and only
// through mutable_values() by the optimizer.
class Tensor {
 public:
  Tensor() = default;

  static Tensor constant(Shape shape, std::vector<double> values);
  static Tensor parameter(Shape shape, std::vector<double> values);
  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double value);
  static Tensor scalar(double value);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;
  std::span<const double> values() const;
  double item() const;
  double at(std::size_t flat_index) const { return values()[flat_index]; }

  bool requires_grad() const;
  bool is_leaf() const;
  const char* op_name() const;

  // In-place access for optimizer updates on leaf parameters.
  std::span<double> mutable_values();

  // Same values, cut from the graph.
  Tensor detach() const;

  const detail::Node* id() const { return node_.get(); }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

  std::shared_ptr<detail::Node> node_;

  friend Tensor make_op(Shape, std::vector<double>, std::vector<Tensor>,
                        BackwardFn, const char*);
  friend class GraphWalker;
};

// Wraps computed values as an op output. Records the graph edge only when
// grad mode is enabled and some input requires a gradient.
Tensor make_op(Shape shape, std::vector<double> values,
               std::vector<Tensor> inputs, BackwardFn backward,
               const char* op);

}  // namespace salguide
