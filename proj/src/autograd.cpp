#include "salguide/autograd.hpp"

#include <optional>
#include <unordered_map>
#include <unordered_set>

#include "salguide/error.hpp"
#include "salguide/ops.hpp"

namespace salguide {

// Read access to graph internals for the backward sweep.
class GraphWalker {
 public:
  static detail::Node* node(const Tensor& t) { return t.node_.get(); }
};

const Tensor& GradientMap::at(const Tensor& t) const {
  for (const auto& e : entries_) {
    if (e.id == t.id()) return e.grad;
  }
  throw ContractError("gradient was not requested for this tensor");
}

bool GradientMap::connected(const Tensor& t) const {
  for (const auto& e : entries_) {
    if (e.id == t.id()) return e.connected;
  }
  throw ContractError("gradient was not requested for this tensor");
}

namespace {

// Post-order (inputs before consumers) over nodes that require gradients.
std::vector<Tensor> topological_order(const Tensor& root) {
  std::vector<Tensor> order;
  if (!root.requires_grad()) return order;
  std::unordered_set<const detail::Node*> visited;
  struct Frame {
    Tensor t;
    std::size_t next_input;
  };
  std::vector<Frame> stack;
  stack.push_back({root, 0});
  visited.insert(root.id());
  while (!stack.empty()) {
    auto& top = stack.back();
    auto* node = GraphWalker::node(top.t);
    if (top.next_input < node->inputs.size()) {
      const Tensor& in = node->inputs[top.next_input++];
      if (in.requires_grad() && visited.insert(in.id()).second) {
        stack.push_back({in, 0});
      }
    } else {
      order.push_back(top.t);
      stack.pop_back();
    }
  }
  return order;
}

}  // namespace

GradientMap backward(const Tensor& loss, std::span<const Tensor> wrt,
                     bool create_graph) {
  if (!loss.defined() || loss.numel() != 1) {
    throw ContractError("backward requires a scalar loss, got shape " +
                        (loss.defined() ? shape_str(loss.shape()) : "undefined"));
  }
  const auto order = topological_order(loss);

  std::unordered_set<const detail::Node*> targets;
  for (const auto& t : wrt) targets.insert(t.id());

  // A node is needed when some requested tensor is reachable through it.
  std::unordered_map<const detail::Node*, bool> needed;
  needed.reserve(order.size());
  for (const auto& t : order) {
    bool n = targets.count(t.id()) > 0;
    for (const auto& in : GraphWalker::node(t)->inputs) {
      if (!in.requires_grad()) continue;
      auto it = needed.find(in.id());
      n = n || (it != needed.end() && it->second);
    }
    needed[t.id()] = n;
  }

  std::optional<NoGradGuard> guard;
  if (!create_graph) guard.emplace();

  std::unordered_map<const detail::Node*, Tensor> grads;
  if (!order.empty()) grads[loss.id()] = Tensor::full(loss.shape(), 1.0);

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const Tensor& self = *it;
    auto* node = GraphWalker::node(self);
    if (!needed[node] || !node->backward) continue;
    auto git = grads.find(node);
    if (git == grads.end()) continue;
    const Tensor grad = git->second;
    if (!targets.count(node)) grads.erase(git);

    std::vector<bool> needs(node->inputs.size(), false);
    bool any = false;
    for (std::size_t i = 0; i < needs.size(); ++i) {
      const auto& in = node->inputs[i];
      needs[i] = in.requires_grad() && needed[in.id()];
      any = any || needs[i];
    }
    if (!any) continue;

    auto input_grads = node->backward(self, grad, needs);
    for (std::size_t i = 0; i < needs.size(); ++i) {
      if (!needs[i] || i >= input_grads.size() || !input_grads[i].defined()) {
        continue;
      }
      const auto& in = node->inputs[i];
      if (input_grads[i].shape() != in.shape()) {
        throw InvalidShape(std::string("backward of ") + node->op +
                           " produced gradient " +
                           shape_str(input_grads[i].shape()) + " for input " +
                           shape_str(in.shape()));
      }
      auto [slot, inserted] = grads.try_emplace(in.id(), input_grads[i]);
      if (!inserted) slot->second = add(slot->second, input_grads[i]);
    }
  }

  GradientMap result;
  result.entries_.reserve(wrt.size());
  for (const auto& t : wrt) {
    auto git = grads.find(t.id());
    if (git != grads.end()) {
      result.entries_.push_back({t.id(), git->second, true});
    } else {
      result.entries_.push_back({t.id(), Tensor::zeros(t.shape()), false});
    }
  }
  return result;
}

}  // namespace salguide
