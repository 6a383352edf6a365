#pragma once

#include <span>
#include <utility>
#include <vector>

#include "salguide/tensor.hpp"

namespace salguide {

// Gradients keyed by tensor identity, one entry per requested tensor.
class GradientMap {
 public:
  // Throws ContractError when `t` was not requested.
  const Tensor& at(const Tensor& t) const;
  // False when no path connects the loss to `t` (its entry is then zeros).
  bool connected(const Tensor& t) const;
  std::size_t size() const { return entries_.size(); }

 private:
  struct Entry {
    const detail::Node* id;
    Tensor grad;
    bool connected;
  };
  std::vector<Entry> entries_;

  friend GradientMap backward(const Tensor&, std::span<const Tensor>, bool);
};

// Reverse-mode gradients of a scalar `loss` with respect to `wrt`. With
// create_graph the returned gradients are graph nodes and may be
// differentiated again; otherwise they are constants.
GradientMap backward(const Tensor& loss, std::span<const Tensor> wrt,
                     bool create_graph = false);

inline GradientMap backward(const Tensor& loss, std::initializer_list<Tensor> wrt,
                            bool create_graph = false) {
  const std::vector<Tensor> list(wrt);
  return backward(loss, std::span<const Tensor>(list), create_graph);
}

}  // namespace salguide
