#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "salguide/rng.hpp"
#include "salguide/tensor.hpp"

// Differentiable primitives. Every backward rule is written in terms of these
// same functions, so gradients produced under create_graph are themselves
// differentiable.
namespace salguide {

// Elementwise, operands of identical shape.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor neg(const Tensor& x);
Tensor scale(const Tensor& x, double factor);
Tensor shift(const Tensor& x, double offset);

// Pointwise nonlinearities. relu and abs use subgradient 0 at 0.
Tensor relu(const Tensor& x);
Tensor abs(const Tensor& x);
Tensor square(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor softplus(const Tensor& x);  // log(1 + exp(x)), overflow-safe

// Reductions to a scalar (shape []), and the matching broadcast.
enum class Reduction { kSum, kMean };
Tensor reduce(const Tensor& x, Reduction kind);
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
Tensor expand_scalar(const Tensor& s, const Shape& shape);

// Layout.
Tensor reshape(const Tensor& x, Shape shape);
Tensor select(const Tensor& x, std::size_t index);  // x[index] along axis 0
Tensor embed(const Tensor& x, std::size_t index, std::size_t count);
Tensor column(const Tensor& x, std::size_t j);             // [n,m] -> [n]
Tensor place_column(const Tensor& x, std::size_t j, std::size_t m);  // [n] -> [n,m]
Tensor broadcast_rows(const Tensor& x, std::size_t rows);  // [m] -> [rows,m]
Tensor sum_rows(const Tensor& x);                          // [n,m] -> [m]
Tensor transpose(const Tensor& x);                         // [n,m] -> [m,n]
Tensor matmul(const Tensor& a, const Tensor& b);           // [m,k]x[k,n]
Tensor spatial_sum(const Tensor& x);                       // [n,c,h,w] -> [n,c]
Tensor spatial_expand(const Tensor& x, std::size_t h, std::size_t w);
Tensor gather(const Tensor& x, std::vector<std::uint32_t> indices, Shape shape);
Tensor scatter_add(const Tensor& x, std::vector<std::uint32_t> indices,
                   Shape shape);

// Network layers.
struct Conv2dParams {
  std::size_t stride = 1;
  std::size_t padding = 0;
};
Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias,
              Conv2dParams params);
Tensor conv2d(const Tensor& input, const Tensor& kernel, Conv2dParams params);
// Adjoints of conv2d, exposed because they are graph ops in their own right.
Tensor conv2d_input_grad(const Tensor& grad_out, const Tensor& kernel,
                         std::size_t in_h, std::size_t in_w,
                         Conv2dParams params);
Tensor conv2d_kernel_grad(const Tensor& input, const Tensor& grad_out,
                          std::size_t kernel_h, std::size_t kernel_w,
                          Conv2dParams params);
Tensor max_pool2d(const Tensor& x);  // 2x2 window, stride 2, floor
Tensor global_avg_pool(const Tensor& x);
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);
Tensor softmax2(const Tensor& z);  // [n,2] -> [n,2]
Tensor dropout(const Tensor& x, double p, bool training, Rng& rng);

}  // namespace salguide
