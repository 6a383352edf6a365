#pragma once

#include <cstddef>
#include <span>

namespace salguide::kernels {

struct ConvGeometry {
  std::size_t batch = 1;
  std::size_t in_channels = 1;
  std::size_t in_h = 1;
  std::size_t in_w = 1;
  std::size_t out_channels = 1;
  std::size_t kernel_h = 1;
  std::size_t kernel_w = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;

  std::size_t out_h() const { return (in_h + 2 * padding - kernel_h) / stride + 1; }
  std::size_t out_w() const { return (in_w + 2 * padding - kernel_w) / stride + 1; }
  std::size_t input_size() const { return batch * in_channels * in_h * in_w; }
  std::size_t kernel_size() const {
    return out_channels * in_channels * kernel_h * kernel_w;
  }
  std::size_t output_size() const { return batch * out_channels * out_h() * out_w(); }
};

// OpenMP kernels. Every output element is owned by exactly one thread and
// accumulated in a fixed order, so results are bitwise independent of the
// thread count.

// out[n,co,oy,ox] = sum_{ci,ky,kx} in[n,ci,oy*s+ky-p,ox*s+kx-p] * k[co,ci,ky,kx]
void conv2d_forward(const ConvGeometry& g, std::span<const double> input,
                    std::span<const double> kernel, std::span<double> out);

// Adjoint of conv2d_forward with respect to the input.
void conv2d_input_grad(const ConvGeometry& g, std::span<const double> grad_out,
                       std::span<const double> kernel,
                       std::span<double> grad_in);

// Adjoint of conv2d_forward with respect to the kernel.
void conv2d_kernel_grad(const ConvGeometry& g, std::span<const double> input,
                        std::span<const double> grad_out,
                        std::span<double> grad_kernel);

// c[m,n] = a[m,k] * b[k,n]
void matmul(std::size_t m, std::size_t k, std::size_t n,
            std::span<const double> a, std::span<const double> b,
            std::span<double> c);

// Straightforward serial loops, kept as the test oracle for the kernels above.
namespace reference {

void conv2d_forward(const ConvGeometry& g, std::span<const double> input,
                    std::span<const double> kernel, std::span<double> out);
void conv2d_input_grad(const ConvGeometry& g, std::span<const double> grad_out,
                       std::span<const double> kernel,
                       std::span<double> grad_in);
void conv2d_kernel_grad(const ConvGeometry& g, std::span<const double> input,
                        std::span<const double> grad_out,
                        std::span<double> grad_kernel);
void matmul(std::size_t m, std::size_t k, std::size_t n,
            std::span<const double> a, std::span<const double> b,
            std::span<double> c);

}  // namespace reference

}  // namespace salguide::kernels
