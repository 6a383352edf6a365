#include "salguide/kernels.hpp"

#include <algorithm>
#include <cstdint>
#include <vector>

namespace salguide::kernels {

namespace {

// Range of output columns ox for which ix = ox*stride + kx - pad is in [0, in_w).
struct ValidRange {
  std::size_t begin;
  std::size_t end;
};

ValidRange valid_outputs(std::size_t out_len, std::size_t in_len,
                         std::size_t stride, std::size_t offset_k,
                         std::size_t pad) {
  // ix = o*stride + offset_k - pad >= 0  <=>  o*stride >= pad - offset_k
  std::size_t begin = 0;
  if (pad > offset_k) begin = (pad - offset_k + stride - 1) / stride;
  // ix < in_len  <=>  o*stride + offset_k < in_len + pad
  std::size_t end = 0;
  if (in_len + pad > offset_k) end = (in_len + pad - offset_k - 1) / stride + 1;
  end = std::min(end, out_len);
  if (begin > end) begin = end;
  return {begin, end};
}

}  // namespace

void conv2d_forward(const ConvGeometry& g, std::span<const double> input,
                    std::span<const double> kernel, std::span<double> out) {
  const std::size_t oh = g.out_h(), ow = g.out_w();
  const std::size_t in_plane = g.in_h * g.in_w;
  const std::size_t out_plane = oh * ow;
  const auto planes = static_cast<std::int64_t>(g.batch * g.out_channels);

#pragma omp parallel for schedule(static)
  for (std::int64_t job = 0; job < planes; ++job) {
    const std::size_t n = static_cast<std::size_t>(job) / g.out_channels;
    const std::size_t co = static_cast<std::size_t>(job) % g.out_channels;
    double* dst = out.data() + static_cast<std::size_t>(job) * out_plane;
    std::fill(dst, dst + out_plane, 0.0);
    for (std::size_t ci = 0; ci < g.in_channels; ++ci) {
      const double* src = input.data() + (n * g.in_channels + ci) * in_plane;
      const double* k =
          kernel.data() + (co * g.in_channels + ci) * g.kernel_h * g.kernel_w;
      for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
        const auto rows = valid_outputs(oh, g.in_h, g.stride, ky, g.padding);
        for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
          const double w = k[ky * g.kernel_w + kx];
          const auto cols = valid_outputs(ow, g.in_w, g.stride, kx, g.padding);
          for (std::size_t oy = rows.begin; oy < rows.end; ++oy) {
            const std::size_t iy = oy * g.stride + ky - g.padding;
            const double* src_row = src + iy * g.in_w;
            double* dst_row = dst + oy * ow;
            if (g.stride == 1) {
              const double* s = src_row + (static_cast<std::ptrdiff_t>(kx) - static_cast<std::ptrdiff_t>(g.padding));
              for (std::size_t ox = cols.begin; ox < cols.end; ++ox) {
                dst_row[ox] += w * s[ox];
              }
            } else {
              for (std::size_t ox = cols.begin; ox < cols.end; ++ox) {
                dst_row[ox] += w * src_row[ox * g.stride + kx - g.padding];
              }
            }
          }
        }
      }
    }
  }
}

void conv2d_input_grad(const ConvGeometry& g, std::span<const double> grad_out,
                       std::span<const double> kernel,
                       std::span<double> grad_in) {
  const std::size_t oh = g.out_h(), ow = g.out_w();
  const std::size_t in_plane = g.in_h * g.in_w;
  const std::size_t out_plane = oh * ow;
  const auto planes = static_cast<std::int64_t>(g.batch * g.in_channels);

#pragma omp parallel for schedule(static)
  for (std::int64_t job = 0; job < planes; ++job) {
    const std::size_t n = static_cast<std::size_t>(job) / g.in_channels;
    const std::size_t ci = static_cast<std::size_t>(job) % g.in_channels;
    double* dst = grad_in.data() + static_cast<std::size_t>(job) * in_plane;
    std::fill(dst, dst + in_plane, 0.0);
    for (std::size_t co = 0; co < g.out_channels; ++co) {
      const double* src = grad_out.data() + (n * g.out_channels + co) * out_plane;
      const double* k =
          kernel.data() + (co * g.in_channels + ci) * g.kernel_h * g.kernel_w;
      for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
        const auto rows = valid_outputs(oh, g.in_h, g.stride, ky, g.padding);
        for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
          const double w = k[ky * g.kernel_w + kx];
          const auto cols = valid_outputs(ow, g.in_w, g.stride, kx, g.padding);
          for (std::size_t oy = rows.begin; oy < rows.end; ++oy) {
            const std::size_t iy = oy * g.stride + ky - g.padding;
            double* dst_row = dst + iy * g.in_w;
            const double* src_row = src + oy * ow;
            if (g.stride == 1) {
              double* d = dst_row + (static_cast<std::ptrdiff_t>(kx) - static_cast<std::ptrdiff_t>(g.padding));
              for (std::size_t ox = cols.begin; ox < cols.end; ++ox) {
                d[ox] += w * src_row[ox];
              }
            } else {
              for (std::size_t ox = cols.begin; ox < cols.end; ++ox) {
                dst_row[ox * g.stride + kx - g.padding] += w * src_row[ox];
              }
            }
          }
        }
      }
    }
  }
}

void conv2d_kernel_grad(const ConvGeometry& g, std::span<const double> input,
                        std::span<const double> grad_out,
                        std::span<double> grad_kernel) {
  const std::size_t oh = g.out_h(), ow = g.out_w();
  const std::size_t in_plane = g.in_h * g.in_w;
  const std::size_t out_plane = oh * ow;
  const std::size_t taps = g.kernel_h * g.kernel_w;
  const auto pairs = static_cast<std::int64_t>(g.out_channels * g.in_channels);

#pragma omp parallel
  {
    // Per-column partial sums; vectorizable and reduced in a fixed order.
    std::vector<double> lanes(ow);
#pragma omp for schedule(static)
    for (std::int64_t job = 0; job < pairs; ++job) {
      const std::size_t co = static_cast<std::size_t>(job) / g.in_channels;
      const std::size_t ci = static_cast<std::size_t>(job) % g.in_channels;
      double* dst = grad_kernel.data() + static_cast<std::size_t>(job) * taps;
      for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
        const auto rows = valid_outputs(oh, g.in_h, g.stride, ky, g.padding);
        for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
          const auto cols = valid_outputs(ow, g.in_w, g.stride, kx, g.padding);
          double* lane = lanes.data();
          std::fill(lane, lane + ow, 0.0);
          for (std::size_t n = 0; n < g.batch; ++n) {
            const double* src = input.data() + (n * g.in_channels + ci) * in_plane;
            const double* go =
                grad_out.data() + (n * g.out_channels + co) * out_plane;
            for (std::size_t oy = rows.begin; oy < rows.end; ++oy) {
              const std::size_t iy = oy * g.stride + ky - g.padding;
              const double* src_row = src + iy * g.in_w;
              const double* go_row = go + oy * ow;
              if (g.stride == 1) {
                const double* s =
                    src_row + (static_cast<std::ptrdiff_t>(kx) -
                               static_cast<std::ptrdiff_t>(g.padding));
                for (std::size_t ox = cols.begin; ox < cols.end; ++ox) {
                  lane[ox] += go_row[ox] * s[ox];
                }
              } else {
                for (std::size_t ox = cols.begin; ox < cols.end; ++ox) {
                  lane[ox] += go_row[ox] * src_row[ox * g.stride + kx - g.padding];
                }
              }
            }
          }
          double acc = 0.0;
          for (std::size_t ox = cols.begin; ox < cols.end; ++ox) acc += lane[ox];
          dst[ky * g.kernel_w + kx] = acc;
        }
      }
    }
  }
}

void matmul(std::size_t m, std::size_t k, std::size_t n,
            std::span<const double> a, std::span<const double> b,
            std::span<double> c) {
#pragma omp parallel for schedule(static) if (m * k * n > 32768)
  for (std::int64_t row = 0; row < static_cast<std::int64_t>(m); ++row) {
    double* dst = c.data() + static_cast<std::size_t>(row) * n;
    std::fill(dst, dst + n, 0.0);
    const double* arow = a.data() + static_cast<std::size_t>(row) * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      const double* brow = b.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) dst[j] += av * brow[j];
    }
  }
}

namespace reference {

namespace {

// Input value at a padded coordinate, zero outside the image.
double padded(const ConvGeometry& g, std::span<const double> x, std::size_t n,
              std::size_t c, std::ptrdiff_t y, std::ptrdiff_t xx) {
  if (y < 0 || xx < 0 || y >= static_cast<std::ptrdiff_t>(g.in_h) ||
      xx >= static_cast<std::ptrdiff_t>(g.in_w)) {
    return 0.0;
  }
  return x[((n * g.in_channels + c) * g.in_h + static_cast<std::size_t>(y)) *
               g.in_w +
           static_cast<std::size_t>(xx)];
}

}  // namespace

void conv2d_forward(const ConvGeometry& g, std::span<const double> input,
                    std::span<const double> kernel, std::span<double> out) {
  const std::size_t oh = g.out_h(), ow = g.out_w();
  for (std::size_t n = 0; n < g.batch; ++n)
    for (std::size_t co = 0; co < g.out_channels; ++co)
      for (std::size_t oy = 0; oy < oh; ++oy)
        for (std::size_t ox = 0; ox < ow; ++ox) {
          double acc = 0.0;
          for (std::size_t ci = 0; ci < g.in_channels; ++ci)
            for (std::size_t ky = 0; ky < g.kernel_h; ++ky)
              for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
                const auto y = static_cast<std::ptrdiff_t>(oy * g.stride + ky) -
                               static_cast<std::ptrdiff_t>(g.padding);
                const auto x = static_cast<std::ptrdiff_t>(ox * g.stride + kx) -
                               static_cast<std::ptrdiff_t>(g.padding);
                acc += padded(g, input, n, ci, y, x) *
                       kernel[((co * g.in_channels + ci) * g.kernel_h + ky) *
                                  g.kernel_w +
                              kx];
              }
          out[((n * g.out_channels + co) * oh + oy) * ow + ox] = acc;
        }
}

void conv2d_input_grad(const ConvGeometry& g, std::span<const double> grad_out,
                       std::span<const double> kernel,
                       std::span<double> grad_in) {
  const std::size_t oh = g.out_h(), ow = g.out_w();
  std::fill(grad_in.begin(), grad_in.end(), 0.0);
  for (std::size_t n = 0; n < g.batch; ++n)
    for (std::size_t co = 0; co < g.out_channels; ++co)
      for (std::size_t oy = 0; oy < oh; ++oy)
        for (std::size_t ox = 0; ox < ow; ++ox) {
          const double go = grad_out[((n * g.out_channels + co) * oh + oy) * ow + ox];
          for (std::size_t ci = 0; ci < g.in_channels; ++ci)
            for (std::size_t ky = 0; ky < g.kernel_h; ++ky)
              for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
                const auto y = static_cast<std::ptrdiff_t>(oy * g.stride + ky) -
                               static_cast<std::ptrdiff_t>(g.padding);
                const auto x = static_cast<std::ptrdiff_t>(ox * g.stride + kx) -
                               static_cast<std::ptrdiff_t>(g.padding);
                if (y < 0 || x < 0 || y >= static_cast<std::ptrdiff_t>(g.in_h) ||
                    x >= static_cast<std::ptrdiff_t>(g.in_w)) {
                  continue;
                }
                grad_in[((n * g.in_channels + ci) * g.in_h +
                         static_cast<std::size_t>(y)) *
                            g.in_w +
                        static_cast<std::size_t>(x)] +=
                    go * kernel[((co * g.in_channels + ci) * g.kernel_h + ky) *
                                    g.kernel_w +
                                kx];
              }
        }
}

void conv2d_kernel_grad(const ConvGeometry& g, std::span<const double> input,
                        std::span<const double> grad_out,
                        std::span<double> grad_kernel) {
  const std::size_t oh = g.out_h(), ow = g.out_w();
  std::fill(grad_kernel.begin(), grad_kernel.end(), 0.0);
  for (std::size_t n = 0; n < g.batch; ++n)
    for (std::size_t co = 0; co < g.out_channels; ++co)
      for (std::size_t oy = 0; oy < oh; ++oy)
        for (std::size_t ox = 0; ox < ow; ++ox) {
          const double go = grad_out[((n * g.out_channels + co) * oh + oy) * ow + ox];
          for (std::size_t ci = 0; ci < g.in_channels; ++ci)
            for (std::size_t ky = 0; ky < g.kernel_h; ++ky)
              for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
                const auto y = static_cast<std::ptrdiff_t>(oy * g.stride + ky) -
                               static_cast<std::ptrdiff_t>(g.padding);
                const auto x = static_cast<std::ptrdiff_t>(ox * g.stride + kx) -
                               static_cast<std::ptrdiff_t>(g.padding);
                grad_kernel[((co * g.in_channels + ci) * g.kernel_h + ky) *
                                g.kernel_w +
                            kx] += go * padded(g, input, n, ci, y, x);
              }
        }
}

void matmul(std::size_t m, std::size_t k, std::size_t n,
            std::span<const double> a, std::span<const double> b,
            std::span<double> c) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += a[i * k + p] * b[p * n + j];
      c[i * n + j] = acc;
    }
}

}  // namespace reference

}  // namespace salguide::kernels
