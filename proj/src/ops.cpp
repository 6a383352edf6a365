#include "salguide/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "salguide/error.hpp"
#include "salguide/kernels.hpp"

namespace salguide {

namespace {

using Indices = std::shared_ptr<const std::vector<std::uint32_t>>;

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw InvalidShape(std::string(op) + ": shape " + shape_str(a.shape()) +
                       " vs " + shape_str(b.shape()));
  }
}

void require_rank(const Tensor& x, std::size_t rank, const char* op) {
  if (x.rank() != rank) {
    throw InvalidShape(std::string(op) + ": expected rank " +
                       std::to_string(rank) + ", got " + shape_str(x.shape()));
  }
}

template <typename F>
std::vector<double> map_values(const Tensor& x, F f) {
  const auto in = x.values();
  std::vector<double> out(in.size());
  std::transform(in.begin(), in.end(), out.begin(), f);
  return out;
}

template <typename F>
std::vector<double> zip_values(const Tensor& a, const Tensor& b, F f) {
  const auto va = a.values();
  const auto vb = b.values();
  std::vector<double> out(va.size());
  for (std::size_t i = 0; i < va.size(); ++i) out[i] = f(va[i], vb[i]);
  return out;
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor gather_impl(const Tensor& x, Indices indices, Shape shape);
Tensor scatter_add_impl(const Tensor& x, Indices indices, Shape shape);

Tensor gather_impl(const Tensor& x, Indices indices, Shape shape) {
  if (shape_numel(shape) != indices->size()) {
    throw InvalidShape("gather: index count does not match output shape");
  }
  const auto in = x.values();
  std::vector<double> out(indices->size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto src = (*indices)[i];
    if (src >= in.size()) throw InvalidShape("gather: index out of range");
    out[i] = in[src];
  }
  const Shape in_shape = x.shape();
  return make_op(
      std::move(shape), std::move(out), {x},
      [indices, in_shape](const Tensor&, const Tensor& g,
                          const std::vector<bool>&) -> std::vector<Tensor> {
        return {scatter_add_impl(g, indices, in_shape)};
      },
      "gather");
}

Tensor scatter_add_impl(const Tensor& x, Indices indices, Shape shape) {
  if (x.numel() != indices->size()) {
    throw InvalidShape("scatter_add: index count does not match input");
  }
  const auto in = x.values();
  std::vector<double> out(shape_numel(shape), 0.0);
  for (std::size_t i = 0; i < in.size(); ++i) {
    const auto dst = (*indices)[i];
    if (dst >= out.size()) throw InvalidShape("scatter_add: index out of range");
    out[dst] += in[i];
  }
  const Shape in_shape = x.shape();
  return make_op(
      std::move(shape), std::move(out), {x},
      [indices, in_shape](const Tensor&, const Tensor& g,
                          const std::vector<bool>&) -> std::vector<Tensor> {
        return {gather_impl(g, indices, in_shape)};
      },
      "scatter_add");
}

kernels::ConvGeometry geometry_for(const Shape& input, const Shape& kernel,
                                   Conv2dParams p) {
  kernels::ConvGeometry g;
  g.batch = input[0];
  g.in_channels = input[1];
  g.in_h = input[2];
  g.in_w = input[3];
  g.out_channels = kernel[0];
  g.kernel_h = kernel[2];
  g.kernel_w = kernel[3];
  g.stride = p.stride;
  g.padding = p.padding;
  return g;
}

void validate_conv(const Shape& input, const Shape& kernel, Conv2dParams p) {
  if (input.size() != 4 || kernel.size() != 4) {
    throw InvalidShape("conv2d: input " + shape_str(input) + " and kernel " +
                       shape_str(kernel) + " must both be rank 4");
  }
  if (p.stride == 0) throw InvalidParameter("conv2d: stride must be positive");
  if (input[1] != kernel[1]) {
    throw InvalidShape("conv2d: input channels " + std::to_string(input[1]) +
                       " do not match kernel channels " +
                       std::to_string(kernel[1]));
  }
  if (kernel[2] == 0 || kernel[3] == 0 || kernel[2] > input[2] + 2 * p.padding ||
      kernel[3] > input[3] + 2 * p.padding) {
    throw InvalidShape("conv2d: kernel " + shape_str(kernel) +
                       " does not fit padded input " + shape_str(input));
  }
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  return make_op(
      a.shape(), zip_values(a, b, [](double x, double y) { return x + y; }),
      {a, b},
      [](const Tensor&, const Tensor& g, const std::vector<bool>& needs) {
        return std::vector<Tensor>{needs[0] ? g : Tensor(),
                                   needs[1] ? g : Tensor()};
      },
      "add");
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  return make_op(
      a.shape(), zip_values(a, b, [](double x, double y) { return x - y; }),
      {a, b},
      [](const Tensor&, const Tensor& g, const std::vector<bool>& needs) {
        return std::vector<Tensor>{needs[0] ? g : Tensor(),
                                   needs[1] ? neg(g) : Tensor()};
      },
      "sub");
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  return make_op(
      a.shape(), zip_values(a, b, [](double x, double y) { return x * y; }),
      {a, b},
      [a, b](const Tensor&, const Tensor& g, const std::vector<bool>& needs) {
        return std::vector<Tensor>{needs[0] ? mul(g, b) : Tensor(),
                                   needs[1] ? mul(g, a) : Tensor()};
      },
      "mul");
}

Tensor div(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "div");
  return make_op(
      a.shape(), zip_values(a, b, [](double x, double y) { return x / y; }),
      {a, b},
      [b](const Tensor& self, const Tensor& g, const std::vector<bool>& needs) {
        return std::vector<Tensor>{
            needs[0] ? div(g, b) : Tensor(),
            needs[1] ? neg(div(mul(g, self), b)) : Tensor()};
      },
      "div");
}

Tensor neg(const Tensor& x) {
  return make_op(
      x.shape(), map_values(x, [](double v) { return -v; }), {x},
      [](const Tensor&, const Tensor& g, const std::vector<bool>&) {
        return std::vector<Tensor>{neg(g)};
      },
      "neg");
}

Tensor scale(const Tensor& x, double factor) {
  return make_op(
      x.shape(), map_values(x, [factor](double v) { return v * factor; }), {x},
      [factor](const Tensor&, const Tensor& g, const std::vector<bool>&) {
        return std::vector<Tensor>{scale(g, factor)};
      },
      "scale");
}

Tensor shift(const Tensor& x, double offset) {
  return make_op(
      x.shape(), map_values(x, [offset](double v) { return v + offset; }), {x},
      [](const Tensor&, const Tensor& g, const std::vector<bool>&) {
        return std::vector<Tensor>{g};
      },
      "shift");
}

Tensor relu(const Tensor& x) {
  return make_op(
      x.shape(), map_values(x, [](double v) { return v > 0.0 ? v : 0.0; }), {x},
      [x](const Tensor&, const Tensor& g, const std::vector<bool>&) {
        auto gate = Tensor::constant(
            x.shape(), map_values(x, [](double v) { return v > 0.0 ? 1.0 : 0.0; }));
        return std::vector<Tensor>{mul(g, gate)};
      },
      "relu");
}

Tensor abs(const Tensor& x) {
  return make_op(
      x.shape(), map_values(x, [](double v) { return std::fabs(v); }), {x},
      [x](const Tensor&, const Tensor& g, const std::vector<bool>&) {
        auto sign = Tensor::constant(x.shape(), map_values(x, [](double v) {
                                       return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
                                     }));
        return std::vector<Tensor>{mul(g, sign)};
      },
      "abs");
}

Tensor square(const Tensor& x) {
  return make_op(
      x.shape(), map_values(x, [](double v) { return v * v; }), {x},
      [x](const Tensor&, const Tensor& g, const std::vector<bool>&) {
        return std::vector<Tensor>{scale(mul(g, x), 2.0)};
      },
      "square");
}

Tensor sigmoid(const Tensor& x) {
  return make_op(
      x.shape(), map_values(x, stable_sigmoid), {x},
      [](const Tensor& self, const Tensor& g, const std::vector<bool>&) {
        // dy/dx = y (1 - y), expressed on the output node itself.
        return std::vector<Tensor>{mul(g, mul(self, shift(neg(self), 1.0)))};
      },
      "sigmoid");
}

Tensor softplus(const Tensor& x) {
  return make_op(
      x.shape(),
      map_values(x,
                 [](double v) {
                   return std::max(v, 0.0) + std::log1p(std::exp(-std::fabs(v)));
                 }),
      {x},
      [x](const Tensor&, const Tensor& g, const std::vector<bool>&) {
        return std::vector<Tensor>{mul(g, sigmoid(x))};
      },
      "softplus");
}

Tensor sum(const Tensor& x) {
  double total = 0.0;
  for (double v : x.values()) total += v;
  const Shape in_shape = x.shape();
  return make_op(
      {}, {total}, {x},
      [in_shape](const Tensor&, const Tensor& g, const std::vector<bool>&) {
        return std::vector<Tensor>{expand_scalar(g, in_shape)};
      },
      "sum");
}

Tensor mean(const Tensor& x) {
  if (x.numel() == 0) throw InvalidShape("mean of an empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(x.numel()));
}

Tensor reduce(const Tensor& x, Reduction kind) {
  return kind == Reduction::kSum ? sum(x) : mean(x);
}

Tensor expand_scalar(const Tensor& s, const Shape& shape) {
  if (s.numel() != 1) throw InvalidShape("expand_scalar needs a scalar");
  return make_op(
      shape, std::vector<double>(shape_numel(shape), s.item()), {s},
      [](const Tensor&, const Tensor& g, const std::vector<bool>&) {
        return std::vector<Tensor>{sum(g)};
      },
      "expand_scalar");
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw InvalidShape("reshape " + shape_str(x.shape()) + " -> " +
                       shape_str(shape));
  }
  const Shape in_shape = x.shape();
  const auto v = x.values();
  return make_op(
      std::move(shape), std::vector<double>(v.begin(), v.end()), {x},
      [in_shape](const Tensor&, const Tensor& g, const std::vector<bool>&) {
        return std::vector<Tensor>{reshape(g, in_shape)};
      },
      "reshape");
}

Tensor select(const Tensor& x, std::size_t index) {
  if (x.rank() == 0 || index >= x.dim(0)) {
    throw InvalidShape("select index " + std::to_string(index) + " on " +
                       shape_str(x.shape()));
  }
  const std::size_t count = x.dim(0);
  Shape out_shape(x.shape().begin() + 1, x.shape().end());
  const std::size_t stride = shape_numel(out_shape);
  const auto v = x.values();
  std::vector<double> out(v.begin() + static_cast<std::ptrdiff_t>(index * stride),
                          v.begin() + static_cast<std::ptrdiff_t>((index + 1) * stride));
  return make_op(
      std::move(out_shape), std::move(out), {x},
      [index, count](const Tensor&, const Tensor& g, const std::vector<bool>&) {
        return std::vector<Tensor>{embed(g, index, count)};
      },
      "select");
}

Tensor embed(const Tensor& x, std::size_t index, std::size_t count) {
  if (index >= count) throw InvalidShape("embed index out of range");
  Shape out_shape{count};
  out_shape.insert(out_shape.end(), x.shape().begin(), x.shape().end());
  const std::size_t stride = x.numel();
  std::vector<double> out(count * stride, 0.0);
  std::copy(x.values().begin(), x.values().end(),
            out.begin() + static_cast<std::ptrdiff_t>(index * stride));
  return make_op(
      std::move(out_shape), std::move(out), {x},
      [index](const Tensor&, const Tensor& g, const std::vector<bool>&) {
        return std::vector<Tensor>{select(g, index)};
      },
      "embed");
}

Tensor column(const Tensor& x, std::size_t j) {
  require_rank(x, 2, "column");
  const std::size_t n = x.dim(0), m = x.dim(1);
  if (j >= m) throw InvalidShape("column index out of range");
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = x.at(i * m + j);
  return make_op(
      {n}, std::move(out), {x},
      [j, m](const Tensor&, const Tensor& g, const std::vector<bool>&) {
        return std::vector<Tensor>{place_column(g, j, m)};
      },
      "column");
}

Tensor place_column(const Tensor& x, std::size_t j, std::size_t m) {
  require_rank(x, 1, "place_column");
  if (j >= m) throw InvalidShape("place_column index out of range");
  const std::size_t n = x.dim(0);
  std::vector<double> out(n * m, 0.0);
  for (std::size_t i = 0; i < n; ++i) out[i * m + j] = x.at(i);
  return make_op(
      {n, m}, std::move(out), {x},
      [j](const Tensor&, const Tensor& g, const std::vector<bool>&) {
        return std::vector<Tensor>{column(g, j)};
      },
      "place_column");
}

Tensor broadcast_rows(const Tensor& x, std::size_t rows) {
  require_rank(x, 1, "broadcast_rows");
  const std::size_t m = x.dim(0);
  std::vector<double> out;
  out.reserve(rows * m);
  for (std::size_t i = 0; i < rows; ++i) {
    out.insert(out.end(), x.values().begin(), x.values().end());
  }
  return make_op(
      {rows, m}, std::move(out), {x},
      [](const Tensor&, const Tensor& g, const std::vector<bool>&) {
        return std::vector<Tensor>{sum_rows(g)};
      },
      "broadcast_rows");
}

Tensor sum_rows(const Tensor& x) {
  require_rank(x, 2, "sum_rows");
  const std::size_t n = x.dim(0), m = x.dim(1);
  std::vector<double> out(m, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out[j] += x.at(i * m + j);
  return make_op(
      {m}, std::move(out), {x},
      [n](const Tensor&, const Tensor& g, const std::vector<bool>&) {
        return std::vector<Tensor>{broadcast_rows(g, n)};
      },
      "sum_rows");
}

Tensor transpose(const Tensor& x) {
  require_rank(x, 2, "transpose");
  const std::size_t n = x.dim(0), m = x.dim(1);
  std::vector<double> out(n * m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out[j * n + i] = x.at(i * m + j);
  return make_op(
      {m, n}, std::move(out), {x},
      [](const Tensor&, const Tensor& g, const std::vector<bool>&) {
        return std::vector<Tensor>{transpose(g)};
      },
      "transpose");
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  if (a.dim(1) != b.dim(0)) {
    throw InvalidShape("matmul: " + shape_str(a.shape()) + " x " +
                       shape_str(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> out(m * n);
  kernels::matmul(m, k, n, a.values(), b.values(), out);
  return make_op(
      {m, n}, std::move(out), {a, b},
      [a, b](const Tensor&, const Tensor& g, const std::vector<bool>& needs) {
        return std::vector<Tensor>{
            needs[0] ? matmul(g, transpose(b)) : Tensor(),
            needs[1] ? matmul(transpose(a), g) : Tensor()};
      },
      "matmul");
}

Tensor spatial_sum(const Tensor& x) {
  require_rank(x, 4, "spatial_sum");
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t plane = h * w;
  std::vector<double> out(n * c, 0.0);
  const auto v = x.values();
  for (std::size_t p = 0; p < n * c; ++p) {
    double acc = 0.0;
    for (std::size_t i = 0; i < plane; ++i) acc += v[p * plane + i];
    out[p] = acc;
  }
  return make_op(
      {n, c}, std::move(out), {x},
      [h, w](const Tensor&, const Tensor& g, const std::vector<bool>&) {
        return std::vector<Tensor>{spatial_expand(g, h, w)};
      },
      "spatial_sum");
}

Tensor spatial_expand(const Tensor& x, std::size_t h, std::size_t w) {
  require_rank(x, 2, "spatial_expand");
  const std::size_t n = x.dim(0), c = x.dim(1);
  const std::size_t plane = h * w;
  std::vector<double> out(n * c * plane);
  const auto v = x.values();
  for (std::size_t p = 0; p < n * c; ++p) {
    std::fill_n(out.begin() + static_cast<std::ptrdiff_t>(p * plane), plane, v[p]);
  }
  return make_op(
      {n, c, h, w}, std::move(out), {x},
      [](const Tensor&, const Tensor& g, const std::vector<bool>&) {
        return std::vector<Tensor>{spatial_sum(g)};
      },
      "spatial_expand");
}

Tensor gather(const Tensor& x, std::vector<std::uint32_t> indices, Shape shape) {
  return gather_impl(
      x, std::make_shared<const std::vector<std::uint32_t>>(std::move(indices)),
      std::move(shape));
}

Tensor scatter_add(const Tensor& x, std::vector<std::uint32_t> indices,
                   Shape shape) {
  return scatter_add_impl(
      x, std::make_shared<const std::vector<std::uint32_t>>(std::move(indices)),
      std::move(shape));
}

Tensor conv2d(const Tensor& input, const Tensor& kernel, Conv2dParams params) {
  validate_conv(input.shape(), kernel.shape(), params);
  const auto g = geometry_for(input.shape(), kernel.shape(), params);
  std::vector<double> out(g.output_size());
  kernels::conv2d_forward(g, input.values(), kernel.values(), out);
  const std::size_t in_h = g.in_h, in_w = g.in_w;
  const std::size_t kh = g.kernel_h, kw = g.kernel_w;
  return make_op(
      {g.batch, g.out_channels, g.out_h(), g.out_w()}, std::move(out),
      {input, kernel},
      [input, kernel, in_h, in_w, kh, kw, params](
          const Tensor&, const Tensor& grad, const std::vector<bool>& needs) {
        return std::vector<Tensor>{
            needs[0] ? conv2d_input_grad(grad, kernel, in_h, in_w, params)
                     : Tensor(),
            needs[1] ? conv2d_kernel_grad(input, grad, kh, kw, params)
                     : Tensor()};
      },
      "conv2d");
}

Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias,
              Conv2dParams params) {
  auto out = conv2d(input, kernel, params);
  if (bias.rank() != 1 || bias.dim(0) != kernel.dim(0)) {
    throw InvalidShape("conv2d: bias " + shape_str(bias.shape()) +
                       " does not match kernel " + shape_str(kernel.shape()));
  }
  return add(out, spatial_expand(broadcast_rows(bias, out.dim(0)), out.dim(2),
                                 out.dim(3)));
}

Tensor conv2d_input_grad(const Tensor& grad_out, const Tensor& kernel,
                         std::size_t in_h, std::size_t in_w,
                         Conv2dParams params) {
  require_rank(grad_out, 4, "conv2d_input_grad");
  const Shape input_shape{grad_out.dim(0), kernel.dim(1), in_h, in_w};
  validate_conv(input_shape, kernel.shape(), params);
  const auto g = geometry_for(input_shape, kernel.shape(), params);
  if (grad_out.dim(1) != g.out_channels || grad_out.dim(2) != g.out_h() ||
      grad_out.dim(3) != g.out_w()) {
    throw InvalidShape("conv2d_input_grad: gradient " +
                       shape_str(grad_out.shape()) + " inconsistent with input " +
                       shape_str(input_shape));
  }
  std::vector<double> out(g.input_size());
  kernels::conv2d_input_grad(g, grad_out.values(), kernel.values(), out);
  const std::size_t kh = g.kernel_h, kw = g.kernel_w;
  return make_op(
      input_shape, std::move(out), {grad_out, kernel},
      [grad_out, kernel, kh, kw, params](const Tensor&, const Tensor& v,
                                         const std::vector<bool>& needs) {
        return std::vector<Tensor>{
            needs[0] ? conv2d(v, kernel, params) : Tensor(),
            needs[1] ? conv2d_kernel_grad(v, grad_out, kh, kw, params)
                     : Tensor()};
      },
      "conv2d_input_grad");
}

Tensor conv2d_kernel_grad(const Tensor& input, const Tensor& grad_out,
                          std::size_t kernel_h, std::size_t kernel_w,
                          Conv2dParams params) {
  require_rank(input, 4, "conv2d_kernel_grad");
  require_rank(grad_out, 4, "conv2d_kernel_grad");
  const Shape kernel_shape{grad_out.dim(1), input.dim(1), kernel_h, kernel_w};
  validate_conv(input.shape(), kernel_shape, params);
  const auto g = geometry_for(input.shape(), kernel_shape, params);
  if (grad_out.dim(0) != g.batch || grad_out.dim(2) != g.out_h() ||
      grad_out.dim(3) != g.out_w()) {
    throw InvalidShape("conv2d_kernel_grad: gradient " +
                       shape_str(grad_out.shape()) + " inconsistent with input " +
                       shape_str(input.shape()));
  }
  std::vector<double> out(g.kernel_size());
  kernels::conv2d_kernel_grad(g, input.values(), grad_out.values(), out);
  const std::size_t in_h = g.in_h, in_w = g.in_w;
  return make_op(
      kernel_shape, std::move(out), {input, grad_out},
      [input, grad_out, in_h, in_w, params](const Tensor&, const Tensor& v,
                                            const std::vector<bool>& needs) {
        return std::vector<Tensor>{
            needs[0] ? conv2d_input_grad(grad_out, v, in_h, in_w, params)
                     : Tensor(),
            needs[1] ? conv2d(input, v, params) : Tensor()};
      },
      "conv2d_kernel_grad");
}

Tensor max_pool2d(const Tensor& x) {
  require_rank(x, 4, "max_pool2d");
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t oh = h / 2, ow = w / 2;
  if (oh == 0 || ow == 0) throw InvalidShape("max_pool2d: input too small");
  const auto v = x.values();
  std::vector<std::uint32_t> argmax(n * c * oh * ow);
  std::size_t out = 0;
  for (std::size_t p = 0; p < n * c; ++p) {
    const std::size_t base = p * h * w;
    for (std::size_t oy = 0; oy < oh; ++oy)
      for (std::size_t ox = 0; ox < ow; ++ox) {
        // First maximum in row-major window order wins ties.
        std::size_t best = base + (2 * oy) * w + 2 * ox;
        for (std::size_t dy = 0; dy < 2; ++dy)
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t idx = base + (2 * oy + dy) * w + 2 * ox + dx;
            if (v[idx] > v[best]) best = idx;
          }
        argmax[out++] = static_cast<std::uint32_t>(best);
      }
  }
  return gather(x, std::move(argmax), {n, c, oh, ow});
}

Tensor global_avg_pool(const Tensor& x) {
  require_rank(x, 4, "global_avg_pool");
  const std::size_t plane = x.dim(2) * x.dim(3);
  if (plane == 0) throw InvalidShape("global_avg_pool: empty spatial extent");
  return scale(spatial_sum(x), 1.0 / static_cast<double>(plane));
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require_rank(x, 2, "linear");
  require_rank(weight, 2, "linear");
  require_rank(bias, 1, "linear");
  if (weight.dim(1) != x.dim(1) || bias.dim(0) != weight.dim(0)) {
    throw InvalidShape("linear: input " + shape_str(x.shape()) + ", weight " +
                       shape_str(weight.shape()) + ", bias " +
                       shape_str(bias.shape()));
  }
  return add(matmul(x, transpose(weight)), broadcast_rows(bias, x.dim(0)));
}

Tensor softmax2(const Tensor& z) {
  require_rank(z, 2, "softmax2");
  if (z.dim(1) != 2) throw InvalidShape("softmax2 expects two columns");
  // For two classes the max-shifted softmax reduces to a stable sigmoid of
  // the logit difference.
  const auto diff = sub(column(z, 1), column(z, 0));
  return add(place_column(sigmoid(neg(diff)), 0, 2),
             place_column(sigmoid(diff), 1, 2));
}

Tensor dropout(const Tensor& x, double p, bool training, Rng& rng) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw InvalidParameter("dropout probability must lie in [0, 1), got " +
                           std::to_string(p));
  }
  if (!training || p == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - p);
  std::vector<double> mask(x.numel());
  for (auto& m : mask) m = rng.uniform() < p ? 0.0 : keep_scale;
  return mul(x, Tensor::constant(x.shape(), std::move(mask)));
}

}  // namespace salguide
