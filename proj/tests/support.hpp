#pragma once

// Oracles shared by the test binaries: central finite differences, relative
// error, random tensors and scratch directories.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "salguide/autograd.hpp"
#include "salguide/rng.hpp"
#include "salguide/tensor.hpp"

namespace testing {

using salguide::Rng;
using salguide::Shape;
using salguide::Tensor;

// ||a - b||_2 / max(||b||_2, floor)
inline double rel_err(const std::vector<double>& a, const std::vector<double>& b,
                      double floor = 1e-12) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num) / std::max(std::sqrt(den), floor);
}

inline std::vector<double> to_vector(const Tensor& t) {
  return {t.values().begin(), t.values().end()};
}

inline std::vector<double> random_values(std::size_t n, Rng& rng, double lo = -1.0,
                                         double hi = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

inline Tensor random_parameter(const Shape& shape, Rng& rng, double lo = -1.0,
                               double hi = 1.0) {
  return Tensor::parameter(shape, random_values(salguide::shape_numel(shape), rng, lo, hi));
}

inline Tensor random_constant(const Shape& shape, Rng& rng, double lo = -1.0,
                              double hi = 1.0) {
  return Tensor::constant(shape, random_values(salguide::shape_numel(shape), rng, lo, hi));
}

// Central differences of a scalar function with respect to a leaf tensor,
// perturbing its values in place.
inline std::vector<double> fd_gradient(const std::function<double()>& f, Tensor& leaf,
                                       double h = 1e-5) {
  auto values = leaf.mutable_values();
  std::vector<double> grad(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double saved = values[i];
    values[i] = saved + h;
    const double up = f();
    values[i] = saved - h;
    const double down = f();
    values[i] = saved;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

// Central differences of a vector-valued function: result[i][j] = d out_j / d leaf_i.
inline std::vector<std::vector<double>> fd_jacobian(
    const std::function<std::vector<double>()>& f, Tensor& leaf, double h = 1e-5) {
  auto values = leaf.mutable_values();
  std::vector<std::vector<double>> jac(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double saved = values[i];
    values[i] = saved + h;
    const auto up = f();
    values[i] = saved - h;
    const auto down = f();
    values[i] = saved;
    jac[i].resize(up.size());
    for (std::size_t j = 0; j < up.size(); ++j) jac[i][j] = (up[j] - down[j]) / (2.0 * h);
  }
  return jac;
}

// Analytic gradient of a scalar graph with respect to one leaf.
inline std::vector<double> analytic_gradient(const Tensor& loss, const Tensor& leaf) {
  const auto grads = salguide::backward(loss, {leaf});
  return to_vector(grads.at(leaf));
}

// Fresh directory under the system temp dir, removed on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("salguide_" + tag + "_" + std::to_string(rd()) + "_" +
             std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

}  // namespace testing
