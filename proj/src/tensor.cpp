// SPDX-License-Identifier: Apache-2.0

#include "fp8/tensor.hpp"

namespace fp8 {

bool shape_valid(const std::vector<std::int64_t>& shape) {
  if (shape.empty()) return false;
  for (const auto d : shape) {
    if (d <= 0) return false;
  }
  return true;
}

std::int64_t element_count(const std::vector<std::int64_t>& shape) {
  std::int64_t n = 1;
  for (const auto d : shape) n *= d;
  return n;
}

std::int64_t stride_of_axis(const std::vector<std::int64_t>& shape, int axis) {
  std::int64_t s = 1;
  for (std::size_t i = std::size_t(axis) + 1; i < shape.size(); ++i) s *= shape[i];
  return s;
}

std::int64_t channel_of(const std::vector<std::int64_t>& shape, int axis,
                        std::int64_t linear_index) {
  return (linear_index / stride_of_axis(shape, axis)) % shape[std::size_t(axis)];
}

}  // namespace fp8
