// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "fp8/format.hpp"

namespace fp8 {

// Dense row-major binary32 tensor.
struct Tensor {
  std::vector<std::int64_t> shape;
  std::vector<float> data;
};

// Dense row-major FP8 tensor (raw bit patterns).
struct Fp8Tensor {
  std::vector<std::int64_t> shape;
  std::vector<std::uint8_t> data;
  Fp8Format format;
};

// Rank >= 1 and every dimension positive.
bool shape_valid(const std::vector<std::int64_t>& shape);
std::int64_t element_count(const std::vector<std::int64_t>& shape);

// Row-major stride of `axis` (product of the dimensions after it).
std::int64_t stride_of_axis(const std::vector<std::int64_t>& shape, int axis);

// Index along `axis` of the element at a linear row-major position.
std::int64_t channel_of(const std::vector<std::int64_t>& shape, int axis,
                        std::int64_t linear_index);

}  // namespace fp8
