// SPDX-License-Identifier: Apache-2.0
//
// FPT1 tensor container. Little-endian layout:
//
//   offset  size        field
//   0       4           magic "FPT1"
//   4       1           dtype: 0x00 binary32, 0x01 e4m3, 0x02 e5m2
//   5       1           rank, 1..8
//   6       2           reserved, must be zero
//   8       rank * 8    dims, u64 each
//   ...     n * elem    payload, row-major
//
// The product of dims must not exceed 2^40.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>

#include "fp8/scaling.hpp"
#include "fp8/tensor.hpp"

namespace fp8 {

enum class TensorDtype : std::uint8_t { Binary32 = 0x00, E4M3 = 0x01, E5M2 = 0x02 };

class TensorIoError : public std::runtime_error {
 public:
  enum class Kind {
    BadMagic,
    BadDtype,
    RankOutOfRange,
    BadReserved,
    BadDims,
    TruncatedPayload,
    Io,
  };
  TensorIoError(Kind k, const std::string& msg) : std::runtime_error(msg), kind_(k) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

std::variant<Tensor, Fp8Tensor> read_tensor(const std::string& path);
void write_tensor(const std::string& path, const Tensor& t);
void write_tensor(const std::string& path, const Fp8Tensor& t);

// Exact widening of every element.
Tensor decode_tensor(const Fp8Tensor& t);

// Writes "<tensor_path>.meta.json" describing an fp8 payload's format and
// scales.
void write_sidecar(const std::string& tensor_path, const Fp8Format& f,
                   const ScaleSet& scales);

}  // namespace fp8
