// SPDX-License-Identifier: Apache-2.0

#include "fp8/tensorio.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

#include "json.hpp"

namespace fp8 {

namespace {

constexpr char kMagic[4] = {'F', 'P', 'T', '1'};
constexpr std::uint64_t kMaxElements = std::uint64_t(1) << 40;

void put_u64le(std::vector<unsigned char>& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back((unsigned char)((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_u64le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(p[i]) << (8 * i);
  return v;
}

std::uint64_t checked_element_count(const std::vector<std::int64_t>& shape) {
  if (shape.empty() || shape.size() > 8) {
    throw TensorIoError(TensorIoError::Kind::RankOutOfRange,
                        "rank: must be 1..8, got " + std::to_string(shape.size()));
  }
  std::uint64_t n = 1;
  for (const auto d : shape) {
    if (d <= 0) {
      throw TensorIoError(TensorIoError::Kind::BadDims, "dims: dimension must be positive");
    }
    if (n > kMaxElements / std::uint64_t(d)) {
      throw TensorIoError(TensorIoError::Kind::BadDims, "dims: element count exceeds 2^40");
    }
    n *= std::uint64_t(d);
  }
  return n;
}

void write_file(const std::string& path, TensorDtype dtype,
                const std::vector<std::int64_t>& shape, const unsigned char* payload,
                std::size_t payload_len) {
  std::vector<unsigned char> header;
  header.insert(header.end(), kMagic, kMagic + 4);
  header.push_back((unsigned char)dtype);
  header.push_back((unsigned char)shape.size());
  header.push_back(0);
  header.push_back(0);
  for (const auto d : shape) put_u64le(header, std::uint64_t(d));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw TensorIoError(TensorIoError::Kind::Io, "cannot open " + path);
  out.write((const char*)header.data(), std::streamsize(header.size()));
  out.write((const char*)payload, std::streamsize(payload_len));
  if (!out) throw TensorIoError(TensorIoError::Kind::Io, "write failed: " + path);
}

}  // namespace

void write_tensor(const std::string& path, const Tensor& t) {
  const std::uint64_t n = checked_element_count(t.shape);
  if (n != t.data.size()) {
    throw std::invalid_argument("write_tensor: data length does not match shape");
  }
  std::vector<unsigned char> payload(t.data.size() * 4);
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(payload.data(), t.data.data(), payload.size());
  } else {
    for (std::size_t i = 0; i < t.data.size(); ++i) {
      const auto u = std::bit_cast<std::uint32_t>(t.data[i]);
      for (int b = 0; b < 4; ++b) payload[i * 4 + std::size_t(b)] = (u >> (8 * b)) & 0xFF;
    }
  }
  write_file(path, TensorDtype::Binary32, t.shape, payload.data(), payload.size());
}

void write_tensor(const std::string& path, const Fp8Tensor& t) {
  const std::uint64_t n = checked_element_count(t.shape);
  if (n != t.data.size()) {
    throw std::invalid_argument("write_tensor: data length does not match shape");
  }
  const TensorDtype dtype =
      t.format.name == FormatName::E4M3 ? TensorDtype::E4M3 : TensorDtype::E5M2;
  write_file(path, dtype, t.shape, t.data.data(), t.data.size());
}

std::variant<Tensor, Fp8Tensor> read_tensor(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TensorIoError(TensorIoError::Kind::Io, "cannot open " + path);

  unsigned char head[8];
  in.read((char*)head, 8);
  if (in.gcount() != 8) {
    throw TensorIoError(TensorIoError::Kind::BadMagic, "magic: file shorter than header");
  }
  if (std::memcmp(head, kMagic, 4) != 0) {
    throw TensorIoError(TensorIoError::Kind::BadMagic, "magic: not an FPT1 file");
  }
  const unsigned dtype_byte = head[4];
  if (dtype_byte > 2) {
    throw TensorIoError(TensorIoError::Kind::BadDtype,
                        "dtype: unknown code " + std::to_string(dtype_byte));
  }
  const unsigned rank = head[5];
  if (rank < 1 || rank > 8) {
    throw TensorIoError(TensorIoError::Kind::RankOutOfRange,
                        "rank: must be 1..8, got " + std::to_string(rank));
  }
  if (head[6] != 0 || head[7] != 0) {
    throw TensorIoError(TensorIoError::Kind::BadReserved, "reserved: bytes must be zero");
  }

  std::vector<unsigned char> dim_bytes(rank * 8);
  in.read((char*)dim_bytes.data(), std::streamsize(dim_bytes.size()));
  if (std::size_t(in.gcount()) != dim_bytes.size()) {
    throw TensorIoError(TensorIoError::Kind::TruncatedPayload, "dims: file ends inside header");
  }
  std::vector<std::int64_t> shape(rank);
  std::uint64_t n = 1;
  for (unsigned i = 0; i < rank; ++i) {
    const std::uint64_t d = get_u64le(dim_bytes.data() + i * 8);
    if (d == 0) {
      throw TensorIoError(TensorIoError::Kind::BadDims, "dims: dimension must be positive");
    }
    if (d > kMaxElements || n > kMaxElements / d) {
      throw TensorIoError(TensorIoError::Kind::BadDims, "dims: element count exceeds 2^40");
    }
    n *= d;
    shape[i] = std::int64_t(d);
  }

  const std::size_t elem_size = dtype_byte == 0 ? 4 : 1;
  const std::uint64_t want = n * elem_size;
  std::vector<unsigned char> payload(want);
  in.read((char*)payload.data(), std::streamsize(want));
  if (std::uint64_t(in.gcount()) != want) {
    throw TensorIoError(TensorIoError::Kind::TruncatedPayload,
                        "payload: expected " + std::to_string(want) + " bytes, got " +
                            std::to_string(in.gcount()));
  }
  char extra;
  if (in.read(&extra, 1); in.gcount() != 0) {
    throw TensorIoError(TensorIoError::Kind::TruncatedPayload,
                        "payload: trailing bytes after " + std::to_string(want));
  }

  if (dtype_byte == 0) {
    Tensor t;
    t.shape = std::move(shape);
    t.data.resize(n);
    if constexpr (std::endian::native == std::endian::little) {
      std::memcpy(t.data.data(), payload.data(), want);
    } else {
      for (std::uint64_t i = 0; i < n; ++i) {
        std::uint32_t u = 0;
        for (int b = 0; b < 4; ++b) u |= std::uint32_t(payload[i * 4 + std::uint64_t(b)]) << (8 * b);
        t.data[i] = std::bit_cast<float>(u);
      }
    }
    return t;
  }
  Fp8Tensor t;
  t.shape = std::move(shape);
  t.format = dtype_byte == 1 ? Fp8Format::e4m3() : Fp8Format::e5m2();
  t.data.assign(payload.begin(), payload.end());
  return t;
}

Tensor decode_tensor(const Fp8Tensor& t) {
  Tensor out;
  out.shape = t.shape;
  out.data.resize(t.data.size());
  for (std::size_t i = 0; i < t.data.size(); ++i) {
    out.data[i] = decode(Fp8Value{t.data[i], t.format});
  }
  return out;
}

void write_sidecar(const std::string& tensor_path, const Fp8Format& f,
                   const ScaleSet& scales) {
  nlohmann::ordered_json j;
  j["format"] = to_string(f.name);
  if (scales.granularity.kind == ScaleGranularity::PerTensor) {
    j["granularity"] = "tensor";
    j["scale"] = double(scales.scales.at(0).value);
  } else {
    j["granularity"] = "channel";
    j["axis"] = scales.granularity.axis;
    auto arr = nlohmann::ordered_json::array();
    for (const auto& s : scales.scales) arr.push_back(double(s.value));
    j["per_channel_scales"] = std::move(arr);
  }
  const std::string path = tensor_path + ".meta.json";
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw TensorIoError(TensorIoError::Kind::Io, "cannot open " + path);
  out << j.dump(2) << "\n";
  if (!out) throw TensorIoError(TensorIoError::Kind::Io, "write failed: " + path);
}

}  // namespace fp8
