#ifndef COLLABTRACK_MODEL_IO_HPP_
#define COLLABTRACK_MODEL_IO_HPP_

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <type_traits>
#include <vector>

#include "errors.hpp"
#include "network.hpp"

namespace collabtrack {

// Layout: "CDTM", u32 version, u32 layer count, then per layer u32 rows,
// u32 cols, rows*cols f64 weights (row-major), cols f64 biases. All integers
// and floats little-endian.
inline constexpr std::array<char, 4> kModelMagic{'C', 'D', 'T', 'M'};
inline constexpr std::uint32_t kModelVersion = 1;

namespace detail {

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<std::uint8_t, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.insert(out.end(), bytes.begin(), bytes.end());
}

class ByteReader {
public:
  explicit ByteReader(const std::vector<std::uint8_t>& data) : data_(data) {}

  template <typename T>
  T get(const char* what) {
    if (data_.size() - pos_ < sizeof(T)) throw DataError(std::string("model file truncated while reading ") + what);
    std::array<std::uint8_t, sizeof(T)> bytes;
    std::memcpy(bytes.data(), data_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    pos_ += sizeof(T);
    T value;
    std::memcpy(&value, bytes.data(), sizeof(T));
    return value;
  }

  std::size_t remaining() const { return data_.size() - pos_; }

private:
  const std::vector<std::uint8_t>& data_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::vector<std::uint8_t> encode_model(const NetworkParams& params) {
  std::vector<std::uint8_t> out(kModelMagic.begin(), kModelMagic.end());
  detail::put_le(out, kModelVersion);
  detail::put_le(out, static_cast<std::uint32_t>(params.layers.size()));
  for (const auto& l : params.layers) {
    detail::put_le(out, static_cast<std::uint32_t>(l.weights.rows()));
    detail::put_le(out, static_cast<std::uint32_t>(l.weights.cols()));
    for (Eigen::Index i = 0; i < l.weights.rows(); ++i)
      for (Eigen::Index j = 0; j < l.weights.cols(); ++j) detail::put_le(out, l.weights(i, j));
    for (Eigen::Index j = 0; j < l.bias.size(); ++j) detail::put_le(out, l.bias[j]);
  }
  return out;
}

inline NetworkParams decode_model(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kModelMagic.size() || !std::equal(kModelMagic.begin(), kModelMagic.end(), bytes.begin()))
    throw DataError("not a model file (bad magic bytes)");
  std::vector<std::uint8_t> body(bytes.begin() + kModelMagic.size(), bytes.end());
  detail::ByteReader in(body);
  const auto version = in.get<std::uint32_t>("version");
  if (version != kModelVersion) throw DataError("unsupported model version " + std::to_string(version));
  const auto count = in.get<std::uint32_t>("layer count");
  if (count == 0 || count > 64) throw DataError("implausible layer count " + std::to_string(count));

  NetworkParams params;
  for (std::uint32_t m = 0; m < count; ++m) {
    const auto rows = in.get<std::uint32_t>("layer rows");
    const auto cols = in.get<std::uint32_t>("layer cols");
    const std::uint64_t needed = (static_cast<std::uint64_t>(rows) * cols + cols) * sizeof(double);
    if (rows == 0 || cols == 0 || needed > in.remaining())
      throw DataError("layer " + std::to_string(m + 1) + " shape " + std::to_string(rows) + "x" +
                      std::to_string(cols) + " does not fit the file");
    DenseLayer l{Eigen::MatrixXd(rows, cols), Eigen::VectorXd(cols)};
    for (std::uint32_t i = 0; i < rows; ++i)
      for (std::uint32_t j = 0; j < cols; ++j) l.weights(i, j) = in.get<double>("weights");
    for (std::uint32_t j = 0; j < cols; ++j) l.bias[j] = in.get<double>("bias");
    params.layers.push_back(std::move(l));
  }
  if (in.remaining() != 0) throw DataError("trailing bytes after model data");
  try {
    validate(params);
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("malformed model: ") + e.what());
  }
  return params;
}

inline void write_model(const std::filesystem::path& path, const NetworkParams& params) {
  const auto bytes = encode_model(params);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model file " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing model file " + path.string());
}

inline NetworkParams read_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_model(bytes);
}

}  // namespace collabtrack

#endif  // COLLABTRACK_MODEL_IO_HPP_
