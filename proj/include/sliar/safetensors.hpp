#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sliar/errors.hpp"

namespace sliar::safetensors {

enum class DType { F32, F64 };

struct TensorView {
  DType dtype = DType::F32;
  std::vector<std::int64_t> shape;
  std::span<const std::byte> bytes;

  std::int64_t numel() const;
};

/// Reads a whole .safetensors file (8-byte little-endian header length,
/// JSON header, raw little-endian tensor data).
class File {
 public:
  static File load(const std::filesystem::path& path);

  bool contains(const std::string& name) const { return tensors_.contains(name); }
  const TensorView& at(const std::string& name) const;
  const std::map<std::string, std::string>& metadata() const { return metadata_; }
  std::vector<std::string> names() const;

  /// Copies a tensor into `out` (rows x cols). The stored tensor must hold
  /// rows * cols elements in row-major order and have `rows` as its leading
  /// dimension (or be 1-D when cols == 1).
  template <typename Scalar>
  void copy_to(const std::string& name, Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& out) const {
    const auto& t = at(name);
    const auto rows = out.rows();
    const auto cols = out.cols();
    if (t.numel() != rows * cols || t.shape.empty() || t.shape.front() != rows) {
      throw LoadError("tensor '" + name + "' has incompatible shape for " + std::to_string(rows) + "x" +
                      std::to_string(cols));
    }
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) out(r, c) = static_cast<Scalar>(element(t, r * cols + c));
    }
  }

 private:
  static double element(const TensorView& t, std::int64_t i);

  std::vector<std::byte> data_;
  std::map<std::string, TensorView> tensors_;
  std::map<std::string, std::string> metadata_;
};

struct Entry {
  std::string name;
  DType dtype = DType::F32;
  std::vector<std::int64_t> shape;
  std::vector<double> values;  // row-major
};

void save(const std::filesystem::path& path, const std::vector<Entry>& tensors,
          const std::map<std::string, std::string>& metadata);

/// Row-major copy of a matrix with its logical shape ([rows] for columns).
template <typename Scalar>
Entry make_entry(const std::string& name, const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& m,
                 DType dtype) {
  Entry e;
  e.name = name;
  e.dtype = dtype;
  e.shape = m.cols() == 1 ? std::vector<std::int64_t>{m.rows()} : std::vector<std::int64_t>{m.rows(), m.cols()};
  e.values.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) e.values.push_back(static_cast<double>(m(r, c)));
  }
  return e;
}

}  // namespace sliar::safetensors
