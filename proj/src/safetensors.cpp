#include "sliar/safetensors.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace sliar::safetensors {
namespace {

static_assert(std::endian::native == std::endian::little, "safetensors I/O assumes a little-endian host");

std::size_t dtype_size(DType d) { return d == DType::F32 ? 4 : 8; }

const char* dtype_name(DType d) { return d == DType::F32 ? "F32" : "F64"; }

}  // namespace

std::int64_t TensorView::numel() const {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

File File::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open weights file '" + path.string() + "'");
  File f;
  std::uint64_t header_len = 0;
  in.read(reinterpret_cast<char*>(&header_len), sizeof header_len);
  if (!in || header_len > (1ull << 30)) throw LoadError("'" + path.string() + "' is not a safetensors file");
  std::string header(header_len, '\0');
  in.read(header.data(), static_cast<std::streamsize>(header_len));
  const auto body_start = in.tellg();
  in.seekg(0, std::ios::end);
  const auto body_len = static_cast<std::size_t>(in.tellg() - body_start);
  in.seekg(body_start);
  f.data_.resize(body_len);
  in.read(reinterpret_cast<char*>(f.data_.data()), static_cast<std::streamsize>(body_len));
  if (!in) throw LoadError("truncated safetensors file '" + path.string() + "'");

  const auto j = nlohmann::json::parse(header, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw LoadError("corrupt safetensors header in '" + path.string() + "'");
  for (const auto& [name, info] : j.items()) {
    if (name == "__metadata__") {
      for (const auto& [k, v] : info.items()) f.metadata_[k] = v.get<std::string>();
      continue;
    }
    TensorView t;
    const auto dtype = info.at("dtype").get<std::string>();
    if (dtype == "F32") {
      t.dtype = DType::F32;
    } else if (dtype == "F64") {
      t.dtype = DType::F64;
    } else {
      throw LoadError("tensor '" + name + "' has unsupported dtype " + dtype);
    }
    t.shape = info.at("shape").get<std::vector<std::int64_t>>();
    const auto offsets = info.at("data_offsets").get<std::vector<std::size_t>>();
    if (offsets.size() != 2 || offsets[1] > body_len || offsets[0] > offsets[1] ||
        offsets[1] - offsets[0] != static_cast<std::size_t>(t.numel()) * dtype_size(t.dtype)) {
      throw LoadError("tensor '" + name + "' has inconsistent offsets");
    }
    t.bytes = std::span<const std::byte>(f.data_.data() + offsets[0], offsets[1] - offsets[0]);
    f.tensors_.emplace(name, std::move(t));
  }
  return f;
}

const TensorView& File::at(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw LoadError("missing tensor '" + name + "'");
  return it->second;
}

std::vector<std::string> File::names() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : tensors_) out.push_back(k);
  return out;
}

double File::element(const TensorView& t, std::int64_t i) {
  if (t.dtype == DType::F32) {
    float v;
    std::memcpy(&v, t.bytes.data() + i * 4, 4);
    return v;
  }
  double v;
  std::memcpy(&v, t.bytes.data() + i * 8, 8);
  return v;
}

void save(const std::filesystem::path& path, const std::vector<Entry>& tensors,
          const std::map<std::string, std::string>& metadata) {
  nlohmann::json header = nlohmann::json::object();
  if (!metadata.empty()) header["__metadata__"] = metadata;
  std::size_t offset = 0;
  for (const auto& t : tensors) {
    const auto bytes = t.values.size() * dtype_size(t.dtype);
    header[t.name] = {{"dtype", dtype_name(t.dtype)}, {"shape", t.shape}, {"data_offsets", {offset, offset + bytes}}};
    offset += bytes;
  }
  std::string text = header.dump();
  // Pad so tensor data starts 8-byte aligned.
  while (text.size() % 8) text.push_back(' ');
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  const std::uint64_t len = text.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof len);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& t : tensors) {
    if (t.dtype == DType::F32) {
      for (double v : t.values) {
        const float f = static_cast<float>(v);
        out.write(reinterpret_cast<const char*>(&f), 4);
      }
    } else {
      out.write(reinterpret_cast<const char*>(t.values.data()), static_cast<std::streamsize>(t.values.size() * 8));
    }
  }
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

}  // namespace sliar::safetensors
