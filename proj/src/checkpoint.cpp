#include "slp/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <iterator>

#include "slp/binary_io.hpp"
#include "slp/errors.hpp"

namespace slp::ckpt {

namespace {

constexpr std::uint32_t kMaxRank = 8;

StoredTensor from_values(std::size_t rows, std::size_t cols, const auto& values) {
  StoredTensor t;
  t.dims = {static_cast<std::uint32_t>(rows), static_cast<std::uint32_t>(cols)};
  t.data.reserve(values.size());
  for (const auto v : values) t.data.push_back(static_cast<float>(v));
  return t;
}

const StoredTensor& require(const Checkpoint& c, const std::string& name, std::size_t rows, std::size_t cols) {
  const auto* t = c.find(name);
  if (t == nullptr) throw FormatError("checkpoint lacks tensor '" + name + "'");
  if (t->dims.size() != 2 || t->dims[0] != rows || t->dims[1] != cols) {
    throw FormatError("checkpoint tensor '" + name + "' has a different shape");
  }
  return *t;
}

}  // namespace

const StoredTensor* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return &t;
  }
  return nullptr;
}

void Checkpoint::put(const std::string& name, StoredTensor tensor) {
  for (auto& [n, t] : tensors) {
    if (n == name) {
      t = std::move(tensor);
      return;
    }
  }
  tensors.emplace_back(name, std::move(tensor));
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(kCheckpointMagic, 4);
    io::write_u32(out, kCheckpointVersion);
    io::write_string(out, checkpoint.config_json);
    io::write_u32(out, static_cast<std::uint32_t>(checkpoint.tensors.size()));
    for (const auto& [name, t] : checkpoint.tensors) {
      io::write_string(out, name);
      io::write_u32(out, static_cast<std::uint32_t>(t.dims.size()));
      for (const auto d : t.dims) io::write_u32(out, d);
      for (const float v : t.data) io::write_f32(out, v);
    }
    if (!out) throw Error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open checkpoint " + path.string());
  char magic[4] = {};
  if (!in.read(magic, 4) || std::memcmp(magic, kCheckpointMagic, 4) != 0) {
    throw FormatError(path.string() + ": not a checkpoint (bad magic)");
  }
  std::uint32_t version = 0;
  if (!io::read_u32(in, version)) throw FormatError(path.string() + ": truncated header");
  if (version != kCheckpointVersion) {
    throw FormatError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint c;
  std::uint32_t count = 0;
  if (!io::read_string(in, c.config_json) || !io::read_u32(in, count)) {
    throw FormatError(path.string() + ": truncated header");
  }
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name;
    std::uint32_t rank = 0;
    if (!io::read_string(in, name, 4096) || !io::read_u32(in, rank) || rank > kMaxRank) {
      throw FormatError(path.string() + ": corrupt tensor entry " + std::to_string(i));
    }
    StoredTensor t;
    std::size_t elements = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      std::uint32_t d = 0;
      if (!io::read_u32(in, d)) throw FormatError(path.string() + ": truncated tensor '" + name + "'");
      t.dims.push_back(d);
      elements *= d;
    }
    t.data.resize(elements);
    for (auto& v : t.data) {
      if (!io::read_f32(in, v)) throw FormatError(path.string() + ": truncated tensor '" + name + "'");
    }
    c.tensors.emplace_back(std::move(name), std::move(t));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError(path.string() + ": trailing bytes");
  return c;
}

template <typename T>
void store_parameters(Checkpoint& checkpoint, const nn::ParameterList<T>& params) {
  for (const auto& p : params) checkpoint.put(p.name, from_values(p.tensor.rows(), p.tensor.cols(), p.tensor.values()));
}

template <typename T>
void restore_parameters(const Checkpoint& checkpoint, const nn::ParameterList<T>& params) {
  for (const auto& p : params) {
    const auto& stored = require(checkpoint, p.name, p.tensor.rows(), p.tensor.cols());
    auto dst = nn::Tensor<T>(p.tensor).mutable_values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<T>(stored.data[i]);
  }
}

template <typename T>
void store_optimizer(Checkpoint& checkpoint, const nn::ParameterList<T>& params, const nn::OptimizerState<T>& state) {
  if (state.first_moment.size() != params.size()) throw ShapeError("optimizer state does not match parameters");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& p = params[i];
    checkpoint.put("adam.m." + p.name, from_values(p.tensor.rows(), p.tensor.cols(), state.first_moment[i]));
    checkpoint.put("adam.v." + p.name, from_values(p.tensor.rows(), p.tensor.cols(), state.second_moment[i]));
  }
}

template <typename T>
void restore_optimizer(const Checkpoint& checkpoint, const nn::ParameterList<T>& params,
                       nn::OptimizerState<T>& state) {
  state.first_moment.assign(params.size(), {});
  state.second_moment.assign(params.size(), {});
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& p = params[i];
    const auto& m = require(checkpoint, "adam.m." + p.name, p.tensor.rows(), p.tensor.cols());
    const auto& v = require(checkpoint, "adam.v." + p.name, p.tensor.rows(), p.tensor.cols());
    state.first_moment[i].assign(m.data.begin(), m.data.end());
    state.second_moment[i].assign(v.data.begin(), v.data.end());
  }
}

template void store_parameters<float>(Checkpoint&, const nn::ParameterList<float>&);
template void store_parameters<double>(Checkpoint&, const nn::ParameterList<double>&);
template void restore_parameters<float>(const Checkpoint&, const nn::ParameterList<float>&);
template void restore_parameters<double>(const Checkpoint&, const nn::ParameterList<double>&);
template void store_optimizer<float>(Checkpoint&, const nn::ParameterList<float>&,
                                     const nn::OptimizerState<float>&);
template void restore_optimizer<float>(const Checkpoint&, const nn::ParameterList<float>&,
                                       nn::OptimizerState<float>&);

}  // namespace slp::ckpt
