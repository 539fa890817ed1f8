#pragma once

// Binary checkpoint container: "SLPC" magic, u32 version, a JSON config blob
// and a table of named f32 tensors.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "slp/layers.hpp"
#include "slp/optim.hpp"

namespace slp::ckpt {

inline constexpr char kCheckpointMagic[4] = {'S', 'L', 'P', 'C'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct StoredTensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> data;

  bool operator==(const StoredTensor&) const = default;
};

struct Checkpoint {
  std::string config_json;
  std::vector<std::pair<std::string, StoredTensor>> tensors;

  [[nodiscard]] const StoredTensor* find(const std::string& name) const;
  void put(const std::string& name, StoredTensor tensor);

  bool operator==(const Checkpoint&) const = default;
};

/// Writes to a sibling temporary file and renames it into place.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);

/// FormatError on bad magic, unsupported version, truncation or trailing bytes.
Checkpoint load_checkpoint(const std::filesystem::path& path);

template <typename T>
void store_parameters(Checkpoint& checkpoint, const nn::ParameterList<T>& params);

/// Copies stored values into `params` in place. FormatError when a name is
/// missing or a shape differs.
template <typename T>
void restore_parameters(const Checkpoint& checkpoint, const nn::ParameterList<T>& params);

/// Adam moments as "adam.m.<name>" / "adam.v.<name>".
template <typename T>
void store_optimizer(Checkpoint& checkpoint, const nn::ParameterList<T>& params, const nn::OptimizerState<T>& state);

template <typename T>
void restore_optimizer(const Checkpoint& checkpoint, const nn::ParameterList<T>& params,
                       nn::OptimizerState<T>& state);

}  // namespace slp::ckpt
