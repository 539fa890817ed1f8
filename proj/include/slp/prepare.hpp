#pragma once

// Raw interchange streams to a validated, normalized dataset on disk.

#include <cstddef>
#include <filesystem>

#include "slp/pose_data.hpp"
#include "slp/pose_io.hpp"

namespace slp::data {

struct PrepareSummary {
  pose::Manifest manifest;
  std::filesystem::path manifest_path;
  std::size_t train = 0;
  std::size_t dev = 0;
  std::size_t test = 0;
};

/// Reads every record's interchange file (pose_path, relative to the raw
/// manifest), prepares it and writes poses/<id>.pose plus manifest.json into
/// `out_dir`. Errors name the offending sample id. InputError when the train
/// split is empty.
PrepareSummary prepare_dataset(const std::filesystem::path& raw_manifest, const pose::SelectionProfile& profile,
                               const pose::NormalizationSpec& spec, const std::filesystem::path& out_dir);

}  // namespace slp::data
