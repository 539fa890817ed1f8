#pragma once

// In-memory samples: manifest records joined with their loaded pose sequences.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "slp/pose_data.hpp"
#include "slp/pose_io.hpp"
#include "slp/vocabulary.hpp"

namespace slp::data {

struct Sample {
  pose::SampleRecord record;
  pose::PoseSequence pose;
};

using Dataset = std::vector<Sample>;

/// Reads the manifest and every referenced pose file. A bad pose file raises
/// FormatError naming the sample id.
Dataset load_dataset(const std::filesystem::path& manifest_path);

struct SampleFilter {
  std::optional<pose::Split> split;
  std::optional<std::string> signer_id;
  std::optional<pose::Subset> subset;

  [[nodiscard]] bool matches(const pose::SampleRecord& r) const;
};

Dataset select(const Dataset& dataset, const SampleFilter& filter);

/// Encoder input of the production model: the gloss in gloss mode, else the
/// text. Throws ConfigError when gloss mode is on and the gloss is missing.
const std::string& source_text(const pose::SampleRecord& record, bool gloss_mode);

/// Vocabulary over the texts and (when present) glosses of the train split.
text::Vocabulary build_vocabulary(const Dataset& dataset);

}  // namespace slp::data
