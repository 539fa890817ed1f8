#pragma once

// On-disk formats of the pose data module.
//
//   pose file    "SLPP" | u32 version=1 | u32 F | u32 D | F*D f32, little-endian, row-major
//   interchange  JSON-lines, one frame per line: {"pose","face","left_hand","right_hand"},
//                each null or an array of [x, y] pairs
//   manifest     JSON array of {id, text, gloss, signer_id, subset, pose_path, split}

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "slp/pose_data.hpp"

namespace slp::pose {

inline constexpr char kPoseMagic[4] = {'S', 'L', 'P', 'P'};
inline constexpr std::uint32_t kPoseFileVersion = 1;

/// Header-level view of a pose file with any frame width.
struct PoseMatrix {
  std::uint32_t num_frames = 0;
  std::uint32_t dim = 0;
  std::vector<float> values;
};

void write_pose_file(const std::filesystem::path& path, const PoseSequence& seq);

/// Reads magic, version, dimensions and payload; checks length but not width.
PoseMatrix read_pose_matrix(const std::filesystem::path& path);

/// Strict read: width must be 383 and the frames must satisfy the sequence
/// invariants. Every failure is a FormatError.
PoseSequence read_pose_file(const std::filesystem::path& path);

std::vector<RawHolisticFrame> read_interchange(const std::filesystem::path& path);
void write_interchange(const std::filesystem::path& path, const std::vector<RawHolisticFrame>& frames);

enum class Subset { math, greek, other };
enum class Split { train, dev, test };

std::string to_string(Subset s);
std::string to_string(Split s);
Subset parse_subset(const std::string& s);
Split parse_split(const std::string& s);

struct SampleRecord {
  std::string id;
  std::string text;
  std::optional<std::string> gloss;
  std::string signer_id;
  Subset subset = Subset::other;
  std::string pose_path;
  Split split = Split::train;

  bool operator==(const SampleRecord&) const = default;
};

using Manifest = std::vector<SampleRecord>;

/// Parses and checks id uniqueness (ConfigError on duplicates).
Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);
std::string manifest_to_json(const Manifest& manifest);
Manifest manifest_from_json(const std::string& text);
void validate_manifest(const Manifest& manifest);

/// Resolves a record's pose_path against the manifest's directory.
std::filesystem::path resolve_pose_path(const std::filesystem::path& manifest_path, const SampleRecord& record);

SelectionProfile read_profile(const std::filesystem::path& path);
std::string profile_to_json(const SelectionProfile& profile);

}  // namespace slp::pose
