#pragma once

// Bone connectivity of the selected skeleton and per-frame SVG rendering.

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "slp/pose_data.hpp"

namespace slp::render {

/// Edge between two holistic source indices of one region.
struct SourceEdge {
  pose::Region region;
  int a;
  int b;
  bool operator==(const SourceEdge&) const = default;
};

/// Version 1 connectivity (assets/skeleton_connectivity_v1.json): hand edges
/// apply to both hands; face edges follow the oval, lip, eye, brow and nose
/// contours of the default face selection.
std::vector<SourceEdge> default_connectivity();

/// Parses a connectivity asset {version, hand_edges, face_edges, pose_edges}.
std::vector<SourceEdge> read_connectivity(const std::filesystem::path& path);

/// Edge between two landmark slots (0..190) of a 383-wide frame.
struct Bone {
  std::size_t a;
  std::size_t b;
  pose::Region region;
};

/// Source edges mapped through the profile; edges touching an unselected
/// landmark are dropped.
std::vector<Bone> bones_for_profile(const std::vector<SourceEdge>& edges, const pose::SelectionProfile& profile);

/// Deterministic SVG of one frame: every bone as a line, every one of the 191
/// landmarks as a circle coloured by region. A non-empty fingerprint is
/// embedded as the <desc> element.
std::string render_frame_svg(const pose::PoseSequence& seq, std::size_t frame, const std::vector<Bone>& bones,
                             const std::string& fingerprint = {});

/// Writes frame_00000.svg ... into `out_dir`; returns the written paths.
std::vector<std::filesystem::path> render_sequence(const pose::PoseSequence& seq, const std::vector<Bone>& bones,
                                                   const std::filesystem::path& out_dir,
                                                   const std::string& fingerprint = {});

}  // namespace slp::render
