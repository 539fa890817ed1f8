#include "slp/pose_data.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "slp/errors.hpp"

namespace slp::pose {

namespace {

void check_region(const std::optional<Landmarks>& region, std::size_t expected, const char* name) {
  if (!region) return;
  if (region->size() != expected) {
    throw SchemaError(std::string(name) + " region has " + std::to_string(region->size()) + " landmarks, expected " +
                      std::to_string(expected));
  }
  for (const auto& p : *region) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw SchemaError(std::string(name) + " region has a non-finite coordinate");
    }
  }
}

void check_indices(const std::vector<int>& indices, std::size_t expected_count, std::size_t limit,
                   const char* name) {
  if (indices.size() != expected_count) {
    throw ConfigError(std::string(name) + " must list exactly " + std::to_string(expected_count) +
                      " indices, got " + std::to_string(indices.size()));
  }
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] < 0 || static_cast<std::size_t>(indices[i]) >= limit) {
      throw ConfigError(std::string(name) + " index " + std::to_string(indices[i]) + " outside [0," +
                        std::to_string(limit) + ")");
    }
    if (i > 0 && indices[i] <= indices[i - 1]) {
      throw ConfigError(std::string(name) + " must be strictly increasing");
    }
  }
}

Landmarks pick(const Landmarks& source, const std::vector<int>& indices) {
  Landmarks out;
  out.reserve(indices.size());
  for (const int i : indices) out.push_back(source[static_cast<std::size_t>(i)]);
  return out;
}

}  // namespace

void RawHolisticFrame::validate() const {
  check_region(pose, kRawPoseLandmarks, "pose");
  check_region(face, kRawFaceLandmarks, "face");
  check_region(left_hand, kHandLandmarks, "left_hand");
  check_region(right_hand, kHandLandmarks, "right_hand");
}

SelectionProfile SelectionProfile::default_profile() {
  SelectionProfile p;
  p.pose_indices = {11, 12, 13, 14, 15, 16, 23, 24};
  // Face oval, outer and inner lips, both eyes, both brows and the nose
  // (version 1 of the face selection, see assets/selection_profile_v1.json).
  p.face_indices = {
      0,   1,   2,   4,   5,   6,   7,   10,  13,  14,  17,  21,  33,  37,  39,  40,  46,  52,  53,  54,  55,
      58,  61,  63,  65,  66,  67,  70,  78,  80,  81,  82,  84,  87,  88,  91,  93,  94,  95,  97,  98,  103,
      105, 107, 109, 127, 132, 133, 136, 144, 145, 146, 148, 149, 150, 152, 153, 154, 155, 157, 158, 159, 160,
      161, 162, 163, 168, 172, 173, 176, 178, 181, 185, 191, 195, 197, 234, 246, 249, 251, 263, 267, 269, 270,
      276, 282, 283, 284, 285, 288, 291, 293, 295, 296, 297, 300, 308, 310, 311, 312, 314, 317, 318, 321, 323,
      324, 326, 327, 332, 334, 336, 338, 356, 361, 362, 365, 373, 374, 375, 377, 378, 379, 380, 381, 382, 384,
      385, 386, 387, 388, 389, 390, 397, 398, 400, 402, 405, 409, 415, 454, 466};
  return p;
}

void SelectionProfile::validate() const {
  check_indices(pose_indices, kSelectedPoseLandmarks, kRawPoseLandmarks, "pose_indices");
  check_indices(face_indices, kSelectedFaceLandmarks, kRawFaceLandmarks, "face_indices");
}

RegionFrame subsample_frame(const RawHolisticFrame& raw, const SelectionProfile& profile) {
  profile.validate();
  raw.validate();
  RegionFrame out;
  out.left_hand = raw.left_hand;
  out.right_hand = raw.right_hand;
  if (raw.face) out.face = pick(*raw.face, profile.face_indices);
  if (raw.pose) out.pose = pick(*raw.pose, profile.pose_indices);
  return out;
}

std::vector<SelectedFrame> resolve_missing(const std::vector<RegionFrame>& frames) {
  std::vector<SelectedFrame> out;
  out.reserve(frames.size());
  Landmarks left(kHandLandmarks), right(kHandLandmarks), face(kSelectedFaceLandmarks),
      body(kSelectedPoseLandmarks);
  for (const auto& f : frames) {
    if (f.left_hand) left = *f.left_hand;
    if (f.right_hand) right = *f.right_hand;
    if (f.face) face = *f.face;
    if (f.pose) body = *f.pose;
    out.push_back({left, right, face, body});
  }
  return out;
}

PoseSequence::PoseSequence(std::size_t num_frames, std::vector<double> values)
    : num_frames_(num_frames), values_(std::move(values)) {
  if (num_frames_ == 0) throw SchemaError("pose sequence needs at least one frame");
  if (values_.size() != num_frames_ * kFrameDim) {
    throw SchemaError("pose sequence holds " + std::to_string(values_.size()) + " values, expected " +
                      std::to_string(num_frames_ * kFrameDim));
  }
  for (const double v : values_) {
    if (!std::isfinite(v)) throw SchemaError("pose sequence contains a non-finite value");
  }
  double previous = 0.0;
  for (std::size_t f = 0; f < num_frames_; ++f) {
    const double c = counter(f);
    if (c < 0.0 || c > 1.0) throw SchemaError("counter outside [0,1] at frame " + std::to_string(f));
    if (f > 0 && c < previous) throw SchemaError("counter decreases at frame " + std::to_string(f));
    previous = c;
  }
  if (counter(0) != 0.0) throw SchemaError("first counter must be 0");
  if (num_frames_ >= 2 && counter(num_frames_ - 1) != 1.0) throw SchemaError("last counter must be 1");
}

std::vector<double> PoseSequence::counters() const {
  std::vector<double> out(num_frames_);
  for (std::size_t f = 0; f < num_frames_; ++f) out[f] = counter(f);
  return out;
}

std::vector<double> counter_ramp(std::size_t num_frames) {
  std::vector<double> ramp(num_frames, 0.0);
  if (num_frames >= 2) {
    const double denom = static_cast<double>(num_frames - 1);
    for (std::size_t f = 0; f < num_frames; ++f) ramp[f] = static_cast<double>(f) / denom;
  }
  return ramp;
}

PoseSequence assemble_sequence(const std::vector<SelectedFrame>& frames,
                               const std::optional<std::vector<double>>& counters) {
  if (frames.empty()) throw SchemaError("cannot assemble an empty sequence");
  const std::vector<double> ramp = counters ? *counters : counter_ramp(frames.size());
  if (ramp.size() != frames.size()) throw SchemaError("counter count does not match frame count");

  std::vector<double> values;
  values.reserve(frames.size() * kFrameDim);
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const auto& fr = frames[f];
    if (fr.left_hand.size() != kHandLandmarks || fr.right_hand.size() != kHandLandmarks ||
        fr.face.size() != kSelectedFaceLandmarks || fr.pose.size() != kSelectedPoseLandmarks) {
      throw SchemaError("frame " + std::to_string(f) + " has " + std::to_string(fr.landmark_count()) +
                        " landmarks in the wrong layout, expected 21/21/141/8");
    }
    for (const Landmarks* region : {&fr.left_hand, &fr.right_hand, &fr.face, &fr.pose}) {
      for (const auto& p : *region) {
        values.push_back(p.x);
        values.push_back(p.y);
      }
    }
    values.push_back(ramp[f]);
  }
  return PoseSequence(frames.size(), std::move(values));
}

void NormalizationSpec::validate() const {
  if (!(epsilon > 0.0)) throw ConfigError("normalization epsilon must be > 0");
}

std::optional<std::size_t> landmark_slot(Region region, int source_index, const SelectionProfile& profile) {
  const std::vector<int>* indices = nullptr;
  switch (region) {
    case Region::left_hand:
    case Region::right_hand:
      if (source_index < 0 || static_cast<std::size_t>(source_index) >= kHandLandmarks) return std::nullopt;
      return region_offset(region) + static_cast<std::size_t>(source_index);
    case Region::face: indices = &profile.face_indices; break;
    case Region::pose: indices = &profile.pose_indices; break;
  }
  const auto it = std::find(indices->begin(), indices->end(), source_index);
  if (it == indices->end()) return std::nullopt;
  return region_offset(region) + static_cast<std::size_t>(it - indices->begin());
}

PoseSequence normalize_sequence(const PoseSequence& seq, const NormalizationSpec& spec,
                                const SelectionProfile& profile) {
  spec.validate();
  const auto left = landmark_slot(Region::pose, spec.left_shoulder, profile);
  const auto right = landmark_slot(Region::pose, spec.right_shoulder, profile);
  if (!left || !right) throw ConfigError("shoulder landmarks are not part of the selection profile");

  std::vector<double> values(seq.values().begin(), seq.values().end());
  for (std::size_t f = 0; f < seq.num_frames(); ++f) {
    const Point2 a = seq.landmark(f, *left);
    const Point2 b = seq.landmark(f, *right);
    const double cx = 0.5 * (a.x + b.x);
    const double cy = 0.5 * (a.y + b.y);
    const double dist = std::hypot(a.x - b.x, a.y - b.y);
    const double inv = 1.0 / std::max(dist, spec.epsilon);
    double* row = values.data() + f * kFrameDim;
    for (std::size_t s = 0; s < kSelectedLandmarks; ++s) {
      row[2 * s] = (row[2 * s] - cx) * inv;
      row[2 * s + 1] = (row[2 * s + 1] - cy) * inv;
    }
  }
  return PoseSequence(seq.num_frames(), std::move(values));
}

PoseSequence prepare_sequence(const std::vector<RawHolisticFrame>& raw, const SelectionProfile& profile,
                              const NormalizationSpec& spec) {
  if (raw.empty()) throw SchemaError("landmark stream has no frames");
  std::vector<RegionFrame> regions;
  regions.reserve(raw.size());
  for (const auto& frame : raw) regions.push_back(subsample_frame(frame, profile));
  return normalize_sequence(assemble_sequence(resolve_missing(regions)), spec, profile);
}

}  // namespace slp::pose
