#pragma once

// Skeletal data model: holistic landmark frames, landmark subsampling, the
// 383-wide frame vector (left hand | right hand | face | pose | counter) and
// sequence-level normalization.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace slp::pose {

inline constexpr std::size_t kRawPoseLandmarks = 33;
inline constexpr std::size_t kRawFaceLandmarks = 468;
inline constexpr std::size_t kHandLandmarks = 21;

inline constexpr std::size_t kSelectedPoseLandmarks = 8;
inline constexpr std::size_t kSelectedFaceLandmarks = 141;
inline constexpr std::size_t kSelectedLandmarks =
    2 * kHandLandmarks + kSelectedFaceLandmarks + kSelectedPoseLandmarks;  // 191

inline constexpr std::size_t kCoordsPerLandmark = 2;
inline constexpr std::size_t kFrameDim = kCoordsPerLandmark * kSelectedLandmarks + 1;  // 383
inline constexpr std::size_t kCounterIndex = kFrameDim - 1;

static_assert(kSelectedLandmarks == 191);
static_assert(kFrameDim == 383);

enum class Region { left_hand, right_hand, face, pose };

/// First landmark slot of a region inside the 191-landmark frame.
constexpr std::size_t region_offset(Region r) {
  switch (r) {
    case Region::left_hand: return 0;
    case Region::right_hand: return kHandLandmarks;
    case Region::face: return 2 * kHandLandmarks;
    case Region::pose: return 2 * kHandLandmarks + kSelectedFaceLandmarks;
  }
  return 0;
}

constexpr std::size_t region_size(Region r) {
  switch (r) {
    case Region::left_hand:
    case Region::right_hand: return kHandLandmarks;
    case Region::face: return kSelectedFaceLandmarks;
    case Region::pose: return kSelectedPoseLandmarks;
  }
  return 0;
}

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point2&) const = default;
};

using Landmarks = std::vector<Point2>;

/// One frame of holistic detector output; an absent region is std::nullopt.
struct RawHolisticFrame {
  std::optional<Landmarks> pose;
  std::optional<Landmarks> face;
  std::optional<Landmarks> left_hand;
  std::optional<Landmarks> right_hand;

  /// Throws SchemaError on wrong region cardinality or non-finite coordinates.
  void validate() const;
};

struct SelectionProfile {
  std::vector<int> pose_indices;
  std::vector<int> face_indices;

  /// Shoulders, elbows, wrists and hips plus 141 face contour points.
  static SelectionProfile default_profile();

  /// Throws ConfigError unless both lists are strictly increasing, in range
  /// and have cardinality 8 and 141.
  void validate() const;

  bool operator==(const SelectionProfile&) const = default;
};

/// Selected landmarks of one frame; regions may still be missing.
struct RegionFrame {
  std::optional<Landmarks> left_hand;
  std::optional<Landmarks> right_hand;
  std::optional<Landmarks> face;
  std::optional<Landmarks> pose;
};

/// Fully populated selection, 21 + 21 + 141 + 8 landmarks.
struct SelectedFrame {
  Landmarks left_hand;
  Landmarks right_hand;
  Landmarks face;
  Landmarks pose;

  [[nodiscard]] std::size_t landmark_count() const {
    return left_hand.size() + right_hand.size() + face.size() + pose.size();
  }
};

RegionFrame subsample_frame(const RawHolisticFrame& raw, const SelectionProfile& profile);

/// Carry-forward of the most recent present value per region; zeros when a
/// region has never been seen.
std::vector<SelectedFrame> resolve_missing(const std::vector<RegionFrame>& frames);

/// F x 383 row-major frame matrix. Construction enforces the frame layout and
/// the counter invariants (first 0, last 1 when F >= 2, non-decreasing, in [0,1]).
class PoseSequence {
 public:
  PoseSequence() = default;
  PoseSequence(std::size_t num_frames, std::vector<double> values);

  [[nodiscard]] std::size_t num_frames() const noexcept { return num_frames_; }
  [[nodiscard]] bool empty() const noexcept { return num_frames_ == 0; }
  [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
  [[nodiscard]] std::span<const double> frame(std::size_t f) const {
    return std::span<const double>(values_).subspan(f * kFrameDim, kFrameDim);
  }
  [[nodiscard]] double counter(std::size_t f) const { return values_[f * kFrameDim + kCounterIndex]; }
  [[nodiscard]] Point2 landmark(std::size_t f, std::size_t slot) const {
    const std::size_t base = f * kFrameDim + kCoordsPerLandmark * slot;
    return {values_[base], values_[base + 1]};
  }
  [[nodiscard]] std::vector<double> counters() const;

  bool operator==(const PoseSequence&) const = default;

 private:
  std::size_t num_frames_ = 0;
  std::vector<double> values_;
};

/// c_f = f / (F - 1), or {0} for a single frame.
std::vector<double> counter_ramp(std::size_t num_frames);

/// Flattens selected frames into 383-wide vectors. Without explicit counters
/// the linear ramp is used.
PoseSequence assemble_sequence(const std::vector<SelectedFrame>& frames,
                               const std::optional<std::vector<double>>& counters = std::nullopt);

struct NormalizationSpec {
  int left_shoulder = 11;   // holistic pose index
  int right_shoulder = 12;  // holistic pose index
  double epsilon = 1e-6;

  void validate() const;
};

/// Per frame: translate the shoulder midpoint to the origin and divide by
/// max(shoulder distance, epsilon). The counter channel is untouched.
PoseSequence normalize_sequence(const PoseSequence& seq, const NormalizationSpec& spec,
                                const SelectionProfile& profile);

/// Landmark slot (0..190) holding the given holistic landmark under `profile`,
/// or nullopt when that landmark is not selected.
std::optional<std::size_t> landmark_slot(Region region, int source_index, const SelectionProfile& profile);

/// Full preparation of one raw stream: subsample, resolve missing regions,
/// assemble with the counter ramp and normalize.
PoseSequence prepare_sequence(const std::vector<RawHolisticFrame>& raw, const SelectionProfile& profile,
                              const NormalizationSpec& spec);

}  // namespace slp::pose
