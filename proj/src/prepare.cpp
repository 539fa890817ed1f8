#include "slp/prepare.hpp"

#include "slp/errors.hpp"

namespace slp::data {

PrepareSummary prepare_dataset(const std::filesystem::path& raw_manifest, const pose::SelectionProfile& profile,
                               const pose::NormalizationSpec& spec, const std::filesystem::path& out_dir) {
  profile.validate();
  spec.validate();
  PrepareSummary summary;
  const auto raw = pose::read_manifest(raw_manifest);
  std::filesystem::create_directories(out_dir / "poses");
  for (const auto& record : raw) {
    pose::PoseSequence seq;
    try {
      const auto frames = pose::read_interchange(pose::resolve_pose_path(raw_manifest, record));
      if (frames.empty()) throw FormatError("no frames");
      seq = pose::prepare_sequence(frames, profile, spec);
    } catch (const SchemaError& e) {
      throw SchemaError("sample " + record.id + ": " + e.what());
    } catch (const InputError& e) {
      throw InputError("sample " + record.id + ": " + e.what());
    } catch (const Error& e) {
      throw FormatError("sample " + record.id + ": " + e.what());
    }
    auto out = record;
    out.pose_path = "poses/" + record.id + ".pose";
    pose::write_pose_file(out_dir / out.pose_path, seq);
    switch (out.split) {
      case pose::Split::train: ++summary.train; break;
      case pose::Split::dev: ++summary.dev; break;
      case pose::Split::test: ++summary.test; break;
    }
    summary.manifest.push_back(std::move(out));
  }
  if (summary.train == 0) throw InputError("prepared dataset has no train samples");
  summary.manifest_path = out_dir / "manifest.json";
  pose::write_manifest(summary.manifest_path, summary.manifest);
  return summary;
}

}  // namespace slp::data
