#include "slp/dataset.hpp"

#include "slp/errors.hpp"

namespace slp::data {

Dataset load_dataset(const std::filesystem::path& manifest_path) {
  const auto manifest = pose::read_manifest(manifest_path);
  Dataset out;
  out.reserve(manifest.size());
  for (const auto& record : manifest) {
    const auto path = pose::resolve_pose_path(manifest_path, record);
    try {
      out.push_back({record, pose::read_pose_file(path)});
    } catch (const Error& e) {
      throw FormatError("sample '" + record.id + "' (" + path.string() + "): " + e.what());
    }
  }
  return out;
}

bool SampleFilter::matches(const pose::SampleRecord& r) const {
  if (split && r.split != *split) return false;
  if (signer_id && r.signer_id != *signer_id) return false;
  if (subset && r.subset != *subset) return false;
  return true;
}

Dataset select(const Dataset& dataset, const SampleFilter& filter) {
  Dataset out;
  for (const auto& s : dataset) {
    if (filter.matches(s.record)) out.push_back(s);
  }
  return out;
}

const std::string& source_text(const pose::SampleRecord& record, bool gloss_mode) {
  if (!gloss_mode) return record.text;
  if (!record.gloss || record.gloss->empty()) {
    throw ConfigError("gloss mode needs a gloss for sample '" + record.id + "'");
  }
  return *record.gloss;
}

text::Vocabulary build_vocabulary(const Dataset& dataset) {
  std::vector<std::string> sentences;
  for (const auto& s : dataset) {
    if (s.record.split != pose::Split::train) continue;
    sentences.push_back(s.record.text);
    if (s.record.gloss) sentences.push_back(*s.record.gloss);
  }
  return text::Vocabulary::build(sentences);
}

}  // namespace slp::data
