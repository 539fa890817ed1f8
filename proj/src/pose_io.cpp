#include "slp/pose_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "slp/binary_io.hpp"
#include "slp/errors.hpp"

namespace slp::pose {

using nlohmann::json;

void write_pose_file(const std::filesystem::path& path, const PoseSequence& seq) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(kPoseMagic, 4);
  io::write_u32(out, kPoseFileVersion);
  io::write_u32(out, static_cast<std::uint32_t>(seq.num_frames()));
  io::write_u32(out, static_cast<std::uint32_t>(kFrameDim));
  for (const double v : seq.values()) io::write_f32(out, static_cast<float>(v));
  if (!out) throw Error("write failed for " + path.string());
}

PoseMatrix read_pose_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open pose file " + path.string());
  char magic[4] = {};
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kPoseMagic, 4) != 0) throw FormatError("bad magic in " + path.string());
  PoseMatrix m;
  std::uint32_t version = 0;
  if (!io::read_u32(in, version)) throw FormatError("truncated header in " + path.string());
  if (version != kPoseFileVersion) {
    throw FormatError("unsupported pose file version " + std::to_string(version) + " in " + path.string());
  }
  if (!io::read_u32(in, m.num_frames) || !io::read_u32(in, m.dim)) {
    throw FormatError("truncated header in " + path.string());
  }
  if (m.num_frames == 0 || m.dim == 0) throw FormatError("empty pose matrix in " + path.string());
  const std::uint64_t count = static_cast<std::uint64_t>(m.num_frames) * m.dim;
  m.values.resize(count);
  for (auto& v : m.values) {
    if (!io::read_f32(in, v)) throw FormatError("truncated payload in " + path.string());
  }
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes in " + path.string());
  return m;
}

PoseSequence read_pose_file(const std::filesystem::path& path) {
  const PoseMatrix m = read_pose_matrix(path);
  if (m.dim != kFrameDim) {
    throw FormatError("pose file " + path.string() + " has width " + std::to_string(m.dim) + ", expected " +
                      std::to_string(kFrameDim));
  }
  try {
    return PoseSequence(m.num_frames, std::vector<double>(m.values.begin(), m.values.end()));
  } catch (const SchemaError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

// ---- interchange -----------------------------------------------------------

namespace {

std::optional<Landmarks> region_from_json(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  Landmarks out;
  for (const auto& pair : j.at(key)) {
    if (!pair.is_array() || pair.size() != 2) throw SchemaError(std::string(key) + ": expected [x, y] pairs");
    out.push_back({pair[0].get<double>(), pair[1].get<double>()});
  }
  return out;
}

json region_to_json(const std::optional<Landmarks>& region) {
  if (!region) return nullptr;
  json arr = json::array();
  for (const auto& p : *region) arr.push_back({p.x, p.y});
  return arr;
}

}  // namespace

std::vector<RawHolisticFrame> read_interchange(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open landmark stream " + path.string());
  std::vector<RawHolisticFrame> frames;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      if (!j.is_object()) throw SchemaError("frame is not an object");
      RawHolisticFrame f;
      f.pose = region_from_json(j, "pose");
      f.face = region_from_json(j, "face");
      f.left_hand = region_from_json(j, "left_hand");
      f.right_hand = region_from_json(j, "right_hand");
      f.validate();
      frames.push_back(std::move(f));
    } catch (const json::exception& e) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const SchemaError& e) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (frames.empty()) throw FormatError("landmark stream " + path.string() + " has no frames");
  return frames;
}

void write_interchange(const std::filesystem::path& path, const std::vector<RawHolisticFrame>& frames) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  for (const auto& f : frames) {
    json j;
    j["pose"] = region_to_json(f.pose);
    j["face"] = region_to_json(f.face);
    j["left_hand"] = region_to_json(f.left_hand);
    j["right_hand"] = region_to_json(f.right_hand);
    out << j.dump() << '\n';
  }
}

// ---- manifest --------------------------------------------------------------

std::string to_string(Subset s) {
  switch (s) {
    case Subset::math: return "math";
    case Subset::greek: return "greek";
    case Subset::other: return "other";
  }
  return "other";
}

std::string to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::dev: return "dev";
    case Split::test: return "test";
  }
  return "train";
}

Subset parse_subset(const std::string& s) {
  if (s == "math") return Subset::math;
  if (s == "greek") return Subset::greek;
  if (s == "other") return Subset::other;
  throw ConfigError("unknown subset '" + s + "'");
}

Split parse_split(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "dev") return Split::dev;
  if (s == "test") return Split::test;
  throw ConfigError("unknown split '" + s + "'");
}

void validate_manifest(const Manifest& manifest) {
  std::set<std::string> seen;
  for (const auto& r : manifest) {
    if (r.id.empty()) throw ConfigError("manifest record with empty id");
    if (!seen.insert(r.id).second) throw ConfigError("duplicate manifest id '" + r.id + "'");
  }
}

std::string manifest_to_json(const Manifest& manifest) {
  json arr = json::array();
  for (const auto& r : manifest) {
    json j;
    j["id"] = r.id;
    j["text"] = r.text;
    j["gloss"] = r.gloss ? json(*r.gloss) : json(nullptr);
    j["signer_id"] = r.signer_id;
    j["subset"] = to_string(r.subset);
    j["pose_path"] = r.pose_path;
    j["split"] = to_string(r.split);
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

Manifest manifest_from_json(const std::string& text) {
  Manifest manifest;
  try {
    const json arr = json::parse(text);
    if (!arr.is_array()) throw ConfigError("manifest must be a JSON array");
    for (const auto& j : arr) {
      SampleRecord r;
      r.id = j.at("id").get<std::string>();
      r.text = j.at("text").get<std::string>();
      if (j.contains("gloss") && !j.at("gloss").is_null()) r.gloss = j.at("gloss").get<std::string>();
      r.signer_id = j.at("signer_id").get<std::string>();
      r.subset = parse_subset(j.at("subset").get<std::string>());
      r.pose_path = j.at("pose_path").get<std::string>();
      r.split = parse_split(j.at("split").get<std::string>());
      manifest.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed manifest: ") + e.what());
  }
  validate_manifest(manifest);
  return manifest;
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open manifest " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return manifest_from_json(buffer.str());
}

void write_manifest(const std::filesystem::path& path, const Manifest& manifest) {
  validate_manifest(manifest);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << manifest_to_json(manifest);
}

std::filesystem::path resolve_pose_path(const std::filesystem::path& manifest_path, const SampleRecord& record) {
  const std::filesystem::path p(record.pose_path);
  if (p.is_absolute()) return p;
  return manifest_path.parent_path() / p;
}

// ---- profile ---------------------------------------------------------------

SelectionProfile read_profile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open selection profile " + path.string());
  SelectionProfile p;
  try {
    const json j = json::parse(in);
    p.pose_indices = j.at("pose_indices").get<std::vector<int>>();
    p.face_indices = j.at("face_indices").get<std::vector<int>>();
    if (j.contains("coordinate_dims") && j.at("coordinate_dims").get<int>() != 2) {
      throw ConfigError("only 2D coordinates are supported");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed selection profile: ") + e.what());
  }
  p.validate();
  return p;
}

std::string profile_to_json(const SelectionProfile& profile) {
  json j;
  j["version"] = 1;
  j["coordinate_dims"] = 2;
  j["pose_indices"] = profile.pose_indices;
  j["face_indices"] = profile.face_indices;
  return j.dump() + "\n";
}

}  // namespace slp::pose
