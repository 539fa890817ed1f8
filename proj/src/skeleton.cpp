#include "slp/skeleton.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "slp/errors.hpp"

namespace slp::render {

namespace {

using pose::Region;

const std::vector<std::pair<int, int>> kHandEdges = {
    {0, 1},  {1, 2},  {2, 3},   {3, 4},   {0, 5},   {5, 6},   {6, 7},   {7, 8},   {5, 9},   {9, 10}, {10, 11},
    {11, 12}, {9, 13}, {13, 14}, {14, 15}, {15, 16}, {13, 17}, {17, 18}, {18, 19}, {19, 20}, {0, 17}};

const std::vector<std::pair<int, int>> kPoseEdges = {{11, 12}, {11, 13}, {13, 15}, {12, 14},
                                                     {14, 16}, {11, 23}, {12, 24}, {23, 24}};

struct Polyline {
  std::vector<int> points;
  bool closed;
};

const std::vector<Polyline> kFaceContours = {
    {{10,  338, 297, 332, 284, 251, 389, 356, 454, 323, 361, 288, 397, 365, 379, 378, 400, 377,
      152, 148, 176, 149, 150, 136, 172, 58,  132, 93,  234, 127, 162, 21,  54,  103, 67,  109},
     true},
    {{61, 146, 91, 181, 84, 17, 314, 405, 321, 375, 291, 409, 270, 269, 267, 0, 37, 39, 40, 185}, true},
    {{78, 95, 88, 178, 87, 14, 317, 402, 318, 324, 308, 415, 310, 311, 312, 13, 82, 81, 80, 191}, true},
    {{263, 249, 390, 373, 374, 380, 381, 382, 362, 398, 384, 385, 386, 387, 388, 466}, true},
    {{33, 7, 163, 144, 145, 153, 154, 155, 133, 173, 157, 158, 159, 160, 161, 246}, true},
    {{276, 283, 282, 295, 285}, false},
    {{300, 293, 334, 296, 336}, false},
    {{46, 53, 52, 65, 55}, false},
    {{70, 63, 105, 66, 107}, false},
    {{168, 6, 197, 195, 5, 4, 1, 94, 2}, false},
    {{98, 97, 2, 326, 327}, false},
};

const char* color(Region r) {
  switch (r) {
    case Region::left_hand: return "#d62728";
    case Region::right_hand: return "#1f77b4";
    case Region::face: return "#2ca02c";
    case Region::pose: return "#444444";
  }
  return "#000000";
}

// Normalized coordinates (shoulder midpoint at the origin, shoulder width 1)
// to pixels.
constexpr double kWidth = 480.0;
constexpr double kHeight = 560.0;
constexpr double kPixelsPerUnit = 110.0;
constexpr double kOriginX = kWidth / 2.0;
constexpr double kOriginY = 200.0;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::vector<SourceEdge> default_connectivity() {
  std::vector<SourceEdge> out;
  for (const auto region : {Region::left_hand, Region::right_hand}) {
    for (const auto& [a, b] : kHandEdges) out.push_back({region, a, b});
  }
  for (const auto& line : kFaceContours) {
    const auto& p = line.points;
    for (std::size_t i = 0; i + 1 < p.size(); ++i) out.push_back({Region::face, p[i], p[i + 1]});
    if (line.closed) out.push_back({Region::face, p.back(), p.front()});
  }
  for (const auto& [a, b] : kPoseEdges) out.push_back({Region::pose, a, b});
  return out;
}

std::vector<SourceEdge> read_connectivity(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open connectivity file " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  std::vector<SourceEdge> out;
  auto edges = [&](const char* key) {
    if (!doc.contains(key) || !doc[key].is_array()) throw FormatError(path.string() + ": missing " + key);
    std::vector<std::pair<int, int>> list;
    for (const auto& e : doc[key]) {
      if (!e.is_array() || e.size() != 2) throw FormatError(path.string() + ": malformed edge in " + key);
      list.emplace_back(e[0].get<int>(), e[1].get<int>());
    }
    return list;
  };
  const auto hand = edges("hand_edges");
  for (const auto region : {Region::left_hand, Region::right_hand}) {
    for (const auto& [a, b] : hand) out.push_back({region, a, b});
  }
  for (const auto& [a, b] : edges("face_edges")) out.push_back({Region::face, a, b});
  for (const auto& [a, b] : edges("pose_edges")) out.push_back({Region::pose, a, b});
  return out;
}

std::vector<Bone> bones_for_profile(const std::vector<SourceEdge>& edges, const pose::SelectionProfile& profile) {
  std::vector<Bone> out;
  for (const auto& e : edges) {
    const auto a = pose::landmark_slot(e.region, e.a, profile);
    const auto b = pose::landmark_slot(e.region, e.b, profile);
    if (a && b) out.push_back({*a, *b, e.region});
  }
  return out;
}

std::string render_frame_svg(const pose::PoseSequence& seq, std::size_t frame, const std::vector<Bone>& bones,
                             const std::string& fingerprint) {
  if (frame >= seq.num_frames()) throw InputError("frame index out of range");
  auto px = [](const pose::Point2& p) {
    return std::pair{kOriginX + kPixelsPerUnit * p.x, kOriginY + kPixelsPerUnit * p.y};
  };
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
  if (!fingerprint.empty()) svg << "<desc>fingerprint " << fingerprint << "</desc>\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  svg << "<g stroke-width=\"1.5\">\n";
  for (const auto& bone : bones) {
    const auto [x1, y1] = px(seq.landmark(frame, bone.a));
    const auto [x2, y2] = px(seq.landmark(frame, bone.b));
    svg << "<line x1=\"" << fmt(x1) << "\" y1=\"" << fmt(y1) << "\" x2=\"" << fmt(x2) << "\" y2=\"" << fmt(y2)
        << "\" stroke=\"" << color(bone.region) << "\"/>\n";
  }
  svg << "</g>\n<g>\n";
  for (const auto region : {Region::left_hand, Region::right_hand, Region::face, Region::pose}) {
    for (std::size_t i = 0; i < pose::region_size(region); ++i) {
      const std::size_t slot = pose::region_offset(region) + i;
      const auto [x, y] = px(seq.landmark(frame, slot));
      svg << "<circle cx=\"" << fmt(x) << "\" cy=\"" << fmt(y) << "\" r=\"2\" fill=\"" << color(region)
          << "\" data-slot=\"" << slot << "\"/>\n";
    }
  }
  svg << "</g>\n<text x=\"8\" y=\"20\" font-family=\"monospace\" font-size=\"12\">frame " << frame
      << " counter " << fmt(seq.counter(frame)) << "</text>\n</svg>\n";
  return svg.str();
}

std::vector<std::filesystem::path> render_sequence(const pose::PoseSequence& seq, const std::vector<Bone>& bones,
                                                   const std::filesystem::path& out_dir,
                                                   const std::string& fingerprint) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> written;
  for (std::size_t f = 0; f < seq.num_frames(); ++f) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%05zu.svg", f);
    const auto path = out_dir / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << render_frame_svg(seq, f, bones, fingerprint);
    written.push_back(path);
  }
  return written;
}

}  // namespace slp::render
