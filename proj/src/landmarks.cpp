#include "posevit/landmarks.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "posevit/error.hpp"

namespace posevit {

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

void stamp_disc(Image& img, long cx, long cy, int radius,
                const std::array<std::uint8_t, 3>& color) {
  for (long dy = -radius; dy <= radius; ++dy) {
    const long y = cy + dy;
    if (y < 0 || y >= img.height) continue;
    for (long dx = -radius; dx <= radius; ++dx) {
      const long x = cx + dx;
      if (x < 0 || x >= img.width) continue;
      if (dx * dx + dy * dy > static_cast<long>(radius) * radius) continue;
      std::uint8_t* p = img.at(static_cast<int>(y), static_cast<int>(x));
      p[0] = color[0];
      p[1] = color[1];
      p[2] = color[2];
    }
  }
}

void draw_thick_line(Image& img, long x0, long y0, long x1, long y1,
                     int thickness, const std::array<std::uint8_t, 3>& color) {
  const int radius = (thickness + 1) / 2;  // ceil(thickness / 2)
  long dx = std::abs(x1 - x0);
  long sx = x0 < x1 ? 1 : -1;
  long dy = -std::abs(y1 - y0);
  long sy = y0 < y1 ? 1 : -1;
  long err = dx + dy;
  while (true) {
    stamp_disc(img, x0, y0, radius, color);
    if (x0 == x1 && y0 == y1) break;
    const long e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

}  // namespace

LandmarkSet LandmarkSet::from_points(std::vector<Landmark> points) {
  std::set<int> seen;
  for (Landmark& p : points) {
    if (p.id < 0 || p.id > kMaxLandmarkId) {
      throw ContractError("landmarks: id " + std::to_string(p.id) +
                          " outside 0.." + std::to_string(kMaxLandmarkId));
    }
    if (!seen.insert(p.id).second) {
      throw ContractError("landmarks: duplicate id " + std::to_string(p.id));
    }
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.visibility)) {
      throw ContractError("landmarks: non-finite coordinate on id " +
                          std::to_string(p.id));
    }
    p.x = clamp01(p.x);
    p.y = clamp01(p.y);
    p.visibility = clamp01(p.visibility);
  }
  LandmarkSet set;
  set.points_ = std::move(points);
  return set;
}

const Landmark* LandmarkSet::find(int id) const {
  for (const Landmark& p : points_) {
    if (p.id == id) return &p;
  }
  return nullptr;
}

void validate(const SkeletonStyle& style) {
  if (style.line_thickness < 1) {
    throw ContractError("skeleton style: line thickness must be >= 1");
  }
  if (style.joint_radius < 0) {
    throw ContractError("skeleton style: joint radius must be >= 0");
  }
  const std::array<std::uint8_t, 3> black{0, 0, 0};
  if (style.bone_color == black || style.joint_color == black) {
    throw ContractError("skeleton style: pure black strokes would composite as transparent");
  }
}

const BoneTopology& BoneTopology::upper_body() {
  static const BoneTopology topology{{
      {0, 1},   {1, 2},   {2, 3},   {3, 7},    // left eye chain to ear
      {0, 4},   {4, 5},   {5, 6},   {6, 8},    // right eye chain to ear
      {9, 10},                                 // mouth
      {11, 12},                                // shoulders
      {11, 13}, {13, 15},                      // left arm
      {12, 14}, {14, 16},                      // right arm
      {15, 17}, {15, 19}, {15, 21},            // left hand
      {16, 18}, {16, 20}, {16, 22},            // right hand
      {23, 24},                                // hips
      {11, 23}, {12, 24},                      // torso sides
  }};
  return topology;
}

void validate(const BoneTopology& topology) {
  std::set<std::pair<int, int>> seen;
  for (const auto& [a, b] : topology.edges) {
    if (a < 0 || a > LandmarkSet::kMaxLandmarkId || b < 0 ||
        b > LandmarkSet::kMaxLandmarkId) {
      throw ContractError("bone topology: edge endpoint outside 0..24");
    }
    if (a == b) throw ContractError("bone topology: self edge");
    if (!seen.insert({std::min(a, b), std::max(a, b)}).second) {
      throw ContractError("bone topology: duplicate edge");
    }
  }
}

Image render_skeleton(const LandmarkSet& landmarks, int height, int width,
                      const SkeletonStyle& style, const BoneTopology& topology) {
  validate(style);
  validate(topology);
  Image canvas = Image::black(height, width);

  const auto pixel_of = [&](const Landmark& p) {
    return std::pair<long, long>{std::lround(p.x * (width - 1)),
                                 std::lround(p.y * (height - 1))};
  };
  const auto visible = [&](int id) -> const Landmark* {
    const Landmark* p = landmarks.find(id);
    return (p != nullptr && p->visibility >= kVisibilityFloor) ? p : nullptr;
  };

  for (const auto& [a, b] : topology.edges) {
    const Landmark* pa = visible(a);
    const Landmark* pb = visible(b);
    if (pa == nullptr || pb == nullptr) continue;
    const auto [ax, ay] = pixel_of(*pa);
    const auto [bx, by] = pixel_of(*pb);
    draw_thick_line(canvas, ax, ay, bx, by, style.line_thickness, style.bone_color);
  }
  for (const Landmark& p : landmarks.points()) {
    if (p.visibility < kVisibilityFloor) continue;
    const auto [x, y] = pixel_of(p);
    stamp_disc(canvas, x, y, style.joint_radius, style.joint_color);
  }
  return canvas;
}

LandmarkDocument parse_landmark_document(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("landmark document: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("landmarks") || !doc["landmarks"].is_array()) {
    throw FormatError("landmark document: missing \"landmarks\" array");
  }

  LandmarkDocument out;
  if (doc.contains("width") && doc["width"].is_number_integer()) {
    out.width = doc["width"].get<int>();
  }
  if (doc.contains("height") && doc["height"].is_number_integer()) {
    out.height = doc["height"].get<int>();
  }

  std::vector<Landmark> points;
  std::set<int> seen;
  for (const auto& item : doc["landmarks"]) {
    if (!item.is_object()) {
      throw FormatError("landmark document: landmark entries must be objects");
    }
    if (!item.contains("id") || !item["id"].is_number_integer()) {
      throw FormatError("landmark document: landmark without integer \"id\"");
    }
    const int id = item["id"].get<int>();
    if (id < 0 || id > LandmarkSet::kMaxLandmarkId) {
      throw FormatError("landmark document: id " + std::to_string(id) +
                        " outside 0.." + std::to_string(LandmarkSet::kMaxLandmarkId));
    }
    if (!seen.insert(id).second) {
      throw FormatError("landmark document: duplicate id " + std::to_string(id));
    }
    if (!item.contains("x") || !item["x"].is_number() || !item.contains("y") ||
        !item["y"].is_number()) {
      throw FormatError("landmark document: landmark " + std::to_string(id) +
                        " lacks numeric x/y");
    }
    Landmark p;
    p.id = id;
    p.x = item["x"].get<double>();
    p.y = item["y"].get<double>();
    p.visibility = 1.0;
    if (item.contains("visibility")) {
      if (!item["visibility"].is_number()) {
        throw FormatError("landmark document: non-numeric visibility on id " +
                          std::to_string(id));
      }
      p.visibility = item["visibility"].get<double>();
    }
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.visibility)) {
      throw FormatError("landmark document: non-finite value on id " + std::to_string(id));
    }
    points.push_back(p);
  }
  out.landmarks = LandmarkSet::from_points(std::move(points));
  return out;
}

std::string write_landmark_document(const LandmarkDocument& document) {
  nlohmann::json doc;
  doc["width"] = document.width;
  doc["height"] = document.height;
  doc["landmarks"] = nlohmann::json::array();
  for (const Landmark& p : document.landmarks.points()) {
    doc["landmarks"].push_back({{"id", p.id},
                                {"x", p.x},
                                {"y", p.y},
                                {"visibility", p.visibility}});
  }
  return doc.dump(2) + "\n";
}

}  // namespace posevit
