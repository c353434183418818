#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "posevit/image.hpp"

namespace posevit {

// One 2D body landmark in normalized coordinates. Any depth channel an
// upstream detector provides is dropped at ingestion.
struct Landmark {
  int id = 0;
  double x = 0.0;
  double y = 0.0;
  double visibility = 1.0;
};

// Up to 25 landmarks with unique ids in 0..24. Coordinates and visibility
// are clamped to [0, 1] on construction.
class LandmarkSet {
 public:
  static constexpr int kMaxLandmarkId = 24;

  LandmarkSet() = default;
  static LandmarkSet from_points(std::vector<Landmark> points);

  const std::vector<Landmark>& points() const { return points_; }
  const Landmark* find(int id) const;
  std::size_t size() const { return points_.size(); }

 private:
  std::vector<Landmark> points_;
};

// Points with visibility below this floor are treated as absent.
inline constexpr double kVisibilityFloor = 0.5;

struct SkeletonStyle {
  int line_thickness = 2;
  int joint_radius = 4;
  std::array<std::uint8_t, 3> bone_color{0, 255, 0};
  std::array<std::uint8_t, 3> joint_color{0, 0, 255};
};

// line_thickness >= 1, joint_radius >= 0, neither color may be pure black
// (black is the compositing transparency sentinel).
void validate(const SkeletonStyle& style);

// Undirected bone edges over landmark ids: no self-edges, no duplicates.
struct BoneTopology {
  std::vector<std::pair<int, int>> edges;

  // Face chains plus mouth, shoulder line, both arms with hand points,
  // hip line and the two torso sides. 23 edges over ids 0..24.
  static const BoneTopology& upper_body();
};

void validate(const BoneTopology& topology);

// Rasterizes the skeleton onto a black canvas. Bones are drawn first as
// Bresenham lines thickened by a stamped disc of radius ceil(thickness/2),
// then joints as filled discs, so joints overdraw bone endpoints. Landmark
// (x, y) maps to pixel (round(x*(width-1)), round(y*(height-1))); strokes
// are clipped at the canvas border.
Image render_skeleton(const LandmarkSet& landmarks, int height, int width,
                      const SkeletonStyle& style = {},
                      const BoneTopology& topology = BoneTopology::upper_body());

// JSON landmark document: {"width": int, "height": int, "landmarks":
// [{"id", "x", "y", "visibility"?}, ...]}. Unknown keys are ignored,
// "visibility" defaults to 1, width/height are optional and advisory.
struct LandmarkDocument {
  int width = 0;
  int height = 0;
  LandmarkSet landmarks;
};

LandmarkDocument parse_landmark_document(const std::string& text);
std::string write_landmark_document(const LandmarkDocument& document);

}  // namespace posevit
