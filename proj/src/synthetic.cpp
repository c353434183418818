#include "posevit/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "posevit/error.hpp"
#include "posevit/image.hpp"

namespace posevit {

namespace {

constexpr double kPi = std::numbers::pi;

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

void validate(const SyntheticConfig& config) {
  if (config.num_classes < 1) {
    throw ConfigError("synthetic num_classes must be >= 1");
  }
  if (config.num_classes > 16) {
    throw ConfigError("synthetic generator defines at most 16 classes");
  }
  if (config.per_class < 1) {
    throw ConfigError("synthetic per_class must be >= 1");
  }
  if (config.canvas_size < 16) {
    throw ConfigError("synthetic canvas_size must be >= 16");
  }
  if (config.image_size < 1) {
    throw ConfigError("synthetic image_size must be >= 1");
  }
  if (!std::isfinite(config.jitter_sigma) || config.jitter_sigma < 0.0) {
    throw ConfigError("synthetic jitter_sigma must be finite and >= 0");
  }
  posevit::validate(config.style);
}

struct Point {
  double x = 0.0;
  double y = 0.0;
};

// Anchor grid for the acting (right) wrist: 4x4 positions spaced 0.20 apart,
// far enough apart that view transforms and jitter never blur class identity.
Point wrist_anchor(int class_index) {
  const int col = class_index % 4;
  const int row = (class_index / 4) % 4;
  return {0.20 + 0.20 * col, 0.20 + 0.20 * row};
}

}  // namespace

LandmarkSet pose_template(int class_index, int num_classes) {
  if (num_classes < 1 || num_classes > 16) {
    throw ContractError("pose_template supports 1..16 classes");
  }
  if (class_index < 0 || class_index >= num_classes) {
    throw ContractError("pose_template class index out of range");
  }

  std::vector<Point> p(LandmarkSet::kMaxLandmarkId + 1);

  // Head cluster.
  p[0] = {0.50, 0.12};   // nose
  p[1] = {0.46, 0.10};   // left eye
  p[2] = {0.44, 0.10};
  p[3] = {0.42, 0.11};
  p[4] = {0.54, 0.10};   // right eye
  p[5] = {0.56, 0.10};
  p[6] = {0.58, 0.11};
  p[7] = {0.40, 0.14};   // ears
  p[8] = {0.60, 0.14};
  p[9] = {0.47, 0.17};   // mouth corners
  p[10] = {0.53, 0.17};

  // Torso.
  p[11] = {0.38, 0.30};  // left shoulder
  p[12] = {0.62, 0.30};  // right shoulder
  p[23] = {0.42, 0.62};  // left hip
  p[24] = {0.58, 0.62};  // right hip

  // Right arm reaches toward the class anchor; the elbow bows away from the
  // shoulder-wrist chord so every class keeps a distinct bend.
  const Point wrist = wrist_anchor(class_index);
  const Point shoulder = p[12];
  const Point mid{0.5 * (shoulder.x + wrist.x), 0.5 * (shoulder.y + wrist.y)};
  const double dx = wrist.x - shoulder.x;
  const double dy = wrist.y - shoulder.y;
  const double len = std::sqrt(dx * dx + dy * dy);
  const double nx = len > 1e-9 ? -dy / len : 1.0;
  const double ny = len > 1e-9 ? dx / len : 0.0;
  const Point elbow{mid.x + 0.07 * nx, mid.y + 0.07 * ny};
  p[14] = elbow;  // right elbow
  p[16] = wrist;  // right wrist
  p[18] = {wrist.x + 0.03, wrist.y + 0.03};  // right pinky
  p[20] = {wrist.x + 0.04, wrist.y};         // right index
  p[22] = {wrist.x + 0.02, wrist.y - 0.03};  // right thumb

  // Left arm: hangs for the first 16-class half, lifts for class >= 8 so the
  // two grid rows that share a wrist column still differ on the other side.
  const bool lifted = class_index >= 8;
  const Point lwrist = lifted ? Point{0.24, 0.34} : Point{0.34, 0.56};
  const Point lelbow = lifted ? Point{0.30, 0.44} : Point{0.36, 0.44};
  p[13] = lelbow;  // left elbow
  p[15] = lwrist;  // left wrist
  p[17] = {lwrist.x - 0.03, lwrist.y + 0.03};  // left pinky
  p[19] = {lwrist.x - 0.04, lwrist.y};         // left index
  p[21] = {lwrist.x - 0.02, lwrist.y - 0.03};  // left thumb

  std::vector<Landmark> landmarks;
  landmarks.reserve(p.size());
  for (int id = 0; id <= LandmarkSet::kMaxLandmarkId; ++id) {
    landmarks.push_back(Landmark{id, p[static_cast<std::size_t>(id)].x,
                                 p[static_cast<std::size_t>(id)].y, 1.0});
  }
  return LandmarkSet::from_points(landmarks);
}

namespace {

struct ViewTransform {
  double scale = 1.0;
  double angle_deg = 0.0;
  double shift_x = 0.0;
  double shift_y = 0.0;
};

ViewTransform transform_for(View view) {
  switch (view) {
    case View::dashboard:
      return {1.0, 0.0, 0.0, 0.0};
    case View::rearview:
      return {0.85, 10.0, -0.06, 0.03};
    case View::rightside:
      return {0.90, -12.0, 0.07, 0.02};
  }
  throw ContractError("unknown view");
}

}  // namespace

LandmarkSet view_pose(int class_index, int num_classes, View view) {
  const LandmarkSet base = pose_template(class_index, num_classes);
  const ViewTransform t = transform_for(view);
  const double rad = t.angle_deg * kPi / 180.0;
  const double c = std::cos(rad);
  const double s = std::sin(rad);
  std::vector<Landmark> out;
  out.reserve(base.points().size());
  for (const Landmark& lm : base.points()) {
    const double cx = lm.x - 0.5;
    const double cy = lm.y - 0.5;
    const double rx = t.scale * (c * cx - s * cy);
    const double ry = t.scale * (s * cx + c * cy);
    out.push_back(Landmark{lm.id, clamp01(rx + 0.5 + t.shift_x),
                           clamp01(ry + 0.5 + t.shift_y), lm.visibility});
  }
  return LandmarkSet::from_points(out);
}

LandmarkSet jitter_pose(const LandmarkSet& pose, double sigma, SplitMix64& rng) {
  if (!std::isfinite(sigma) || sigma < 0.0) {
    throw ContractError("jitter sigma must be finite and >= 0");
  }
  std::vector<Landmark> out;
  out.reserve(pose.points().size());
  for (const Landmark& lm : pose.points()) {
    const double jx = sigma * rng.next_normal();
    const double jy = sigma * rng.next_normal();
    out.push_back(Landmark{lm.id, clamp01(lm.x + jx), clamp01(lm.y + jy), lm.visibility});
  }
  return LandmarkSet::from_points(out);
}

Image textured_background(int height, int width, SplitMix64& rng) {
  Image img = Image::black(height, width);

  // Horizontal gradient between two random mid-dark tones.
  std::uint8_t base_r = static_cast<std::uint8_t>(30 + rng.next_below(60));
  std::uint8_t base_g = static_cast<std::uint8_t>(30 + rng.next_below(60));
  std::uint8_t base_b = static_cast<std::uint8_t>(30 + rng.next_below(60));
  const int span = 40;
  for (int y = 0; y < height; ++y) {
    const double fy = height > 1 ? static_cast<double>(y) / (height - 1) : 0.0;
    for (int x = 0; x < width; ++x) {
      const double fx = width > 1 ? static_cast<double>(x) / (width - 1) : 0.0;
      std::uint8_t* px = img.at(y, x);
      px[0] = static_cast<std::uint8_t>(base_r + fx * span);
      px[1] = static_cast<std::uint8_t>(base_g + fy * span);
      px[2] = static_cast<std::uint8_t>(base_b + 0.5 * (fx + fy) * span);
    }
  }

  // A few rectangles standing in for cabin furniture.
  const int rects = 3 + static_cast<int>(rng.next_below(3));
  for (int r = 0; r < rects; ++r) {
    const int rw = 8 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(width / 3 + 1)));
    const int rh = 8 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(height / 3 + 1)));
    const int x0 = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(width)));
    const int y0 = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(height)));
    const std::uint8_t rr = static_cast<std::uint8_t>(40 + rng.next_below(120));
    const std::uint8_t rg = static_cast<std::uint8_t>(40 + rng.next_below(120));
    const std::uint8_t rb = static_cast<std::uint8_t>(40 + rng.next_below(120));
    for (int y = y0; y < std::min(height, y0 + rh); ++y) {
      for (int x = x0; x < std::min(width, x0 + rw); ++x) {
        std::uint8_t* px = img.at(y, x);
        px[0] = rr;
        px[1] = rg;
        px[2] = rb;
      }
    }
  }

  // Per-pixel speckle keeps neighborhoods from being exactly constant.
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const int noise = static_cast<int>(rng.next_below(17)) - 8;
      std::uint8_t* px = img.at(y, x);
      for (int ch = 0; ch < 3; ++ch) {
        const int v = static_cast<int>(px[ch]) + noise;
        // Floor of 1 keeps the background non-black so composited bones can
        // never be mistaken for background and vice versa.
        px[ch] = static_cast<std::uint8_t>(std::clamp(v, 1, 255));
      }
    }
  }
  return img;
}

std::vector<SyntheticSample> gen_synthetic_dataset(const SyntheticConfig& config) {
  validate(config);
  std::vector<SyntheticSample> out;
  out.reserve(static_cast<std::size_t>(3) * config.num_classes * config.per_class);
  for (View view : kAllViews) {
    for (int c = 0; c < config.num_classes; ++c) {
      for (int i = 0; i < config.per_class; ++i) {
        // Per-sample stream: independent of generation order.
        const std::uint64_t view_tag = static_cast<std::uint64_t>(view) + 1;
        std::uint64_t sample_seed = mix_seed(config.seed, view_tag);
        sample_seed = mix_seed(sample_seed, static_cast<std::uint64_t>(c) + 1);
        sample_seed = mix_seed(sample_seed, static_cast<std::uint64_t>(i) + 1);
        SplitMix64 rng(sample_seed);

        const LandmarkSet posed = view_pose(c, config.num_classes, view);
        const LandmarkSet jittered = jitter_pose(posed, config.jitter_sigma, rng);

        Image canvas = textured_background(config.canvas_size, config.canvas_size, rng);
        const Image overlay = render_skeleton(jittered, config.canvas_size,
                                              config.canvas_size, config.style);
        Image composed = composite(canvas, overlay);
        if (composed.height != config.image_size) {
          composed = resize_bilinear(composed, config.image_size, config.image_size);
        }

        SyntheticSample sample;
        sample.sample.image = std::move(composed);
        sample.sample.class_index = c;
        sample.sample.view = view;
        sample.landmarks = jittered;
        out.push_back(std::move(sample));
      }
    }
  }
  return out;
}

void write_dataset(const std::filesystem::path& root,
                   const std::vector<SyntheticSample>& samples) {
  namespace fs = std::filesystem;
  fs::create_directories(root);
  std::vector<ManifestEntry> manifest;
  std::vector<int> counter(3 * 16, 0);
  for (const SyntheticSample& s : samples) {
    const std::string view_name = to_string(s.sample.view);
    const std::string class_name = "class" + std::to_string(s.sample.class_index);
    const fs::path dir = root / view_name / class_name;
    fs::create_directories(dir);
    const std::size_t slot =
        static_cast<std::size_t>(s.sample.view) * 16 +
        static_cast<std::size_t>(s.sample.class_index % 16);
    char stem[32];
    std::snprintf(stem, sizeof stem, "sample%04d", counter[slot]);
    ++counter[slot];

    const fs::path image_rel = fs::path(view_name) / class_name / (std::string(stem) + ".ppm");
    write_ppm_file(s.sample.image, (root / image_rel).string());

    const fs::path doc_rel =
        fs::path(view_name) / class_name / (std::string(stem) + ".landmarks.json");
    std::ofstream doc(root / doc_rel);
    if (!doc) {
      throw FormatError("cannot write landmark document " + (root / doc_rel).string());
    }
    LandmarkDocument lm_doc;
    lm_doc.width = s.sample.image.width;
    lm_doc.height = s.sample.image.height;
    lm_doc.landmarks = s.landmarks;
    doc << write_landmark_document(lm_doc);

    ManifestEntry entry;
    entry.path = image_rel.generic_string();
    entry.class_index = s.sample.class_index;
    entry.view = s.sample.view;
    manifest.push_back(entry);
  }
  write_manifest(root, manifest);
}

}  // namespace posevit
