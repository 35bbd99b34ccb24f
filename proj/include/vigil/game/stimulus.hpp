#pragma once

// Seeded stimulus-image generation for the two-player counting game. Each
// question is a pair of rasters sharing one ground-truth answer: an easy
// variant for the first player and a deliberately noised hard variant for the
// second (strictly more distractor figures, a stronger saturation push and a
// whole-image rotation). Geometry is rejection-sampled so counted figures
// never overlap; an infeasible request fails loudly instead of rendering an
// ambiguous image.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "vigil/errors.hpp"
#include "vigil/util/png.hpp"
#include "vigil/util/rng.hpp"

namespace vigil {

enum class Difficulty { kEasy, kHard };

inline std::string to_string(Difficulty d) {
  return d == Difficulty::kEasy ? "easy" : "hard";
}

inline Difficulty difficulty_from_string(const std::string& s) {
  if (s == "easy") return Difficulty::kEasy;
  if (s == "hard") return Difficulty::kHard;
  throw ConfigError("[circle-game] unknown difficulty '" + s + "'");
}

enum class ShapeKind { kCircle, kSquare, kTriangle, kStar };

inline std::string to_string(ShapeKind s) {
  switch (s) {
    case ShapeKind::kCircle: return "circle";
    case ShapeKind::kSquare: return "square";
    case ShapeKind::kTriangle: return "triangle";
    case ShapeKind::kStar: return "star";
  }
  throw DomainError("[circle-game] unknown shape kind");
}

inline ShapeKind shape_kind_from_string(const std::string& s) {
  if (s == "circle") return ShapeKind::kCircle;
  if (s == "square") return ShapeKind::kSquare;
  if (s == "triangle") return ShapeKind::kTriangle;
  if (s == "star") return ShapeKind::kStar;
  throw ConfigError("[circle-game] unknown shape kind '" + s + "'");
}

// Named colors usable as a counted pair. Kept small and high-contrast; the
// default pair is blue/yellow.
inline Rgb named_color(const std::string& name) {
  if (name == "blue") return {45, 105, 235};
  if (name == "yellow") return {240, 200, 40};
  if (name == "red") return {215, 60, 50};
  if (name == "green") return {55, 170, 85};
  if (name == "purple") return {140, 80, 200};
  if (name == "orange") return {245, 140, 30};
  if (name == "teal") return {35, 165, 165};
  if (name == "pink") return {235, 110, 170};
  throw LookupError("[circle-game] unknown color name '" + name + "'");
}

// Visual theme of a session: which color pair is counted and which figure
// shape carries the colors. The default reproduces the original task.
struct StimulusStyle {
  std::pair<std::string, std::string> color_pair = {"blue", "yellow"};
  ShapeKind shape = ShapeKind::kCircle;

  bool is_default() const {
    return color_pair.first == "blue" && color_pair.second == "yellow" &&
           shape == ShapeKind::kCircle;
  }
};

struct StimulusSpec {
  int target_count_a = 0;  // figures in color_pair.first (counted positively)
  int target_count_b = 0;  // figures in color_pair.second (counted negatively)
  Difficulty difficulty = Difficulty::kEasy;
  int distractor_count = 0;
  double saturation_boost = 0.0;
  double rotation_deg = 0.0;
  std::pair<std::string, std::string> color_pair = {"blue", "yellow"};
  ShapeKind shape = ShapeKind::kCircle;
  std::uint64_t seed = 0;

  int ground_truth() const { return target_count_a - target_count_b; }

  void validate() const {
    if (target_count_a < 0 || target_count_b < 0)
      throw DomainError("[circle-game] target counts must be >= 0");
    if (distractor_count < 0)
      throw DomainError("[circle-game] distractor count must be >= 0");
    if (!(saturation_boost >= 0.0))
      throw DomainError("[circle-game] saturation boost must be >= 0");
    named_color(color_pair.first);
    named_color(color_pair.second);
  }
};

namespace detail {

constexpr int kCanvas = 512;
constexpr double kMinRadius = 12.0;
constexpr double kMaxRadius = 28.0;
constexpr int kPlacementAttemptCap = 10000;

struct PlacedShape {
  double x = 0, y = 0, r = 0;
  ShapeKind shape = ShapeKind::kCircle;
  Rgb color;
  double alpha = 1.0;  // counted figures are opaque; distractors translucent
};

// Inside test in shape-local coordinates (dx, dy relative to center).
inline bool inside_shape(ShapeKind kind, double dx, double dy, double r) {
  switch (kind) {
    case ShapeKind::kCircle:
      return dx * dx + dy * dy <= r * r;
    case ShapeKind::kSquare: {
      const double h = r * 0.86;
      return std::abs(dx) <= h && std::abs(dy) <= h;
    }
    case ShapeKind::kTriangle: {
      // Upward-pointing triangle inscribed in the radius-r circle.
      const double x0 = 0, y0 = -r;
      const double x1 = -r * 0.866, y1 = r * 0.5;
      const double x2 = r * 0.866, y2 = r * 0.5;
      auto side = [&](double ax, double ay, double bx, double by) {
        return (bx - ax) * (dy - ay) - (by - ay) * (dx - ax);
      };
      const double s0 = side(x0, y0, x1, y1);
      const double s1 = side(x1, y1, x2, y2);
      const double s2 = side(x2, y2, x0, y0);
      return (s0 >= 0 && s1 >= 0 && s2 >= 0) || (s0 <= 0 && s1 <= 0 && s2 <= 0);
    }
    case ShapeKind::kStar: {
      // Five-point star: boundary radius ramps from the outer radius at a
      // spike down to the inner radius at a valley.
      const double rho = std::sqrt(dx * dx + dy * dy);
      if (rho > r) return false;
      const double spike = M_PI / 5.0;  // half-angle between spikes
      double theta = std::atan2(dy, dx) + M_PI / 2.0;  // spike at "up"
      theta = std::fmod(std::fmod(theta, 2 * spike) + 2 * spike, 2 * spike);
      const double off = std::min(theta, 2 * spike - theta) / spike;
      const double boundary = r - (r - r * 0.42) * off;
      return rho <= boundary;
    }
  }
  return false;
}

// Rejection-samples non-overlapping shape centers inside a centered disc so a
// later whole-image rotation cannot clip any figure. Throws GenerationError
// when a shape cannot be placed within the attempt cap — never overlaps.
inline void place_shape(std::vector<PlacedShape>& placed, PlacedShape shape, Rng& rng) {
  const double cx = kCanvas / 2.0, cy = kCanvas / 2.0;
  const double reach = kCanvas / 2.0 - shape.r - 6.0;
  if (reach <= 0.0)
    throw GenerationError("[circle-game] shape too large for the canvas");
  for (int attempt = 0; attempt < kPlacementAttemptCap; ++attempt) {
    const double ang = rng.real(0.0, 2 * M_PI);
    const double rad = reach * std::sqrt(rng.real());
    shape.x = cx + rad * std::cos(ang);
    shape.y = cy + rad * std::sin(ang);
    bool clear = true;
    for (const auto& other : placed) {
      const double ddx = shape.x - other.x, ddy = shape.y - other.y;
      const double min_gap = shape.r + other.r + 3.0;
      if (ddx * ddx + ddy * ddy < min_gap * min_gap) {
        clear = false;
        break;
      }
    }
    if (clear) {
      placed.push_back(shape);
      return;
    }
  }
  throw GenerationError(
      "[circle-game] infeasible packing: no non-overlapping spot after " +
      std::to_string(kPlacementAttemptCap) + " attempts");
}

// Push every pixel's channels away from its gray value; whites and grays are
// fixed points, so only colored figures get more vivid.
inline void boost_saturation(Image& img, double boost) {
  if (boost <= 0.0) return;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const Rgb c = img.get(x, y);
      const double gray = (c.r + c.g + c.b) / 3.0;
      auto push = [&](std::uint8_t v) {
        const double out = gray + (v - gray) * (1.0 + boost);
        return static_cast<std::uint8_t>(out < 0 ? 0 : (out > 255 ? 255 : out + 0.5));
      };
      img.set(x, y, {push(c.r), push(c.g), push(c.b)});
    }
  }
}

// Nearest-neighbor rotation about the canvas center; uncovered pixels become
// background. Figures are confined to the inscribed disc, so none clip.
inline Image rotate_image(const Image& img, double degrees, Rgb background) {
  if (degrees == 0.0) return img;
  const double rad = degrees * M_PI / 180.0;
  const double c = std::cos(rad), s = std::sin(rad);
  const double cx = img.width() / 2.0, cy = img.height() / 2.0;
  Image out(img.width(), img.height(), background);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
      const int sx = static_cast<int>(std::floor(cx + c * dx + s * dy));
      const int sy = static_cast<int>(std::floor(cy - s * dx + c * dy));
      if (img.in_bounds(sx, sy)) out.set(x, y, img.get(sx, sy));
    }
  }
  return out;
}

}  // namespace detail

// Renders a spec to a 512x512 raster. Deterministic: the same spec always
// produces the same pixels (and hence identical PNG bytes).
inline Image render_stimulus(const StimulusSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const Rgb background{255, 255, 255};
  Image img(detail::kCanvas, detail::kCanvas, background);

  const Rgb color_a = named_color(spec.color_pair.first);
  const Rgb color_b = named_color(spec.color_pair.second);

  std::vector<detail::PlacedShape> placed;
  placed.reserve(spec.target_count_a + spec.target_count_b + spec.distractor_count);
  auto add_target = [&](Rgb color) {
    detail::PlacedShape sh;
    sh.r = rng.real(detail::kMinRadius, detail::kMaxRadius);
    sh.shape = spec.shape;
    sh.color = color;
    sh.alpha = 1.0;
    detail::place_shape(placed, sh, rng);
  };
  for (int i = 0; i < spec.target_count_a; ++i) add_target(color_a);
  for (int i = 0; i < spec.target_count_b; ++i) add_target(color_b);

  // Distractors: translucent figures in colors far from both counted colors
  // so they read as noise, not candidates.
  const std::vector<Rgb> distractor_palette = {
      {110, 110, 110}, {60, 160, 95}, {200, 70, 60}, {150, 120, 200}};
  const std::vector<ShapeKind> distractor_shapes = {
      ShapeKind::kSquare, ShapeKind::kTriangle, ShapeKind::kStar};
  auto far_from_targets = [&](Rgb c) {
    auto dist2 = [](Rgb a, Rgb b) {
      const double dr = a.r - b.r, dg = a.g - b.g, db = a.b - b.b;
      return dr * dr + dg * dg + db * db;
    };
    return dist2(c, color_a) > 80.0 * 80.0 && dist2(c, color_b) > 80.0 * 80.0;
  };
  std::vector<Rgb> usable;
  for (const Rgb& c : distractor_palette)
    if (far_from_targets(c)) usable.push_back(c);
  if (usable.empty()) usable.push_back({110, 110, 110});
  for (int i = 0; i < spec.distractor_count; ++i) {
    detail::PlacedShape sh;
    sh.r = rng.real(10.0, 22.0);
    ShapeKind k = distractor_shapes[static_cast<std::size_t>(
        rng.below(distractor_shapes.size()))];
    // Never let a distractor share the counted shape: shape identity is the
    // other cue (besides color) that marks a figure as a non-candidate.
    if (k == spec.shape)
      k = k == ShapeKind::kSquare ? ShapeKind::kTriangle : ShapeKind::kSquare;
    sh.shape = k;
    sh.color = usable[static_cast<std::size_t>(rng.below(usable.size()))];
    sh.alpha = 0.45;
    detail::place_shape(placed, sh, rng);
  }

  for (const auto& sh : placed) {
    const int x0 = std::max(0, static_cast<int>(std::floor(sh.x - sh.r)));
    const int x1 = std::min(detail::kCanvas - 1, static_cast<int>(std::ceil(sh.x + sh.r)));
    const int y0 = std::max(0, static_cast<int>(std::floor(sh.y - sh.r)));
    const int y1 = std::min(detail::kCanvas - 1, static_cast<int>(std::ceil(sh.y + sh.r)));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x)
        if (detail::inside_shape(sh.shape, x + 0.5 - sh.x, y + 0.5 - sh.y, sh.r)) {
          if (sh.alpha >= 1.0)
            img.set(x, y, sh.color);
          else
            img.blend(x, y, sh.color, sh.alpha);
        }
  }

  Image rotated = detail::rotate_image(img, spec.rotation_deg, background);
  detail::boost_saturation(rotated, spec.saturation_boost);
  return rotated;
}

struct StimulusPair {
  StimulusSpec easy_spec;
  StimulusSpec hard_spec;
  Image easy_image{1, 1};
  Image hard_image{1, 1};
};

// Builds the easy/hard pair for one question. Both variants decode to
// `answer`; the hard one has strictly more distractors, a strictly higher
// saturation boost and a nonzero rotation. Deterministic per (answer, seed).
inline StimulusPair generate_stimulus_pair(int answer, std::uint64_t seed,
                                           const StimulusStyle& style = {}) {
  if (answer < -10 || answer > 10)
    throw DomainError("[circle-game] |answer| must be <= 10, got " +
                      std::to_string(answer));
  Rng rng(seed);

  StimulusPair pair;
  auto& easy = pair.easy_spec;
  auto& hard = pair.hard_spec;

  const int base = static_cast<int>(rng.range(2, 6));
  easy.target_count_a = answer >= 0 ? base + answer : base;
  easy.target_count_b = answer >= 0 ? base : base - answer;
  const int bump = static_cast<int>(rng.range(1, 3));
  hard.target_count_a = easy.target_count_a + bump;
  hard.target_count_b = easy.target_count_b + bump;

  easy.difficulty = Difficulty::kEasy;
  hard.difficulty = Difficulty::kHard;
  easy.distractor_count = static_cast<int>(rng.range(2, 4));
  hard.distractor_count = easy.distractor_count + static_cast<int>(rng.range(2, 4));
  easy.saturation_boost = rng.real(0.10, 0.30);
  hard.saturation_boost = easy.saturation_boost + rng.real(0.25, 0.55);
  easy.rotation_deg = 0.0;
  hard.rotation_deg = (rng.coin() ? 1.0 : -1.0) * rng.real(8.0, 40.0);

  easy.color_pair = hard.color_pair = style.color_pair;
  easy.shape = hard.shape = style.shape;
  easy.seed = rng.next_u64();
  hard.seed = rng.next_u64();

  pair.easy_image = render_stimulus(easy);
  pair.hard_image = render_stimulus(hard);
  return pair;
}

// The fixed question set for a session: `n_pairs` easy/hard pairs whose
// answer lists are identical element-wise by construction.
inline std::vector<StimulusPair> make_session_stimuli(int n_pairs, std::uint64_t seed,
                                                      const StimulusStyle& style = {}) {
  if (n_pairs < 1) throw DomainError("[circle-game] n_pairs must be >= 1");
  Rng rng(seed);
  std::vector<StimulusPair> out;
  out.reserve(static_cast<std::size_t>(n_pairs));
  for (int i = 0; i < n_pairs; ++i) {
    const int answer = static_cast<int>(rng.range(-6, 6));
    const std::uint64_t pair_seed = rng.next_u64();
    out.push_back(generate_stimulus_pair(answer, pair_seed, style));
  }
  return out;
}

}  // namespace vigil
