#include "segphrase/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>

#include "segphrase/error.hpp"

namespace segphrase {

SegMetrics seg_metrics(const PixelMask& pred, const PixelMask& gt) {
  if (pred.width != gt.width || pred.height != gt.height || pred.bits.size() != gt.bits.size()) {
    fail(ErrorKind::kDimensionMismatch, "prediction and ground truth differ in size");
  }
  if (gt.bits.empty()) fail(ErrorKind::kEmptyInput, "empty masks");
  std::size_t agree = 0, inter = 0, uni = 0;
  for (std::size_t p = 0; p < gt.bits.size(); ++p) {
    const bool a = pred.bits[p] != 0;
    const bool b = gt.bits[p] != 0;
    agree += a == b;
    inter += a && b;
    uni += a || b;
  }
  SegMetrics m;
  m.precision = static_cast<double>(agree) / static_cast<double>(gt.bits.size());
  m.jaccard = uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
  return m;
}

std::vector<double> default_declaration_grid() {
  std::vector<double> grid;
  for (int i = 1; i <= 10; ++i) grid.push_back(i / 10.0);
  return grid;
}

std::vector<CurvePoint> declaration_curve(const std::vector<ScoredItem>& items, const std::vector<double>& grid) {
  if (items.empty()) fail(ErrorKind::kEmptyInput, "declaration curve needs at least one item");
  for (const auto& it : items)
    if (!std::isfinite(it.score)) fail(ErrorKind::kNumerical, "declaration scores must be finite");
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(items[a].score) > std::abs(items[b].score);
  });
  const double n = static_cast<double>(items.size());
  std::vector<CurvePoint> curve;
  for (double f : grid) {
    if (!(f >= 0.0 && f <= 1.0)) fail(ErrorKind::kInvalidArgument, "declaration fractions must lie in [0,1]");
    // The epsilon absorbs representation error such as 0.3 * 10 > 3.
    const auto declared = static_cast<std::size_t>(std::ceil(f * n - 1e-9));
    CurvePoint pt{f, std::min(declared, items.size()), 0};
    for (std::size_t r = 0; r < pt.declared; ++r) {
      const auto& it = items[order[r]];
      pt.correct += (it.score > 0.0) == it.gold;
    }
    curve.push_back(pt);
  }
  return curve;
}

namespace {

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

// Box-Muller on the raw engine output so scenes are identical across
// standard library implementations.
double gaussian(std::mt19937_64& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double texture_value(const Texture& t, int x, int y) {
  if (t.stripe_amplitude == 0.0) return t.mean;
  const double coord = t.vertical ? x : y;
  return t.mean + t.stripe_amplitude * std::sin(2.0 * std::numbers::pi * coord / t.stripe_period);
}

}  // namespace

SyntheticScene make_scene(const SceneConfig& config) {
  if (config.size < 8) fail(ErrorKind::kInvalidArgument, "scene size must be at least 8");
  if (config.noise < 0.0) fail(ErrorKind::kInvalidArgument, "noise must be non-negative");
  if (std::abs(config.fg.mean - config.bg.mean) < 3.0 * config.noise) {
    fail(ErrorKind::kInvalidArgument, "textures must differ in mean by at least 3x the noise level");
  }
  const int s = config.size;
  std::mt19937_64 rng(config.seed);

  SyntheticScene scene;
  scene.params = config;
  scene.gt_mask = PixelMask(s, s);

  struct Disc {
    double cx, cy, rx, ry;
  };
  std::vector<Disc> parts;
  switch (config.shape) {
    case SceneShape::kEllipse:
    case SceneShape::kRectangle: {
      const double cx = uniform(rng, 0.4, 0.6) * s;
      const double cy = uniform(rng, 0.4, 0.6) * s;
      parts.push_back({cx, cy, uniform(rng, 0.2, 0.3) * s, uniform(rng, 0.2, 0.3) * s});
      break;
    }
    case SceneShape::kBlob: {
      const double cx = uniform(rng, 0.4, 0.6) * s;
      const double cy = uniform(rng, 0.4, 0.6) * s;
      for (int k = 0; k < 3; ++k) {
        const double r = uniform(rng, 0.12, 0.2) * s;
        parts.push_back({cx + uniform(rng, -0.1, 0.1) * s, cy + uniform(rng, -0.1, 0.1) * s, r, r});
      }
      break;
    }
  }
  for (int y = 0; y < s; ++y) {
    for (int x = 0; x < s; ++x) {
      for (const auto& d : parts) {
        const double u = (x + 0.5 - d.cx) / d.rx;
        const double v = (y + 0.5 - d.cy) / d.ry;
        const bool inside = config.shape == SceneShape::kRectangle ? (std::abs(u) <= 1.0 && std::abs(v) <= 1.0)
                                                                   : (u * u + v * v <= 1.0);
        if (inside) scene.gt_mask.at(x, y) = 1;
      }
    }
  }

  scene.image.width = s;
  scene.image.height = s;
  scene.image.channels = 1;
  scene.image.data.resize(static_cast<std::size_t>(s) * s);
  Box box{s, s, 0, 0};
  for (int y = 0; y < s; ++y) {
    for (int x = 0; x < s; ++x) {
      const bool fg = scene.gt_mask.at(x, y) != 0;
      const double base = texture_value(fg ? config.fg : config.bg, x, y);
      const double noise = config.noise > 0.0 ? config.noise * gaussian(rng) : 0.0;
      scene.image.data[static_cast<std::size_t>(y) * s + x] = std::clamp(base + noise, 0.0, 1.0);
      if (fg) {
        box.x0 = std::min(box.x0, x);
        box.y0 = std::min(box.y0, y);
        box.x1 = std::max(box.x1, x + 1);
        box.y1 = std::max(box.y1, y + 1);
      }
    }
  }
  scene.box = box;
  return scene;
}

void write_metrics_csv(std::ostream& out, const std::vector<std::pair<std::string, SegMetrics>>& rows) {
  const auto old = out.precision(17);
  out << "name,precision,jaccard\n";
  for (const auto& [name, m] : rows) out << name << ',' << m.precision << ',' << m.jaccard << '\n';
  out.precision(old);
}

void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve) {
  out << "fraction,correct\n";
  for (const auto& p : curve) out << p.fraction << ',' << p.correct << '\n';
}

}  // namespace segphrase
