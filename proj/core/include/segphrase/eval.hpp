#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "segphrase/imaging.hpp"

namespace segphrase {

struct SegMetrics {
  double precision = 0.0;  // fraction of pixels labeled correctly
  double jaccard = 0.0;    // foreground intersection over union
};

SegMetrics seg_metrics(const PixelMask& pred, const PixelMask& gt);

struct ScoredItem {
  double score = 0.0;
  bool gold = false;
};

struct CurvePoint {
  double fraction = 0.0;
  std::size_t declared = 0;
  std::size_t correct = 0;
};

// 0.1, 0.2, ..., 1.0
std::vector<double> default_declaration_grid();

// Items are ranked by |score| (stable); at fraction f the top ceil(f * n)
// are declared positive iff score > 0 and counted against gold.
std::vector<CurvePoint> declaration_curve(const std::vector<ScoredItem>& items,
                                          const std::vector<double>& grid);

enum class SceneShape { kEllipse, kRectangle, kBlob };

struct Texture {
  double mean = 0.5;
  double stripe_amplitude = 0.0;
  double stripe_period = 8.0;
  bool vertical = true;
};

struct SceneConfig {
  int size = 64;
  SceneShape shape = SceneShape::kEllipse;
  Texture fg{0.75};
  Texture bg{0.25};
  double noise = 0.05;
  std::uint64_t seed = 0;
};

struct SyntheticScene {
  Image image;
  PixelMask gt_mask;
  Box box;  // tight bounding box of gt_mask
  SceneConfig params;
};

SyntheticScene make_scene(const SceneConfig& config);

void write_metrics_csv(std::ostream& out, const std::vector<std::pair<std::string, SegMetrics>>& rows);
void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve);

}  // namespace segphrase
