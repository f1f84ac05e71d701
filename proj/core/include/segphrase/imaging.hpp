#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace segphrase {

// Row-major image with values in [0,1]. Pixel (x, y), channel c lives at
// data[(y * width + x) * channels + c].
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;  // 1 or 3
  std::vector<double> data;

  double at(int x, int y, int c = 0) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  // Mean over channels.
  double intensity(int x, int y) const;
  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
};

// Per-pixel binary mask, row-major, values 0/1.
struct PixelMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  PixelMask() = default;
  PixelMask(int w, int h) : width(w), height(h), bits(static_cast<std::size_t>(w) * h, 0) {}

  std::uint8_t at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& at(int x, int y) { return bits[static_cast<std::size_t>(y) * width + x]; }
  std::size_t count() const;
  bool operator==(const PixelMask&) const = default;
};

// Half-open pixel rectangle: pixel (x, y) is inside iff x0 <= x < x1 and
// y0 <= y < y1.
struct Box {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  long area() const { return x1 > x0 && y1 > y0 ? static_cast<long>(x1 - x0) * (y1 - y0) : 0; }
  bool contains(int x, int y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }
  bool operator==(const Box&) const = default;
};

double intersection_over_union(const Box& a, const Box& b);

struct SuperpixelMap {
  int width = 0;
  int height = 0;
  int count = 0;
  std::vector<int> labels;  // per pixel, 0..count-1

  int at(int x, int y) const { return labels[static_cast<std::size_t>(y) * width + x]; }
  bool operator==(const SuperpixelMap&) const = default;
};

struct Edge {
  int i = 0;  // i < j
  int j = 0;
  bool operator==(const Edge&) const = default;
  auto operator<=>(const Edge&) const = default;
};

// The MRF domain: one descriptor per superpixel, adjacency, and the boundary
// strength of every adjacency.
struct SuperpixelGraph {
  std::vector<std::vector<double>> features;
  std::vector<Edge> edges;             // sorted, unique
  std::vector<double> boundary_prob;   // parallel to edges, in [0,1]
  std::vector<long> areas;
  std::vector<std::array<double, 2>> centroids;  // pixel-centre coordinates

  int node_count() const { return static_cast<int>(features.size()); }
  int dimension() const { return features.empty() ? 0 : static_cast<int>(features.front().size()); }
};

struct SuperpixelOptions {
  int iterations = 10;
  // Weight of the normalized spatial distance against the intensity distance.
  double compactness = 0.1;
};

struct FeatureOptions {
  int bins_per_channel = 8;
};

constexpr int kHistogramChannels = 3;

Image load_image(const std::filesystem::path& path);
void save_pgm(const std::filesystem::path& path, int width, int height,
              const std::vector<std::uint8_t>& bytes);
void save_image(const std::filesystem::path& path, const Image& img);
void save_mask(const std::filesystem::path& path, const PixelMask& mask);

SuperpixelMap compute_superpixels(const Image& img, int target_count,
                                  const SuperpixelOptions& options = {});

// Relabels the map so ids appear in first-occurrence raster order; returns
// the number of superpixels.
int canonicalize_labels(SuperpixelMap& sp);

// Unnormalized 3x3 Sobel gradient magnitude of the intensity channel with
// replicated borders.
std::vector<double> sobel_magnitude(const Image& img);

SuperpixelGraph extract_features(const Image& img, const SuperpixelMap& sp,
                                 const FeatureOptions& options = {});

// Appearance histogram (kHistogramChannels blocks, each L1-normalized) over
// the given pixels. Empty selections produce all-zero blocks.
std::vector<double> appearance_histogram(const Image& img, const PixelMask& region,
                                         const FeatureOptions& options = {});

// Fraction of each superpixel's area inside the box.
std::vector<double> superpixel_box_fraction(const SuperpixelMap& sp, const Box& box);

// Lifts a per-superpixel labeling to the pixel grid.
PixelMask lift_labels(const SuperpixelMap& sp, const std::vector<std::uint8_t>& labels);

// Mean of the pixel mask over each superpixel.
std::vector<double> mask_coverage(const SuperpixelMap& sp, const PixelMask& mask);

// Debug export: PGM with label % 256 plus the exact-label sidecar
// ("<id> <width> <height>" header line then one row of labels per line).
void save_superpixel_debug(const std::filesystem::path& pgm_path, const SuperpixelMap& sp);
void save_superpixel_sidecar(const std::filesystem::path& path, const std::string& id,
                             const SuperpixelMap& sp);
SuperpixelMap load_superpixel_sidecar(const std::filesystem::path& path, std::string* id = nullptr);

}  // namespace segphrase
