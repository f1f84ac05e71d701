#include "segphrase/imaging.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <deque>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>
#include <sstream>

#include "segphrase/error.hpp"

namespace segphrase {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Reads the next whitespace/comment-delimited decimal token of a PNM header.
int read_header_int(const std::string& buf, std::size_t& pos, const std::string& what) {
  while (pos < buf.size()) {
    const unsigned char c = static_cast<unsigned char>(buf[pos]);
    if (c == '#') {
      while (pos < buf.size() && buf[pos] != '\n') ++pos;
    } else if (std::isspace(c)) {
      ++pos;
    } else {
      break;
    }
  }
  if (pos >= buf.size() || !std::isdigit(static_cast<unsigned char>(buf[pos]))) {
    fail(ErrorKind::kMalformedHeader, "malformed PNM header: expected " + what);
  }
  long value = 0;
  while (pos < buf.size() && std::isdigit(static_cast<unsigned char>(buf[pos]))) {
    value = value * 10 + (buf[pos] - '0');
    if (value > 1'000'000) fail(ErrorKind::kMalformedHeader, "PNM " + what + " out of range");
    ++pos;
  }
  return static_cast<int>(value);
}

}  // namespace

double Image::intensity(int x, int y) const {
  if (channels == 1) return at(x, y, 0);
  double sum = 0.0;
  for (int c = 0; c < channels; ++c) sum += at(x, y, c);
  return sum / channels;
}

std::size_t PixelMask::count() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

double intersection_over_union(const Box& a, const Box& b) {
  const Box inter{std::max(a.x0, b.x0), std::max(a.y0, b.y0), std::min(a.x1, b.x1),
                  std::min(a.y1, b.y1)};
  const double i = static_cast<double>(inter.area());
  const double u = static_cast<double>(a.area()) + static_cast<double>(b.area()) - i;
  return u > 0.0 ? i / u : 0.0;
}

Image load_image(const std::filesystem::path& path) {
  const std::string buf = read_file(path);
  if (buf.size() < 2 || buf[0] != 'P') {
    fail(ErrorKind::kMalformedHeader, "not a PNM file: " + path.string());
  }
  int channels = 0;
  if (buf[1] == '5') {
    channels = 1;
  } else if (buf[1] == '6') {
    channels = 3;
  } else {
    fail(ErrorKind::kUnsupportedMagic,
         std::string("unsupported PNM magic P") + buf[1] + " in " + path.string());
  }
  std::size_t pos = 2;
  const int width = read_header_int(buf, pos, "width");
  const int height = read_header_int(buf, pos, "height");
  const int maxval = read_header_int(buf, pos, "maxval");
  if (width <= 0 || height <= 0) fail(ErrorKind::kMalformedHeader, "PNM dimensions must be positive");
  if (maxval <= 0 || maxval > 255) fail(ErrorKind::kMalformedHeader, "PNM maxval must be in 1..255");
  if (pos >= buf.size() || !std::isspace(static_cast<unsigned char>(buf[pos]))) {
    fail(ErrorKind::kMalformedHeader, "PNM header not terminated by whitespace");
  }
  ++pos;

  Image img;
  img.width = width;
  img.height = height;
  img.channels = channels;
  const std::size_t n = static_cast<std::size_t>(width) * height * channels;
  if (buf.size() - pos < n) {
    fail(ErrorKind::kTruncatedData, "truncated pixel data in " + path.string());
  }
  img.data.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    img.data[i] = static_cast<unsigned char>(buf[pos + i]) / static_cast<double>(maxval);
  }
  return img;
}

void save_pgm(const std::filesystem::path& path, int width, int height,
              const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  out << "P5\n" << width << ' ' << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void save_image(const std::filesystem::path& path, const Image& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  out << (img.channels == 1 ? "P5\n" : "P6\n") << img.width << ' ' << img.height << "\n255\n";
  std::string bytes(img.data.size(), '\0');
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    const double v = std::clamp(img.data[i], 0.0, 1.0);
    bytes[i] = static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0)));
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

void save_mask(const std::filesystem::path& path, const PixelMask& mask) {
  std::vector<std::uint8_t> bytes(mask.bits.size());
  std::transform(mask.bits.begin(), mask.bits.end(), bytes.begin(),
                 [](std::uint8_t b) { return b ? std::uint8_t{255} : std::uint8_t{0}; });
  save_pgm(path, mask.width, mask.height, bytes);
}

int canonicalize_labels(SuperpixelMap& sp) {
  std::map<int, int> remap;
  for (int& label : sp.labels) {
    auto [it, inserted] = remap.try_emplace(label, static_cast<int>(remap.size()));
    label = it->second;
  }
  sp.count = static_cast<int>(remap.size());
  return sp.count;
}

namespace {

// Keeps the largest 4-connected component of each label and floods every
// other fragment from its neighbours, so each final region is connected.
void enforce_connectivity(SuperpixelMap& sp) {
  const int w = sp.width;
  const int h = sp.height;
  const std::size_t n = sp.labels.size();
  std::vector<int> component(n, -1);
  std::vector<std::size_t> component_size;
  std::vector<int> component_label;
  std::vector<std::size_t> stack;

  for (std::size_t start = 0; start < n; ++start) {
    if (component[start] >= 0) continue;
    const int id = static_cast<int>(component_size.size());
    const int label = sp.labels[start];
    std::size_t size = 0;
    stack.assign(1, start);
    component[start] = id;
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      ++size;
      const int x = static_cast<int>(p % w);
      const int y = static_cast<int>(p / w);
      const std::size_t nbrs[4] = {x > 0 ? p - 1 : n, x + 1 < w ? p + 1 : n,
                                   y > 0 ? p - w : n, y + 1 < h ? p + w : n};
      for (std::size_t q : nbrs) {
        if (q < n && component[q] < 0 && sp.labels[q] == label) {
          component[q] = id;
          stack.push_back(q);
        }
      }
    }
    component_size.push_back(size);
    component_label.push_back(label);
  }

  std::map<int, int> best;  // label -> component id (first largest wins)
  for (int c = 0; c < static_cast<int>(component_size.size()); ++c) {
    auto it = best.find(component_label[c]);
    if (it == best.end() || component_size[c] > component_size[it->second]) {
      best[component_label[c]] = c;
    }
  }

  std::deque<std::size_t> queue;
  std::vector<int> out(n, -1);
  for (std::size_t p = 0; p < n; ++p) {
    if (best[sp.labels[p]] == component[p]) {
      out[p] = sp.labels[p];
      queue.push_back(p);
    }
  }
  while (!queue.empty()) {
    const std::size_t p = queue.front();
    queue.pop_front();
    const int x = static_cast<int>(p % w);
    const int y = static_cast<int>(p / w);
    const std::size_t nbrs[4] = {x > 0 ? p - 1 : n, x + 1 < w ? p + 1 : n,
                                 y > 0 ? p - w : n, y + 1 < h ? p + w : n};
    for (std::size_t q : nbrs) {
      if (q < n && out[q] < 0) {
        out[q] = out[p];
        queue.push_back(q);
      }
    }
  }
  sp.labels = std::move(out);
}

}  // namespace

SuperpixelMap compute_superpixels(const Image& img, int target_count,
                                  const SuperpixelOptions& options) {
  const int w = img.width;
  const int h = img.height;
  if (w <= 0 || h <= 0) fail(ErrorKind::kInvalidArgument, "empty image");
  if (target_count < 1 || static_cast<long>(target_count) > static_cast<long>(w) * h) {
    fail(ErrorKind::kInvalidArgument, "superpixel target must lie in [1, width*height]");
  }

  int gx = static_cast<int>(std::lround(std::sqrt(static_cast<double>(target_count) * w / h)));
  gx = std::clamp(gx, 1, std::min(w, target_count));
  int gy = static_cast<int>(std::floor(static_cast<double>(target_count) / gx + 0.5));
  gy = std::clamp(gy, 1, h);
  const int k = gx * gy;
  const double step_x = static_cast<double>(w) / gx;
  const double step_y = static_cast<double>(h) / gy;

  std::vector<double> intensity(img.pixel_count());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) intensity[static_cast<std::size_t>(y) * w + x] = img.intensity(x, y);

  SuperpixelMap sp;
  sp.width = w;
  sp.height = h;
  sp.labels.resize(img.pixel_count());

  struct Center {
    double x, y, value;
  };
  std::vector<Center> centers(k);
  std::vector<double> sum_x(k), sum_y(k), sum_v(k);
  std::vector<long> members(k);

  // Grid-cell assignment doubles as the initial labeling and seeds the
  // cluster means.
  for (int y = 0; y < h; ++y) {
    const int cy = std::min(gy - 1, static_cast<int>(y / step_y));
    for (int x = 0; x < w; ++x) {
      const int cx = std::min(gx - 1, static_cast<int>(x / step_x));
      const int c = cy * gx + cx;
      sp.labels[static_cast<std::size_t>(y) * w + x] = c;
      sum_v[c] += intensity[static_cast<std::size_t>(y) * w + x];
      ++members[c];
    }
  }
  for (int cy = 0; cy < gy; ++cy) {
    for (int cx = 0; cx < gx; ++cx) {
      const int c = cy * gx + cx;
      centers[c] = {(cx + 0.5) * step_x - 0.5, (cy + 0.5) * step_y - 0.5,
                    members[c] > 0 ? sum_v[c] / members[c] : 0.0};
    }
  }

  const double spatial = options.compactness * options.compactness;
  const int reach_x = static_cast<int>(std::ceil(step_x));
  const int reach_y = static_cast<int>(std::ceil(step_y));
  std::vector<double> dist(img.pixel_count());

  for (int iter = 0; iter < options.iterations; ++iter) {
    std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
    for (int c = 0; c < k; ++c) {
      const Center& ctr = centers[c];
      const int xa = std::max(0, static_cast<int>(std::floor(ctr.x)) - reach_x);
      const int xb = std::min(w - 1, static_cast<int>(std::ceil(ctr.x)) + reach_x);
      const int ya = std::max(0, static_cast<int>(std::floor(ctr.y)) - reach_y);
      const int yb = std::min(h - 1, static_cast<int>(std::ceil(ctr.y)) + reach_y);
      for (int y = ya; y <= yb; ++y) {
        for (int x = xa; x <= xb; ++x) {
          const std::size_t p = static_cast<std::size_t>(y) * w + x;
          const double dv = intensity[p] - ctr.value;
          const double dx = (x - ctr.x) / step_x;
          const double dy = (y - ctr.y) / step_y;
          const double d = dv * dv + spatial * (dx * dx + dy * dy);
          if (d < dist[p]) {
            dist[p] = d;
            sp.labels[p] = c;
          }
        }
      }
    }
    std::fill(sum_x.begin(), sum_x.end(), 0.0);
    std::fill(sum_y.begin(), sum_y.end(), 0.0);
    std::fill(sum_v.begin(), sum_v.end(), 0.0);
    std::fill(members.begin(), members.end(), 0);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t p = static_cast<std::size_t>(y) * w + x;
        const int c = sp.labels[p];
        sum_x[c] += x;
        sum_y[c] += y;
        sum_v[c] += intensity[p];
        ++members[c];
      }
    }
    for (int c = 0; c < k; ++c) {
      if (members[c] == 0) continue;
      centers[c] = {sum_x[c] / members[c], sum_y[c] / members[c], sum_v[c] / members[c]};
    }
  }

  enforce_connectivity(sp);
  canonicalize_labels(sp);
  return sp;
}

std::vector<double> sobel_magnitude(const Image& img) {
  const int w = img.width;
  const int h = img.height;
  auto at = [&](int x, int y) {
    return img.intensity(std::clamp(x, 0, w - 1), std::clamp(y, 0, h - 1));
  };
  std::vector<double> mag(img.pixel_count());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double gx = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1)) -
                        (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
      const double gy = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1)) -
                        (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
      mag[static_cast<std::size_t>(y) * w + x] = std::sqrt(gx * gx + gy * gy);
    }
  }
  return mag;
}

namespace {

int histogram_bin(double v, int bins) {
  const int b = static_cast<int>(std::floor(v * bins));
  return std::clamp(b, 0, bins - 1);
}

double channel_value(const Image& img, int x, int y, int c) {
  return img.channels == 1 ? img.at(x, y, 0) : img.at(x, y, c);
}

void normalize_blocks(std::vector<double>& hist, int blocks, int bins) {
  for (int b = 0; b < blocks; ++b) {
    double total = 0.0;
    for (int i = 0; i < bins; ++i) total += hist[b * bins + i];
    if (total <= 0.0) continue;
    for (int i = 0; i < bins; ++i) hist[b * bins + i] /= total;
  }
}

void check_map(const Image& img, const SuperpixelMap& sp) {
  if (sp.width != img.width || sp.height != img.height ||
      sp.labels.size() != img.pixel_count()) {
    fail(ErrorKind::kDimensionMismatch, "superpixel map does not match image dimensions");
  }
}

}  // namespace

std::vector<double> appearance_histogram(const Image& img, const PixelMask& region,
                                         const FeatureOptions& options) {
  if (region.width != img.width || region.height != img.height) {
    fail(ErrorKind::kDimensionMismatch, "mask does not match image dimensions");
  }
  const int bins = options.bins_per_channel;
  std::vector<double> hist(static_cast<std::size_t>(kHistogramChannels) * bins, 0.0);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      if (!region.at(x, y)) continue;
      for (int c = 0; c < kHistogramChannels; ++c) {
        hist[c * bins + histogram_bin(channel_value(img, x, y, c), bins)] += 1.0;
      }
    }
  }
  normalize_blocks(hist, kHistogramChannels, bins);
  return hist;
}

SuperpixelGraph extract_features(const Image& img, const SuperpixelMap& sp,
                                 const FeatureOptions& options) {
  check_map(img, sp);
  const int n = sp.count;
  const int bins = options.bins_per_channel;
  const int w = img.width;
  const int h = img.height;

  SuperpixelGraph g;
  g.features.assign(n, std::vector<double>(static_cast<std::size_t>(kHistogramChannels) * bins, 0.0));
  g.areas.assign(n, 0);
  g.centroids.assign(n, {0.0, 0.0});

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int s = sp.at(x, y);
      ++g.areas[s];
      g.centroids[s][0] += x + 0.5;
      g.centroids[s][1] += y + 0.5;
      for (int c = 0; c < kHistogramChannels; ++c) {
        g.features[s][c * bins + histogram_bin(channel_value(img, x, y, c), bins)] += 1.0;
      }
    }
  }
  for (int s = 0; s < n; ++s) {
    normalize_blocks(g.features[s], kHistogramChannels, bins);
    if (g.areas[s] > 0) {
      g.centroids[s][0] /= static_cast<double>(g.areas[s]);
      g.centroids[s][1] /= static_cast<double>(g.areas[s]);
    }
  }

  const std::vector<double> grad = sobel_magnitude(img);
  std::map<Edge, std::pair<double, long>> boundary;
  auto visit = [&](std::size_t p, std::size_t q) {
    const int a = sp.labels[p];
    const int b = sp.labels[q];
    if (a == b) return;
    auto& acc = boundary[Edge{std::min(a, b), std::max(a, b)}];
    acc.first += 0.5 * (grad[p] + grad[q]);
    ++acc.second;
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * w + x;
      if (x + 1 < w) visit(p, p + 1);
      if (y + 1 < h) visit(p, p + w);
    }
  }
  g.edges.reserve(boundary.size());
  g.boundary_prob.reserve(boundary.size());
  for (const auto& [edge, acc] : boundary) {
    g.edges.push_back(edge);
    g.boundary_prob.push_back(std::clamp(acc.first / static_cast<double>(acc.second), 0.0, 1.0));
  }
  return g;
}

std::vector<double> superpixel_box_fraction(const SuperpixelMap& sp, const Box& box) {
  std::vector<double> inside(sp.count, 0.0);
  std::vector<double> total(sp.count, 0.0);
  for (int y = 0; y < sp.height; ++y) {
    for (int x = 0; x < sp.width; ++x) {
      const int s = sp.at(x, y);
      total[s] += 1.0;
      if (box.contains(x, y)) inside[s] += 1.0;
    }
  }
  for (int s = 0; s < sp.count; ++s) inside[s] = total[s] > 0.0 ? inside[s] / total[s] : 0.0;
  return inside;
}

PixelMask lift_labels(const SuperpixelMap& sp, const std::vector<std::uint8_t>& labels) {
  if (static_cast<int>(labels.size()) != sp.count) {
    fail(ErrorKind::kDimensionMismatch, "labeling length does not match superpixel count");
  }
  PixelMask mask(sp.width, sp.height);
  for (std::size_t p = 0; p < sp.labels.size(); ++p) mask.bits[p] = labels[sp.labels[p]] ? 1 : 0;
  return mask;
}

std::vector<double> mask_coverage(const SuperpixelMap& sp, const PixelMask& mask) {
  if (mask.width != sp.width || mask.height != sp.height) {
    fail(ErrorKind::kDimensionMismatch, "mask does not match superpixel map dimensions");
  }
  std::vector<double> covered(sp.count, 0.0);
  std::vector<double> total(sp.count, 0.0);
  for (std::size_t p = 0; p < sp.labels.size(); ++p) {
    total[sp.labels[p]] += 1.0;
    covered[sp.labels[p]] += mask.bits[p] ? 1.0 : 0.0;
  }
  for (int s = 0; s < sp.count; ++s) covered[s] = total[s] > 0.0 ? covered[s] / total[s] : 0.0;
  return covered;
}

void save_superpixel_debug(const std::filesystem::path& pgm_path, const SuperpixelMap& sp) {
  std::vector<std::uint8_t> bytes(sp.labels.size());
  for (std::size_t p = 0; p < bytes.size(); ++p) bytes[p] = static_cast<std::uint8_t>(sp.labels[p] % 256);
  save_pgm(pgm_path, sp.width, sp.height, bytes);
}

void save_superpixel_sidecar(const std::filesystem::path& path, const std::string& id,
                             const SuperpixelMap& sp) {
  if (id.empty() || std::any_of(id.begin(), id.end(), [](unsigned char c) { return std::isspace(c); })) {
    fail(ErrorKind::kInvalidArgument, "sidecar id must be a single non-empty token");
  }
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  out << id << ' ' << sp.width << ' ' << sp.height << '\n';
  for (int y = 0; y < sp.height; ++y) {
    for (int x = 0; x < sp.width; ++x) out << (x ? " " : "") << sp.at(x, y);
    out << '\n';
  }
}

SuperpixelMap load_superpixel_sidecar(const std::filesystem::path& path, std::string* id) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path.string());
  std::string name;
  SuperpixelMap sp;
  if (!(in >> name >> sp.width >> sp.height) || sp.width <= 0 || sp.height <= 0) {
    fail(ErrorKind::kMalformedHeader, "malformed superpixel sidecar header in " + path.string());
  }
  sp.labels.resize(static_cast<std::size_t>(sp.width) * sp.height);
  for (int& label : sp.labels) {
    if (!(in >> label) || label < 0) fail(ErrorKind::kTruncatedData, "truncated sidecar " + path.string());
  }
  sp.count = sp.labels.empty() ? 0 : *std::max_element(sp.labels.begin(), sp.labels.end()) + 1;
  if (id) *id = name;
  return sp;
}

}  // namespace segphrase
