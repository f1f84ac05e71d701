#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "segphrase/error.hpp"
#include "segphrase/imaging.hpp"
#include "test_support.hpp"

using namespace segphrase;

TEST_SUITE("imaging") {

TEST_CASE("P5 bytes scale to [0,1]") {
  testing::TempDir dir("img");
  testing::write_file(dir / "a.pgm", std::string("P5\n2 2\n255\n") + std::string("\x00\xff\x00\xff", 4));
  const Image img = load_image(dir / "a.pgm");
  CHECK(img.width == 2);
  CHECK(img.height == 2);
  CHECK(img.channels == 1);
  CHECK(img.data == std::vector<double>{0, 1, 0, 1});
}

TEST_CASE("P6 keeps three channels") {
  testing::TempDir dir("img");
  testing::write_file(dir / "a.ppm", std::string("P6 1 1 255\n") + std::string("\xff\x00\x00", 3));
  const Image img = load_image(dir / "a.ppm");
  CHECK(img.channels == 3);
  CHECK(img.data == std::vector<double>{1, 0, 0});
  CHECK(img.intensity(0, 0) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("header comments and small maxval") {
  testing::TempDir dir("img");
  testing::write_file(dir / "a.pgm", std::string("P5\n# made by hand\n3 1\n# max\n2\n") + std::string("\x00\x01\x02", 3));
  const Image img = load_image(dir / "a.pgm");
  CHECK(img.data == std::vector<double>{0.0, 0.5, 1.0});
}

TEST_CASE("load errors") {
  testing::TempDir dir("img");
  testing::write_file(dir / "p4.pbm", "P4\n1 1\n\x80");
  testing::write_file(dir / "text.txt", "hello world");
  testing::write_file(dir / "short.pgm", std::string("P5\n4 4\n255\n") + std::string(5, '\x10'));
  testing::write_file(dir / "wide.pgm", std::string("P5\n1 1\n65535\n") + std::string(2, '\x10'));

  auto kind_of = [](const std::filesystem::path& p) {
    try {
      load_image(p);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::kValidation;
  };
  CHECK(kind_of(dir / "p4.pbm") == ErrorKind::kUnsupportedMagic);
  CHECK(kind_of(dir / "text.txt") == ErrorKind::kMalformedHeader);
  CHECK(kind_of(dir / "short.pgm") == ErrorKind::kTruncatedData);
  CHECK(kind_of(dir / "wide.pgm") == ErrorKind::kMalformedHeader);
  CHECK(kind_of(dir / "missing.pgm") == ErrorKind::kIo);
}

TEST_CASE("save and reload round-trips 8-bit values") {
  testing::TempDir dir("img");
  Image img = testing::gray(3, 2);
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = static_cast<double>(i * 51) / 255.0;
  save_image(dir / "x.pgm", img);
  const Image back = load_image(dir / "x.pgm");
  REQUIRE(back.data.size() == img.data.size());
  for (std::size_t i = 0; i < img.data.size(); ++i) CHECK(back.data[i] == doctest::Approx(img.data[i]));

  PixelMask m(2, 2);
  m.at(1, 0) = 1;
  save_mask(dir / "m.pgm", m);
  const Image mi = load_image(dir / "m.pgm");
  CHECK(mi.data == std::vector<double>{0, 1, 0, 0});
}

TEST_CASE("uniform 8x8 with target 4 gives four 4x4 blocks") {
  const SuperpixelMap sp = compute_superpixels(testing::gray(8, 8, 0.3), 4);
  REQUIRE(sp.count == 4);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) CHECK(sp.at(x, y) == (y / 4) * 2 + x / 4);
}

TEST_CASE("target equal to pixel count gives singletons") {
  Image img = testing::gray(5, 3);
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = (i * 7 % 11) / 10.0;
  const SuperpixelMap sp = compute_superpixels(img, 15);
  CHECK(sp.count == 15);
  std::set<int> ids(sp.labels.begin(), sp.labels.end());
  CHECK(ids.size() == 15);
}

TEST_CASE("target 1 covers the image") {
  Image img = testing::gray(6, 4);
  img.data[5] = 1.0;
  const SuperpixelMap sp = compute_superpixels(img, 1);
  CHECK(sp.count == 1);
  CHECK(std::all_of(sp.labels.begin(), sp.labels.end(), [](int l) { return l == 0; }));
}

TEST_CASE("superpixel target outside range is rejected") {
  CHECK_THROWS_AS(compute_superpixels(testing::gray(4, 4), 0), Error);
  CHECK_THROWS_AS(compute_superpixels(testing::gray(4, 4), 17), Error);
}

TEST_CASE("superpixels are connected, canonical, and deterministic") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    Image img = testing::gray(24, 18);
    for (auto& v : img.data) v = u(rng);
    const int target = 5 + trial * 7;
    const SuperpixelMap sp = compute_superpixels(img, target);
    CHECK(sp == compute_superpixels(img, target));

    // first-occurrence raster order
    int next = 0;
    for (int l : sp.labels) {
      CHECK(l <= next);
      if (l == next) ++next;
    }
    CHECK(next == sp.count);

    // each label is one 4-connected component
    std::vector<int> seen(sp.count, 0);
    std::vector<std::uint8_t> visited(sp.labels.size(), 0);
    for (std::size_t start = 0; start < sp.labels.size(); ++start) {
      if (visited[start]) continue;
      const int label = sp.labels[start];
      ++seen[label];
      std::vector<std::size_t> stack{start};
      visited[start] = 1;
      while (!stack.empty()) {
        const std::size_t p = stack.back();
        stack.pop_back();
        const int x = static_cast<int>(p % sp.width), y = static_cast<int>(p / sp.width);
        const int nx[4] = {x - 1, x + 1, x, x};
        const int ny[4] = {y, y, y - 1, y + 1};
        for (int k = 0; k < 4; ++k) {
          if (nx[k] < 0 || ny[k] < 0 || nx[k] >= sp.width || ny[k] >= sp.height) continue;
          const std::size_t q = static_cast<std::size_t>(ny[k]) * sp.width + nx[k];
          if (!visited[q] && sp.labels[q] == label) {
            visited[q] = 1;
            stack.push_back(q);
          }
        }
      }
    }
    CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
  }
}

TEST_CASE("canonicalize_labels renumbers by first occurrence") {
  SuperpixelMap sp{3, 1, 0, {7, 2, 7}};
  CHECK(canonicalize_labels(sp) == 2);
  CHECK(sp.labels == std::vector<int>{0, 1, 0});
  CHECK(sp.count == 2);
}

TEST_CASE("sobel magnitude matches a hand-computed ramp") {
  const int w = 6;
  Image img = testing::gray(w, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < w; ++x) img.data[y * w + x] = x / double(w - 1);
  const auto mag = sobel_magnitude(img);
  // Replicated border halves the central difference at the edges; rows are
  // constant so the vertical response is zero.
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < w; ++x) {
      const double left = img.data[y * w + std::max(x - 1, 0)];
      const double right = img.data[y * w + std::min(x + 1, w - 1)];
      CHECK(mag[y * w + x] == doctest::Approx(4.0 * (right - left)));
    }
  }
}

TEST_CASE("constant image: identical descriptors and zero boundary") {
  const Image img = testing::gray(8, 8, 0.6);
  const SuperpixelMap sp = compute_superpixels(img, 4);
  const SuperpixelGraph g = extract_features(img, sp);
  REQUIRE(g.node_count() == 4);
  CHECK(g.dimension() == 24);
  for (const auto& f : g.features) CHECK(f == g.features.front());
  CHECK(g.edges.size() == 4);
  for (double b : g.boundary_prob) CHECK(b == 0.0);
  // one bin per channel block carries all the mass
  double total = 0.0;
  for (double v : g.features[0]) total += v;
  CHECK(total == doctest::Approx(3.0));
}

TEST_CASE("black/white step has boundary probability 1") {
  Image img = testing::gray(8, 8);
  SuperpixelMap sp{8, 8, 2, std::vector<int>(64)};
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      img.data[y * 8 + x] = x < 4 ? 0.0 : 1.0;
      sp.labels[y * 8 + x] = x < 4 ? 0 : 1;
    }
  const SuperpixelGraph g = extract_features(img, sp);
  REQUIRE(g.edges.size() == 1);
  CHECK(g.edges[0] == Edge{0, 1});
  // Sobel response on both sides of the step is 4, well above the clamp.
  CHECK(g.boundary_prob[0] == 1.0);
}

TEST_CASE("single superpixel has no edges") {
  const Image img = testing::gray(5, 5, 0.2);
  const SuperpixelGraph g = extract_features(img, compute_superpixels(img, 1));
  CHECK(g.edges.empty());
  CHECK(g.boundary_prob.empty());
  CHECK(g.areas == std::vector<long>{25});
  CHECK(g.centroids[0][0] == doctest::Approx(2.5));
}

TEST_CASE("histogram blocks are L1-normalized") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Image img;
  img.width = 10;
  img.height = 10;
  img.channels = 3;
  img.data.resize(300);
  for (auto& v : img.data) v = u(rng);
  const SuperpixelMap sp = compute_superpixels(img, 6);
  const SuperpixelGraph g = extract_features(img, sp);
  for (const auto& f : g.features) {
    for (int b = 0; b < 3; ++b) {
      double s = 0.0;
      for (int i = 0; i < 8; ++i) {
        CHECK(f[b * 8 + i] >= 0.0);
        s += f[b * 8 + i];
      }
      CHECK(s == doctest::Approx(1.0));
    }
  }
  for (double b : g.boundary_prob) {
    CHECK(b >= 0.0);
    CHECK(b <= 1.0);
  }
  CHECK(std::is_sorted(g.edges.begin(), g.edges.end()));
}

TEST_CASE("box fractions, lifting and coverage") {
  SuperpixelMap sp{4, 2, 2, {0, 0, 1, 1, 0, 0, 1, 1}};
  const auto frac = superpixel_box_fraction(sp, Box{1, 0, 3, 2});
  CHECK(frac == std::vector<double>{0.5, 0.5});
  const PixelMask lifted = lift_labels(sp, {0, 1});
  CHECK(lifted.count() == 4);
  CHECK(lifted.at(3, 1) == 1);
  CHECK(lifted.at(0, 0) == 0);
  PixelMask m(4, 2);
  m.at(0, 0) = 1;
  CHECK(mask_coverage(sp, m) == std::vector<double>{0.25, 0.0});
  CHECK_THROWS_AS(lift_labels(sp, {1}), Error);
}

TEST_CASE("box IoU") {
  CHECK(intersection_over_union(Box{0, 0, 2, 2}, Box{1, 0, 3, 2}) == doctest::Approx(2.0 / 6.0));
  CHECK(intersection_over_union(Box{0, 0, 1, 1}, Box{5, 5, 6, 6}) == 0.0);
  CHECK(intersection_over_union(Box{0, 0, 4, 4}, Box{0, 0, 4, 4}) == 1.0);
}

TEST_CASE("sidecar round trip") {
  testing::TempDir dir("img");
  Image img = testing::gray(9, 7);
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = (i % 5) / 4.0;
  const SuperpixelMap sp = compute_superpixels(img, 6);
  save_superpixel_sidecar(dir / "s.txt", "img_01", sp);
  std::string id;
  CHECK(load_superpixel_sidecar(dir / "s.txt", &id) == sp);
  CHECK(id == "img_01");
  save_superpixel_debug(dir / "s.pgm", sp);
  CHECK(load_image(dir / "s.pgm").width == 9);
}

}
