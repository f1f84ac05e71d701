#include <doctest.h>

#include <atomic>
#include <random>

#include "segphrase/config.hpp"
#include "segphrase/error.hpp"
#include "segphrase/parallel.hpp"

using namespace segphrase;

TEST_SUITE("config") {

TEST_CASE("defaults") {
  const Config c;
  CHECK(c.lambda == 0.05);
  CHECK(c.gmm_k == 5);
  CHECK(c.em_max_iters == 10);
  CHECK(c.superpixel_target == 200);
  CHECK(c.k_exemplars == 10);
  CHECK(c.ilp_lambda == 0.1);
  CHECK(c.nms_iou == 0.5);
  CHECK_NOTHROW(validate(c));
}

TEST_CASE("parse with comments and overrides") {
  const Config c = parse_config("# tuned\nlambda = 0.1\n gmm_k=3 # fewer\n\nseed=42\n");
  CHECK(c.lambda == 0.1);
  CHECK(c.gmm_k == 3);
  CHECK(c.seed == 42);
  CHECK(c.ilp_lambda == 0.1);
}

TEST_CASE("round trip is lossless") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(1e-6, 1.0);
  for (int i = 0; i < 50; ++i) {
    Config c;
    c.lambda = u(rng);
    c.gmm_k = 1 + static_cast<int>(rng() % 9);
    c.em_max_iters = static_cast<int>(rng() % 20);
    c.superpixel_target = 1 + static_cast<int>(rng() % 500);
    c.k_exemplars = 1 + static_cast<int>(rng() % 20);
    c.ilp_lambda = u(rng);
    c.nms_iou = u(rng);
    c.paraphrase_tau = u(rng);
    c.seed_shrink = u(rng);
    c.detection_threshold = u(rng) - 0.5;
    c.fuse_pairwise_scale = u(rng);
    c.seed = rng();
    c.jobs = 1 + static_cast<int>(rng() % 8);
    CHECK(parse_config(to_string(c)) == c);
  }
}

TEST_CASE("rejections") {
  CHECK_THROWS_AS(parse_config("lamda=0.1\n"), Error);
  CHECK_THROWS_AS(parse_config("lambda\n"), Error);
  CHECK_THROWS_AS(parse_config("lambda=abc\n"), Error);
  CHECK_THROWS_AS(parse_config("lambda=-1\n"), Error);
  CHECK_THROWS_AS(parse_config("gmm_k=0\n"), Error);
  CHECK_THROWS_AS(parse_config("jobs=1.5\n"), Error);
  CHECK_THROWS_AS(parse_config("nms_iou=1.5\n"), Error);
  try {
    parse_config("bogus=1\n");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kInvalidArgument);
    CHECK(std::string(e.what()).find("bogus") != std::string::npos);
  }
}

TEST_CASE("parallel_for covers every index once and rethrows") {
  for (int jobs : {1, 2, 7}) {
    std::vector<std::atomic<int>> hits(100);
    parallel_for(100, jobs, [&](std::size_t i) { ++hits[i]; });
    for (const auto& h : hits) CHECK(h.load() == 1);
  }
  CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) {
                    if (i == 4) fail(ErrorKind::kNumerical, "boom");
                  }),
                  Error);
  parallel_for(0, 4, [](std::size_t) { FAIL("no work expected"); });
}

}
