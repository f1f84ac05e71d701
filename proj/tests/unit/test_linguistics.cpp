#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "segphrase/error.hpp"
#include "segphrase/eval.hpp"
#include "segphrase/latent.hpp"
#include "segphrase/linguistics.hpp"
#include "test_support.hpp"

using namespace segphrase;

namespace {

ErrorKind error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::kInvalidArgument;
}

EmbeddingTable plane() {
  EmbeddingTable t(2);
  t.add("a", {1, 0});
  t.add("b", {0, 1});
  t.add("z", {0, 0});
  return t;
}

}  // namespace

TEST_SUITE("linguistics") {

TEST_CASE("parse embeddings") {
  const EmbeddingTable t = parse_embeddings("2 3\nhorse 0.1 0.2 0.3\njump -1 0 1e-3\n");
  CHECK(t.size() == 2);
  CHECK(t.dim() == 3);
  CHECK(*t.find("jump") == std::vector<double>{-1, 0, 1e-3});
  CHECK(t.find("cat") == nullptr);

  CHECK(error_of([] { parse_embeddings("2 3\nhorse 0.1 0.2 0.3\njump 1 2\n"); }) == ErrorKind::kRaggedRow);
  CHECK(error_of([] { parse_embeddings("1 2\nhorse 0.1 x\n"); }) == ErrorKind::kNonNumeric);
  CHECK(error_of([] { parse_embeddings("3 1\nhorse 1\njump 2\n"); }) == ErrorKind::kMalformedHeader);
  CHECK(error_of([] { parse_embeddings("dim\n"); }) == ErrorKind::kMalformedHeader);
  try {
    parse_embeddings("2 1\nhorse 1\nhorse 2\n");
    FAIL("expected duplicate error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kDuplicateWord);
    CHECK(std::string(e.what()).find("horse") != std::string::npos);
  }
}

TEST_CASE("phrase vectors sum in-vocabulary words") {
  const EmbeddingTable t = plane();
  CHECK(phrase_vector(t, "a").values == std::vector<double>{1, 0});
  CHECK(phrase_vector(t, "a b").values == std::vector<double>{1, 1});
  const PhraseVector pv = phrase_vector(t, "a c");
  CHECK(pv.values == std::vector<double>{1, 0});
  CHECK(pv.missing_words == 1);
  CHECK(error_of([&] { phrase_vector(t, "c d"); }) == ErrorKind::kOutOfVocabulary);
}

TEST_CASE("cosine") {
  const EmbeddingTable t = plane();
  CHECK(psi(t, "a b", "A  B") == doctest::Approx(1.0));
  CHECK(psi(t, "a", "b") == 0.0);
  CHECK(psi(t, "a b", "a") == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
  CHECK(error_of([&] { psi(t, "z", "a"); }) == ErrorKind::kUndefinedCosine);
  CHECK(cosine({1e-200, 0}, {1e-200, 0}) == doctest::Approx(1.0));
  CHECK(cosine({1e200, 1e200}, {1e200, 0}) == doctest::Approx(1.0 / std::sqrt(2.0)));
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> a(5), b(5);
    for (auto& v : a) v = n(rng);
    for (auto& v : b) v = n(rng);
    const double c = cosine(a, b);
    CHECK(c >= -1.0);
    CHECK(c <= 1.0);
    CHECK(c == cosine(b, a));
  }
}

TEST_CASE("message passing") {
  const PixelMask m(2, 2);
  CHECK(message_pass({{"a", m, 3.5}}, plane())[0].score == 3.5);

  const std::vector<WeightedMask> two{{"a", m, 1.0}, {"b", m, 1.0}};
  auto zero = message_pass(two, plane());
  CHECK(zero[0].score == 1.0);
  CHECK(zero[1].score == 1.0);
  auto full = message_pass(two, std::vector<std::vector<double>>{{1, 1}, {1, 1}});
  CHECK(full[0].score == 2.0);
  CHECK(full[1].score == 2.0);

  const std::vector<std::vector<double>> psi3{{1.0, 0.5, 0.0}, {0.5, 1.0, 0.25}, {0.0, 0.25, 1.0}};
  const std::vector<WeightedMask> three{{"x", m, 1.0}, {"y", m, 2.0}, {"z", m, 3.0}};
  const auto out = message_pass(three, psi3);
  for (int p = 0; p < 3; ++p) {
    double expected = 0.0;
    for (int q = 0; q < 3; ++q) expected += psi3[p][q] * three[q].score;
    CHECK(out[p].score == expected);
  }
  // negative similarities are clamped to zero
  EmbeddingTable t(2);
  t.add("up", {0, 1});
  t.add("down", {0, -1});
  const auto sim = similarity_matrix({{"up", m, 1}, {"down", m, 1}}, t);
  CHECK(sim[0][1] == 0.0);
  CHECK(sim[0][0] == 1.0);
}

TEST_CASE("fusion") {
  Image img = testing::gray(12, 12);
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = ((i % 12) / 4 + (i / 12) / 4) % 2 ? 0.8 : 0.2;
  const SuperpixelMap sp = compute_superpixels(img, 9);
  const SuperpixelGraph g = extract_features(img, sp);
  REQUIRE(sp.count == 9);
  const FuseOptions no_pairwise{0.05, 0.0};

  Labeling lab(9, 0);
  lab[0] = lab[4] = lab[5] = 1;
  const PixelMask mask = lift_labels(sp, lab);
  CHECK(fuse_and_cut({{"a", mask, 1.0}}, g, sp, no_pairwise) == lab);
  CHECK(fuse_and_cut({{"a", mask, 1.0}, {"a", mask, 1.0}}, g, sp, no_pairwise) == lab);

  Labeling other(9, 0);
  other[8] = other[2] = 1;
  const auto fused = fuse_and_cut({{"a", mask, 10.0}, {"b", lift_labels(sp, other), 0.1}}, g, sp, no_pairwise);
  CHECK(fused == lab);

  const auto w = fused_weights({{"a", mask, 10.0}, {"b", lift_labels(sp, other), 0.1}}, sp);
  CHECK(*std::min_element(w.begin(), w.end()) == 0.0);
  CHECK(*std::max_element(w.begin(), w.end()) == 1.0);
  CHECK(w[8] == doctest::Approx(0.01));

  // all-equal weights: 1 when positive, 0 otherwise
  PixelMask all(12, 12);
  for (auto& b : all.bits) b = 1;
  CHECK(fused_weights({{"a", all, 2.0}}, sp) == std::vector<double>(9, 1.0));
  CHECK(fused_weights({{"a", PixelMask(12, 12), 2.0}}, sp) == std::vector<double>(9, 0.0));
}

TEST_CASE("detections and suppression") {
  const auto dets = parse_detections(
      "# phrase x0 y0 x1 y1 score\n"
      "\"horse jumping\" 0 0 10 10 0.9\n"
      "\"Horse Jumping\" 1 1 10 10 0.8\n"
      "\"person\" 1 1 10 10 0.7\n"
      "\"horse jumping\" 20 20 30 30 -0.5\n");
  REQUIRE(dets.size() == 4);
  CHECK(dets[0].phrase == "horse jumping");
  CHECK(dets[0].box == Box{0, 0, 10, 10});
  const auto kept = non_max_suppression(dets, 0.5, 0.0);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].score == 0.9);
  CHECK(kept[1].phrase == "person");
  CHECK(non_max_suppression(dets, 0.5, 1.0).empty());

  CHECK(error_of([] { parse_detections("horse 0 0 1 1 1\n"); }) == ErrorKind::kMalformedHeader);
  CHECK(error_of([] { parse_detections("\"horse\" 0 0 1 1\n"); }) == ErrorKind::kRaggedRow);
  CHECK(error_of([] { parse_detections("\"horse\" 0 0 1 one 1\n"); }) == ErrorKind::kNonNumeric);
}

TEST_CASE("semantic segmentation end to end") {
  SceneConfig sc;
  sc.seed = 77;
  const SyntheticScene scene = make_scene(sc);
  const SuperpixelMap sp = compute_superpixels(scene.image, 200);
  const SuperpixelGraph g = extract_features(scene.image, sp);
  const TrainingInstance inst = make_training_instance(g, sp, scene.box);
  SegmentPhraseTable table;
  table.insert(PhraseKey("object", 0), em_learn({inst}, LatentConfig{}));
  EmbeddingTable emb(2);
  emb.add("object", {1, 0});

  SemanticConfig cfg;
  cfg.fuse.pairwise_scale = 0.0;
  const std::vector<Detection> whole{{"object", Box{0, 0, 64, 64}, 1.0}};
  const SemanticResult r = semantic_segment(scene.image, whole, table, emb, cfg);
  CHECK_FALSE(r.empty);
  const Labeling direct = segment_with_model(table.find(PhraseKey("object", 0))->model, g);
  CHECK(r.mask == lift_labels(sp, direct));
  CHECK(r.report.size() == 1);
  CHECK(r.report[0].post_score == 1.0);

  cfg.detection_threshold = 5.0;
  const SemanticResult none = semantic_segment(scene.image, whole, table, emb, cfg);
  CHECK(none.empty);
  CHECK(none.mask.count() == 0);

  CHECK(error_of([&] {
          semantic_segment(scene.image, {{"zebra", Box{0, 0, 4, 4}, 1.0}}, table, emb, cfg);
        }) == ErrorKind::kUnknownPhrase);
}

}
