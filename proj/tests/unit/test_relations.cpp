#include <doctest.h>

#include <cmath>
#include <random>

#include "segphrase/error.hpp"
#include "segphrase/relations.hpp"
#include "test_support.hpp"

using namespace segphrase;

namespace {

// Unit vectors in the plane at the given angles; pairwise cosines are then
// cos(angle difference).
std::vector<double> at_angle(double radians) { return {std::cos(radians), std::sin(radians)}; }

PhraseExemplars random_exemplars(std::mt19937_64& rng, const std::string& name) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PhraseExemplars p{name, {}};
  const int n = 1 + static_cast<int>(rng() % 5);
  for (int i = 0; i < n; ++i) {
    std::vector<double> d(6);
    for (auto& v : d) v = u(rng);
    p.descriptors.push_back(d);
  }
  return p;
}

}  // namespace

TEST_SUITE("relations") {

TEST_CASE("region-to-image similarity") {
  const PhraseExemplars a{"a", {at_angle(0.0), at_angle(1.0)}};
  CHECK(sim_r2i(a, a) == doctest::Approx(1.0));

  // one a-mask, b-masks at cosines 0.3 and 0.8
  const PhraseExemplars one{"one", {{1.0, 0.0}}};
  const PhraseExemplars two{"two", {at_angle(std::acos(0.3)), at_angle(-std::acos(0.8))}};
  CHECK(sim_r2i(one, two) == doctest::Approx(0.8));

  // two a-masks at cosines 0.4 and 0.6 to a single b-mask
  const PhraseExemplars pair{"pair", {at_angle(std::acos(0.4)), at_angle(-std::acos(0.6))}};
  CHECK(sim_r2i(pair, one) == doctest::Approx(0.5));
  CHECK(sim_r2i(one, pair) == doctest::Approx(0.6));
  CHECK_THROWS_AS(sim_r2i(PhraseExemplars{"e", {}}, one), Error);
}

TEST_CASE("entailment score is exactly antisymmetric") {
  const PhraseExemplars one{"one", {{1.0, 0.0}}};
  const PhraseExemplars pair{"pair", {at_angle(std::acos(0.4)), at_angle(-std::acos(0.6))}};
  CHECK(entail_score(pair, one) == doctest::Approx(-0.1));
  CHECK(entail_score(one, one) == 0.0);
  std::mt19937_64 rng(7);
  for (int i = 0; i < 100; ++i) {
    const auto x = random_exemplars(rng, "x");
    const auto y = random_exemplars(rng, "y");
    CHECK(entail_score(x, y) + entail_score(y, x) == 0.0);
    CHECK(entail_score(x, x) == 0.0);
  }
  const ScoreMatrix m = entailment_scores({random_exemplars(rng, "a"), random_exemplars(rng, "b"),
                                           random_exemplars(rng, "c")});
  for (int i = 0; i < 3; ++i) {
    CHECK(m[i][i] == 0.0);
    for (int j = 0; j < 3; ++j) CHECK(m[i][j] == -m[j][i]);
  }
}

TEST_CASE("objective and transitivity helpers") {
  const ScoreMatrix s{{0, 0.5, 0.2}, {0.1, 0, 0.3}, {-0.4, 0.0, 0}};
  const DecisionMatrix w{{0, 1, 1}, {0, 0, 1}, {0, 0, 0}};
  CHECK(entailment_objective(s, w, 0.1) == doctest::Approx(0.5 + 0.2 + 0.3 - 0.3));
  CHECK(is_transitive(w));
  CHECK_FALSE(is_transitive(DecisionMatrix{{0, 1, 0}, {0, 0, 1}, {0, 0, 0}}));
  // 2-cycles involve no distinct triple
  CHECK(is_transitive(DecisionMatrix{{0, 1}, {1, 0}}));
}

TEST_CASE("non-positive gains leave the graph empty") {
  const ScoreMatrix s{{0, -0.5, 0.0}, {-0.1, 0, -0.3}, {0.0, -0.2, 0}};
  for (SolverMode mode : {SolverMode::kExact, SolverMode::kGreedy}) {
    const auto sol = solve_entailment_graph(s, 0.0, mode);
    CHECK(sol.decisions == DecisionMatrix(3, std::vector<std::uint8_t>(3, 0)));
    CHECK(sol.objective == 0.0);
  }
}

TEST_CASE("closure edge is taken against its raw score") {
  const ScoreMatrix s{{0, 0.9, -0.05}, {-0.9, 0, 0.8}, {0.05, -0.8, 0}};
  const auto sol = solve_entailment_graph(s, 0.1, SolverMode::kExact);
  CHECK(sol.decisions[0][1] == 1);
  CHECK(sol.decisions[1][2] == 1);
  CHECK(sol.decisions[0][2] == 1);
  CHECK(sol.objective == doctest::Approx(0.9 + 0.8 - 0.05 - 0.3));
  CHECK(sol.objective == doctest::Approx(testing::oracle_best_entailment(s, 0.1)));
}

TEST_CASE("exact solver matches enumeration") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < 60; ++t) {
    const int n = 2 + t % 3;
    ScoreMatrix s(n, std::vector<double>(n, 0.0));
    for (int x = 0; x < n; ++x)
      for (int y = 0; y < n; ++y)
        if (x != y) s[x][y] = u(rng);
    const double lambda = (t % 4) * 0.1;
    const auto sol = solve_entailment_graph(s, lambda, SolverMode::kExact);
    CHECK(sol.objective == doctest::Approx(testing::oracle_best_entailment(s, lambda)).epsilon(1e-12));
    CHECK(testing::oracle_triple_violations(sol.decisions) == 0);
    CHECK(sol.objective == doctest::Approx(entailment_objective(s, sol.decisions, lambda)));

    const auto greedy = solve_entailment_graph(s, lambda, SolverMode::kGreedy);
    CHECK(testing::oracle_triple_violations(greedy.decisions) == 0);
    CHECK(greedy.objective <= sol.objective + 1e-12);
  }
}

TEST_CASE("exact ties resolve to the lexicographically smallest graph") {
  // Both edges of the 2-cycle gain exactly zero.
  const ScoreMatrix s{{0, 0.1}, {0.1, 0}};
  const auto sol = solve_entailment_graph(s, 0.1, SolverMode::kExact);
  CHECK(sol.decisions == DecisionMatrix{{0, 0}, {0, 0}});
}

TEST_CASE("greedy scales past the exact limit") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int n = 12;
  ScoreMatrix s(n, std::vector<double>(n, 0.0));
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y)
      if (x != y) s[x][y] = u(rng);
  const auto sol = solve_entailment_graph(s, 0.1, SolverMode::kGreedy);
  CHECK(is_transitive(sol.decisions));
  try {
    solve_entailment_graph(s, 0.1, SolverMode::kExact);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kProblemTooLarge);
  }
  CHECK_THROWS_AS(solve_entailment_graph(ScoreMatrix{{0, 1}}, 0.1, SolverMode::kGreedy), Error);
  CHECK_THROWS_AS(solve_entailment_graph(ScoreMatrix{{0, 1}, {0, 0}}, -1.0, SolverMode::kGreedy), Error);
}

TEST_CASE("paraphrase decisions") {
  CHECK(is_paraphrase(0.3, -0.3, 0.5) == false);
  CHECK(is_paraphrase(0.2, -0.2, 0.4) == true);
  const PhraseExemplars x{"x", {{1.0, 2.0}}};
  CHECK(is_paraphrase(x, x, 1e-9));
  std::mt19937_64 rng(5);
  for (int i = 0; i < 100; ++i) {
    const auto a = random_exemplars(rng, "a");
    const auto b = random_exemplars(rng, "b");
    CHECK(is_paraphrase(a, b, 0.05) == is_paraphrase(b, a, 0.05));
  }
  CHECK_THROWS_AS(is_paraphrase(0.0, 0.0, 0.0), Error);
}

TEST_CASE("relative similarity") {
  const PhraseExemplars x{"x", {at_angle(0.0), at_angle(0.2)}};
  // z = x scores 0; y covers x's masks but adds an unrelated one, so x
  // entails y with a positive score
  const PhraseExemplars positive{"p", {at_angle(0.1), at_angle(2.0)}};
  CHECK(relative_similarity(x, x, x).chose_y);
  const RelativeChoice c = relative_similarity(x, positive, x);
  CHECK(c.score_z == 0.0);
  CHECK(c.score_y == doctest::Approx(std::cos(0.1) - (std::cos(0.1) + std::cos(1.8)) / 2.0));
  CHECK(c.score_y > 0.0);
  CHECK(c.chose_y);

  // y matches x's masks better than z does
  const PhraseExemplars y{"y", {at_angle(0.05), at_angle(1.5)}};
  const PhraseExemplars z{"z", {at_angle(0.9)}};
  const RelativeChoice r = relative_similarity(x, y, z);
  const double sxy = (std::cos(0.05) + std::cos(0.15)) / 2.0;
  const double syx = (std::cos(0.05) + std::cos(1.3)) / 2.0;
  const double sxz = (std::cos(0.9) + std::cos(0.7)) / 2.0;
  const double szx = std::cos(0.7);
  CHECK(r.score_y == doctest::Approx(sxy - syx));
  CHECK(r.score_z == doctest::Approx(sxz - szx));
  CHECK(r.chose_y);
}

TEST_CASE("shape histogram") {
  CHECK(radial_shape_histogram(PixelMask(4, 4)) == std::vector<double>(kRadialBins, 0.0));
  PixelMask dot(5, 5);
  dot.at(2, 2) = 1;
  CHECK(radial_shape_histogram(dot) == std::vector<double>(kRadialBins, 1.0 / kRadialBins));
  PixelMask square(6, 6);
  for (int y = 1; y < 5; ++y)
    for (int x = 1; x < 5; ++x) square.at(x, y) = 1;
  const auto h = radial_shape_histogram(square);
  double total = 0.0;
  for (double v : h) total += v;
  CHECK(total == doctest::Approx(1.0));
  Image img = testing::gray(6, 6, 0.5);
  CHECK(mask_descriptor(img, square).size() == 24 + kRadialBins);
}

TEST_CASE("score matrix files") {
  const ScoreMatrix m = parse_score_matrix("2\n0 0.5\n-0.5 0\n");
  CHECK(m == ScoreMatrix{{0, 0.5}, {-0.5, 0}});
  auto kind = [](std::string_view text) {
    try {
      parse_score_matrix(text);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::kInvalidArgument;
  };
  CHECK(kind("") == ErrorKind::kMalformedHeader);
  CHECK(kind("2\n0 1\n") == ErrorKind::kTruncatedData);
  CHECK(kind("2\n0 1\n1\n") == ErrorKind::kRaggedRow);
  CHECK(kind("2\n0 x\n1 0\n") == ErrorKind::kNonNumeric);
}

}
