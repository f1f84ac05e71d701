#include <doctest.h>

#include <random>
#include <sstream>

#include "segphrase/error.hpp"
#include "segphrase/mrf.hpp"
#include "test_support.hpp"

using namespace segphrase;

TEST_SUITE("mrf") {

TEST_CASE("energy examples") {
  CHECK(energy(MrfProblem({{2, 5}}, {}), {0}) == 2.0);
  CHECK(energy(MrfProblem({{0, 0}, {0, 0}}, {{0, 1, 3}}), {0, 1}) == 3.0);
  const MrfProblem path({{1, 0}, {5, 5}, {0, 1}}, {{0, 1, 2}, {1, 2, 2}});
  // u0(1) + u1(1) + u2(0) + w12 = 0 + 5 + 0 + 2
  CHECK(energy(path, {1, 1, 0}) == 7.0);
  CHECK(energy(path, {1, 1, 0}) == testing::oracle_energy(path.unary(), path.pairwise(), {1, 1, 0}));
}

TEST_CASE("construction validates") {
  CHECK_THROWS_AS(MrfProblem({{0, 0}, {0, 0}}, {{0, 1, -0.5}}), Error);
  try {
    MrfProblem({{0, 0}, {0, 0}}, {{0, 1, -0.5}});
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kSubmodularity);
  }
  CHECK_THROWS_AS(MrfProblem({{0, INFINITY}}, {}), Error);
  CHECK_THROWS_AS(MrfProblem({{0, 0}}, {{0, 3, 1}}), Error);
  CHECK_THROWS_AS(energy(MrfProblem({{0, 0}}, {}), {0, 1}), Error);
}

TEST_CASE("unaries dominate without edges") {
  CHECK(min_cut_infer(MrfProblem({{0, 10}, {0, 10}}, {})) == Labeling{0, 0});
  CHECK(min_cut_infer(MrfProblem({{1, 0}}, {})) == Labeling{1});
}

TEST_CASE("strong edge ties break to all background") {
  const MrfProblem p({{10, 0}, {0, 10}}, {{0, 1, 100}});
  const Labeling x = min_cut_infer(p);
  CHECK(x == Labeling{0, 0});
  CHECK(energy(p, x) == 10.0);
  CHECK(brute_force_infer(p) == Labeling{0, 0});
}

TEST_CASE("zero problem ties break to all background") {
  const MrfProblem p({{0, 0}, {0, 0}}, {{0, 1, 1}});
  CHECK(min_cut_infer(p) == Labeling{0, 0});
  CHECK(brute_force_infer(p) == Labeling{0, 0});
}

TEST_CASE("flow equals minimum energy minus the reparameterization constant") {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 50; ++t) {
    const auto rp = testing::random_problem(rng, 8);
    const MrfProblem p(rp.unary, rp.edges);
    const CutResult cut = min_cut(p);
    CHECK(cut.flow + reparameterization_constant(p) == doctest::Approx(energy(p, cut.labels)).epsilon(1e-12));
  }
}

TEST_CASE("min-cut matches exhaustive enumeration") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 200; ++t) {
    const int n = 1 + static_cast<int>(rng() % 14);
    const auto rp = testing::random_problem(rng, n, 0.5);
    const MrfProblem p(rp.unary, rp.edges);
    const double best = testing::oracle_min_energy(rp.unary, rp.edges);
    const Labeling cut = min_cut_infer(p);
    CHECK(std::abs(testing::oracle_energy(rp.unary, rp.edges, cut) - best) <= 1e-9);
    const Labeling brute = brute_force_infer(p);
    CHECK(std::abs(testing::oracle_energy(rp.unary, rp.edges, brute) - best) <= 1e-9);
  }
}

TEST_CASE("grid problems with integer costs tie-break identically") {
  // Integer data makes every minimizer exactly tied, so the maximal-source
  // rule must pick the labeling with the fewest foreground nodes among them.
  std::mt19937_64 rng(8);
  for (int t = 0; t < 30; ++t) {
    std::vector<std::array<double, 2>> unary;
    std::vector<PairwiseTerm> edges;
    for (int i = 0; i < 12; ++i) unary.push_back({double(rng() % 4), double(rng() % 4)});
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 4; ++c) {
        const int i = r * 4 + c;
        if (c + 1 < 4) edges.push_back({i, i + 1, double(rng() % 3)});
        if (r + 1 < 3) edges.push_back({i, i + 4, double(rng() % 3)});
      }
    const MrfProblem p(unary, edges);
    const Labeling cut = min_cut_infer(p);
    const double best = testing::oracle_min_energy(unary, edges);
    CHECK(energy(p, cut) == best);
    // Every other minimizer has a foreground set that is a superset of ours.
    std::vector<std::uint8_t> x(12);
    for (std::uint32_t bits = 0; bits < (1u << 12); ++bits) {
      for (int i = 0; i < 12; ++i) x[i] = (bits >> i) & 1;
      if (testing::oracle_energy(unary, edges, x) != best) continue;
      for (int i = 0; i < 12; ++i)
        if (cut[i]) CHECK(x[i] == 1);
    }
  }
}

TEST_CASE("brute force refuses large problems") {
  std::vector<std::array<double, 2>> unary(kBruteForceMaxNodes + 1, {0.0, 1.0});
  try {
    brute_force_infer(MrfProblem(unary, {}));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kProblemTooLarge);
  }
}

TEST_CASE("problem text round trip is exact") {
  std::mt19937_64 rng(1);
  const auto rp = testing::random_problem(rng, 6);
  const MrfProblem p(rp.unary, rp.edges);
  std::stringstream ss;
  write_problem(ss, p);
  CHECK(read_problem(ss) == p);
}

}
