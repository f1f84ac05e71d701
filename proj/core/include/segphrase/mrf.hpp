#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

namespace segphrase {

// Binary labels: 0 = background, 1 = foreground.
using Labeling = std::vector<std::uint8_t>;

struct PairwiseTerm {
  int i = 0;
  int j = 0;
  double weight = 0.0;  // paid when labels differ
  bool operator==(const PairwiseTerm&) const = default;
};

// Binary MRF with Potts pairwise terms:
//   E(x) = sum_i unary[i][x_i] + sum_(i,j) w_ij [x_i != x_j].
// Construction validates submodularity (w_ij >= 0) and finiteness; the
// problem is immutable afterwards.
class MrfProblem {
 public:
  MrfProblem(std::vector<std::array<double, 2>> unary, std::vector<PairwiseTerm> pairwise);

  int node_count() const { return static_cast<int>(unary_.size()); }
  const std::vector<std::array<double, 2>>& unary() const { return unary_; }
  const std::vector<PairwiseTerm>& pairwise() const { return pairwise_; }

  bool operator==(const MrfProblem&) const = default;

 private:
  std::vector<std::array<double, 2>> unary_;
  std::vector<PairwiseTerm> pairwise_;
};

double energy(const MrfProblem& problem, const Labeling& x);

// Sum over nodes of min(unary[i][0], unary[i][1]); the constant removed by
// the s/t reparameterization.
double reparameterization_constant(const MrfProblem& problem);

struct CutResult {
  Labeling labels;
  double flow = 0.0;
};

// Exact MAP labeling by max-flow/min-cut. Among minimizers the source
// (label 0) side is maximal.
CutResult min_cut(const MrfProblem& problem);
Labeling min_cut_infer(const MrfProblem& problem);

constexpr int kBruteForceMaxNodes = 24;

// Exhaustive minimizer, lexicographically smallest on ties.
Labeling brute_force_infer(const MrfProblem& problem);

// Line-oriented dump: n, then n lines "u0 u1", then "i j w" per edge.
void write_problem(std::ostream& out, const MrfProblem& problem);
MrfProblem read_problem(std::istream& in);

}  // namespace segphrase
