#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "segphrase/imaging.hpp"
#include "segphrase/phrase_table.hpp"

namespace segphrase {

constexpr int kRadialBins = 36;

// Foreground appearance histogram of the masked pixels followed by a
// 36-sector radial shape histogram about the mask centroid; each block is
// L1-normalized.
std::vector<double> mask_descriptor(const Image& img, const PixelMask& mask);
std::vector<double> radial_shape_histogram(const PixelMask& mask);

struct PhraseExemplars {
  std::string phrase;
  std::vector<std::vector<double>> descriptors;  // one per exemplar mask
};

PhraseExemplars exemplars_from_table(const SegmentPhraseTable& table, std::string_view phrase);

// Mean over a's masks of the best cosine match among b's masks.
double sim_r2i(const PhraseExemplars& a, const PhraseExemplars& b);

// sim_r2i(x, y) - sim_r2i(y, x); exactly antisymmetric.
double entail_score(const PhraseExemplars& x, const PhraseExemplars& y);

using ScoreMatrix = std::vector<std::vector<double>>;
using DecisionMatrix = std::vector<std::vector<std::uint8_t>>;

enum class SolverMode { kExact, kGreedy };

constexpr int kExactSolverMaxNodes = 6;

struct EntailmentSolution {
  DecisionMatrix decisions;
  double objective = 0.0;
  std::uint64_t nodes_explored = 0;
};

// sum_{x != y} scores[x][y] * W[x][y] - lambda * |W|, summed row-major.
double entailment_objective(const ScoreMatrix& scores, const DecisionMatrix& w, double lambda);

// True iff W_xy + W_yz - W_xz <= 1 for every ordered triple of distinct nodes.
bool is_transitive(const DecisionMatrix& w);

EntailmentSolution solve_entailment_graph(const ScoreMatrix& scores, double lambda, SolverMode mode);

ScoreMatrix entailment_scores(const std::vector<PhraseExemplars>& phrases);

bool is_paraphrase(double entail_xy, double entail_yx, double tau);
bool is_paraphrase(const PhraseExemplars& x, const PhraseExemplars& y, double tau);

struct RelativeChoice {
  bool chose_y = true;
  double score_y = 0.0;  // entail_score(x, y)
  double score_z = 0.0;  // entail_score(x, z)
};

RelativeChoice relative_similarity(const PhraseExemplars& x, const PhraseExemplars& y, const PhraseExemplars& z);

// "N" then N whitespace-separated rows.
ScoreMatrix parse_score_matrix(std::string_view text);
ScoreMatrix load_score_matrix(const std::filesystem::path& path);

}  // namespace segphrase
