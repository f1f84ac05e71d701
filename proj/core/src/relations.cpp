#include "segphrase/relations.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iterator>
#include <numbers>
#include <numeric>
#include <sstream>

#include "segphrase/error.hpp"
#include "segphrase/linguistics.hpp"

namespace segphrase {

std::vector<double> radial_shape_histogram(const PixelMask& mask) {
  std::vector<double> hist(kRadialBins, 0.0);
  double cx = 0.0, cy = 0.0;
  std::size_t count = 0;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.at(x, y)) continue;
      cx += x + 0.5;
      cy += y + 0.5;
      ++count;
    }
  }
  if (count == 0) return hist;
  cx /= static_cast<double>(count);
  cy /= static_cast<double>(count);
  double total = 0.0;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.at(x, y)) continue;
      const double dx = x + 0.5 - cx;
      const double dy = y + 0.5 - cy;
      const double r = std::hypot(dx, dy);
      if (r == 0.0) continue;
      const double turn = (std::atan2(dy, dx) + std::numbers::pi) / (2.0 * std::numbers::pi);
      const int bin = std::clamp(static_cast<int>(std::floor(turn * kRadialBins)), 0, kRadialBins - 1);
      hist[bin] += r;
      total += r;
    }
  }
  if (total == 0.0) {
    std::fill(hist.begin(), hist.end(), 1.0 / kRadialBins);
  } else {
    for (double& h : hist) h /= total;
  }
  return hist;
}

std::vector<double> mask_descriptor(const Image& img, const PixelMask& mask) {
  std::vector<double> desc = appearance_histogram(img, mask);
  const std::vector<double> shape = radial_shape_histogram(mask);
  desc.insert(desc.end(), shape.begin(), shape.end());
  return desc;
}

PhraseExemplars exemplars_from_table(const SegmentPhraseTable& table, std::string_view phrase) {
  const auto& records = table.exemplars(phrase);
  if (records.empty()) {
    fail(ErrorKind::kUnknownPhrase, "no exemplars stored for '" + normalize_phrase(phrase) + "'");
  }
  PhraseExemplars out;
  out.phrase = normalize_phrase(phrase);
  for (const auto& r : records) out.descriptors.push_back(r.descriptor);
  return out;
}

double sim_r2i(const PhraseExemplars& a, const PhraseExemplars& b) {
  if (a.descriptors.empty() || b.descriptors.empty()) {
    fail(ErrorKind::kEmptyInput, "region-to-image similarity needs non-empty exemplar sets");
  }
  double total = 0.0;
  for (const auto& r : a.descriptors) {
    double best = -1.0;
    for (const auto& s : b.descriptors) best = std::max(best, cosine(r, s));
    total += best;
  }
  return total / static_cast<double>(a.descriptors.size());
}

double entail_score(const PhraseExemplars& x, const PhraseExemplars& y) {
  return sim_r2i(x, y) - sim_r2i(y, x);
}

ScoreMatrix entailment_scores(const std::vector<PhraseExemplars>& phrases) {
  const std::size_t n = phrases.size();
  std::vector<std::vector<double>> sim(n, std::vector<double>(n, 0.0));
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      if (a != b) sim[a][b] = sim_r2i(phrases[a], phrases[b]);
  ScoreMatrix scores(n, std::vector<double>(n, 0.0));
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      if (a != b) scores[a][b] = sim[a][b] - sim[b][a];
  return scores;
}

double entailment_objective(const ScoreMatrix& scores, const DecisionMatrix& w, double lambda) {
  double obj = 0.0;
  for (std::size_t x = 0; x < scores.size(); ++x)
    for (std::size_t y = 0; y < scores.size(); ++y)
      if (x != y && w[x][y]) obj += scores[x][y] - lambda;
  return obj;
}

bool is_transitive(const DecisionMatrix& w) {
  const std::size_t n = w.size();
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = 0; y < n; ++y) {
      if (x == y || !w[x][y]) continue;
      for (std::size_t z = 0; z < n; ++z) {
        if (z == x || z == y) continue;
        if (w[y][z] && !w[x][z]) return false;
      }
    }
  return true;
}

namespace {

void validate_scores(const ScoreMatrix& scores, double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) fail(ErrorKind::kInvalidArgument, "sparsity weight must be >= 0");
  for (const auto& row : scores) {
    if (row.size() != scores.size()) fail(ErrorKind::kDimensionMismatch, "score matrix must be square");
    for (double v : row)
      if (!std::isfinite(v)) fail(ErrorKind::kNumerical, "score matrix entries must be finite");
  }
}

bool ties(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); }

bool lexicographically_less(const DecisionMatrix& a, const DecisionMatrix& b) {
  for (std::size_t x = 0; x < a.size(); ++x)
    for (std::size_t y = 0; y < a.size(); ++y)
      if (a[x][y] != b[x][y]) return a[x][y] < b[x][y];
  return false;
}

class BranchAndBound {
 public:
  BranchAndBound(const ScoreMatrix& scores, double lambda)
      : scores_(scores), lambda_(lambda), n_(static_cast<int>(scores.size())),
        value_(n_, std::vector<int>(n_, -1)) {
    for (int x = 0; x < n_; ++x)
      for (int y = 0; y < n_; ++y)
        if (x != y) order_.push_back({x, y});
    std::stable_sort(order_.begin(), order_.end(), [&](const auto& a, const auto& b) {
      return std::abs(scores_[a.first][a.second]) > std::abs(scores_[b.first][b.second]);
    });
    remaining_positive_.assign(order_.size() + 1, 0.0);
    for (std::size_t d = order_.size(); d-- > 0;) {
      remaining_positive_[d] = remaining_positive_[d + 1] + std::max(0.0, gain(order_[d]));
    }
    best_.decisions.assign(n_, std::vector<std::uint8_t>(n_, 0));
    best_.objective = 0.0;
  }

  EntailmentSolution run() {
    search(0, 0.0);
    best_.nodes_explored = explored_;
    return best_;
  }

 private:
  double gain(const std::pair<int, int>& v) const { return scores_[v.first][v.second] - lambda_; }

  // Checks every triple constraint in which (x,y) takes part and whose other
  // two variables are already fixed.
  bool consistent(int x, int y, int val) const {
    for (int z = 0; z < n_; ++z) {
      if (z == x || z == y) continue;
      // (x,y),(y,z) -> (x,z)
      if (val == 1 && value_[y][z] == 1 && value_[x][z] == 0) return false;
      // (z,x),(x,y) -> (z,y)
      if (val == 1 && value_[z][x] == 1 && value_[z][y] == 0) return false;
      // (x,z),(z,y) -> (x,y)
      if (val == 0 && value_[x][z] == 1 && value_[z][y] == 1) return false;
    }
    return true;
  }

  void search(std::size_t depth, double current) {
    ++explored_;
    const double bound = current + remaining_positive_[depth];
    if (bound < best_.objective && !ties(bound, best_.objective)) return;
    if (depth == order_.size()) {
      DecisionMatrix w(n_, std::vector<std::uint8_t>(n_, 0));
      for (int x = 0; x < n_; ++x)
        for (int y = 0; y < n_; ++y) w[x][y] = value_[x][y] == 1 ? 1 : 0;
      const double obj = entailment_objective(scores_, w, lambda_);
      if ((obj > best_.objective && !ties(obj, best_.objective)) ||
          (ties(obj, best_.objective) && lexicographically_less(w, best_.decisions))) {
        best_.objective = obj;
        best_.decisions = std::move(w);
      }
      return;
    }
    const auto [x, y] = order_[depth];
    const double g = gain(order_[depth]);
    const int first = g > 0.0 ? 1 : 0;
    for (int val : {first, 1 - first}) {
      if (!consistent(x, y, val)) continue;
      value_[x][y] = val;
      search(depth + 1, current + (val ? g : 0.0));
      value_[x][y] = -1;
    }
  }

  const ScoreMatrix& scores_;
  double lambda_;
  int n_;
  std::vector<std::vector<int>> value_;
  std::vector<std::pair<int, int>> order_;
  std::vector<double> remaining_positive_;
  EntailmentSolution best_;
  std::uint64_t explored_ = 0;
};

// Transitive closure over distinct nodes (self loops are dropped).
DecisionMatrix closure_with(const DecisionMatrix& w, int x, int y) {
  const std::size_t n = w.size();
  DecisionMatrix c = w;
  c[x][y] = 1;
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      if (c[i][k])
        for (std::size_t j = 0; j < n; ++j)
          if (c[k][j]) c[i][j] = 1;
  for (std::size_t i = 0; i < n; ++i) c[i][i] = 0;
  return c;
}

EntailmentSolution solve_greedy(const ScoreMatrix& scores, double lambda) {
  const int n = static_cast<int>(scores.size());
  std::vector<std::pair<int, int>> order;
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y)
      if (x != y) order.push_back({x, y});
  std::stable_sort(order.begin(), order.end(), [&](const auto& a, const auto& b) {
    return scores[a.first][a.second] > scores[b.first][b.second];
  });
  EntailmentSolution sol;
  sol.decisions.assign(n, std::vector<std::uint8_t>(n, 0));
  for (const auto& [x, y] : order) {
    ++sol.nodes_explored;
    if (sol.decisions[x][y] || scores[x][y] - lambda <= 0.0) continue;
    DecisionMatrix candidate = closure_with(sol.decisions, x, y);
    double delta = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (candidate[i][j] && !sol.decisions[i][j]) delta += scores[i][j] - lambda;
    if (delta >= 0.0) sol.decisions = std::move(candidate);
  }
  sol.objective = entailment_objective(scores, sol.decisions, lambda);
  return sol;
}

}  // namespace

EntailmentSolution solve_entailment_graph(const ScoreMatrix& scores, double lambda, SolverMode mode) {
  validate_scores(scores, lambda);
  if (mode == SolverMode::kGreedy) return solve_greedy(scores, lambda);
  if (static_cast<int>(scores.size()) > kExactSolverMaxNodes) {
    fail(ErrorKind::kProblemTooLarge, "exact entailment solver supports at most " +
                                          std::to_string(kExactSolverMaxNodes) + " phrases");
  }
  return BranchAndBound(scores, lambda).run();
}

bool is_paraphrase(double entail_xy, double entail_yx, double tau) {
  if (!(tau > 0.0)) fail(ErrorKind::kInvalidArgument, "paraphrase threshold must be positive");
  return std::abs(entail_xy - entail_yx) <= tau;
}

bool is_paraphrase(const PhraseExemplars& x, const PhraseExemplars& y, double tau) {
  return is_paraphrase(entail_score(x, y), entail_score(y, x), tau);
}

RelativeChoice relative_similarity(const PhraseExemplars& x, const PhraseExemplars& y, const PhraseExemplars& z) {
  RelativeChoice c;
  c.score_y = entail_score(x, y);
  c.score_z = entail_score(x, z);
  c.chose_y = !(c.score_z > c.score_y);
  return c;
}

ScoreMatrix parse_score_matrix(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    return false;
  };
  auto numbers = [&](const std::string& l) {
    std::istringstream ss(l);
    std::vector<double> out;
    std::string tok;
    while (ss >> tok) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        fail(ErrorKind::kNonNumeric, "non-numeric score '" + tok + "'");
      }
      out.push_back(v);
    }
    return out;
  };
  if (!next_line()) fail(ErrorKind::kMalformedHeader, "score matrix file is empty");
  const auto header = numbers(line);
  if (header.size() != 1 || header[0] < 0 || header[0] != std::floor(header[0])) {
    fail(ErrorKind::kMalformedHeader, "score matrix must start with N");
  }
  const auto n = static_cast<std::size_t>(header[0]);
  ScoreMatrix scores;
  for (std::size_t r = 0; r < n; ++r) {
    if (!next_line()) fail(ErrorKind::kTruncatedData, "score matrix has fewer than N rows");
    auto row = numbers(line);
    if (row.size() != n) fail(ErrorKind::kRaggedRow, "score matrix row " + std::to_string(r + 1) + " has wrong length");
    scores.push_back(std::move(row));
  }
  if (next_line()) fail(ErrorKind::kRaggedRow, "score matrix has more than N rows");
  return scores;
}

ScoreMatrix load_score_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path.string());
  return parse_score_matrix(std::string{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()});
}

}  // namespace segphrase
