#include "segphrase/mrf.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "segphrase/error.hpp"

namespace segphrase {

MrfProblem::MrfProblem(std::vector<std::array<double, 2>> unary, std::vector<PairwiseTerm> pairwise)
    : unary_(std::move(unary)), pairwise_(std::move(pairwise)) {
  for (const auto& u : unary_) {
    if (!std::isfinite(u[0]) || !std::isfinite(u[1])) {
      fail(ErrorKind::kNumerical, "unary costs must be finite");
    }
  }
  const int n = node_count();
  for (const auto& t : pairwise_) {
    if (t.i < 0 || t.i >= n || t.j < 0 || t.j >= n || t.i == t.j) {
      fail(ErrorKind::kInvalidArgument, "pairwise term references invalid nodes");
    }
    if (!std::isfinite(t.weight)) fail(ErrorKind::kNumerical, "pairwise weight must be finite");
    if (t.weight < 0.0) {
      fail(ErrorKind::kSubmodularity, "negative pairwise weight breaks submodularity");
    }
  }
}

double energy(const MrfProblem& problem, const Labeling& x) {
  if (static_cast<int>(x.size()) != problem.node_count()) {
    fail(ErrorKind::kDimensionMismatch, "labeling length does not match node count");
  }
  double e = 0.0;
  const auto& unary = problem.unary();
  for (std::size_t i = 0; i < unary.size(); ++i) e += unary[i][x[i] ? 1 : 0];
  for (const auto& t : problem.pairwise()) {
    if ((x[t.i] != 0) != (x[t.j] != 0)) e += t.weight;
  }
  return e;
}

double reparameterization_constant(const MrfProblem& problem) {
  double c = 0.0;
  for (const auto& u : problem.unary()) c += std::min(u[0], u[1]);
  return c;
}

namespace {

// Dinic's algorithm: BFS level graph, then blocking flows along shortest
// augmenting paths. Every augmentation drives its bottleneck residual to
// exactly zero, so it terminates with floating-point capacities.
class FlowNetwork {
 public:
  explicit FlowNetwork(int nodes) : head_(nodes, -1), level_(nodes), cursor_(nodes) {}

  void add_edge(int from, int to, double cap, double reverse_cap) {
    arcs_.push_back({to, head_[from], cap});
    head_[from] = static_cast<int>(arcs_.size()) - 1;
    arcs_.push_back({from, head_[to], reverse_cap});
    head_[to] = static_cast<int>(arcs_.size()) - 1;
  }

  double max_flow(int s, int t) {
    double total = 0.0;
    while (build_levels(s, t)) {
      std::copy(head_.begin(), head_.end(), cursor_.begin());
      while (true) {
        const double pushed = augment(s, t, std::numeric_limits<double>::infinity());
        if (pushed <= 0.0) break;
        total += pushed;
      }
    }
    return total;
  }

  // Nodes that can still reach t through positive residual arcs.
  std::vector<bool> reaches_sink(int t) const {
    std::vector<bool> seen(head_.size(), false);
    std::vector<int> stack{t};
    seen[t] = true;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (int a = head_[v]; a >= 0; a = arcs_[a].next) {
        // arcs_[a ^ 1] is the arc u -> v for u = arcs_[a].to
        const int u = arcs_[a].to;
        if (!seen[u] && arcs_[a ^ 1].residual > 0.0) {
          seen[u] = true;
          stack.push_back(u);
        }
      }
    }
    return seen;
  }

 private:
  struct Arc {
    int to;
    int next;
    double residual;
  };

  bool build_levels(int s, int t) {
    std::fill(level_.begin(), level_.end(), -1);
    std::vector<int> queue{s};
    level_[s] = 0;
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
      const int v = queue[qi];
      for (int a = head_[v]; a >= 0; a = arcs_[a].next) {
        if (arcs_[a].residual > 0.0 && level_[arcs_[a].to] < 0) {
          level_[arcs_[a].to] = level_[v] + 1;
          queue.push_back(arcs_[a].to);
        }
      }
    }
    return level_[t] >= 0;
  }

  double augment(int v, int t, double limit) {
    if (v == t) return limit;
    for (int& a = cursor_[v]; a >= 0; a = arcs_[a].next) {
      Arc& arc = arcs_[a];
      if (arc.residual <= 0.0 || level_[arc.to] != level_[v] + 1) continue;
      const double pushed = augment(arc.to, t, std::min(limit, arc.residual));
      if (pushed > 0.0) {
        arc.residual -= pushed;
        arcs_[a ^ 1].residual += pushed;
        return pushed;
      }
    }
    return 0.0;
  }

  std::vector<int> head_;
  std::vector<Arc> arcs_;
  std::vector<int> level_;
  std::vector<int> cursor_;
};

}  // namespace

CutResult min_cut(const MrfProblem& problem) {
  const int n = problem.node_count();
  const int source = n;
  const int sink = n + 1;
  FlowNetwork net(n + 2);
  // Source side = label 0, sink side = label 1. Cutting s->i puts i on the
  // sink side and costs u1 - u0; cutting i->t costs u0 - u1.
  const auto& unary = problem.unary();
  for (int i = 0; i < n; ++i) {
    const double diff = unary[i][1] - unary[i][0];
    if (diff > 0.0) net.add_edge(source, i, diff, 0.0);
    if (diff < 0.0) net.add_edge(i, sink, -diff, 0.0);
  }
  for (const auto& t : problem.pairwise()) {
    if (t.weight > 0.0) net.add_edge(t.i, t.j, t.weight, t.weight);
  }

  CutResult result;
  result.flow = net.max_flow(source, sink);
  const std::vector<bool> to_sink = net.reaches_sink(sink);
  result.labels.resize(n);
  for (int i = 0; i < n; ++i) result.labels[i] = to_sink[i] ? 1 : 0;
  return result;
}

Labeling min_cut_infer(const MrfProblem& problem) { return min_cut(problem).labels; }

Labeling brute_force_infer(const MrfProblem& problem) {
  const int n = problem.node_count();
  if (n > kBruteForceMaxNodes) {
    fail(ErrorKind::kProblemTooLarge,
         "brute force limited to " + std::to_string(kBruteForceMaxNodes) + " nodes");
  }
  Labeling x(n, 0);
  Labeling best = x;
  double best_energy = std::numeric_limits<double>::infinity();
  const std::uint64_t total = std::uint64_t{1} << n;
  // Code bit (n-1-i) holds x_i, so increasing codes visit labelings in
  // lexicographic order and the first strict minimum wins ties.
  for (std::uint64_t code = 0; code < total; ++code) {
    for (int i = 0; i < n; ++i) x[i] = static_cast<std::uint8_t>((code >> (n - 1 - i)) & 1U);
    const double e = energy(problem, x);
    if (e < best_energy) {
      best_energy = e;
      best = x;
    }
  }
  return best;
}

void write_problem(std::ostream& out, const MrfProblem& problem) {
  const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
  out << problem.node_count() << '\n';
  for (const auto& u : problem.unary()) out << u[0] << ' ' << u[1] << '\n';
  for (const auto& t : problem.pairwise()) out << t.i << ' ' << t.j << ' ' << t.weight << '\n';
  out.precision(old_precision);
}

MrfProblem read_problem(std::istream& in) {
  std::string line;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    return false;
  };
  if (!next_line()) fail(ErrorKind::kTruncation, "empty MRF dump");
  int n = -1;
  {
    std::istringstream ss(line);
    if (!(ss >> n) || n < 0) fail(ErrorKind::kMalformedHeader, "bad node count in MRF dump");
  }
  std::vector<std::array<double, 2>> unary(n);
  for (int i = 0; i < n; ++i) {
    if (!next_line()) fail(ErrorKind::kTruncation, "MRF dump ends inside unary block");
    std::istringstream ss(line);
    if (!(ss >> unary[i][0] >> unary[i][1])) fail(ErrorKind::kNonNumeric, "bad unary line: " + line);
  }
  std::vector<PairwiseTerm> pairwise;
  while (next_line()) {
    std::istringstream ss(line);
    PairwiseTerm t;
    if (!(ss >> t.i >> t.j >> t.weight)) fail(ErrorKind::kNonNumeric, "bad edge line: " + line);
    pairwise.push_back(t);
  }
  return MrfProblem(std::move(unary), std::move(pairwise));
}

}  // namespace segphrase
