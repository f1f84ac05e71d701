#include "segphrase/latent.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "segphrase/error.hpp"
#include "segphrase/parallel.hpp"

namespace segphrase {

TrainingInstance make_training_instance(SuperpixelGraph graph, const SuperpixelMap& sp,
                                        const Box& box, std::string image_id) {
  if (box.area() <= 0) fail(ErrorKind::kDegenerateBox, "bounding box has zero area");
  if (box.x0 < 0 || box.y0 < 0 || box.x1 > sp.width || box.y1 > sp.height) {
    fail(ErrorKind::kInvalidArgument, "bounding box exceeds image bounds");
  }
  if (graph.node_count() != sp.count) {
    fail(ErrorKind::kDimensionMismatch, "graph and superpixel map disagree on node count");
  }
  TrainingInstance inst;
  inst.graph = std::move(graph);
  inst.box = box;
  inst.sp_in_box = superpixel_box_fraction(sp, box);
  inst.image_id = std::move(image_id);
  return inst;
}

Labeling init_labels(const TrainingInstance& inst, double seed_shrink) {
  if (!(seed_shrink > 0.0 && seed_shrink <= 1.0)) {
    fail(ErrorKind::kInvalidArgument, "seed_shrink must lie in (0, 1]");
  }
  if (inst.box.area() <= 0) fail(ErrorKind::kDegenerateBox, "bounding box has zero area");
  const double cx = 0.5 * (inst.box.x0 + inst.box.x1);
  const double cy = 0.5 * (inst.box.y0 + inst.box.y1);
  const double hx = 0.5 * inst.box.width() * seed_shrink;
  const double hy = 0.5 * inst.box.height() * seed_shrink;

  const int n = inst.graph.node_count();
  Labeling x(n, 0);
  for (int i = 0; i < n; ++i) {
    if (inst.sp_in_box[i] <= 0.0) continue;
    const auto& c = inst.graph.centroids[i];
    const bool in_seed = std::abs(c[0] - cx) <= hx && std::abs(c[1] - cy) <= hy;
    x[i] = (in_seed || inst.sp_in_box[i] >= 0.5) ? 1 : 0;
  }
  return x;
}

std::vector<PairwiseTerm> boundary_pairwise(const SuperpixelGraph& graph, double lambda, double scale) {
  std::vector<PairwiseTerm> terms;
  terms.reserve(graph.edges.size());
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    terms.push_back({graph.edges[e].i, graph.edges[e].j,
                     scale * std::exp(-lambda * graph.boundary_prob[e])});
  }
  return terms;
}

MrfProblem build_segmentation_problem(const GaussianMixture& fg, const GaussianMixture& bg,
                                      const SuperpixelGraph& graph, double lambda,
                                      const std::vector<std::uint8_t>* outside, double outside_cost) {
  const int n = graph.node_count();
  std::vector<std::array<double, 2>> unary(n);
  for (int i = 0; i < n; ++i) {
    unary[i][0] = -log_density(bg, graph.features[i]);
    unary[i][1] = -log_density(fg, graph.features[i]);
    if (outside && (*outside)[i]) unary[i][1] += outside_cost;
  }
  return MrfProblem(std::move(unary), boundary_pairwise(graph, lambda));
}

namespace {

struct Pools {
  Samples fg;
  Samples bg;
};

Pools pool_features(const std::vector<TrainingInstance>& instances, const std::vector<Labeling>& labels) {
  Pools pools;
  for (std::size_t t = 0; t < instances.size(); ++t) {
    const auto& features = instances[t].graph.features;
    for (std::size_t i = 0; i < features.size(); ++i) {
      (labels[t][i] ? pools.fg : pools.bg).push_back(features[i]);
    }
  }
  return pools;
}

bool collapsed(const Pools& pools) { return pools.fg.empty() || pools.bg.empty(); }

struct AttemptResult {
  bool collapsed = false;
  EmTrace trace;
};

AttemptResult attempt(const std::vector<TrainingInstance>& instances, const LatentConfig& config,
                      double shrink) {
  const std::size_t m = instances.size();
  std::vector<std::vector<std::uint8_t>> outside(m);
  for (std::size_t t = 0; t < m; ++t) {
    outside[t].resize(instances[t].sp_in_box.size());
    for (std::size_t i = 0; i < outside[t].size(); ++i) {
      outside[t][i] = instances[t].sp_in_box[i] <= 0.0 ? 1 : 0;
    }
  }

  AttemptResult result;
  EmTrace& trace = result.trace;
  trace.seed_shrink = shrink;

  std::vector<Labeling> labels(m);
  for (std::size_t t = 0; t < m; ++t) labels[t] = init_labels(instances[t], shrink);
  Pools pools = pool_features(instances, labels);
  if (collapsed(pools)) {
    result.collapsed = true;
    return result;
  }

  GaussianMixture fg = fit(pools.fg, std::min<int>(config.k, static_cast<int>(pools.fg.size())),
                           config.seed, config.gmm);
  GaussianMixture bg = fit(pools.bg, std::min<int>(config.k, static_cast<int>(pools.bg.size())),
                           config.seed + 1, config.gmm);

  auto pooled_energy = [&](const std::vector<Labeling>& x) {
    std::vector<double> per(m);
    parallel_for(m, config.jobs, [&](std::size_t t) {
      per[t] = energy(build_segmentation_problem(fg, bg, instances[t].graph, config.lambda,
                                                 &outside[t], config.outside_cost),
                      x[t]);
    });
    double total = 0.0;
    for (double e : per) total += e;
    return total;
  };

  trace.rounds.push_back(labels);
  trace.energy.push_back(pooled_energy(labels));

  for (int iter = 0; iter < config.max_iters; ++iter) {
    std::vector<Labeling> next(m);
    parallel_for(m, config.jobs, [&](std::size_t t) {
      next[t] = min_cut_infer(build_segmentation_problem(fg, bg, instances[t].graph, config.lambda,
                                                         &outside[t], config.outside_cost));
    });
    ++trace.iterations;
    trace.rounds.push_back(next);
    if (next == labels) {
      trace.converged = true;
      trace.energy.push_back(trace.energy.back());
      break;
    }
    labels = std::move(next);
    pools = pool_features(instances, labels);
    if (collapsed(pools)) {
      result.collapsed = true;
      return result;
    }
    fg = refine(fg, pools.fg, config.gmm).mixture;
    bg = refine(bg, pools.bg, config.gmm).mixture;

    const double e = pooled_energy(labels);
    if (e > trace.energy.back() + 1e-6) {
      fail(ErrorKind::kNumerical, "pooled EM energy increased from " +
                                      std::to_string(trace.energy.back()) + " to " + std::to_string(e));
    }
    trace.energy.push_back(e);
  }

  trace.labelings = std::move(labels);
  trace.model.theta_fg = std::move(fg);
  trace.model.theta_bg = std::move(bg);
  trace.model.lambda = config.lambda;
  trace.model.instance_count = static_cast<int>(m);
  return result;
}

}  // namespace

EmTrace em_learn_traced(const std::vector<TrainingInstance>& instances, const LatentConfig& config) {
  if (instances.empty()) fail(ErrorKind::kEmptyInput, "em_learn needs at least one instance");
  if (config.k < 1 || config.max_iters < 0) fail(ErrorKind::kInvalidArgument, "bad EM configuration");
  const int dim = instances.front().graph.dimension();
  for (const auto& inst : instances) {
    if (inst.graph.dimension() != dim || inst.graph.node_count() == 0) {
      fail(ErrorKind::kDimensionMismatch, "training instances disagree on feature dimension");
    }
  }

  AttemptResult first = attempt(instances, config, config.seed_shrink);
  if (!first.collapsed) return std::move(first.trace);
  AttemptResult second = attempt(instances, config, 0.5 * config.seed_shrink);
  if (second.collapsed) {
    fail(ErrorKind::kCollapse,
         "latent EM collapsed to a single label (all foreground or all background) twice");
  }
  second.trace.restarted = true;
  return std::move(second.trace);
}

SegmentationModel em_learn(const std::vector<TrainingInstance>& instances, const LatentConfig& config) {
  return em_learn_traced(instances, config).model;
}

Labeling segment_with_model(const SegmentationModel& model, const SuperpixelGraph& graph) {
  if (graph.dimension() != model.theta_fg.dimension() ||
      graph.dimension() != model.theta_bg.dimension()) {
    fail(ErrorKind::kDimensionMismatch, "graph features do not match model dimension");
  }
  return min_cut_infer(build_segmentation_problem(model.theta_fg, model.theta_bg, graph, model.lambda));
}

double foreground_confidence(const SegmentationModel& model, const SuperpixelGraph& graph,
                             const Labeling& labels) {
  double sum = 0.0;
  int count = 0;
  for (int i = 0; i < graph.node_count(); ++i) {
    if (!labels[i]) continue;
    sum += log_density(model.theta_fg, graph.features[i]) - log_density(model.theta_bg, graph.features[i]);
    ++count;
  }
  return count ? sum / count : 0.0;
}

SuperpixelGraph induced_subgraph(const SuperpixelGraph& graph, const std::vector<int>& nodes) {
  std::vector<int> index(graph.node_count(), -1);
  for (std::size_t k = 0; k < nodes.size(); ++k) index[nodes[k]] = static_cast<int>(k);
  SuperpixelGraph sub;
  for (int v : nodes) {
    sub.features.push_back(graph.features[v]);
    sub.areas.push_back(graph.areas[v]);
    sub.centroids.push_back(graph.centroids[v]);
  }
  std::vector<std::pair<Edge, double>> edges;
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    const int a = index[graph.edges[e].i];
    const int b = index[graph.edges[e].j];
    if (a < 0 || b < 0) continue;
    edges.push_back({Edge{std::min(a, b), std::max(a, b)}, graph.boundary_prob[e]});
  }
  std::sort(edges.begin(), edges.end(), [](const auto& l, const auto& r) { return l.first < r.first; });
  for (const auto& [edge, p] : edges) {
    sub.edges.push_back(edge);
    sub.boundary_prob.push_back(p);
  }
  return sub;
}

}  // namespace segphrase
