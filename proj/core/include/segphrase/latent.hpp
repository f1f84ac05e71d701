#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "segphrase/gmm.hpp"
#include "segphrase/imaging.hpp"
#include "segphrase/mrf.hpp"

namespace segphrase {

struct TrainingInstance {
  SuperpixelGraph graph;
  Box box;
  std::vector<double> sp_in_box;  // fraction of each superpixel inside the box
  std::string image_id;
};

// Validates the box against the map and computes the in-box fractions.
TrainingInstance make_training_instance(SuperpixelGraph graph, const SuperpixelMap& sp,
                                        const Box& box, std::string image_id = {});

struct SegmentationModel {
  GaussianMixture theta_fg;
  GaussianMixture theta_bg;
  double lambda = 0.05;
  std::string phrase;
  int component_id = 0;
  int instance_count = 0;

  bool operator==(const SegmentationModel&) const = default;
};

struct LatentConfig {
  int k = 5;
  int max_iters = 10;
  std::uint64_t seed = 0;
  double lambda = 0.05;
  double seed_shrink = 0.6;
  // Additive foreground cost for superpixels entirely outside the box.
  double outside_cost = 1e6;
  int jobs = 1;
  GmmOptions gmm;
};

// Geometric Grabcut seed: superpixels fully outside the box are 0, those
// whose centroid lies in the box shrunk by `seed_shrink` about its centre
// are 1, the rest are 1 iff at least half their area is inside the box.
Labeling init_labels(const TrainingInstance& inst, double seed_shrink);

// Potts weights w_ij = scale * exp(-lambda * boundary_prob(i,j)).
std::vector<PairwiseTerm> boundary_pairwise(const SuperpixelGraph& graph, double lambda,
                                            double scale = 1.0);

// Unary costs are negative log densities under each mixture.
MrfProblem build_segmentation_problem(const GaussianMixture& fg, const GaussianMixture& bg,
                                      const SuperpixelGraph& graph, double lambda,
                                      const std::vector<std::uint8_t>* outside = nullptr,
                                      double outside_cost = 0.0);

struct EmTrace {
  SegmentationModel model;
  std::vector<Labeling> labelings;            // final, per instance
  std::vector<std::vector<Labeling>> rounds;  // labelings after init and each E-step
  std::vector<double> energy;                 // pooled energy after init and each round
  int iterations = 0;                         // E-steps executed
  bool converged = false;                     // stopped because labels were stable
  bool restarted = false;                     // collapse fallback was used
  double seed_shrink = 0.0;                   // shrink actually used
};

EmTrace em_learn_traced(const std::vector<TrainingInstance>& instances, const LatentConfig& config);
SegmentationModel em_learn(const std::vector<TrainingInstance>& instances, const LatentConfig& config);

// One unclamped E-step on a fresh graph.
Labeling segment_with_model(const SegmentationModel& model, const SuperpixelGraph& graph);

// Mean foreground log-likelihood ratio log p_fg - log p_bg over the
// superpixels labeled 1; 0 when none are.
double foreground_confidence(const SegmentationModel& model, const SuperpixelGraph& graph,
                             const Labeling& labels);

// Graph induced by the given node subset, in the given order.
SuperpixelGraph induced_subgraph(const SuperpixelGraph& graph, const std::vector<int>& nodes);

}  // namespace segphrase
