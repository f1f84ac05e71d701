#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "segphrase/imaging.hpp"
#include "segphrase/mrf.hpp"
#include "segphrase/phrase_table.hpp"

namespace segphrase {

class EmbeddingTable {
 public:
  explicit EmbeddingTable(int dim = 300) : dim_(dim) {}

  int dim() const { return dim_; }
  std::size_t size() const { return vectors_.size(); }
  // Throws kDuplicateWord / kRaggedRow.
  void add(std::string_view word, std::vector<double> vec);
  const std::vector<double>* find(std::string_view word) const;

 private:
  int dim_;
  std::unordered_map<std::string, std::vector<double>> vectors_;
};

// word2vec text layout: "vocab_size dim" then "word v1 ... vD" per line.
EmbeddingTable load_embeddings(const std::filesystem::path& path);
EmbeddingTable parse_embeddings(std::string_view text);

struct PhraseVector {
  std::vector<double> values;
  int missing_words = 0;
};

// Element-wise sum of in-vocabulary word vectors.
PhraseVector phrase_vector(const EmbeddingTable& table, std::string_view phrase);

double cosine(const std::vector<double>& a, const std::vector<double>& b);
double psi(const EmbeddingTable& table, std::string_view p, std::string_view q);

struct WeightedMask {
  std::string phrase;
  PixelMask mask;
  double score = 0.0;
};

// Pairwise phrase similarities with negative values clamped to zero and an
// exact 1 on the diagonal.
std::vector<std::vector<double>> similarity_matrix(const std::vector<WeightedMask>& masks,
                                                   const EmbeddingTable& table);

// One simultaneous rescoring: S'_p = sum_q S_q * psi(p, q), self included.
std::vector<WeightedMask> message_pass(const std::vector<WeightedMask>& masks, const EmbeddingTable& table);
std::vector<WeightedMask> message_pass(const std::vector<WeightedMask>& masks,
                                       const std::vector<std::vector<double>>& similarity);

struct FuseOptions {
  double lambda = 0.05;
  // Multiplies every Potts weight; 0 lets the fused unaries decide alone.
  double pairwise_scale = 1.0;
};

// Sum-pooled, min-max normalized per-superpixel weights.
std::vector<double> fused_weights(const std::vector<WeightedMask>& masks, const SuperpixelMap& sp);

Labeling fuse_and_cut(const std::vector<WeightedMask>& masks, const SuperpixelGraph& graph,
                      const SuperpixelMap& sp, const FuseOptions& options = {});

struct Detection {
  std::string phrase;
  Box box;
  double score = 0.0;
};

// Lines: "quoted phrase" x0 y0 x1 y1 score
std::vector<Detection> load_detections(const std::filesystem::path& path);
std::vector<Detection> parse_detections(std::string_view text);

// Greedy per-phrase non-maxima suppression; survivors keep input order.
std::vector<Detection> non_max_suppression(const std::vector<Detection>& detections, double iou_threshold,
                                           double score_threshold);

struct SemanticConfig {
  int superpixel_target = 200;
  double nms_iou = 0.5;
  double detection_threshold = 0.0;
  FuseOptions fuse;
  bool message_passing = true;
  SuperpixelOptions superpixels;
};

struct MaskReport {
  std::string phrase;
  int component_id = 0;
  Box box;
  double pre_score = 0.0;
  double post_score = 0.0;
  std::size_t mask_pixels = 0;
};

struct SemanticResult {
  bool empty = true;  // no detection survived the threshold
  PixelMask mask;
  std::vector<MaskReport> report;
};

struct BoxSegmentation {
  PixelMask mask;
  int component_id = 0;
};
// Segments the image with each stored component of the detection's phrase,
// keeps the component with the lowest mean unary cost over the superpixels
// touching the box, and clips its mask to the box.
BoxSegmentation segment_detection(const Detection& det, const SegmentPhraseTable& table,
                                  const SuperpixelGraph& graph, const SuperpixelMap& sp);

SemanticResult semantic_segment(const Image& image, const std::vector<Detection>& detections,
                                 const SegmentPhraseTable& table, const EmbeddingTable& embeddings,
                                 const SemanticConfig& config = {});

}  // namespace segphrase
