#include "segphrase/linguistics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "segphrase/error.hpp"
#include "segphrase/latent.hpp"

namespace segphrase {

namespace {

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
    const std::size_t start = pos;
    while (pos < line.size() && !std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
    if (pos > start) tokens.push_back(line.substr(start, pos - start));
  }
  return tokens;
}

bool parse_double(std::string_view token, double& out) {
  const char* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (end == text.size()) break;
    start = end + 1;
  }
  return lines;
}

}  // namespace

void EmbeddingTable::add(std::string_view word, std::vector<double> vec) {
  if (static_cast<int>(vec.size()) != dim_) {
    fail(ErrorKind::kRaggedRow, "vector for '" + std::string(word) + "' has dimension " +
                                    std::to_string(vec.size()) + ", expected " + std::to_string(dim_));
  }
  std::string key = normalize_phrase(word);
  if (key.empty() || key.find(' ') != std::string::npos) {
    fail(ErrorKind::kInvalidArgument, "embedding keys must be single words");
  }
  auto [it, inserted] = vectors_.try_emplace(key, std::move(vec));
  if (!inserted) fail(ErrorKind::kDuplicateWord, "duplicate embedding word '" + key + "'");
}

const std::vector<double>* EmbeddingTable::find(std::string_view word) const {
  auto it = vectors_.find(normalize_phrase(word));
  return it == vectors_.end() ? nullptr : &it->second;
}

EmbeddingTable parse_embeddings(std::string_view text) {
  const auto lines = lines_of(text);
  std::size_t li = 0;
  while (li < lines.size() && split_ws(lines[li]).empty()) ++li;
  if (li == lines.size()) fail(ErrorKind::kMalformedHeader, "embedding file is empty");
  const auto header = split_ws(lines[li++]);
  double vocab_d = 0.0, dim_d = 0.0;
  if (header.size() != 2 || !parse_double(header[0], vocab_d) || !parse_double(header[1], dim_d) ||
      vocab_d < 0 || dim_d < 1 || vocab_d != std::floor(vocab_d) || dim_d != std::floor(dim_d)) {
    fail(ErrorKind::kMalformedHeader, "embedding header must be 'vocab_size dim'");
  }
  const auto vocab = static_cast<std::size_t>(vocab_d);
  const int dim = static_cast<int>(dim_d);

  EmbeddingTable table(dim);
  std::size_t rows = 0;
  for (; li < lines.size(); ++li) {
    const auto tokens = split_ws(lines[li]);
    if (tokens.empty()) continue;
    std::vector<double> vec;
    vec.reserve(tokens.size() - 1);
    for (std::size_t t = 1; t < tokens.size(); ++t) {
      double v = 0.0;
      if (!parse_double(tokens[t], v)) {
        fail(ErrorKind::kNonNumeric, "non-numeric value '" + std::string(tokens[t]) + "' on line " +
                                         std::to_string(li + 1));
      }
      vec.push_back(v);
    }
    if (static_cast<int>(vec.size()) != dim) {
      fail(ErrorKind::kRaggedRow, "line " + std::to_string(li + 1) + " has " + std::to_string(vec.size()) +
                                      " values, expected " + std::to_string(dim));
    }
    table.add(tokens[0], std::move(vec));
    ++rows;
  }
  if (rows != vocab) {
    fail(ErrorKind::kMalformedHeader, "header declares " + std::to_string(vocab) + " words, file has " +
                                          std::to_string(rows));
  }
  return table;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path) { return parse_embeddings(read_text(path)); }

PhraseVector phrase_vector(const EmbeddingTable& table, std::string_view phrase) {
  const std::string norm = normalize_phrase(phrase);
  if (norm.empty()) fail(ErrorKind::kInvalidArgument, "phrase must not be empty");
  PhraseVector out;
  out.values.assign(table.dim(), 0.0);
  int found = 0;
  for (std::string_view word : split_ws(norm)) {
    const auto* vec = table.find(word);
    if (!vec) {
      ++out.missing_words;
      continue;
    }
    ++found;
    for (int d = 0; d < table.dim(); ++d) out.values[d] += (*vec)[d];
  }
  if (found == 0) fail(ErrorKind::kOutOfVocabulary, "no word of '" + norm + "' is in the vocabulary");
  return out;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) fail(ErrorKind::kDimensionMismatch, "cosine of vectors with different sizes");
  // Scaling by the largest magnitude keeps the squared norms representable.
  double sa = 0.0, sb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sa = std::max(sa, std::abs(a[i]));
    sb = std::max(sb, std::abs(b[i]));
  }
  if (sa == 0.0 || sb == 0.0) fail(ErrorKind::kUndefinedCosine, "cosine undefined for a zero vector");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a[i] / sa;
    const double y = b[i] / sb;
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

double psi(const EmbeddingTable& table, std::string_view p, std::string_view q) {
  return cosine(phrase_vector(table, p).values, phrase_vector(table, q).values);
}

std::vector<std::vector<double>> similarity_matrix(const std::vector<WeightedMask>& masks,
                                                   const EmbeddingTable& table) {
  const std::size_t n = masks.size();
  std::vector<std::vector<double>> vectors;
  vectors.reserve(n);
  for (const auto& m : masks) vectors.push_back(phrase_vector(table, m.phrase).values);
  std::vector<std::vector<double>> sim(n, std::vector<double>(n, 0.0));
  for (std::size_t p = 0; p < n; ++p) {
    sim[p][p] = 1.0;
    for (std::size_t q = p + 1; q < n; ++q) {
      sim[p][q] = sim[q][p] = std::max(0.0, cosine(vectors[p], vectors[q]));
    }
  }
  return sim;
}

std::vector<WeightedMask> message_pass(const std::vector<WeightedMask>& masks,
                                       const std::vector<std::vector<double>>& similarity) {
  if (masks.empty()) fail(ErrorKind::kEmptyInput, "message passing needs at least one mask");
  const std::size_t n = masks.size();
  if (similarity.size() != n) fail(ErrorKind::kDimensionMismatch, "similarity matrix size mismatch");
  std::vector<WeightedMask> out = masks;
  for (std::size_t p = 0; p < n; ++p) {
    if (similarity[p].size() != n) fail(ErrorKind::kDimensionMismatch, "similarity matrix is not square");
    double s = 0.0;
    for (std::size_t q = 0; q < n; ++q) s += masks[q].score * similarity[p][q];
    out[p].score = s;
  }
  return out;
}

std::vector<WeightedMask> message_pass(const std::vector<WeightedMask>& masks, const EmbeddingTable& table) {
  if (masks.empty()) fail(ErrorKind::kEmptyInput, "message passing needs at least one mask");
  return message_pass(masks, similarity_matrix(masks, table));
}

std::vector<double> fused_weights(const std::vector<WeightedMask>& masks, const SuperpixelMap& sp) {
  if (masks.empty()) fail(ErrorKind::kEmptyInput, "nothing to fuse");
  std::vector<double> w(sp.count, 0.0);
  for (const auto& m : masks) {
    const auto coverage = mask_coverage(sp, m.mask);
    for (int i = 0; i < sp.count; ++i) w[i] += m.score * coverage[i];
  }
  const auto [lo_it, hi_it] = std::minmax_element(w.begin(), w.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  for (double& v : w) {
    if (hi > lo) {
      v = (v - lo) / (hi - lo);
    } else {
      v = hi > 0.0 ? 1.0 : 0.0;
    }
  }
  return w;
}

Labeling fuse_and_cut(const std::vector<WeightedMask>& masks, const SuperpixelGraph& graph,
                      const SuperpixelMap& sp, const FuseOptions& options) {
  if (graph.node_count() != sp.count) fail(ErrorKind::kDimensionMismatch, "graph does not match superpixel map");
  const std::vector<double> w = fused_weights(masks, sp);
  std::vector<std::array<double, 2>> unary(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) unary[i] = {w[i], 1.0 - w[i]};
  return min_cut_infer(MrfProblem(std::move(unary), boundary_pairwise(graph, options.lambda, options.pairwise_scale)));
}

std::vector<Detection> parse_detections(std::string_view text) {
  std::vector<Detection> out;
  int line_no = 0;
  for (std::string_view raw : lines_of(text)) {
    ++line_no;
    if (split_ws(raw).empty() || raw.front() == '#') continue;
    std::istringstream ss{std::string(raw)};
    Detection det;
    ss >> std::ws;
    if (ss.peek() != '"') fail(ErrorKind::kMalformedHeader, "detection line " + std::to_string(line_no) + " must start with a quoted phrase");
    ss >> std::quoted(det.phrase);
    std::string rest;
    std::getline(ss, rest);
    const auto tokens = split_ws(rest);
    double values[5];
    if (tokens.size() != 5) fail(ErrorKind::kRaggedRow, "detection line " + std::to_string(line_no) + " needs 5 numbers");
    for (int t = 0; t < 5; ++t) {
      if (!parse_double(tokens[t], values[t])) {
        fail(ErrorKind::kNonNumeric, "non-numeric field on detection line " + std::to_string(line_no));
      }
    }
    det.box = {static_cast<int>(values[0]), static_cast<int>(values[1]), static_cast<int>(values[2]),
               static_cast<int>(values[3])};
    det.score = values[4];
    if (normalize_phrase(det.phrase).empty()) fail(ErrorKind::kValidation, "empty detection phrase");
    out.push_back(std::move(det));
  }
  return out;
}

std::vector<Detection> load_detections(const std::filesystem::path& path) { return parse_detections(read_text(path)); }

std::vector<Detection> non_max_suppression(const std::vector<Detection>& detections, double iou_threshold,
                                           double score_threshold) {
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < detections.size(); ++i) {
    if (detections[i].score > score_threshold) groups[normalize_phrase(detections[i].phrase)].push_back(i);
  }
  std::vector<bool> keep(detections.size(), false);
  for (auto& [phrase, idx] : groups) {
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return detections[a].score > detections[b].score; });
    std::vector<std::size_t> kept;
    for (std::size_t i : idx) {
      const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](std::size_t k) {
        return intersection_over_union(detections[i].box, detections[k].box) > iou_threshold;
      });
      if (!suppressed) kept.push_back(i);
    }
    for (std::size_t k : kept) keep[k] = true;
  }
  std::vector<Detection> out;
  for (std::size_t i = 0; i < detections.size(); ++i)
    if (keep[i]) out.push_back(detections[i]);
  return out;
}

BoxSegmentation segment_detection(const Detection& det, const SegmentPhraseTable& table,
                                  const SuperpixelGraph& graph, const SuperpixelMap& sp) {
  const auto components = table.query(det.phrase);
  if (components.empty()) fail(ErrorKind::kUnknownPhrase, "phrase '" + det.phrase + "' is not in the table");
  const Box box{std::max(0, det.box.x0), std::max(0, det.box.y0), std::min(sp.width, det.box.x1),
                std::min(sp.height, det.box.y1)};
  BoxSegmentation result{PixelMask(sp.width, sp.height), components.front().first.component_id()};
  if (box.area() <= 0) return result;

  // Components compete on the mean energy of the superpixels touching the box.
  const auto fraction = superpixel_box_fraction(sp, box);
  Labeling best_labels;
  double best_energy = std::numeric_limits<double>::infinity();
  for (const auto& [key, model] : components) {
    const Labeling labels = segment_with_model(model, graph);
    const auto unary =
        build_segmentation_problem(model.theta_fg, model.theta_bg, graph, model.lambda).unary();
    double e = 0.0;
    int touched = 0;
    for (int i = 0; i < sp.count; ++i) {
      if (fraction[i] <= 0.0) continue;
      e += unary[i][labels[i]];
      ++touched;
    }
    e /= touched;
    if (e < best_energy) {
      best_energy = e;
      best_labels = labels;
      result.component_id = key.component_id();
    }
  }
  for (int y = box.y0; y < box.y1; ++y)
    for (int x = box.x0; x < box.x1; ++x) result.mask.at(x, y) = best_labels[sp.at(x, y)];
  return result;
}

SemanticResult semantic_segment(const Image& image, const std::vector<Detection>& detections,
                                 const SegmentPhraseTable& table, const EmbeddingTable& embeddings,
                                 const SemanticConfig& config) {
  for (const auto& det : detections) {
    if (table.query(det.phrase).empty()) {
      fail(ErrorKind::kUnknownPhrase, "phrase '" + det.phrase + "' is not in the table");
    }
  }
  SemanticResult result;
  result.mask = PixelMask(image.width, image.height);
  const auto survivors = non_max_suppression(detections, config.nms_iou, config.detection_threshold);
  if (survivors.empty()) return result;

  const SuperpixelMap sp = compute_superpixels(
      image, static_cast<int>(std::min<long>(config.superpixel_target, static_cast<long>(image.pixel_count()))),
      config.superpixels);
  const SuperpixelGraph graph = extract_features(image, sp);

  std::vector<WeightedMask> masks;
  for (const auto& det : survivors) {
    BoxSegmentation seg = segment_detection(det, table, graph, sp);
    result.report.push_back({normalize_phrase(det.phrase), seg.component_id, det.box, det.score, det.score,
                             seg.mask.count()});
    masks.push_back({det.phrase, std::move(seg.mask), det.score});
  }
  if (config.message_passing) masks = message_pass(masks, embeddings);
  for (std::size_t i = 0; i < masks.size(); ++i) result.report[i].post_score = masks[i].score;

  result.mask = lift_labels(sp, fuse_and_cut(masks, graph, sp, config.fuse));
  result.empty = false;
  return result;
}

}  // namespace segphrase
