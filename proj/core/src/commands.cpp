#include "segphrase/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "segphrase/latent.hpp"
#include "segphrase/linguistics.hpp"
#include "segphrase/parallel.hpp"
#include "segphrase/phrase_table.hpp"

namespace segphrase {

using nlohmann::json;
namespace fs = std::filesystem;

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument:
      return kExitUsage;
    case ErrorKind::kCollapse:
    case ErrorKind::kNumerical:
    case ErrorKind::kSubmodularity:
    case ErrorKind::kUndefinedCosine:
      return kExitNumerical;
    default:
      return kExitData;
  }
}

namespace {

int guarded(std::ostream& err, const std::function<void()>& body) {
  try {
    body();
    return kExitOk;
  } catch (const Error& e) {
    err << "error [" << to_string(e.kind()) << "]: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
}

std::string numbered(const char* pattern, int a, int b = -1) {
  char buf[64];
  if (b < 0) {
    std::snprintf(buf, sizeof(buf), pattern, a);
  } else {
    std::snprintf(buf, sizeof(buf), pattern, a, b);
  }
  return buf;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  return out;
}

SuperpixelMap superpixels_for(const Image& img, const Config& cfg) {
  const long pixels = static_cast<long>(img.pixel_count());
  return compute_superpixels(img, static_cast<int>(std::min<long>(cfg.superpixel_target, pixels)));
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::vector<ManifestGroup> parse_manifest(const fs::path& path, const std::string& default_phrase) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot open manifest " + path.string());
  const fs::path base = path.parent_path();
  std::vector<ManifestGroup> groups;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line.substr(first));
    if (line[first] == '@') {
      std::string directive;
      ManifestGroup g;
      ss >> directive >> g.component_id;
      std::getline(ss, g.phrase);
      if (directive != "@phrase" || !ss.eof() || normalize_phrase(g.phrase).empty()) {
        fail(ErrorKind::kMalformedHeader, "manifest line " + std::to_string(line_no) +
                                              ": expected '@phrase <component-id> <phrase>'");
      }
      g.phrase = normalize_phrase(g.phrase);
      groups.push_back(std::move(g));
      continue;
    }
    ManifestItem item;
    if (!(ss >> item.image_id >> item.box.x0 >> item.box.y0 >> item.box.x1 >> item.box.y1)) {
      fail(ErrorKind::kMalformedHeader, "manifest line " + std::to_string(line_no) +
                                            ": expected 'image-path x0 y0 x1 y1'");
    }
    std::string extra;
    if (ss >> extra) fail(ErrorKind::kMalformedHeader, "manifest line " + std::to_string(line_no) + " has extra fields");
    const fs::path image(item.image_id);
    item.image = image.is_absolute() ? image : base / image;
    if (groups.empty()) groups.push_back({normalize_phrase(default_phrase), 0, {}});
    groups.back().items.push_back(std::move(item));
  }
  groups.erase(std::remove_if(groups.begin(), groups.end(), [](const auto& g) { return g.items.empty(); }),
               groups.end());
  return groups;
}

int cmd_train(const TrainOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Config& cfg = options.config;
    validate(cfg);
    const auto groups = parse_manifest(options.manifest, options.default_phrase);
    if (groups.empty()) fail(ErrorKind::kEmptyInput, "manifest lists no training images");

    SegmentPhraseTable table(cfg.k_exemplars);
    const fs::path sidecar_dir = options.out_table.string() + ".sp";
    fs::create_directories(sidecar_dir);

    for (std::size_t g = 0; g < groups.size(); ++g) {
      const auto& group = groups[g];
      const std::size_t n = group.items.size();
      std::vector<Image> images(n);
      std::vector<SuperpixelMap> maps(n);
      std::vector<TrainingInstance> instances(n);
      parallel_for(n, cfg.jobs, [&](std::size_t i) {
        const auto& item = group.items[i];
        images[i] = load_image(item.image);
        maps[i] = superpixels_for(images[i], cfg);
        instances[i] = make_training_instance(extract_features(images[i], maps[i]), maps[i], item.box, item.image_id);
      });

      LatentConfig lc;
      lc.k = cfg.gmm_k;
      lc.max_iters = cfg.em_max_iters;
      lc.seed = cfg.seed;
      lc.lambda = cfg.lambda;
      lc.seed_shrink = cfg.seed_shrink;
      lc.jobs = cfg.jobs;
      EmTrace trace;
      try {
        trace = em_learn_traced(instances, lc);
      } catch (const Error& e) {
        throw Error(e.kind(), "phrase '" + group.phrase + "' component " + std::to_string(group.component_id) +
                                  ": " + e.what());
      }
      const PhraseKey key(group.phrase, group.component_id);
      table.insert(key, trace.model);

      for (std::size_t i = 0; i < instances.size(); ++i) {
        const Labeling& labels = trace.labelings[i];
        if (std::none_of(labels.begin(), labels.end(), [](std::uint8_t b) { return b != 0; })) continue;
        const std::string stem = numbered("g%03d_i%03d", static_cast<int>(g), static_cast<int>(i));
        save_superpixel_sidecar(sidecar_dir / (stem + ".txt"), stem, maps[i]);
        ExemplarRecord rec;
        rec.image_id = instances[i].image_id;
        rec.score = foreground_confidence(trace.model, instances[i].graph, labels);
        rec.sidecar = (sidecar_dir.filename() / (stem + ".txt")).generic_string();
        rec.mask = labels;
        rec.descriptor = mask_descriptor(images[i], lift_labels(maps[i], labels));
        table.add_exemplar(group.phrase, std::move(rec));
      }

      json log;
      log["phrase"] = group.phrase;
      log["component_id"] = group.component_id;
      log["instances"] = instances.size();
      log["iterations"] = trace.iterations;
      log["converged"] = trace.converged;
      log["restarted"] = trace.restarted;
      log["seed_shrink"] = trace.seed_shrink;
      log["final_energy"] = trace.energy.back();
      log["energy_trace"] = trace.energy;
      out << log.dump() << '\n';
    }
    save_table(table, options.out_table);
  });
}

int cmd_segment(const SegmentOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Config& cfg = options.config;
    validate(cfg);
    const Image img = load_image(options.image);
    const auto detections = load_detections(options.detections);
    const SegmentPhraseTable table = load_table(options.table);
    const EmbeddingTable embeddings = load_embeddings(options.embeddings);

    SemanticConfig sc;
    sc.superpixel_target = cfg.superpixel_target;
    sc.nms_iou = cfg.nms_iou;
    sc.detection_threshold = cfg.detection_threshold;
    sc.fuse.lambda = cfg.lambda;
    sc.fuse.pairwise_scale = cfg.fuse_pairwise_scale;
    sc.message_passing = options.message_passing;
    const SemanticResult result = semantic_segment(img, detections, table, embeddings, sc);

    if (options.out_mask.has_parent_path()) fs::create_directories(options.out_mask.parent_path());
    save_mask(options.out_mask, result.mask);

    json report;
    report["empty"] = result.empty;
    report["foreground_pixels"] = result.mask.count();
    report["message_passing"] = options.message_passing;
    report["masks"] = json::array();
    for (const auto& m : result.report) {
      report["masks"].push_back({{"phrase", m.phrase},
                                 {"component_id", m.component_id},
                                 {"box", {m.box.x0, m.box.y0, m.box.x1, m.box.y1}},
                                 {"pre_score", m.pre_score},
                                 {"post_score", m.post_score},
                                 {"mask_pixels", m.mask_pixels}});
    }
    const fs::path report_path = options.report.empty() ? fs::path(options.out_mask.string() + ".json") : options.report;
    auto rep = open_out(report_path);
    rep << report.dump() << '\n';
    out << report.dump() << '\n';
  });
}

namespace {

struct DatasetRow {
  std::vector<std::string> phrases;  // x, y[, z]
  std::string gold;
};

std::vector<DatasetRow> load_dataset(const fs::path& path, std::size_t phrase_fields) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot open dataset " + path.string());
  std::vector<DatasetRow> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line[line.find_first_not_of(" \t")] == '#') continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const auto tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (fields.size() != phrase_fields + 1) {
      fail(ErrorKind::kRaggedRow, "dataset line " + std::to_string(line_no) + " needs " +
                                      std::to_string(phrase_fields + 1) + " tab-separated fields");
    }
    DatasetRow row;
    for (std::size_t f = 0; f < phrase_fields; ++f) {
      row.phrases.push_back(normalize_phrase(fields[f]));
      if (row.phrases.back().empty()) fail(ErrorKind::kValidation, "empty phrase on dataset line " + std::to_string(line_no));
    }
    row.gold = normalize_phrase(fields[phrase_fields]);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

int cmd_relations(const RelationsOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Config& cfg = options.config;
    validate(cfg);
    if (options.table.empty() == options.scores.empty()) {
      fail(ErrorKind::kInvalidArgument, "give exactly one of a phrase table or a score matrix");
    }
    if (options.graph && options.mode != RelationsMode::kEntail) {
      fail(ErrorKind::kInvalidArgument, "--graph applies to entail mode only");
    }
    const std::size_t fields = options.mode == RelationsMode::kSimRel ? 3 : 2;
    auto rows = load_dataset(options.dataset, fields);

    // Each mode evaluates only the rows labeled in its own vocabulary.
    std::size_t skipped = 0;
    std::vector<DatasetRow> used;
    for (auto& row : rows) {
      const std::string& g = row.gold;
      bool ok = false;
      switch (options.mode) {
        case RelationsMode::kEntail:
          if (g == "paraphrase" || g == "not-paraphrase") { ++skipped; continue; }
          ok = g == "entails" || g == "not-entails";
          break;
        case RelationsMode::kParaphrase:
          if (g == "entails" || g == "not-entails") { ++skipped; continue; }
          ok = g == "paraphrase" || g == "not-paraphrase";
          break;
        case RelationsMode::kSimRel:
          ok = g == "y" || g == "z" || g == row.phrases[1] || g == row.phrases[2];
          break;
      }
      if (!ok) fail(ErrorKind::kValidation, "unrecognized gold label '" + g + "'");
      used.push_back(std::move(row));
    }
    if (used.empty()) fail(ErrorKind::kEmptyInput, "dataset has no rows for this mode");

    std::vector<std::string> phrases;
    std::map<std::string, std::size_t> index;
    for (const auto& row : used)
      for (const auto& p : row.phrases)
        if (index.try_emplace(p, phrases.size()).second) phrases.push_back(p);

    ScoreMatrix scores;
    if (!options.table.empty()) {
      const SegmentPhraseTable table = load_table(options.table);
      std::vector<PhraseExemplars> exemplars;
      for (const auto& p : phrases) exemplars.push_back(exemplars_from_table(table, p));
      scores = entailment_scores(exemplars);
    } else {
      scores = load_score_matrix(options.scores);
      if (scores.size() != phrases.size()) {
        fail(ErrorKind::kDimensionMismatch, "score matrix has " + std::to_string(scores.size()) +
                                                " rows but the dataset names " + std::to_string(phrases.size()) +
                                                " phrases");
      }
    }

    std::optional<EntailmentSolution> solution;
    if (options.graph) {
      const SolverMode mode = options.solver.value_or(
          static_cast<int>(phrases.size()) <= kExactSolverMaxNodes ? SolverMode::kExact : SolverMode::kGreedy);
      solution = solve_entailment_graph(scores, cfg.ilp_lambda, mode);
    }

    std::ostringstream csv;
    csv.precision(17);
    std::vector<ScoredItem> items;
    std::size_t correct = 0;
    switch (options.mode) {
      case RelationsMode::kEntail:
        csv << "x,y,score,decision,gold" << (options.graph ? ",graph_decision" : "") << '\n';
        for (const auto& row : used) {
          const std::size_t x = index[row.phrases[0]], y = index[row.phrases[1]];
          const double s = scores[x][y];
          const bool decision = s > options.threshold;
          const bool gold = row.gold == "entails";
          csv << csv_field(row.phrases[0]) << ',' << csv_field(row.phrases[1]) << ',' << s << ','
              << (decision ? "entails" : "not-entails") << ',' << row.gold;
          bool final_decision = decision;
          if (solution) {
            final_decision = solution->decisions[x][y] != 0;
            csv << ',' << (final_decision ? "entails" : "not-entails");
          }
          csv << '\n';
          correct += final_decision == gold;
          items.push_back({s - options.threshold, gold});
        }
        break;
      case RelationsMode::kParaphrase:
        csv << "x,y,score,decision,gold\n";
        for (const auto& row : used) {
          const std::size_t x = index[row.phrases[0]], y = index[row.phrases[1]];
          const double diff = std::abs(scores[x][y] - scores[y][x]);
          const bool decision = is_paraphrase(scores[x][y], scores[y][x], cfg.paraphrase_tau);
          const bool gold = row.gold == "paraphrase";
          csv << csv_field(row.phrases[0]) << ',' << csv_field(row.phrases[1]) << ',' << diff << ','
              << (decision ? "paraphrase" : "not-paraphrase") << ',' << row.gold << '\n';
          correct += decision == gold;
          items.push_back({cfg.paraphrase_tau - diff, gold});
        }
        break;
      case RelationsMode::kSimRel:
        csv << "x,y,z,score_y,score_z,choice,gold\n";
        for (const auto& row : used) {
          const std::size_t x = index[row.phrases[0]], y = index[row.phrases[1]], z = index[row.phrases[2]];
          const double sy = scores[x][y];
          const double sz = scores[x][z];
          const bool choose_y = !(sz > sy);
          const bool gold_y = row.gold == "y" || (row.gold != "z" && row.gold == row.phrases[1]);
          csv << csv_field(row.phrases[0]) << ',' << csv_field(row.phrases[1]) << ',' << csv_field(row.phrases[2])
              << ',' << sy << ',' << sz << ',' << (choose_y ? row.phrases[1] : row.phrases[2]) << ','
              << (gold_y ? row.phrases[1] : row.phrases[2]) << '\n';
          correct += choose_y == gold_y;
          items.push_back({sy - sz, gold_y});
        }
        break;
    }

    {
      auto f = open_out(options.out_csv);
      f << csv.str();
    }
    const fs::path curve_path = options.curve_csv.empty()
                                    ? options.out_csv.parent_path() / (options.out_csv.stem().string() + "_curve.csv")
                                    : options.curve_csv;
    {
      auto f = open_out(curve_path);
      write_curve_csv(f, declaration_curve(items, default_declaration_grid()));
    }

    json summary;
    summary["rows"] = used.size();
    summary["skipped"] = skipped;
    summary["phrases"] = phrases.size();
    summary["correct"] = correct;
    summary["accuracy"] = static_cast<double>(correct) / static_cast<double>(used.size());
    if (solution) summary["graph_objective"] = solution->objective;
    out << summary.dump() << '\n';
  });
}

int cmd_synth(const SynthOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    validate(options.config);
    if (options.count < 1) fail(ErrorKind::kInvalidArgument, "scene count must be positive");
    const std::string phrase = normalize_phrase(options.phrase);
    if (phrase.empty()) fail(ErrorKind::kInvalidArgument, "phrase must not be empty");
    fs::create_directories(options.out_dir);

    std::ostringstream manifest;
    manifest << "@phrase 0 " << phrase << '\n';
    for (int i = 0; i < options.count; ++i) {
      const int index = options.first_index + i;
      SceneConfig sc = options.scene;
      sc.seed = options.config.seed + static_cast<std::uint64_t>(index);
      const SyntheticScene scene = make_scene(sc);
      const std::string stem = numbered("scene_%03d", index);
      save_image(options.out_dir / (stem + ".pgm"), scene.image);
      save_mask(options.out_dir / (stem + "_gt.pgm"), scene.gt_mask);
      const Box& b = scene.box;
      manifest << stem << ".pgm " << b.x0 << ' ' << b.y0 << ' ' << b.x1 << ' ' << b.y1 << '\n';
      auto det = open_out(options.out_dir / numbered("detections_%03d.txt", index));
      det << '"' << phrase << "\" " << b.x0 << ' ' << b.y0 << ' ' << b.x1 << ' ' << b.y1 << " 1\n";
    }
    {
      auto f = open_out(options.out_dir / "manifest.txt");
      f << manifest.str();
    }

    // Small random vectors for the phrase's words so the segment command can
    // run on the synthetic corpus.
    std::istringstream words_in(phrase);
    std::vector<std::string> words;
    for (std::string w; words_in >> w;)
      if (std::find(words.begin(), words.end(), w) == words.end()) words.push_back(w);
    std::mt19937_64 rng(options.config.seed);
    constexpr int kDim = 8;
    auto emb = open_out(options.out_dir / "embeddings.txt");
    emb << words.size() << ' ' << kDim << '\n';
    emb.precision(17);
    for (const auto& w : words) {
      emb << w;
      for (int d = 0; d < kDim; ++d) emb << ' ' << (static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5);
      emb << '\n';
    }

    json summary{{"out_dir", options.out_dir.generic_string()}, {"scenes", options.count}, {"phrase", phrase}};
    out << summary.dump() << '\n';
  });
}

}  // namespace segphrase
