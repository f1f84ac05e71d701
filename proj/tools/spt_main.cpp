#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "segphrase/commands.hpp"

using namespace segphrase;

namespace {

// Overrides given on the command line; applied on top of --config.
struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<double> lambda;
  std::optional<double> ilp_lambda;
  std::optional<int> k;
  std::optional<double> tau;
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("--config", f.config_path, "key=value configuration file")->check(CLI::ExistingFile);
  app->add_option("--seed", f.seed, "seed for all randomness (default 0)");
  app->add_option("--jobs", f.jobs, "worker threads for per-image and per-pair work (default 1)");
  app->add_option("--lambda", f.lambda, "boundary pairwise scale lambda (default 0.05)");
  app->add_option("--ilp-lambda", f.ilp_lambda, "entailment graph edge penalty (default 0.1)");
  app->add_option("--k", f.k, "mixture components per foreground/background model (default 5)");
  app->add_option("--tau", f.tau, "paraphrase threshold on |e_xy - e_yx| (default 0.1)");
}

Config resolve(const CommonFlags& f) {
  Config cfg;
  if (!f.config_path.empty()) cfg = load_config(f.config_path);
  if (f.seed) cfg.seed = *f.seed;
  if (f.jobs) cfg.jobs = *f.jobs;
  if (f.lambda) cfg.lambda = *f.lambda;
  if (f.ilp_lambda) cfg.ilp_lambda = *f.ilp_lambda;
  if (f.k) cfg.gmm_k = *f.k;
  if (f.tau) cfg.paraphrase_tau = *f.tau;
  validate(cfg);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Segment-phrase table: learn box-supervised segmentation models and reason over phrases"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "spt 0.1.0");

  CommonFlags common;

  TrainOptions train;
  auto* train_cmd = app.add_subcommand("train", "learn segmentation models from a box manifest");
  add_common(train_cmd, common);
  train_cmd->add_option("manifest", train.manifest, "manifest: '@phrase <id> <phrase>' then 'image x0 y0 x1 y1' lines")
      ->required()
      ->check(CLI::ExistingFile);
  train_cmd->add_option("-o,--out", train.out_table, "output phrase table")->required();
  std::optional<int> exemplars;
  train_cmd->add_option("--exemplars", exemplars, "exemplar masks kept per phrase (default 10)");
  train_cmd->add_option("--phrase", train.default_phrase, "phrase for items before any @phrase line");

  SegmentOptions segment;
  bool no_message_passing = false;
  auto* seg_cmd = app.add_subcommand("segment", "segment an image from phrase detections");
  add_common(seg_cmd, common);
  seg_cmd->add_option("image", segment.image, "input PGM/PPM image")->required();
  seg_cmd->add_option("detections", segment.detections, "detections: '\"phrase\" x0 y0 x1 y1 score' lines")->required();
  seg_cmd->add_option("--table", segment.table, "phrase table from train")->required();
  seg_cmd->add_option("--embeddings", segment.embeddings, "word vectors: header 'count dim', then 'word v1..vd'")
      ->required();
  seg_cmd->add_option("-o,--out", segment.out_mask, "output mask (PGM, 0/255)")->required();
  seg_cmd->add_option("--report", segment.report, "JSON report path (default <out>.json)");
  seg_cmd->add_flag("--no-message-passing", no_message_passing, "fuse masks without linguistic reweighting");

  RelationsOptions relations;
  std::string mode_name;
  std::string solver_name;
  auto* rel_cmd = app.add_subcommand("relations", "score entailment, paraphrase or relative similarity");
  add_common(rel_cmd, common);
  rel_cmd->add_option("mode", mode_name, "entail | paraphrase | simrel")
      ->required()
      ->check(CLI::IsMember({"entail", "paraphrase", "simrel"}));
  rel_cmd->add_option("dataset", relations.dataset, "tab-separated rows: x, y[, z], gold")->required();
  auto* table_opt = rel_cmd->add_option("--table", relations.table, "phrase table with exemplars");
  auto* scores_opt = rel_cmd->add_option("--scores", relations.scores, "precomputed entailment score matrix");
  table_opt->excludes(scores_opt);
  rel_cmd->add_option("-o,--out", relations.out_csv, "per-row CSV")->required();
  rel_cmd->add_option("--curve", relations.curve_csv, "declaration curve CSV (default <out stem>_curve.csv)");
  rel_cmd->add_flag("--graph", relations.graph, "entail mode: also decide edges with the transitive graph solver");
  rel_cmd->add_option("--solver", solver_name, "graph solver: exact | greedy (default exact up to 6 phrases)")
      ->check(CLI::IsMember({"exact", "greedy"}));
  rel_cmd->add_option("--threshold", relations.threshold, "raw entailment score threshold (default 0)");

  SynthOptions synth;
  std::string shape_name = "ellipse";
  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic scene corpus with manifest and detections");
  add_common(synth_cmd, common);
  synth_cmd->add_option("out_dir", synth.out_dir, "output directory")->required();
  synth_cmd->add_option("--count", synth.count, "number of scenes (default 5)");
  synth_cmd->add_option("--first-index", synth.first_index, "index of the first scene (default 0)");
  synth_cmd->add_option("--size", synth.scene.size, "image side in pixels (default 64)");
  synth_cmd->add_option("--shape", shape_name, "ellipse | rectangle | blob")
      ->check(CLI::IsMember({"ellipse", "rectangle", "blob"}));
  synth_cmd->add_option("--fg", synth.scene.fg.mean, "foreground mean intensity (default 0.75)");
  synth_cmd->add_option("--bg", synth.scene.bg.mean, "background mean intensity (default 0.25)");
  synth_cmd->add_option("--noise", synth.scene.noise, "Gaussian noise sigma (default 0.05)");
  synth_cmd->add_option("--phrase", synth.phrase, "phrase written to the manifest (default object)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  Config cfg;
  try {
    cfg = resolve(common);
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.kind()) << "]: " << e.what() << '\n';
    return exit_code_for(e.kind());
  }

  if (*train_cmd) {
    if (exemplars) cfg.k_exemplars = *exemplars;
    train.config = cfg;
    return cmd_train(train, std::cout, std::cerr);
  }
  if (*seg_cmd) {
    segment.config = cfg;
    segment.message_passing = !no_message_passing;
    return cmd_segment(segment, std::cout, std::cerr);
  }
  if (*rel_cmd) {
    const std::map<std::string, RelationsMode> modes{
        {"entail", RelationsMode::kEntail}, {"paraphrase", RelationsMode::kParaphrase}, {"simrel", RelationsMode::kSimRel}};
    relations.mode = modes.at(mode_name);
    if (!solver_name.empty()) relations.solver = solver_name == "exact" ? SolverMode::kExact : SolverMode::kGreedy;
    relations.config = cfg;
    return cmd_relations(relations, std::cout, std::cerr);
  }
  const std::map<std::string, SceneShape> shapes{
      {"ellipse", SceneShape::kEllipse}, {"rectangle", SceneShape::kRectangle}, {"blob", SceneShape::kBlob}};
  synth.scene.shape = shapes.at(shape_name);
  synth.config = cfg;
  return cmd_synth(synth, std::cout, std::cerr);
}
