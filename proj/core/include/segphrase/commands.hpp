#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "segphrase/config.hpp"
#include "segphrase/error.hpp"
#include "segphrase/eval.hpp"
#include "segphrase/imaging.hpp"
#include "segphrase/relations.hpp"

namespace segphrase {

// Process exit codes of the spt tool.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitNumerical = 3 };

int exit_code_for(ErrorKind kind);

struct ManifestItem {
  std::filesystem::path image;  // resolved against the manifest directory
  std::string image_id;         // as written in the manifest
  Box box;
};

struct ManifestGroup {
  std::string phrase;
  int component_id = 0;
  std::vector<ManifestItem> items;
};

// Lines "image-path x0 y0 x1 y1"; "@phrase <component-id> <phrase...>"
// starts a group; '#' lines are comments. Items before any directive go to
// `default_phrase`, component 0.
std::vector<ManifestGroup> parse_manifest(const std::filesystem::path& path, const std::string& default_phrase);

struct TrainOptions {
  std::filesystem::path manifest;
  std::filesystem::path out_table;
  std::string default_phrase = "object";
  Config config;
};

struct SegmentOptions {
  std::filesystem::path image;
  std::filesystem::path detections;
  std::filesystem::path table;
  std::filesystem::path embeddings;
  std::filesystem::path out_mask;
  std::filesystem::path report;  // defaults to <out_mask>.json
  bool message_passing = true;
  Config config;
};

enum class RelationsMode { kEntail, kParaphrase, kSimRel };

struct RelationsOptions {
  RelationsMode mode = RelationsMode::kEntail;
  std::filesystem::path table;   // exactly one of table / scores
  std::filesystem::path scores;
  std::filesystem::path dataset;
  std::filesystem::path out_csv;
  std::filesystem::path curve_csv;  // defaults to <out_csv stem>_curve.csv
  bool graph = false;
  std::optional<SolverMode> solver;  // default: exact when N <= 6
  double threshold = 0.0;            // raw-score entailment threshold
  Config config;
};

struct SynthOptions {
  std::filesystem::path out_dir;
  int count = 5;
  int first_index = 0;
  SceneConfig scene;
  std::string phrase = "object";
  Config config;
};

// Each command reports progress/logs on `out`, diagnostics on `err`, and
// returns an ExitCode. Library errors are caught and mapped.
int cmd_train(const TrainOptions& options, std::ostream& out, std::ostream& err);
int cmd_segment(const SegmentOptions& options, std::ostream& out, std::ostream& err);
int cmd_relations(const RelationsOptions& options, std::ostream& out, std::ostream& err);
int cmd_synth(const SynthOptions& options, std::ostream& out, std::ostream& err);

}  // namespace segphrase
