#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "segphrase/latent.hpp"

namespace segphrase {

// Lowercase, trims, and collapses internal whitespace runs to one space.
std::string normalize_phrase(std::string_view raw);

class PhraseKey {
 public:
  // Normalizes `phrase`; throws kValidation when nothing is left.
  PhraseKey(std::string_view phrase, int component_id);

  const std::string& phrase() const { return phrase_; }
  int component_id() const { return component_id_; }

  auto operator<=>(const PhraseKey&) const = default;
  bool operator==(const PhraseKey&) const = default;

 private:
  std::string phrase_;
  int component_id_ = 0;
};

// One stored exemplar: a superpixel-resolution foreground labeling, the
// sidecar holding its SuperpixelMap, and the descriptor used for visual
// similarity.
struct ExemplarRecord {
  std::string image_id;
  double score = 0.0;
  std::string sidecar;
  Labeling mask;
  std::vector<double> descriptor;

  bool operator==(const ExemplarRecord&) const = default;
};

struct TableEntry {
  SegmentationModel model;
  std::uint32_t version = 1;
  bool operator==(const TableEntry&) const = default;
};

class SegmentPhraseTable {
 public:
  explicit SegmentPhraseTable(int max_exemplars = 10);

  // Re-inserting an existing key replaces the model and bumps its version.
  void insert(const PhraseKey& key, SegmentationModel model);
  const TableEntry* find(const PhraseKey& key) const;

  // All components of the normalized phrase, by ascending component id.
  std::vector<std::pair<PhraseKey, SegmentationModel>> query(std::string_view phrase) const;

  // Keeps at most max_exemplars records, sorted by descending score with
  // ties ordered by image id.
  void add_exemplar(std::string_view phrase, ExemplarRecord record);
  const std::vector<ExemplarRecord>& exemplars(std::string_view phrase) const;

  int max_exemplars() const { return max_exemplars_; }
  std::size_t size() const { return entries_.size(); }
  const std::map<PhraseKey, TableEntry>& entries() const { return entries_; }
  const std::map<std::string, std::vector<ExemplarRecord>>& all_exemplars() const { return exemplars_; }

  bool operator==(const SegmentPhraseTable&) const = default;

 private:
  int max_exemplars_;
  std::map<PhraseKey, TableEntry> entries_;
  std::map<std::string, std::vector<ExemplarRecord>> exemplars_;
};

// Single-file container: magic, version, JSON index, little-endian float64
// and run-length payload, trailing CRC32.
inline constexpr char kTableMagic[8] = {'S', 'E', 'G', 'P', 'H', 'R', 'T', 'B'};
inline constexpr std::uint32_t kTableFormatVersion = 1;

std::string serialize_table(const SegmentPhraseTable& table);
SegmentPhraseTable deserialize_table(std::string_view bytes);
void save_table(const SegmentPhraseTable& table, const std::filesystem::path& path);
SegmentPhraseTable load_table(const std::filesystem::path& path);

}  // namespace segphrase
