#include "segphrase/phrase_table.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "segphrase/error.hpp"

namespace segphrase {

using nlohmann::json;

std::string normalize_phrase(std::string_view raw) {
  std::string out;
  bool pending_space = false;
  for (char ch : raw) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

PhraseKey::PhraseKey(std::string_view phrase, int component_id)
    : phrase_(normalize_phrase(phrase)), component_id_(component_id) {
  if (phrase_.empty()) fail(ErrorKind::kValidation, "phrase must not be empty");
  if (component_id < 0) fail(ErrorKind::kValidation, "component id must be non-negative");
}

SegmentPhraseTable::SegmentPhraseTable(int max_exemplars) : max_exemplars_(max_exemplars) {
  if (max_exemplars < 1) fail(ErrorKind::kValidation, "exemplar capacity must be positive");
}

void SegmentPhraseTable::insert(const PhraseKey& key, SegmentationModel model) {
  auto [it, inserted] = entries_.try_emplace(key);
  if (!inserted) ++it->second.version;
  model.phrase = key.phrase();
  model.component_id = key.component_id();
  it->second.model = std::move(model);
}

const TableEntry* SegmentPhraseTable::find(const PhraseKey& key) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

std::vector<std::pair<PhraseKey, SegmentationModel>> SegmentPhraseTable::query(std::string_view phrase) const {
  std::vector<std::pair<PhraseKey, SegmentationModel>> hits;
  const std::string norm = normalize_phrase(phrase);
  if (norm.empty()) return hits;
  for (auto it = entries_.lower_bound(PhraseKey(norm, 0));
       it != entries_.end() && it->first.phrase() == norm; ++it) {
    hits.emplace_back(it->first, it->second.model);
  }
  return hits;
}

void SegmentPhraseTable::add_exemplar(std::string_view phrase, ExemplarRecord record) {
  const std::string norm = normalize_phrase(phrase);
  if (norm.empty()) fail(ErrorKind::kValidation, "phrase must not be empty");
  auto& list = exemplars_[norm];
  auto before = [](const ExemplarRecord& a, const ExemplarRecord& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.image_id < b.image_id;
  };
  list.insert(std::upper_bound(list.begin(), list.end(), record, before), std::move(record));
  if (static_cast<int>(list.size()) > max_exemplars_) list.resize(max_exemplars_);
}

const std::vector<ExemplarRecord>& SegmentPhraseTable::exemplars(std::string_view phrase) const {
  static const std::vector<ExemplarRecord> kEmpty;
  auto it = exemplars_.find(normalize_phrase(phrase));
  return it == exemplars_.end() ? kEmpty : it->second;
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFFU));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFFU));
}

void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

std::uint32_t get_u32(std::string_view in, std::size_t pos) {
  std::uint32_t v = 0;
  for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + b])) << (8 * b);
  return v;
}

std::uint64_t get_u64(std::string_view in, std::size_t pos) {
  std::uint64_t v = 0;
  for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + b])) << (8 * b);
  return v;
}

std::uint32_t crc_of(std::string_view bytes) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size())));
}

json write_mixture(std::string& payload, const GaussianMixture& g) {
  json ref = {{"k", g.components()}, {"dim", g.dimension()}, {"offset", payload.size()}};
  for (double w : g.weights) put_f64(payload, w);
  for (const auto& m : g.means)
    for (double v : m) put_f64(payload, v);
  for (const auto& s : g.variances)
    for (double v : s) put_f64(payload, v);
  return ref;
}

// Alternating run lengths, starting with a (possibly empty) run of zeros.
std::vector<std::uint32_t> encode_runs(const Labeling& mask) {
  std::vector<std::uint32_t> runs;
  std::uint8_t current = 0;
  std::uint32_t length = 0;
  for (std::uint8_t bit : mask) {
    const std::uint8_t b = bit ? 1 : 0;
    if (b != current) {
      runs.push_back(length);
      current = b;
      length = 0;
    }
    ++length;
  }
  runs.push_back(length);
  return runs;
}

class PayloadReader {
 public:
  explicit PayloadReader(std::string_view payload) : payload_(payload) {}

  std::string_view at(std::uint64_t offset, std::uint64_t bytes) const {
    if (offset > payload_.size() || bytes > payload_.size() - offset) {
      fail(ErrorKind::kValidation, "table index points outside the payload");
    }
    return payload_.substr(offset, bytes);
  }

  std::vector<double> doubles(std::uint64_t offset, std::uint64_t count) const {
    const std::string_view raw = at(offset, count * 8);
    std::vector<double> out(count);
    for (std::uint64_t i = 0; i < count; ++i) out[i] = std::bit_cast<double>(get_u64(raw, i * 8));
    return out;
  }

  GaussianMixture mixture(const json& ref) const {
    const std::uint64_t k = ref.at("k").get<std::uint64_t>();
    const std::uint64_t dim = ref.at("dim").get<std::uint64_t>();
    const std::vector<double> flat = doubles(ref.at("offset").get<std::uint64_t>(), k + 2 * k * dim);
    GaussianMixture g;
    g.weights.assign(flat.begin(), flat.begin() + static_cast<std::ptrdiff_t>(k));
    for (std::uint64_t c = 0; c < k; ++c) {
      auto begin = flat.begin() + static_cast<std::ptrdiff_t>(k + c * dim);
      g.means.emplace_back(begin, begin + static_cast<std::ptrdiff_t>(dim));
    }
    for (std::uint64_t c = 0; c < k; ++c) {
      auto begin = flat.begin() + static_cast<std::ptrdiff_t>(k + k * dim + c * dim);
      g.variances.emplace_back(begin, begin + static_cast<std::ptrdiff_t>(dim));
    }
    return g;
  }

  Labeling mask(const json& ref) const {
    const std::uint64_t nodes = ref.at("nodes").get<std::uint64_t>();
    const std::uint64_t runs = ref.at("runs").get<std::uint64_t>();
    const std::string_view raw = at(ref.at("offset").get<std::uint64_t>(), runs * 4);
    Labeling out;
    out.reserve(nodes);
    for (std::uint64_t r = 0; r < runs; ++r) {
      const std::uint32_t len = get_u32(raw, r * 4);
      if (out.size() + len > nodes) fail(ErrorKind::kValidation, "mask runs exceed node count");
      out.insert(out.end(), len, static_cast<std::uint8_t>(r % 2));
    }
    if (out.size() != nodes) fail(ErrorKind::kValidation, "mask runs do not cover node count");
    return out;
  }

 private:
  std::string_view payload_;
};

constexpr std::size_t kHeaderBytes = sizeof(kTableMagic) + 4;

}  // namespace

std::string serialize_table(const SegmentPhraseTable& table) {
  std::string payload;
  json index;
  index["max_exemplars"] = table.max_exemplars();
  index["entries"] = json::array();
  for (const auto& [key, entry] : table.entries()) {
    json e;
    e["phrase"] = key.phrase();
    e["component_id"] = key.component_id();
    e["version"] = entry.version;
    e["instance_count"] = entry.model.instance_count;
    e["lambda_offset"] = payload.size();
    put_f64(payload, entry.model.lambda);
    e["fg"] = write_mixture(payload, entry.model.theta_fg);
    e["bg"] = write_mixture(payload, entry.model.theta_bg);
    index["entries"].push_back(std::move(e));
  }
  index["exemplars"] = json::array();
  for (const auto& [phrase, records] : table.all_exemplars()) {
    json list = json::array();
    for (const auto& r : records) {
      json rec;
      rec["image_id"] = r.image_id;
      rec["sidecar"] = r.sidecar;
      rec["score_offset"] = payload.size();
      put_f64(payload, r.score);
      const auto runs = encode_runs(r.mask);
      rec["mask"] = {{"nodes", r.mask.size()}, {"runs", runs.size()}, {"offset", payload.size()}};
      for (std::uint32_t run : runs) put_u32(payload, run);
      rec["descriptor"] = {{"dim", r.descriptor.size()}, {"offset", payload.size()}};
      for (double v : r.descriptor) put_f64(payload, v);
      list.push_back(std::move(rec));
    }
    index["exemplars"].push_back({{"phrase", phrase}, {"records", std::move(list)}});
  }

  const std::string index_text = index.dump();
  std::string out(kTableMagic, sizeof(kTableMagic));
  put_u32(out, kTableFormatVersion);
  put_u64(out, index_text.size());
  out += index_text;
  put_u64(out, payload.size());
  out += payload;
  put_u32(out, crc_of(out));
  return out;
}

SegmentPhraseTable deserialize_table(std::string_view bytes) {
  if (bytes.size() < sizeof(kTableMagic)) fail(ErrorKind::kTruncation, "table file truncated in header");
  if (std::memcmp(bytes.data(), kTableMagic, sizeof(kTableMagic)) != 0) {
    fail(ErrorKind::kVersionMismatch, "not a segment-phrase table (bad magic)");
  }
  if (bytes.size() < kHeaderBytes) fail(ErrorKind::kTruncation, "table file truncated in header");
  const std::uint32_t version = get_u32(bytes, sizeof(kTableMagic));
  if (version != kTableFormatVersion) {
    fail(ErrorKind::kVersionMismatch, "unsupported table format version " + std::to_string(version));
  }
  std::size_t pos = kHeaderBytes;
  if (bytes.size() < pos + 8) fail(ErrorKind::kTruncation, "table file truncated before index");
  const std::uint64_t index_len = get_u64(bytes, pos);
  pos += 8;
  if (index_len > bytes.size() - pos) fail(ErrorKind::kTruncation, "table file truncated in index");
  const std::string_view index_text = bytes.substr(pos, index_len);
  pos += index_len;
  if (bytes.size() < pos + 8) fail(ErrorKind::kTruncation, "table file truncated before payload");
  const std::uint64_t payload_len = get_u64(bytes, pos);
  pos += 8;
  if (payload_len > bytes.size() - pos || bytes.size() - pos - payload_len < 4) {
    fail(ErrorKind::kTruncation, "table file truncated in payload");
  }
  const std::string_view payload = bytes.substr(pos, payload_len);
  pos += payload_len;
  if (bytes.size() != pos + 4) fail(ErrorKind::kValidation, "trailing bytes after table checksum");
  if (get_u32(bytes, pos) != crc_of(bytes.substr(0, pos))) {
    fail(ErrorKind::kChecksumFailure, "table checksum mismatch");
  }

  try {
    const json index = json::parse(index_text);
    const PayloadReader reader(payload);
    SegmentPhraseTable table(index.at("max_exemplars").get<int>());
    // Replaying inserts rebuilds the map; repeated inserts restore versions.
    for (const auto& e : index.at("entries")) {
      SegmentationModel model;
      model.lambda = reader.doubles(e.at("lambda_offset").get<std::uint64_t>(), 1)[0];
      model.theta_fg = reader.mixture(e.at("fg"));
      model.theta_bg = reader.mixture(e.at("bg"));
      model.instance_count = e.at("instance_count").get<int>();
      const PhraseKey key(e.at("phrase").get<std::string>(), e.at("component_id").get<int>());
      const std::uint32_t entry_version = e.at("version").get<std::uint32_t>();
      table.insert(key, std::move(model));
      for (std::uint32_t v = 1; v < entry_version; ++v) table.insert(key, table.find(key)->model);
    }
    for (const auto& group : index.at("exemplars")) {
      const std::string phrase = group.at("phrase").get<std::string>();
      for (const auto& rec : group.at("records")) {
        ExemplarRecord r;
        r.image_id = rec.at("image_id").get<std::string>();
        r.sidecar = rec.at("sidecar").get<std::string>();
        r.score = reader.doubles(rec.at("score_offset").get<std::uint64_t>(), 1)[0];
        r.mask = reader.mask(rec.at("mask"));
        const json& d = rec.at("descriptor");
        r.descriptor = reader.doubles(d.at("offset").get<std::uint64_t>(), d.at("dim").get<std::uint64_t>());
        table.add_exemplar(phrase, std::move(r));
      }
    }
    return table;
  } catch (const json::exception& e) {
    fail(ErrorKind::kValidation, std::string("corrupt table index: ") + e.what());
  }
}

void save_table(const SegmentPhraseTable& table, const std::filesystem::path& path) {
  const std::string bytes = serialize_table(table);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::kIo, "failed writing " + path.string());
}

SegmentPhraseTable load_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path.string());
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return deserialize_table(bytes);
}

}  // namespace segphrase
