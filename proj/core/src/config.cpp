#include "segphrase/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include "segphrase/error.hpp"

namespace segphrase {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    fail(ErrorKind::kInvalidArgument, "config key '" + key + "' has invalid value '" + value + "'");
  }
  return out;
}

}  // namespace

void validate(const Config& c) {
  auto require = [](bool ok, const char* what) {
    if (!ok) fail(ErrorKind::kInvalidArgument, std::string("config: ") + what);
  };
  require(c.lambda > 0.0 && std::isfinite(c.lambda), "lambda must be positive");
  require(c.gmm_k >= 1, "gmm_k must be positive");
  require(c.em_max_iters >= 0, "em_max_iters must be non-negative");
  require(c.superpixel_target >= 1, "superpixel_target must be positive");
  require(c.k_exemplars >= 1, "k_exemplars must be positive");
  require(c.ilp_lambda >= 0.0 && std::isfinite(c.ilp_lambda), "ilp_lambda must be non-negative");
  require(c.nms_iou > 0.0 && c.nms_iou <= 1.0, "nms_iou must lie in (0, 1]");
  require(c.paraphrase_tau > 0.0 && std::isfinite(c.paraphrase_tau), "paraphrase_tau must be positive");
  require(c.seed_shrink > 0.0 && c.seed_shrink <= 1.0, "seed_shrink must lie in (0, 1]");
  require(std::isfinite(c.detection_threshold), "detection_threshold must be finite");
  require(c.fuse_pairwise_scale >= 0.0 && std::isfinite(c.fuse_pairwise_scale),
          "fuse_pairwise_scale must be non-negative");
  require(c.jobs >= 1, "jobs must be positive");
}

Config parse_config(std::string_view text, Config c) {
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) fail(ErrorKind::kInvalidArgument, "config line without '=': " + body);
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key == "lambda") c.lambda = parse_number<double>(key, value);
    else if (key == "gmm_k") c.gmm_k = parse_number<int>(key, value);
    else if (key == "em_max_iters") c.em_max_iters = parse_number<int>(key, value);
    else if (key == "superpixel_target") c.superpixel_target = parse_number<int>(key, value);
    else if (key == "k_exemplars") c.k_exemplars = parse_number<int>(key, value);
    else if (key == "ilp_lambda") c.ilp_lambda = parse_number<double>(key, value);
    else if (key == "nms_iou") c.nms_iou = parse_number<double>(key, value);
    else if (key == "paraphrase_tau") c.paraphrase_tau = parse_number<double>(key, value);
    else if (key == "seed_shrink") c.seed_shrink = parse_number<double>(key, value);
    else if (key == "detection_threshold") c.detection_threshold = parse_number<double>(key, value);
    else if (key == "fuse_pairwise_scale") c.fuse_pairwise_scale = parse_number<double>(key, value);
    else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "jobs") c.jobs = parse_number<int>(key, value);
    else fail(ErrorKind::kInvalidArgument, "unknown config key '" + key + "'");
  }
  validate(c);
  return c;
}

Config load_config(const std::filesystem::path& path, Config base) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot open config " + path.string());
  return parse_config(std::string{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()}, base);
}

std::string to_string(const Config& c) {
  std::ostringstream out;
  out.precision(std::numeric_limits<double>::max_digits10);
  out << "lambda=" << c.lambda << '\n'
      << "gmm_k=" << c.gmm_k << '\n'
      << "em_max_iters=" << c.em_max_iters << '\n'
      << "superpixel_target=" << c.superpixel_target << '\n'
      << "k_exemplars=" << c.k_exemplars << '\n'
      << "ilp_lambda=" << c.ilp_lambda << '\n'
      << "nms_iou=" << c.nms_iou << '\n'
      << "paraphrase_tau=" << c.paraphrase_tau << '\n'
      << "seed_shrink=" << c.seed_shrink << '\n'
      << "detection_threshold=" << c.detection_threshold << '\n'
      << "fuse_pairwise_scale=" << c.fuse_pairwise_scale << '\n'
      << "seed=" << c.seed << '\n'
      << "jobs=" << c.jobs << '\n';
  return out.str();
}

}  // namespace segphrase
