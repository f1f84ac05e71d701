#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace segphrase {

struct Config {
  double lambda = 0.05;         // pairwise scale inside exp(-lambda * boundary)
  int gmm_k = 5;
  int em_max_iters = 10;
  int superpixel_target = 200;
  int k_exemplars = 10;
  double ilp_lambda = 0.1;
  double nms_iou = 0.5;
  double paraphrase_tau = 0.1;
  double seed_shrink = 0.6;
  double detection_threshold = 0.0;
  double fuse_pairwise_scale = 1.0;  // multiplies the boundary term when fusing masks
  std::uint64_t seed = 0;
  int jobs = 1;

  bool operator==(const Config&) const = default;
};

// key=value lines; '#' starts a comment. Unknown keys and out-of-range
// values throw kInvalidArgument.
Config parse_config(std::string_view text, Config base = {});
Config load_config(const std::filesystem::path& path, Config base = {});
std::string to_string(const Config& config);
void validate(const Config& config);

}  // namespace segphrase
