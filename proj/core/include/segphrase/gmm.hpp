#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace segphrase {

// Diagonal-covariance Gaussian mixture. Immutable once fitted; density
// evaluation is pure.
struct GaussianMixture {
  std::vector<double> weights;                 // k, sums to 1
  std::vector<std::vector<double>> means;      // k x D
  std::vector<std::vector<double>> variances;  // k x D, each >= variance floor

  int components() const { return static_cast<int>(weights.size()); }
  int dimension() const { return means.empty() ? 0 : static_cast<int>(means.front().size()); }
  bool operator==(const GaussianMixture&) const = default;
};

struct GmmOptions {
  int max_iterations = 100;
  double relative_tolerance = 1e-6;
  double variance_floor = 1e-4;
};

using Samples = std::vector<std::vector<double>>;

struct GmmFit {
  GaussianMixture mixture;
  // Total log-likelihood before the first EM step and after each one.
  std::vector<double> log_likelihood;
};

// k-means++ seeding (deterministic in `seed`) followed by EM.
GmmFit fit_with_trace(const Samples& samples, int k, std::uint64_t seed,
                      const GmmOptions& options = {});
GaussianMixture fit(const Samples& samples, int k, std::uint64_t seed,
                    const GmmOptions& options = {});

// EM warm-started from an existing mixture. The returned likelihood on
// `samples` is never lower than that of `start`.
GmmFit refine(const GaussianMixture& start, const Samples& samples, const GmmOptions& options = {});

double log_density(const GaussianMixture& g, std::span<const double> f);
double total_log_likelihood(const GaussianMixture& g, const Samples& samples);

}  // namespace segphrase
