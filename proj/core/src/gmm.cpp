#include "segphrase/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "segphrase/error.hpp"

namespace segphrase {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;  // log(2*pi)

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double component_log_density(const GaussianMixture& g, int c, std::span<const double> f) {
  const auto& mu = g.means[c];
  const auto& var = g.variances[c];
  double acc = 0.0;
  for (std::size_t d = 0; d < f.size(); ++d) {
    const double diff = f[d] - mu[d];
    acc += kLogTwoPi + std::log(var[d]) + diff * diff / var[d];
  }
  return -0.5 * acc;
}

// log sum_c w_c N(f; c), plus the per-component posteriors when requested.
double mixture_log_density(const GaussianMixture& g, std::span<const double> f,
                           std::vector<double>* posterior) {
  const int k = g.components();
  std::vector<double> terms(k, -std::numeric_limits<double>::infinity());
  double peak = -std::numeric_limits<double>::infinity();
  for (int c = 0; c < k; ++c) {
    if (g.weights[c] <= 0.0) continue;
    terms[c] = std::log(g.weights[c]) + component_log_density(g, c, f);
    peak = std::max(peak, terms[c]);
  }
  double sum = 0.0;
  for (int c = 0; c < k; ++c) {
    if (g.weights[c] > 0.0) sum += std::exp(terms[c] - peak);
  }
  const double result = peak + std::log(sum);
  if (posterior) {
    posterior->assign(k, 0.0);
    for (int c = 0; c < k; ++c) {
      if (g.weights[c] > 0.0) (*posterior)[c] = std::exp(terms[c] - result);
    }
  }
  return result;
}

void check_samples(const Samples& samples) {
  if (samples.empty()) fail(ErrorKind::kTooFewSamples, "no samples to fit");
  const std::size_t dim = samples.front().size();
  if (dim == 0) fail(ErrorKind::kDimensionMismatch, "zero-dimensional samples");
  for (const auto& s : samples) {
    if (s.size() != dim) fail(ErrorKind::kDimensionMismatch, "samples have inconsistent dimension");
  }
}

// One EM step in place. Components that lose all responsibility keep their
// parameters with zero weight.
void em_step(GaussianMixture& g, const Samples& samples, double floor) {
  const int k = g.components();
  const std::size_t dim = static_cast<std::size_t>(g.dimension());
  std::vector<double> mass(k, 0.0);
  std::vector<std::vector<double>> sum(k, std::vector<double>(dim, 0.0));
  std::vector<std::vector<double>> sum_sq(k, std::vector<double>(dim, 0.0));
  std::vector<std::vector<double>> resp(samples.size());
  for (std::size_t s = 0; s < samples.size(); ++s) {
    mixture_log_density(g, samples[s], &resp[s]);
    for (int c = 0; c < k; ++c) {
      const double r = resp[s][c];
      if (r == 0.0) continue;
      mass[c] += r;
      for (std::size_t d = 0; d < dim; ++d) sum[c][d] += r * samples[s][d];
    }
  }
  for (int c = 0; c < k; ++c) {
    if (mass[c] <= 0.0) continue;
    for (std::size_t d = 0; d < dim; ++d) g.means[c][d] = sum[c][d] / mass[c];
  }
  // Second pass for centred second moments keeps variances accurate.
  for (std::size_t s = 0; s < samples.size(); ++s) {
    for (int c = 0; c < k; ++c) {
      const double r = resp[s][c];
      if (r == 0.0) continue;
      for (std::size_t d = 0; d < dim; ++d) {
        const double diff = samples[s][d] - g.means[c][d];
        sum_sq[c][d] += r * diff * diff;
      }
    }
  }
  const double total = static_cast<double>(samples.size());
  for (int c = 0; c < k; ++c) {
    g.weights[c] = mass[c] / total;
    if (mass[c] <= 0.0) continue;
    for (std::size_t d = 0; d < dim; ++d) {
      g.variances[c][d] = std::max(floor, sum_sq[c][d] / mass[c]);
    }
  }
}

GmmFit run_em(GaussianMixture g, const Samples& samples, const GmmOptions& options) {
  GmmFit result;
  double ll = total_log_likelihood(g, samples);
  result.log_likelihood.push_back(ll);
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    GaussianMixture next = g;
    em_step(next, samples, options.variance_floor);
    const double next_ll = total_log_likelihood(next, samples);
    // EM never lowers the likelihood; allow for summation rounding only.
    if (next_ll < ll - 1e-9 * std::max(1.0, std::abs(ll))) {
      fail(ErrorKind::kNumerical, "EM step decreased the log-likelihood");
    }
    if (next_ll < ll) {
      // Rounding-level regression: keep the better parameters and stop.
      break;
    }
    g = std::move(next);
    result.log_likelihood.push_back(next_ll);
    const double change = next_ll - ll;
    ll = next_ll;
    if (change <= options.relative_tolerance * std::max(1.0, std::abs(ll))) break;
  }
  result.mixture = std::move(g);
  return result;
}

}  // namespace

double log_density(const GaussianMixture& g, std::span<const double> f) {
  if (static_cast<int>(f.size()) != g.dimension()) {
    fail(ErrorKind::kDimensionMismatch, "feature dimension " + std::to_string(f.size()) +
                                            " does not match mixture dimension " +
                                            std::to_string(g.dimension()));
  }
  return mixture_log_density(g, f, nullptr);
}

double total_log_likelihood(const GaussianMixture& g, const Samples& samples) {
  double ll = 0.0;
  for (const auto& s : samples) ll += log_density(g, s);
  return ll;
}

GmmFit fit_with_trace(const Samples& samples, int k, std::uint64_t seed, const GmmOptions& options) {
  if (k < 1) fail(ErrorKind::kInvalidArgument, "component count must be positive");
  check_samples(samples);
  if (static_cast<int>(samples.size()) < k) {
    fail(ErrorKind::kTooFewSamples, "need at least " + std::to_string(k) + " samples, got " +
                                        std::to_string(samples.size()));
  }
  const std::size_t n = samples.size();
  const std::size_t dim = samples.front().size();

  // k-means++ seeding.
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> chosen;
  chosen.push_back(static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)) % n);
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  auto sq_dist = [&](std::size_t a, std::size_t b) {
    double d2 = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      const double diff = samples[a][d] - samples[b][d];
      d2 += diff * diff;
    }
    return d2;
  };
  while (static_cast<int>(chosen.size()) < k) {
    double total = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      nearest[s] = std::min(nearest[s], sq_dist(s, chosen.back()));
      total += nearest[s];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      const double target = uniform01(rng) * total;
      double acc = 0.0;
      pick = n - 1;
      for (std::size_t s = 0; s < n; ++s) {
        acc += nearest[s];
        if (acc > target && nearest[s] > 0.0) {
          pick = s;
          break;
        }
      }
    } else {
      // Every sample coincides with a chosen centre.
      pick = chosen.size() % n;
    }
    chosen.push_back(pick);
  }

  // Global per-dimension variance as the common starting spread.
  std::vector<double> mean(dim, 0.0), var(dim, 0.0);
  for (const auto& s : samples)
    for (std::size_t d = 0; d < dim; ++d) mean[d] += s[d];
  for (double& m : mean) m /= static_cast<double>(n);
  for (const auto& s : samples)
    for (std::size_t d = 0; d < dim; ++d) var[d] += (s[d] - mean[d]) * (s[d] - mean[d]);
  for (double& v : var) v = std::max(options.variance_floor, v / static_cast<double>(n));

  GaussianMixture g;
  g.weights.assign(k, 1.0 / k);
  for (std::size_t c : chosen) {
    g.means.push_back(samples[c]);
    g.variances.push_back(var);
  }
  return run_em(std::move(g), samples, options);
}

GaussianMixture fit(const Samples& samples, int k, std::uint64_t seed, const GmmOptions& options) {
  return fit_with_trace(samples, k, seed, options).mixture;
}

GmmFit refine(const GaussianMixture& start, const Samples& samples, const GmmOptions& options) {
  check_samples(samples);
  if (static_cast<int>(samples.front().size()) != start.dimension()) {
    fail(ErrorKind::kDimensionMismatch, "samples do not match mixture dimension");
  }
  return run_em(start, samples, options);
}

}  // namespace segphrase
